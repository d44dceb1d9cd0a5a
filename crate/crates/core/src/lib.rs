// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuous;
pub mod discrete;
pub mod error;
pub mod estimation;
pub mod levy;
pub mod modulation;
pub mod numeric;
pub mod rng;
pub mod sampler;
pub mod scenario;
pub mod tail_laws;
pub mod verdict;
pub mod verify;

pub use error::{Error, Result};
pub use continuous::{CtsSpec, LevyTriple, Sojourn};
pub use estimation::{RatioReport, TailReport};
pub use levy::LevyMeasure;
pub use modulation::{Modulated, Modulator, WalkSpec};
pub use scenario::{Scenario, Summary};
pub use sampler::{SupSample, SupremumSampler, TruncationRule};
pub use tail_laws::TailLaw;
pub use verdict::{ClassVerdict, Verdict};
pub use verify::{CriterionResult, Outcome, VerifyOptions};
