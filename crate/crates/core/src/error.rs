use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mean is infinite for this parameterization: {0}")]
    MeanInfinite(String),

    #[error("probability {0} outside [0, 1)")]
    InvalidProbability(f64),

    #[error("tail underflows at level {0}")]
    UnderflowAtLevel(f64),

    #[error("convolution error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e} at level {level}")]
    DiscretizationTooCoarse {
        level: f64,
        estimate: f64,
        tolerance: f64,
    },

    #[error("level must be strictly positive, got {0}")]
    NonPositiveLevel(f64),

    #[error("small-jump threshold must be strictly positive, got {0}")]
    NonPositiveThreshold(f64),

    #[error("grid step {grid_dt} exceeds the stability bound {bound}")]
    GridTooCoarse { grid_dt: f64, bound: f64 },

    #[error("transition matrix is not irreducible: {0}")]
    NotIrreducible(String),

    #[error("cycle length reached the safety cap of {0} steps")]
    CycleLengthCap(u64),

    #[error("drift constant a = {0} must be finite and strictly positive")]
    NonNegativeDrift(f64),

    #[error("kappa trace has not stabilized: last change {0:.3e}")]
    GridTooShort(f64),

    #[error("modulator has period {0}; this evaluation requires an aperiodic modulator")]
    PeriodicModulator(u64),

    #[error("no finite truncation level y* satisfies the constraints")]
    NoFiniteYstar,

    #[error("increment law {index} violates the uniform-bound hypotheses: {reason}")]
    HypothesisViolated { index: usize, reason: String },

    #[error("step cap of {0} exceeded before the truncation rule fired")]
    StepCapExceeded(u64),

    #[error("time horizon cap {0} exceeded before the truncation rule fired")]
    HorizonCapExceeded(f64),

    #[error("epsilon {epsilon} must lie in (0, alpha/2) = (0, {half_alpha})")]
    EpsilonOutOfRange { epsilon: f64, half_alpha: f64 },

    #[error("parameter inequality violated: {0}")]
    ParameterInequalityViolated(String),

    #[error("invalid configuration at `{field}`: {reason}")]
    ConfigInvalid { field: String, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
