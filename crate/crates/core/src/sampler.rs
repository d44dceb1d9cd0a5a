//! Common interface of the supremum samplers.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::Stream;

/// One draw of the (truncated) all-time supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupSample {
    pub value: f64,
    /// Step count (discrete) or time (continuous) at which the path was cut.
    pub stopped_at: f64,
}

pub trait SupremumSampler: Sync {
    fn sample(&self, rng: &mut Stream) -> Result<SupSample>;
    /// First-order bound on the probability that truncation changed a draw.
    fn bias_bound(&self) -> f64;
}

impl<F> SupremumSampler for F
where
    F: Fn(&mut Stream) -> Result<SupSample> + Sync,
{
    fn sample(&self, rng: &mut Stream) -> Result<SupSample> {
        self(rng)
    }
    fn bias_bound(&self) -> f64 {
        0.0
    }
}

/// Stopping rule shared by the discrete and continuous samplers: stop at the
/// first `n >= min_steps` with `S_n <= M_n - level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationRule {
    pub level: f64,
    pub min_steps: f64,
    pub safety: f64,
    /// Hard cap on steps (discrete) or time (continuous).
    pub cap: f64,
    /// Accelerated simulation once the walk is this far below its maximum.
    /// `None` keeps every step exact.
    pub skip: Option<SkipParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkipParams {
    pub entry_depth: f64,
    /// Increments above `cap_ratio * depth` are kept exact.
    pub cap_ratio: f64,
}

impl Default for SkipParams {
    fn default() -> Self {
        SkipParams {
            entry_depth: 100.0,
            cap_ratio: 0.2,
        }
    }
}

pub const DEFAULT_CAP: f64 = 1e13;
pub const DEFAULT_SAFETY: f64 = 2.0;
/// Remainder mass allowed beyond `level`, as a fraction of the smallest
/// target probability.
pub const DEFAULT_TARGET_FRACTION: f64 = 0.01;

impl TruncationRule {
    pub fn new(level: f64, min_steps: f64) -> Self {
        TruncationRule {
            level,
            min_steps,
            safety: DEFAULT_SAFETY,
            cap: DEFAULT_CAP,
            skip: Some(SkipParams::default()),
        }
    }

    pub fn exact(mut self) -> Self {
        self.skip = None;
        self
    }
}

/// Smallest `L > 0` (to 0.1%) with `coef * int_tail(L) < target`.
pub fn level_for<F: Fn(f64) -> f64>(coef: f64, int_tail: F, target: f64) -> f64 {
    let ok = |l: f64| coef * int_tail(l) < target;
    if ok(1.0) {
        let mut lo = 1.0;
        while lo > 1e-6 && ok(lo / 2.0) {
            lo /= 2.0;
        }
        return lo;
    }
    let mut hi = 2.0;
    while !ok(hi) && hi < 1e300 {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_meets_target() {
        let it = |l: f64| 1.0 / (1.0 + l);
        let l = level_for(2.0, it, 1e-5);
        assert!(2.0 * it(l) < 1e-5);
        assert!(2.0 * it(l * 0.99) >= 1e-5);
        assert!(level_for(1.0, |l: f64| (-l).exp(), 0.5) <= 1.0);
    }
}
