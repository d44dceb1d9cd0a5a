//! Finite-grid decision rule for "does this ratio converge to its target".

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::Inconsistent => "inconsistent",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    /// Wording for ratio trends: a ratio that runs away is "diverging".
    pub fn trend_label(self) -> &'static str {
        match self {
            Verdict::Inconsistent => "diverging",
            v => v.as_str(),
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ratio trace with the verdict the trend rule assigns to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub verdict: Verdict,
    pub ratio_trace: Vec<(f64, f64)>,
    pub target: f64,
    pub tolerance: f64,
}

pub const DEFAULT_TOLERANCE: f64 = 0.05;
/// Final deviation beyond which a monotone drift away counts as divergence.
pub const DIVERGENCE_GAP: f64 = 0.5;

/// Deviation of `ratio` from `target`: relative when the target is nonzero,
/// absolute otherwise.
pub fn deviation(ratio: f64, target: f64) -> f64 {
    if target == 0.0 {
        ratio.abs()
    } else {
        ((ratio - target) / target).abs()
    }
}

/// Indices of the top half of a grid of length `n` (the last `ceil(n/2)`).
pub fn top_half(n: usize) -> std::ops::Range<usize> {
    n - n.div_ceil(2)..n
}

/// Trend rule over the top half of the trace.
///
/// Consistent when the mean deviation is below `tolerance` and the last point
/// is the closest. Inconsistent when deviations never shrink along the top half
/// and the final one exceeds [`DIVERGENCE_GAP`]. Anything else is inconclusive.
pub fn classify(trace: &[(f64, f64)], target: f64, tolerance: f64) -> Verdict {
    if trace.is_empty() {
        return Verdict::Inconclusive;
    }
    let devs: Vec<f64> = trace[top_half(trace.len())]
        .iter()
        .map(|&(_, r)| deviation(r, target))
        .collect();
    if devs.iter().any(|d| !d.is_finite()) {
        return Verdict::Inconclusive;
    }
    let mean = devs.iter().sum::<f64>() / devs.len() as f64;
    let last = *devs.last().unwrap();
    let min = devs.iter().copied().fold(f64::INFINITY, f64::min);
    if mean < tolerance && last <= min {
        return Verdict::Consistent;
    }
    let nondecreasing = devs.windows(2).all(|w| w[1] >= w[0]);
    if nondecreasing && last > DIVERGENCE_GAP {
        return Verdict::Inconsistent;
    }
    Verdict::Inconclusive
}

/// Largest mean noise half-width (on the ratio scale) a consistent verdict tolerates.
pub const MAX_MEAN_NOISE: f64 = 0.1;

/// Trend rule for Monte Carlo ratios `(level, ratio, half_width)`: every
/// comparison between deviations is allowed the sampling noise of the rows
/// involved, and a verdict that the noise could overturn is inconclusive.
pub fn classify_noisy(rows: &[(f64, f64, f64)], target: f64, tolerance: f64) -> Verdict {
    if rows.len() < 2 {
        return Verdict::Inconclusive;
    }
    let top = &rows[top_half(rows.len())];
    let scale = if target == 0.0 { 1.0 } else { target.abs() };
    let devs: Vec<f64> = top.iter().map(|&(_, r, _)| deviation(r, target)).collect();
    let noise: Vec<f64> = top.iter().map(|&(_, _, h)| h / scale).collect();
    if devs.iter().chain(&noise).any(|d| !d.is_finite()) {
        return Verdict::Inconclusive;
    }
    let k = devs.len() as f64;
    let mean = devs.iter().sum::<f64>() / k;
    let mean_noise = noise.iter().sum::<f64>() / k;
    let last = *devs.last().unwrap();
    let last_noise = *noise.last().unwrap();
    let min = devs.iter().copied().fold(f64::INFINITY, f64::min);
    if mean < tolerance && last <= min + last_noise && mean_noise <= MAX_MEAN_NOISE {
        return Verdict::Consistent;
    }
    let nondecreasing = (1..devs.len()).all(|i| devs[i] >= devs[i - 1] - (noise[i] + noise[i - 1]));
    if nondecreasing && last > DIVERGENCE_GAP && last > 2.0 * last_noise {
        return Verdict::Inconsistent;
    }
    Verdict::Inconclusive
}

pub fn class_verdict(trace: Vec<(f64, f64)>, target: f64, tolerance: f64) -> ClassVerdict {
    ClassVerdict {
        verdict: classify(&trace, target, tolerance),
        ratio_trace: trace,
        target,
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(v: &[f64]) -> Vec<(f64, f64)> {
        v.iter().enumerate().map(|(i, &r)| (i as f64, r)).collect()
    }

    #[test]
    fn converging_is_consistent() {
        assert_eq!(classify(&tr(&[1.3, 1.15, 1.05, 1.01]), 1.0, 0.05), Verdict::Consistent);
    }

    #[test]
    fn growing_is_inconsistent() {
        assert_eq!(classify(&tr(&[1.2, 1.6, 2.3, 3.8]), 1.0, 0.05), Verdict::Inconsistent);
    }

    #[test]
    fn constant_offset_is_inconsistent() {
        let e = (-1.0f64).exp();
        assert_eq!(classify(&tr(&[e; 6]), 1.0, 0.05), Verdict::Inconsistent);
    }

    #[test]
    fn oscillating_is_inconclusive() {
        assert_eq!(classify(&tr(&[1.0, 1.3, 0.8, 1.2]), 1.0, 0.05), Verdict::Inconclusive);
    }

    fn noisy(v: &[f64], h: f64) -> Vec<(f64, f64, f64)> {
        v.iter().enumerate().map(|(i, &r)| (i as f64, r, h)).collect()
    }

    #[test]
    fn noisy_rule_on_tight_intervals() {
        assert_eq!(classify_noisy(&noisy(&[1.3, 1.15, 1.05, 1.01], 0.005), 1.0, 0.05), Verdict::Consistent);
        assert_eq!(classify_noisy(&noisy(&[1.2, 1.6, 2.3, 3.8], 0.005), 1.0, 0.05), Verdict::Inconsistent);
        assert_eq!(Verdict::Inconsistent.trend_label(), "diverging");
    }

    #[test]
    fn wide_intervals_are_inconclusive() {
        assert_eq!(classify_noisy(&noisy(&[1.3, 1.15, 1.05, 1.01], 0.4), 1.0, 0.05), Verdict::Inconclusive);
        assert_eq!(classify_noisy(&noisy(&[1.2, 1.6, 2.3, 3.8], 2.0), 1.0, 0.05), Verdict::Inconclusive);
    }

    #[test]
    fn noise_absorbs_a_late_wobble() {
        // Last point slightly worse than its neighbour but within noise.
        assert_eq!(classify_noisy(&noisy(&[1.2, 1.1, 1.02, 1.03], 0.02), 1.0, 0.05), Verdict::Consistent);
        assert_eq!(classify(&tr(&[1.2, 1.1, 1.02, 1.03]), 1.0, 0.05), Verdict::Inconclusive);
    }

    #[test]
    fn zero_target_uses_absolute_deviation() {
        assert_eq!(classify(&tr(&[0.5, 0.1, 0.01, 0.001]), 0.0, 0.05), Verdict::Consistent);
    }
}
