//! Jump-intensity measures on the real line, stored as a positive and a
//! negative half. Each half is described by its tail `T(y)`, the mass of
//! `{|z| > y}` on that side.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::numeric;
use crate::tail_laws::{open_unit, TailLaw};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SideMeasure {
    Zero,
    /// `mass * min(1, (y/scale)^-alpha)`: finite mass, all of it above `scale`.
    Pareto { alpha: f64, scale: f64, mass: f64 },
    /// `mass * y^-alpha` with `alpha ∈ (1, 2)`: infinitely many small jumps.
    PowerLaw { alpha: f64, mass: f64 },
    /// `mass * exp(-(y/scale)^shape)`.
    Weibull { shape: f64, scale: f64, mass: f64 },
    /// `rate * P(X > y)`: the positive jumps of a compound Poisson process.
    Scaled { rate: f64, law: TailLaw },
    /// `rate * P(X <= -y)`: the negative jumps of a compound Poisson process.
    LawLeft { rate: f64, law: TailLaw },
    /// Mass of `base` on `lo < |y| <= hi`.
    Restricted { base: Box<SideMeasure>, lo: f64, hi: f64 },
}

impl SideMeasure {
    fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be finite and > 0, got {v}")))
            }
        };
        match self {
            SideMeasure::Zero => Ok(()),
            SideMeasure::Pareto { alpha, scale, mass } => {
                pos("scale", *scale)?;
                pos("mass", *mass)?;
                if !(*alpha > 1.0 && alpha.is_finite()) {
                    return Err(Error::MeanInfinite(format!("jump tail exponent {alpha} must exceed 1")));
                }
                Ok(())
            }
            SideMeasure::PowerLaw { alpha, mass } => {
                pos("mass", *mass)?;
                if !(*alpha > 1.0 && *alpha < 2.0) {
                    return Err(Error::param("alpha", "power-law intensity needs alpha in (1, 2)"));
                }
                Ok(())
            }
            SideMeasure::Weibull { shape, scale, mass } => {
                pos("shape", *shape)?;
                pos("scale", *scale)?;
                pos("mass", *mass)
            }
            SideMeasure::Scaled { rate, .. } | SideMeasure::LawLeft { rate, .. } => pos("rate", *rate),
            SideMeasure::Restricted { base, lo, hi } => {
                if !(*lo >= 0.0 && hi > lo) {
                    return Err(Error::param("hi", "restriction needs 0 <= lo < hi"));
                }
                base.validate()
            }
        }
    }

    /// Mass of `{|z| > y}` on this side, for `y >= 0`.
    pub fn tail(&self, y: f64) -> f64 {
        match self {
            SideMeasure::Zero => 0.0,
            SideMeasure::Pareto { alpha, scale, mass } => {
                if y <= *scale {
                    *mass
                } else {
                    mass * (y / scale).powf(-alpha)
                }
            }
            SideMeasure::PowerLaw { alpha, mass } => {
                if y <= 0.0 {
                    f64::INFINITY
                } else {
                    mass * y.powf(-alpha)
                }
            }
            SideMeasure::Weibull { shape, scale, mass } => mass * (-(y / scale).powf(*shape)).exp(),
            SideMeasure::Scaled { rate, law } => rate * law.tail(y),
            SideMeasure::LawLeft { rate, law } => rate * law.cdf(-y),
            SideMeasure::Restricted { base, lo, hi } => {
                if y >= *hi {
                    0.0
                } else {
                    (base.tail(y.max(*lo)) - base.tail(*hi)).max(0.0)
                }
            }
        }
    }

    /// Total mass, possibly infinite.
    pub fn total(&self) -> f64 {
        match self {
            SideMeasure::Scaled { rate, law } => rate * law.tail(0.0),
            _ => self.tail(0.0),
        }
    }

    /// `∫_y^∞ T(z) dz` for `y > 0`.
    pub fn excess(&self, y: f64) -> f64 {
        match self {
            SideMeasure::Zero => 0.0,
            SideMeasure::Pareto { alpha, scale, mass } => {
                let beyond = |t: f64| mass * scale / (alpha - 1.0) * (t / scale).powf(1.0 - alpha);
                if y >= *scale {
                    beyond(y)
                } else {
                    mass * (scale - y) + beyond(*scale)
                }
            }
            SideMeasure::PowerLaw { alpha, mass } => mass * y.powf(1.0 - alpha) / (alpha - 1.0),
            SideMeasure::Weibull { shape, scale, mass } => {
                mass * TailLaw::Weibull {
                    shape: *shape,
                    scale: *scale,
                }
                .excess(y)
            }
            SideMeasure::Scaled { rate, law } => rate * law.excess(y),
            SideMeasure::LawLeft { rate, law } => rate * law.shortfall(-y),
            SideMeasure::Restricted { base, lo, hi } => {
                if y >= *hi {
                    return 0.0;
                }
                let t_hi = base.tail(*hi);
                let start = y.max(*lo);
                let flat = (start - y) * (base.tail(*lo) - t_hi);
                let upper = if hi.is_finite() {
                    base.excess(start) - base.excess(*hi) - (hi - start) * t_hi
                } else {
                    base.excess(start)
                };
                flat + upper.max(0.0)
            }
        }
    }

    /// Points where `T` has a kink or jump; quadrature breakpoints.
    fn breaks(&self) -> Vec<f64> {
        match self {
            SideMeasure::Pareto { scale, .. } => vec![*scale],
            SideMeasure::Scaled { law, .. } => law.atoms().map(|a| a.iter().map(|p| p.0).collect()).unwrap_or_default(),
            SideMeasure::LawLeft { law, .. } => law.atoms().map(|a| a.iter().map(|p| -p.0).collect()).unwrap_or_default(),
            SideMeasure::Restricted { base, lo, hi } => {
                let mut b = base.breaks();
                b.push(*lo);
                if hi.is_finite() {
                    b.push(*hi);
                }
                b
            }
            _ => vec![],
        }
    }

    /// `∫_{(0, d]} z^2 ν(dz) = ∫_0^d 2z (T(z) - T(d)) dz`.
    pub fn second_moment_below(&self, d: f64) -> f64 {
        if d <= 0.0 {
            return 0.0;
        }
        match self {
            SideMeasure::Zero => 0.0,
            SideMeasure::PowerLaw { alpha, mass } => mass * alpha / (2.0 - alpha) * d.powf(2.0 - alpha),
            SideMeasure::Pareto { scale, .. } if d <= *scale => 0.0,
            SideMeasure::Pareto { alpha, scale, mass } => {
                // Density mass α s^α z^{-α-1} on z > s.
                let (a, s) = (*alpha, *scale);
                if (a - 2.0).abs() < 1e-12 {
                    mass * 2.0 * s * s * (d / s).ln()
                } else {
                    mass * a * s.powf(a) * (d.powf(2.0 - a) - s.powf(2.0 - a)) / (2.0 - a)
                }
            }
            SideMeasure::Weibull { shape, scale, mass } => {
                // ∫_0^d z^2 f(z) dz with the Weibull density, via the lower incomplete gamma.
                let k = 2.0 / shape + 1.0;
                let x = (d / scale).powf(*shape);
                mass * scale * scale * statrs::function::gamma::gamma(k) * gamma_lr(k, x)
            }
            _ => {
                let td = self.tail(d);
                let mut br = self.breaks();
                br.retain(|&b| b > 0.0 && b < d);
                numeric::integrate_with(|z| 2.0 * z * (self.tail(z) - td), 0.0, d, &br, 1e-11, 1e-300).value
            }
        }
    }

    /// `∫_{|z| > d} |z| ν(dz) = d T(d) + ∫_d^∞ T`.
    pub fn first_moment_above(&self, d: f64) -> f64 {
        let t = self.tail(d);
        if t == 0.0 {
            return self.excess(d);
        }
        d * t + self.excess(d)
    }

    /// `∫ (1 ∧ z^2) ν(dz) = ∫_0^1 2z T(z) dz` on this side.
    pub fn gamma_part(&self) -> f64 {
        self.second_moment_below(1.0) + self.tail(1.0)
    }

    /// `sup{y : T(y) >= v}` for `0 < v <= T(0+)`.
    pub fn inv_tail(&self, v: f64) -> f64 {
        match self {
            SideMeasure::Zero => 0.0,
            SideMeasure::Pareto { alpha, scale, mass } => scale * (v.min(*mass) / mass).powf(-1.0 / alpha),
            SideMeasure::PowerLaw { alpha, mass } => (v / mass).powf(-1.0 / alpha),
            SideMeasure::Weibull { shape, scale, mass } => scale * (-(v / mass).min(1.0).ln()).powf(1.0 / shape),
            SideMeasure::Scaled { rate, law } => law.upper_quantile((v / rate).min(1.0)).max(0.0),
            SideMeasure::LawLeft { rate, law } => (-law.lower_quantile((v / rate).min(1.0))).max(0.0),
            SideMeasure::Restricted { base, lo, hi } => {
                let y = base.inv_tail(v + base.tail(*hi));
                y.clamp(*lo, *hi)
            }
        }
    }

    /// One jump size from this side restricted to `{|z| > d}`.
    pub fn sample_beyond<R: Rng + ?Sized>(&self, d: f64, rng: &mut R) -> f64 {
        let v = open_unit(rng) * self.tail(d);
        self.inv_tail(v)
    }
}

/// Jump-intensity measure `ν` with positive and negative halves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct LevyMeasure {
    pub pos: SideMeasure,
    pub neg: SideMeasure,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum MeasureRepr {
    Zero,
    ParetoTail {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        mass: f64,
    },
    WeibullTail {
        shape: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        mass: f64,
    },
    CompoundPoisson {
        rate: f64,
        law: TailLaw,
    },
    TwoSided {
        pos: SideMeasure,
        neg: SideMeasure,
    },
}

fn one() -> f64 {
    1.0
}

impl TryFrom<MeasureRepr> for LevyMeasure {
    type Error = Error;
    fn try_from(r: MeasureRepr) -> Result<Self> {
        match r {
            MeasureRepr::Zero => Ok(LevyMeasure::zero()),
            MeasureRepr::ParetoTail { alpha, scale, mass } => LevyMeasure::pareto_tail(alpha, scale, mass),
            MeasureRepr::WeibullTail { shape, scale, mass } => {
                LevyMeasure::two_sided(SideMeasure::Weibull { shape, scale, mass }, SideMeasure::Zero)
            }
            MeasureRepr::CompoundPoisson { rate, law } => LevyMeasure::compound_poisson(rate, law),
            MeasureRepr::TwoSided { pos, neg } => LevyMeasure::two_sided(pos, neg),
        }
    }
}

impl From<LevyMeasure> for MeasureRepr {
    fn from(m: LevyMeasure) -> Self {
        match (m.pos, m.neg) {
            (SideMeasure::Zero, SideMeasure::Zero) => MeasureRepr::Zero,
            (SideMeasure::Pareto { alpha, scale, mass }, SideMeasure::Zero) => {
                MeasureRepr::ParetoTail { alpha, scale, mass }
            }
            (SideMeasure::Weibull { shape, scale, mass }, SideMeasure::Zero) => {
                MeasureRepr::WeibullTail { shape, scale, mass }
            }
            (SideMeasure::Scaled { rate, law }, SideMeasure::LawLeft { rate: r2, law: l2 })
                if rate == r2 && law == l2 =>
            {
                MeasureRepr::CompoundPoisson { rate, law }
            }
            (pos, neg) => MeasureRepr::TwoSided { pos, neg },
        }
    }
}

impl LevyMeasure {
    pub fn zero() -> Self {
        LevyMeasure {
            pos: SideMeasure::Zero,
            neg: SideMeasure::Zero,
        }
    }

    /// `ν̄(y) = mass * min(1, (y/scale)^-alpha)`, no negative jumps.
    pub fn pareto_tail(alpha: f64, scale: f64, mass: f64) -> Result<Self> {
        Self::two_sided(SideMeasure::Pareto { alpha, scale, mass }, SideMeasure::Zero)
    }

    pub fn compound_poisson(rate: f64, law: TailLaw) -> Result<Self> {
        let atom_at_zero = law
            .atoms()
            .map(|a| a.iter().any(|&(p, w)| p == 0.0 && w > 0.0))
            .unwrap_or(false);
        if atom_at_zero {
            return Err(Error::param("law", "jump law must not charge 0"));
        }
        Self::two_sided(
            SideMeasure::Scaled { rate, law: law.clone() },
            SideMeasure::LawLeft { rate, law },
        )
    }

    pub fn two_sided(pos: SideMeasure, neg: SideMeasure) -> Result<Self> {
        pos.validate()?;
        neg.validate()?;
        let m = LevyMeasure { pos, neg };
        for side in [&m.pos, &m.neg] {
            let g = side.gamma_part();
            let big = side.excess(1.0);
            if !(g.is_finite() && big.is_finite()) {
                return Err(Error::param("measure", "∫ (y^2 ∧ |y|) ν(dy) must be finite"));
            }
        }
        Ok(m)
    }

    /// `ν((y, ∞))`.
    pub fn nu_tail(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::NonPositiveLevel(y));
        }
        Ok(self.pos.tail(y))
    }

    /// `∫_y^∞ ν((z, ∞)) dz`.
    pub fn nu_int_tail(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::NonPositiveLevel(y));
        }
        Ok(self.pos.excess(y))
    }

    /// `∫ (1 ∧ y^2) ν(dy)`.
    pub fn gamma_bound(&self) -> f64 {
        self.pos.gamma_part() + self.neg.gamma_part()
    }

    /// `∫_β^∞ ν((-∞, -z]) dz`, the correction in the truncated drift.
    pub fn neg_shortfall(&self, beta: f64) -> f64 {
        self.neg.excess(beta)
    }

    pub fn is_finite_activity(&self) -> bool {
        self.pos.total().is_finite() && self.neg.total().is_finite()
    }

    /// Restriction to `(ystar, ∞)` and its complement.
    pub fn split_at(&self, ystar: f64) -> Result<(LevyMeasure, LevyMeasure)> {
        if !(ystar > 0.0) {
            return Err(Error::NonPositiveLevel(ystar));
        }
        let upper = LevyMeasure {
            pos: SideMeasure::Restricted {
                base: Box::new(self.pos.clone()),
                lo: ystar,
                hi: f64::INFINITY,
            },
            neg: SideMeasure::Zero,
        };
        let lower = LevyMeasure {
            pos: SideMeasure::Restricted {
                base: Box::new(self.pos.clone()),
                lo: 0.0,
                hi: ystar,
            },
            neg: self.neg.clone(),
        };
        Ok((upper, lower))
    }

    /// Rate of jumps with `|y| > d`.
    pub fn rate_beyond(&self, d: f64) -> f64 {
        self.pos.tail(d) + self.neg.tail(d)
    }

    /// `(∫_{|y|<=d} y^2 ν(dy), ∫_{|y|>d} y ν(dy))`.
    pub fn small_jump_stats(&self, threshold: f64) -> Result<(f64, f64)> {
        if !(threshold > 0.0) {
            return Err(Error::NonPositiveThreshold(threshold));
        }
        Ok(self.small_jump_stats_unchecked(threshold))
    }

    pub(crate) fn small_jump_stats_unchecked(&self, d: f64) -> (f64, f64) {
        let var = self.pos.second_moment_below(d) + self.neg.second_moment_below(d);
        let comp = self.pos.first_moment_above(d) - self.neg.first_moment_above(d);
        (var, comp)
    }

    /// One jump with `|y| > d`, signed.
    pub fn sample_jump_beyond<R: Rng + ?Sized>(&self, d: f64, rng: &mut R) -> f64 {
        let (p, n) = (self.pos.tail(d), self.neg.tail(d));
        if rng.random::<f64>() * (p + n) < p {
            self.pos.sample_beyond(d, rng)
        } else {
            -self.neg.sample_beyond(d, rng)
        }
    }

    /// Poisson jumps with `|y| > threshold` on `[0, horizon)`, sorted by time.
    pub fn sample_jumps<R: Rng + ?Sized>(&self, threshold: f64, horizon: f64, rng: &mut R) -> Result<Vec<(f64, f64)>> {
        if !(threshold > 0.0) {
            return Err(Error::NonPositiveThreshold(threshold));
        }
        let rate = self.rate_beyond(threshold);
        let mut out = Vec::new();
        if !(horizon > 0.0) || rate == 0.0 {
            return Ok(out);
        }
        let mut t = 0.0;
        loop {
            t += -open_unit(rng).ln() / rate;
            if t >= horizon {
                break;
            }
            out.push((t, self.sample_jump_beyond(threshold, rng)));
        }
        Ok(out)
    }

    /// Multiplies every intensity by `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<LevyMeasure> {
        let scale_side = |s: &SideMeasure| -> SideMeasure {
            match s.clone() {
                SideMeasure::Zero => SideMeasure::Zero,
                SideMeasure::Pareto { alpha, scale, mass } => SideMeasure::Pareto { alpha, scale, mass: mass * k },
                SideMeasure::PowerLaw { alpha, mass } => SideMeasure::PowerLaw { alpha, mass: mass * k },
                SideMeasure::Weibull { shape, scale, mass } => SideMeasure::Weibull { shape, scale, mass: mass * k },
                SideMeasure::Scaled { rate, law } => SideMeasure::Scaled { rate: rate * k, law },
                SideMeasure::LawLeft { rate, law } => SideMeasure::LawLeft { rate: rate * k, law },
                other => SideMeasure::Restricted {
                    base: Box::new(other),
                    lo: 0.0,
                    hi: f64::INFINITY,
                },
            }
        };
        LevyMeasure::two_sided(scale_side(&self.pos), scale_side(&self.neg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn par() -> LevyMeasure {
        LevyMeasure::pareto_tail(2.0, 1.0, 1.0).unwrap()
    }

    fn cp_exp() -> LevyMeasure {
        LevyMeasure::compound_poisson(1.0, TailLaw::exponential(1.0).unwrap()).unwrap()
    }

    fn quad_tail(m: &LevyMeasure, y: f64) -> f64 {
        numeric::integrate_to_inf(|z| m.pos.tail(z), y, 1.0, &[1.0])
    }

    #[test]
    fn nu_tail_examples() {
        assert_relative_eq!(par().nu_tail(2.0).unwrap(), 0.25);
        assert_relative_eq!(cp_exp().nu_tail(1.0).unwrap(), (-1.0f64).exp());
        assert_eq!(par().nu_tail(0.5).unwrap(), 1.0);
        assert!(matches!(par().nu_tail(0.0), Err(Error::NonPositiveLevel(_))));
    }

    #[test]
    fn nu_int_tail_examples() {
        assert_relative_eq!(par().nu_int_tail(1.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(quad_tail(&par(), 1.0), 1.0, max_relative = 1e-8);
        assert_relative_eq!(par().nu_int_tail(20.0).unwrap(), 0.05, max_relative = 1e-12);
        assert_relative_eq!(quad_tail(&par(), 20.0), 0.05, max_relative = 1e-8);
        assert_relative_eq!(cp_exp().nu_int_tail(1.0).unwrap(), (-1.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(quad_tail(&cp_exp(), 1.0), (-1.0f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn gamma_bound_examples() {
        assert_relative_eq!(par().gamma_bound(), 1.0, max_relative = 1e-12);
        // Exponential(1): E[1 ∧ J^2] = (2 - 5/e) + P(J > 1) = 2 - 4/e.
        let expect = 2.0 - 4.0 * (-1.0f64).exp();
        assert_relative_eq!(cp_exp().gamma_bound(), expect, max_relative = 1e-9);
        let high = LevyMeasure::pareto_tail(3.0, 2.0, 0.7).unwrap();
        assert_relative_eq!(high.gamma_bound(), high.nu_tail(1.0).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn pareto_second_moment_closed_form_matches_quadrature() {
        for (alpha, scale) in [(2.0, 1.0), (1.5, 0.7), (2.5, 2.0)] {
            let side = SideMeasure::Pareto { alpha, scale, mass: 1.3 };
            let d = 50.0;
            let td = side.tail(d);
            let q = numeric::integrate_with(|z| 2.0 * z * (side.tail(z) - td), 0.0, d, &[scale], 1e-12, 0.0).value;
            assert_relative_eq!(side.second_moment_below(d), q, max_relative = 1e-9);
        }
    }

    #[test]
    fn gamma_bound_monte_carlo_for_compound_poisson() {
        let law = TailLaw::weibull(0.7, 1.3).unwrap();
        let m = LevyMeasure::compound_poisson(2.5, law.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let avg: f64 = (0..n).map(|_| law.sample(&mut rng).powi(2).min(1.0)).sum::<f64>() / n as f64;
        assert!((m.gamma_bound() - 2.5 * avg).abs() < 0.01 * m.gamma_bound());
    }

    #[test]
    fn split_examples() {
        let (up, lo) = par().split_at(2.0).unwrap();
        assert_relative_eq!(up.nu_tail(3.0).unwrap(), 1.0 / 9.0, max_relative = 1e-14);
        assert_eq!(lo.nu_tail(3.0).unwrap(), 0.0);
        for y in [0.3, 1.0, 1.9, 2.0, 2.5, 10.0] {
            assert_relative_eq!(up.nu_tail(y).unwrap(), par().nu_tail(y.max(2.0)).unwrap(), max_relative = 1e-14);
            let sum = up.nu_tail(y).unwrap() + lo.nu_tail(y).unwrap();
            assert_relative_eq!(sum, par().nu_tail(y).unwrap(), max_relative = 1e-14);
        }
        assert_relative_eq!(up.gamma_bound() + lo.gamma_bound(), par().gamma_bound(), max_relative = 1e-10);
        let (u2, l2) = cp_exp().split_at(0.7).unwrap();
        assert_relative_eq!(u2.gamma_bound() + l2.gamma_bound(), cp_exp().gamma_bound(), max_relative = 1e-9);
        for y in [0.2, 0.7, 3.0] {
            let s = u2.nu_int_tail(y).unwrap() + l2.nu_int_tail(y).unwrap();
            assert_relative_eq!(s, cp_exp().nu_int_tail(y).unwrap(), max_relative = 1e-10);
        }
    }

    #[test]
    fn small_jump_examples() {
        let (v, c) = par().small_jump_stats(1.0).unwrap();
        assert_eq!(v, 0.0);
        assert_relative_eq!(c, 2.0, max_relative = 1e-12);
        let oracle = numeric::integrate_to_inf(|y| y * 2.0 * y.powi(-3), 1.0, 1.0, &[]);
        assert_relative_eq!(oracle, 2.0, max_relative = 1e-8);
        let (_, c0) = cp_exp().small_jump_stats(1e-12).unwrap();
        assert_relative_eq!(c0, 1.0, max_relative = 1e-9);
        assert!(matches!(par().small_jump_stats(0.0), Err(Error::NonPositiveThreshold(_))));
    }

    #[test]
    fn small_variance_matches_quadrature() {
        let pl = LevyMeasure::two_sided(
            SideMeasure::PowerLaw { alpha: 1.5, mass: 0.5 },
            SideMeasure::Weibull { shape: 0.8, scale: 0.3, mass: 2.0 },
        )
        .unwrap();
        for d in [0.01, 0.1, 1.0] {
            let (v, _) = pl.small_jump_stats(d).unwrap();
            let dens_pl = |y: f64| 0.5 * 1.5 * y.powf(-2.5);
            let q1 = numeric::integrate_with(|y| y * y * dens_pl(y), 0.0, d, &[], 1e-12, 0.0).value;
            let wd = |y: f64| {
                let x = y / 0.3;
                2.0 * 0.8 / 0.3 * x.powf(-0.2) * (-x.powf(0.8)).exp()
            };
            let q2 = numeric::integrate_with(|y| y * y * wd(y), 0.0, d, &[], 1e-12, 0.0).value;
            assert_relative_eq!(v, q1 + q2, max_relative = 1e-8);
        }
        assert!(!pl.is_finite_activity());
        assert!(par().is_finite_activity());
    }

    #[test]
    fn derivative_of_int_tail_is_minus_tail() {
        for m in [par(), cp_exp(), LevyMeasure::pareto_tail(1.5, 0.5, 3.0).unwrap()] {
            for y in [0.3, 0.9, 2.0, 7.0] {
                let h = 1e-5;
                let d = (m.nu_int_tail(y + h).unwrap() - m.nu_int_tail(y - h).unwrap()) / (2.0 * h);
                assert_relative_eq!(-d, m.nu_tail(y).unwrap(), max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn cp_tail_is_rate_times_law_tail() {
        let law = TailLaw::lognormal(0.2, 0.9).unwrap();
        let m = LevyMeasure::compound_poisson(3.0, law.clone()).unwrap();
        for y in [0.1, 1.0, 5.0, 50.0] {
            assert_eq!(m.nu_tail(y).unwrap(), 3.0 * law.tail(y));
        }
    }

    #[test]
    fn rejects_atom_at_zero_and_bad_params() {
        let atom = TailLaw::point_mixture(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert!(LevyMeasure::compound_poisson(1.0, atom).is_err());
        assert!(LevyMeasure::pareto_tail(1.0, 1.0, 1.0).is_err());
        assert!(LevyMeasure::two_sided(SideMeasure::PowerLaw { alpha: 2.5, mass: 1.0 }, SideMeasure::Zero).is_err());
    }

    #[test]
    fn jump_sampling_counts_and_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let jumps = par().sample_jumps(1.0, 1000.0, &mut rng).unwrap();
        let n = jumps.len() as f64;
        assert!((n - 1000.0).abs() < 3.0 * 1000f64.sqrt());
        assert!(jumps.windows(2).all(|w| w[0].0 <= w[1].0));
        let big = jumps.iter().filter(|j| j.1 > 2.0).count() as f64;
        let p = 0.25;
        assert!((big / n - p).abs() < 3.0 * (p * (1.0 - p) / n).sqrt());
        assert!(par().sample_jumps(1.0, 0.0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn compensated_sum_is_centred() {
        let m = LevyMeasure::two_sided(
            SideMeasure::Pareto { alpha: 2.5, scale: 0.5, mass: 1.5 },
            SideMeasure::LawLeft {
                rate: 0.8,
                law: TailLaw::shifted(TailLaw::exponential(1.0).unwrap(), -3.0).unwrap(),
            },
        )
        .unwrap();
        let (_, comp) = m.small_jump_stats(0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let reps = 2000;
        let h = 50.0;
        let vals: Vec<f64> = (0..reps)
            .map(|_| {
                let j = m.sample_jumps(0.25, h, &mut rng).unwrap();
                j.iter().map(|x| x.1).sum::<f64>() - h * comp
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / reps as f64).sqrt();
        assert!(mean.abs() < 4.0 * sd / (reps as f64).sqrt(), "mean {mean} sd {sd}");
    }

    #[test]
    fn serde_round_trip() {
        for m in [par(), cp_exp(), LevyMeasure::zero(), par().split_at(3.0).unwrap().1] {
            let s = serde_json::to_string(&m).unwrap();
            let back: LevyMeasure = serde_json::from_str(&s).unwrap();
            assert_eq!(back, m);
        }
    }
}
