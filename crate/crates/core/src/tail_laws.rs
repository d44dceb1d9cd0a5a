//! Scalar laws described through their tails.
//!
//! Every family is bounded below and has a finite mean. Sampling goes through
//! the generalised inverse so that shared uniforms couple laws monotonically.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma, gamma_ur};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::numeric;
use crate::verdict::{class_verdict, ClassVerdict, DEFAULT_TOLERANCE};

/// Smallest tail value treated as representable by the class checks.
pub const UNDERFLOW: f64 = 1e-290;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawRepr", into = "LawRepr")]
pub enum TailLaw {
    /// `(1 + y/scale)^-alpha` on `y >= 0`.
    Pareto { alpha: f64, scale: f64 },
    /// `exp(-(y/scale)^shape)` on `y >= 0`.
    Weibull { shape: f64, scale: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Exponential { rate: f64 },
    /// Finitely many atoms, sorted ascending, weights summing to one.
    PointMixture { points: Vec<f64>, weights: Vec<f64> },
    Shifted { base: Box<TailLaw>, offset: f64 },
    Empirical(Empirical),
}

/// Sorted sample with suffix sums for tail functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct Empirical {
    sorted: Vec<f64>,
    // suffix[i] = sum of sorted[i..]
    suffix: Vec<f64>,
}

impl Empirical {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::param("samples", "empirical law needs at least one sample"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("samples", "samples must be finite"));
        }
        samples.sort_by(f64::total_cmp);
        let mut suffix = vec![0.0; samples.len() + 1];
        for i in (0..samples.len()).rev() {
            suffix[i] = suffix[i + 1] + samples[i];
        }
        Ok(Empirical {
            sorted: samples,
            suffix,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    fn n(&self) -> f64 {
        self.sorted.len() as f64
    }

    /// Index of the first sample strictly above `y`.
    fn above(&self, y: f64) -> usize {
        self.sorted.partition_point(|&x| x <= y)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum LawRepr {
    Pareto {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Weibull {
        shape: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Lognormal {
        mu: f64,
        sigma: f64,
    },
    Exponential {
        rate: f64,
    },
    PointMixture {
        points: Vec<f64>,
        weights: Vec<f64>,
    },
    Shifted {
        base: Box<TailLaw>,
        offset: f64,
    },
    Empirical {
        samples: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl TryFrom<LawRepr> for TailLaw {
    type Error = Error;
    fn try_from(r: LawRepr) -> Result<Self> {
        match r {
            LawRepr::Pareto { alpha, scale } => TailLaw::pareto(alpha, scale),
            LawRepr::Weibull { shape, scale } => TailLaw::weibull(shape, scale),
            LawRepr::Lognormal { mu, sigma } => TailLaw::lognormal(mu, sigma),
            LawRepr::Exponential { rate } => TailLaw::exponential(rate),
            LawRepr::PointMixture { points, weights } => TailLaw::point_mixture(points, weights),
            LawRepr::Shifted { base, offset } => TailLaw::shifted(*base, offset),
            LawRepr::Empirical { samples } => Ok(TailLaw::Empirical(Empirical::new(samples)?)),
        }
    }
}

impl From<TailLaw> for LawRepr {
    fn from(l: TailLaw) -> Self {
        match l {
            TailLaw::Pareto { alpha, scale } => LawRepr::Pareto { alpha, scale },
            TailLaw::Weibull { shape, scale } => LawRepr::Weibull { shape, scale },
            TailLaw::Lognormal { mu, sigma } => LawRepr::Lognormal { mu, sigma },
            TailLaw::Exponential { rate } => LawRepr::Exponential { rate },
            TailLaw::PointMixture { points, weights } => LawRepr::PointMixture { points, weights },
            TailLaw::Shifted { base, offset } => LawRepr::Shifted { base, offset },
            TailLaw::Empirical(e) => LawRepr::Empirical { samples: e.sorted },
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {v}")))
    }
}

impl TailLaw {
    pub fn pareto(alpha: f64, scale: f64) -> Result<Self> {
        positive("scale", scale)?;
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(Error::MeanInfinite(format!(
                "Pareto tail exponent alpha = {alpha} must exceed 1"
            )));
        }
        Ok(TailLaw::Pareto { alpha, scale })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("scale", scale)?;
        Ok(TailLaw::Weibull { shape, scale })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::param("mu", "must be finite"));
        }
        positive("sigma", sigma)?;
        Ok(TailLaw::Lognormal { mu, sigma })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(TailLaw::Exponential { rate })
    }

    pub fn point_mixture(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::param("points", "need matching, nonempty points and weights"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::param("points", "points must be finite"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::param("weights", "weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param("weights", format!("weights sum to {total}, not 1")));
        }
        let mut pairs: Vec<(f64, f64)> = points.into_iter().zip(weights).filter(|p| p.1 > 0.0).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (p, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == p => last.1 += w,
                _ => merged.push((p, w)),
            }
        }
        let (points, weights) = merged.into_iter().unzip();
        Ok(TailLaw::PointMixture { points, weights })
    }

    pub fn shifted(base: TailLaw, offset: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::param("offset", "must be finite"));
        }
        Ok(TailLaw::Shifted {
            base: Box::new(base),
            offset,
        })
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        Ok(TailLaw::Empirical(Empirical::new(samples)?))
    }

    /// Atoms `(point, weight)` in ascending order for purely discrete laws.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            TailLaw::PointMixture { points, weights } => {
                Some(points.iter().copied().zip(weights.iter().copied()).collect())
            }
            TailLaw::Shifted { base, offset } => {
                base.atoms().map(|v| v.into_iter().map(|(p, w)| (p + offset, w)).collect())
            }
            TailLaw::Empirical(e) => {
                let w = 1.0 / e.n();
                let mut out: Vec<(f64, f64)> = Vec::new();
                for &x in &e.sorted {
                    match out.last_mut() {
                        Some(last) if last.0 == x => last.1 += w,
                        _ => out.push((x, w)),
                    }
                }
                Some(out)
            }
            _ => None,
        }
    }

    /// Left end of the support.
    pub fn support_lower(&self) -> f64 {
        match self {
            TailLaw::Pareto { .. }
            | TailLaw::Weibull { .. }
            | TailLaw::Lognormal { .. }
            | TailLaw::Exponential { .. } => 0.0,
            TailLaw::PointMixture { points, .. } => points[0],
            TailLaw::Shifted { base, offset } => base.support_lower() + offset,
            TailLaw::Empirical(e) => e.sorted[0],
        }
    }

    /// `P(X > y)`.
    pub fn tail(&self, y: f64) -> f64 {
        match *self {
            TailLaw::Pareto { alpha, scale } => {
                if y <= 0.0 {
                    1.0
                } else {
                    (1.0 + y / scale).powf(-alpha)
                }
            }
            TailLaw::Weibull { shape, scale } => {
                if y <= 0.0 {
                    1.0
                } else {
                    (-(y / scale).powf(shape)).exp()
                }
            }
            TailLaw::Lognormal { mu, sigma } => {
                if y <= 0.0 {
                    1.0
                } else {
                    0.5 * erfc((y.ln() - mu) / (sigma * SQRT_2))
                }
            }
            TailLaw::Exponential { rate } => {
                if y <= 0.0 {
                    1.0
                } else {
                    (-rate * y).exp()
                }
            }
            TailLaw::PointMixture {
                ref points,
                ref weights,
            } => {
                let i = points.partition_point(|&p| p <= y);
                weights[i..].iter().sum::<f64>().min(1.0)
            }
            TailLaw::Shifted { ref base, offset } => base.tail(y - offset),
            TailLaw::Empirical(ref e) => (e.sorted.len() - e.above(y)) as f64 / e.n(),
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        1.0 - self.tail(y)
    }

    pub fn mean(&self) -> f64 {
        match *self {
            TailLaw::Pareto { alpha, scale } => scale / (alpha - 1.0),
            TailLaw::Weibull { shape, scale } => scale * gamma(1.0 + 1.0 / shape),
            TailLaw::Lognormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            TailLaw::Exponential { rate } => 1.0 / rate,
            TailLaw::PointMixture {
                ref points,
                ref weights,
            } => points.iter().zip(weights).map(|(p, w)| p * w).sum(),
            TailLaw::Shifted { ref base, offset } => base.mean() + offset,
            TailLaw::Empirical(ref e) => e.suffix[0] / e.n(),
        }
    }

    /// `E[(X - y)^+] = ∫_y^∞ P(X > z) dz`, without the cap at one.
    pub fn excess(&self, y: f64) -> f64 {
        let lower = self.support_lower();
        if y <= lower {
            return self.mean() - y;
        }
        match *self {
            TailLaw::Pareto { alpha, scale } => scale / (alpha - 1.0) * (1.0 + y / scale).powf(1.0 - alpha),
            TailLaw::Weibull { shape, scale } => {
                let x = (y / scale).powf(shape);
                let k = 1.0 / shape;
                scale / shape * gamma(k) * gamma_ur(k, x)
            }
            TailLaw::Lognormal { mu, sigma } => {
                let d = (y.ln() - mu) / sigma;
                if d < 1.0 {
                    let upper = |z: f64| 0.5 * erfc(z / SQRT_2);
                    (self.mean() * upper(d - sigma) - y * upper(d)).max(0.0)
                } else {
                    // ∫_{ln y}^∞ e^u P(X > e^u) du avoids the cancellation above.
                    numeric::integrate_to_inf(
                        |u| (u.exp()).min(f64::MAX) * 0.5 * erfc((u - mu) / (sigma * SQRT_2)),
                        y.ln(),
                        sigma / d.max(1.0),
                        &[],
                    )
                }
            }
            TailLaw::Exponential { rate } => (-rate * y).exp() / rate,
            TailLaw::PointMixture {
                ref points,
                ref weights,
            } => points
                .iter()
                .zip(weights)
                .filter(|(p, _)| **p > y)
                .map(|(p, w)| (p - y) * w)
                .sum(),
            TailLaw::Shifted { ref base, offset } => base.excess(y - offset),
            TailLaw::Empirical(ref e) => {
                let i = e.above(y);
                (e.suffix[i] - y * (e.sorted.len() - i) as f64) / e.n()
            }
        }
    }

    /// Integrated tail `min(1, ∫_y^∞ P(X > z) dz)`.
    pub fn int_tail(&self, y: f64) -> f64 {
        self.excess(y).min(1.0)
    }

    /// `E[(t - X)^+] = ∫_{-∞}^t P(X <= z) dz`.
    pub fn shortfall(&self, t: f64) -> f64 {
        if t <= self.support_lower() {
            return 0.0;
        }
        match self {
            TailLaw::PointMixture { points, weights } => points
                .iter()
                .zip(weights)
                .filter(|(p, _)| **p < t)
                .map(|(p, w)| (t - p) * w)
                .sum(),
            TailLaw::Shifted { base, offset } => base.shortfall(t - offset),
            TailLaw::Empirical(e) => {
                let i = e.sorted.partition_point(|&x| x < t);
                (t * i as f64 - (e.suffix[0] - e.suffix[i])) / e.n()
            }
            // E(t - X)^+ - E(X - t)^+ = t - EX.
            _ => (t - self.mean() + self.excess(t)).max(0.0),
        }
    }

    /// `E[X ∨ (-beta)]`; never below the mean and nonincreasing in `beta`.
    pub fn truncated_mean(&self, beta: f64) -> f64 {
        self.mean() + self.shortfall(-beta)
    }

    /// `sup{z : P(X > z) >= q}` for `q ∈ (0, 1]`.
    pub fn upper_quantile(&self, q: f64) -> f64 {
        match *self {
            TailLaw::Pareto { alpha, scale } => scale * (q.powf(-1.0 / alpha) - 1.0).max(0.0),
            TailLaw::Weibull { shape, scale } => scale * (-q.ln()).max(0.0).powf(1.0 / shape),
            TailLaw::Lognormal { mu, sigma } => {
                if q >= 1.0 {
                    0.0
                } else {
                    (mu + sigma * SQRT_2 * erfc_inv(2.0 * q)).exp()
                }
            }
            TailLaw::Exponential { rate } => (-q.ln()).max(0.0) / rate,
            TailLaw::PointMixture {
                ref points,
                ref weights,
            } => {
                let mut s = 0.0;
                for i in (0..points.len()).rev() {
                    s += weights[i];
                    if s >= q * (1.0 - 1e-12) {
                        return points[i];
                    }
                }
                points[0]
            }
            TailLaw::Shifted { ref base, offset } => base.upper_quantile(q) + offset,
            TailLaw::Empirical(ref e) => {
                let n = e.sorted.len();
                let k = ((q * n as f64) - 1e-9).ceil().max(1.0) as usize;
                e.sorted[n - k.min(n)]
            }
        }
    }

    /// `inf{z : F(z) >= w}` for `w ∈ (0, 1]`.
    pub fn lower_quantile(&self, w: f64) -> f64 {
        match self.atoms() {
            Some(atoms) => {
                let mut c = 0.0;
                for &(x, p) in &atoms {
                    c += p;
                    if c >= w * (1.0 - 1e-12) {
                        return x;
                    }
                }
                atoms.last().unwrap().0
            }
            None => self.upper_quantile(1.0 - w),
        }
    }

    /// Generalised inverse `sup{z : F(z) <= u}` for `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::InvalidProbability(u));
        }
        Ok(self.upper_quantile(1.0 - u))
    }

    /// Inversion sample: the returned value is nondecreasing in the uniform used.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.upper_quantile(open_unit(rng))
    }

    /// Mean and second moment of `upper_quantile(Q)` given `Q > p`, where `Q`
    /// is uniform on `(0, 1]`.
    pub fn capped_moments(&self, p: f64) -> (f64, f64) {
        let span = 1.0 - p;
        if let Some(atoms) = self.atoms() {
            // Atom i occupies q in (suffix_{i+1}, suffix_i].
            let (mut m1, mut m2, mut above) = (0.0, 0.0, 0.0);
            for &(x, w) in atoms.iter().rev() {
                let hi = (above + w).min(1.0);
                let len = (hi - above.max(p)).max(0.0);
                m1 += x * len;
                m2 += x * x * len;
                above = hi;
            }
            return (m1 / span, m2 / span);
        }
        let t = self.upper_quantile(p);
        let m1 = (self.mean() - p * t - self.excess(t)) / span;
        let lp = p.ln();
        let m2 = numeric::integrate_with(
            |s| {
                let q = s.exp();
                let x = self.upper_quantile(q);
                x * x * q
            },
            lp,
            0.0,
            &[],
            1e-10,
            0.0,
        )
        .value;
        (m1, m2 / span)
    }
}

/// Uniform on `(0, 1]`.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::param("levels", "grid is empty"));
    }
    if levels.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("levels", "grid must be strictly increasing"));
    }
    Ok(())
}

/// Long-tailedness probe: `P(X > y + shift) / P(X > y)` should tend to one.
pub fn check_long_tailed(law: &TailLaw, shift: f64, levels: &[f64]) -> Result<ClassVerdict> {
    if shift == 0.0 || !shift.is_finite() {
        return Err(Error::param("shift", "must be finite and nonzero"));
    }
    check_levels(levels)?;
    let mut trace = Vec::with_capacity(levels.len());
    for &y in levels {
        let (num, den) = (law.tail(y + shift), law.tail(y));
        if num < UNDERFLOW || den < UNDERFLOW {
            return Err(Error::UnderflowAtLevel(y));
        }
        trace.push((y, num / den));
    }
    Ok(class_verdict(trace, 1.0, DEFAULT_TOLERANCE))
}

/// Two-fold convolution tail of the positive part `max(X, 0)` at `y > 0` on a
/// uniform grid of `cells` cells over `(0, y/2]`.
fn conv2_tail(law: &TailLaw, y: f64, cells: usize) -> f64 {
    let half = 0.5 * y;
    let h = half / cells as f64;
    let both = law.tail(half).powi(2);
    // P(X+ = 0) acts as an atom at the origin.
    let atom0 = 1.0 - law.tail(0.0);
    let mut s = atom0 * law.tail(y);
    let mut prev = law.tail(0.0);
    for i in 0..cells {
        let z1 = h * (i + 1) as f64;
        let next = law.tail(z1);
        let mass = prev - next;
        if mass > 0.0 {
            s += mass * law.tail(y - (z1 - 0.5 * h));
        }
        prev = next;
    }
    // The last cell's upper edge at y/2 belongs to the lower side.
    both + 2.0 * s
}

/// Subexponentiality probe: `P(X1 + X2 > y) / P(X > y)` for the positive part
/// should tend to two.
pub fn check_subexponential(law: &TailLaw, levels: &[f64]) -> Result<ClassVerdict> {
    check_levels(levels)?;
    if levels[0] <= 0.0 {
        return Err(Error::NonPositiveLevel(levels[0]));
    }
    let mut trace = Vec::with_capacity(levels.len());
    for &y in levels {
        let ty = law.tail(y);
        if ty < UNDERFLOW || law.tail(0.5 * y).powi(2) < UNDERFLOW {
            return Err(Error::UnderflowAtLevel(y));
        }
        let cells = ((0.5 * y / 0.01).ceil() as usize).clamp(1000, 2_000_000);
        let coarse = conv2_tail(law, y, cells) / ty;
        let fine = conv2_tail(law, y, 2 * cells) / ty;
        let tolerance = 0.01 * 2.0;
        let estimate = (fine - coarse).abs();
        if estimate > tolerance {
            return Err(Error::DiscretizationTooCoarse {
                level: y,
                estimate,
                tolerance,
            });
        }
        trace.push((y, fine));
    }
    Ok(class_verdict(trace, 2.0, DEFAULT_TOLERANCE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verdict::Verdict;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p2() -> TailLaw {
        TailLaw::pareto(2.0, 1.0).unwrap()
    }

    fn w05() -> TailLaw {
        TailLaw::weibull(0.5, 1.0).unwrap()
    }

    fn mix() -> TailLaw {
        TailLaw::point_mixture(vec![-10.0, 1.0], vec![0.5, 0.5]).unwrap()
    }

    fn all_laws() -> Vec<TailLaw> {
        vec![
            p2(),
            TailLaw::pareto(3.5, 2.0).unwrap(),
            w05(),
            TailLaw::weibull(1.7, 0.8).unwrap(),
            TailLaw::lognormal(0.0, 1.0).unwrap(),
            TailLaw::exponential(2.0).unwrap(),
            mix(),
            TailLaw::shifted(p2(), -1.5).unwrap(),
            TailLaw::empirical(vec![0.3, -1.0, 2.5, 2.5, 7.0]).unwrap(),
        ]
    }

    #[test]
    fn tail_examples() {
        assert_relative_eq!(p2().tail(1.0), 0.25);
        assert_relative_eq!(w05().tail(4.0), (-2.0f64).exp(), max_relative = 1e-14);
        for law in all_laws() {
            assert_eq!(law.tail(-1e300), 1.0);
        }
    }

    #[test]
    fn int_tail_examples_match_quadrature() {
        let quad = |law: &TailLaw, y: f64| numeric::integrate_to_inf(|z| law.tail(z), y, 1.0, &[]);
        assert_relative_eq!(p2().int_tail(3.0), 0.25, max_relative = 1e-12);
        assert_relative_eq!(quad(&p2(), 3.0), 0.25, max_relative = 1e-8);
        assert_eq!(p2().int_tail(0.0), 1.0);
        assert_relative_eq!(quad(&p2(), 0.0), 1.0, max_relative = 1e-8);
        let six_e2 = 6.0 * (-2.0f64).exp();
        assert_relative_eq!(w05().int_tail(4.0), six_e2, max_relative = 1e-10);
        assert_relative_eq!(quad(&w05(), 4.0), six_e2, max_relative = 1e-8);
    }

    #[test]
    fn weibull_excess_far_tail() {
        for y in [1.0f64, 100.0, 1e4, 1e6] {
            let closed = 2.0 * (y.sqrt() + 1.0) * (-y.sqrt()).exp();
            assert_relative_eq!(w05().excess(y), closed, max_relative = 1e-9);
        }
    }

    #[test]
    fn excess_matches_quadrature_for_every_family() {
        for law in all_laws() {
            for y in [-3.0, 0.0, 0.5, 2.0, 6.0, 20.0] {
                let lo = law.support_lower().max(y);
                let brk: Vec<f64> = law.atoms().map(|a| a.iter().map(|p| p.0).collect()).unwrap_or_default();
                let q = numeric::integrate_to_inf(|z| law.tail(z), lo, 1.0, &brk)
                    + (lo - y).max(0.0);
                let e = law.excess(y);
                assert!((e - q).abs() <= 1e-8 * q.max(1e-12) + 1e-13, "{law:?} y={y}: {e} vs {q}");
            }
        }
    }

    #[test]
    fn lognormal_excess_is_continuous_across_branches() {
        let l = TailLaw::lognormal(0.0, 1.0).unwrap();
        let y = 1f64.exp();
        let a = l.excess(y * (1.0 - 1e-9));
        let b = l.excess(y * (1.0 + 1e-9));
        assert_relative_eq!(a, b, max_relative = 1e-7);
        let far = l.excess(1e4);
        assert!(far > 0.0 && far < l.tail(1e4) * 1e4);
    }

    #[test]
    fn mean_examples() {
        assert_relative_eq!(p2().mean(), 1.0);
        assert_relative_eq!(
            numeric::integrate_to_inf(|z| p2().tail(z), 0.0, 1.0, &[]),
            1.0,
            max_relative = 1e-8
        );
        assert_relative_eq!(mix().mean(), -4.5);
        assert_relative_eq!(TailLaw::shifted(p2(), -1.5).unwrap().mean(), -0.5);
    }

    #[test]
    fn infinite_mean_rejected() {
        assert!(matches!(TailLaw::pareto(1.0, 1.0), Err(Error::MeanInfinite(_))));
        assert!(matches!(TailLaw::pareto(0.5, 1.0), Err(Error::MeanInfinite(_))));
    }

    #[test]
    fn quantile_examples() {
        assert_relative_eq!(p2().quantile(0.75).unwrap(), 1.0, max_relative = 1e-14);
        assert_eq!(p2().quantile(0.0).unwrap(), 0.0);
        assert!(matches!(p2().quantile(1.0), Err(Error::InvalidProbability(_))));
        assert!(matches!(p2().quantile(-0.1), Err(Error::InvalidProbability(_))));
        for law in all_laws() {
            if law.atoms().is_none() {
                let z = law.quantile(0.999999).unwrap();
                assert!(z.is_finite());
                assert_relative_eq!(law.tail(z), 1e-6, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn point_mixture_quantile_is_generalised_inverse() {
        let m = mix();
        assert_eq!(m.quantile(0.0).unwrap(), -10.0);
        assert_eq!(m.quantile(0.49).unwrap(), -10.0);
        // F(-10) = 0.5 <= 0.5, so the sup reaches the next atom.
        assert_eq!(m.quantile(0.5).unwrap(), 1.0);
        assert_eq!(m.quantile(0.9).unwrap(), 1.0);
    }

    #[test]
    fn truncated_mean_examples() {
        assert_relative_eq!(mix().truncated_mean(2.0), -0.5);
        assert_relative_eq!(mix().truncated_mean(20.0), -4.5);
        let s = TailLaw::shifted(p2(), -1.5).unwrap();
        assert_relative_eq!(s.truncated_mean(1.5), s.mean());
        assert_relative_eq!(s.truncated_mean(1.0), -1.0 / 3.0, max_relative = 1e-12);
    }

    fn ks(law: &TailLaw, n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let mut d: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = law.cdf(x);
            d = d.max((f - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - f).abs());
        }
        d
    }

    #[test]
    fn sampling_ks() {
        for law in [p2(), w05(), TailLaw::lognormal(0.0, 1.0).unwrap(), TailLaw::exponential(1.0).unwrap()] {
            let d = ks(&law, 100_000, 7);
            assert!(d < 0.01, "{law:?}: KS {d}");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(w05().sample(&mut a), w05().sample(&mut b));
        }
    }

    #[test]
    fn point_mixture_frequencies() {
        let m = TailLaw::point_mixture(vec![0.0, 1.0, 5.0], vec![0.2, 0.5, 0.3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let x = m.sample(&mut rng);
            counts[[0.0, 1.0, 5.0].iter().position(|&p| p == x).unwrap()] += 1;
        }
        for (c, w) in counts.iter().zip([0.2, 0.5, 0.3]) {
            let sd = (w * (1.0 - w) / n as f64).sqrt();
            assert!((*c as f64 / n as f64 - w).abs() < 3.0 * sd);
        }
    }

    #[test]
    fn capped_moments_match_monte_carlo_free_oracle() {
        // Exponential(1) given Q > p is X given X < -ln p.
        let e = TailLaw::exponential(1.0).unwrap();
        let p: f64 = 0.01;
        let c = -p.ln();
        let (m1, m2) = e.capped_moments(p);
        let z = 1.0 - p;
        let em1 = (1.0 - (c + 1.0) * p) / z;
        let em2 = (2.0 - (c * c + 2.0 * c + 2.0) * p) / z;
        assert_relative_eq!(m1, em1, max_relative = 1e-9);
        assert_relative_eq!(m2, em2, max_relative = 1e-8);
        let (a1, a2) = mix().capped_moments(0.25);
        // Q > 0.25 keeps a quarter of the +1 atom and all of the -10 atom.
        assert_relative_eq!(a1, (0.25 * 1.0 + 0.5 * -10.0) / 0.75, max_relative = 1e-12);
        assert_relative_eq!(a2, (0.25 + 50.0) / 0.75, max_relative = 1e-12);
    }

    #[test]
    fn long_tailed_examples() {
        let lv: Vec<f64> = numeric::geomspace(10.0, 1e5, 8);
        assert_eq!(check_long_tailed(&p2(), 1.0, &lv).unwrap().verdict, Verdict::Consistent);
        assert_eq!(check_long_tailed(&w05(), 1.0, &lv).unwrap().verdict, Verdict::Consistent);
        let small: Vec<f64> = numeric::linspace(10.0, 200.0, 8);
        let ex = TailLaw::exponential(1.0).unwrap();
        let v = check_long_tailed(&ex, 1.0, &small).unwrap();
        assert_eq!(v.verdict, Verdict::Inconsistent);
        for (_, r) in v.ratio_trace {
            assert_relative_eq!(r, (-1.0f64).exp(), max_relative = 1e-12);
        }
        assert!(matches!(
            check_long_tailed(&ex, 1.0, &[10.0, 1e4]),
            Err(Error::UnderflowAtLevel(_))
        ));
    }

    #[test]
    fn subexponential_examples() {
        let v = check_subexponential(&p2(), &[10.0, 30.0, 100.0, 300.0, 1000.0]).unwrap();
        let at100 = v.ratio_trace[2].1;
        assert!((at100 / 2.0 - 1.0).abs() < 0.05, "{at100}");
        assert_eq!(v.verdict, Verdict::Consistent);
        let ex = TailLaw::exponential(1.0).unwrap();
        let lv = [5.0, 10.0, 20.0, 40.0, 80.0];
        let v = check_subexponential(&ex, &lv).unwrap();
        for &(y, r) in &v.ratio_trace {
            assert_relative_eq!(r, 1.0 + y, max_relative = 1e-3);
        }
        assert_eq!(v.verdict, Verdict::Inconsistent);
    }

    #[test]
    fn subexponential_lognormal_is_not_rejected() {
        let l = TailLaw::lognormal(0.0, 1.0).unwrap();
        let v = check_subexponential(&l, &[10.0, 30.0, 100.0, 300.0]).unwrap();
        assert_ne!(v.verdict, Verdict::Inconsistent);
        assert!(v.ratio_trace.last().unwrap().1 < v.ratio_trace[0].1);
    }

    #[test]
    fn serde_round_trip_and_validation() {
        for law in all_laws() {
            let s = serde_json::to_string(&law).unwrap();
            let back: TailLaw = serde_json::from_str(&s).unwrap();
            assert_eq!(back, law);
        }
        let bad = r#"{"family":"pareto","alpha":0.9}"#;
        assert!(serde_json::from_str::<TailLaw>(bad).is_err());
    }
}
