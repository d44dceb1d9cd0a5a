//! Discrete-time modulated walk: paths, supremum sampling, asymptotes and
//! the bounded-jump construction used for exponential bounds.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulation::{
    default_beta_grid, drift_constant, kappa, probe_grid, weight_constant, Modulated, Modulator, StateSampler, WalkSpec,
};
use crate::numeric::{expand_until, integrate_with, wilson, Z95};
use crate::rng::{run_workers, stream, Stream};
use crate::sampler::{level_for, SupSample, SupremumSampler, TruncationRule, DEFAULT_TARGET_FRACTION};
use crate::tail_laws::{open_unit, TailLaw};

/// A simulated stretch `S_0, ..., S_n` of the walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkPath {
    /// `ξ_1..ξ_n`.
    pub increments: Vec<f64>,
    /// `S_0..S_n`, with `S_0 = 0`.
    pub sums: Vec<f64>,
    /// `M_0..M_n`.
    pub maxima: Vec<f64>,
    /// `X_1..X_n`.
    pub states: Vec<usize>,
    /// Whether a fresh cycle starts at step `n`.
    pub regenerations: Vec<bool>,
}

impl WalkPath {
    pub fn len(&self) -> usize {
        self.increments.len()
    }
    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }
    pub fn supremum(&self) -> f64 {
        *self.maxima.last().unwrap()
    }
}

pub fn simulate_path<R: Rng + ?Sized>(spec: &WalkSpec, n_steps: usize, rng: &mut R) -> WalkPath {
    let m = &spec.modulator;
    let mut p = WalkPath {
        increments: Vec::with_capacity(n_steps),
        sums: Vec::with_capacity(n_steps + 1),
        maxima: Vec::with_capacity(n_steps + 1),
        states: Vec::with_capacity(n_steps),
        regenerations: Vec::with_capacity(n_steps),
    };
    p.sums.push(0.0);
    p.maxima.push(0.0);
    let (mut s, mut mx) = (0.0f64, 0.0f64);
    let mut x = 0;
    for i in 0..n_steps {
        x = if i == 0 { m.start(rng) } else { m.next(x, rng) };
        let xi = spec.law_for_state(x).sample(rng);
        s += xi;
        mx = mx.max(s);
        p.increments.push(xi);
        p.sums.push(s);
        p.maxima.push(mx);
        p.states.push(x);
        p.regenerations.push(m.is_cycle_start(x));
    }
    p
}

/// Floor on the default truncation level. The integrated-tail rule is only
/// asymptotic and badly understates the return probability of light-tailed
/// walks at small depths.
pub const MIN_LEVEL: f64 = 50.0;

/// `C/a`, or `1/a` when `C = 0` so that truncation stays meaningful.
pub(crate) fn truncation_coef(c: f64, a: f64) -> f64 {
    if c > 0.0 {
        c / a
    } else {
        1.0 / a
    }
}

impl TruncationRule {
    /// Default rule for a discrete walk whose smallest probability of
    /// interest is `smallest_target`: `n_min = 10 Eτ` and `L` with
    /// `(C/a) F̄ᴵ(L) < 0.01 * smallest_target`.
    pub fn for_walk(spec: &WalkSpec, smallest_target: f64) -> Result<Self> {
        let a = drift_constant(spec)?;
        let coef = truncation_coef(weight_constant(spec), a);
        let level = level_for(coef, |l| spec.reference.int_tail(l), DEFAULT_TARGET_FRACTION * smallest_target)
            .max(MIN_LEVEL);
        Ok(TruncationRule::new(level, 10.0 * spec.modulator.mean_cycle()))
    }
}

const K_MIN: usize = 6;
const K_MAX: usize = 60;
const OCCUPANCY_CYCLES: usize = 20_000;
const OCCUPANCY_SEED: u64 = 0x6f63_6375;

/// Far-below-the-maximum phase: increments whose upper-tail rank exceeds
/// `p = 2^-k` are aggregated into Gaussian blocks with an exact
/// Brownian-bridge maximum, and the rare large ones are drawn exactly.
#[derive(Debug, Clone)]
struct FarPhase {
    entry: f64,
    cap_ratio: f64,
    /// Per `k`: mean and variance per step of the capped increments.
    levels: Vec<Option<(f64, f64)>>,
    class_cum: Vec<f64>,
    states: StateSampler,
}

enum FarExit {
    Stop,
    Resume,
}

impl FarPhase {
    fn build(spec: &WalkSpec, entry: f64, cap_ratio: f64) -> Result<Option<Self>> {
        // Blocks rely on the increments drifting down within every state on
        // average; with κ >= 0 long cycles can carry the walk up instead.
        match kappa(spec, &default_beta_grid()) {
            Ok(k) if k.kappa < 0.0 => {}
            _ => return Ok(None),
        }
        let probs = spec.class_probs();
        let nc = spec.laws.len();
        let occ = spec
            .modulator
            .cycle_occupancy(nc, OCCUPANCY_CYCLES, &mut stream(OCCUPANCY_SEED, 0))?;
        let mean_tau = spec.modulator.mean_cycle();
        let mut levels = vec![None; K_MAX + 1];
        for (k, slot) in levels.iter_mut().enumerate().skip(K_MIN) {
            let p = 2f64.powi(-(k as i32));
            let moments: Vec<(f64, f64)> = spec.laws.iter().map(|l| l.capped_moments(p)).collect();
            let mu: f64 = probs.iter().zip(&moments).map(|(w, (m1, _))| w * m1).sum();
            let within: f64 = probs
                .iter()
                .zip(&moments)
                .map(|(w, (m1, m2))| w * (m2 - m1 * m1).max(0.0))
                .sum();
            let between = occ
                .iter()
                .map(|c| {
                    let tau: u64 = c.iter().sum();
                    let r: f64 = c.iter().zip(&moments).map(|(&n, (m1, _))| n as f64 * m1).sum();
                    let d = r - mu * tau as f64;
                    d * d
                })
                .sum::<f64>()
                / occ.len() as f64
                / mean_tau;
            if mu < 0.0 && mu.is_finite() && within.is_finite() {
                *slot = Some((mu, within + between));
            }
        }
        let mut c = 0.0;
        let class_cum = probs
            .iter()
            .map(|p| {
                c += p;
                c
            })
            .collect();
        Ok(Some(FarPhase {
            entry,
            cap_ratio,
            levels,
            class_cum,
            states: spec.modulator.stationary_sampler(),
        }))
    }

    fn class<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.class_cum[self.class_cum.len() - 1];
        self.class_cum.partition_point(|&c| c <= u).min(self.class_cum.len() - 1)
    }

    #[allow(clippy::too_many_arguments)]
    fn run(
        &self,
        spec: &WalkSpec,
        rule: &TruncationRule,
        s: &mut f64,
        mx: &mut f64,
        n: &mut f64,
        rng: &mut Stream,
    ) -> Result<FarExit> {
        let done = |s: f64, mx: f64, n: f64| n >= rule.min_steps && s <= mx - rule.level;
        'outer: loop {
            let d0 = *mx - *s;
            if d0 < self.entry {
                return Ok(FarExit::Resume);
            }
            let t = spec.reference.tail(self.cap_ratio * d0);
            let k = if t > 0.0 { (-t.log2()).floor() } else { K_MAX as f64 };
            if k < K_MIN as f64 {
                return Ok(FarExit::Resume);
            }
            let k = (k as usize).min(K_MAX);
            let Some((mu, var)) = self.levels[k] else {
                return Ok(FarExit::Resume);
            };
            let p = 2f64.powi(-(k as i32));
            let mut remaining = (open_unit(rng).ln() / (-p).ln_1p()).floor().min(1e18);
            while remaining > 0.0 {
                let depth = *mx - *s;
                if depth < self.entry {
                    return Ok(FarExit::Resume);
                }
                if depth < 0.5 * d0 || depth > 2.0 * d0 {
                    // Re-pick the cap for the new depth; the steps not yet
                    // taken are still independent.
                    continue 'outer;
                }
                let g = if var > 0.0 {
                    ((0.25 * depth).powi(2) / var).floor().max(1.0).min(remaining)
                } else {
                    remaining
                };
                let sd = (g * var).sqrt();
                let z: f64 = rng.sample(StandardNormal);
                let x = g * mu + sd * z;
                if sd > 0.0 {
                    let top = 0.5 * (x + (x * x - 2.0 * g * var * open_unit(rng).ln()).sqrt());
                    *mx = mx.max(*s + top);
                }
                *s += x;
                *n += g;
                remaining -= g;
                if done(*s, *mx, *n) {
                    return Ok(FarExit::Stop);
                }
                if *n > rule.cap {
                    return Err(Error::StepCapExceeded(rule.cap as u64));
                }
            }
            let law = &spec.laws[self.class(rng)];
            let xi = law.upper_quantile(p * open_unit(rng));
            *s += xi;
            *n += 1.0;
            *mx = mx.max(*s);
            if done(*s, *mx, *n) {
                return Ok(FarExit::Stop);
            }
        }
    }
}

/// Draws the all-time supremum `M` of a discrete walk under a truncation rule.
#[derive(Debug, Clone)]
pub struct DiscreteSampler {
    spec: WalkSpec,
    rule: TruncationRule,
    bias_bound: f64,
    far: Option<FarPhase>,
}

impl DiscreteSampler {
    pub fn new(spec: WalkSpec, rule: TruncationRule) -> Result<Self> {
        spec.validate()?;
        let a = drift_constant(&spec)?;
        if !(rule.level > 0.0) {
            return Err(Error::param("level", "truncation level must be positive"));
        }
        let coef = truncation_coef(weight_constant(&spec), a);
        let bias_bound = coef * spec.reference.int_tail(rule.level) * rule.safety;
        let far = match rule.skip {
            Some(sk) => FarPhase::build(&spec, sk.entry_depth, sk.cap_ratio)?,
            None => None,
        };
        Ok(DiscreteSampler {
            spec,
            rule,
            bias_bound,
            far,
        })
    }

    pub fn spec(&self) -> &WalkSpec {
        &self.spec
    }

    pub fn rule(&self) -> &TruncationRule {
        &self.rule
    }

    /// Whether the accelerated far phase is active.
    pub fn accelerated(&self) -> bool {
        self.far.is_some()
    }
}

impl SupremumSampler for DiscreteSampler {
    fn sample(&self, rng: &mut Stream) -> Result<SupSample> {
        let m = &self.spec.modulator;
        let rule = &self.rule;
        let mut x = m.start(rng);
        let (mut s, mut mx, mut n) = (0.0f64, 0.0f64, 0.0f64);
        loop {
            s += self.spec.law_for_state(x).sample(rng);
            n += 1.0;
            if s > mx {
                mx = s;
            }
            if n >= rule.min_steps && s <= mx - rule.level {
                break;
            }
            if n > rule.cap {
                return Err(Error::StepCapExceeded(rule.cap as u64));
            }
            if let Some(f) = &self.far {
                if mx - s >= f.entry {
                    match f.run(&self.spec, rule, &mut s, &mut mx, &mut n, rng)? {
                        FarExit::Stop => break,
                        FarExit::Resume => {
                            x = f.states.sample(rng);
                            continue;
                        }
                    }
                }
            }
            x = m.next(x, rng);
        }
        Ok(SupSample {
            value: mx,
            stopped_at: n,
        })
    }

    fn bias_bound(&self) -> f64 {
        self.bias_bound
    }
}

/// One truncated supremum draw; returns `(M, stopped_at, bias_bound)`.
pub fn sample_supremum(spec: &WalkSpec, rule: TruncationRule, rng: &mut Stream) -> Result<(f64, u64, f64)> {
    let s = DiscreteSampler::new(spec.clone(), rule)?;
    let d = s.sample(rng)?;
    Ok((d.value, d.stopped_at as u64, s.bias_bound()))
}

/// `(C/a) F̄ᴵ(y)`.
pub fn asymptote(spec: &WalkSpec, y: f64) -> Result<f64> {
    let a = drift_constant(spec)?;
    Ok(weight_constant(spec) / a * spec.reference.int_tail(y))
}

const SERIES_DIRECT_MAX: usize = 1_000_000;

/// `Σ_{n>=1} Σ_x π_n(x) F̄_x(y + d₂ n)` with `d₂ = a + drift_offset`.
///
/// Finite chains use the exact marginals `π_n`; countdown chains use `π`.
/// Terms are summed directly until they drop below `1e-12` of the partial
/// sum, or for at most a million terms, after which the remainder is the
/// midpoint-rule integral `Σ_x w_x F̄ᴵ_x(y + d₂(N + 1/2)) / d₂`.
pub fn big_jump_series(spec: &WalkSpec, y: f64, drift_offset: f64) -> Result<f64> {
    if !(drift_offset >= 0.0) {
        return Err(Error::param("drift_offset", "must be >= 0"));
    }
    let d2 = drift_constant(spec)? + drift_offset;
    let m = &spec.modulator;
    let nc = spec.laws.len();
    let mut law_n: Vec<f64> = match m {
        Modulator::FiniteMarkov(_) => m.marginal(1).unwrap(),
        Modulator::Countdown(_) => {
            if m.period() > 1 {
                return Err(Error::PeriodicModulator(m.period()));
            }
            m.class_probs(nc)
        }
    };
    let pi = spec.class_probs();
    let mut sum = 0.0;
    let mut n = 0usize;
    while n < SERIES_DIRECT_MAX {
        n += 1;
        let z = y + d2 * n as f64;
        let term: f64 = law_n.iter().zip(&spec.laws).map(|(w, l)| if *w > 0.0 { w * l.tail(z) } else { 0.0 }).sum();
        sum += term;
        if term == 0.0 && sum == 0.0 && spec.laws.iter().all(|l| l.tail(z) == 0.0) {
            return Ok(0.0);
        }
        if term <= 1e-12 * sum {
            return Ok(sum);
        }
        if let Some(v) = m.step_marginal(&law_n) {
            law_n = v;
        }
    }
    let z = y + d2 * (n as f64 + 0.5);
    let rest: f64 = pi.iter().zip(&spec.laws).map(|(w, l)| w * l.excess(z)).sum::<f64>() / d2;
    Ok(sum + rest)
}

/// Constants of the bounded-jump construction for reference `F`, drift
/// margin `α` and left truncation `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcelandConstants {
    pub ystar: f64,
    /// `F̄(y*)`.
    pub epsilon: f64,
    /// `E[η 1(η > y*)]`.
    pub m: f64,
    pub k0: f64,
    pub k: f64,
    pub s: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Slacks of the defining relations; each must be `<= 0` (inequalities) or
/// near zero (`s_residual`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcelandResiduals {
    /// `m - α/4`.
    pub tail_mean: f64,
    /// `max(1, β) ε - α/4`.
    pub tail_prob: f64,
    /// `s K² e^{sK} - α/4`.
    pub s_residual: f64,
    /// `(β + 1) ε + m - 3α/4`.
    pub drift_margin: f64,
    /// `K₀ - (m/ε + 1)`.
    pub k0_residual: f64,
    /// `K - max(β, y*, K₀)`.
    pub k_residual: f64,
}

impl IcelandConstants {
    pub fn residuals(&self) -> IcelandResiduals {
        let q = self.alpha / 4.0;
        let k0 = if self.epsilon > 0.0 { self.m / self.epsilon + 1.0 } else { 1.0 };
        IcelandResiduals {
            tail_mean: self.m - q,
            tail_prob: self.beta.max(1.0) * self.epsilon - q,
            s_residual: self.s * self.k * self.k * (self.s * self.k).exp() - q,
            drift_margin: (self.beta + 1.0) * self.epsilon + self.m - 3.0 * q,
            k0_residual: self.k0 - k0,
            k_residual: self.k - self.beta.max(self.ystar).max(self.k0),
        }
    }
}

/// `E[η 1(η > y)]` for `y >= 0`.
fn upper_mean(f: &TailLaw, y: f64) -> f64 {
    y * f.tail(y) + f.excess(y)
}

/// Smallest `y >= 0` with `g(y) <= 0` for a nonincreasing `g`.
fn first_nonpositive<G: Fn(f64) -> f64>(g: G) -> Option<f64> {
    if g(0.0) <= 0.0 {
        return Some(0.0);
    }
    let mut hi = expand_until(0.0, |y| g(y) <= 0.0, 1100)?;
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

pub fn iceland_constants(reference: &TailLaw, alpha: f64, beta: f64) -> Result<IcelandConstants> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", "must be finite and > 0"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param("beta", "must be finite and > 0"));
    }
    let q = alpha / 4.0;
    let y1 = first_nonpositive(|y| upper_mean(reference, y) - q).ok_or(Error::NoFiniteYstar)?;
    let y2 = first_nonpositive(|y| beta.max(1.0) * reference.tail(y) - q).ok_or(Error::NoFiniteYstar)?;
    let ystar = y1.max(y2);
    let epsilon = reference.tail(ystar);
    let m = upper_mean(reference, ystar);
    let k0 = if epsilon > 0.0 { m / epsilon + 1.0 } else { 1.0 };
    let k = beta.max(ystar).max(k0);
    let h = |s: f64| s * k * k * (s * k).exp() - q;
    // h(0) < 0 and h(α / 4K²) >= 0.
    let (mut lo, mut hi) = (0.0, q / (k * k));
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Keep the side on which the inequality holds.
    let s = lo;
    Ok(IcelandConstants {
        ystar,
        epsilon,
        m,
        k0,
        k,
        s,
        alpha,
        beta,
    })
}

/// A sequence of increment laws `F_1, F_2, ...` (used cyclically) dominated
/// by a reference law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeFamily {
    pub reference: TailLaw,
    pub laws: Vec<TailLaw>,
}

impl ProbeFamily {
    /// Checks `F̄_n <= F̄` on a probe grid and `E[ξ_n ∨ -β] <= -α`.
    pub fn check(&self, alpha: f64, beta: f64) -> Result<()> {
        if self.laws.is_empty() {
            return Err(Error::param("laws", "family is empty"));
        }
        let probes = probe_grid(&self.reference);
        for (i, law) in self.laws.iter().enumerate() {
            for &y in &probes {
                let (t, r) = (law.tail(y), self.reference.tail(y));
                if t > r * (1.0 + 1e-9) + 1e-300 {
                    return Err(Error::HypothesisViolated {
                        index: i,
                        reason: format!("tail {t:.4e} above the reference {r:.4e} at y = {y}"),
                    });
                }
            }
            let tm = law.truncated_mean(beta);
            if tm > -alpha {
                return Err(Error::HypothesisViolated {
                    index: i,
                    reason: format!("mean truncated at -{beta} is {tm:.6}, above -{alpha}"),
                });
            }
        }
        Ok(())
    }

    /// The family as a walk on a deterministic cycle of states.
    pub fn walk_spec(&self) -> Result<WalkSpec> {
        let n = self.laws.len();
        let transition = (0..n).map(|i| (0..n).map(|j| if j == (i + 1) % n { 1.0 } else { 0.0 }).collect()).collect();
        let mut initial = vec![0.0; n];
        initial[0] = 1.0;
        WalkSpec::new(
            Modulator::finite_markov(transition, Some(initial), 0)?,
            self.laws.clone(),
            self.reference.clone(),
            vec![1.0; n],
        )
    }
}

/// `φ` as a function of the shared uniform's upper-tail rank `q`.
fn phi_of(c: &IcelandConstants, law: &TailLaw, reference: &TailLaw, q: f64) -> f64 {
    if reference.upper_quantile(q) > c.ystar {
        c.k0
    } else {
        law.upper_quantile(q).max(-c.beta)
    }
}

/// Positive root of `E e^{θφ} = 1` for one member of the family.
fn phi_cramer_root(c: &IcelandConstants, law: &TailLaw) -> f64 {
    let eps = c.epsilon;
    let mgf = |t: f64| {
        let body = integrate_with(
            |q| (t * law.upper_quantile(q).max(-c.beta)).exp(),
            eps,
            1.0,
            &[],
            1e-10,
            1e-14,
        )
        .value;
        eps * (t * c.k0).exp() + body - 1.0
    };
    let hi = expand_until(0.0, |t| mgf(t * 1e-3) > 0.0, 200).map(|h| h * 1e-3).unwrap_or(1.0);
    let (mut lo, mut hi) = (hi / 2.0, hi);
    while mgf(lo) > 0.0 && lo > 1e-12 {
        hi = lo;
        lo /= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mgf(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Steps over which the exponential supermartingale is checked.
pub const SUPERMARTINGALE_STEPS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpBoundReport {
    pub constants: IcelandConstants,
    pub n_paths: u64,
    /// Cramér exponent of the bounded walk and the truncation level it implies.
    pub theta: f64,
    pub level: f64,
    pub y_grid: Vec<f64>,
    pub counts: Vec<u64>,
    pub phat: Vec<f64>,
    pub ci_lo: Vec<f64>,
    /// `e^{-s y}`.
    pub bound: Vec<f64>,
    /// Levels whose lower confidence limit exceeds the bound.
    pub violations: usize,
    /// Mean and standard error of `e^{sS_{n+1}} - e^{sS_n}`, `n = 0..50`.
    pub supermartingale: Vec<(f64, f64)>,
    pub supermartingale_ok: bool,
    /// `P̂(M > y) / F̄ᴵ(y)` for the original walk, where at least 20 paths exceed.
    pub ratio: Vec<Option<f64>>,
    /// Largest reliable ratio over the grid.
    pub r_hat: f64,
}

/// Simulates the bounded walk `φ_n = (ξ_n ∨ -β)(1 - δ_n) + K₀ δ_n` coupled to
/// `η_n` through shared uniforms and checks `P(M^φ > y) <= e^{-sy}`.
///
/// `y_grid = None` uses 25 levels from 0 up to the empirical `1 - 10⁻⁴`
/// quantile of `M^φ`.
pub fn exp_bound_probe(
    c: &IcelandConstants,
    family: &ProbeFamily,
    n_paths: u64,
    y_grid: Option<&[f64]>,
    seed: u64,
    workers: usize,
) -> Result<ExpBoundReport> {
    family.check(c.alpha, c.beta)?;
    let r = &family.reference;
    let theta = family
        .laws
        .iter()
        .map(|l| phi_cramer_root(c, l))
        .fold(f64::INFINITY, f64::min);
    let level = 30.0 / theta;
    let nl = family.laws.len();
    let steps = SUPERMARTINGALE_STEPS;

    let parts = run_workers(seed, workers, n_paths, |_, rng, count| {
        let mut sups = Vec::with_capacity(count as usize);
        let mut diff = vec![(0.0f64, 0.0f64); steps];
        for _ in 0..count {
            let (mut s, mut mx) = (0.0f64, 0.0f64);
            let mut n = 0usize;
            let mut prev = 1.0;
            loop {
                let q = open_unit(rng);
                s += phi_of(c, &family.laws[n % nl], r, q);
                n += 1;
                mx = mx.max(s);
                if n <= steps {
                    let e = (c.s * s).exp();
                    let d = e - prev;
                    diff[n - 1].0 += d;
                    diff[n - 1].1 += d * d;
                    prev = e;
                }
                if n >= steps && s <= mx - level {
                    break;
                }
            }
            sups.push(mx);
        }
        Ok((sups, diff))
    })?;
    let mut sups = Vec::with_capacity(n_paths as usize);
    let mut diff = vec![(0.0f64, 0.0f64); steps];
    for (s, d) in parts {
        sups.extend(s);
        for (acc, x) in diff.iter_mut().zip(d) {
            acc.0 += x.0;
            acc.1 += x.1;
        }
    }
    sups.sort_by(f64::total_cmp);
    let nf = n_paths as f64;
    let grid: Vec<f64> = match y_grid {
        Some(g) => g.to_vec(),
        None => {
            let idx = ((1.0 - 1e-4) * nf).floor() as usize;
            let top = sups[idx.min(sups.len() - 1)];
            crate::numeric::linspace(0.0, top, 25)
        }
    };
    let exceed = |v: &[f64], y: f64| (v.len() - v.partition_point(|&m| m <= y)) as u64;
    let counts: Vec<u64> = grid.iter().map(|&y| exceed(&sups, y)).collect();
    let phat: Vec<f64> = counts.iter().map(|&k| k as f64 / nf).collect();
    let ci_lo: Vec<f64> = counts.iter().map(|&k| wilson(k, n_paths).0).collect();
    let bound: Vec<f64> = grid.iter().map(|&y| (-c.s * y).exp()).collect();
    let violations = ci_lo.iter().zip(&bound).filter(|(lo, b)| lo > b).count();
    let supermartingale: Vec<(f64, f64)> = diff
        .iter()
        .map(|&(s1, s2)| {
            let mean = s1 / nf;
            let var = (s2 / nf - mean * mean).max(0.0);
            (mean, (var / nf).sqrt())
        })
        .collect();
    let supermartingale_ok = supermartingale.iter().all(|&(m, se)| m <= Z95 * se + 1e-15);

    // The original walk, for the ratio against F̄ᴵ.
    let spec = family.walk_spec()?;
    let smallest = 1.0 / nf;
    let sampler = DiscreteSampler::new(spec, TruncationRule::for_walk(&family.walk_spec()?, smallest)?)?;
    let parts = run_workers(seed ^ 0x9e37_79b9_7f4a_7c15, workers, n_paths, |_, rng, count| {
        (0..count).map(|_| sampler.sample(rng).map(|d| d.value)).collect::<Result<Vec<f64>>>()
    })?;
    let mut xi_sups: Vec<f64> = parts.into_iter().flatten().collect();
    xi_sups.sort_by(f64::total_cmp);
    let ratio: Vec<Option<f64>> = grid
        .iter()
        .map(|&y| {
            let k = exceed(&xi_sups, y);
            (k >= 20).then(|| k as f64 / nf / r.int_tail(y))
        })
        .collect();
    let r_hat = ratio.iter().flatten().copied().fold(0.0, f64::max);
    Ok(ExpBoundReport {
        constants: *c,
        n_paths,
        theta,
        level,
        y_grid: grid,
        counts,
        phat,
        ci_lo,
        bound,
        violations,
        supermartingale,
        supermartingale_ok,
        ratio,
        r_hat,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SllnReport {
    pub a: f64,
    pub n: u64,
    pub tol: f64,
    /// `S_n / n` per path.
    pub observed: Vec<f64>,
    pub pass: bool,
}

/// `|S_n/n + a| < tol` on each of `paths` independent paths.
pub fn slln_check(spec: &WalkSpec, n: u64, paths: usize, tol: f64, seed: u64) -> Result<SllnReport> {
    let a = drift_constant(spec)?;
    let m = &spec.modulator;
    let observed: Vec<f64> = (0..paths)
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let mut x = m.start(&mut rng);
            let mut s = 0.0;
            for k in 0..n {
                if k > 0 {
                    x = m.next(x, &mut rng);
                }
                s += spec.law_for_state(x).sample(&mut rng);
            }
            s / n as f64
        })
        .collect();
    let pass = observed.iter().all(|v| (v + a).abs() < tol);
    Ok(SllnReport {
        a,
        n,
        tol,
        observed,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// ξ = Pareto(2) - 1.5: mean -0.5, tail (2.5 + y)^-2.
    pub(crate) fn pareto_walk() -> WalkSpec {
        let law = TailLaw::shifted(TailLaw::pareto(2.0, 1.0).unwrap(), -1.5).unwrap();
        WalkSpec::iid(law.clone(), law).unwrap()
    }

    #[test]
    fn path_invariants() {
        let spec = pareto_walk();
        let p = simulate_path(&spec, 500, &mut stream(3, 0));
        assert_eq!(p.sums[0], 0.0);
        assert_eq!(p.len(), 500);
        for i in 1..=500 {
            assert_relative_eq!(p.sums[i], p.sums[i - 1] + p.increments[i - 1]);
            assert_eq!(p.maxima[i], p.maxima[i - 1].max(p.sums[i]));
        }
        let empty = simulate_path(&spec, 0, &mut stream(3, 0));
        assert_eq!(empty.sums, vec![0.0]);
    }

    #[test]
    fn asymptote_at_nine() {
        let spec = pareto_walk();
        assert_relative_eq!(asymptote(&spec, 9.0).unwrap(), 2.0 / 11.5, max_relative = 1e-9);
    }

    #[test]
    fn iceland_pareto_constants() {
        let f = TailLaw::pareto(2.0, 1.0).unwrap();
        let c = iceland_constants(&f, 0.25, 1.0).unwrap();
        // (2t + 1)/(1 + t)^2 = 1/16  <=>  t^2 - 30t - 15 = 0.
        let root = 15.0 + 240f64.sqrt();
        assert_relative_eq!(c.ystar, root, max_relative = 1e-10);
        assert_relative_eq!(c.epsilon, (1.0 + root).powi(-2), max_relative = 1e-9);
        let r = c.residuals();
        assert!(r.tail_mean <= 0.0 && r.tail_mean.abs() < 1e-8);
        assert!(r.tail_prob <= 0.0);
        assert!(r.s_residual <= 0.0 && r.s_residual.abs() < 1e-10);
        assert!(r.drift_margin <= 0.0);
        assert!(c.s > 0.0);
        let looser = iceland_constants(&f, 0.5, 1.0).unwrap();
        assert!(looser.ystar < c.ystar);
    }

    #[test]
    fn series_matches_integrated_tail_for_iid() {
        let spec = pareto_walk();
        for y in [100.0, 1000.0, 5000.0] {
            let s = big_jump_series(&spec, y, 0.0).unwrap();
            let r = s / asymptote(&spec, y).unwrap();
            assert!((r - 1.0).abs() < 0.02, "y={y} ratio {r}");
        }
        assert_eq!(big_jump_series(&spec, 1e300, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn series_light_tail_direct() {
        // ξ = Exp(1) - 2, a = 1: Σ_n e^{-(y + n + 2)}.
        let law = TailLaw::exponential(1.0).unwrap();
        let spec = WalkSpec::iid(TailLaw::shifted(law.clone(), -2.0).unwrap(), law).unwrap();
        let y = 3.0;
        let s = big_jump_series(&spec, y, 0.0).unwrap();
        let s_dom = (-(y + 3.0)).exp() / (1.0 - (-1.0f64).exp());
        assert_relative_eq!(s, s_dom, max_relative = 1e-10);
    }

    #[test]
    fn slln_unmodulated() {
        let spec = pareto_walk();
        let r = slln_check(&spec, 200_000, 2, 0.05, 1).unwrap();
        assert!(r.pass, "{:?}", r.observed);
        assert!(slln_check(&spec, 10, 2, f64::INFINITY, 1).unwrap().pass);
    }
}
