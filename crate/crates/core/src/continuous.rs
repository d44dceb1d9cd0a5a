//! Continuous-time modulated walk driven by per-state Lévy triples.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::discrete::{truncation_coef, SllnReport, MIN_LEVEL};
use crate::error::{Error, Result};
use crate::levy::{LevyMeasure, SideMeasure};
use crate::modulation::{
    check_classes, default_beta_grid, drift_constant, kappa, weight_constant, Modulated, Modulator, StateSampler,
};
use crate::numeric::geomspace;
use crate::rng::{stream, Stream};
use crate::sampler::{level_for, SupSample, SupremumSampler, TruncationRule, DEFAULT_TARGET_FRACTION};
use crate::tail_laws::open_unit;
use crate::verdict::{class_verdict, ClassVerdict, DEFAULT_TOLERANCE};

/// `(ν, v², a)`: jump intensity, diffusion variance rate and mean drift rate,
/// so that `E S_t = a t` for a single state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyTriple {
    pub nu: LevyMeasure,
    #[serde(default)]
    pub v2: f64,
    pub a: f64,
}

impl LevyTriple {
    pub fn new(nu: LevyMeasure, v2: f64, a: f64) -> Result<Self> {
        let t = LevyTriple { nu, v2, a };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v2 >= 0.0 && self.v2.is_finite()) {
            return Err(Error::param("v2", "must be finite and >= 0"));
        }
        if !self.a.is_finite() {
            return Err(Error::param("a", "must be finite"));
        }
        Ok(())
    }

    /// `a^β = a + ∫_β^∞ ν((-∞, -z]) dz`.
    pub fn truncated_drift(&self, beta: f64) -> f64 {
        self.a + self.nu.neg_shortfall(beta)
    }

    /// Threshold below which small jumps on the infinite-activity sides
    /// carry at most 1% of `v² + γ` as Gaussian variance.
    pub fn default_threshold(&self) -> f64 {
        let total = self.v2 + self.nu.gamma_bound();
        let small = |d: f64| self.nu.pos.second_moment_below(d) * infinite(&self.nu.pos)
            + self.nu.neg.second_moment_below(d) * infinite(&self.nu.neg);
        if total == 0.0 || small(1.0) <= 0.01 * total {
            return 1.0;
        }
        let mut d = 1.0;
        while small(d) > 0.01 * total && d > 1e-12 {
            d *= 0.5;
        }
        d
    }
}

fn infinite(s: &SideMeasure) -> f64 {
    if s.total().is_finite() {
        0.0
    } else {
        1.0
    }
}

/// How long the background process stays in each state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sojourn {
    Deterministic { length: f64 },
    Exponential { mean: f64 },
}

impl Default for Sojourn {
    fn default() -> Self {
        Sojourn::Deterministic { length: 1.0 }
    }
}

impl Sojourn {
    pub fn mean(&self) -> f64 {
        match *self {
            Sojourn::Deterministic { length } => length,
            Sojourn::Exponential { mean } => mean,
        }
    }

    fn validate(&self) -> Result<()> {
        let m = self.mean();
        if m.is_finite() && m > 0.0 {
            Ok(())
        } else {
            Err(Error::param("sojourn", "length must be finite and > 0"))
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Sojourn::Deterministic { length } => length,
            Sojourn::Exponential { mean } => -mean * open_unit(rng).ln(),
        }
    }
}

/// Continuous-time walk: one triple per class on a modulator embedded in
/// time through i.i.d. sojourns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtsSpec {
    pub modulator: Modulator,
    pub triples: Vec<LevyTriple>,
    pub reference: LevyMeasure,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub sojourn: Sojourn,
}

impl CtsSpec {
    pub fn new(
        modulator: Modulator,
        triples: Vec<LevyTriple>,
        reference: LevyMeasure,
        weights: Vec<f64>,
        sojourn: Sojourn,
    ) -> Result<Self> {
        let s = CtsSpec {
            modulator,
            triples,
            reference,
            weights,
            sojourn,
        };
        s.validate()?;
        Ok(s)
    }

    /// Unmodulated process whose own measure is the reference.
    pub fn single(triple: LevyTriple) -> Result<Self> {
        let reference = triple.nu.clone();
        CtsSpec::new(
            Modulator::finite_markov(vec![vec![1.0]], None, 0)?,
            vec![triple],
            reference,
            vec![1.0],
            Sojourn::default(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        check_classes(&self.modulator, self.triples.len(), &self.weights)?;
        self.sojourn.validate()?;
        for t in &self.triples {
            t.validate()?;
        }
        self.check_domination()
    }

    /// `ν̄_x(y) <= ν̄(y)` on a probe grid of positive levels.
    pub fn check_domination(&self) -> Result<()> {
        for (i, t) in self.triples.iter().enumerate() {
            for y in geomspace(1e-3, 1e9, 600) {
                let (v, r) = (t.nu.pos.tail(y), self.reference.pos.tail(y));
                if v > r * (1.0 + 1e-9) + 1e-300 {
                    return Err(Error::config(
                        format!("triples[{i}].nu"),
                        format!("tail {v:.6e} exceeds the reference tail {r:.6e} at y = {y}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Per-class traces of `ν̄ᴵ_x(y) / ν̄ᴵ(y)` against `c_x`.
    pub fn check_weights(&self, levels: &[f64]) -> Vec<ClassVerdict> {
        self.triples
            .iter()
            .zip(&self.weights)
            .map(|(t, &c)| {
                let trace = levels
                    .iter()
                    .map(|&y| (y, t.nu.pos.excess(y) / self.reference.pos.excess(y)))
                    .collect();
                class_verdict(trace, c, DEFAULT_TOLERANCE)
            })
            .collect()
    }

    /// `sup_x γ_x` and `sup_x v_x²`.
    pub fn uniform_bounds(&self) -> (f64, f64) {
        let g = self.triples.iter().map(|t| t.nu.gamma_bound()).fold(0.0, f64::max);
        let v = self.triples.iter().map(|t| t.v2).fold(0.0, f64::max);
        (g, v)
    }

    pub fn mean_cycle_time(&self) -> f64 {
        self.modulator.mean_cycle() * self.sojourn.mean()
    }

}

impl Modulated for CtsSpec {
    fn modulator(&self) -> &Modulator {
        &self.modulator
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
    fn class_means(&self) -> Vec<f64> {
        self.triples.iter().map(|t| t.a).collect()
    }
    fn class_truncated_means(&self, beta: f64) -> Vec<f64> {
        self.triples.iter().map(|t| t.truncated_drift(beta)).collect()
    }
}

/// Per-class simulation parameters at a jump threshold.
#[derive(Debug, Clone, Copy)]
struct ClassSim {
    /// Rates of simulated jumps on each side.
    rate_pos: f64,
    rate_neg: f64,
    thr_pos: f64,
    thr_neg: f64,
    /// Drift of the continuous part, `a_x` minus the compensator of the
    /// simulated jumps.
    drift: f64,
    /// Gaussian variance rate: `v²` plus the small-jump variance.
    var: f64,
    a: f64,
}

impl ClassSim {
    /// Jumps above `delta` in size are simulated on infinite-activity sides;
    /// finite-activity sides are simulated jump by jump.
    fn exact(t: &LevyTriple, delta: f64) -> Self {
        let thr = |s: &SideMeasure| if s.total().is_finite() { 0.0 } else { delta };
        Self::at(t, thr(&t.nu.pos), thr(&t.nu.neg))
    }

    fn at(t: &LevyTriple, thr_pos: f64, thr_neg: f64) -> Self {
        let (p, n) = (&t.nu.pos, &t.nu.neg);
        let comp = p.first_moment_above(thr_pos) - n.first_moment_above(thr_neg);
        ClassSim {
            rate_pos: p.tail(thr_pos),
            rate_neg: n.tail(thr_neg),
            thr_pos,
            thr_neg,
            drift: t.a - comp,
            var: t.v2 + p.second_moment_below(thr_pos) + n.second_moment_below(thr_neg),
            a: t.a,
        }
    }

    fn rate(&self) -> f64 {
        self.rate_pos + self.rate_neg
    }

    fn jump<R: Rng + ?Sized>(&self, t: &LevyTriple, rng: &mut R) -> f64 {
        if rng.random::<f64>() * self.rate() < self.rate_pos {
            t.nu.pos.sample_beyond(self.thr_pos, rng)
        } else {
            -t.nu.neg.sample_beyond(self.thr_neg, rng)
        }
    }
}

/// Gaussian move over `dt` and the maximum of its Brownian bridge above the
/// starting point.
#[inline]
fn diffuse<R: Rng + ?Sized>(drift: f64, var: f64, dt: f64, rng: &mut R) -> (f64, f64) {
    if var <= 0.0 {
        let x = drift * dt;
        return (x, x.max(0.0));
    }
    let z: f64 = rng.sample(StandardNormal);
    let x = drift * dt + (var * dt).sqrt() * z;
    let top = 0.5 * (x + (x * x - 2.0 * var * dt * open_unit(rng).ln()).sqrt());
    (x, top)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub size: f64,
    pub state: usize,
}

/// A simulated stretch of `S_t = A_t + W_t + Y_t` on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtsPath {
    pub horizon: f64,
    pub jumps: Vec<JumpEvent>,
    /// `(start time, state)` of each sojourn.
    pub segments: Vec<(f64, usize)>,
    /// `(t, S_t)` at grid points, jump times (after the jump) and the horizon.
    pub skeleton: Vec<(f64, f64)>,
    /// `A_t`, `W_t` (with the Gaussian small-jump part) and the compensated
    /// simulated jumps `Y_t`, at the horizon.
    pub drift_part: f64,
    pub gaussian_part: f64,
    pub jump_part: f64,
    /// Supremum over `[0, horizon]`, bridge maxima included.
    pub supremum: f64,
}

impl CtsPath {
    pub fn terminal(&self) -> f64 {
        self.skeleton.last().map(|p| p.1).unwrap_or(0.0)
    }
}

fn class_sims(spec: &CtsSpec, delta: f64) -> Vec<ClassSim> {
    spec.triples.iter().map(|t| ClassSim::exact(t, delta)).collect()
}

/// Finest grid the jump clock allows: at most one simulated jump per cell
/// on average.
fn grid_bound(sims: &[ClassSim]) -> f64 {
    let r = sims.iter().map(ClassSim::rate).fold(0.0, f64::max);
    if r > 0.0 {
        1.0 / r
    } else {
        f64::INFINITY
    }
}

pub fn simulate_cts_path<R: Rng + ?Sized>(
    spec: &CtsSpec,
    horizon: f64,
    delta: f64,
    grid_dt: f64,
    rng: &mut R,
) -> Result<CtsPath> {
    if !(delta > 0.0) {
        return Err(Error::NonPositiveThreshold(delta));
    }
    if !(grid_dt > 0.0) {
        return Err(Error::param("grid_dt", "must be > 0"));
    }
    let sims = class_sims(spec, delta);
    let bound = grid_bound(&sims);
    if grid_dt > bound {
        return Err(Error::GridTooCoarse { grid_dt, bound });
    }
    let m = &spec.modulator;
    let nc = spec.triples.len();
    let mut p = CtsPath {
        horizon,
        jumps: vec![],
        segments: vec![],
        skeleton: vec![(0.0, 0.0)],
        drift_part: 0.0,
        gaussian_part: 0.0,
        jump_part: 0.0,
        supremum: 0.0,
    };
    let (mut t, mut s) = (0.0f64, 0.0f64);
    let mut x = m.start(rng);
    let mut first = true;
    let mut cell = 1u64;
    while t < horizon {
        if !first {
            x = m.next(x, rng);
        }
        first = false;
        let c = m.class_of(x, nc);
        let (cs, tri) = (&sims[c], &spec.triples[c]);
        p.segments.push((t, x));
        let seg_end = (t + spec.sojourn.sample(rng)).min(horizon);
        let rate = cs.rate();
        let mut next_jump = if rate > 0.0 { t - open_unit(rng).ln() / rate } else { f64::INFINITY };
        while t < seg_end {
            while cell as f64 * grid_dt <= t {
                cell += 1;
            }
            let next_grid = cell as f64 * grid_dt;
            let stop = next_jump.min(next_grid).min(seg_end);
            let dt = stop - t;
            let (dx, top) = diffuse(cs.drift, cs.var, dt, rng);
            p.supremum = p.supremum.max(s + top);
            p.drift_part += cs.a * dt;
            p.gaussian_part += dx - cs.drift * dt;
            p.jump_part -= (cs.a - cs.drift) * dt;
            s += dx;
            t = stop;
            if stop == next_jump {
                let j = cs.jump(tri, rng);
                s += j;
                p.jump_part += j;
                p.supremum = p.supremum.max(s);
                p.jumps.push(JumpEvent { time: t, size: j, state: x });
                next_jump = t - open_unit(rng).ln() / rate;
            }
            p.skeleton.push((t, s));
        }
    }
    Ok(p)
}

const CTS_LEVELS: usize = 160;

/// Accelerated far phase for the continuous walk: jumps of size above
/// `u_k = entry * cap * 2^{k/2}` are drawn exactly at the largest per-class
/// rate with thinning; everything else moves as a Gaussian block.
#[derive(Debug, Clone)]
struct CtsFar {
    entry: f64,
    /// Per `k`: (mean rate, variance rate, thinning rate, per-class sims).
    levels: Vec<Option<(f64, f64, f64, Vec<ClassSim>)>>,
    class_cum: Vec<f64>,
    states: StateSampler,
}

impl CtsFar {
    fn build(spec: &CtsSpec, entry: f64, cap_ratio: f64) -> Result<Option<Self>> {
        match kappa(spec, &default_beta_grid()) {
            Ok(k) if k.kappa < 0.0 => {}
            _ => return Ok(None),
        }
        let probs = spec.class_probs();
        let nc = spec.triples.len();
        let occ = spec.modulator.cycle_occupancy(nc, 20_000, &mut stream(0x6374_7366, 0))?;
        let h = spec.sojourn.mean();
        let exp_sojourn = matches!(spec.sojourn, Sojourn::Exponential { .. });
        let mean_time = spec.mean_cycle_time();
        let mut levels = Vec::with_capacity(CTS_LEVELS);
        for k in 0..CTS_LEVELS {
            let u = entry * cap_ratio * 2f64.powf(k as f64 / 2.0);
            let sims: Vec<ClassSim> = spec.triples.iter().map(|t| ClassSim::at(t, u, u)).collect();
            let mu: f64 = probs.iter().zip(&sims).map(|(w, c)| w * c.drift).sum();
            let within: f64 = probs.iter().zip(&sims).map(|(w, c)| w * c.var).sum();
            let d: Vec<f64> = sims.iter().map(|c| c.drift - mu).collect();
            let between = occ
                .iter()
                .map(|n| {
                    let lin: f64 = n.iter().zip(&d).map(|(&k, d)| k as f64 * d).sum();
                    let mut v = lin * lin;
                    if exp_sojourn {
                        v += n.iter().zip(&d).map(|(&k, d)| k as f64 * d * d).sum::<f64>();
                    }
                    h * h * v
                })
                .sum::<f64>()
                / occ.len() as f64
                / mean_time;
            let lmax = sims.iter().map(ClassSim::rate).fold(0.0, f64::max);
            let ok = mu < 0.0 && mu.is_finite() && within.is_finite() && between.is_finite();
            levels.push(ok.then_some((mu, within + between, lmax, sims)));
        }
        let mut c = 0.0;
        let class_cum = probs
            .iter()
            .map(|p| {
                c += p;
                c
            })
            .collect();
        Ok(Some(CtsFar {
            entry,
            levels,
            class_cum,
            states: spec.modulator.stationary_sampler(),
        }))
    }

    fn class<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.class_cum[self.class_cum.len() - 1];
        self.class_cum.partition_point(|&c| c <= u).min(self.class_cum.len() - 1)
    }

    fn run(
        &self,
        spec: &CtsSpec,
        rule: &TruncationRule,
        s: &mut f64,
        mx: &mut f64,
        t: &mut f64,
        rng: &mut Stream,
    ) -> Result<bool> {
        let done = |s: f64, mx: f64, t: f64| t >= rule.min_steps && s <= mx - rule.level;
        'outer: loop {
            let d0 = *mx - *s;
            if d0 < self.entry {
                return Ok(false);
            }
            // Largest grid threshold not above cap * depth.
            let k = ((2.0 * (d0 / self.entry).log2()).floor().max(0.0) as usize).min(CTS_LEVELS - 1);
            let Some((mu, var, lmax, sims)) = &self.levels[k] else {
                return Ok(false);
            };
            let mut remaining = if *lmax > 0.0 { -open_unit(rng).ln() / lmax } else { f64::INFINITY };
            while remaining > 0.0 {
                let depth = *mx - *s;
                if depth < self.entry {
                    return Ok(false);
                }
                if depth < 0.5 * d0 || depth > 2.0 * d0 {
                    continue 'outer;
                }
                let g = if *var > 0.0 {
                    ((0.25 * depth).powi(2) / var).max(1e-9).min(remaining)
                } else {
                    // Pure drift: go straight to the stopping depth.
                    ((*s - (*mx - rule.level)) / -mu + 1e-9).min(remaining)
                };
                let (dx, top) = diffuse(*mu, *var, g, rng);
                *mx = mx.max(*s + top);
                *s += dx;
                *t += g;
                remaining -= g;
                if done(*s, *mx, *t) {
                    return Ok(true);
                }
                if *t > rule.cap {
                    return Err(Error::HorizonCapExceeded(rule.cap));
                }
            }
            let c = self.class(rng);
            let cs = &sims[c];
            if rng.random::<f64>() * lmax < cs.rate() {
                *s += cs.jump(&spec.triples[c], rng);
                *mx = mx.max(*s);
                if done(*s, *mx, *t) {
                    return Ok(true);
                }
            }
        }
    }
}

/// Draws the all-time supremum of a continuous walk.
#[derive(Debug, Clone)]
pub struct CtsSampler {
    spec: CtsSpec,
    rule: TruncationRule,
    delta: f64,
    sims: Vec<ClassSim>,
    bias_bound: f64,
    far: Option<CtsFar>,
}

impl TruncationRule {
    /// Time-based analogue of [`TruncationRule::for_walk`]: `t_min` is ten
    /// mean cycle times.
    pub fn for_cts(spec: &CtsSpec, smallest_target: f64) -> Result<Self> {
        let a = drift_constant(spec)?;
        let coef = truncation_coef(weight_constant(spec), a);
        let level = level_for(coef, |l| spec.reference.pos.excess(l), DEFAULT_TARGET_FRACTION * smallest_target)
            .max(MIN_LEVEL);
        Ok(TruncationRule::new(level, 10.0 * spec.mean_cycle_time()))
    }
}

impl CtsSampler {
    /// `grid_dt` is validated against the jump clock; the sampler itself is
    /// event driven and uses exact bridge maxima between events.
    pub fn new(spec: CtsSpec, rule: TruncationRule, delta: f64, grid_dt: f64) -> Result<Self> {
        spec.validate()?;
        let a = drift_constant(&spec)?;
        if !(delta > 0.0) {
            return Err(Error::NonPositiveThreshold(delta));
        }
        if !(rule.level > 0.0) {
            return Err(Error::param("level", "truncation level must be positive"));
        }
        let sims = class_sims(&spec, delta);
        let bound = grid_bound(&sims);
        if !(grid_dt > 0.0) || grid_dt > bound {
            return Err(Error::GridTooCoarse { grid_dt, bound });
        }
        let coef = truncation_coef(weight_constant(&spec), a);
        let bias_bound = coef * spec.reference.pos.excess(rule.level) * rule.safety;
        let far = match rule.skip {
            Some(sk) => CtsFar::build(&spec, sk.entry_depth, sk.cap_ratio)?,
            None => None,
        };
        Ok(CtsSampler {
            spec,
            rule,
            delta,
            sims,
            bias_bound,
            far,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn accelerated(&self) -> bool {
        self.far.is_some()
    }
}

impl SupremumSampler for CtsSampler {
    fn sample(&self, rng: &mut Stream) -> Result<SupSample> {
        let m = &self.spec.modulator;
        let rule = &self.rule;
        let nc = self.spec.triples.len();
        let (mut s, mut mx, mut t) = (0.0f64, 0.0f64, 0.0f64);
        let mut x = m.start(rng);
        let done = |s: f64, mx: f64, t: f64| t >= rule.min_steps && s <= mx - rule.level;
        'segments: loop {
            let c = m.class_of(x, nc);
            let (cs, tri) = (&self.sims[c], &self.spec.triples[c]);
            let mut rem = self.spec.sojourn.sample(rng);
            let rate = cs.rate();
            loop {
                let w = if rate > 0.0 { -open_unit(rng).ln() / rate } else { f64::INFINITY };
                let dt = w.min(rem);
                let (dx, top) = diffuse(cs.drift, cs.var, dt, rng);
                mx = mx.max(s + top);
                s += dx;
                t += dt;
                let jumped = w < rem;
                if jumped {
                    s += cs.jump(tri, rng);
                    mx = mx.max(s);
                    rem -= w;
                }
                if done(s, mx, t) {
                    break 'segments;
                }
                if t > rule.cap {
                    return Err(Error::HorizonCapExceeded(rule.cap));
                }
                if let Some(f) = &self.far {
                    if mx - s >= f.entry {
                        if f.run(&self.spec, rule, &mut s, &mut mx, &mut t, rng)? {
                            break 'segments;
                        }
                        x = f.states.sample(rng);
                        continue 'segments;
                    }
                }
                if !jumped {
                    break;
                }
            }
            x = m.next(x, rng);
        }
        Ok(SupSample {
            value: mx,
            stopped_at: t,
        })
    }

    fn bias_bound(&self) -> f64 {
        self.bias_bound
    }
}

/// One truncated supremum draw; returns `(M, bias_bound)`.
pub fn sample_cts_supremum(
    spec: &CtsSpec,
    rule: TruncationRule,
    delta: f64,
    grid_dt: f64,
    rng: &mut Stream,
) -> Result<(f64, f64)> {
    let s = CtsSampler::new(spec.clone(), rule, delta, grid_dt)?;
    Ok((s.sample(rng)?.value, s.bias_bound()))
}

/// `(C/a) ν̄ᴵ(y)` for `y > 0`.
pub fn cts_asymptote(spec: &CtsSpec, y: f64) -> Result<f64> {
    let a = drift_constant(spec)?;
    Ok(weight_constant(spec) / a * spec.reference.nu_int_tail(y)?)
}

/// Level `y*` and exponent `s` of the bounded-jump construction in
/// continuous time.
pub fn cts_iceland_s(nu: &LevyMeasure, alpha: f64, beta: f64, gamma: f64, v2: f64, epsilon: f64) -> Result<(f64, f64)> {
    if !(epsilon > 0.0 && epsilon < alpha / 2.0) {
        return Err(Error::EpsilonOutOfRange {
            epsilon,
            half_alpha: alpha / 2.0,
        });
    }
    for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma), ("v2", v2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, "must be finite and > 0"));
        }
    }
    // Smallest y* with ν̄(y*) <= ε.
    let g = |y: f64| nu.pos.tail(y) - epsilon;
    let mut hi = 1.0;
    while g(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::NoFiniteYstar);
        }
    }
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
    let ystar = hi;
    let k = ystar.max(beta).max(1.0);
    let h = |s: f64| -alpha + 2.0 * epsilon + s * (beta * beta * gamma / 2.0 + (s * k).exp() * k * k * gamma + v2 / 2.0);
    let (mut lo, mut hi) = (0.0, alpha / (k * k * gamma + beta * beta * gamma / 2.0 + v2 / 2.0));
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
    Ok((ystar, lo))
}

const INTEGRAL_DIRECT_MAX: usize = 1_000_000;

/// `∫_0^∞ Σ_x π_t(x) ν̄_x(y + a t) dt`.
///
/// With deterministic sojourns on a finite chain `π_t` is the exact marginal
/// of the state held over `[nh, (n+1)h)`, and each piece integrates in closed
/// form through `ν̄ᴵ_x`; the remainder after a million pieces, and every other
/// case, uses `π`.
pub fn cts_big_jump_integral(spec: &CtsSpec, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::NonPositiveLevel(y));
    }
    let a = drift_constant(spec)?;
    let m = &spec.modulator;
    let pi = spec.class_probs();
    let it = |w: &[f64], z: f64| -> f64 {
        w.iter()
            .zip(&spec.triples)
            .map(|(w, t)| if *w > 0.0 { w * t.nu.pos.excess(z) } else { 0.0 })
            .sum()
    };
    let h = match (spec.sojourn, m) {
        (Sojourn::Deterministic { length }, Modulator::FiniteMarkov(_)) => length,
        (Sojourn::Deterministic { .. }, Modulator::Countdown(_)) if m.period() > 1 => {
            return Err(Error::PeriodicModulator(m.period()));
        }
        _ => return Ok(it(&pi, y) / a),
    };
    let mut law = m.marginal(1).unwrap();
    let mut sum = 0.0;
    let mut n = 0usize;
    while n < INTEGRAL_DIRECT_MAX {
        let z0 = y + a * h * n as f64;
        let piece = (it(&law, z0) - it(&law, z0 + a * h)) / a;
        sum += piece;
        n += 1;
        // Every class at full weight bounds what is left.
        let left = it(&vec![1.0; spec.triples.len()], z0 + a * h) / a;
        if left <= 1e-13 * sum || left == 0.0 {
            return Ok(sum);
        }
        law = m.step_marginal(&law).unwrap();
    }
    Ok(sum + it(&pi, y + a * h * n as f64) / a)
}

/// `|S_t / t + a| < tol` on each of `paths` independent paths.
pub fn cts_slln_check(spec: &CtsSpec, horizon: f64, paths: usize, tol: f64, delta: f64, seed: u64) -> Result<SllnReport> {
    let a = drift_constant(spec)?;
    if !(delta > 0.0) {
        return Err(Error::NonPositiveThreshold(delta));
    }
    let sims = class_sims(spec, delta);
    let m = &spec.modulator;
    let nc = spec.triples.len();
    let observed = (0..paths)
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let (mut t, mut s) = (0.0f64, 0.0f64);
            let mut x = m.start(&mut rng);
            let mut first = true;
            while t < horizon {
                if !first {
                    x = m.next(x, &mut rng);
                }
                first = false;
                let c = m.class_of(x, nc);
                let (cs, tri) = (&sims[c], &spec.triples[c]);
                let dt = spec.sojourn.sample(&mut rng).min(horizon - t);
                let z: f64 = rng.sample(StandardNormal);
                s += cs.drift * dt + (cs.var * dt).sqrt() * z;
                // Poisson count of simulated jumps over the sojourn.
                let rate = cs.rate();
                if rate > 0.0 {
                    let mut u = -open_unit(&mut rng).ln() / rate;
                    while u < dt {
                        s += cs.jump(tri, &mut rng);
                        u -= open_unit(&mut rng).ln() / rate;
                    }
                }
                t += dt;
            }
            s / horizon
        })
        .collect::<Vec<f64>>();
    let pass = observed.iter().all(|v| (v + a).abs() < tol);
    Ok(SllnReport {
        a,
        n: horizon as u64,
        tol,
        observed,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tail_laws::TailLaw;
    use approx::assert_relative_eq;

    pub(crate) fn pareto_single() -> CtsSpec {
        CtsSpec::single(LevyTriple::new(LevyMeasure::pareto_tail(2.0, 1.0, 1.0).unwrap(), 0.0, -0.5).unwrap()).unwrap()
    }

    #[test]
    fn asymptote_at_twenty() {
        assert_relative_eq!(cts_asymptote(&pareto_single(), 20.0).unwrap(), 0.1, max_relative = 1e-12);
        assert!(cts_asymptote(&pareto_single(), 0.0).is_err());
    }

    #[test]
    fn iceland_s_examples() {
        let nu = LevyMeasure::pareto_tail(2.0, 1.0, 1.0).unwrap();
        let (ystar, s) = cts_iceland_s(&nu, 0.25, 1.0, 1.0, 0.5, 0.04).unwrap();
        assert_relative_eq!(ystar, 5.0, max_relative = 1e-12);
        let k = 5.0f64;
        let res = -0.25 + 0.08 + s * (0.5 + (s * k).exp() * k * k + 0.25);
        assert!(res.abs() < 1e-10, "{res}");
        let (_, s2) = cts_iceland_s(&nu, 0.25, 1.0, 1.0, 2.0, 0.04).unwrap();
        assert!(s2 < s);
        assert!(matches!(cts_iceland_s(&nu, 0.25, 1.0, 1.0, 0.5, 0.2), Err(Error::EpsilonOutOfRange { .. })));
    }

    #[test]
    fn big_jump_integral_single_state_identity() {
        let spec = pareto_single();
        for y in [2.0, 20.0, 300.0] {
            let v = cts_big_jump_integral(&spec, y).unwrap();
            assert_relative_eq!(v, spec.reference.pos.excess(y) / 0.5, max_relative = 1e-6);
        }
        let cp = CtsSpec::single(
            LevyTriple::new(LevyMeasure::compound_poisson(1.0, TailLaw::point_mixture(vec![1.0], vec![1.0]).unwrap()).unwrap(), 0.0, -1.0)
                .unwrap(),
        )
        .unwrap();
        assert_eq!(cts_big_jump_integral(&cp, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn zero_activity_supremum_is_zero() {
        let spec = CtsSpec::single(LevyTriple::new(LevyMeasure::zero(), 0.0, -1.0).unwrap()).unwrap();
        let s = CtsSampler::new(spec, TruncationRule::new(10.0, 1.0), 0.1, 0.1).unwrap();
        let mut rng = stream(1, 0);
        for _ in 0..100 {
            assert_eq!(s.sample(&mut rng).unwrap().value, 0.0);
        }
    }

    #[test]
    fn path_decomposes() {
        let spec = pareto_single();
        let p = simulate_cts_path(&spec, 50.0, 0.1, 0.05, &mut stream(4, 0)).unwrap();
        assert_relative_eq!(p.terminal(), p.drift_part + p.gaussian_part + p.jump_part, max_relative = 1e-9);
        assert_relative_eq!(p.drift_part, -25.0, max_relative = 1e-12);
        let jumps: f64 = p.jumps.iter().map(|j| j.size).sum();
        // Compensator of a unit-rate Pareto(2) jump stream is 2 per unit time.
        assert_relative_eq!(p.jump_part, jumps - 100.0, max_relative = 1e-9);
        assert!(p.supremum >= p.skeleton.iter().map(|q| q.1).fold(0.0, f64::max));
        assert!(matches!(
            simulate_cts_path(&spec, 1.0, 0.1, 2.0, &mut stream(4, 0)),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn default_threshold_small_variance() {
        let nu = LevyMeasure::two_sided(SideMeasure::PowerLaw { alpha: 1.5, mass: 1.0 }, SideMeasure::Zero).unwrap();
        let t = LevyTriple::new(nu, 0.0, -1.0).unwrap();
        let d = t.default_threshold();
        assert!(t.nu.pos.second_moment_below(d) <= 0.01 * t.nu.gamma_bound());
        let finite = LevyTriple::new(LevyMeasure::pareto_tail(2.0, 1.0, 1.0).unwrap(), 0.0, -1.0).unwrap();
        assert_eq!(finite.default_threshold(), 1.0);
    }
}
