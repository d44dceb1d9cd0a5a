//! Regenerative background processes and the walk specification built on them.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::LevyMeasure;
use crate::numeric::gcd;
use crate::tail_laws::TailLaw;
use crate::verdict::{classify, ClassVerdict, Verdict, DEFAULT_TOLERANCE};

pub const DEFAULT_CYCLE_CAP: u64 = 100_000_000;
/// Largest number of explicit states kept when tabulating a countable
/// stationary law.
pub const STATE_TABLE_CAP: usize = 1 << 20;

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ModulatorRepr {
    FiniteMarkov {
        transition: Vec<Vec<f64>>,
        #[serde(default)]
        initial: Option<Vec<f64>>,
        #[serde(default)]
        regen: usize,
    },
    /// From state 0 jump to `J = max(1, ceil(Z))`, then count down to 1.
    Countdown { jump: TailLaw },
}

/// Background process with a regeneration structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModulatorRepr", into = "ModulatorRepr")]
pub enum Modulator {
    FiniteMarkov(FiniteMarkov),
    Countdown(Countdown),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMarkov {
    transition: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
    initial: Vec<f64>,
    initial_given: bool,
    regen: usize,
    stationary: Vec<f64>,
    period: u64,
    // Successor of states whose row is a point mass.
    forced: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Countdown {
    jump: TailLaw,
    mean_cycle: f64,
    period: u64,
}

impl TryFrom<ModulatorRepr> for Modulator {
    type Error = Error;
    fn try_from(r: ModulatorRepr) -> Result<Self> {
        match r {
            ModulatorRepr::FiniteMarkov {
                transition,
                initial,
                regen,
            } => Modulator::finite_markov(transition, initial, regen),
            ModulatorRepr::Countdown { jump } => Modulator::countdown(jump),
        }
    }
}

impl From<Modulator> for ModulatorRepr {
    fn from(m: Modulator) -> Self {
        match m {
            Modulator::FiniteMarkov(f) => ModulatorRepr::FiniteMarkov {
                transition: f.transition,
                initial: f.initial_given.then_some(f.initial),
                regen: f.regen,
            },
            Modulator::Countdown(c) => ModulatorRepr::Countdown { jump: c.jump },
        }
    }
}

/// One inter-regeneration stretch of the background process.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclePath {
    pub states: Vec<usize>,
    pub length: u64,
    pub is_initial: bool,
}

fn markov_period(p: &[Vec<f64>]) -> u64 {
    // gcd over edges of level(i) + 1 - level(j) from a BFS tree.
    let n = p.len();
    let mut level = vec![u64::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut g = 0u64;
    while let Some(i) = queue.pop_front() {
        for j in 0..n {
            if p[i][j] > 0.0 {
                if level[j] == u64::MAX {
                    level[j] = level[i] + 1;
                    queue.push_back(j);
                } else {
                    g = gcd(g, (level[i] + 1).abs_diff(level[j]));
                }
            }
        }
    }
    g.max(1)
}

fn strongly_connected(p: &[Vec<f64>]) -> bool {
    let n = p.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { p[i][j] } else { p[j][i] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

impl Modulator {
    pub fn finite_markov(transition: Vec<Vec<f64>>, initial: Option<Vec<f64>>, regen: usize) -> Result<Self> {
        let n = transition.len();
        if n == 0 {
            return Err(Error::param("transition", "matrix is empty"));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(Error::param("transition", format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::param("transition", format!("row {i} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::param("transition", format!("row {i} sums to {s}")));
            }
        }
        if regen >= n {
            return Err(Error::param("regen", format!("state {regen} out of range")));
        }
        if !strongly_connected(&transition) {
            return Err(Error::NotIrreducible(format!("{n}-state chain has unreachable states")));
        }
        let initial_given = initial.is_some();
        let initial = match initial {
            Some(v) => {
                if v.len() != n || v.iter().any(|x| !(*x >= 0.0)) || (v.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(Error::param("initial", "must be a probability vector over the states"));
                }
                v
            }
            None => {
                let mut v = vec![0.0; n];
                v[regen] = 1.0;
                v
            }
        };
        // Solve π (P - I) = 0 with the last equation replaced by Σπ = 1.
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(j, i)] = transition[i][j] - if i == j { 1.0 } else { 0.0 };
            }
        }
        let mut rhs = DVector::<f64>::zeros(n);
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        rhs[n - 1] = 1.0;
        let pi = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NotIrreducible("stationary system is singular".into()))?;
        let stationary: Vec<f64> = pi.iter().map(|v| v.max(0.0)).collect();
        let cumulative = transition
            .iter()
            .map(|row| {
                let mut c = 0.0;
                row.iter()
                    .map(|v| {
                        c += v;
                        c
                    })
                    .collect()
            })
            .collect();
        let period = markov_period(&transition);
        let forced = transition
            .iter()
            .map(|row| {
                let mut nz = row.iter().enumerate().filter(|(_, v)| **v > 0.0);
                match (nz.next(), nz.next()) {
                    (Some((j, _)), None) => Some(j),
                    _ => None,
                }
            })
            .collect();
        Ok(Modulator::FiniteMarkov(FiniteMarkov {
            forced,
            transition,
            cumulative,
            initial,
            initial_given,
            regen,
            stationary,
            period,
        }))
    }

    /// Countdown chain whose jump from state 0 is `max(1, ceil(Z))`, `Z ~ jump`.
    pub fn countdown(jump: TailLaw) -> Result<Self> {
        // E J = Σ_{k>=0} P(J > k) = 1 + Σ_{k>=1} P(Z > k).
        let mut s = 1.0;
        let mut k = 1u64;
        loop {
            let t = jump.tail(k as f64);
            s += t;
            if t < 1e-17 * s || k >= 10_000_000 {
                // Integral bound on the remainder of a nonincreasing sum.
                s += jump.excess(k as f64);
                break;
            }
            k += 1;
        }
        if !s.is_finite() {
            return Err(Error::param("jump", "cycle length must have finite mean"));
        }
        let period = countdown_period(&jump);
        Ok(Modulator::Countdown(Countdown {
            jump,
            mean_cycle: 1.0 + s,
            period,
        }))
    }

    /// `E τ` for a regular (non-initial) cycle.
    pub fn mean_cycle(&self) -> f64 {
        match self {
            Modulator::FiniteMarkov(f) => 1.0 / f.stationary[f.regen],
            Modulator::Countdown(c) => c.mean_cycle,
        }
    }

    pub fn period(&self) -> u64 {
        match self {
            Modulator::FiniteMarkov(f) => f.period,
            Modulator::Countdown(c) => c.period,
        }
    }

    /// Number of explicitly distinct states, `None` for the countable chain.
    pub fn n_states(&self) -> Option<usize> {
        match self {
            Modulator::FiniteMarkov(f) => Some(f.transition.len()),
            Modulator::Countdown(_) => None,
        }
    }

    /// Stationary probability of a single state.
    pub fn stationary_prob(&self, state: usize) -> f64 {
        match self {
            Modulator::FiniteMarkov(f) => f.stationary.get(state).copied().unwrap_or(0.0),
            Modulator::Countdown(c) => {
                if state == 0 {
                    1.0 / c.mean_cycle
                } else {
                    // State j is visited once per cycle iff J >= j.
                    let at_least = if state == 1 { 1.0 } else { c.jump.tail((state - 1) as f64) };
                    at_least / c.mean_cycle
                }
            }
        }
    }

    /// Stationary law: the full vector for finite chains, states `0..len` of
    /// the countable chain until the remaining mass is negligible.
    pub fn stationary_law(&self) -> Vec<f64> {
        match self {
            Modulator::FiniteMarkov(f) => f.stationary.clone(),
            Modulator::Countdown(_) => {
                let mut out = Vec::new();
                let mut acc = 0.0;
                for s in 0..STATE_TABLE_CAP {
                    let p = self.stationary_prob(s);
                    out.push(p);
                    acc += p;
                    if 1.0 - acc < 1e-15 || (s > 1 && p == 0.0) {
                        break;
                    }
                }
                out
            }
        }
    }

    /// Maps a state to the index of its increment law: identity for finite
    /// chains; for the countable chain, states beyond `n_classes - 1` share
    /// the last law.
    #[inline]
    pub fn class_of(&self, state: usize, n_classes: usize) -> usize {
        match self {
            Modulator::FiniteMarkov(_) => state,
            Modulator::Countdown(_) => state.min(n_classes - 1),
        }
    }

    /// Stationary probability of each increment class.
    pub fn class_probs(&self, n_classes: usize) -> Vec<f64> {
        match self {
            Modulator::FiniteMarkov(f) => f.stationary.clone(),
            Modulator::Countdown(_) => {
                let mut v: Vec<f64> = (0..n_classes - 1).map(|s| self.stationary_prob(s)).collect();
                let rest = (1.0 - v.iter().sum::<f64>()).max(0.0);
                v.push(rest);
                v
            }
        }
    }

    /// First state `X_1`.
    pub fn start<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            Modulator::FiniteMarkov(f) => {
                let u: f64 = rng.random();
                let mut c = 0.0;
                for (i, p) in f.initial.iter().enumerate() {
                    c += p;
                    if u < c {
                        return i;
                    }
                }
                f.initial.len() - 1
            }
            Modulator::Countdown(_) => 0,
        }
    }

    #[inline]
    pub fn next<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        match self {
            Modulator::FiniteMarkov(f) => {
                if let Some(j) = f.forced[state] {
                    return j;
                }
                let row = &f.cumulative[state];
                let u: f64 = rng.random::<f64>() * row[row.len() - 1];
                let i = row.partition_point(|&c| c <= u);
                i.min(row.len() - 1)
            }
            Modulator::Countdown(c) => {
                if state == 0 {
                    jump_len(&c.jump, rng)
                } else {
                    state - 1
                }
            }
        }
    }

    /// True when a fresh cycle begins in `state`.
    #[inline]
    pub fn is_cycle_start(&self, state: usize) -> bool {
        match self {
            Modulator::FiniteMarkov(f) => state == f.regen,
            Modulator::Countdown(_) => state == 0,
        }
    }

    /// One regular cycle, started at the regeneration state.
    pub fn sample_cycle<R: Rng + ?Sized>(&self, rng: &mut R, cap: u64) -> Result<CyclePath> {
        let first = match self {
            Modulator::FiniteMarkov(f) => f.regen,
            Modulator::Countdown(_) => 0,
        };
        self.walk_cycle(first, rng, cap, false)
    }

    /// The delayed cycle before the first regeneration: from `X_1` up to,
    /// excluding, the first cycle start. Empty when `X_1` starts a cycle.
    pub fn sample_initial_cycle<R: Rng + ?Sized>(&self, rng: &mut R, cap: u64) -> Result<CyclePath> {
        let x1 = self.start(rng);
        if self.is_cycle_start(x1) {
            return Ok(CyclePath {
                states: vec![],
                length: 0,
                is_initial: true,
            });
        }
        self.walk_cycle(x1, rng, cap, true)
    }

    fn walk_cycle<R: Rng + ?Sized>(&self, first: usize, rng: &mut R, cap: u64, initial: bool) -> Result<CyclePath> {
        let mut states = vec![first];
        let mut s = first;
        loop {
            s = self.next(s, rng);
            if self.is_cycle_start(s) {
                break;
            }
            states.push(s);
            if states.len() as u64 >= cap {
                return Err(Error::CycleLengthCap(cap));
            }
        }
        Ok(CyclePath {
            length: states.len() as u64,
            states,
            is_initial: initial,
        })
    }

    /// `P(τ > n)` for `n = 0..=n_max`, regular cycles.
    pub fn cycle_tail_table(&self, n_max: usize) -> Vec<f64> {
        match self {
            Modulator::Countdown(c) => (0..=n_max)
                .map(|n| if n <= 1 { 1.0 } else { c.jump.tail((n - 1) as f64) })
                .collect(),
            Modulator::FiniteMarkov(f) => {
                let mut start = vec![0.0; f.transition.len()];
                start[f.regen] = 1.0;
                taboo_survival(f, start, n_max, true)
            }
        }
    }

    /// `P(τ_0 > n)` for the delayed initial cycle.
    pub fn initial_cycle_tail_table(&self, n_max: usize) -> Vec<f64> {
        match self {
            Modulator::Countdown(_) => {
                let mut v = vec![0.0; n_max + 1];
                v[0] = 0.0;
                v
            }
            Modulator::FiniteMarkov(f) => {
                let mut start = f.initial.clone();
                start[f.regen] = 0.0;
                taboo_survival(f, start, n_max, false)
            }
        }
    }

    /// Marginal law of `X_n` on the states, `n >= 1`, for finite chains.
    pub fn marginal(&self, n: usize) -> Option<Vec<f64>> {
        match self {
            Modulator::FiniteMarkov(f) => {
                let mut v = f.initial.clone();
                for _ in 1..n {
                    v = step_law(f, &v);
                }
                Some(v)
            }
            Modulator::Countdown(_) => None,
        }
    }

    /// Law of `X_{n+1}` given the law `v` of `X_n`, for finite chains.
    pub fn step_marginal(&self, v: &[f64]) -> Option<Vec<f64>> {
        match self {
            Modulator::FiniteMarkov(f) => Some(step_law(f, v)),
            Modulator::Countdown(_) => None,
        }
    }

    /// Simulates `n_cycles` regular cycles and returns, per cycle, the
    /// number of steps spent in each of `n_classes` increment classes.
    pub fn cycle_occupancy<R: Rng + ?Sized>(&self, n_classes: usize, n_cycles: usize, rng: &mut R) -> Result<Vec<Vec<u64>>> {
        let mut out = Vec::with_capacity(n_cycles);
        for _ in 0..n_cycles {
            let c = self.sample_cycle(rng, DEFAULT_CYCLE_CAP)?;
            let mut counts = vec![0u64; n_classes];
            match self {
                Modulator::Countdown(_) => {
                    // States are (0, J, J-1, ..., 1): one visit to each of 0..=J.
                    let j = c.length as usize - 1;
                    if n_classes == 1 {
                        counts[0] = c.length;
                        out.push(counts);
                        continue;
                    }
                    counts[0] += 1;
                    for (k, slot) in counts.iter_mut().enumerate().skip(1) {
                        if k == n_classes - 1 {
                            *slot += (j + 1).saturating_sub(k) as u64;
                        } else if k <= j {
                            *slot += 1;
                        }
                    }
                }
                Modulator::FiniteMarkov(_) => {
                    for s in c.states {
                        counts[s] += 1;
                    }
                }
            }
            out.push(counts);
        }
        Ok(out)
    }

    /// Cumulative stationary table for drawing a state from `π`.
    pub fn stationary_sampler(&self) -> StateSampler {
        let law = self.stationary_law();
        let mut c = 0.0;
        let cumulative: Vec<f64> = law
            .iter()
            .map(|p| {
                c += p;
                c
            })
            .collect();
        StateSampler { cumulative }
    }
}

fn step_law(f: &FiniteMarkov, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        if v[i] != 0.0 {
            for j in 0..n {
                out[j] += v[i] * f.transition[i][j];
            }
        }
    }
    out
}

/// Survival of the time to (re)enter the regeneration state. When
/// `counts_start` is set, the starting step itself is the first cycle step.
fn taboo_survival(f: &FiniteMarkov, start: Vec<f64>, n_max: usize, counts_start: bool) -> Vec<f64> {
    let n = start.len();
    let mut out = Vec::with_capacity(n_max + 1);
    let mut v = start;
    // τ > 0 always for regular cycles; for the delayed one it is P(X_1 != regen).
    let total: f64 = v.iter().sum();
    out.push(if counts_start { 1.0 } else { total });
    for _ in 1..=n_max {
        let mut w = vec![0.0; n];
        for i in 0..n {
            if v[i] != 0.0 {
                for j in 0..n {
                    if j != f.regen {
                        w[j] += v[i] * f.transition[i][j];
                    }
                }
            }
        }
        v = w;
        out.push(v.iter().sum());
    }
    out
}

#[inline]
fn jump_len<R: Rng + ?Sized>(z: &TailLaw, rng: &mut R) -> usize {
    let x = z.sample(rng);
    if x <= 1.0 {
        1
    } else if x >= 1e15 {
        1_000_000_000_000_000
    } else {
        x.ceil() as usize
    }
}

fn countdown_period(z: &TailLaw) -> u64 {
    // Cycle lengths are J + 1; gcd over the support of J.
    let mut g = 0u64;
    let mut prev = 1.0;
    for j in 1..=2000u64 {
        let t = z.tail(j as f64);
        if prev - t > 0.0 {
            g = gcd(g, j + 1);
            if g == 1 {
                return 1;
            }
        }
        prev = t;
        if t == 0.0 {
            break;
        }
    }
    g.max(1)
}

/// Draws states from a tabulated stationary law.
#[derive(Debug, Clone)]
pub struct StateSampler {
    cumulative: Vec<f64>,
}

impl StateSampler {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

/// Tail functionals of the reference law or measure.
pub trait TailRef {
    fn ref_tail(&self, y: f64) -> f64;
    fn ref_int_tail(&self, y: f64) -> f64;
}

impl TailRef for TailLaw {
    fn ref_tail(&self, y: f64) -> f64 {
        self.tail(y)
    }
    fn ref_int_tail(&self, y: f64) -> f64 {
        self.int_tail(y)
    }
}

impl TailRef for LevyMeasure {
    fn ref_tail(&self, y: f64) -> f64 {
        self.pos.tail(y)
    }
    fn ref_int_tail(&self, y: f64) -> f64 {
        self.pos.excess(y)
    }
}

/// Anything with a modulator, per-class means and weights.
pub trait Modulated {
    fn modulator(&self) -> &Modulator;
    fn weights(&self) -> &[f64];
    /// Per-class mean increment per step (discrete) or drift rate (continuous).
    fn class_means(&self) -> Vec<f64>;
    /// Per-class means with the left tail truncated at `-beta`.
    fn class_truncated_means(&self, beta: f64) -> Vec<f64>;
    fn n_classes(&self) -> usize {
        self.weights().len()
    }
    /// Stationary probability of each class, in the time units of the walk.
    fn class_probs(&self) -> Vec<f64> {
        self.modulator().class_probs(self.n_classes())
    }
}

/// `a = -Σ π(x) a_x`, required finite and strictly positive.
pub fn drift_constant<S: Modulated + ?Sized>(spec: &S) -> Result<f64> {
    let a = -spec
        .class_probs()
        .iter()
        .zip(spec.class_means())
        .map(|(p, m)| if *p == 0.0 { 0.0 } else { p * m })
        .sum::<f64>();
    if a.is_finite() && a > 0.0 {
        Ok(a)
    } else {
        Err(Error::NonNegativeDrift(a))
    }
}

/// `C = Σ π(x) c_x`.
pub fn weight_constant<S: Modulated + ?Sized>(spec: &S) -> f64 {
    spec.class_probs().iter().zip(spec.weights()).map(|(p, c)| p * c).sum::<f64>().clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaTrace {
    pub kappa: f64,
    pub beta: Vec<f64>,
    pub sup_truncated_mean: Vec<f64>,
}

/// `κ = lim_β sup_x a_x^β`, with the trace over `beta_grid`.
pub fn kappa<S: Modulated + ?Sized>(spec: &S, beta_grid: &[f64]) -> Result<KappaTrace> {
    if beta_grid.len() < 2 || beta_grid.windows(2).any(|w| !(w[1] > w[0])) || beta_grid[0] <= 0.0 {
        return Err(Error::param("beta_grid", "need at least two increasing positive values"));
    }
    let probs = spec.class_probs();
    let trace: Vec<f64> = beta_grid
        .iter()
        .map(|&b| {
            spec.class_truncated_means(b)
                .into_iter()
                .zip(&probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(m, _)| m)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let n = trace.len();
    let change = (trace[n - 1] - trace[n - 2]).abs();
    if change > 1e-6 {
        return Err(Error::GridTooShort(change));
    }
    Ok(KappaTrace {
        kappa: trace[n - 1],
        beta: beta_grid.to_vec(),
        sup_truncated_mean: trace,
    })
}

/// Default truncation grid for `κ`: 1, 2, 4, ... up to 2^40.
pub fn default_beta_grid() -> Vec<f64> {
    (0..=40).map(|k| 2f64.powi(k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleTailCheck {
    pub verdict: Verdict,
    /// `P(b τ_0 > n) / F̄ᴵ(n)`.
    pub initial: ClassVerdict,
    /// `P(b τ > n) / F̄(n)`.
    pub regular: ClassVerdict,
}

/// Checks that `P(b τ_0 > n) = o(F̄ᴵ(n))` and `P(b τ > n) = o(F̄(n))` along
/// `levels`, using exact cycle-length tails.
pub fn check_d4<T: TailRef + ?Sized>(m: &Modulator, b: f64, reference: &T, levels: &[f64]) -> Result<CycleTailCheck> {
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::param("b", "must be finite and >= 0"));
    }
    if levels.is_empty() || levels.windows(2).any(|w| !(w[1] > w[0])) || levels[0] <= 0.0 {
        return Err(Error::param("levels", "need an increasing grid of positive levels"));
    }
    let mk = |trace: Vec<(f64, f64)>| ClassVerdict {
        verdict: classify(&trace, 0.0, DEFAULT_TOLERANCE),
        ratio_trace: trace,
        target: 0.0,
        tolerance: DEFAULT_TOLERANCE,
    };
    if b == 0.0 {
        let zeros: Vec<(f64, f64)> = levels.iter().map(|&y| (y, 0.0)).collect();
        return Ok(CycleTailCheck {
            verdict: Verdict::Consistent,
            initial: mk(zeros.clone()),
            regular: mk(zeros),
        });
    }
    // P(b τ > n) = P(τ > floor(n / b)) for integer τ.
    let idx: Vec<usize> = levels.iter().map(|&y| (y / b).floor().min(1e8) as usize).collect();
    let n_max = *idx.iter().max().unwrap();
    let reg = m.cycle_tail_table(n_max);
    let ini = m.initial_cycle_tail_table(n_max);
    let mut t0 = Vec::new();
    let mut t1 = Vec::new();
    // Subnormal cycle tails are rounding debris; treat them as zero.
    let clip = |p: f64| if p < 1e-300 { 0.0 } else { p };
    for (&y, &k) in levels.iter().zip(&idx) {
        t0.push((y, clip(ini[k]) / reference.ref_int_tail(y)));
        t1.push((y, clip(reg[k]) / reference.ref_tail(y)));
    }
    let initial = mk(t0);
    let regular = mk(t1);
    let verdict = match (initial.verdict, regular.verdict) {
        (Verdict::Consistent, Verdict::Consistent) => Verdict::Consistent,
        (Verdict::Inconsistent, _) | (_, Verdict::Inconsistent) => Verdict::Inconsistent,
        _ => Verdict::Inconclusive,
    };
    Ok(CycleTailCheck {
        verdict,
        initial,
        regular,
    })
}

/// Discrete-time walk: per-class increment laws on a modulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkSpec {
    pub modulator: Modulator,
    pub laws: Vec<TailLaw>,
    pub reference: TailLaw,
    pub weights: Vec<f64>,
}

impl WalkSpec {
    pub fn new(modulator: Modulator, laws: Vec<TailLaw>, reference: TailLaw, weights: Vec<f64>) -> Result<Self> {
        let s = WalkSpec {
            modulator,
            laws,
            reference,
            weights,
        };
        s.validate()?;
        Ok(s)
    }

    /// Unmodulated walk with i.i.d. increments `law` and weight one.
    pub fn iid(law: TailLaw, reference: TailLaw) -> Result<Self> {
        WalkSpec::new(Modulator::finite_markov(vec![vec![1.0]], None, 0)?, vec![law], reference, vec![1.0])
    }

    pub fn validate(&self) -> Result<()> {
        check_classes(&self.modulator, self.laws.len(), &self.weights)?;
        self.check_domination()
    }

    /// Pointwise tail domination by the reference on a probe grid.
    pub fn check_domination(&self) -> Result<()> {
        let probes = probe_grid(&self.reference);
        for (i, law) in self.laws.iter().enumerate() {
            for &y in &probes {
                let (t, r) = (law.tail(y), self.reference.tail(y));
                if t > r * (1.0 + 1e-9) + 1e-300 {
                    return Err(Error::config(
                        format!("laws[{i}]"),
                        format!("tail {t:.6e} exceeds the reference tail {r:.6e} at y = {y}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Per-class traces of `F̄ᴵ_x(y) / F̄ᴵ(y)` against `c_x`.
    pub fn check_weights(&self, levels: &[f64]) -> Vec<ClassVerdict> {
        self.laws
            .iter()
            .zip(&self.weights)
            .map(|(law, &c)| {
                let trace: Vec<(f64, f64)> = levels
                    .iter()
                    .map(|&y| (y, law.excess(y) / self.reference.excess(y)))
                    .collect();
                crate::verdict::class_verdict(trace, c, DEFAULT_TOLERANCE)
            })
            .collect()
    }

    pub fn law_for_state(&self, state: usize) -> &TailLaw {
        &self.laws[self.modulator.class_of(state, self.laws.len())]
    }
}

impl Modulated for WalkSpec {
    fn modulator(&self) -> &Modulator {
        &self.modulator
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
    fn class_means(&self) -> Vec<f64> {
        self.laws.iter().map(TailLaw::mean).collect()
    }
    fn class_truncated_means(&self, beta: f64) -> Vec<f64> {
        self.laws.iter().map(|l| l.truncated_mean(beta)).collect()
    }
}

pub(crate) fn check_classes(m: &Modulator, n_laws: usize, weights: &[f64]) -> Result<()> {
    if n_laws == 0 {
        return Err(Error::config("laws", "at least one increment law is required"));
    }
    if let Some(n) = m.n_states() {
        if n != n_laws {
            return Err(Error::config("laws", format!("{n_laws} laws for a {n}-state modulator")));
        }
    }
    if weights.len() != n_laws {
        return Err(Error::config("weights", format!("{} weights for {n_laws} laws", weights.len())));
    }
    if let Some(i) = weights.iter().position(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::config(format!("weights[{i}]"), "c_x must lie in [0, 1]"));
    }
    Ok(())
}

/// Dense probe grid spanning the bulk and far tail of a reference law.
pub fn probe_grid(reference: &TailLaw) -> Vec<f64> {
    let lo = reference.support_lower();
    let hi = reference.upper_quantile(1e-12).max(lo + 1.0);
    let mut g: Vec<f64> = crate::numeric::linspace(lo - 5.0, lo + 10.0, 301);
    g.extend(crate::numeric::geomspace(1e-3, hi - lo + 1e-3, 400).into_iter().map(|x| lo + x));
    g
}
