//! Monte Carlo tail estimates, ratio reports and the verification batteries
//! built on them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use rand::Rng;

use crate::discrete::{asymptote, DiscreteSampler, MIN_LEVEL};
use crate::error::{Error, Result};
use crate::modulation::{check_d4, default_beta_grid, drift_constant, kappa, weight_constant, Modulator, WalkSpec};
use crate::numeric::{geomspace, wilson};
use crate::rng::{run_workers, stream, Stream};
use crate::sampler::{level_for, SupremumSampler, TruncationRule, DEFAULT_TARGET_FRACTION};
use crate::tail_laws::{check_subexponential, TailLaw};
use crate::verdict::{classify_noisy, deviation, ClassVerdict, Verdict, DEFAULT_TOLERANCE};

/// Rows with fewer exceedances than this are marked unreliable.
pub const MIN_RELIABLE_COUNT: u64 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub y_grid: Vec<f64>,
    pub counts: Vec<u64>,
    pub phat: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    /// Empty until [`TailReport::with_asymptote`] fills it.
    pub asymptote: Vec<f64>,
    pub n_paths: u64,
    pub seed: u64,
    pub workers: usize,
    pub bias_bound: f64,
    /// Mean step count (or time) at which paths were cut.
    pub mean_stop: f64,
}

impl TailReport {
    pub fn with_asymptote<F: FnMut(f64) -> Result<f64>>(mut self, mut f: F) -> Result<Self> {
        self.asymptote = self.y_grid.iter().map(|&y| f(y)).collect::<Result<_>>()?;
        Ok(self)
    }

    pub fn reliable(&self, i: usize) -> bool {
        self.counts[i] >= MIN_RELIABLE_COUNT
    }

    /// `P̂ / asymptote` where the asymptote is positive.
    pub fn ratio(&self, i: usize) -> Option<f64> {
        let a = *self.asymptote.get(i)?;
        (a > 0.0).then(|| self.phat[i] / a)
    }

    /// Confidence half-width on the ratio scale.
    pub fn ratio_half_width(&self, i: usize) -> Option<f64> {
        let a = *self.asymptote.get(i)?;
        (a > 0.0).then(|| 0.5 * (self.ci_hi[i] - self.ci_lo[i]) / a)
    }

    /// Grid index whose estimate is closest to `p` on the log scale.
    pub fn level_near(&self, p: f64) -> Option<usize> {
        (0..self.phat.len())
            .filter(|&i| self.phat[i] > 0.0)
            .min_by(|&i, &j| {
                let d = |k: usize| (self.phat[k].ln() - p.ln()).abs();
                d(i).total_cmp(&d(j))
            })
    }

    /// CSV with columns `y,count,phat,ci_lo,ci_hi,asymptote,ratio,reliable`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("y,count,phat,ci_lo,ci_hi,asymptote,ratio,reliable\n");
        for i in 0..self.y_grid.len() {
            let asym = self.asymptote.get(i).map(|a| a.to_string()).unwrap_or_default();
            let ratio = self.ratio(i).map(|r| r.to_string()).unwrap_or_default();
            writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                self.y_grid[i],
                self.counts[i],
                self.phat[i],
                self.ci_lo[i],
                self.ci_hi[i],
                asym,
                ratio,
                self.reliable(i)
            )
            .unwrap();
        }
        s
    }
}

/// Exceedance counts `#{v > y}` over an increasing grid.
pub fn exceedances(samples: &mut [f64], y_grid: &[f64]) -> Vec<u64> {
    samples.sort_by(f64::total_cmp);
    y_grid
        .iter()
        .map(|&y| (samples.len() - samples.partition_point(|&m| m <= y)) as u64)
        .collect()
}

fn check_grid(y_grid: &[f64]) -> Result<()> {
    if y_grid.is_empty() || y_grid.iter().any(|y| !y.is_finite()) || y_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("y_grid", "must be a nonempty increasing grid of finite levels"));
    }
    Ok(())
}

/// `n` supremum draws split over `workers` streams of `seed`; counts are
/// merged by summation so the result does not depend on merge order.
pub fn estimate_tail<S: SupremumSampler + ?Sized>(
    sampler: &S,
    y_grid: &[f64],
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<TailReport> {
    if n == 0 {
        return Err(Error::param("n_paths", "need at least one path"));
    }
    check_grid(y_grid)?;
    let parts = run_workers(seed, workers, n, |_, rng, count| {
        let mut v = Vec::with_capacity(count as usize);
        let mut stop = 0.0;
        for _ in 0..count {
            let d = sampler.sample(rng)?;
            stop += d.stopped_at;
            v.push(d.value);
        }
        Ok((exceedances(&mut v, y_grid), stop))
    })?;
    let mut counts = vec![0u64; y_grid.len()];
    let mut stop = 0.0;
    for (c, st) in parts {
        for (a, b) in counts.iter_mut().zip(c) {
            *a += b;
        }
        stop += st;
    }
    let nf = n as f64;
    let (ci_lo, ci_hi) = counts.iter().map(|&k| wilson(k, n)).unzip();
    Ok(TailReport {
        y_grid: y_grid.to_vec(),
        phat: counts.iter().map(|&k| k as f64 / nf).collect(),
        counts,
        ci_lo,
        ci_hi,
        asymptote: vec![],
        n_paths: n,
        seed,
        workers: workers.max(1),
        bias_bound: sampler.bias_bound(),
        mean_stop: stop / nf,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub y: f64,
    pub count: u64,
    pub ratio: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub verdict: Verdict,
    /// `consistent`, `diverging` or `inconclusive`.
    pub label: String,
    pub target: f64,
    /// Reliable rows only.
    pub rows: Vec<RatioRow>,
}

impl RatioReport {
    pub fn table(&self) -> String {
        let mut s = String::from("y,count,ratio,half_width\n");
        for r in &self.rows {
            writeln!(s, "{},{},{},{}", r.y, r.count, r.ratio, r.half_width).unwrap();
        }
        s
    }
}

/// Trend verdict of `P̂ / asymptote` against `target` (usually one) over the
/// reliable rows, with each row's confidence half-width as its noise band.
pub fn ratio_report_to(report: &TailReport, target: f64) -> RatioReport {
    let rows: Vec<RatioRow> = (0..report.y_grid.len())
        .filter(|&i| report.reliable(i))
        .filter_map(|i| {
            Some(RatioRow {
                y: report.y_grid[i],
                count: report.counts[i],
                ratio: report.ratio(i)?,
                half_width: report.ratio_half_width(i)?,
            })
        })
        .collect();
    let trace: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.y, r.ratio, r.half_width)).collect();
    let verdict = classify_noisy(&trace, target, DEFAULT_TOLERANCE);
    RatioReport {
        verdict,
        label: verdict.trend_label().to_string(),
        target,
        rows,
    }
}

pub fn ratio_report(report: &TailReport) -> RatioReport {
    ratio_report_to(report, 1.0)
}

/// Parameters of the cycle-tail counterexample.
///
/// `ζ` is Weibull with shape `gamma` and unit mean; the cycle jump from state
/// 0 has tail `exp(-c (y/λ)^γ)` on the same scale `λ`, and each visit to
/// state 0 costs `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleParams {
    pub gamma: f64,
    pub c: f64,
    pub b: f64,
    pub d: f64,
    /// Slack in the lower-bound law `H̄(y) = exp(-c (y/λ)^γ / (1-ε)^γ)`.
    pub epsilon: f64,
    pub n_paths: u64,
    pub y_grid: Vec<f64>,
    pub seed: u64,
    pub workers: usize,
    /// Replace the countdown chain by a two-state chain with geometric
    /// cycles of the same mean length.
    #[serde(default)]
    pub control: bool,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        CounterexampleParams {
            gamma: 0.5,
            c: 0.7,
            b: 0.25,
            d: 5.0,
            epsilon: 0.1,
            n_paths: 100_000,
            y_grid: geomspace(5.0, 150.0, 8),
            seed: 2024,
            workers: 1,
            control: false,
        }
    }
}

/// Walk, cycle-tail reference and lower-bound law of a counterexample run.
#[derive(Debug, Clone)]
pub struct CounterexampleModel {
    pub spec: WalkSpec,
    pub lower_law: TailLaw,
    pub scale: f64,
}

impl CounterexampleParams {
    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ParameterInequalityViolated(m));
        let (g, c, b, e) = (self.gamma, self.c, self.b, self.epsilon);
        if !(g > 0.0 && g < 1.0) {
            return bad(format!("gamma = {g} must lie in (0, 1)"));
        }
        if !(b > 0.0 && b < 1.0) {
            return bad(format!("b = {b} must lie in (0, 1)"));
        }
        if !(c > b.powf(g) && c < 1.0) {
            return bad(format!("c = {c} must lie in (b^gamma, 1) = ({}, 1)", b.powf(g)));
        }
        if !(e > 0.0 && e < 1.0 && (1.0 - e).powf(g) > c) {
            return bad(format!("epsilon = {e} needs (1 - epsilon)^gamma > c"));
        }
        if self.n_paths == 0 {
            return Err(Error::param("n_paths", "need at least one path"));
        }
        check_grid(&self.y_grid)?;
        Ok(())
    }

    pub fn model(&self) -> Result<CounterexampleModel> {
        self.check()?;
        let g = self.gamma;
        let lambda = 1.0 / statrs::function::gamma::gamma(1.0 + 1.0 / g);
        let zeta = TailLaw::weibull(g, lambda)?;
        let jump_scale = lambda * self.c.powf(-1.0 / g);
        let countdown = Modulator::countdown(TailLaw::weibull(g, jump_scale)?)?;
        let mean_cycle = countdown.mean_cycle();
        if !(self.d > mean_cycle) {
            return Err(Error::ParameterInequalityViolated(format!(
                "d = {} must exceed the mean cycle length {mean_cycle}",
                self.d
            )));
        }
        let modulator = if self.control {
            let r = 1.0 / mean_cycle;
            Modulator::finite_markov(vec![vec![r, 1.0 - r]; 2], None, 0)?
        } else {
            countdown
        };
        let laws = vec![TailLaw::shifted(zeta.clone(), -self.d)?, zeta.clone()];
        let spec = WalkSpec::new(modulator, laws, zeta, vec![1.0, 1.0])?;
        let lower_law = TailLaw::weibull(g, lambda * (1.0 - self.epsilon) * self.c.powf(-1.0 / g))?;
        Ok(CounterexampleModel {
            spec,
            lower_law,
            scale: lambda,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub params: CounterexampleParams,
    pub a: f64,
    pub c_weight: f64,
    pub kappa: f64,
    pub mean_cycle: f64,
    /// Cycle-tail check at `b` against the increment tail.
    pub d4: Verdict,
    pub d4_label: String,
    /// `P̂` against `(C/a) F̄ᴵ`.
    pub tail: TailReport,
    pub ratio_f: RatioReport,
    /// `P̂ / H̄ᴵ` on the reliable rows.
    pub ratio_h: Vec<(f64, f64)>,
    /// Last over first reliable ratio to `(C/a) F̄ᴵ`.
    pub growth: f64,
}

impl CounterexampleReport {
    /// Lowest ratio to `H̄ᴵ` over the reliable rows.
    pub fn min_ratio_h(&self) -> Option<f64> {
        self.ratio_h.iter().map(|r| r.1).min_by(f64::total_cmp)
    }
}

/// Levels for the cycle-tail check of the counterexample.
pub fn counterexample_d4_levels() -> Vec<f64> {
    geomspace(10.0, 2000.0, 8)
}

pub fn run_counterexample(params: &CounterexampleParams) -> Result<CounterexampleReport> {
    let model = params.model()?;
    let spec = &model.spec;
    let a = drift_constant(spec)?;
    let c_weight = weight_constant(spec);
    let kappa = kappa(spec, &default_beta_grid())?.kappa;
    let d4 = check_d4(&spec.modulator, params.b, &spec.reference, &counterexample_d4_levels())?.verdict;
    // The supremum lives on the heavier H̄ᴵ scale, so the cut is set there.
    let target = MIN_RELIABLE_COUNT as f64 / params.n_paths as f64;
    let h = &model.lower_law;
    let level = level_for(1.0 / a, |l| h.int_tail(l), DEFAULT_TARGET_FRACTION * target).max(MIN_LEVEL);
    let rule = TruncationRule::new(level, 10.0 * spec.modulator.mean_cycle()).exact();
    let sampler = DiscreteSampler::new(spec.clone(), rule)?;
    let tail = estimate_tail(&sampler, &params.y_grid, params.n_paths, params.seed, params.workers)?
        .with_asymptote(|y| asymptote(spec, y))?;
    let ratio_f = ratio_report(&tail);
    let ratio_h = (0..tail.y_grid.len())
        .filter(|&i| tail.reliable(i))
        .map(|i| (tail.y_grid[i], tail.phat[i] / h.int_tail(tail.y_grid[i])))
        .collect();
    let growth = match (ratio_f.rows.first(), ratio_f.rows.last()) {
        (Some(f), Some(l)) => l.ratio / f.ratio,
        _ => f64::NAN,
    };
    Ok(CounterexampleReport {
        params: params.clone(),
        a,
        c_weight,
        kappa,
        mean_cycle: spec.modulator.mean_cycle(),
        d4,
        d4_label: d4.as_str().to_string(),
        tail,
        ratio_f,
        ratio_h,
        growth,
    })
}

/// Exceedances needed before an appendix ratio is judged.
pub const APPENDIX_MIN_COUNT: u64 = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppendixConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub sum_levels: Vec<f64>,
    pub int_tail_levels: Vec<f64>,
    pub pareto_levels: Vec<f64>,
    pub exponential_levels: Vec<f64>,
}

impl Default for AppendixConfig {
    fn default() -> Self {
        AppendixConfig {
            n_samples: 10_000_000,
            seed: 77,
            sum_levels: vec![40.0, 60.0, 90.0],
            int_tail_levels: vec![5.0, 10.0, 20.0, 50.0],
            pareto_levels: vec![10.0, 100.0, 1000.0, 10000.0],
            exponential_levels: vec![5.0, 10.0, 20.0, 40.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixRow {
    pub y: f64,
    pub count: u64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumTailCheck {
    pub label: String,
    pub target: f64,
    /// Upper-bound checks only need `ratio <= target (1 + tol)`.
    pub upper_only: bool,
    pub rows: Vec<AppendixRow>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub sums: Vec<SumTailCheck>,
    /// Empirical `F̄ᴵ` of `Y1 - Y2` over that of `Y1` on the same draws.
    pub int_tail_rows: Vec<AppendixRow>,
    pub int_tail_pass: bool,
    pub pareto: ClassVerdict,
    pub exponential: ClassVerdict,
    pub pass: bool,
}

pub const SUM_TOLERANCE: f64 = 0.10;
pub const INT_TAIL_TOLERANCE: f64 = 0.05;

#[allow(clippy::too_many_arguments)]
fn sum_check(
    label: &str,
    target: f64,
    upper_only: bool,
    reference: &TailLaw,
    levels: &[f64],
    n: u64,
    rng: &mut Stream,
    mut draw: impl FnMut(&mut Stream) -> f64,
) -> SumTailCheck {
    let mut v: Vec<f64> = (0..n).map(|_| draw(rng)).collect();
    let counts = exceedances(&mut v, levels);
    let rows: Vec<AppendixRow> = levels
        .iter()
        .zip(counts)
        .map(|(&y, k)| AppendixRow {
            y,
            count: k,
            ratio: k as f64 / n as f64 / reference.tail(y),
        })
        .collect();
    let judged: Vec<&AppendixRow> = rows.iter().filter(|r| r.count >= APPENDIX_MIN_COUNT).collect();
    let ok = |r: &AppendixRow| {
        if upper_only {
            r.ratio <= target * (1.0 + SUM_TOLERANCE)
        } else {
            deviation(r.ratio, target) <= SUM_TOLERANCE
        }
    };
    SumTailCheck {
        label: label.to_string(),
        target,
        upper_only,
        pass: !judged.is_empty() && judged.into_iter().all(ok),
        rows,
    }
}

/// Empirical `E (Y - y)^+` for each level.
fn empirical_int_tail(v: &[f64], y: f64) -> f64 {
    v.iter().map(|&x| (x - y).max(0.0)).sum::<f64>() / v.len() as f64
}

/// Ratio of empirical integrated tails of `Y1 - Y2` and `Y1`, drawn together.
pub fn int_tail_difference_ratio(
    y1: &TailLaw,
    y2: &TailLaw,
    levels: &[f64],
    n: u64,
    rng: &mut Stream,
) -> Vec<AppendixRow> {
    let (mut a, mut d) = (Vec::with_capacity(n as usize), Vec::with_capacity(n as usize));
    for _ in 0..n {
        let x = y1.sample(rng);
        a.push(x);
        d.push(x - y2.sample(rng));
    }
    levels
        .iter()
        .map(|&y| AppendixRow {
            y,
            count: a.iter().filter(|&&x| x > y).count() as u64,
            ratio: empirical_int_tail(&d, y) / empirical_int_tail(&a, y),
        })
        .collect()
}

/// Monte Carlo checks of the tail-summation lemmas, the integrated-tail
/// difference lemma, and the subexponentiality probe on Pareto and
/// exponential laws.
pub fn verify_appendix_lemmas(cfg: &AppendixConfig) -> Result<AppendixReport> {
    check_grid(&cfg.sum_levels)?;
    check_grid(&cfg.int_tail_levels)?;
    let n = cfg.n_samples;
    if n == 0 {
        return Err(Error::param("n_samples", "need at least one sample"));
    }
    let f = TailLaw::pareto(2.0, 1.0)?;
    let half = TailLaw::pareto(2.0, 0.5f64.sqrt())?;
    let light = TailLaw::exponential(1.0)?;
    let mut sums = Vec::new();
    sums.push(sum_check("pareto+pareto", 2.0, false, &f, &cfg.sum_levels, n, &mut stream(cfg.seed, 0), |r| {
        f.sample(r) + f.sample(r)
    }));
    sums.push(sum_check("pareto+half_pareto", 1.5, false, &f, &cfg.sum_levels, n, &mut stream(cfg.seed, 1), |r| {
        f.sample(r) + half.sample(r)
    }));
    sums.push(sum_check("pareto+exponential", 1.0, false, &f, &cfg.sum_levels, n, &mut stream(cfg.seed, 2), |r| {
        f.sample(r) + light.sample(r)
    }));
    // Given a fair latent coin the summands are independent: (F, Exp(1)) on
    // one side, (H, H) with H = Lomax(2, √½) on the other. Both conditional
    // tails are dominated by F̄, and the marginal constants are 3/4 and 1/4.
    sums.push(sum_check("latent_mixture", 1.0, true, &f, &cfg.sum_levels, n, &mut stream(cfg.seed, 3), |r| {
        if r.random::<bool>() {
            f.sample(r) + light.sample(r)
        } else {
            half.sample(r) + half.sample(r)
        }
    }));
    let int_tail_rows = int_tail_difference_ratio(&f, &light, &cfg.int_tail_levels, n, &mut stream(cfg.seed, 4));
    let int_tail_pass = int_tail_rows
        .last()
        .is_some_and(|r| deviation(r.ratio, 1.0) <= INT_TAIL_TOLERANCE);
    let pareto = check_subexponential(&f, &cfg.pareto_levels)?;
    let exponential = check_subexponential(&light, &cfg.exponential_levels)?;
    let pass = sums.iter().all(|s| s.pass)
        && int_tail_pass
        && pareto.verdict == Verdict::Consistent
        && exponential.verdict == Verdict::Inconsistent;
    Ok(AppendixReport {
        sums,
        int_tail_rows,
        int_tail_pass,
        pareto,
        exponential,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::SupSample;

    #[test]
    fn degenerate_sampler() {
        let zero = |_: &mut crate::rng::Stream| Ok(SupSample { value: 0.0, stopped_at: 0.0 });
        let r = estimate_tail(&zero, &[0.5, 1.0], 1000, 1, 2).unwrap();
        assert_eq!(r.counts, vec![0, 0]);
        assert!(r.ci_hi[0] > 1.0 / 1000.0 && r.ci_hi[0] < 5.0 / 1000.0);
    }

    #[test]
    fn csv_header_and_rows() {
        let zero = |_: &mut crate::rng::Stream| Ok(SupSample { value: 1.0, stopped_at: 0.0 });
        let r = estimate_tail(&zero, &[0.5, 2.0], 10, 1, 1)
            .unwrap()
            .with_asymptote(|_| Ok(0.5))
            .unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "y,count,phat,ci_lo,ci_hi,asymptote,ratio,reliable");
        assert!(lines[1].starts_with("0.5,10,1,"));
        assert!(lines[1].ends_with(",0.5,2,false"));
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn grid_must_increase() {
        let zero = |_: &mut crate::rng::Stream| Ok(SupSample { value: 0.0, stopped_at: 0.0 });
        assert!(estimate_tail(&zero, &[1.0, 1.0], 10, 1, 1).is_err());
    }

    fn synthetic(ratios: &[f64], n: u64) -> TailReport {
        let y_grid: Vec<f64> = (1..=ratios.len()).map(|k| 10.0 * k as f64).collect();
        let asym: Vec<f64> = (0..ratios.len()).map(|k| 0.1 / (k + 1) as f64).collect();
        let counts: Vec<u64> = ratios.iter().zip(&asym).map(|(r, a)| (r * a * n as f64).round() as u64).collect();
        let (ci_lo, ci_hi) = counts.iter().map(|&k| wilson(k, n)).unzip();
        TailReport {
            phat: counts.iter().map(|&k| k as f64 / n as f64).collect(),
            y_grid,
            counts,
            ci_lo,
            ci_hi,
            asymptote: asym,
            n_paths: n,
            seed: 0,
            workers: 1,
            bias_bound: 0.0,
            mean_stop: 0.0,
        }
    }

    #[test]
    fn ratio_report_labels() {
        assert_eq!(ratio_report(&synthetic(&[1.3, 1.15, 1.05, 1.01], 100_000_000)).label, "consistent");
        assert_eq!(ratio_report(&synthetic(&[1.2, 1.6, 2.3, 3.8], 100_000_000)).label, "diverging");
        assert_eq!(ratio_report(&synthetic(&[1.3, 1.15, 1.05, 1.01], 3_000)).label, "inconclusive");
    }

    #[test]
    fn counterexample_parameters_are_checked() {
        let bad_c = CounterexampleParams { c: 0.4, ..Default::default() };
        assert!(matches!(bad_c.check(), Err(Error::ParameterInequalityViolated(_))));
        let bad_eps = CounterexampleParams { epsilon: 0.6, ..Default::default() };
        assert!(matches!(bad_eps.check(), Err(Error::ParameterInequalityViolated(_))));
        let bad_d = CounterexampleParams { d: 2.0, ..Default::default() };
        assert!(matches!(bad_d.model(), Err(Error::ParameterInequalityViolated(_))));
    }

    #[test]
    fn counterexample_model_scaling() {
        let m = CounterexampleParams::default().model().unwrap();
        // Unit-mean ζ: Weibull(1/2) with scale 1/2.
        assert!((m.scale - 0.5).abs() < 1e-12);
        assert!((m.spec.laws[1].mean() - 1.0).abs() < 1e-9);
        let r = run_counterexample(&CounterexampleParams { n_paths: 2000, ..Default::default() }).unwrap();
        assert_eq!(r.kappa, 1.0);
        assert_eq!(r.d4, Verdict::Consistent);
        assert!((r.a - (5.0 / r.mean_cycle - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn int_tail_difference_with_zero_is_exact() {
        let f = TailLaw::pareto(2.0, 1.0).unwrap();
        let zero = TailLaw::point_mixture(vec![0.0], vec![1.0]).unwrap();
        let rows = int_tail_difference_ratio(&f, &zero, &[1.0, 5.0], 1000, &mut stream(1, 0));
        assert!(rows.iter().all(|r| r.ratio == 1.0));
    }
}
