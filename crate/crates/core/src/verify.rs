//! The acceptance battery: ten end-to-end checks, each returning a pass,
//! fail or inconclusive outcome with a one-line detail.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::continuous::cts_slln_check;
use crate::discrete::{big_jump_series, exp_bound_probe, iceland_constants, slln_check, ProbeFamily};
use crate::error::Result;
use crate::estimation::{
    ratio_report, run_counterexample, verify_appendix_lemmas, AppendixConfig, CounterexampleParams, TailReport,
};
use crate::numeric::bisect;
use crate::scenario::{Mode, Model, Scenario};
use crate::tail_laws::TailLaw;
use crate::verdict::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Inconclusive => "INCONCLUSIVE",
        }
    }

    fn all(items: &[Outcome]) -> Outcome {
        if items.contains(&Outcome::Fail) {
            Outcome::Fail
        } else if items.contains(&Outcome::Inconclusive) {
            Outcome::Inconclusive
        } else {
            Outcome::Pass
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub outcome: Outcome,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    /// `[PASS] 3 series-oracle: ...`
    pub fn line(&self) -> String {
        format!("[{}] {} {}: {}", self.outcome.as_str(), self.id, self.name, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyOptions {
    /// Criteria to run; empty means all.
    pub only: Vec<u8>,
    /// Smaller sample sizes for smoke runs. Outcomes are not binding.
    pub quick: bool,
    /// Worker count override for the Monte Carlo runs.
    pub workers: Option<usize>,
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "pareto-ratio"),
    (2, "two-state-ratio"),
    (3, "series-oracle"),
    (4, "bounded-walk-constants"),
    (5, "poisson-oracle"),
    (6, "continuous-ratio"),
    (7, "counterexample"),
    (8, "slln"),
    (9, "sum-tails"),
    (10, "determinism"),
];

/// Band for `P̂/asymptote` at the level where `P̂ ≈ 10⁻³`.
pub const RATIO_BAND: (f64, f64) = (0.8, 1.25);
pub const RATIO_LEVEL: f64 = 1e-3;
pub const SERIES_BAND: (f64, f64) = (0.98, 1.02);
pub const RESIDUAL_TOL: f64 = 1e-8;
pub const POISSON_REPS: usize = 100;
pub const POISSON_MIN_COVERED: usize = 93;
pub const SLLN_TOL: f64 = 0.05;

pub fn verify(opts: &VerifyOptions) -> Result<Vec<CriterionResult>> {
    CRITERIA
        .iter()
        .filter(|(id, _)| opts.only.is_empty() || opts.only.contains(id))
        .map(|&(id, _)| run_criterion(id, opts))
        .collect()
}

pub fn run_criterion(id: u8, opts: &VerifyOptions) -> Result<CriterionResult> {
    let t0 = Instant::now();
    let (outcome, detail) = match id {
        1 => pareto_ratio(opts)?,
        2 => two_state_ratio(opts)?,
        3 => series_oracle()?,
        4 => bounded_walk(opts)?,
        5 => poisson_oracle(opts)?,
        6 => continuous_ratio(opts)?,
        7 => counterexample(opts)?,
        8 => slln(opts)?,
        9 => appendix(opts)?,
        10 => determinism(opts)?,
        _ => (Outcome::Fail, format!("no criterion {id}")),
    };
    let name = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1);
    Ok(CriterionResult {
        id,
        name: name.to_string(),
        outcome,
        detail,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

fn stock(name: &str, opts: &VerifyOptions) -> Result<Scenario> {
    let mut s = Scenario::stock(name)?;
    if opts.quick {
        s.run.paths = s.run.paths.min(100_000);
    }
    if let Some(w) = opts.workers {
        s.run.workers = w;
    }
    Ok(s)
}

/// Ratio at the level nearest `P̂ = 10⁻³` plus the trend verdict.
fn judge_ratio(report: &TailReport) -> (Outcome, String) {
    let rr = ratio_report(report);
    let near = report.level_near(RATIO_LEVEL).and_then(|i| Some((i, report.ratio(i)?)));
    let Some((i, r)) = near else {
        return (Outcome::Inconclusive, "no level with a positive estimate".into());
    };
    let in_band = r >= RATIO_BAND.0 && r <= RATIO_BAND.1;
    let outcome = match (in_band, rr.verdict) {
        (false, _) | (_, Verdict::Inconsistent) => Outcome::Fail,
        (true, Verdict::Inconclusive) => Outcome::Inconclusive,
        (true, Verdict::Consistent) => Outcome::Pass,
    };
    let first = rr.rows.first().map_or(f64::NAN, |r| r.ratio);
    let last = rr.rows.last().map_or(f64::NAN, |r| r.ratio);
    let detail = format!(
        "ratio {r:.4} at y = {:.5} (P̂ = {:.3e}), band [{}, {}]; trend {} ({first:.3} .. {last:.3})",
        report.y_grid[i], report.phat[i], RATIO_BAND.0, RATIO_BAND.1, rr.label
    );
    (outcome, detail)
}

fn pareto_ratio(opts: &VerifyOptions) -> Result<(Outcome, String)> {
    let s = stock("pareto", opts)?;
    let k = s.constants()?;
    let (o, d) = judge_ratio(&s.resolved()?.simulate()?);
    Ok((o, format!("a = {:.4}, C = {:.4}; {d}", k.a, k.c)))
}

fn two_state_ratio(opts: &VerifyOptions) -> Result<(Outcome, String)> {
    let s = stock("two_state", opts)?;
    let k = s.constants()?;
    let consts_ok = (k.a - 0.6).abs() < 1e-9 && (k.c - 0.7).abs() < 1e-9 && k.kappa < 0.0;
    let (o, d) = judge_ratio(&s.resolved()?.simulate()?);
    let o = if consts_ok { o } else { Outcome::Fail };
    Ok((o, format!("a = {:.4}, C = {:.4}, kappa = {:.4}; {d}", k.a, k.c, k.kappa)))
}

fn series_oracle() -> Result<(Outcome, String)> {
    let mut worst: (f64, f64, &str) = (1.0, 0.0, "");
    for name in ["pareto", "two_state"] {
        let Model::Discrete(spec) = Scenario::stock(name)?.model()? else {
            unreachable!("discrete stock scenario")
        };
        let it = |y: f64| spec.reference.int_tail(y);
        let hi = crate::numeric::expand_until(1.0, |y| it(y) <= 1e-3, 200).unwrap_or(1e6);
        let y0 = bisect(|y| it(y) - 1e-3, 0.0, hi, 1e-9);
        for m in [1.0, 2.0, 5.0, 10.0, 100.0] {
            let y = y0 * m;
            let r = big_jump_series(&spec, y, 0.0)? / crate::discrete::asymptote(&spec, y)?;
            if (r - 1.0).abs() > (worst.0 - 1.0).abs() {
                worst = (r, y, name);
            }
        }
    }
    let ok = worst.0 >= SERIES_BAND.0 && worst.0 <= SERIES_BAND.1;
    Ok((
        if ok { Outcome::Pass } else { Outcome::Fail },
        format!("worst ratio {:.5} ({} at y = {:.1}), band [{}, {}]", worst.0, worst.2, worst.1, SERIES_BAND.0, SERIES_BAND.1),
    ))
}

/// Two Pareto(2)-dominated increment laws with truncated means below -1/4.
pub fn probe_family() -> Result<ProbeFamily> {
    let f = TailLaw::pareto(2.0, 1.0)?;
    Ok(ProbeFamily {
        reference: f.clone(),
        laws: vec![
            TailLaw::shifted(f, -1.5)?,
            TailLaw::shifted(TailLaw::pareto(2.0, 0.6)?, -1.2)?,
        ],
    })
}

fn bounded_walk(opts: &VerifyOptions) -> Result<(Outcome, String)> {
    let fam = probe_family()?;
    let c = iceland_constants(&fam.reference, 0.25, 1.0)?;
    let r = c.residuals();
    let ineq = [r.tail_mean, r.tail_prob, r.drift_margin].into_iter().fold(f64::NEG_INFINITY, f64::max);
    let eq = [r.s_residual, r.k0_residual, r.k_residual].into_iter().map(f64::abs).fold(0.0, f64::max);
    let n = if opts.quick { 10_000 } else { 100_000 };
    let rep = exp_bound_probe(&c, &fam, n, None, 4, opts.workers.unwrap_or(1))?;
    let ok = ineq <= RESIDUAL_TOL && eq < RESIDUAL_TOL && rep.violations == 0;
    Ok((
        if ok { Outcome::Pass } else { Outcome::Fail },
        format!(
            "y* = {:.4}, eps = {:.4e}, K0 = {:.4}, K = {:.4}, s = {:.4e}; max inequality slack {ineq:.2e}, max equation residual {eq:.2e}; {} violations over {} levels up to y = {:.1} (N = {n})",
            c.ystar,
            c.epsilon,
            c.k0,
            c.k,
            c.s,
            rep.violations,
            rep.y_grid.len(),
            rep.y_grid.last().copied().unwrap_or(0.0)
        ),
    ))
}

fn poisson_oracle(opts: &VerifyOptions) -> Result<(Outcome, String)> {
    let base = stock("cts_poisson", opts)?.resolved()?;
    let reps = if opts.quick { 20 } else { POISSON_REPS };
    let need = (POISSON_MIN_COVERED * reps).div_ceil(POISSON_REPS);
    let levels = base.y_grid()?;
    let exact: Vec<f64> = levels.iter().map(|&y| 0.5 * (-0.5 * y).exp()).collect();
    let mut covered = vec![0usize; levels.len()];
    for rep in 0..reps {
        let mut s = base.clone();
        s.run.seed = base.run.seed.wrapping_add(rep as u64);
        let r = s.simulate()?;
        for (i, p) in exact.iter().enumerate() {
            if r.ci_lo[i] <= *p && *p <= r.ci_hi[i] {
                covered[i] += 1;
            }
        }
    }
    let ok = covered.iter().all(|&k| k >= need);
    let per: Vec<String> = levels.iter().zip(&covered).map(|(y, k)| format!("y={y}: {k}/{reps}")).collect();
    Ok((
        if ok { Outcome::Pass } else { Outcome::Fail },
        format!("exact value inside the 95% interval {} (need {need}), N = {} per rep", per.join(", "), base.run.paths),
    ))
}

fn continuous_ratio(opts: &VerifyOptions) -> Result<(Outcome, String)> {
    let s = stock("cts_pareto", opts)?.resolved()?;
    let coarse = s.simulate()?;
    let (ratio_o, d) = judge_ratio(&coarse);
    let mut fine = s.clone();
    let c = fine.continuous.as_mut().expect("continuous stock scenario");
    c.delta = c.delta.map(|v| v / 2.0);
    c.grid_dt = c.grid_dt.map(|v| v / 2.0);
    let fine = fine.simulate()?;
    // Largest move relative to the coarse interval width, over reliable levels.
    let shift = (0..coarse.y_grid.len())
        .filter(|&i| coarse.reliable(i))
        .map(|i| (fine.phat[i] - coarse.phat[i]).abs() / (coarse.ci_hi[i] - coarse.ci_lo[i]))
        .fold(0.0, f64::max);
    let o = Outcome::all(&[ratio_o, if shift < 1.0 { Outcome::Pass } else { Outcome::Fail }]);
    Ok((o, format!("{d}; halving delta and grid_dt moves P̂ by {shift:.3} interval widths")))
}

fn counterexample(opts: &VerifyOptions) -> Result<(Outcome, String)> {
    let mut p = CounterexampleParams::default();
    if opts.quick {
        p.n_paths = 20_000;
    }
    if let Some(w) = opts.workers {
        p.workers = w;
    }
    let main = run_counterexample(&p)?;
    let ctrl = run_counterexample(&CounterexampleParams { control: true, ..p.clone() })?;
    let main_ok = main.d4 == Verdict::Consistent && main.ratio_f.verdict == Verdict::Inconsistent && main.growth > 2.0;
    let ctrl_o = match ctrl.ratio_f.verdict {
        Verdict::Consistent => Outcome::Pass,
        Verdict::Inconclusive => Outcome::Inconclusive,
        Verdict::Inconsistent => Outcome::Fail,
    };
    let o = Outcome::all(&[if main_ok { Outcome::Pass } else { Outcome::Fail }, ctrl_o]);
    Ok((
        o,
        format!(
            "cycle-tail check at b = {} {}, kappa = {:.3}, ratio trend {} (growth {:.1}); control trend {} (growth {:.2})",
            p.b, main.d4_label, main.kappa, main.ratio_f.label, main.growth, ctrl.ratio_f.label, ctrl.growth
        ),
    ))
}

fn slln(opts: &VerifyOptions) -> Result<(Outcome, String)> {
    let (n, t) = if opts.quick { (100_000, 10_000.0) } else { (1_000_000, 100_000.0) };
    let mut parts = Vec::new();
    let mut ok = true;
    for (k, name) in crate::scenario::STOCK.iter().enumerate() {
        let s = Scenario::stock(name)?;
        let seed = 1000 + k as u64;
        let rep = match (s.mode, s.model()?) {
            (Mode::Discrete, Model::Discrete(spec)) => slln_check(&spec, n, 8, SLLN_TOL, seed)?,
            (_, Model::Continuous(spec)) => {
                let delta = s.resolved()?.continuous.and_then(|c| c.delta).unwrap_or(0.1);
                cts_slln_check(&spec, t, 8, SLLN_TOL, delta, seed)?
            }
            _ => unreachable!("mode matches model"),
        };
        let worst = rep.observed.iter().map(|v| (v + rep.a).abs()).fold(0.0, f64::max);
        let good = rep.observed.iter().filter(|v| (**v + rep.a).abs() < SLLN_TOL).count();
        ok &= rep.pass;
        parts.push(format!("{name} {good}/8 (max dev {worst:.4})"));
    }
    Ok((
        if ok { Outcome::Pass } else { Outcome::Fail },
        format!("n = {n}, t = {t}: {}", parts.join(", ")),
    ))
}

fn appendix(opts: &VerifyOptions) -> Result<(Outcome, String)> {
    let mut cfg = AppendixConfig::default();
    if opts.quick {
        cfg.n_samples = 2_000_000;
    }
    let r = verify_appendix_lemmas(&cfg)?;
    let mut parts: Vec<String> = r
        .sums
        .iter()
        .map(|s| {
            let ratios: Vec<String> = s.rows.iter().map(|r| format!("{:.3}", r.ratio)).collect();
            format!("{} [{}] -> {} {}", s.label, ratios.join(" "), s.target, if s.pass { "ok" } else { "off" })
        })
        .collect();
    let top = r.int_tail_rows.last().map_or(f64::NAN, |r| r.ratio);
    parts.push(format!("int-tail difference {top:.4}"));
    parts.push(format!("pareto {}, exponential {}", r.pareto.verdict, r.exponential.verdict));
    Ok((if r.pass { Outcome::Pass } else { Outcome::Fail }, parts.join("; ")))
}

fn determinism(opts: &VerifyOptions) -> Result<(Outcome, String)> {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["two_state", "cts_two_state"] {
        let mut s = Scenario::stock(name)?;
        s.run.paths = 20_000;
        s.run.workers = opts.workers.unwrap_or(3);
        let s = s.resolved()?;
        let a = s.simulate()?.to_csv();
        let b = s.simulate()?.to_csv();
        ok &= a == b;
        parts.push(format!("{name}: {} bytes {}", a.len(), if a == b { "identical" } else { "differ" }));
    }
    Ok((if ok { Outcome::Pass } else { Outcome::Fail }, parts.join(", ")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_combination() {
        use Outcome::*;
        assert_eq!(Outcome::all(&[Pass, Pass]), Pass);
        assert_eq!(Outcome::all(&[Pass, Inconclusive]), Inconclusive);
        assert_eq!(Outcome::all(&[Inconclusive, Fail]), Fail);
    }

    #[test]
    fn numerical_criteria() {
        let opts = VerifyOptions::default();
        assert_eq!(run_criterion(3, &opts).unwrap().outcome, Outcome::Pass);
        let r = run_criterion(11, &opts).unwrap();
        assert_eq!(r.outcome, Outcome::Fail);
    }

    #[test]
    fn probe_family_satisfies_hypotheses() {
        probe_family().unwrap().check(0.25, 1.0).unwrap();
    }
}
