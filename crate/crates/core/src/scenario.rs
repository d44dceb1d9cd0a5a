//! Scenario files: one structured document describing a walk and how to
//! simulate it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::continuous::{cts_asymptote, CtsSampler, CtsSpec, LevyTriple, Sojourn};
use crate::discrete::{asymptote, DiscreteSampler};
use crate::error::{Error, Result};
use crate::estimation::{estimate_tail, ratio_report, RatioReport, TailReport};
use crate::levy::LevyMeasure;
use crate::modulation::{default_beta_grid, drift_constant, kappa, weight_constant, KappaTrace, Modulated, Modulator, WalkSpec};
use crate::numeric::{geomspace, linspace};
use crate::sampler::{SkipParams, SupremumSampler, TruncationRule, DEFAULT_CAP, DEFAULT_SAFETY};
use crate::tail_laws::TailLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteModel {
    pub laws: Vec<TailLaw>,
    pub reference: TailLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousModel {
    pub triples: Vec<LevyTriple>,
    pub reference: LevyMeasure,
    #[serde(default)]
    pub sojourn: Sojourn,
    /// Small-jump threshold; defaults to the smallest per-triple default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Geometric,
    Linear,
}

/// Either explicit levels or `lo:hi:steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Points(Vec<f64>),
    Range {
        lo: f64,
        hi: f64,
        steps: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

impl GridSpec {
    /// Parses `lo:hi:steps`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::config("y_grid", format!("expected lo:hi:steps, got `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
        Ok(GridSpec::Range {
            lo,
            hi,
            steps,
            spacing: Spacing::Geometric,
        })
    }

    pub fn levels(&self) -> Result<Vec<f64>> {
        let v = match *self {
            GridSpec::Points(ref p) => p.clone(),
            GridSpec::Range { lo, hi, steps, spacing } => {
                if !(lo.is_finite() && hi > lo && steps >= 2) {
                    return Err(Error::config("run.y_grid", "need lo < hi and at least two steps"));
                }
                match spacing {
                    Spacing::Geometric if lo <= 0.0 => {
                        return Err(Error::config("run.y_grid.lo", "geometric spacing needs lo > 0"));
                    }
                    Spacing::Geometric => geomspace(lo, hi, steps),
                    Spacing::Linear => linspace(lo, hi, steps),
                }
            }
        };
        if v.is_empty() || v.iter().any(|y| !y.is_finite()) || v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("run.y_grid", "levels must be finite and strictly increasing"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSettings {
    /// Cut distance below the running maximum; derived from the asymptote
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    /// Steps (discrete) or time (continuous) before a cut is allowed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_steps: Option<f64>,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_cap")]
    pub cap: f64,
    #[serde(default = "yes")]
    pub accelerate: bool,
}

fn default_safety() -> f64 {
    DEFAULT_SAFETY
}
fn default_cap() -> f64 {
    DEFAULT_CAP
}
fn yes() -> bool {
    true
}

impl Default for TruncationSettings {
    fn default() -> Self {
        TruncationSettings {
            level: None,
            min_steps: None,
            safety: DEFAULT_SAFETY,
            cap: DEFAULT_CAP,
            accelerate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    #[serde(default = "default_paths")]
    pub paths: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Defaults to one decade ending where the asymptote predicts about 1000
    /// exceedances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_grid: Option<GridSpec>,
    #[serde(default)]
    pub truncation: TruncationSettings,
}

fn default_paths() -> u64 {
    100_000
}
fn default_seed() -> u64 {
    1
}
fn default_workers() -> usize {
    1
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            paths: default_paths(),
            seed: default_seed(),
            workers: default_workers(),
            y_grid: None,
            truncation: TruncationSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub mode: Mode,
    pub modulator: Modulator,
    /// Tail weights `c_x`, one per class.
    pub c: Vec<f64>,
    /// Factor `b` for which the cycle-tail condition is claimed, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discrete: Option<DiscreteModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuous: Option<ContinuousModel>,
    #[serde(default)]
    pub run: RunSettings,
}

/// Validated walk built from a scenario.
#[derive(Debug, Clone)]
pub enum Model {
    Discrete(WalkSpec),
    Continuous(CtsSpec),
}

impl Model {
    fn modulated(&self) -> &dyn Modulated {
        match self {
            Model::Discrete(s) => s,
            Model::Continuous(s) => s,
        }
    }

    pub fn a(&self) -> Result<f64> {
        drift_constant(self.modulated())
    }

    pub fn c(&self) -> f64 {
        weight_constant(self.modulated())
    }

    pub fn kappa(&self) -> Result<KappaTrace> {
        kappa(self.modulated(), &default_beta_grid())
    }

    pub fn asymptote(&self, y: f64) -> Result<f64> {
        match self {
            Model::Discrete(s) => asymptote(s, y),
            Model::Continuous(s) => cts_asymptote(s, y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub a: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub kappa: f64,
    pub kappa_trace: KappaTrace,
    pub class_probs: Vec<f64>,
    pub mean_cycle: f64,
}

/// Machine-readable record written next to every CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub config: Scenario,
    pub a: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_stop: Option<f64>,
    pub warnings: Vec<String>,
}

fn wrap(field: &str, e: Error) -> Error {
    match e {
        Error::ConfigInvalid { .. } | Error::NonNegativeDrift(_) => e,
        other => Error::config(field, other.to_string()),
    }
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(s).map_err(|e| Error::config("toml", e.message().to_string()))?;
        sc.model()?;
        Ok(sc)
    }

    /// Loads a TOML scenario, a JSON scenario, or the `config` of a JSON summary.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::config("json", e.to_string()))?;
            if let Some(c) = v.get_mut("config") {
                v = c.take();
            }
            let sc: Scenario = serde_json::from_value(v).map_err(|e| Error::config("json", e.to_string()))?;
            sc.model()?;
            Ok(sc)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Builds and validates the walk, including `a > 0`.
    pub fn model(&self) -> Result<Model> {
        let m = match (self.mode, &self.discrete, &self.continuous) {
            (Mode::Discrete, Some(d), None) => Model::Discrete(
                WalkSpec::new(self.modulator.clone(), d.laws.clone(), d.reference.clone(), self.c.clone())
                    .map_err(|e| wrap("discrete", e))?,
            ),
            (Mode::Continuous, None, Some(c)) => {
                let spec = CtsSpec::new(
                    self.modulator.clone(),
                    c.triples.clone(),
                    c.reference.clone(),
                    self.c.clone(),
                    c.sojourn,
                )
                .map_err(|e| wrap("continuous", e))?;
                Model::Continuous(spec)
            }
            (Mode::Discrete, _, _) => {
                return Err(Error::config("discrete", "discrete mode needs a [discrete] section and no [continuous] section"));
            }
            (Mode::Continuous, _, _) => {
                return Err(Error::config("continuous", "continuous mode needs a [continuous] section and no [discrete] section"));
            }
        };
        m.a()?;
        if self.run.paths == 0 {
            return Err(Error::config("run.paths", "need at least one path"));
        }
        if let Some(b) = self.b {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::config("b", "must be finite and > 0"));
            }
        }
        Ok(m)
    }

    pub fn warnings(&self) -> Result<Vec<String>> {
        let m = self.model()?;
        let mut w = Vec::new();
        match m.kappa() {
            Ok(k) if k.kappa >= 0.0 && self.b.is_none() => w.push(format!(
                "kappa = {} >= 0 and no cycle-tail factor b is configured; the asymptote needs the cycle-tail condition",
                k.kappa
            )),
            Ok(_) => {}
            Err(e) => w.push(format!("kappa: {e}")),
        }
        Ok(w)
    }

    pub fn constants(&self) -> Result<Constants> {
        let m = self.model()?;
        let k = m.kappa()?;
        Ok(Constants {
            a: m.a()?,
            c: m.c(),
            kappa: k.kappa,
            kappa_trace: k,
            class_probs: m.modulated().class_probs(),
            mean_cycle: self.modulator.mean_cycle(),
        })
    }

    pub fn y_grid(&self) -> Result<Vec<f64>> {
        match &self.run.y_grid {
            Some(g) => g.levels(),
            None => {
                let m = self.model()?;
                let target = (1000.0 / self.run.paths as f64).min(0.1);
                let hi = level_where(|y| m.asymptote(y), target)?;
                Ok(geomspace(hi / 10.0, hi, 9).into_iter().map(round6).collect())
            }
        }
    }

    fn delta_and_dt(&self, spec: &CtsSpec) -> (f64, f64) {
        let c = self.continuous.as_ref().unwrap();
        let delta = c
            .delta
            .unwrap_or_else(|| spec.triples.iter().map(LevyTriple::default_threshold).fold(1.0, f64::min));
        let dt = c.grid_dt.unwrap_or_else(|| {
            let r = spec
                .triples
                .iter()
                .map(|t| t.nu.rate_beyond(delta))
                .fold(0.0, f64::max);
            if r > 0.0 {
                (0.5 / r).min(1.0)
            } else {
                1.0
            }
        });
        (delta, dt)
    }

    pub fn truncation(&self) -> Result<TruncationRule> {
        let m = self.model()?;
        let grid = self.y_grid()?;
        let smallest = self.smallest_target(&grid, &m)?;
        let mut rule = match &m {
            Model::Discrete(s) => TruncationRule::for_walk(s, smallest)?,
            Model::Continuous(s) => TruncationRule::for_cts(s, smallest)?,
        };
        let t = &self.run.truncation;
        if let Some(l) = t.level {
            if !(l > 0.0) {
                return Err(Error::config("run.truncation.level", "must be > 0"));
            }
            rule.level = l;
        }
        if let Some(n) = t.min_steps {
            rule.min_steps = n;
        }
        rule.safety = t.safety;
        rule.cap = t.cap;
        rule.skip = t.accelerate.then(SkipParams::default);
        Ok(rule)
    }

    fn smallest_target(&self, grid: &[f64], m: &Model) -> Result<f64> {
        let mut s = f64::INFINITY;
        for &y in grid.iter().filter(|&&y| y > 0.0) {
            let p = m.asymptote(y)?;
            if p > 0.0 {
                s = s.min(p);
            }
        }
        Ok(if s.is_finite() { s } else { 1.0 / self.run.paths as f64 })
    }

    pub fn sampler(&self) -> Result<Box<dyn SupremumSampler>> {
        let rule = self.truncation()?;
        Ok(match self.model()? {
            Model::Discrete(s) => Box::new(DiscreteSampler::new(s, rule)?),
            Model::Continuous(s) => {
                let (delta, dt) = self.delta_and_dt(&s);
                Box::new(CtsSampler::new(s, rule, delta, dt)?)
            }
        })
    }

    /// Copy with every default made explicit, so that re-running it
    /// reproduces the same output.
    pub fn resolved(&self) -> Result<Scenario> {
        let mut r = self.clone();
        r.run.y_grid = Some(GridSpec::Points(self.y_grid()?));
        let rule = self.truncation()?;
        r.run.truncation.level = Some(rule.level);
        r.run.truncation.min_steps = Some(rule.min_steps);
        if let (Model::Continuous(s), Some(c)) = (self.model()?, r.continuous.as_mut()) {
            let (delta, dt) = self.delta_and_dt(&s);
            c.delta = Some(delta);
            c.grid_dt = Some(dt);
        }
        r.run.workers = r.run.workers.max(1);
        Ok(r)
    }

    pub fn simulate(&self) -> Result<TailReport> {
        let m = self.model()?;
        let grid = self.y_grid()?;
        let sampler = self.sampler()?;
        estimate_tail(sampler.as_ref(), &grid, self.run.paths, self.run.seed, self.run.workers)?
            .with_asymptote(|y| if y > 0.0 { m.asymptote(y) } else { Ok(f64::NAN) })
    }

    /// Runs [`Scenario::simulate`] and collects the summary record.
    pub fn simulate_with_summary(&self) -> Result<(TailReport, RatioReport, Summary)> {
        let resolved = self.resolved()?;
        let report = resolved.simulate()?;
        let rr = ratio_report(&report);
        let k = resolved.constants()?;
        let summary = Summary {
            command: "simulate".into(),
            config: resolved.clone(),
            a: k.a,
            c: k.c,
            kappa: k.kappa,
            verdict: Some(rr.label.clone()),
            bias_bound: Some(report.bias_bound),
            mean_stop: Some(report.mean_stop),
            warnings: resolved.warnings()?,
        };
        Ok((report, rr, summary))
    }

    pub fn stock(name: &str) -> Result<Scenario> {
        let text = match name {
            "pareto" => include_str!("../scenarios/pareto.toml"),
            "two_state" => include_str!("../scenarios/two_state.toml"),
            "cts_pareto" => include_str!("../scenarios/cts_pareto.toml"),
            "cts_poisson" => include_str!("../scenarios/cts_poisson.toml"),
            "cts_two_state" => include_str!("../scenarios/cts_two_state.toml"),
            _ => {
                return Err(Error::config(
                    "scenario",
                    format!("unknown stock scenario `{name}`; known: {}", STOCK.join(", ")),
                ))
            }
        };
        Scenario::from_toml_str(text)
    }
}

pub const STOCK: [&str; 5] = ["pareto", "two_state", "cts_pareto", "cts_poisson", "cts_two_state"];

/// Six significant digits, so that grids print and re-parse cleanly.
fn round6(y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let e = 5 - y.abs().log10().floor() as i32;
    let p = 10f64.powi(e.abs());
    if e >= 0 {
        (y * p).round() / p
    } else {
        (y / p).round() * p
    }
}

/// Level where a decreasing function crosses `target`.
fn level_where<F: Fn(f64) -> Result<f64>>(f: F, target: f64) -> Result<f64> {
    let mut hi = 1.0;
    while f(hi)? > target {
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::config("run.y_grid", "asymptote does not fall below the target; give y_grid explicitly"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 {
            break;
        }
        if f(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 * hi {
            break;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stock_constants() {
        let k = Scenario::stock("two_state").unwrap().constants().unwrap();
        assert_relative_eq!(k.a, 0.6, max_relative = 1e-9);
        assert_relative_eq!(k.c, 0.7, max_relative = 1e-12);
        assert!(k.kappa < 0.0);
        let p = Scenario::stock("pareto").unwrap();
        assert_relative_eq!(p.model().unwrap().asymptote(9.0).unwrap(), 0.17391, max_relative = 1e-4);
        for name in STOCK {
            Scenario::stock(name).unwrap();
        }
    }

    #[test]
    fn round_trip_through_toml_and_json() {
        for name in STOCK {
            let s = Scenario::stock(name).unwrap().resolved().unwrap();
            let back = Scenario::from_toml_str(&s.to_toml()).unwrap();
            assert_eq!(back, s, "{name}");
            let json = serde_json::to_string(&s).unwrap();
            let again: Scenario = serde_json::from_str(&json).unwrap();
            assert_eq!(again, s);
            assert_eq!(back.resolved().unwrap(), s);
        }
    }

    #[test]
    fn rejects_nonpositive_drift() {
        let text = include_str!("../scenarios/pareto.toml").replace("offset = -1.5", "offset = -0.5");
        let e = Scenario::from_toml_str(&text).unwrap_err();
        assert!(e.to_string().contains("finite and strictly positive"), "{e}");
    }

    #[test]
    fn field_errors() {
        let text = include_str!("../scenarios/pareto.toml").replace("mode = \"discrete\"", "mode = \"continuous\"");
        match Scenario::from_toml_str(&text).unwrap_err() {
            Error::ConfigInvalid { field, .. } => assert_eq!(field, "continuous"),
            e => panic!("{e}"),
        }
        let e = Scenario::from_toml_str("mode = \"discrete\"\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, Error::ConfigInvalid { .. }));
        assert!(GridSpec::parse("1:2").is_err());
        assert_eq!(GridSpec::parse("1:100:3").unwrap().levels().unwrap().len(), 3);
    }

    #[test]
    fn default_grid_ends_near_target() {
        let mut s = Scenario::stock("pareto").unwrap();
        s.run.y_grid = None;
        s.run.paths = 1_000_000;
        let g = s.y_grid().unwrap();
        assert_relative_eq!(*g.last().unwrap(), 1997.5, max_relative = 1e-6);
        assert_relative_eq!(g[0], 199.75, max_relative = 1e-6);
    }

    #[test]
    fn kappa_warning() {
        let mut s = Scenario::stock("two_state").unwrap();
        assert!(s.warnings().unwrap().is_empty());
        // Make one class drift upward when truncated: κ >= 0.
        if let Some(d) = s.discrete.as_mut() {
            d.laws[1] = TailLaw::shifted(TailLaw::pareto(2.0, 0.4f64.sqrt()).unwrap(), 0.0).unwrap();
            d.laws[0] = TailLaw::shifted(TailLaw::pareto(2.0, 1.0).unwrap(), -4.0).unwrap();
            d.reference = TailLaw::pareto(2.0, 1.0).unwrap();
        }
        let w = s.warnings().unwrap();
        assert_eq!(w.len(), 1, "{w:?}");
    }
}
