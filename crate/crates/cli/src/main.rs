use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use modtail_core::continuous::cts_iceland_s;
use modtail_core::discrete::iceland_constants;
use modtail_core::estimation::{run_counterexample, CounterexampleParams};
use modtail_core::scenario::{GridSpec, Mode, Model, Scenario, Summary, STOCK};
use modtail_core::verify::{verify, Outcome, VerifyOptions};
use modtail_core::{Error, TailLaw};

#[derive(Parser)]
#[command(name = "modtail", version, about = "Tail asymptotics of suprema of modulated random walks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Scenario file (.toml, or a .json summary) or the name of a stock scenario.
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for CSV and summary files.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    paths: Option<u64>,
    /// Geometric level grid `lo:hi:steps`.
    #[arg(long)]
    y_grid: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print a, C and kappa with its truncation trace.
    Constants(Common),
    /// Estimate P(M > y) and write the tail report as CSV with a JSON summary.
    Simulate(Common),
    /// Write the asymptote curve (C/a) F^I(y) as CSV.
    Asymptote(Common),
    /// Run the acceptance battery.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated criterion numbers.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Smaller sample sizes; outcomes are indicative only.
        #[arg(long)]
        quick: bool,
    },
    /// Run the example where the cycle-tail condition fails.
    Counterexample {
        #[command(flatten)]
        common: Common,
        /// Use geometric cycles of the same mean instead.
        #[arg(long)]
        control: bool,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Constants of the bounded-jump construction for the scenario's reference law.
    Iceland {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.25)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Continuous time only.
        #[arg(long)]
        gamma: Option<f64>,
        /// Continuous time only; defaults to the first triple's v2.
        #[arg(long)]
        v2: Option<f64>,
        /// Continuous time only; defaults to alpha/4.
        #[arg(long)]
        epsilon: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Error>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn load(c: &Common) -> anyhow::Result<Scenario> {
    let name = c.config.as_deref().context("--config is required")?;
    let mut s = if STOCK.contains(&name) && !Path::new(name).exists() {
        Scenario::stock(name)?
    } else {
        Scenario::load(Path::new(name))?
    };
    if let Some(seed) = c.seed {
        s.run.seed = seed;
    }
    if let Some(w) = c.workers {
        s.run.workers = w;
    }
    if let Some(p) = c.paths {
        s.run.paths = p;
    }
    if let Some(g) = &c.y_grid {
        s.run.y_grid = Some(GridSpec::parse(g)?);
    }
    s.model()?;
    if s.name.is_empty() {
        s.name = "scenario".into();
    }
    Ok(s)
}

fn out_dir(c: &Common) -> anyhow::Result<PathBuf> {
    let dir = c.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn run(cmd: Cmd) -> anyhow::Result<ExitCode> {
    match cmd {
        Cmd::Constants(c) => {
            let s = load(&c)?;
            let k = s.constants()?;
            println!("a = {}", k.a);
            println!("C = {}", k.c);
            println!("kappa = {}", k.kappa);
            println!("mean_cycle = {}", k.mean_cycle);
            println!("class_probs = {:?}", k.class_probs);
            println!("beta,sup_truncated_mean");
            for (b, m) in k.kappa_trace.beta.iter().zip(&k.kappa_trace.sup_truncated_mean) {
                println!("{b},{m}");
            }
            for w in s.warnings()? {
                eprintln!("warning: {w}");
            }
            if c.out_dir.is_some() {
                let summary = Summary {
                    command: "constants".into(),
                    config: s.resolved()?,
                    a: k.a,
                    c: k.c,
                    kappa: k.kappa,
                    verdict: None,
                    bias_bound: None,
                    mean_stop: None,
                    warnings: s.warnings()?,
                };
                let path = out_dir(&c)?.join(format!("{}.constants.json", s.name));
                write(&path, &serde_json::to_string_pretty(&summary)?)?;
            }
        }
        Cmd::Simulate(c) => {
            let s = load(&c)?;
            for w in s.warnings()? {
                eprintln!("warning: {w}");
            }
            let (report, ratios, summary) = s.simulate_with_summary()?;
            let dir = out_dir(&c)?;
            write(&dir.join(format!("{}.csv", s.name)), &report.to_csv())?;
            write(
                &dir.join(format!("{}.summary.json", s.name)),
                &serde_json::to_string_pretty(&summary)?,
            )?;
            print!("{}", ratios.table());
            println!("verdict = {}", ratios.label);
            println!("bias_bound = {:e}", report.bias_bound);
        }
        Cmd::Asymptote(c) => {
            let s = load(&c)?;
            let m = s.model()?;
            let mut csv = String::from("y,asymptote\n");
            for y in s.y_grid()? {
                let v = if y > 0.0 { m.asymptote(y)? } else { f64::NAN };
                csv.push_str(&format!("{y},{v}\n"));
            }
            if c.out_dir.is_some() {
                write(&out_dir(&c)?.join(format!("{}.asymptote.csv", s.name)), &csv)?;
            } else {
                print!("{csv}");
            }
        }
        Cmd::Verify { common, only, quick } => {
            let opts = VerifyOptions {
                only,
                quick,
                workers: common.workers,
            };
            let results = verify(&opts)?;
            for r in &results {
                println!("{}", r.line());
            }
            if common.out_dir.is_some() {
                let path = out_dir(&common)?.join("verify.json");
                write(&path, &serde_json::to_string_pretty(&results)?)?;
            }
            let has = |o: Outcome| results.iter().any(|r| r.outcome == o);
            return Ok(if has(Outcome::Fail) {
                ExitCode::from(1)
            } else if has(Outcome::Inconclusive) {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            });
        }
        Cmd::Counterexample {
            common,
            control,
            gamma,
            c,
            b,
            d,
            epsilon,
        } => {
            let mut p = CounterexampleParams {
                control,
                ..Default::default()
            };
            p.gamma = gamma.unwrap_or(p.gamma);
            p.c = c.unwrap_or(p.c);
            p.b = b.unwrap_or(p.b);
            p.d = d.unwrap_or(p.d);
            p.epsilon = epsilon.unwrap_or(p.epsilon);
            p.seed = common.seed.unwrap_or(p.seed);
            p.workers = common.workers.unwrap_or(p.workers);
            p.n_paths = common.paths.unwrap_or(p.n_paths);
            if let Some(g) = &common.y_grid {
                p.y_grid = GridSpec::parse(g)?.levels()?;
            }
            let r = run_counterexample(&p)?;
            println!("a = {}", r.a);
            println!("C = {}", r.c_weight);
            println!("kappa = {}", r.kappa);
            println!("mean_cycle = {}", r.mean_cycle);
            println!("cycle_tail_check(b = {}) = {}", p.b, r.d4_label);
            print!("{}", r.ratio_f.table());
            println!("ratio_trend = {}", r.ratio_f.label);
            println!("growth = {}", r.growth);
            if let Some(m) = r.min_ratio_h() {
                println!("min_ratio_to_h = {m}");
            }
            if common.out_dir.is_some() {
                let dir = out_dir(&common)?;
                let stem = if control { "counterexample_control" } else { "counterexample" };
                write(&dir.join(format!("{stem}.csv")), &r.tail.to_csv())?;
                write(&dir.join(format!("{stem}.summary.json")), &serde_json::to_string_pretty(&r)?)?;
            }
        }
        Cmd::Iceland {
            common,
            alpha,
            beta,
            gamma,
            v2,
            epsilon,
        } => {
            let s = match common.config {
                Some(_) => Some(load(&common)?),
                None => None,
            };
            match s.as_ref().map(|s| (s.mode, s.model())) {
                Some((Mode::Continuous, m)) => {
                    let Model::Continuous(spec) = m? else { unreachable!() };
                    let gamma = gamma.context("--gamma is required in continuous time")?;
                    let v2 = v2.unwrap_or(spec.triples[0].v2);
                    let eps = epsilon.unwrap_or(alpha / 4.0);
                    let (ystar, sv) = cts_iceland_s(&spec.reference, alpha, beta, gamma, v2, eps)?;
                    println!("ystar = {ystar}");
                    println!("epsilon = {eps}");
                    println!("s = {sv}");
                }
                other => {
                    let reference = match other {
                        Some((_, m)) => match m? {
                            Model::Discrete(spec) => spec.reference,
                            Model::Continuous(_) => unreachable!(),
                        },
                        None => TailLaw::pareto(2.0, 1.0)?,
                    };
                    let k = iceland_constants(&reference, alpha, beta)?;
                    println!("ystar = {}", k.ystar);
                    println!("epsilon = {}", k.epsilon);
                    println!("m = {}", k.m);
                    println!("K0 = {}", k.k0);
                    println!("K = {}", k.k);
                    println!("s = {}", k.s);
                    let r = k.residuals();
                    println!("residuals = {}", serde_json::to_string(&r)?);
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
