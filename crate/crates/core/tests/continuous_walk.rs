use modtail_core::continuous::{cts_asymptote, cts_slln_check, simulate_cts_path, CtsSampler, CtsSpec, LevyTriple, Sojourn};
use modtail_core::estimation::estimate_tail;
use modtail_core::levy::LevyMeasure;
use modtail_core::rng::stream;
use modtail_core::{Modulator, SupremumSampler, TailLaw, TruncationRule};

fn cp_exp() -> CtsSpec {
    let nu = LevyMeasure::compound_poisson(1.0, TailLaw::exponential(1.0).unwrap()).unwrap();
    CtsSpec::single(LevyTriple::new(nu, 0.0, -1.0).unwrap()).unwrap()
}

#[test]
fn compound_poisson_matches_exponential_ruin() {
    let spec = cp_exp();
    let rule = TruncationRule::for_cts(&spec, 0.1).unwrap();
    let s = CtsSampler::new(spec, rule, 0.1, 0.1).unwrap();
    let n = 40_000;
    let r = estimate_tail(&s, &[0.0, 1.0, 2.0, 4.0], n, 7, 1).unwrap();
    for (i, &y) in r.y_grid.iter().enumerate() {
        let exact = 0.5 * (-0.5 * y).exp();
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((r.phat[i] - exact).abs() < 4.0 * se, "y={y} phat={} exact={exact}", r.phat[i]);
    }
}

#[test]
fn diffusion_only_supremum_is_exponential() {
    // Brownian motion with drift -1 and variance 2 has P(M > y) = e^{-y}.
    let spec = CtsSpec::single(LevyTriple::new(LevyMeasure::zero(), 2.0, -1.0).unwrap()).unwrap();
    let s = CtsSampler::new(spec, TruncationRule::new(30.0, 10.0), 0.1, 0.1).unwrap();
    let n = 20_000;
    let r = estimate_tail(&s, &[0.5, 1.0, 2.0], n, 3, 1).unwrap();
    for (i, &y) in r.y_grid.iter().enumerate() {
        let exact = (-y).exp();
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((r.phat[i] - exact).abs() < 4.0 * se, "y={y} phat={} exact={exact}", r.phat[i]);
    }
}

#[test]
fn compensated_paths_follow_the_mean_drift() {
    let spec = cp_exp();
    let rep = cts_slln_check(&spec, 1e4, 8, 0.05, 0.1, 11).unwrap();
    assert!(rep.pass, "{:?}", rep.observed);
    let mut tot = 0.0;
    for k in 0..200 {
        tot += simulate_cts_path(&spec, 10.0, 0.1, 0.5, &mut stream(k, 0)).unwrap().terminal();
    }
    assert!((tot / 200.0 / 10.0 + 1.0).abs() < 0.1);
}

#[test]
fn exponential_sojourns_run() {
    let nu0 = LevyMeasure::pareto_tail(2.0, 1.0, 1.0).unwrap();
    let nu1 = LevyMeasure::pareto_tail(2.0, 1.0, 0.5).unwrap();
    let m = Modulator::finite_markov(vec![vec![0.0, 1.0], vec![1.0, 0.0]], None, 0).unwrap();
    let spec = CtsSpec::new(
        m,
        vec![LevyTriple::new(nu0.clone(), 0.0, -1.0).unwrap(), LevyTriple::new(nu1, 1.0, -0.5).unwrap()],
        nu0,
        vec![1.0, 0.5],
        Sojourn::Exponential { mean: 0.5 },
    )
    .unwrap();
    // a = 0.75, C = 0.75: asymptote is ν̄ᴵ(y).
    assert!((cts_asymptote(&spec, 10.0).unwrap() - 0.1).abs() < 1e-12);
    let rule = TruncationRule::for_cts(&spec, 1e-2).unwrap();
    let s = CtsSampler::new(spec, rule, 0.1, 0.1).unwrap();
    assert!(s.accelerated());
    let mut rng = stream(5, 0);
    for _ in 0..200 {
        assert!(s.sample(&mut rng).unwrap().value >= 0.0);
    }
}

#[test]
fn accelerated_matches_exact() {
    let spec = CtsSpec::single(LevyTriple::new(LevyMeasure::pareto_tail(2.0, 1.0, 1.0).unwrap(), 0.0, -0.5).unwrap()).unwrap();
    let rule = TruncationRule::new(2000.0, 10.0);
    let fast = CtsSampler::new(spec.clone(), rule, 0.1, 0.1).unwrap();
    let slow = CtsSampler::new(spec, rule.exact(), 0.1, 0.1).unwrap();
    assert!(fast.accelerated() && !slow.accelerated());
    let grid = [5.0, 20.0, 80.0];
    let n = 20_000;
    let a = estimate_tail(&fast, &grid, n, 1, 1).unwrap();
    let b = estimate_tail(&slow, &grid, n, 2, 1).unwrap();
    for i in 0..grid.len() {
        let p = 0.5 * (a.phat[i] + b.phat[i]);
        let se = (2.0 * p * (1.0 - p) / n as f64).sqrt();
        assert!((a.phat[i] - b.phat[i]).abs() < 3.5 * se, "y={} {} {}", grid[i], a.phat[i], b.phat[i]);
    }
}
