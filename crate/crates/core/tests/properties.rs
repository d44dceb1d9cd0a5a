use modtail_core::discrete::{asymptote, simulate_path, DiscreteSampler};
use modtail_core::estimation::estimate_tail;
use modtail_core::modulation::{default_beta_grid, drift_constant, kappa};
use modtail_core::numeric::{integrate, wilson};
use modtail_core::rng::stream;
use modtail_core::{LevyMeasure, Modulator, TailLaw, TruncationRule, WalkSpec};
use proptest::prelude::*;

fn law() -> impl Strategy<Value = TailLaw> {
    prop_oneof![
        (1.2f64..4.0, 0.2f64..3.0).prop_map(|(a, s)| TailLaw::pareto(a, s).unwrap()),
        (0.3f64..2.0, 0.2f64..3.0).prop_map(|(k, s)| TailLaw::weibull(k, s).unwrap()),
        (-1.0f64..1.0, 0.2f64..1.5).prop_map(|(m, s)| TailLaw::lognormal(m, s).unwrap()),
        (0.2f64..3.0).prop_map(|r| TailLaw::exponential(r).unwrap()),
    ]
}

/// Two-state alternating walk with Lomax laws shifted down, dominated by Lomax(2, 1).
fn walk() -> impl Strategy<Value = WalkSpec> {
    (0.3f64..1.0, 0.3f64..1.0, 1.1f64..3.0, 1.1f64..3.0).prop_map(|(s0, s1, o0, o1)| {
        let f = TailLaw::pareto(2.0, 1.0).unwrap();
        let laws = vec![
            TailLaw::shifted(TailLaw::pareto(2.0, s0).unwrap(), -o0).unwrap(),
            TailLaw::shifted(TailLaw::pareto(2.0, s1).unwrap(), -o1).unwrap(),
        ];
        let m = Modulator::finite_markov(vec![vec![0.0, 1.0], vec![1.0, 0.0]], None, 0).unwrap();
        WalkSpec::new(m, laws, f, vec![s0 * s0, s1 * s1]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn int_tail_differences_integrate_the_tail(l in law(), y1 in 0.5f64..20.0, gap in 0.1f64..20.0) {
        let y2 = y1 + gap;
        prop_assume!(l.int_tail(y1) < 1.0);
        let d = l.int_tail(y1) - l.int_tail(y2);
        let q = integrate(|z| l.tail(z), y1, y2);
        prop_assert!((d - q).abs() <= 1e-7 * q.max(1e-12) + 1e-13, "{d} vs {q}");
    }

    #[test]
    fn quantile_inverts_the_tail(l in law(), u in 0.001f64..0.999) {
        let x = l.quantile(u).unwrap();
        prop_assert!((l.tail(x) - (1.0 - u)).abs() < 1e-9);
    }

    #[test]
    fn inversion_coupling_is_monotone(shape in 0.3f64..2.0, s in 0.2f64..3.0, k in 1.0f64..3.0, seed in any::<u64>()) {
        let small = TailLaw::weibull(shape, s).unwrap();
        let big = TailLaw::weibull(shape, s * k).unwrap();
        let (mut r1, mut r2) = (stream(seed, 0), stream(seed, 0));
        for _ in 0..100 {
            prop_assert!(small.sample(&mut r1) <= big.sample(&mut r2));
        }
    }

    #[test]
    fn compound_poisson_tail_is_scaled_law_tail(rate in 0.1f64..5.0, l in law(), y in 0.01f64..50.0) {
        let nu = LevyMeasure::compound_poisson(rate, l.clone()).unwrap();
        prop_assert_eq!(nu.nu_tail(y).unwrap(), rate * l.tail(y));
    }

    #[test]
    fn levy_int_tail_derivative_is_minus_tail(alpha in 1.2f64..3.0, scale in 0.5f64..2.0, mass in 0.2f64..3.0, y in 1.0f64..50.0) {
        let nu = LevyMeasure::pareto_tail(alpha, scale, mass).unwrap();
        let h = 1e-4 * y;
        let d = (nu.nu_int_tail(y + h).unwrap() - nu.nu_int_tail(y - h).unwrap()) / (2.0 * h);
        let t = nu.nu_tail(y).unwrap();
        prop_assert!((d + t).abs() < 1e-5 * t, "{d} vs {t}");
    }

    #[test]
    fn kappa_trace_is_nonincreasing(spec in walk()) {
        let k = kappa(&spec, &default_beta_grid()).unwrap();
        prop_assert!(k.sup_truncated_mean.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn reference_increments_never_lower_the_maximum(spec in walk(), seed in any::<u64>()) {
        let heavy = WalkSpec::new(
            spec.modulator.clone(),
            vec![spec.reference.clone(); 2],
            spec.reference.clone(),
            spec.weights.clone(),
        ).unwrap();
        let a = simulate_path(&spec, 300, &mut stream(seed, 0));
        let b = simulate_path(&heavy, 300, &mut stream(seed, 0));
        for i in 0..=300 {
            prop_assert!(a.maxima[i] <= b.maxima[i]);
        }
    }

    #[test]
    fn shifting_increments_shifts_the_drift(spec in walk(), c in -1.0f64..0.0, y in 1.0f64..500.0) {
        let a = drift_constant(&spec).unwrap();
        let laws = spec.laws.iter().map(|l| TailLaw::shifted(l.clone(), c).unwrap()).collect();
        let shifted = WalkSpec::new(spec.modulator.clone(), laws, spec.reference.clone(), spec.weights.clone()).unwrap();
        let b = drift_constant(&shifted).unwrap();
        prop_assert!((b - (a - c)).abs() < 1e-9);
        let lhs = asymptote(&shifted, y).unwrap() * b;
        let rhs = asymptote(&spec, y).unwrap() * a;
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs);
    }

    #[test]
    fn stationary_law_is_invariant(rows in prop::collection::vec(prop::collection::vec(0.05f64..1.0, 3), 3)) {
        let p: Vec<Vec<f64>> = rows.iter().map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|x| x / s).collect()
        }).collect();
        let m = Modulator::finite_markov(p.clone(), None, 0).unwrap();
        let pi = m.stationary_law();
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for j in 0..3 {
            let next: f64 = (0..3).map(|i| pi[i] * p[i][j]).sum();
            prop_assert!((next - pi[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn wilson_interval_brackets_the_estimate(n in 1u64..100_000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson(k, n);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-15 && p <= hi + 1e-15 && hi <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn estimates_are_monotone_and_reproducible(spec in walk(), seed in any::<u64>(), workers in 1usize..4) {
        let sampler = DiscreteSampler::new(spec, TruncationRule::new(60.0, 20.0)).unwrap();
        let grid = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0];
        let r = estimate_tail(&sampler, &grid, 400, seed, workers).unwrap();
        prop_assert!(r.phat.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(r.counts.windows(2).all(|w| w[1] <= w[0]));
        let again = estimate_tail(&sampler, &grid, 400, seed, workers).unwrap();
        prop_assert_eq!(r, again);
    }
}
