use proptest::prelude::*;
use toplag::consistency::{ols, run_consistency, LagRounding};
use toplag::ingest::{standardize, AlignedPair};
use toplag::landscape::{build_landscape, DistanceMode, EnergyLandscape};
use toplag::resample_lag_to_time;
use toplag::synth::oracle::brute_force_min_path;
use toplag::thermal::{thermal_path, ThermalMode};
use toplag::zerotemp::min_energy;
use toplag::Node;

fn series(n: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    n.prop_flat_map(|n| (prop::collection::vec(-5.0..5.0f64, n), prop::collection::vec(-5.0..5.0f64, n)))
}

fn matrix(n: std::ops::Range<usize>) -> impl Strategy<Value = EnergyLandscape> {
    n.prop_flat_map(|n| prop::collection::vec(0.0..2.0f64, n * n).prop_map(move |v| EnergyLandscape::from_matrix(n, v).unwrap()))
}

fn mode() -> impl Strategy<Value = ThermalMode> {
    prop_oneof![Just(ThermalMode::Bridge), Just(ThermalMode::Forward)]
}

fn distance() -> impl Strategy<Value = DistanceMode> {
    prop_oneof![
        Just(DistanceMode::Comonotonic),
        Just(DistanceMode::Antimonotonic),
        Just(DistanceMode::Mixed)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn landscape_is_nonnegative_and_transposes((x, y) in series(2..30), d in distance()) {
        let p = AlignedPair::from_values(x, y).unwrap();
        let l = build_landscape(&p, d);
        let lt = build_landscape(&p.swapped(), d);
        let n = l.n();
        for i in 1..=n {
            for j in 1..=n {
                prop_assert!(l.eps(i, j) >= 0.0);
                prop_assert_eq!(l.eps(i, j), lt.eps(j, i));
            }
        }
    }

    #[test]
    fn mixed_distance_is_the_smaller_mode((x, y) in series(2..20)) {
        let p = AlignedPair::from_values(x, y).unwrap();
        let (m, co, anti) = (
            build_landscape(&p, DistanceMode::Mixed),
            build_landscape(&p, DistanceMode::Comonotonic),
            build_landscape(&p, DistanceMode::Antimonotonic),
        );
        for i in 1..=m.n() {
            for j in 1..=m.n() {
                prop_assert_eq!(m.eps(i, j), co.eps(i, j).min(anti.eps(i, j)));
            }
        }
    }

    #[test]
    fn standardize_is_idempotent((x, y) in series(3..40)) {
        let p = AlignedPair::from_values(x, y).unwrap();
        if let Ok(once) = standardize(&p) {
            let twice = standardize(&once).unwrap();
            for (a, b) in once.x.iter().chain(&once.y).zip(twice.x.iter().chain(&twice.y)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mean_lag_stays_in_the_admissible_cone(l in matrix(2..14), t in 0.1..5.0f64, m in mode()) {
        let n = l.n();
        let p = thermal_path(&l, Node::new(1, 1), Node::new(n, n), t, m).unwrap();
        for tau in p.taus() {
            let x = p.mean_x_at(tau).unwrap();
            let bound = if m == ThermalMode::Bridge { tau.min(2 * (n - 1) - tau) } else { tau.min(n - 1) };
            prop_assert!(x.abs() <= bound as f64 + 1e-9, "tau {} x {}", tau, x);
        }
    }

    #[test]
    fn layer_energy_is_bounded_by_the_landscape(l in matrix(2..12), t in 0.1..5.0f64, m in mode()) {
        let n = l.n();
        let p = thermal_path(&l, Node::new(1, 1), Node::new(n, n), t, m).unwrap();
        let m = l.to_matrix();
        let (lo, hi) = m.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        prop_assert!(p.energy >= lo - 1e-12 && p.energy <= hi + 1e-12);
    }

    #[test]
    fn scaling_energy_and_temperature_together_keeps_the_path(l in matrix(2..12), t in 0.2..3.0f64, s in 0.1..10.0f64, m in mode()) {
        let n = l.n();
        let scaled = EnergyLandscape::from_fn(n, |i, j| s * l.eps(i, j)).unwrap();
        let a = thermal_path(&l, Node::new(1, 1), Node::new(n, n), t, m).unwrap();
        let b = thermal_path(&scaled, Node::new(1, 1), Node::new(n, n), s * t, m).unwrap();
        for (u, v) in a.mean_x.iter().zip(&b.mean_x) {
            prop_assert!((u - v).abs() < 1e-9);
        }
        prop_assert!((s * a.energy - b.energy).abs() < 1e-9 * b.energy.max(1.0));
    }

    #[test]
    fn ground_state_matches_enumeration(l in matrix(2..7), a in 1usize..3, b in 1usize..3) {
        let n = l.n();
        let start = Node::new(a.min(n), b.min(n));
        let end = Node::new(n, n);
        let want = brute_force_min_path(&l, start, end).unwrap();
        let got = min_energy(&l, start, end).unwrap();
        prop_assert!((got - want.energy).abs() < 1e-9);
    }

    #[test]
    fn resampled_lag_covers_every_time_index(l in matrix(2..15), t in 0.2..3.0f64) {
        let n = l.n();
        let p = thermal_path(&l, Node::new(1, 2.min(n)), Node::new(n, n), t, ThermalMode::Bridge).unwrap();
        let lag = resample_lag_to_time(&p, n);
        prop_assert_eq!(lag.len(), n);
        prop_assert!(lag.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn slope_ignores_response_offset(xs in prop::collection::vec(-3.0..3.0f64, 3..30), noise in prop::collection::vec(-1.0..1.0f64, 30), k in -2.0..2.0f64, c in -50.0..50.0f64) {
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| k * x + e).collect();
        let shifted: Vec<f64> = ys.iter().map(|y| y + c).collect();
        if let (Some(a), Some(b)) = (ols(&xs, &ys), ols(&xs, &shifted)) {
            prop_assert!((a.a - b.a).abs() < 1e-8);
            prop_assert!((a.t_stat - b.t_stat).abs() < 1e-6 * a.t_stat.abs().max(1.0));
            prop_assert!(a.t_stat == 0.0 || a.t_stat.signum() == a.a.signum());
            prop_assert!((0.0..=1.0).contains(&a.p_value));
        }
    }

    #[test]
    fn one_row_per_trailing_window((x, y) in series(5..60), w in 3usize..10, lag in -3i32..3) {
        let n = x.len();
        let p = AlignedPair::from_values(x, y).unwrap();
        let r = run_consistency(&p, &vec![lag as f64; n], w, LagRounding::Nearest).unwrap();
        prop_assert_eq!(r.windows.len(), (n + 1).saturating_sub(w));
        prop_assert!(r.windows.iter().all(|row| row.n_obs <= w));
    }

    #[test]
    fn analysis_is_deterministic(l in matrix(3..20), t in 0.2..3.0f64) {
        let n = l.n();
        let spec = toplag::enumerate_boundaries(n, 2.min(n - 1)).unwrap();
        let a = toplag::select_optimal(&l, &spec, t, ThermalMode::Bridge).unwrap();
        let b = toplag::select_optimal(&l, &spec, t, ThermalMode::Bridge).unwrap();
        prop_assert_eq!(a.best.mean_x, b.best.mean_x);
        prop_assert_eq!(a.energy_table, b.energy_table);
    }
}
