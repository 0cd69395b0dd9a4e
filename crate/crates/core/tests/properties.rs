//! Randomized invariants.

use std::f64::consts::PI;

use num_complex::Complex64;
use openbath::bath::{self_energy_channels, self_energy_f, self_energy_quadrature};
use openbath::green::{find_poles, sum_rule};
use openbath::model::{BathParams, Channel, Config, EmitterConfig};
use openbath::numerics::fit::logspace;
use openbath::oracle::{min_eigenvalue, trace_distance, two_level_benchmark, two_level_system, LindbladOptions};
use openbath::scaling::{config_hash, fit_power_law};
use proptest::prelude::*;

fn bath() -> impl Strategy<Value = BathParams> {
    (0.0..2.0f64, 0.01..100.0f64, -PI..PI)
        .prop_map(|(j, gamma, theta)| BathParams::cosine(j, gamma).with_theta(theta))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn power_law_fit_recovers_exponent(
        nu in 0.05..2.0f64,
        pref in 1e-3..1e3f64,
        lo in 1e-2..1e2f64,
        decades in 1.0..4.0f64,
        n in 5usize..25,
    ) {
        let xs = logspace(lo, lo * 10f64.powf(decades), n);
        let ys: Vec<f64> = xs.iter().map(|x| pref * x.powf(-nu)).collect();
        let fit = fit_power_law(&xs, &ys, Some((xs[0], xs[n - 1]))).unwrap();
        prop_assert!((fit.exponent - nu).abs() < 1e-9);
        prop_assert!((fit.prefactor / pref - 1.0).abs() < 1e-8);
        prop_assert_eq!(fit.n_points, n);
    }

    #[test]
    fn closed_form_self_energy_matches_quadrature(
        p in bath(),
        re in -5.0..5.0f64,
        im in 0.01..3.0f64,
        omega in 0.1..2.0f64,
    ) {
        let e = EmitterConfig::single(0.0, omega);
        let w = Complex64::new(re, im);
        let a = self_energy_f(w, &p, &e).unwrap();
        let b = self_energy_quadrature(w, &p, &e).unwrap();
        prop_assert!((a - b).norm() <= 1e-8 * b.norm().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn channel_self_energies_average_to_single(
        p in bath(),
        re in -5.0..5.0f64,
        im in 0.0..3.0f64,
        d in 1usize..40,
    ) {
        let e = EmitterConfig::single(0.0, 1.0);
        let w = Complex64::new(re, im + 1e-3);
        let (plus, minus) = self_energy_channels(w, d, &p, &e).unwrap();
        let single = self_energy_f(w, &p, &e).unwrap();
        prop_assert!((plus + minus - single * 2.0).norm() <= 1e-12 * single.norm().max(1.0));
    }

    #[test]
    fn two_level_steady_state_is_a_state_and_solves_the_master_equation(
        eps in 1e-3..3.0f64,
        gamma in 1e-2..5.0f64,
    ) {
        let exact = two_level_benchmark(eps, gamma).unwrap().exact;
        prop_assert!((exact.trace().re - 1.0).abs() < 1e-14);
        prop_assert!(min_eigenvalue(&exact) > -1e-14);
        let steady = two_level_system(eps, gamma).steady_state(&LindbladOptions::default()).unwrap();
        prop_assert!(trace_distance(&steady, &exact) < 1e-6);
    }

    #[test]
    fn config_hash_tracks_parameters(gamma in 0.1..1e4f64, delta in -3.0..3.0f64) {
        let mk = |g: f64| Config::new(BathParams::cosine(1.0, g), EmitterConfig::single(delta, 1.0)).unwrap();
        prop_assert_eq!(config_hash(&mk(gamma)), config_hash(&mk(gamma)));
        prop_assert_ne!(config_hash(&mk(gamma)), config_hash(&mk(gamma * 1.5)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn poles_decay_and_weights_sum_to_one(
        gamma in 0.05..1e4f64,
        delta in -1.5..1.5f64,
        omega in 0.1..1.5f64,
    ) {
        let cfg = Config::new(BathParams::cosine(1.0, gamma), EmitterConfig::single(delta, omega)).unwrap();
        for p in find_poles(&cfg, Channel::Single).unwrap() {
            prop_assert!(p.pole.im < 0.0);
        }
        let total = sum_rule(&cfg, Channel::Single).unwrap();
        prop_assert!((total - 1.0).norm() < 1e-6, "{total}");
    }
}
