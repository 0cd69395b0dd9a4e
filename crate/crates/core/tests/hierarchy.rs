//! At `U = −Δ` the pair quasibound state is more strongly protected than the single one.

use openbath::model::{BathParams, Config, EmitterConfig};
use openbath::numerics::fit::logspace;
use openbath::scaling::{fit_exponent, fit_power_law, sweep, SweepVariable};
use openbath::twoexc::{dominant_pair_pole, find_pair_poles, track_pair_pole};

fn cfg(gamma: f64, delta: f64, u: f64) -> Config {
    Config::new(
        BathParams::cosine(1.0, gamma),
        EmitterConfig::single(delta, 1.0).with_u(u),
    )
    .unwrap()
}

#[test]
fn pair_exponent_is_below_single_exponent() {
    let delta = 1.0;
    let grid = logspace(10f64.powf(3.5), 1e5, 7);
    let records = sweep(&cfg(1e4, delta, 0.0), SweepVariable::Gamma, &grid).unwrap();
    let nu1 = fit_exponent(&records, "value", "decay", None).unwrap().exponent;

    let top = find_pair_poles(&cfg(1e5, delta, -delta)).unwrap();
    let mut seed = dominant_pair_pole(&top, 0.1).unwrap().pole;
    let mut rates = vec![0.0; grid.len()];
    for (i, &g) in grid.iter().enumerate().rev() {
        let p = track_pair_pole(&cfg(g, delta, -delta), seed).unwrap();
        seed = p.pole;
        rates[i] = p.decay();
    }
    let nu2 = fit_power_law(&grid, &rates, None).unwrap().exponent;
    assert!((nu1 - 0.5).abs() < 0.03, "{nu1}");
    assert!(nu2 < nu1 - 0.1, "nu2 = {nu2}, nu1 = {nu1}");
}
