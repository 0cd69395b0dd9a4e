//! Steady-state photon statistics of a weakly driven nonlinear emitter: scattering matrix,
//! `g²(0)`, `g²(τ)`, the single-pole approximation and the steady population.
//!
//! With `T(2ω_d) = 1/(U⁻¹ − Π(2ω_d))`, `g²(τ) = |1 + Π̄(τ)T(2ω_d)|²`, which reduces to
//! `g²(0) = |1/(1 − UΠ(2ω_d))|²` through `Π̄(0) = Π(2ω_d)`.

use crate::error::{Error, Result};
use crate::green::{find_poles, green_f};
use crate::model::{Channel, ComplexEnergy, Config, QuasiboundState};
use crate::twoexc::Bubble;
use num_complex::Complex64;
use rayon::prelude::*;

/// Minimal residue weight for the single-excitation pole that fixes the default drive.
pub const DRIVE_POLE_MIN_WEIGHT: f64 = 0.1;

/// Fraction of the spectral gap above which the drive is flagged as not weak.
pub const WEAK_DRIVE_FRACTION: f64 = 0.1;

/// Drive frequency and the single-excitation pole it addresses.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveSetup {
    pub omega_d: f64,
    /// Longest-lived single-excitation pole carrying at least [`DRIVE_POLE_MIN_WEIGHT`].
    pub pole: QuasiboundState,
    /// Spectral gap: decay rate of that pole.
    pub gap: f64,
    /// `ε ≤ 0.1·gap`; outside this the perturbative construction is extrapolated.
    pub weak_drive: bool,
}

/// Longest-lived single-excitation pole with residue weight at least `min_weight`, falling
/// back to the longest-lived pole overall.
pub fn dominant_single_pole(cfg: &Config, min_weight: f64) -> Result<QuasiboundState> {
    let poles = find_poles(cfg, Channel::Single)?;
    let longest = |it: &mut dyn Iterator<Item = &QuasiboundState>| {
        it.max_by(|a, b| a.pole.im.total_cmp(&b.pole.im)).cloned()
    };
    longest(&mut poles.iter().filter(|p| p.residue.norm() >= min_weight))
        .or_else(|| longest(&mut poles.iter()))
        .ok_or(Error::NoConvergence {
            seed: Complex64::new(cfg.emitter.delta, 0.0),
        })
}

/// Resolves the drive: `ω_d` from the config, or `Re ε_s` of the dominant pole.
pub fn drive_setup(cfg: &Config) -> Result<DriveSetup> {
    let pole = dominant_single_pole(cfg, DRIVE_POLE_MIN_WEIGHT)?;
    let gap = pole.decay();
    Ok(DriveSetup {
        omega_d: cfg.emitter.omega_d.unwrap_or(pole.pole.re),
        weak_drive: cfg.emitter.drive_eps <= WEAK_DRIVE_FRACTION * gap,
        gap,
        pole,
    })
}

fn t_from_bubble(pi: Complex64, u: f64, two_omega_d: f64) -> Result<Complex64> {
    if u == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let den = 1.0 / u - pi;
    if den.norm() <= 1e-12 * pi.norm().max(1.0 / u.abs()) {
        return Err(Error::ResonantPole(two_omega_d));
    }
    Ok(1.0 / den)
}

/// Correlation functions of one driven configuration, sharing the bubble data.
#[derive(Debug, Clone)]
pub struct DrivenEmitter {
    bubble: Bubble,
    u: f64,
    pub setup: DriveSetup,
}

impl DrivenEmitter {
    pub fn new(cfg: &Config) -> Result<Self> {
        Ok(Self {
            bubble: Bubble::new(cfg)?,
            u: cfg.emitter.u,
            setup: drive_setup(cfg)?,
        })
    }

    /// Same emitter driven at another frequency.
    pub fn at(&self, omega_d: f64) -> Self {
        let mut out = self.clone();
        out.setup.omega_d = omega_d;
        out
    }

    /// `T(2ω_d)`.
    pub fn t_matrix(&self) -> Result<Complex64> {
        let w = 2.0 * self.setup.omega_d;
        if self.u == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        t_from_bubble(self.bubble.value(Complex64::new(w, 0.0))?, self.u, w)
    }

    /// `g²(0) = |1/(1 − UΠ(2ω_d))|²`.
    pub fn g2_zero(&self) -> Result<f64> {
        if self.u == 0.0 {
            return Ok(1.0);
        }
        let pi = self
            .bubble
            .value(Complex64::new(2.0 * self.setup.omega_d, 0.0))?;
        Ok((1.0 / (1.0 - self.u * pi)).norm_sqr())
    }

    /// `g²(τ) = |1 + Π̄(τ)T(2ω_d)|²`.
    pub fn g2_tau(&self, tau: f64) -> Result<f64> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("negative delay {tau}"),
            });
        }
        if self.u == 0.0 {
            return Ok(1.0);
        }
        let t = self.t_matrix()?;
        let pbar = self.bubble.shifted(self.setup.omega_d, tau)?;
        Ok((1.0 + pbar * t).norm_sqr())
    }

    /// `g²(τ)` on a grid of delays.
    pub fn g2_curve(&self, taus: &[f64]) -> Result<Vec<f64>> {
        taus.par_iter().map(|&t| self.g2_tau(t)).collect()
    }
}

/// `T(2ω_d) = 1/(U⁻¹ − Π(2ω_d))`; zero without interaction.
pub fn t_matrix(two_omega_d: f64, cfg: &Config) -> Result<Complex64> {
    if cfg.emitter.u == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let pi = Bubble::new(cfg)?.value(Complex64::new(two_omega_d, 0.0))?;
    t_from_bubble(pi, cfg.emitter.u, two_omega_d)
}

/// `g²(0)` at the configured (or resonant) drive frequency.
pub fn g2_zero(cfg: &Config) -> Result<f64> {
    DrivenEmitter::new(cfg)?.g2_zero()
}

/// `g²(τ)` at the configured (or resonant) drive frequency.
pub fn g2_tau(tau: f64, cfg: &Config) -> Result<f64> {
    DrivenEmitter::new(cfg)?.g2_tau(tau)
}

/// `g²(0)` over a list of drive frequencies.
pub fn scan_g2_zero(cfg: &Config, omegas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let base = DrivenEmitter::new(cfg)?;
    omegas
        .par_iter()
        .map(|&w| Ok((w, base.at(w).g2_zero()?)))
        .collect()
}

/// Single-pole approximation of `g²(τ)` with figure of merit `C = U/[2(ω_d − ε_s)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Approx {
    pub c: Complex64,
    pub pole: ComplexEnergy,
    pub omega_d: f64,
}

impl G2Approx {
    /// `|1 + C e^{−i(ε_s − ω_d)τ}/(1 − C)|²`.
    pub fn value(&self, tau: f64) -> f64 {
        let i = Complex64::new(0.0, 1.0);
        let ph = (-i * (self.pole - self.omega_d) * tau).exp();
        (1.0 + self.c * ph / (1.0 - self.c)).norm_sqr()
    }
}

/// Smallest `Γ/J` accepted by [`g2_approx`] when `J > 0`.
pub const G2_APPROX_MIN_RATIO: f64 = 10.0;

/// Single-pole approximation built on the dominant single-excitation pole.
pub fn g2_approx(cfg: &Config) -> Result<G2Approx> {
    let j = cfg.bath.j;
    if j > 0.0 && cfg.bath.gamma < G2_APPROX_MIN_RATIO * j {
        return Err(Error::OutsideValidity(format!(
            "Γ/J = {} is not large",
            cfg.bath.gamma / j
        )));
    }
    let setup = drive_setup(cfg)?;
    let pole = setup.pole.pole;
    Ok(G2Approx {
        c: cfg.emitter.u / (2.0 * (setup.omega_d - pole)),
        pole,
        omega_d: setup.omega_d,
    })
}

/// Strong-merit limit `g²(0) ∼ Ω⁴/(U³Γ)`.
pub fn g2_zero_strong_limit(cfg: &Config) -> f64 {
    cfg.emitter.omega.powi(4) / (cfg.emitter.u.powi(3) * cfg.bath.gamma)
}

/// Steady emitter population `ε²|G(ω_d)|²` to second order in the drive.
pub fn steady_population(cfg: &Config) -> Result<f64> {
    let eps = cfg.emitter.drive_eps;
    if eps == 0.0 {
        return Ok(0.0);
    }
    let setup = drive_setup(cfg)?;
    let g = green_f(Complex64::new(setup.omega_d, 0.0), cfg)?;
    Ok(eps * eps * g.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BathParams, EmitterConfig};
    use crate::numerics::fit::linspace;

    fn cfg(gamma: f64, delta: f64, omega: f64, u: f64) -> Config {
        Config::new(
            BathParams::cosine(1.0, gamma),
            EmitterConfig::single(delta, omega).with_u(u),
        )
        .unwrap()
    }

    #[test]
    fn no_interaction_is_poissonian() {
        let k = cfg(1e3, -0.3, 0.3, 0.0);
        assert_eq!(t_matrix(-0.6, &k).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(g2_zero(&k).unwrap(), 1.0);
        let d = DrivenEmitter::new(&k).unwrap();
        for g in d.g2_curve(&linspace(0.0, 200.0, 11)).unwrap() {
            assert!((g - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn hard_core_limit() {
        let k = cfg(100.0, -0.5, 0.5, 1e14);
        let pi = Bubble::new(&k).unwrap().value(Complex64::new(-1.1, 0.0)).unwrap();
        let t = t_matrix(-1.1, &k).unwrap();
        assert!((t + 1.0 / pi).norm() < 1e-10 * t.norm());
    }

    #[test]
    fn t_matrix_pole_is_a_pair_pole() {
        let k = cfg(1e3, -1.0, 1.0, 1.0);
        let poles = crate::twoexc::find_pair_poles(&k).unwrap();
        let b = Bubble::new(&k).unwrap();
        for p in poles {
            let pi = b.value(p.pole).unwrap();
            // The denominator U⁻¹ − Π of T vanishes at a pair pole.
            assert!((1.0 / k.emitter.u - pi).norm() < 1e-8);
        }
    }

    #[test]
    fn resonant_antibunching() {
        let k = cfg(1e3, -0.3, 0.3, 0.3);
        let d = DrivenEmitter::new(&k).unwrap();
        let g0 = d.g2_zero().unwrap();
        assert!(g0 < 0.2, "{g0}");
        assert!((d.g2_tau(0.0).unwrap() - g0).abs() < 1e-12);
        let g1 = d.setup.gap;
        let late = d.g2_tau(50.0 / g1).unwrap();
        assert!((late - 1.0).abs() < 0.05, "{late}");
        let approx = g2_approx(&k).unwrap();
        let ratio = approx.value(0.0) / g0;
        assert!(ratio > 0.5 && ratio < 2.0, "{ratio}");
    }

    #[test]
    fn merit_matches_detuned_estimate() {
        let k = cfg(1e4, -1.0, 0.3, 0.2);
        let a = g2_approx(&k).unwrap();
        let expect = 0.2 * (1e4f64).sqrt() / 0.09;
        assert!((a.c.norm() / expect - 1.0).abs() < 0.05, "{}", a.c.norm());
        assert!(matches!(
            g2_approx(&cfg(5.0, -1.0, 0.3, 0.2)),
            Err(Error::OutsideValidity(_))
        ));
    }

    #[test]
    fn population_peaks_on_resonance() {
        let k = Config::new(
            BathParams::cosine(1.0, 1e3),
            EmitterConfig::single(-0.5, 0.5).with_drive(1e-4, None),
        )
        .unwrap();
        let setup = drive_setup(&k).unwrap();
        assert!(setup.weak_drive);
        let at = |w: f64| {
            let mut c = k.clone();
            c.emitter.omega_d = Some(w);
            steady_population(&c).unwrap()
        };
        let peak = at(setup.omega_d);
        for dw in [-0.02, -0.005, 0.005, 0.02] {
            assert!(at(setup.omega_d + dw) < peak);
        }
        let mut z = k.clone();
        z.emitter.drive_eps = 0.0;
        assert_eq!(steady_population(&z).unwrap(), 0.0);
    }

    #[test]
    fn drive_strength_flag() {
        let k = Config::new(
            BathParams::cosine(1.0, 1e3),
            EmitterConfig::single(-0.5, 0.5).with_drive(1.0, None),
        )
        .unwrap();
        assert!(!drive_setup(&k).unwrap().weak_drive);
    }
}
