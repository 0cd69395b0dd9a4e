//! Domain types and configuration validation.
//!
//! Energies are measured in units of the hopping `J` when `J > 0`, and in units of the
//! emitter coupling `Ω` for purely dissipative baths (`J = 0`).

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

/// Complex energy `ε − iγ`; the imaginary part is the full `−γ` of the mode.
pub type ComplexEnergy = Complex64;

/// Default coupling phase of the bath hopping.
pub const DEFAULT_THETA: f64 = -FRAC_PI_2;

/// Functional form of the bath dissipation band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandKind {
    /// `ε_k = 2J cos(k + θ)`, `γ_k = γ₀ + Γ(1 + cos k)`.
    #[serde(rename = "cosine_1d")]
    Cosine1d,
    /// Same band as `Cosine1d`, labelled for gapped (`γ₀ > 0`) studies.
    #[serde(rename = "gapped_cosine_1d")]
    GappedCosine1d,
    /// Purely dissipative `γ_k = (Γ/3)·sqrt|sin k|`.
    #[serde(rename = "sqrt_sin_1d")]
    SqrtSin1d,
    /// Purely dissipative `γ(k) = Γ(3 + cos kx + cos ky + cos kz)`.
    #[serde(rename = "cosine_3d")]
    Cosine3d,
    /// Purely dissipative band sampled on a uniform grid, `γ(k_n) = Γ·g_n`, `k_n = 2πn/N`.
    CustomGrid,
}

impl BandKind {
    pub fn name(self) -> &'static str {
        match self {
            BandKind::Cosine1d => "cosine_1d",
            BandKind::GappedCosine1d => "gapped_cosine_1d",
            BandKind::SqrtSin1d => "sqrt_sin_1d",
            BandKind::Cosine3d => "cosine_3d",
            BandKind::CustomGrid => "custom_grid",
        }
    }

    /// Whether the band is of the tight-binding cosine family with a closed-form fictitious bath.
    pub fn is_cosine_1d(self) -> bool {
        matches!(self, BandKind::Cosine1d | BandKind::GappedCosine1d)
    }
}

/// Bath parameters as written in a configuration file; missing fields take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nb: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_kind: Option<BandKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
}

/// Emitter parameters as written in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EmitterSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<i64>>,
}

/// Unvalidated physical configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    #[serde(default)]
    pub bath: BathSpec,
    #[serde(default)]
    pub emitter: EmitterSpec,
}

/// Validated bath parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BathParams {
    pub j: f64,
    pub theta: f64,
    pub gamma: f64,
    pub gamma0: f64,
    /// Number of bath sites; 0 selects the thermodynamic limit.
    pub nb: usize,
    pub dim: u32,
    pub band_kind: BandKind,
    /// Dimensionless samples `g_n` of a custom band (`γ = Γ·g_n`).
    pub grid: Option<Vec<f64>>,
}

impl BathParams {
    /// Main-text bath: `ε_k = 2J sin k`, `γ_k = Γ(1 + cos k)`.
    pub fn cosine(j: f64, gamma: f64) -> Self {
        Self {
            j,
            theta: DEFAULT_THETA,
            gamma,
            gamma0: 0.0,
            nb: 0,
            dim: 1,
            band_kind: BandKind::Cosine1d,
            grid: None,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_gamma0(mut self, gamma0: f64) -> Self {
        self.gamma0 = gamma0;
        if gamma0 > 0.0 && self.band_kind == BandKind::Cosine1d {
            self.band_kind = BandKind::GappedCosine1d;
        }
        self
    }

    pub fn with_nb(mut self, nb: usize) -> Self {
        self.nb = nb;
        self
    }

    pub fn with_band(mut self, kind: BandKind, dim: u32) -> Self {
        self.band_kind = kind;
        self.dim = dim;
        self
    }

    pub fn to_spec(&self) -> BathSpec {
        BathSpec {
            j: Some(self.j),
            theta: Some(self.theta),
            gamma: Some(self.gamma),
            gamma0: Some(self.gamma0),
            nb: Some(self.nb),
            dim: Some(self.dim),
            band_kind: Some(self.band_kind),
            grid: self.grid.clone(),
        }
    }
}

/// Validated emitter parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterConfig {
    pub delta: f64,
    pub u: f64,
    pub omega: f64,
    pub drive_eps: f64,
    /// Drive frequency; `None` selects the resonant default.
    pub omega_d: Option<f64>,
    pub positions: Vec<i64>,
}

impl EmitterConfig {
    pub fn single(delta: f64, omega: f64) -> Self {
        Self {
            delta,
            u: 0.0,
            omega,
            drive_eps: 0.0,
            omega_d: None,
            positions: vec![0],
        }
    }

    pub fn pair(delta: f64, omega: f64, d: usize) -> Self {
        Self {
            positions: vec![0, d as i64],
            ..Self::single(delta, omega)
        }
    }

    pub fn with_u(mut self, u: f64) -> Self {
        self.u = u;
        self
    }

    pub fn with_drive(mut self, eps: f64, omega_d: Option<f64>) -> Self {
        self.drive_eps = eps;
        self.omega_d = omega_d;
        self
    }

    /// Separation of the two emitters, or `None` for a single emitter.
    pub fn d(&self) -> Option<usize> {
        if self.positions.len() == 2 {
            Some((self.positions[1] - self.positions[0]).unsigned_abs() as usize)
        } else {
            None
        }
    }

    pub fn to_spec(&self) -> EmitterSpec {
        EmitterSpec {
            delta: Some(self.delta),
            u: Some(self.u),
            omega: Some(self.omega),
            drive_eps: Some(self.drive_eps),
            omega_d: self.omega_d,
            positions: Some(self.positions.clone()),
        }
    }
}

/// Validated physical configuration, immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub bath: BathParams,
    pub emitter: EmitterConfig,
}

impl Config {
    pub fn new(bath: BathParams, emitter: EmitterConfig) -> Result<Self> {
        validate(&ConfigSpec {
            bath: bath.to_spec(),
            emitter: emitter.to_spec(),
        })
    }

    pub fn to_spec(&self) -> ConfigSpec {
        ConfigSpec {
            bath: self.bath.to_spec(),
            emitter: self.emitter.to_spec(),
        }
    }

    /// Copy with a modified bath dissipation rate.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        let mut c = self.clone();
        c.bath.gamma = gamma;
        c
    }

    /// Copy with a modified detuning.
    pub fn with_delta(&self, delta: f64) -> Self {
        let mut c = self.clone();
        c.emitter.delta = delta;
        c
    }
}

fn finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite, got {v}"),
        })
    }
}

/// Checks all invariants and fills defaults (`θ = −π/2`, `J = 1`, `Ω = 1`, single emitter at 0).
pub fn validate(spec: &ConfigSpec) -> Result<Config> {
    let b = &spec.bath;
    let band_kind = b.band_kind.unwrap_or(BandKind::Cosine1d);
    let default_j = if band_kind.is_cosine_1d() { 1.0 } else { 0.0 };
    let j = finite("j", b.j.unwrap_or(default_j))?;
    if j < 0.0 {
        return Err(Error::InvalidParameter {
            name: "j",
            reason: format!("must be non-negative, got {j}"),
        });
    }
    let theta = finite("theta", b.theta.unwrap_or(DEFAULT_THETA))?;
    let gamma = finite("gamma", b.gamma.unwrap_or(f64::NAN)).map_err(|_| {
        Error::InvalidParameter {
            name: "gamma",
            reason: "missing or not finite".into(),
        }
    })?;
    if gamma <= 0.0 {
        return Err(Error::NonPositiveGamma(gamma));
    }
    let gamma0 = finite("gamma0", b.gamma0.unwrap_or(0.0))?;
    if gamma0 < 0.0 {
        return Err(Error::InvalidParameter {
            name: "gamma0",
            reason: format!("must be non-negative, got {gamma0}"),
        });
    }
    let nb = b.nb.unwrap_or(0);
    if nb == 1 {
        return Err(Error::InvalidParameter {
            name: "nb",
            reason: "must be 0 (thermodynamic limit) or at least 2".into(),
        });
    }
    let expected_dim = match band_kind {
        BandKind::Cosine3d => 3,
        _ => 1,
    };
    let dim = b.dim.unwrap_or(expected_dim);
    if !(1..=3).contains(&dim) || dim != expected_dim {
        return Err(Error::BadDimension {
            dim,
            band: band_kind.name(),
        });
    }
    if !band_kind.is_cosine_1d() && j != 0.0 {
        return Err(Error::InvalidParameter {
            name: "j",
            reason: format!("{} is purely dissipative; j must be 0", band_kind.name()),
        });
    }
    let grid = match band_kind {
        BandKind::CustomGrid => {
            let g = b.grid.clone().ok_or(Error::InvalidParameter {
                name: "grid",
                reason: "custom_grid needs dissipation samples".into(),
            })?;
            if g.len() < 8 || g.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidParameter {
                    name: "grid",
                    reason: "need at least 8 finite non-negative samples".into(),
                });
            }
            Some(g)
        }
        _ => {
            if b.grid.is_some() {
                return Err(Error::InvalidParameter {
                    name: "grid",
                    reason: "only allowed for custom_grid".into(),
                });
            }
            None
        }
    };

    let e = &spec.emitter;
    let delta = finite("delta", e.delta.unwrap_or(0.0))?;
    let u = finite("u", e.u.unwrap_or(0.0))?;
    let omega = finite("omega", e.omega.unwrap_or(1.0))?;
    if omega < 0.0 {
        return Err(Error::InvalidParameter {
            name: "omega",
            reason: format!("must be non-negative, got {omega}"),
        });
    }
    let drive_eps = finite("drive_eps", e.drive_eps.unwrap_or(0.0))?;
    if drive_eps < 0.0 {
        return Err(Error::InvalidParameter {
            name: "drive_eps",
            reason: format!("must be non-negative, got {drive_eps}"),
        });
    }
    let omega_d = match e.omega_d {
        Some(w) => Some(finite("omega_d", w)?),
        None => None,
    };
    let positions = e.positions.clone().unwrap_or_else(|| vec![0]);
    if positions.is_empty() || positions.len() > 2 {
        return Err(Error::InvalidParameter {
            name: "positions",
            reason: format!("need one or two emitters, got {}", positions.len()),
        });
    }
    if positions.len() == 2 && positions[0] == positions[1] {
        return Err(Error::OverlappingEmitters(positions[0]));
    }
    if positions.len() == 2 && !band_kind.is_cosine_1d() {
        return Err(Error::InvalidParameter {
            name: "positions",
            reason: "two emitters are supported for the cosine bands only".into(),
        });
    }

    Ok(Config {
        bath: BathParams {
            j,
            theta,
            gamma,
            gamma0,
            nb,
            dim,
            band_kind,
            grid,
        },
        emitter: EmitterConfig {
            delta,
            u,
            omega,
            drive_eps,
            omega_d,
            positions,
        },
    })
}

/// Channel of a quasibound state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Single,
    Even,
    Odd,
    Pair,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Single => "single",
            Channel::Even => "even",
            Channel::Odd => "odd",
            Channel::Pair => "pair",
        }
    }
}

/// Emitter and bath amplitudes of a quasibound state.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    /// Emitter amplitude `c₁`.
    pub c1: Complex64,
    /// Bath amplitudes keyed by lattice site or momentum index.
    pub amplitudes: BTreeMap<i64, Complex64>,
}

/// Complex pole of a Green function together with its residue.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiboundState {
    pub pole: ComplexEnergy,
    pub residue: Complex64,
    pub channel: Channel,
    pub wavefunction: Option<Wavefunction>,
}

impl QuasiboundState {
    /// Energy `ε_b = Re ε_s`.
    pub fn energy(&self) -> f64 {
        self.pole.re
    }

    /// Decay rate `γ_b = −Im ε_s`.
    pub fn decay(&self) -> f64 {
        -self.pole.im
    }
}

/// Result of a log–log exponent fit `y ∝ x^{−ν}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub n_points: usize,
}
