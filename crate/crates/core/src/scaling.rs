//! Parameter sweeps, log–log exponent fits, and the edge classification of arbitrary
//! dissipation bands together with their scaling-model and full-band poles.
//!
//! Purely dissipative baths are handled in the variable `s = −iω`, where a pole solves
//! `s + iΔ + Σ(s) = 0` with `Σ(s) = Ω² ∫ d^dk/(2π)^d 1/(s + γ(k))`. The energy of a pole is
//! `ω = i s`, so the decay rate is `−Re s`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bath::{
    dissipation, scaling_self_energy, self_energy_quadrature, DissipationBandModel,
};
use crate::driven::{dominant_single_pole, g2_zero, DRIVE_POLE_MIN_WEIGHT};
use crate::green::find_poles;
use crate::model::{validate, BandKind, Channel, ComplexEnergy, QuasiboundState, ScalingFit};
use crate::numerics::fit::line_fit;
use crate::numerics::linalg::eigenvalues;
use crate::numerics::quad::{integrate, QuadOptions};
use crate::numerics::roots::newton;
use crate::oracle::build_single;
use crate::twoexc::{dominant_pair_pole, find_pair_poles};
use crate::{BathParams, Config, EmitterConfig, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Minimum number of points in a sweep grid and in an exponent fit.
pub const MIN_POINTS: usize = 5;

/// Width in decades of the default fit window, counted down from the largest abscissa.
pub const DEFAULT_WINDOW_DECADES: f64 = 1.5;

/// Tolerance within which `d/μ` counts as marginal (`d/μ = 1`).
pub const MARGINAL_TOLERANCE: f64 = 1e-9;

/// Library version stamped on every sweep record.
pub const METHOD_VERSION: &str = concat!("openbath ", env!("CARGO_PKG_VERSION"));

/// SHA-256 of the canonical JSON form of a validated configuration.
pub fn config_hash(cfg: &Config) -> String {
    let json = serde_json::to_string(&cfg.to_spec()).expect("config spec serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parameter varied by a [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Gamma,
    Delta,
    U,
    /// Emitter separation; the first emitter stays at site 0.
    D,
    /// Number of bath sites of the finite ring.
    Nb,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Gamma => "gamma",
            SweepVariable::Delta => "delta",
            SweepVariable::U => "u",
            SweepVariable::D => "d",
            SweepVariable::Nb => "nb",
        }
    }

    /// The template with this variable set to `value`, re-validated.
    pub fn apply(self, template: &Config, value: f64) -> Result<Config> {
        let mut spec = template.to_spec();
        let integer = |name: &'static str| -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be a non-negative integer, got {value}"),
                })
            }
        };
        match self {
            SweepVariable::Gamma => spec.bath.gamma = Some(value),
            SweepVariable::Delta => spec.emitter.delta = Some(value),
            SweepVariable::U => spec.emitter.u = Some(value),
            SweepVariable::D => spec.emitter.positions = Some(vec![0, integer("d")? as i64]),
            SweepVariable::Nb => spec.bath.nb = Some(integer("nb")?),
        }
        validate(&spec)
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the poles of a sweep point were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointMethod {
    /// Closed-form fictitious-bath Green function.
    Green,
    /// Quadrature of the full band self-energy.
    FullBand,
    /// Eigenvalues of the finite-ring non-Hermitian Hamiltonian.
    FiniteSize,
}

impl PointMethod {
    pub fn tag(self) -> &'static str {
        match self {
            PointMethod::Green => "green",
            PointMethod::FullBand => "full_band",
            PointMethod::FiniteSize => "finite_size",
        }
    }
}

/// One point of a sweep. Failed points keep their provenance and carry the error.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub index: usize,
    pub variable: SweepVariable,
    pub value: f64,
    pub config_hash: String,
    pub method_version: &'static str,
    pub method: Option<PointMethod>,
    /// Single-excitation poles (both channels for two emitters).
    pub poles: Vec<QuasiboundState>,
    /// Longest-lived pole with appreciable weight.
    pub dominant: Option<ComplexEnergy>,
    /// Dominant two-excitation pole, when an interaction is configured or swept.
    pub pair: Option<ComplexEnergy>,
    /// `g²(0)` when a drive is configured.
    pub g2_zero: Option<f64>,
    pub error: Option<String>,
}

impl SweepRecord {
    /// Named scalar column: `value`, `decay`, `energy`, `pair_decay`, `pair_energy`, `g2_zero`.
    pub fn field(&self, name: &str) -> Option<f64> {
        match name {
            "value" | "x" => Some(self.value),
            "decay" => self.dominant.map(|z| -z.im),
            "energy" => self.dominant.map(|z| z.re),
            "pair_decay" => self.pair.map(|z| -z.im),
            "pair_energy" => self.pair.map(|z| z.re),
            "g2_zero" => self.g2_zero,
            _ => None,
        }
    }
}

/// Evaluates `template` on every grid point, in parallel, returning records in grid order.
pub fn sweep(template: &Config, variable: SweepVariable, grid: &[f64]) -> Result<Vec<SweepRecord>> {
    if grid.len() < MIN_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_POINTS,
            got: grid.len(),
        });
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "sweep grid must be strictly increasing".into(),
        });
    }
    Ok(grid
        .par_iter()
        .enumerate()
        .map(|(index, &value)| sweep_point(template, variable, index, value))
        .collect())
}

fn sweep_point(template: &Config, variable: SweepVariable, index: usize, value: f64) -> SweepRecord {
    let mut record = SweepRecord {
        index,
        variable,
        value,
        config_hash: String::new(),
        method_version: METHOD_VERSION,
        method: None,
        poles: vec![],
        dominant: None,
        pair: None,
        g2_zero: None,
        error: None,
    };
    let cfg = match variable.apply(template, value) {
        Ok(c) => c,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    record.config_hash = config_hash(&cfg);
    let with_pair = variable == SweepVariable::U || cfg.emitter.u != 0.0;
    if let Err(e) = evaluate_point(&cfg, with_pair, &mut record) {
        record.error = Some(e.to_string());
    }
    record
}

fn evaluate_point(cfg: &Config, with_pair: bool, record: &mut SweepRecord) -> Result<()> {
    let single = cfg.emitter.positions.len() == 1;
    if cfg.bath.nb > 0 {
        record.method = Some(PointMethod::FiniteSize);
        let model = build_single(cfg, cfg.bath.nb)?;
        let ev = eigenvalues(&model.h_eff.to_dense());
        record.dominant = ev.into_iter().max_by(|a, b| a.im.total_cmp(&b.im));
        return Ok(());
    }
    if !cfg.bath.band_kind.is_cosine_1d() {
        record.method = Some(PointMethod::FullBand);
        let pole = full_band_pole(cfg)?;
        record.dominant = Some(pole.pole);
        record.poles = vec![pole];
        return Ok(());
    }
    record.method = Some(PointMethod::Green);
    if single {
        let poles = find_poles(cfg, Channel::Single)?;
        record.dominant = Some(longest_weighted(&poles)?);
        record.poles = poles;
        if with_pair {
            let pairs = find_pair_poles(cfg)?;
            record.pair = dominant_pair_pole(&pairs, DRIVE_POLE_MIN_WEIGHT)
                .or_else(|| pairs.iter().max_by(|a, b| a.pole.im.total_cmp(&b.pole.im)))
                .map(|p| p.pole);
        }
        if cfg.emitter.drive_eps > 0.0 {
            record.g2_zero = Some(g2_zero(cfg)?);
        }
    } else {
        let mut poles = find_poles(cfg, Channel::Even)?;
        poles.extend(find_poles(cfg, Channel::Odd)?);
        record.dominant = Some(longest_weighted(&poles)?);
        record.poles = poles;
    }
    Ok(())
}

fn longest_weighted(poles: &[QuasiboundState]) -> Result<ComplexEnergy> {
    let longest = |it: &mut dyn Iterator<Item = &QuasiboundState>| {
        it.max_by(|a, b| a.pole.im.total_cmp(&b.pole.im)).map(|p| p.pole)
    };
    longest(&mut poles.iter().filter(|p| p.residue.norm() >= DRIVE_POLE_MIN_WEIGHT))
        .or_else(|| longest(&mut poles.iter()))
        .ok_or(Error::NoConvergence {
            seed: Complex64::new(0.0, 0.0),
        })
}

/// Fits `y ∝ x^{−ν}` on the records with both fields present and `x` inside `window`.
///
/// The default window spans the top [`DEFAULT_WINDOW_DECADES`] decades of `x`.
pub fn fit_exponent(
    records: &[SweepRecord],
    x_field: &str,
    y_field: &str,
    window: Option<(f64, f64)>,
) -> Result<ScalingFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.error.is_none())
        .filter_map(|r| Some((r.field(x_field)?, r.field(y_field)?)))
        .unzip();
    fit_power_law(&xs, &ys, window)
}

/// Least-squares fit of `ln y` against `ln x` inside `window` (default: top 1.5 decades).
pub fn fit_power_law(xs: &[f64], ys: &[f64], window: Option<(f64, f64)>) -> Result<ScalingFit> {
    let window = match window {
        Some(w) => w,
        None => {
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (hi / 10f64.powf(DEFAULT_WINDOW_DECADES), hi)
        }
    };
    // Relative slack so that grid end points produced by `powf` stay inside.
    let (lo, hi) = (window.0 * (1.0 - 1e-12), window.1 * (1.0 + 1e-12));
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if x < lo || x > hi {
            continue;
        }
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::NonPositiveData);
        }
        lx.push(x.ln());
        ly.push(y.ln());
    }
    if lx.len() < MIN_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_POINTS,
            got: lx.len(),
        });
    }
    let fit = line_fit(&lx, &ly).ok_or(Error::TooFewPoints {
        needed: MIN_POINTS,
        got: lx.len(),
    })?;
    Ok(ScalingFit {
        exponent: -fit.slope,
        prefactor: fit.intercept.exp(),
        window,
        r_squared: fit.r_squared,
        n_points: lx.len(),
    })
}

/// Which side of `d/μ = 1` a band edge sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRegime {
    /// `d/μ < 1`: divergent dDOS at the edge.
    Fractional,
    /// `d/μ = 1`: logarithmic corrections.
    Logarithmic,
    /// `d/μ > 1`: vanishing dDOS at the edge.
    Integer,
}

/// Predicted leading behaviour of the longest-lived pole for one edge class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    /// `d/μ`.
    pub ratio: f64,
    pub gapped: bool,
    pub regime: EdgeRegime,
    /// Predicted `ν` in `γ_b ∝ Γ^{−ν}`; logarithmic cells report 1 (up to the logarithm).
    pub exponent: f64,
    /// Symbolic leading form of the complex energy in `s = −iω`.
    pub formula: String,
}

/// Edge classification of a band model at detuning `delta`.
pub fn classify_bath(model: &DissipationBandModel, delta: f64) -> TableRow {
    let a = model.ratio();
    let gapped = model.gamma_min > 0.0;
    let resonant = delta == 0.0;
    let (regime, exponent, formula) = if (a - 1.0).abs() <= MARGINAL_TOLERANCE {
        let formula = if gapped {
            "s = -iΔ - C ln(Γ/γ_min) Γ^-1".to_string()
        } else {
            "s = -iΔ - C ln(Γ/η) Γ^-1, η unspecified".to_string()
        };
        (EdgeRegime::Logarithmic, 1.0, formula)
    } else if a > 1.0 {
        (EdgeRegime::Integer, 1.0, "s = -iΔ - C Γ^-1".to_string())
    } else if gapped {
        (
            EdgeRegime::Fractional,
            a,
            format!("s = -iΔ - C'(γ_min - iΔ)^({:.6}) Γ^-{a:.6}", a - 1.0),
        )
    } else if resonant {
        let nu = a / (2.0 - a);
        (
            EdgeRegime::Fractional,
            nu,
            format!("s = (-C')^({:.6}) Γ^-{nu:.6}", 1.0 / (2.0 - a)),
        )
    } else {
        (
            EdgeRegime::Fractional,
            a,
            format!("s = -iΔ - C'(-iΔ)^({:.6}) Γ^-{a:.6}", a - 1.0),
        )
    };
    TableRow {
        ratio: a,
        gapped,
        regime,
        exponent,
        formula,
    }
}

/// Classification of a configured band; the edge model is extracted from the band.
pub fn classify_band(p: &BathParams, delta: f64) -> Result<TableRow> {
    Ok(classify_bath(&DissipationBandModel::from_band(p)?, delta))
}

/// Prefactor `C = A Ω² /((2π)^d μ c^{d/μ} (d/μ))`, summed over equivalent edge points.
fn edge_prefactor(model: &DissipationBandModel, omega: f64) -> f64 {
    let a = model.ratio();
    model.multiplicity * crate::bath::edge_area_factor(model.dim) * omega * omega
        / ((2.0 * PI).powi(model.dim as i32) * model.mu * model.c.powf(a) * a)
}

/// The edge model rescaled to dissipation scale `gamma` (`Λ − γ_min ∝ Γ`).
pub fn rescaled_model(model: &DissipationBandModel, gamma: f64) -> DissipationBandModel {
    let mut m = *model;
    m.lambda = model.gamma_min + (model.lambda - model.gamma_min) * gamma / model.gamma;
    m.gamma = gamma;
    m
}

/// Leading-order roots in `s` from the closed forms, slow root first.
///
/// The gapless logarithmic cell, whose inner scale is unspecified, is seeded with the
/// scale `C/Γ` of its own root.
pub fn leading_roots(model: &DissipationBandModel, delta: f64, omega: f64) -> Vec<Complex64> {
    let a = model.ratio();
    let c = edge_prefactor(model, omega);
    let g = model.gamma;
    let lp = model.lambda - model.gamma_min;
    let s0 = -I * delta;
    let sp0 = s0 + model.gamma_min;
    if (a - 1.0).abs() <= MARGINAL_TOLERANCE {
        let scale = if model.gamma_min > 0.0 || delta != 0.0 {
            sp0
        } else {
            Complex64::new(c / g, 0.0)
        };
        return vec![s0 - c / g * (lp / scale).ln()];
    }
    if a > 1.0 {
        let c2 = c * a / (a - 1.0);
        return vec![s0 - c2 * lp.powf(a - 1.0) / g.powf(a)];
    }
    let c1 = c * a * PI / (a * PI).sin();
    if model.gamma_min > 0.0 {
        let slow = s0 - c1 * sp0.powf(a - 1.0) / g.powf(a);
        let fast = (sp0 * g.powf(a) / c1).powf(1.0 / (a - 1.0)) - model.gamma_min;
        return vec![slow, fast];
    }
    if delta == 0.0 {
        let r = (c1 / g.powf(a)).powf(1.0 / (2.0 - a));
        let phase = PI / (2.0 - a);
        return vec![
            Complex64::from_polar(r, phase),
            Complex64::from_polar(r, -phase),
        ];
    }
    vec![s0 - c1 * s0.powf(a - 1.0) / g.powf(a)]
}

/// Roots of `s + iΔ + Σ(s) = 0` for the edge model at dissipation scale `gamma`, polished
/// from [`leading_roots`]; returned as complex energies `ω = i s`, slow root first.
/// Seeds that fail to converge are dropped; an error is returned only if all fail.
pub fn scaling_poles(
    model: &DissipationBandModel,
    delta: f64,
    omega: f64,
    gamma: f64,
) -> Result<Vec<ComplexEnergy>> {
    let m = rescaled_model(model, gamma);
    let f = |s: Complex64| -> Option<Complex64> {
        scaling_self_energy(s, &m, omega)
            .ok()
            .map(|sig| s + I * delta + sig)
    };
    let mut out: Vec<ComplexEnergy> = Vec::new();
    let mut failure = None;
    for seed in leading_roots(&m, delta, omega) {
        // Roots on the real s axis of a gapless band sit on the cut; start beside it.
        let seed = if m.gamma_min == 0.0 && seed.im.abs() < 1e-3 * seed.norm() {
            seed * Complex64::new(1.0, 0.05)
        } else {
            seed
        };
        let Some(root) = newton_numeric(f, seed, Complex64::new(-m.gamma_min, 0.0), 1e-13 * seed.norm().max(1e-300)) else {
            failure = Some(Error::NoConvergence { seed });
            continue;
        };
        let w = I * root;
        if !out.iter().any(|z| (z - w).norm() <= 1e-9 * w.norm()) {
            out.push(w);
        }
    }
    match failure {
        Some(e) if out.is_empty() => Err(e),
        _ => Ok(out),
    }
}

/// Slow root of the edge model (the long-lived quasibound state) as `ω = i s`.
pub fn solve_scaling_pole(
    model: &DissipationBandModel,
    delta: f64,
    omega: f64,
    gamma: f64,
) -> Result<ComplexEnergy> {
    scaling_poles(model, delta, omega, gamma)?
        .into_iter()
        .max_by(|a, b| a.im.total_cmp(&b.im))
        .ok_or(Error::NoConvergence {
            seed: Complex64::new(0.0, 0.0),
        })
}

/// Complex Newton with a central-difference derivative; `f` returns `None` off its domain.
/// The difference step is `1e-6·|z − origin|`, where `origin` is the nearest branch point.
fn newton_numeric<F>(f: F, seed: Complex64, origin: Complex64, tol: f64) -> Option<Complex64>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    let g = |z: Complex64| -> Option<(Complex64, Complex64)> {
        let h = 1e-6 * (z - origin).norm().max(1e-300);
        let fz = f(z)?;
        let d = (f(z + h)? - f(z - h)?) / (2.0 * h);
        Some((fz, d))
    };
    newton(g, seed, tol, 100).map(|r| r.root)
}

/// Full-band self-energy `Ω² ∫ d^dk/(2π)^d 1/(ω − ε(k) + iγ(k))` by quadrature.
///
/// 1D bands use adaptive Gauss–Kronrod on `[0, 2π]` with breakpoints at the band edges
/// (and at every sample of a gridded band); the 3D band uses the closed `k_z` integral on a
/// transverse trapezoid grid.
pub fn full_band_self_energy(omega: Complex64, p: &BathParams, e: &EmitterConfig) -> Result<Complex64> {
    if p.dim == 3 {
        return self_energy_quadrature(omega, p, e);
    }
    let breaks: Vec<f64> = match p.band_kind {
        BandKind::Cosine1d | BandKind::GappedCosine1d => vec![PI],
        BandKind::SqrtSin1d => vec![PI],
        BandKind::CustomGrid => {
            let n = p.grid.as_ref().map_or(0, |g| g.len());
            (1..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
        }
        BandKind::Cosine3d => unreachable!("3D handled above"),
    };
    let f = |k: f64| {
        let band = Complex64::new(crate::bath::dispersion(&[k], p), -dissipation(&[k], p));
        1.0 / (omega - band)
    };
    let r = integrate(f, 0.0, 2.0 * PI, &breaks, QuadOptions::new(0.0, 1e-12));
    Ok(r.value * (e.omega * e.omega / (2.0 * PI)))
}

/// Longest-lived pole of `ω − Δ − Σ(ω) = 0` with the full-band quadrature self-energy,
/// polished from the scaling-model pole of the band edge.
pub fn full_band_pole(cfg: &Config) -> Result<QuasiboundState> {
    let p = &cfg.bath;
    let e = &cfg.emitter;
    let model = DissipationBandModel::from_band(p)?;
    let seed = solve_scaling_pole(&model, e.delta, e.omega, p.gamma)?;
    let seed = if seed.re.abs() < 1e-3 * seed.norm() {
        Complex64::new(1e-3 * seed.norm(), seed.im)
    } else {
        seed
    };
    let f = |w: Complex64| -> Option<Complex64> {
        full_band_self_energy(w, p, e).ok().map(|s| w - e.delta - s)
    };
    let root = newton_numeric(f, seed, Complex64::new(0.0, -p.gamma0), 1e-12 * seed.norm()).ok_or(Error::NoConvergence { seed })?;
    if !(root.im < 0.0) {
        return Err(Error::NoConvergence { seed });
    }
    let h = 1e-6 * root.norm();
    let ds = (full_band_self_energy(root + h, p, e)? - full_band_self_energy(root - h, p, e)?)
        / (2.0 * h);
    Ok(QuasiboundState {
        pole: root,
        residue: 1.0 / (1.0 - ds),
        channel: Channel::Single,
        wavefunction: None,
    })
}

/// Decay rate of the dominant single-excitation pole from the Green function.
pub fn dominant_decay(cfg: &Config) -> Result<f64> {
    if cfg.bath.band_kind.is_cosine_1d() {
        Ok(dominant_single_pole(cfg, DRIVE_POLE_MIN_WEIGHT)?.decay())
    } else {
        Ok(full_band_pole(cfg)?.decay())
    }
}
