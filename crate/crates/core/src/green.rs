//! Emitter Green functions of the fictitious bath: poles, residues, the collapsed-cut
//! spectral density, time-domain dynamics, two-emitter channels, and quasibound
//! wavefunctions.
//!
//! Convention: `G(t) = −iθ(t)⟨[a(t), a†]⟩`, so `G(ω) = 1/(ω − Δ − Σ(ω))` transforms to
//! `G(t) = −i[Σ_s Z_s e^{−iε_s t} + ∫A(x) e^{−i c(x) t} dx]` and `iG(0⁺) = 1`.

use crate::bath::{self_energy_realspace, FictitiousBath, Regime};
use crate::error::{Error, Result};
use crate::model::{Channel, ComplexEnergy, Config, QuasiboundState, Wavefunction};
use crate::numerics::fit::logspace;
use crate::numerics::quad::{gauss_legendre, integrate, QuadOptions};
use crate::numerics::roots::{dedup_roots, newton, poly_roots, sort_roots};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// How a time series or data row was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    ResiduesCut,
    Fft,
    Spectral,
    Oracle,
    Asymptotic,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Quadrature => "quadrature",
            Method::ResiduesCut => "residues+cut",
            Method::Fft => "fft",
            Method::Spectral => "spectral",
            Method::Oracle => "oracle",
            Method::Asymptotic => "asymptotic",
        }
    }
}

/// Complex amplitudes on an ascending time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub method: Method,
}

impl TimeSeries {
    /// `|value|²` at each time.
    pub fn populations(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }
}

/// Self-energy channel: `Σ_f (1 + σ z^d)`; `σ = 0` for a single emitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ChannelSpec {
    pub d: usize,
    pub sigma: f64,
}

pub(crate) fn channel_spec(cfg: &Config, channel: Channel) -> Result<ChannelSpec> {
    match channel {
        Channel::Single => Ok(ChannelSpec { d: 0, sigma: 0.0 }),
        Channel::Even | Channel::Odd => {
            let d = cfg.emitter.d().ok_or(Error::InvalidParameter {
                name: "positions",
                reason: "channel dynamics need two emitters".into(),
            })?;
            let sigma = if channel == Channel::Even { 1.0 } else { -1.0 };
            Ok(ChannelSpec { d, sigma })
        }
        Channel::Pair => Err(Error::InvalidParameter {
            name: "channel",
            reason: "pair channel lives in the two-excitation module".into(),
        }),
    }
}

/// Closed-form single-particle propagator of one channel.
#[derive(Debug, Clone, Copy)]
pub struct Propagator {
    pub fb: FictitiousBath,
    pub delta: f64,
    pub omega: f64,
    pub(crate) ch: ChannelSpec,
}

impl Propagator {
    pub fn new(cfg: &Config, channel: Channel) -> Result<Self> {
        Ok(Self {
            fb: FictitiousBath::new(&cfg.bath)?,
            delta: cfg.emitter.delta,
            omega: cfg.emitter.omega,
            ch: channel_spec(cfg, channel)?,
        })
    }

    /// Channel self-energy and its derivative.
    pub fn sigma(&self, w: Complex64) -> (Complex64, Complex64) {
        if self.ch.sigma == 0.0 {
            self.fb.sigma_and_derivative(w, self.omega)
        } else {
            self.fb
                .channel_sigma_and_derivative(w, self.omega, self.ch.d, self.ch.sigma)
        }
    }

    /// `G⁻¹(ω) = ω − Δ − Σ(ω)` and its derivative `1 − Σ'(ω)`.
    pub fn inverse(&self, w: Complex64) -> (Complex64, Complex64) {
        let (s, ds) = self.sigma(w);
        (w - self.delta - s, 1.0 - ds)
    }

    pub fn green(&self, w: Complex64) -> Complex64 {
        1.0 / self.inverse(w).0
    }

    /// Ascending coefficients of the polynomial in the conformal variable `y` whose roots
    /// with `|y| < 1` are the first-sheet poles.
    fn pole_polynomial(&self) -> Vec<Complex64> {
        let m = self.fb.m;
        let c = self.fb.center - self.delta;
        let n = 4.max(self.ch.d + 2);
        let mut coef = vec![Complex64::new(0.0, 0.0); n + 1];
        coef[0] = m * m;
        coef[1] = m * c;
        coef[3] = -m * c;
        coef[4] = -m * m;
        let o2 = self.omega * self.omega;
        coef[2] -= o2;
        if self.ch.sigma != 0.0 {
            let parity = if self.ch.d.is_multiple_of(2) { 1.0 } else { -1.0 };
            coef[self.ch.d + 2] -= o2 * self.ch.sigma * parity;
        }
        while coef.len() > 1 && coef.last().is_some_and(|c| c.norm() == 0.0) {
            coef.pop();
        }
        coef
    }

    /// All roots `y` of the pole polynomial on both sheets.
    pub fn conformal_roots(&self) -> Vec<Complex64> {
        let coef = self.pole_polynomial();
        poly_roots(&coef)
            .into_iter()
            .filter(|y| y.norm() > 0.0)
            .collect()
    }

    fn omega_of_y(&self, y: Complex64) -> Complex64 {
        self.fb.center + self.fb.m * (y + 1.0 / y)
    }

    /// Boundary values `(G₊, G₋)` at cut angle `φ`, approached from the `+i·m` and `−i·m`
    /// sides respectively; finite at the endpoints.
    fn cut_sides(&self, phi: f64) -> (Complex64, Complex64) {
        let c = self.fb.cut_point(phi) - self.delta;
        let s = phi.sin();
        let o2 = self.omega * self.omega;
        let factor = |y: Complex64| -> Complex64 {
            if self.ch.sigma == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                1.0 + (-y).powu(self.ch.d as u32) * self.ch.sigma
            }
        };
        let two_i_m = I * self.fb.m * 2.0;
        let y_plus = Complex64::from_polar(1.0, -phi);
        let y_minus = Complex64::from_polar(1.0, phi);
        let g_plus = s / (c * s - o2 * factor(y_plus) / two_i_m);
        let g_minus = s / (c * s + o2 * factor(y_minus) / two_i_m);
        (g_plus, g_minus)
    }

    /// Spectral density per unit cut angle: `A(x(φ))·dx/dφ` with `x = 2J_eff cos φ`.
    pub fn cut_weight(&self, phi: f64) -> Complex64 {
        let (gp, gm) = self.cut_sides(phi);
        let u = self.fb.m / self.fb.m.norm();
        u * (gm - gp) / (2.0 * PI * I) * (2.0 * self.fb.j_eff * phi.sin())
    }

    /// Graded cut-angle breakpoints around singular features near the cut: conformal roots
    /// and the given first-sheet poles with `|y| ≈ 1`.
    pub(crate) fn cut_breakpoints_with(&self, poles: &[Complex64]) -> Vec<f64> {
        let mut ys = self.conformal_roots();
        ys.extend(poles.iter().map(|&w| self.fb.roots(w).0));
        graded_breakpoints(ys)
    }

    /// Graded breakpoints around the cut angles closest to arbitrary frequencies.
    pub(crate) fn cut_breakpoints_at(&self, points: &[Complex64]) -> Vec<f64> {
        graded_breakpoints(points.iter().map(|&w| self.fb.roots(w).0).collect())
    }
}

/// A feature at conformal `y` sits at cut angle `|arg y|` with width `||y| − 1|`;
/// breakpoints are placed at geometric offsets from the width up.
fn graded_breakpoints(ys: Vec<Complex64>) -> Vec<f64> {
    let mut v = Vec::new();
    for y in ys {
        let width = (y.norm() - 1.0).abs();
        if width > 0.2 || !(y.re.is_finite() && y.im.is_finite()) {
            continue;
        }
        let phi = y.arg().abs();
        if phi > 0.0 && phi < PI {
            v.push(phi);
        }
        let mut delta = width.max(1e-14);
        while delta < 1.0 {
            for b in [phi - delta, phi + delta] {
                if b > 0.0 && b < PI {
                    v.push(b);
                }
            }
            delta *= 4.0;
        }
    }
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
    v
}

/// `G_f(ω) = 1/(ω − Δ − Σ_f(ω))` of a single emitter (first emitter when two are configured).
pub fn green_f(omega: Complex64, cfg: &Config) -> Result<Complex64> {
    green_channel(omega, cfg, Channel::Single)
}

/// Channel Green function `G_±(ω) = 1/(ω − Δ − Σ_±(ω))`.
pub fn green_channel(omega: Complex64, cfg: &Config, channel: Channel) -> Result<Complex64> {
    let p = Propagator::new(cfg, channel)?;
    if omega == p.fb.e_plus || omega == p.fb.e_minus {
        return Err(Error::BranchPoint(omega));
    }
    if cfg.emitter.omega != 0.0 {
        let (y, _) = p.fb.roots(omega);
        if (1.0 - y.norm()).abs() < 1e-12 {
            return Err(Error::OnBranchCut(omega));
        }
    }
    Ok(p.green(omega))
}

/// Leading-order closed-form pole families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticCase {
    SingleResonant,
    SingleDetuned,
    TwoEmitterDark,
    TwoEmitterBright,
    PairResonant,
}

impl std::str::FromStr for AsymptoticCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_resonant" => Ok(Self::SingleResonant),
            "single_detuned" => Ok(Self::SingleDetuned),
            "two_emitter_dark" => Ok(Self::TwoEmitterDark),
            "two_emitter_bright" => Ok(Self::TwoEmitterBright),
            "pair_resonant" => Ok(Self::PairResonant),
            other => Err(Error::UnknownCase(other.to_string())),
        }
    }
}

/// Offset of the dark-pole seeds from the imaginary axis.
pub const DARK_SEED_OFFSET: f64 = 1e-3;

/// Leading-order pole predictions in the strongly dissipative limit.
pub fn asymptotic_poles(cfg: &Config, case: AsymptoticCase) -> Result<Vec<ComplexEnergy>> {
    let g = cfg.bath.gamma;
    let om = cfg.emitter.omega;
    let j = cfg.bath.j;
    let delta = cfg.emitter.delta;
    let s3 = 3f64.sqrt();
    let cube = |pref: f64| -> Vec<ComplexEnergy> {
        let a = pref.cbrt() * g.powf(-1.0 / 3.0);
        vec![
            Complex64::new(-s3, -1.0) * (0.5 * a),
            Complex64::new(s3, -1.0) * (0.5 * a),
        ]
    };
    match case {
        AsymptoticCase::SingleResonant => Ok(cube(om.powi(4) / 2.0)),
        AsymptoticCase::PairResonant => Ok(cube(2.0 * om.powi(4))),
        AsymptoticCase::SingleDetuned => {
            if delta == 0.0 {
                return Err(Error::UnknownCase("single_detuned needs Δ ≠ 0".into()));
            }
            // √(2Δ) with the principal branch; e^{iπ/4}/√(2Δ) is continued for Δ < 0.
            let root = Complex64::new(2.0 * delta, 0.0).sqrt();
            let first = delta
                - I * (om * om / root) * Complex64::from_polar(1.0, PI / 4.0) * g.powf(-0.5);
            let second = -I * (om.powi(4) / (2.0 * delta * delta) + 2.0 * j * j) / g;
            Ok(vec![first, Complex64::new(second.re, second.im)])
        }
        AsymptoticCase::TwoEmitterDark | AsymptoticCase::TwoEmitterBright => {
            let d = cfg.emitter.d().ok_or_else(|| {
                Error::UnknownCase("two-emitter cases need two emitters".into())
            })?;
            if case == AsymptoticCase::TwoEmitterDark {
                let im = -(d as f64) * om * om / g;
                Ok(vec![
                    Complex64::new(-DARK_SEED_OFFSET, im),
                    Complex64::new(DARK_SEED_OFFSET, im),
                ])
            } else {
                Ok(cube(2.0 * om.powi(4)))
            }
        }
    }
}

/// Asymptotic cases applicable to a channel.
fn seed_cases(cfg: &Config, channel: Channel) -> Vec<AsymptoticCase> {
    let detuned = cfg.emitter.delta != 0.0;
    match channel {
        Channel::Single if detuned => vec![AsymptoticCase::SingleDetuned],
        Channel::Single => vec![AsymptoticCase::SingleResonant],
        Channel::Even | Channel::Odd => {
            let d = cfg.emitter.d().unwrap_or(0);
            // The bright channel is the one whose z^d term adds near the edge (z ≈ −1).
            let bright_is_even = d.is_multiple_of(2);
            let bright = (channel == Channel::Even) == bright_is_even;
            if bright {
                vec![AsymptoticCase::TwoEmitterBright]
            } else {
                vec![AsymptoticCase::TwoEmitterDark]
            }
        }
        Channel::Pair => vec![],
    }
}

/// Options for [`find_poles_with`].
#[derive(Debug, Clone, Copy)]
pub struct PoleOptions {
    /// Also start from the 6×6 log-spaced lower-half-plane grid, with deflation.
    pub seed_grid: bool,
    /// Maximum allowed `|G⁻¹(ε_s)|`.
    pub residual_tol: f64,
    /// Relative distance below which two roots are merged.
    pub dedup_tol: f64,
}

impl Default for PoleOptions {
    fn default() -> Self {
        Self {
            seed_grid: true,
            residual_tol: 1e-10,
            dedup_tol: 1e-9,
        }
    }
}

/// Poles found by a search together with the per-seed failures.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleReport {
    pub poles: Vec<QuasiboundState>,
    pub failures: Vec<Error>,
}

/// First-sheet poles of a channel Green function, sorted by real then imaginary part.
pub fn find_poles(cfg: &Config, channel: Channel) -> Result<Vec<QuasiboundState>> {
    Ok(find_poles_with(cfg, channel, PoleOptions::default())?.poles)
}

/// Pole search with explicit options; seed failures are collected, not fatal.
pub fn find_poles_with(cfg: &Config, channel: Channel, opts: PoleOptions) -> Result<PoleReport> {
    let prop = Propagator::new(cfg, channel)?;
    if cfg.emitter.omega == 0.0 {
        return Ok(PoleReport {
            poles: vec![QuasiboundState {
                pole: Complex64::new(cfg.emitter.delta, 0.0),
                residue: Complex64::new(1.0, 0.0),
                channel,
                wavefunction: None,
            }],
            failures: vec![],
        });
    }
    let mut seeds: Vec<Complex64> = prop
        .conformal_roots()
        .into_iter()
        .filter(|y| y.norm() < 1.05)
        .map(|y| prop.omega_of_y(y))
        .collect();
    for case in seed_cases(cfg, channel) {
        if let Ok(v) = asymptotic_poles(cfg, case) {
            seeds.extend(v);
        }
    }
    let polish = |seed: Complex64, found: &[Complex64]| -> Result<Complex64> {
        let f = |w: Complex64| -> Option<(Complex64, Complex64)> {
            if !(w.re.is_finite() && w.im.is_finite()) {
                return None;
            }
            let (mut fw, mut dfw) = prop.inverse(w);
            for &r in found {
                // Deflation: f/(w − r), derivative by the quotient rule.
                let q = w - r;
                if q.norm() == 0.0 {
                    return None;
                }
                dfw = (dfw - fw / q) / q;
                fw /= q;
            }
            Some((fw, dfw))
        };
        let res = newton(f, seed, 1e-15, 200).ok_or(Error::NoConvergence { seed })?;
        Ok(res.root)
    };
    let mut failures = Vec::new();
    let mut roots = Vec::new();
    let first: Vec<Result<Complex64>> = seeds.par_iter().map(|&s| polish(s, &[])).collect();
    for r in first {
        match r {
            Ok(z) => roots.push(z),
            Err(e) => failures.push(e),
        }
    }
    let accept = |z: Complex64, failures: &mut Vec<Error>| -> Option<Complex64> {
        let (y, _) = prop.fb.roots(z);
        let resid = prop.inverse(z).0.norm();
        if resid > opts.residual_tol || !(z.im < 0.0) {
            return None;
        }
        if (1.0 - y.norm()).abs() < 1e-12 {
            failures.push(Error::PoleOnCut(z));
            return None;
        }
        Some(z)
    };
    let mut good: Vec<Complex64> = roots
        .into_iter()
        .filter_map(|z| accept(z, &mut failures))
        .collect();
    dedup_roots(&mut good, opts.dedup_tol);
    if opts.seed_grid {
        let scale = (cfg.emitter.omega.abs() + cfg.emitter.delta.abs() + cfg.bath.j)
            .max(1e-3);
        let mags = logspace(1e-3 * scale, 3.0 * scale, 6);
        let mut grid = Vec::new();
        for (i, &re) in mags.iter().enumerate() {
            for &im in &mags {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                grid.push(Complex64::new(sign * re, -im));
            }
        }
        let base = good.clone();
        let extra: Vec<Result<Complex64>> = grid
            .par_iter()
            .map(|&s| {
                let z = polish(s, &base)?;
                // Re-polish without deflation to remove deflation round-off.
                polish(z, &[])
            })
            .collect();
        for r in extra {
            match r {
                Ok(z) => {
                    if let Some(z) = accept(z, &mut failures) {
                        good.push(z);
                    }
                }
                Err(e) => failures.push(e),
            }
        }
        dedup_roots(&mut good, opts.dedup_tol);
    }
    sort_roots(&mut good);
    let poles = good
        .into_iter()
        .map(|z| QuasiboundState {
            pole: z,
            residue: 1.0 / prop.inverse(z).1,
            channel,
            wavefunction: None,
        })
        .collect();
    Ok(PoleReport { poles, failures })
}

/// Spectral density on the collapsed cut at abscissa `x ∈ (−2J_eff, 2J_eff)`, where the
/// cut point is `c₀ + x·m/|m|`. Normalized so that `Σ_s Z_s + ∫A(x)dx = 1`.
pub fn branch_cut_density(x: f64, cfg: &Config, channel: Channel) -> Result<Complex64> {
    let p = Propagator::new(cfg, channel)?;
    let je = p.fb.j_eff;
    if !(x > -2.0 * je && x < 2.0 * je) {
        return Err(Error::OutOfCut(x));
    }
    let phi = (x / (2.0 * je)).acos();
    let s = phi.sin();
    if s == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(p.cut_weight(phi) / (2.0 * je * s))
}

/// Discretized cut node: location `c(φ)` and weight `A·dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutNode {
    pub x: f64,
    pub location: Complex64,
    pub weight: Complex64,
}

/// Poles plus discretized cut: `G(ω) ≈ Σ Z_s/(ω − ε_s) + Σ_m w_m/(ω − c_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRepresentation {
    pub poles: Vec<QuasiboundState>,
    pub cut_nodes: Vec<CutNode>,
    pub regime: Regime,
}

impl SpectralRepresentation {
    /// `Σ Z_s + Σ w_m`, which should equal 1.
    pub fn total_weight(&self) -> Complex64 {
        self.poles.iter().map(|p| p.residue).sum::<Complex64>()
            + self.cut_nodes.iter().map(|n| n.weight).sum::<Complex64>()
    }

    pub fn evaluate(&self, w: Complex64) -> Complex64 {
        self.poles
            .iter()
            .map(|p| p.residue / (w - p.pole))
            .sum::<Complex64>()
            + self
                .cut_nodes
                .iter()
                .map(|n| n.weight / (w - n.location))
                .sum::<Complex64>()
    }
}

/// Spectral representation with `n` Gauss–Legendre nodes per cut panel, panels split at
/// near-cut singular features.
pub fn spectral_representation(
    cfg: &Config,
    channel: Channel,
    n: usize,
) -> Result<SpectralRepresentation> {
    let p = Propagator::new(cfg, channel)?;
    let poles = find_poles(cfg, channel)?;
    let mut edges = vec![0.0];
    edges.extend(p.cut_breakpoints_with(&pole_locations(&poles)));
    edges.push(PI);
    let gl = gauss_legendre(n);
    let mut cut_nodes = Vec::new();
    if cfg.emitter.omega != 0.0 {
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a <= 0.0 {
                continue;
            }
            for &(t, wt) in &gl {
                let phi = 0.5 * (a + b) + 0.5 * (b - a) * t;
                cut_nodes.push(CutNode {
                    x: 2.0 * p.fb.j_eff * phi.cos(),
                    location: p.fb.cut_point(phi),
                    weight: p.cut_weight(phi) * (0.5 * (b - a) * wt),
                });
            }
        }
    }
    Ok(SpectralRepresentation {
        poles,
        cut_nodes,
        regime: p.fb.regime,
    })
}

fn pole_locations(poles: &[QuasiboundState]) -> Vec<Complex64> {
    poles.iter().map(|p| p.pole).collect()
}

/// Cut quadrature tolerances used by the time-domain routines.
pub fn cut_quad_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_intervals: 20_000,
    }
}

/// `∫ A(x) e^{−i c(x) t} dx` over the collapsed cut.
fn cut_integral(p: &Propagator, breaks: &[f64], t: f64) -> Complex64 {
    integrate(
        |phi| p.cut_weight(phi) * (-I * p.fb.cut_point(phi) * t).exp(),
        0.0,
        PI,
        breaks,
        cut_quad_options(),
    )
    .value
}

/// Spectral sum rule `Σ_s Z_s + ∫A(x)dx`.
pub fn sum_rule(cfg: &Config, channel: Channel) -> Result<Complex64> {
    let p = Propagator::new(cfg, channel)?;
    let poles = find_poles(cfg, channel)?;
    let br = p.cut_breakpoints_with(&pole_locations(&poles));
    let cut = if cfg.emitter.omega == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        cut_integral(&p, &br, 0.0)
    };
    Ok(poles.iter().map(|s| s.residue).sum::<Complex64>() + cut)
}

/// `G(t)` of a channel from residues plus the cut integral.
pub fn time_domain(cfg: &Config, times: &[f64], channel: Channel) -> Result<TimeSeries> {
    let p = Propagator::new(cfg, channel)?;
    let poles = find_poles(cfg, channel)?;
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::InvalidParameter {
            name: "times",
            reason: format!("negative time {t}"),
        });
    }
    let br = p.cut_breakpoints_with(&pole_locations(&poles));
    let with_cut = cfg.emitter.omega != 0.0;
    let values = times
        .par_iter()
        .map(|&t| {
            let mut acc: Complex64 = poles
                .iter()
                .map(|s| s.residue * (-I * s.pole * t).exp())
                .sum();
            if with_cut {
                acc += cut_integral(&p, &br, t);
            }
            -I * acc
        })
        .collect();
    Ok(TimeSeries {
        times: times.to_vec(),
        values,
        method: Method::ResiduesCut,
    })
}

/// Real-axis sampling used by [`time_domain_fft`].
#[derive(Debug, Clone, Copy)]
pub struct FftOptions {
    /// Half-width of the frequency window.
    pub half_width: f64,
    /// Number of samples (rounded up to a power of two).
    pub samples: usize,
}

impl FftOptions {
    /// Window and resolution adequate for times up to `t_max` given the slowest decay rate.
    pub fn for_range(t_max: f64, slowest_decay: f64, scale: f64) -> Self {
        let half_width = 200.0 * scale.max(1.0);
        let period = (8.0 * t_max).max(40.0 / slowest_decay.max(1e-6));
        let samples = ((2.0 * half_width * period / (2.0 * PI)).ceil() as usize)
            .next_power_of_two()
            .min(1 << 24);
        Self {
            half_width,
            samples,
        }
    }
}

/// `G(t) = ∫dω/2π G(ω)e^{−iωt}` by FFT of real-axis samples.
///
/// The large-ω tail is removed analytically with `1/(ω−a) + iκ/(ω−a)²`, `a = Δ − iκ`,
/// whose transform is `−i e^{−iat} − iκ t e^{−iat}`; the remainder decays as `ω⁻³`.
/// Results at arbitrary times use cubic interpolation on the FFT grid.
pub fn time_domain_fft(
    cfg: &Config,
    times: &[f64],
    channel: Channel,
    opts: FftOptions,
) -> Result<TimeSeries> {
    let (dt, grid) = fft_grid(cfg, channel, opts)?;
    let n = grid.len();
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let x = t / dt;
        let i1 = x.floor() as usize;
        let f = x - i1 as f64;
        if i1 + 2 >= n {
            return Err(Error::InvalidParameter {
                name: "times",
                reason: "time beyond the FFT period".into(),
            });
        }
        let v = if i1 == 0 {
            // One-sided cubic at the origin.
            let (q0, q1, q2, q3) = (grid[0], grid[1], grid[2], grid[3]);
            q0 * ((1.0 - f) * (2.0 - f) * (3.0 - f) / 6.0)
                + q1 * (f * (2.0 - f) * (3.0 - f) / 2.0)
                + q2 * (f * (f - 1.0) * (3.0 - f) / 2.0)
                + q3 * (f * (f - 1.0) * (f - 2.0) / 6.0)
        } else {
            let (p0, p1, p2, p3) = (grid[i1 - 1], grid[i1], grid[i1 + 1], grid[i1 + 2]);
            p0 * (-f * (f - 1.0) * (f - 2.0) / 6.0)
                + p1 * ((f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0)
                + p2 * (-(f + 1.0) * f * (f - 2.0) / 2.0)
                + p3 * ((f + 1.0) * f * (f - 1.0) / 6.0)
        };
        values.push(v);
    }
    Ok(TimeSeries {
        times: times.to_vec(),
        values,
        method: Method::Fft,
    })
}

/// `G(t)` on the uniform FFT time grid `t_i = i·dt` for the first half period.
pub(crate) fn fft_grid(
    cfg: &Config,
    channel: Channel,
    opts: FftOptions,
) -> Result<(f64, Vec<Complex64>)> {
    let p = Propagator::new(cfg, channel)?;
    let kappa = 1.0;
    let a = Complex64::new(cfg.emitter.delta, -kappa);
    let n = opts.samples.next_power_of_two();
    let w0 = -opts.half_width;
    let dw = 2.0 * opts.half_width / n as f64;
    let mut buf: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let w = Complex64::new(w0 + (k as f64 + 0.5) * dw, 0.0);
            let g = if cfg.emitter.omega == 0.0 {
                1.0 / (w - cfg.emitter.delta)
            } else {
                p.green(w)
            };
            g - 1.0 / (w - a) - I * kappa / ((w - a) * (w - a))
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let dt = 2.0 * PI / (n as f64 * dw);
    let grid = (0..n / 2)
        .map(|idx| {
            let t = idx as f64 * dt;
            // Shift of the sample origin: ω_k = w0 + (k + ½)dω.
            let phase = (-I * (w0 + 0.5 * dw) * t).exp();
            let e = (-I * a * t).exp();
            buf[idx] * phase * (dw / (2.0 * PI)) - I * e - I * kappa * t * e
        })
        .collect();
    Ok((dt, grid))
}

/// Amplitudes of two emitters after exciting emitter 1 (`G₁₁`, `G₂₁`) or emitter 2 (`G₁₂`).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoEmitterSeries {
    pub times: Vec<f64>,
    pub g11: Vec<Complex64>,
    pub g21: Vec<Complex64>,
    pub g12: Vec<Complex64>,
}

impl TwoEmitterSeries {
    /// Population `⟨a₂†a₂⟩(t) = |G₂₁(t)|²` transferred to emitter 2.
    pub fn transferred(&self) -> Vec<f64> {
        self.g21.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Correlation `|⟨a₂†(t)a₁(t)⟩| = |G₂₁(t)·G₁₁(t)*|`.
    pub fn correlation(&self) -> Vec<f64> {
        self.g21
            .iter()
            .zip(&self.g11)
            .map(|(a, b)| (a * b.conj()).norm())
            .collect()
    }
}

/// Two-emitter dynamics from the channel propagators: `G₁₁ = (G₊ + G₋)/2`,
/// `G₂₁ = f₂₁ (G₊ − G₋)/2`, `G₁₂ = f₁₂ (G₊ − G₋)/2`.
pub fn two_emitter_dynamics(cfg: &Config, times: &[f64]) -> Result<TwoEmitterSeries> {
    let d = cfg.emitter.d().ok_or(Error::InvalidParameter {
        name: "positions",
        reason: "two emitters required".into(),
    })?;
    let gp = time_domain(cfg, times, Channel::Even)?;
    let gm = time_domain(cfg, times, Channel::Odd)?;
    let (f21, f12) = crate::bath::offdiagonal_factors(&cfg.bath, d)?;
    let mut out = TwoEmitterSeries {
        times: times.to_vec(),
        g11: Vec::with_capacity(times.len()),
        g21: Vec::with_capacity(times.len()),
        g12: Vec::with_capacity(times.len()),
    };
    for (a, b) in gp.values.iter().zip(&gm.values) {
        out.g11.push((a + b) * 0.5);
        out.g21.push(f21 * (a - b) * 0.5);
        out.g12.push(f12 * (a - b) * 0.5);
    }
    Ok(out)
}

/// Asymptotic two-emitter amplitudes at Δ = 0: `iG₁ₙ(t) = (2/3)e^{−γ̄t}cos(√3γ̄t) ± ½e^{−dΩ²t/Γ}`
/// with `γ̄ = Ω^{4/3}/(4Γ)^{1/3}`; returns `(iG₁₁, iG₂₁)`.
pub fn two_emitter_asymptotic(cfg: &Config, t: f64) -> Result<(f64, f64)> {
    let d = cfg.emitter.d().ok_or(Error::UnknownCase(
        "two-emitter asymptotics need two emitters".into(),
    ))? as f64;
    let om = cfg.emitter.omega;
    let g = cfg.bath.gamma;
    let gb = om.powf(4.0 / 3.0) / (4.0 * g).cbrt();
    let bright = 2.0 / 3.0 * (-gb * t).exp() * (3f64.sqrt() * gb * t).cos();
    let dark = 0.5 * (-d * om * om * t / g).exp();
    Ok((bright + dark, bright - dark))
}

/// Double-pole approximation `iG(t) ≈ (4/3)e^{−γ_b t}cos(√3γ_b t)` at Δ = 0.
pub fn double_pole_approximation(gamma_b: f64, t: f64) -> f64 {
    4.0 / 3.0 * (-gamma_b * t).exp() * (3f64.sqrt() * gamma_b * t).cos()
}

/// Representation of a quasibound wavefunction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WavefunctionSpace {
    /// Amplitudes `f_k` on the `N_b`-point momentum grid `k = 2πn/N_b`.
    Momentum { nb: usize },
    /// Amplitudes `f_j` for site offsets `−range..=range` from the emitter.
    Real { range: i64 },
}

/// Emitter amplitude `c₁ = Z_s` and bath amplitudes of a single-emitter quasibound state.
pub fn quasibound_wavefunction(
    state: &QuasiboundState,
    cfg: &Config,
    space: WavefunctionSpace,
) -> Result<QuasiboundState> {
    let prop = Propagator::new(cfg, Channel::Single)?;
    let eps = state.pole;
    let c1 = 1.0 / prop.inverse(eps).1;
    let om = cfg.emitter.omega;
    let mut amplitudes = BTreeMap::new();
    match space {
        WavefunctionSpace::Momentum { nb } => {
            let norm = om / (nb as f64).sqrt();
            for n in 0..nb {
                let k = 2.0 * PI * n as f64 / nb as f64;
                let band = crate::bath::complex_band(&[k], &cfg.bath);
                amplitudes.insert(n as i64, c1 * norm / (eps - band));
            }
        }
        WavefunctionSpace::Real { range } => {
            for j in -range..=range {
                let s = self_energy_realspace(eps, j, &cfg.bath, &cfg.emitter)?;
                amplitudes.insert(j, c1 * s / om);
            }
        }
    }
    Ok(QuasiboundState {
        wavefunction: Some(Wavefunction { c1, amplitudes }),
        ..state.clone()
    })
}

/// `c₁ = (ε² + 2iΓε − 4J²)/(2ε² + 3iΓε − 4J²)` at Δ = 0, θ = −π/2.
pub fn c1_closed_form(eps: Complex64, gamma: f64, j: f64) -> Complex64 {
    let num = eps * eps + I * 2.0 * gamma * eps - 4.0 * j * j;
    let den = eps * eps * 2.0 + I * 3.0 * gamma * eps - 4.0 * j * j;
    num / den
}

/// Peak momentum `k_b = π − (√3/2^{2/3})(Ω/Γ)^{2/3}` of a resonant quasibound state.
pub fn k_b(omega: f64, gamma: f64) -> f64 {
    PI - 3f64.sqrt() / 2f64.powf(2.0 / 3.0) * (omega / gamma).powf(2.0 / 3.0)
}

/// Localization length `l_b = 2^{2/3}(Γ/Ω)^{2/3}` of a resonant quasibound state.
pub fn l_b(omega: f64, gamma: f64) -> f64 {
    2f64.powf(2.0 / 3.0) * (gamma / omega).powf(2.0 / 3.0)
}
