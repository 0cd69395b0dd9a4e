//! Complex band structures, dissipative density of states, the fictitious bath, and
//! self-energies (closed form and quadrature).
//!
//! For the cosine family the complex band is `λ(z) = c₀ + A z + B/z` on `z = e^{ik}` with
//! `c₀ = −i(Γ + γ₀)`, `A = J e^{iθ} − iΓ/2`, `B = J e^{−iθ} − iΓ/2`. Deforming the unit
//! circle to the radius where `|A z| = |B/z|` collapses the elliptic branch curve onto the
//! segment `c₀ + 2m·[−1, 1]`, `m = √(AB)`. In the normalized variable `s = (ω − c₀)/m`
//! the inner root `y = (s − √(s−2)√(s+2))/2` of `y² − s y + 1 = 0` parametrizes the whole
//! first sheet (`|y| < 1`), and every closed form below is written in terms of `y`.

use crate::error::{Error, Result};
use crate::model::{BandKind, BathParams, ComplexEnergy, EmitterConfig};
use crate::numerics::quad::{integrate, QuadOptions};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn cx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Relative perturbation applied to `Γ` at the degenerate point `Γ = 2J`.
pub const DEGENERATE_PERTURBATION: f64 = 1e-9;

/// Dispersion `ε(k)` of the bath.
pub fn dispersion(k: &[f64], p: &BathParams) -> f64 {
    match p.band_kind {
        BandKind::Cosine1d | BandKind::GappedCosine1d => 2.0 * p.j * (k[0] + p.theta).cos(),
        _ => 0.0,
    }
}

/// Dissipation rate `γ(k)` of the bath.
pub fn dissipation(k: &[f64], p: &BathParams) -> f64 {
    match p.band_kind {
        BandKind::Cosine1d | BandKind::GappedCosine1d => p.gamma0 + p.gamma * (1.0 + k[0].cos()),
        BandKind::SqrtSin1d => p.gamma0 + p.gamma / 3.0 * k[0].sin().abs().sqrt(),
        BandKind::Cosine3d => {
            p.gamma0 + p.gamma * (3.0 + k[0].cos() + k[1].cos() + k[2].cos())
        }
        BandKind::CustomGrid => {
            let g = p.grid.as_ref().expect("validated custom grid");
            let n = g.len();
            let x = k[0].rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64;
            let i0 = x.floor() as usize % n;
            let i1 = (i0 + 1) % n;
            let f = x - x.floor();
            p.gamma0 + p.gamma * (g[i0] * (1.0 - f) + g[i1] * f)
        }
    }
}

/// Complex band `ε(k) − iγ(k)`; `k` holds `dim` components.
pub fn complex_band(k: &[f64], p: &BathParams) -> ComplexEnergy {
    assert_eq!(k.len(), p.dim as usize, "quasimomentum dimension mismatch");
    Complex64::new(dispersion(k, p), -dissipation(k, p))
}

/// Smallest and largest dissipation rate of the band.
pub fn dissipation_range(p: &BathParams) -> (f64, f64) {
    match p.band_kind {
        BandKind::Cosine1d | BandKind::GappedCosine1d => (p.gamma0, p.gamma0 + 2.0 * p.gamma),
        BandKind::SqrtSin1d => (p.gamma0, p.gamma0 + p.gamma / 3.0),
        BandKind::Cosine3d => (p.gamma0, p.gamma0 + 6.0 * p.gamma),
        BandKind::CustomGrid => {
            let g = p.grid.as_ref().expect("validated custom grid");
            let lo = g.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (p.gamma0 + p.gamma * lo, p.gamma0 + p.gamma * hi)
        }
    }
}

/// Dissipative density of states `D_s(γ) = ∫ d^dk/(2π)^d δ(γ − γ(k))`.
///
/// Closed form for the cosine and square-root bands; a k-grid histogram otherwise
/// (see [`ddos_histogram`] for the grid and bin width used).
pub fn ddos(gamma: f64, p: &BathParams) -> Result<f64> {
    let (lo, hi) = dissipation_range(p);
    if !(gamma >= lo && gamma <= hi) {
        return Err(Error::OutOfBand(gamma));
    }
    let x = gamma - p.gamma0;
    match p.band_kind {
        BandKind::Cosine1d | BandKind::GappedCosine1d => {
            Ok(1.0 / (PI * (x * (2.0 * p.gamma - x)).sqrt()))
        }
        BandKind::SqrtSin1d => {
            let sigma = (3.0 * x / p.gamma).powi(2);
            Ok(36.0 * x / (PI * p.gamma * p.gamma * (1.0 - sigma * sigma).sqrt()))
        }
        BandKind::Cosine3d => Ok(ddos_histogram(gamma, p, 128, (hi - lo) / 256.0)),
        BandKind::CustomGrid => Ok(ddos_histogram(gamma, p, 4096, (hi - lo) / 256.0)),
    }
}

/// Histogram estimate of `D_s(γ)` on a uniform grid of `n` points per axis with a bin
/// `[γ − w/2, γ + w/2)`.
pub fn ddos_histogram(gamma: f64, p: &BathParams, n: usize, bin_width: f64) -> f64 {
    let lo = gamma - 0.5 * bin_width;
    let hi = gamma + 0.5 * bin_width;
    let dk = 2.0 * PI / n as f64;
    let mut count = 0usize;
    match p.dim {
        1 => {
            for i in 0..n {
                let g = dissipation(&[(i as f64 + 0.5) * dk], p);
                if g >= lo && g < hi {
                    count += 1;
                }
            }
        }
        3 => {
            let cosines: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) * dk).cos()).collect();
            for &a in &cosines {
                for &b in &cosines {
                    for &c in &cosines {
                        let g = p.gamma0 + p.gamma * (3.0 + a + b + c);
                        if g >= lo && g < hi {
                            count += 1;
                        }
                    }
                }
            }
        }
        _ => {
            let total = n.pow(p.dim);
            for idx in 0..total {
                let mut k = Vec::with_capacity(p.dim as usize);
                let mut r = idx;
                for _ in 0..p.dim {
                    k.push(((r % n) as f64 + 0.5) * dk);
                    r /= n;
                }
                let g = dissipation(&k, p);
                if g >= lo && g < hi {
                    count += 1;
                }
            }
        }
    }
    count as f64 / (n.pow(p.dim) as f64 * bin_width)
}

/// Spectral regime of the cosine bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `Γ/2J < 1`: the collapsed cut is (for θ = −π/2) horizontal.
    Dispersive,
    /// `Γ/2J > 1`: the collapsed cut is (for θ = −π/2) vertical.
    Dissipative,
}

/// Fictitious bath replacing the elliptic branch curve by a straight cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FictitiousBath {
    /// `J_eff = |m|`, which equals `√|J² − Γ²/4|` for θ = −π/2.
    pub j_eff: f64,
    pub regime: Regime,
    /// `max(|A|/|B|, |B|/|A|)`, equal to `|(J+Γ/2)/(J−Γ/2)|` for θ = −π/2.
    pub z_max: f64,
    /// Centre `c₀ = −i(Γ + γ₀)` of the cut.
    pub center: Complex64,
    /// Half-length vector of the cut, `m = √(AB)` with `Im m > 0` (or `m > 0` if real).
    pub m: Complex64,
    /// Cut endpoints `c₀ ± 2m`, computed without cancellation.
    pub e_plus: Complex64,
    pub e_minus: Complex64,
    /// Phase `κ = m/(A r)` relating the normalized root `y` to `e^{ik}` on the deformed circle.
    pub kappa: Complex64,
    /// Radius `r = √(|B|/|A|)` of the deformed circle.
    pub r: f64,
    /// Value of `Γ` actually used (perturbed at the degenerate point).
    pub gamma_used: f64,
    /// Whether the degenerate-circle perturbation was applied.
    pub perturbed: bool,
}

impl FictitiousBath {
    pub fn new(p: &BathParams) -> Result<Self> {
        if !p.band_kind.is_cosine_1d() {
            return Err(Error::InvalidParameter {
                name: "band_kind",
                reason: format!("no fictitious bath for {}", p.band_kind.name()),
            });
        }
        match Self::build(p, p.gamma) {
            Ok(fb) => Ok(fb),
            Err(Error::DegenerateCircle) => {
                let mut fb = Self::build(p, p.gamma * (1.0 + DEGENERATE_PERTURBATION))?;
                fb.perturbed = true;
                Ok(fb)
            }
            Err(e) => Err(e),
        }
    }

    fn build(p: &BathParams, gamma: f64) -> Result<Self> {
        let j = p.j;
        let mut cos_t = p.theta.cos();
        let mut sin_t = p.theta.sin();
        if cos_t.abs() < 1e-15 {
            cos_t = 0.0;
            sin_t = sin_t.signum();
        }
        if sin_t.abs() < 1e-15 {
            sin_t = 0.0;
            cos_t = cos_t.signum();
        }
        let eith = Complex64::new(cos_t, sin_t);
        let a = eith * j - I * (gamma / 2.0);
        let b = eith.conj() * j - I * (gamma / 2.0);
        let ab = Complex64::new(j * j - gamma * gamma / 4.0, -gamma * j * cos_t);
        let scale = j.max(gamma);
        if ab.norm() <= 1e-18 * scale * scale || a.norm() == 0.0 || b.norm() == 0.0 {
            return Err(Error::DegenerateCircle);
        }
        let mut m = ab.sqrt();
        if m.im < 0.0 || (m.im == 0.0 && m.re < 0.0) {
            m = -m;
        }
        let c0 = Complex64::new(0.0, -(gamma + p.gamma0));
        // (−iΓ + 2m)(−iΓ − 2m) = −4J(J − iΓ cos θ); use the larger factor to get the smaller.
        let plus = -I * gamma + m * 2.0;
        let minus = -I * gamma - m * 2.0;
        let prod = Complex64::new(-4.0 * j * j, 4.0 * j * gamma * cos_t);
        let (plus, minus) = if plus.norm() >= minus.norm() {
            (plus, prod / plus)
        } else {
            (prod / minus, minus)
        };
        let shift = Complex64::new(0.0, -p.gamma0);
        let r = (b.norm() / a.norm()).sqrt();
        let kappa = m / (a * r);
        let z_max = (a.norm() / b.norm()).max(b.norm() / a.norm());
        let regime = if gamma < 2.0 * j {
            Regime::Dispersive
        } else {
            Regime::Dissipative
        };
        Ok(Self {
            j_eff: m.norm(),
            regime,
            z_max,
            center: c0,
            m,
            e_plus: plus + shift,
            e_minus: minus + shift,
            kappa,
            r,
            gamma_used: gamma,
            perturbed: false,
        })
    }

    /// Fictitious spectrum `ω̄_k`: `c₀ − 2m sin k` (dispersive) or `c₀ − 2m cos k` (dissipative).
    pub fn spectrum(&self, k: f64) -> Complex64 {
        match self.regime {
            Regime::Dispersive => self.center - self.m * (2.0 * k.sin()),
            Regime::Dissipative => self.center - self.m * (2.0 * k.cos()),
        }
    }

    /// Point `c(φ) = c₀ + 2m cos φ` of the collapsed cut, `φ ∈ [0, π]`.
    pub fn cut_point(&self, phi: f64) -> Complex64 {
        if phi < 0.5 * PI {
            let s = (0.5 * phi).sin();
            self.e_plus - self.m * (4.0 * s * s)
        } else {
            let c = (0.5 * phi).cos();
            self.e_minus + self.m * (4.0 * c * c)
        }
    }

    /// Angle `φ` of the cut point closest to `ω`.
    pub fn nearest_cut_angle(&self, omega: Complex64) -> f64 {
        let t = ((omega - self.center) / (self.m * 2.0)).re.clamp(-1.0, 1.0);
        t.acos()
    }

    /// Normalized quantities at `ω`: `(y, m·g)` with `g = √(s−2)√(s+2)`.
    pub fn roots(&self, omega: Complex64) -> (Complex64, Complex64) {
        let a = (omega - self.e_plus) / self.m;
        let b = (omega - self.e_minus) / self.m;
        let g = a.sqrt() * b.sqrt();
        let s = (a + b) * 0.5;
        let y = if (s - g).norm() >= (s + g).norm() * 1e-8 {
            (s - g) * 0.5
        } else {
            // s ≈ g: the inner root is small; use y = 1/y_out.
            2.0 / (s + g)
        };
        (y, self.m * g)
    }

    fn check(&self, omega: Complex64) -> Result<(Complex64, Complex64)> {
        if omega == self.e_plus || omega == self.e_minus {
            return Err(Error::BranchPoint(omega));
        }
        let (y, mg) = self.roots(omega);
        let y_out = 1.0 / y;
        if (1.0 - y.norm()).abs() < 1e-12 && (1.0 - y_out.norm()).abs() < 1e-12 {
            return Err(Error::OnBranchCut(omega));
        }
        Ok((y, mg))
    }

    /// Single-emitter `Σ_f(ω)` and its derivative; total function (principal branch on the cut).
    pub fn sigma_and_derivative(&self, omega: Complex64, omega_c: f64) -> (Complex64, Complex64) {
        let (_, mg) = self.roots(omega);
        let sig = omega_c * omega_c / mg;
        let dsig = -sig * 0.5 * (1.0 / (omega - self.e_plus) + 1.0 / (omega - self.e_minus));
        (sig, dsig)
    }

    /// Channel self-energy `Σ_σ = Σ_f (1 + σ z^d)` with `z = −y`, and its derivative.
    pub fn channel_sigma_and_derivative(
        &self,
        omega: Complex64,
        omega_c: f64,
        d: usize,
        sign: f64,
    ) -> (Complex64, Complex64) {
        let (y, mg) = self.roots(omega);
        let sig = omega_c * omega_c / mg;
        let dsig = -sig * 0.5 * (1.0 / (omega - self.e_plus) + 1.0 / (omega - self.e_minus));
        let z = -y;
        let zd = z.powu(d as u32);
        let dy = -y / mg;
        let dzd = if d == 0 {
            cx(0.0)
        } else {
            -(z.powu(d as u32 - 1) * d as f64) * dy
        };
        (
            sig * (1.0 + zd * sign),
            dsig * (1.0 + zd * sign) + sig * dzd * sign,
        )
    }
}

/// Closed-form single-emitter self-energy `Σ_f(ω)` of the fictitious bath.
pub fn self_energy_f(omega: Complex64, p: &BathParams, e: &EmitterConfig) -> Result<Complex64> {
    let fb = FictitiousBath::new(p)?;
    fb.check(omega)?;
    Ok(fb.sigma_and_derivative(omega, e.omega).0)
}

/// Even/odd channel self-energies `(Σ⁺, Σ⁻) = Σ_f (1 ± z^d)` for two emitters at distance `d`.
pub fn self_energy_channels(
    omega: Complex64,
    d: usize,
    p: &BathParams,
    e: &EmitterConfig,
) -> Result<(Complex64, Complex64)> {
    let fb = FictitiousBath::new(p)?;
    fb.check(omega)?;
    Ok((
        fb.channel_sigma_and_derivative(omega, e.omega, d, 1.0).0,
        fb.channel_sigma_and_derivative(omega, e.omega, d, -1.0).0,
    ))
}

/// Real-space self-energy element `Σ_{j0}(ω) = Ω² ∫dk/2π e^{ikj}/(ω − ε_k + iγ_k)`,
/// continued through the fictitious bath.
pub fn self_energy_realspace(
    omega: Complex64,
    j: i64,
    p: &BathParams,
    e: &EmitterConfig,
) -> Result<Complex64> {
    let fb = FictitiousBath::new(p)?;
    let (y, _) = fb.check(omega)?;
    let sig = fb.sigma_and_derivative(omega, e.omega).0;
    let hop = fb.kappa * fb.r;
    Ok(sig * hop.powi(j as i32) * y.powu(j.unsigned_abs() as u32))
}

/// Off-diagonal two-emitter factors `(f₂₁, f₁₂)` with `G₂₁ = f₂₁ (G₊ − G₋)/2` and
/// `G₁₂ = f₁₂ (G₊ − G₋)/2`.
pub fn offdiagonal_factors(p: &BathParams, d: usize) -> Result<(Complex64, Complex64)> {
    let fb = FictitiousBath::new(p)?;
    let q = -(fb.kappa * fb.r);
    let f21 = q.powu(d as u32);
    let sign = if d.is_multiple_of(2) { 1.0 } else { -1.0 };
    let f12 = (fb.kappa * fb.r).powi(-(d as i32)) * sign;
    Ok((f21, f12))
}

/// Localization factors `β_±(ω) = [i(ω+iΓ) + √(−(ω+iΓ)² − 4J_eff²)]/(Γ ± 2J)`
/// of the dissipative regime at θ = −π/2 (principal square root).
pub fn beta_pm(omega: Complex64, p: &BathParams) -> (Complex64, Complex64) {
    let w = omega + I * p.gamma;
    let je2 = p.gamma * p.gamma / 4.0 - p.j * p.j;
    let root = (-(w * w) - 4.0 * je2).sqrt();
    let num = I * w + root;
    (num / (p.gamma + 2.0 * p.j), num / (p.gamma - 2.0 * p.j))
}

/// Options for [`self_energy_quadrature`].
#[derive(Debug, Clone, Copy)]
pub struct TrapezoidOptions {
    pub rel_tol: f64,
    pub max_points: usize,
    /// Per-axis points for the two transverse axes of the 3D band.
    pub points_3d: usize,
    /// Minimum allowed distance to the branch curve.
    pub cut_tol: f64,
}

impl Default for TrapezoidOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_points: 1 << 20,
            points_3d: 1024,
            cut_tol: 1e-10,
        }
    }
}

/// `Σ(ω) = Ω² ∫ d^dk/(2π)^d 1/(ω − ε_k + iγ_k)` by periodic trapezoid quadrature.
///
/// In 1D the number of points doubles until the relative change is below `rel_tol`.
/// In 3D the `k_z` integral is done in closed form and the remaining two axes use a fixed
/// tensor trapezoid of `points_3d²` points.
pub fn self_energy_quadrature(
    omega: Complex64,
    p: &BathParams,
    e: &EmitterConfig,
) -> Result<Complex64> {
    self_energy_quadrature_with(omega, p, e, 0, TrapezoidOptions::default())
}

/// Quadrature of the matrix element `Σ_{ll'}` with phase `e^{ik·offset}` (1D bands).
pub fn self_energy_quadrature_with(
    omega: Complex64,
    p: &BathParams,
    e: &EmitterConfig,
    offset: i64,
    opts: TrapezoidOptions,
) -> Result<Complex64> {
    let o2 = e.omega * e.omega;
    if p.dim == 3 {
        return Ok(cosine3d_trapezoid(omega, p, opts.points_3d) * o2);
    }
    let f = |k: f64| -> Complex64 {
        let band = Complex64::new(dispersion(&[k], p), -dissipation(&[k], p));
        Complex64::from_polar(1.0, k * offset as f64) / (omega - band)
    };
    let mut n = 64usize;
    let mut prev = trapezoid(&f, n);
    let scale = p.gamma.max(p.j).max(1.0);
    let curve_dist = (0..4096)
        .map(|i| {
            let k = 2.0 * PI * i as f64 / 4096.0;
            (omega - Complex64::new(dispersion(&[k], p), -dissipation(&[k], p))).norm()
        })
        .fold(f64::INFINITY, f64::min);
    if curve_dist < opts.cut_tol * scale {
        return Err(Error::OnBranchCut(omega));
    }
    loop {
        n *= 2;
        let next = trapezoid(&f, n);
        let change = (next - prev).norm();
        prev = next;
        if change <= opts.rel_tol * next.norm().max(1e-300) || n >= opts.max_points {
            break;
        }
    }
    Ok(prev * o2)
}

fn trapezoid<F: Fn(f64) -> Complex64>(f: &F, n: usize) -> Complex64 {
    let h = 2.0 * PI / n as f64;
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        s += f(i as f64 * h);
    }
    s / n as f64
}

/// `∫ d³k/(2π)³ 1/(ω + iγ(k))` for the 3D cosine band on an `n × n` transverse grid.
fn cosine3d_trapezoid(omega: Complex64, p: &BathParams, n: usize) -> Complex64 {
    // 1/(ω + iγ) = −i/(γ + s) with s = −iω; ∫dk_z/2π 1/(b + Γ cos k_z) = 1/(√(b−Γ)√(b+Γ)).
    let s = -I * omega;
    let h = 2.0 * PI / n as f64;
    let cosines: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) * h).cos()).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for &cxk in &cosines {
        for &cyk in &cosines {
            acc += kz_integral(s, p.gamma0 + p.gamma * (3.0 + cxk + cyk), p.gamma);
        }
    }
    -I * acc / (n * n) as f64
}

/// `∫ dk/2π 1/(s + a + Γ cos k) = 1/(√(s+a−Γ)·√(s+a+Γ))` (principal roots).
pub fn kz_integral(s: Complex64, a: f64, gamma: f64) -> Complex64 {
    let lo = s + (a - gamma);
    let hi = s + (a + gamma);
    1.0 / (lo.sqrt() * hi.sqrt())
}

/// Local description of a dissipation band edge, `γ(k) ≈ γ_min + cΓ|k − k₀|^μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationBandModel {
    pub gamma_min: f64,
    /// Edge quasimomentum (first component; edges of cubic bands sit on the diagonal).
    pub k0: f64,
    pub mu: f64,
    pub c: f64,
    /// Cutoff `Λ` of the edge integral.
    pub lambda: f64,
    pub dim: u32,
    /// Bath dissipation scale `Γ`.
    pub gamma: f64,
    /// Number of equivalent edge points in the Brillouin zone.
    pub multiplicity: f64,
}

impl DissipationBandModel {
    /// Edge data of the built-in bands; the cutoff defaults to `max γ(k)`.
    pub fn from_band(p: &BathParams) -> Result<Self> {
        let (lo, hi) = dissipation_range(p);
        let (k0, mu, c, mult) = match p.band_kind {
            BandKind::Cosine1d | BandKind::GappedCosine1d => (PI, 2.0, 0.5, 1.0),
            BandKind::SqrtSin1d => (0.0, 0.5, 1.0 / 3.0, 2.0),
            BandKind::Cosine3d => (PI, 2.0, 0.5, 1.0),
            BandKind::CustomGrid => return edge_fit_custom(p),
        };
        Ok(Self {
            gamma_min: lo,
            k0,
            mu,
            c,
            lambda: hi,
            dim: p.dim,
            gamma: p.gamma,
            multiplicity: mult,
        })
    }

    /// `d/μ`.
    pub fn ratio(&self) -> f64 {
        self.dim as f64 / self.mu
    }
}

/// Edge extraction for a sampled band: fit `log(γ − γ_min)` against `log|k − k₀|` over the
/// 5% of the Brillouin zone nearest the minimum.
fn edge_fit_custom(p: &BathParams) -> Result<DissipationBandModel> {
    let g = p.grid.as_ref().expect("validated custom grid");
    let n = g.len();
    let (imin, gmin) = g
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let half = ((0.025 * n as f64).round() as usize).max(3);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for off in 1..=half {
        for idx in [(imin + off) % n, (imin + n - off) % n] {
            let dgam = g[idx] - gmin;
            if dgam > 0.0 {
                xs.push((2.0 * PI * off as f64 / n as f64).ln());
                ys.push(dgam.ln());
            }
        }
    }
    let fit = crate::numerics::fit::line_fit(&xs, &ys).ok_or(Error::UnclassifiedEdge(0.0))?;
    if fit.r_squared < 0.99 {
        return Err(Error::UnclassifiedEdge(fit.r_squared));
    }
    let (lo, hi) = dissipation_range(p);
    Ok(DissipationBandModel {
        gamma_min: lo,
        k0: 2.0 * PI * imin as f64 / n as f64,
        mu: fit.slope,
        c: fit.intercept.exp(),
        lambda: hi,
        dim: 1,
        gamma: p.gamma,
        multiplicity: 1.0,
    })
}

/// Angular factor `A` of the edge density of states in `d` dimensions.
pub fn edge_area_factor(dim: u32) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// Gauss hypergeometric `F(1, a; a+1; z)`, `z ∉ [1, ∞)`.
pub fn hyp2f1_1_a_a1(a: f64, z: Complex64) -> Result<Complex64> {
    if z.im.abs() < 1e-300 && z.re >= 1.0 {
        return Err(Error::OnBranchCut(z));
    }
    if z.norm() < 0.5 {
        let mut sum = cx(0.0);
        let mut zn = cx(1.0);
        for n in 0..200 {
            let term = zn * (a / (a + n as f64));
            sum += term;
            if term.norm() < 1e-17 * sum.norm() {
                break;
            }
            zn *= z;
        }
        return Ok(sum);
    }
    // a∫₀¹ t^{a−1}/(1 − z t) dt = ∫₀¹ du/(1 − z u^{1/a}).
    let mut breaks = Vec::new();
    let inv = 1.0 / z;
    if inv.re > 0.0 && inv.re < 1.0 {
        breaks.push(inv.re.powf(a));
    }
    let r = integrate(
        |u| 1.0 / (1.0 - z * u.powf(1.0 / a)),
        0.0,
        1.0,
        &breaks,
        QuadOptions::new(1e-15, 1e-13),
    );
    Ok(r.value)
}

/// Edge-model self-energy `Σ(s) = C (Λ'/Γ)^{d/μ} (1/s') F(1, d/μ, d/μ+1; −Λ'/s')` in the
/// `s = −iω` variable (`s + iΔ + Σ(s) = 0` at a pole).
pub fn scaling_self_energy(s: Complex64, model: &DissipationBandModel, omega: f64) -> Result<Complex64> {
    let a = model.ratio();
    if !(a > 0.0 && a <= 3.0) {
        return Err(Error::InvalidExponent(a));
    }
    let sp = s + model.gamma_min;
    let lp = model.lambda - model.gamma_min;
    let coef = model.multiplicity * edge_area_factor(model.dim) * omega * omega
        / ((2.0 * PI).powi(model.dim as i32) * model.mu * model.c.powf(a) * a);
    let f = hyp2f1_1_a_a1(a, -lp / sp)?;
    Ok(coef * (lp / model.gamma).powf(a) / sp * f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn band_edge_and_center() {
        let p = BathParams::cosine(1.0, 5.0);
        let edge = complex_band(&[PI], &p);
        assert!(edge.norm() < 1e-14);
        let k0 = complex_band(&[0.0], &p);
        assert!((k0 - c(0.0, -10.0)).norm() < 1e-14);
        let p3 = BathParams::cosine(0.0, 2.0).with_band(BandKind::Cosine3d, 3);
        assert!(complex_band(&[PI, PI, PI], &p3).norm() < 1e-14);
    }

    #[test]
    fn ddos_cosine_value_and_normalization() {
        let p = BathParams::cosine(1.0, 3.0);
        let v = ddos(3.0, &p).unwrap();
        assert!((v - 1.0 / (PI * 3.0)).abs() < 1e-15);
        // γ = Γ(1 − cos u) removes the inverse-square-root endpoint singularities.
        let r = integrate(
            |u| cx(ddos(3.0 * (1.0 - u.cos()), &p).unwrap() * 3.0 * u.sin()),
            1e-9,
            PI - 1e-9,
            &[],
            QuadOptions::new(1e-12, 1e-12),
        );
        assert!((r.value.re - 1.0).abs() < 1e-8);
        assert!(ddos(1e-12, &p).unwrap() > ddos(1e-6, &p).unwrap());
        assert!(matches!(ddos(7.0, &p), Err(Error::OutOfBand(_))));
    }

    #[test]
    fn ddos_histogram_matches_closed_form() {
        let p = BathParams::cosine(1.0, 1.0);
        let h = ddos_histogram(0.7, &p, 1 << 18, 0.01);
        let exact = ddos(0.7, &p).unwrap();
        assert!((h - exact).abs() < 2e-3 * exact, "{h} vs {exact}");
        let q = BathParams::cosine(0.0, 3.0).with_band(BandKind::SqrtSin1d, 1);
        let h = ddos_histogram(0.5, &q, 1 << 18, 0.01);
        let exact = ddos(0.5, &q).unwrap();
        assert!((h - exact).abs() < 5e-3 * exact, "{h} vs {exact}");
    }

    #[test]
    fn fictitious_geometry() {
        let p = BathParams::cosine(1.0, 10.0);
        let fb = FictitiousBath::new(&p).unwrap();
        assert_eq!(fb.regime, Regime::Dissipative);
        assert!((fb.j_eff - (25.0f64 - 1.0).sqrt()).abs() < 1e-12);
        assert!((fb.z_max - 6.0 / 4.0).abs() < 1e-12);
        let k: f64 = 0.37;
        let want = c(0.0, -10.0) - I * 2.0 * fb.j_eff * k.cos();
        assert!((fb.spectrum(k) - want).norm() < 1e-12);
        let q = BathParams::cosine(1.0, 0.6);
        let fq = FictitiousBath::new(&q).unwrap();
        assert_eq!(fq.regime, Regime::Dispersive);
        let want = c(0.0, -0.6) - 2.0 * (1.0f64 - 0.09).sqrt() * k.sin();
        assert!((fq.spectrum(k) - want).norm() < 1e-12);
        assert!(fq.z_max > 1.0);
    }

    #[test]
    fn degenerate_circle_is_perturbed() {
        let p = BathParams::cosine(1.0, 2.0);
        let fb = FictitiousBath::new(&p).unwrap();
        assert!(fb.perturbed);
        assert!((fb.gamma_used - 2.0 * (1.0 + DEGENERATE_PERTURBATION)).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_quadrature_at_3i_gamma() {
        let p = BathParams::cosine(1.0, 10.0);
        let e = EmitterConfig::single(0.0, 1.0);
        let w = c(0.0, 30.0);
        let a = self_energy_f(w, &p, &e).unwrap();
        let b = self_energy_quadrature(w, &p, &e).unwrap();
        assert!((a - b).norm() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn zero_coupling_and_tail() {
        let p = BathParams::cosine(1.0, 10.0);
        let e0 = EmitterConfig::single(0.0, 0.0);
        assert_eq!(self_energy_f(c(0.3, 0.2), &p, &e0).unwrap(), cx(0.0));
        let e = EmitterConfig::single(0.0, 1.0);
        let s = self_energy_f(c(1e6, 0.0), &p, &e).unwrap();
        assert!((s - cx(1e-6)).norm() < 1e-9);
    }

    #[test]
    fn channels_sum_to_twice_single() {
        let p = BathParams::cosine(1.0, 40.0);
        let e = EmitterConfig::single(0.0, 1.0);
        let w = c(0.05, 0.01);
        let s = self_energy_f(w, &p, &e).unwrap();
        for d in [1usize, 2, 7, 30] {
            let (sp, sm) = self_energy_channels(w, d, &p, &e).unwrap();
            assert!((sp + sm - s * 2.0).norm() < 1e-13);
        }
        let (sp, sm) = self_energy_channels(w, 0, &p, &e).unwrap();
        assert!((sp - s * 2.0).norm() < 1e-14 && sm.norm() < 1e-14);
    }

    fn quad_offset(w: Complex64, j: i64, p: &BathParams) -> Complex64 {
        let e = EmitterConfig::single(0.0, 1.0);
        self_energy_quadrature_with(w, p, &e, j, TrapezoidOptions::default()).unwrap()
    }

    #[test]
    fn closed_forms_match_quadrature_upper_half_plane() {
        let e = EmitterConfig::single(0.0, 1.0);
        for (j, gamma, theta) in [
            (1.0, 10.0, -PI / 2.0),
            (1.0, 0.6, -PI / 2.0),
            (1.0, 3.0, 0.4),
            (0.7, 1.0, 2.5),
            (0.0, 2.0, 0.0),
        ] {
            let p = BathParams::cosine(j, gamma).with_theta(theta).with_gamma0(0.3);
            for w in [c(0.0, 0.5), c(1.3, 0.01), c(-2.0, 2.0), c(0.2, 0.0), c(5.0, 0.0)] {
                let a = self_energy_f(w, &p, &e).unwrap();
                let b = quad_offset(w, 0, &p);
                assert!((a - b).norm() < 1e-8, "{j} {gamma} {theta} {w}: {a} vs {b}");
                for jj in [-3i64, -1, 1, 2, 5] {
                    let a = self_energy_realspace(w, jj, &p, &e).unwrap();
                    let b = quad_offset(w, jj, &p);
                    assert!((a - b).norm() < 1e-8, "{j} {gamma} {theta} {w} j={jj}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn channels_diagonalize_two_site_self_energy() {
        let e = EmitterConfig::single(0.0, 1.0);
        for (j, gamma, theta) in [(1.0, 10.0, -PI / 2.0), (1.0, 0.6, -PI / 2.0), (0.8, 2.0, 1.0)] {
            let p = BathParams::cosine(j, gamma).with_theta(theta);
            let w = c(0.3, 0.4);
            for d in [1usize, 2, 5] {
                let s11 = quad_offset(w, 0, &p);
                let s21 = quad_offset(w, d as i64, &p);
                let s12 = quad_offset(w, -(d as i64), &p);
                let (sp, sm) = self_energy_channels(w, d, &p, &e).unwrap();
                let root = (s21 * s12).sqrt();
                let (e1, e2) = (s11 + root, s11 - root);
                let ok = ((sp - e1).norm() < 1e-8 && (sm - e2).norm() < 1e-8)
                    || ((sp - e2).norm() < 1e-8 && (sm - e1).norm() < 1e-8);
                assert!(ok, "d={d}: {sp} {sm} vs {e1} {e2}");
                let (f21, f12) = offdiagonal_factors(&p, d).unwrap();
                assert!((s21 - f21 * (sp - sm) * 0.5).norm() < 1e-8, "f21 d={d}");
                assert!((s12 - f12 * (sp - sm) * 0.5).norm() < 1e-8, "f12 d={d}");
            }
        }
    }

    #[test]
    fn beta_factors_reproduce_realspace_decay() {
        let p = BathParams::cosine(1.0, 10.0);
        let e = EmitterConfig::single(0.0, 1.0);
        let w = c(0.4, 0.3);
        let (bp, bm) = beta_pm(w, &p);
        let s0 = self_energy_f(w, &p, &e).unwrap();
        for j in 1..4i64 {
            let fwd = self_energy_realspace(w, j, &p, &e).unwrap() / s0;
            let bwd = self_energy_realspace(w, -j, &p, &e).unwrap() / s0;
            assert!((fwd - bp.powi(j as i32)).norm() < 1e-12, "j={j}");
            assert!((bwd - bm.powi(j as i32)).norm() < 1e-12, "j={j}");
        }
    }

    #[test]
    fn hypergeometric_special_values() {
        // F(1,1;2;z) = −ln(1−z)/z.
        for z in [c(-0.3, 0.1), c(-40.0, 3.0), c(0.7, -0.4)] {
            let f = hyp2f1_1_a_a1(1.0, z).unwrap();
            let want = -(1.0 - z).ln() / z;
            assert!((f - want).norm() < 1e-11, "{z}: {f} vs {want}");
        }
        // F(1,1/2;3/2;−x²) = atan(x)/x.
        let x: f64 = 7.0;
        let f = hyp2f1_1_a_a1(0.5, c(-x * x, 0.0)).unwrap();
        assert!((f.re - x.atan() / x).abs() < 1e-11);
    }
}
