//! Two-excitation sector of a nonlinear emitter: pair bubble `Π(ω)`, pair Green function
//! `D(ω) = 1/(Π⁻¹(ω) − U)`, pair poles, the time-domain pair amplitude, and the effective
//! model at the resonance `U = −Δ`.
//!
//! `Π(ω) = i∫dω′/2π G(ω′)G(ω−ω′)`. Closing the contour over the spectral decomposition of
//! one factor leaves the exact other factor:
//! `Π(ω) = Σ_s Z_s G(ω − ε_s) + ∫A(x) G(ω − c(x)) dx`.

use crate::error::{Error, Result};
use crate::green::{
    asymptotic_poles, fft_grid, find_poles, AsymptoticCase, FftOptions, Method, Propagator,
    TimeSeries,
};
use crate::model::{Channel, ComplexEnergy, Config, QuasiboundState};
use crate::numerics::quad::{integrate, integrate_real_line, QuadOptions};
use crate::numerics::roots::{dedup_roots, newton, sort_roots};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cell::Cell;
use std::f64::consts::{FRAC_PI_4, PI};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// How a pair-bubble value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BubbleMethod {
    SpectralDecomposition,
    DirectConvolution,
}

/// A pair-bubble value together with its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairBubble {
    pub omega: Complex64,
    pub value: Complex64,
    pub method: BubbleMethod,
}

fn bubble_quad_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_intervals: 20_000,
    }
}

/// Single-particle data reused across bubble evaluations.
#[derive(Debug, Clone)]
pub struct Bubble {
    prop: Propagator,
    poles: Vec<QuasiboundState>,
    base_breaks: Vec<f64>,
    coupled: bool,
}

impl Bubble {
    pub fn new(cfg: &Config) -> Result<Self> {
        let prop = Propagator::new(cfg, Channel::Single)?;
        let poles = find_poles(cfg, Channel::Single)?;
        let locations: Vec<Complex64> = poles.iter().map(|p| p.pole).collect();
        Ok(Self {
            base_breaks: prop.cut_breakpoints_with(&locations),
            prop,
            poles,
            coupled: cfg.emitter.omega != 0.0,
        })
    }

    /// Single-excitation poles used in the decomposition.
    pub fn poles(&self) -> &[QuasiboundState] {
        &self.poles
    }

    pub fn propagator(&self) -> &Propagator {
        &self.prop
    }

    /// `G(w)` and `G′(w) = −G²(1 − Σ′)`.
    fn green_and_derivative(&self, w: Complex64) -> (Complex64, Complex64) {
        let (inv, dinv) = self.prop.inverse(w);
        let g = 1.0 / inv;
        (g, -g * g * dinv)
    }

    fn breaks_at(&self, w: Complex64) -> Vec<f64> {
        let fb = &self.prop.fb;
        let mut pts: Vec<Complex64> = self.poles.iter().map(|s| w - s.pole).collect();
        pts.push(w - fb.e_plus);
        pts.push(w - fb.e_minus);
        let mut v = self.prop.cut_breakpoints_at(&pts);
        v.extend_from_slice(&self.base_breaks);
        v
    }

    /// `Σ_s Z_s e^{−i(ε_s − ω₀)τ} F(w − ε_s) + ∫A e^{−i(c − ω₀)τ} F(w − c)` for
    /// `F ∈ {G, G′}` selected by `deriv`.
    fn decomposed(&self, w: Complex64, omega0: f64, tau: f64, deriv: bool) -> Result<Complex64> {
        let pick = |z: Complex64| {
            let (g, dg) = self.green_and_derivative(z);
            if deriv {
                dg
            } else {
                g
            }
        };
        let phase = |e: Complex64| {
            if tau == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                (-I * (e - omega0) * tau).exp()
            }
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for s in &self.poles {
            acc += s.residue * phase(s.pole) * pick(w - s.pole);
        }
        let breaks = self.breaks_at(w);
        let cut = integrate(
            |phi| {
                let c = self.prop.fb.cut_point(phi);
                self.prop.cut_weight(phi) * phase(c) * pick(w - c)
            },
            0.0,
            PI,
            &breaks,
            bubble_quad_options(),
        );
        acc += cut.value;
        if !(acc.re.is_finite() && acc.im.is_finite()) {
            return Err(Error::SingularPair(w));
        }
        Ok(acc)
    }

    /// `Π(w)` by the spectral decomposition.
    pub fn value(&self, w: Complex64) -> Result<Complex64> {
        if !self.coupled {
            return self.uncoupled(w).map(|(v, _)| v);
        }
        self.decomposed(w, 0.0, 0.0, false)
    }

    /// `Π(w)` and `Π′(w)`.
    pub fn value_and_derivative(&self, w: Complex64) -> Result<(Complex64, Complex64)> {
        if !self.coupled {
            return self.uncoupled(w);
        }
        Ok((
            self.decomposed(w, 0.0, 0.0, false)?,
            self.decomposed(w, 0.0, 0.0, true)?,
        ))
    }

    fn uncoupled(&self, w: Complex64) -> Result<(Complex64, Complex64)> {
        let q = w - 2.0 * self.prop.delta;
        if q.norm() == 0.0 {
            return Err(Error::SingularPair(w));
        }
        Ok((1.0 / q, -1.0 / (q * q)))
    }

    /// `Π̄(τ) = i∫dω′/2π G(ω_d+ω′)G(ω_d−ω′)e^{−iω′τ}` for `τ ≥ 0`; `Π̄(0) = Π(2ω_d)`.
    pub fn shifted(&self, omega_d: f64, tau: f64) -> Result<Complex64> {
        let w = Complex64::new(2.0 * omega_d, 0.0);
        if !self.coupled {
            let e = Complex64::new(self.prop.delta, 0.0);
            return Ok((-I * (e - omega_d) * tau).exp() / (w - 2.0 * e));
        }
        self.decomposed(w, omega_d, tau, false)
    }

    /// `Π(w)` by adaptive quadrature of the convolution over the real `ω′` line; requires
    /// `Im w ≥ 0` and a coupled emitter.
    pub fn direct(&self, w: Complex64) -> Result<Complex64> {
        if !self.coupled || w.im < 0.0 {
            return Err(Error::InvalidParameter {
                name: "omega",
                reason: "direct convolution needs a coupled emitter and Im ω ≥ 0".into(),
            });
        }
        let fb = &self.prop.fb;
        let mut features: Vec<Complex64> = self.poles.iter().map(|s| s.pole).collect();
        features.push(fb.e_plus);
        features.push(fb.e_minus);
        let mut breaks = Vec::new();
        for f in features {
            let width = f.im.abs().max(1e-12);
            graded_real(f.re, width, &mut breaks);
            graded_real(w.re - f.re, width, &mut breaks);
        }
        let r = integrate_real_line(
            |x| {
                let x = Complex64::new(x, 0.0);
                self.prop.green(x) * self.prop.green(w - x)
            },
            &breaks,
            QuadOptions {
                abs_tol: 1e-13,
                rel_tol: 1e-11,
                max_intervals: 50_000,
            },
        );
        Ok(I * r.value / (2.0 * PI))
    }
}

/// Breakpoints at `center` and `center ± width·4^k` up to unit scale.
fn graded_real(center: f64, width: f64, out: &mut Vec<f64>) {
    out.push(center);
    let mut d = width;
    while d < 10.0 {
        out.push(center - d);
        out.push(center + d);
        d *= 4.0;
    }
}

/// `Π(ω)` by the spectral decomposition.
pub fn pair_bubble(omega: Complex64, cfg: &Config) -> Result<Complex64> {
    Bubble::new(cfg)?.value(omega)
}

/// `Π(ω)` by the requested method.
pub fn pair_bubble_with(omega: Complex64, cfg: &Config, method: BubbleMethod) -> Result<PairBubble> {
    let b = Bubble::new(cfg)?;
    let value = match method {
        BubbleMethod::SpectralDecomposition => b.value(omega)?,
        BubbleMethod::DirectConvolution => b.direct(omega)?,
    };
    Ok(PairBubble {
        omega,
        value,
        method,
    })
}

/// `D(ω) = 1/(Π⁻¹(ω) − U)` from a bubble value.
fn pair_green_from(pi: Complex64, u: f64, omega: Complex64) -> Result<Complex64> {
    if pi.norm() == 0.0 {
        return Err(Error::ZeroBubble(omega));
    }
    let den = 1.0 / pi - u;
    if den.norm() == 0.0 {
        return Err(Error::SingularPair(omega));
    }
    Ok(1.0 / den)
}

/// Pair Green function `D(ω) = 1/(Π⁻¹(ω) − U)`.
pub fn pair_green(omega: Complex64, cfg: &Config) -> Result<Complex64> {
    let pi = pair_bubble(omega, cfg)?;
    pair_green_from(pi, cfg.emitter.u, omega)
}

/// Options for [`find_pair_poles_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPoleOptions {
    /// Acceptance bound on `|D⁻¹(ε)|`.
    pub residual_tol: f64,
    /// Relative distance below which two roots are merged.
    pub dedup_tol: f64,
    /// Bubble evaluations allowed per seed; seeds drifting into the two-particle
    /// continuum are abandoned once it is spent.
    pub max_evaluations: usize,
}

impl Default for PairPoleOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-9,
            dedup_tol: 1e-8,
            max_evaluations: 40,
        }
    }
}

/// Pair poles (zeros of `D⁻¹ = Π⁻¹ − U`) sorted by real then imaginary part.
pub fn find_pair_poles(cfg: &Config) -> Result<Vec<QuasiboundState>> {
    find_pair_poles_with(cfg, PairPoleOptions::default())
}

/// Seeds for the pair-pole search: the bare doublon, the resonant asymptotics, and pole sums
/// `ε_a + ε_b` shifted to first order in `U`.
fn pair_seeds(cfg: &Config, singles: &[QuasiboundState]) -> Vec<Complex64> {
    let u = cfg.emitter.u;
    let delta = cfg.emitter.delta;
    let mut seeds = vec![Complex64::new(2.0 * delta + u, -1e-6)];
    if let Ok(v) = asymptotic_poles(cfg, AsymptoticCase::PairResonant) {
        seeds.extend(v.into_iter().map(|e| e + delta));
    }
    for (i, a) in singles.iter().enumerate() {
        for (j, b) in singles.iter().enumerate().skip(i) {
            let mult = if i == j { 1.0 } else { 2.0 };
            seeds.push(a.pole + b.pole + a.residue * b.residue * (mult * u));
        }
    }
    seeds
}

/// Newton polish of one seed; `None` when the budget is spent, the residual stays above
/// tolerance, or the root is not decaying.
fn polish_pair(bubble: &Bubble, u: f64, seed: Complex64, opts: &PairPoleOptions) -> Option<Complex64> {
    let budget = Cell::new(opts.max_evaluations);
    let f = |w: Complex64| -> Option<(Complex64, Complex64)> {
        if budget.get() == 0 || !(w.re.is_finite() && w.im.is_finite()) {
            return None;
        }
        budget.set(budget.get() - 1);
        let (pi, dpi) = bubble.value_and_derivative(w).ok()?;
        if pi.norm() == 0.0 {
            return None;
        }
        Some((1.0 / pi - u, -dpi / (pi * pi)))
    };
    let z = newton(f, seed, 1e-12, 60)?.root;
    let pi = bubble.value(z).ok()?;
    ((1.0 / pi - u).norm() < opts.residual_tol && z.im < 0.0).then_some(z)
}

fn pair_state(bubble: &Bubble, z: Complex64) -> Result<QuasiboundState> {
    let (pi, dpi) = bubble.value_and_derivative(z)?;
    // Residue of 1/(Π⁻¹ − U) at a simple zero: 1/(Π⁻¹)′ = −Π²/Π′.
    Ok(QuasiboundState {
        pole: z,
        residue: -pi * pi / dpi,
        channel: Channel::Pair,
        wavefunction: None,
    })
}

/// Pair-pole search by Newton iteration on `Π⁻¹ − U` with the analytic `Π′`.
pub fn find_pair_poles_with(cfg: &Config, opts: PairPoleOptions) -> Result<Vec<QuasiboundState>> {
    let bubble = Bubble::new(cfg)?;
    let u = cfg.emitter.u;
    if cfg.emitter.omega == 0.0 {
        // Decoupled emitter: a stable doublon at 2Δ + U.
        return Ok(vec![QuasiboundState {
            pole: Complex64::new(2.0 * cfg.emitter.delta + u, 0.0),
            residue: Complex64::new(1.0, 0.0),
            channel: Channel::Pair,
            wavefunction: None,
        }]);
    }
    if u == 0.0 {
        return Ok(free_pair_poles(bubble.poles()));
    }
    let seeds = pair_seeds(cfg, bubble.poles());
    let mut roots: Vec<Complex64> = seeds
        .par_iter()
        .filter_map(|&s| polish_pair(&bubble, u, s, &opts))
        .collect();
    if roots.is_empty() {
        return Err(Error::NoConvergence { seed: seeds[0] });
    }
    dedup_roots(&mut roots, opts.dedup_tol);
    sort_roots(&mut roots);
    roots.into_iter().map(|z| pair_state(&bubble, z)).collect()
}

/// Without interaction `D = Π`, whose poles are the sums `ε_a + ε_b` with residues
/// `Z_a Z_b` (doubled for `a ≠ b`).
fn free_pair_poles(singles: &[QuasiboundState]) -> Vec<QuasiboundState> {
    let mut out = Vec::new();
    for (i, a) in singles.iter().enumerate() {
        for (j, b) in singles.iter().enumerate().skip(i) {
            let mult = if i == j { 1.0 } else { 2.0 };
            out.push(QuasiboundState {
                pole: a.pole + b.pole,
                residue: a.residue * b.residue * mult,
                channel: Channel::Pair,
                wavefunction: None,
            });
        }
    }
    out.sort_by(|x, y| x.pole.re.total_cmp(&y.pole.re).then(x.pole.im.total_cmp(&y.pole.im)));
    out
}

/// The pair pole reached by Newton iteration from `seed`; used for continuation in sweeps.
pub fn track_pair_pole(cfg: &Config, seed: Complex64) -> Result<QuasiboundState> {
    let bubble = Bubble::new(cfg)?;
    if cfg.emitter.u == 0.0 {
        return free_pair_poles(bubble.poles())
            .into_iter()
            .min_by(|a, b| (a.pole - seed).norm().total_cmp(&(b.pole - seed).norm()))
            .ok_or(Error::NoConvergence { seed });
    }
    let z = polish_pair(&bubble, cfg.emitter.u, seed, &PairPoleOptions::default())
        .ok_or(Error::NoConvergence { seed })?;
    pair_state(&bubble, z)
}

/// Longest-lived pair pole among those carrying at least `min_weight` residue.
pub fn dominant_pair_pole(poles: &[QuasiboundState], min_weight: f64) -> Option<&QuasiboundState> {
    poles
        .iter()
        .filter(|p| p.residue.norm() >= min_weight)
        .max_by(|a, b| a.pole.im.total_cmp(&b.pole.im))
}

/// Pair amplitude `D(t)`, normalized so that `iD(0⁺) = 1`.
///
/// Uses `Π(t) = iG(t)²` and the Volterra form of `D = Π + ΠUD`,
/// `D(t) = Π(t) + U∫₀ᵗ Π(t−s)D(s)ds`, solved by the trapezoid rule in the frame rotating at
/// `2Δ + U` with one Richardson step; `G(t)` comes from the FFT grid.
pub fn pair_time_domain(cfg: &Config, times: &[f64]) -> Result<TimeSeries> {
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::InvalidParameter {
            name: "times",
            reason: format!("negative time {t}"),
        });
    }
    let lambda = 2.0 * cfg.emitter.delta + cfg.emitter.u;
    if cfg.emitter.omega == 0.0 {
        return Ok(TimeSeries {
            times: times.to_vec(),
            values: times.iter().map(|&t| -I * (-I * lambda * t).exp()).collect(),
            method: Method::ClosedForm,
        });
    }
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let poles = find_poles(cfg, Channel::Single)?;
    let slowest = poles
        .iter()
        .map(|p| p.decay())
        .fold(f64::INFINITY, f64::min)
        .min(1.0);
    let scale = cfg.emitter.delta.abs().max(cfg.emitter.u.abs()).max(1.0);
    let opts = FftOptions::for_range(t_max.max(1.0), slowest.max(1e-300), scale);
    let (dt, g) = fft_grid(cfg, Channel::Single, opts)?;
    let n_need = ((t_max / dt).ceil() as usize + 4).max(8);
    if n_need > g.len() {
        return Err(Error::InvalidParameter {
            name: "times",
            reason: "time beyond the FFT period".into(),
        });
    }
    // Rounded up to an even count so that the coarse grid is a subsample.
    let n = n_need + n_need % 2;
    let kernel: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            I * g[i] * g[i] * (I * lambda * t).exp()
        })
        .collect();
    let u = cfg.emitter.u;
    let fine = volterra_trapezoid(&kernel, u, dt, 1);
    let coarse = volterra_trapezoid(&kernel, u, dt, 2);
    let h2 = 2.0 * dt;
    let grid: Vec<Complex64> = coarse
        .iter()
        .enumerate()
        .map(|(k, c)| (fine[2 * k] * 4.0 - c) / 3.0)
        .collect();
    let m = grid.len();
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let x = t / h2;
        let i1 = (x.floor() as usize).min(m.saturating_sub(3)).max(1);
        let f = x - i1 as f64;
        let (p0, p1, p2, p3) = (grid[i1 - 1], grid[i1], grid[i1 + 1], grid[i1 + 2]);
        let v = p0 * (-f * (f - 1.0) * (f - 2.0) / 6.0)
            + p1 * ((f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0)
            + p2 * (-(f + 1.0) * f * (f - 2.0) / 2.0)
            + p3 * ((f + 1.0) * f * (f - 1.0) / 6.0);
        values.push(v * (-I * lambda * t).exp());
    }
    Ok(TimeSeries {
        times: times.to_vec(),
        values,
        method: Method::ResiduesCut,
    })
}

/// Trapezoid solution of `D(t) = K(t) + U∫₀ᵗK(t−s)D(s)ds` on every `stride`-th grid point.
fn volterra_trapezoid(kernel: &[Complex64], u: f64, dt: f64, stride: usize) -> Vec<Complex64> {
    let k: Vec<Complex64> = kernel.iter().step_by(stride).copied().collect();
    let h = dt * stride as f64;
    let n = k.len();
    let mut d = Vec::with_capacity(n);
    let diag = 1.0 - k[0] * (0.5 * u * h);
    for i in 0..n {
        let mut acc = k[i];
        if i > 0 {
            let mut s = k[i] * d[0] * 0.5;
            for j in 1..i {
                s += k[i - j] * d[j];
            }
            acc += s * (u * h);
            acc /= diag;
        }
        d.push(acc);
    }
    d
}

/// Poles of the effective two-excitation model at `U = −Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivePairModel {
    /// Constant shift `δω` from eliminating the two-bath-excitation states.
    pub delta_omega: Complex64,
    /// Pole energies `E_b = Δ + ε_b` in the laboratory frame.
    pub poles: Vec<ComplexEnergy>,
    /// `|det|` at each returned root.
    pub residuals: Vec<f64>,
}

/// Bound on `|Ω²/(ΔΓ)|` accepted by [`effective_pair_model`].
pub const EFFECTIVE_MODEL_LIMIT: f64 = 0.1;

/// Solves the 2×2 determinant condition of the effective model built from `I₁`, `I₂`, `I₃`.
pub fn effective_pair_model(cfg: &Config) -> Result<EffectivePairModel> {
    let delta = cfg.emitter.delta;
    let u = cfg.emitter.u;
    let om = cfg.emitter.omega;
    let gamma = cfg.bath.gamma;
    if delta == 0.0 || (u + delta).abs() > 1e-9 * delta.abs() {
        return Err(Error::OutsideValidity(format!(
            "effective model needs U = −Δ ≠ 0 (U = {u}, Δ = {delta})"
        )));
    }
    let small = (om * om / (delta * gamma)).abs();
    if small > EFFECTIVE_MODEL_LIMIT {
        return Err(Error::OutsideValidity(format!(
            "|Ω²/(ΔΓ)| = {small} exceeds {EFFECTIVE_MODEL_LIMIT}"
        )));
    }
    let prop = Propagator::new(cfg, Channel::Single)?;
    let fb = prop.fb;
    let sigma = |w: Complex64| fb.sigma_and_derivative(w, om);
    let delta_omega = -I * om * om * Complex64::from_polar(1.0, FRAC_PI_4 * delta.signum())
        / (2.0 * delta.abs() * gamma).sqrt();
    let dc = Complex64::new(delta, 0.0);
    let (s_delta, ds_delta) = sigma(dc);
    let det = |e: Complex64| -> Complex64 {
        let x = e - delta_omega;
        let (s_x, _) = sigma(x);
        let i1 = s_x;
        let q = x - dc;
        let i2 = (s_delta - s_x) / q;
        let i3 = -(ds_delta * q + s_delta - s_x) / (q * q);
        let a11 = i1 * 2.0 / e + i2 * 0.5 - 1.0;
        let a12 = i1 * 0.5;
        let a21 = i2 * 2.0 / e + i3 * 0.5;
        let a22 = i2 * 0.5 - 1.0;
        a11 * a22 - a12 * a21
    };
    let f = |e: Complex64| -> Option<(Complex64, Complex64)> {
        if !(e.re.is_finite() && e.im.is_finite()) || e.norm() == 0.0 {
            return None;
        }
        let h = 1e-6 * e.norm().max(1e-3);
        let d = (det(e + h) - det(e - h)) / (2.0 * h);
        Some((det(e), d))
    };
    let seeds = asymptotic_poles(cfg, AsymptoticCase::PairResonant)?;
    let mut roots = Vec::new();
    for s in seeds {
        if let Some(r) = newton(f, s, 1e-13, 200) {
            if det(r.root).norm() < 1e-9 {
                roots.push(r.root);
            }
        }
    }
    if roots.is_empty() {
        return Err(Error::NoConvergence {
            seed: Complex64::new(0.0, 0.0),
        });
    }
    dedup_roots(&mut roots, 1e-8);
    sort_roots(&mut roots);
    Ok(EffectivePairModel {
        delta_omega,
        residuals: roots.iter().map(|&e| det(e).norm()).collect(),
        poles: roots.iter().map(|&e| e + delta).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::{find_poles, green_f};
    use crate::model::{BathParams, EmitterConfig};
    use crate::numerics::fit::linspace;

    fn cfg(gamma: f64, delta: f64, omega: f64, u: f64) -> Config {
        Config::new(
            BathParams::cosine(1.0, gamma),
            EmitterConfig::single(delta, omega).with_u(u),
        )
        .unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn decoupled_emitter_bubble_and_doublon() {
        let k = cfg(50.0, 0.7, 0.0, -0.3);
        let w = c(0.2, 0.4);
        assert!((pair_bubble(w, &k).unwrap() - 1.0 / (w - 1.4)).norm() < 1e-15);
        assert!((pair_green(w, &k).unwrap() - 1.0 / (w - 1.4 + 0.3)).norm() < 1e-14);
        let poles = find_pair_poles(&k).unwrap();
        assert_eq!(poles.len(), 1);
        assert!((poles[0].pole - c(1.1, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn spectral_bubble_matches_direct_convolution() {
        for (gamma, delta, omega) in [(100.0, -1.0, 1.0), (1.0, 0.5, 0.5), (1e4, 0.3, 1.0)] {
            let b = Bubble::new(&cfg(gamma, delta, omega, 0.0)).unwrap();
            for x in linspace(-4.0, 4.0, 50) {
                let w = c(x, 0.0);
                let diff = (b.value(w).unwrap() - b.direct(w).unwrap()).norm();
                assert!(diff < 1e-6, "Γ={gamma} Δ={delta} ω={x}: {diff:e}");
            }
        }
    }

    #[test]
    fn bubble_derivative_matches_finite_difference() {
        let b = Bubble::new(&cfg(300.0, -0.7, 1.0, 0.0)).unwrap();
        let w = c(-1.2, -0.05);
        let h = 1e-5;
        let fd = (b.value(w + h).unwrap() - b.value(w - h).unwrap()) / (2.0 * h);
        let (_, d) = b.value_and_derivative(w).unwrap();
        assert!((fd - d).norm() < 1e-7 * d.norm().max(1.0));
    }

    #[test]
    fn shifted_bubble_at_zero_delay_is_bubble_at_twice_drive() {
        let b = Bubble::new(&cfg(1e3, -0.3, 0.3, 0.3)).unwrap();
        let wd = -0.31;
        let lhs = b.shifted(wd, 0.0).unwrap();
        let rhs = b.value(c(2.0 * wd, 0.0)).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
    }

    #[test]
    fn without_interaction_pair_green_is_bubble_and_decay_doubles() {
        let k = cfg(1e3, -1.0, 1.0, 0.0);
        let w = c(-1.7, 0.2);
        assert!((pair_green(w, &k).unwrap() - pair_bubble(w, &k).unwrap()).norm() < 1e-14);
        let single = find_poles(&k, Channel::Single).unwrap();
        let g1 = single
            .iter()
            .filter(|p| p.residue.norm() >= 0.1)
            .map(|p| p.decay())
            .fold(f64::INFINITY, f64::min);
        let pairs = find_pair_poles(&k).unwrap();
        let g2 = dominant_pair_pole(&pairs, 0.1).unwrap().decay();
        assert!((g2 / g1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn resonant_pair_poles_are_self_consistent() {
        let k = cfg(1e3, -1.0, 1.0, 1.0);
        let b = Bubble::new(&k).unwrap();
        let poles = find_pair_poles(&k).unwrap();
        let pred = asymptotic_poles(&k, AsymptoticCase::PairResonant).unwrap();
        assert!(poles.iter().all(|p| p.pole.im < 0.0));
        for p in &poles {
            let pi = b.value(p.pole).unwrap();
            assert!((1.0 / pi - 1.0).norm() < 1e-9);
        }
        // Both resonant poles sit near Δ + ε with ε from the leading-order formula.
        for e in pred {
            let near = poles
                .iter()
                .map(|p| (p.pole - (e - 1.0)).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(near < 0.3 * e.norm(), "{near}");
        }
    }

    #[test]
    fn tracking_reproduces_search() {
        let k = cfg(1e3, -1.0, 1.0, 1.0);
        let poles = find_pair_poles(&k).unwrap();
        let p = dominant_pair_pole(&poles, 0.1).unwrap();
        let t = track_pair_pole(&k, p.pole * 1.01).unwrap();
        assert!((t.pole - p.pole).norm() < 1e-10);
    }

    #[test]
    fn pair_amplitude_normalization_and_laplace_transform() {
        let k = cfg(1e3, -1.0, 1.0, 1.0);
        let h = 0.01;
        let times: Vec<f64> = (0..=8000).map(|i| i as f64 * h).collect();
        let ts = pair_time_domain(&k, &times).unwrap();
        assert!((I * ts.values[0] - 1.0).norm() < 1e-4);
        // ∫₀^∞ D(t)e^{iωt}dt = D(ω) for Im ω > 0 (Simpson's rule; the integrand is below 1e-12
        // at the end of the grid).
        let w = c(-0.8, 0.4);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, (&t, &v)) in times.iter().zip(&ts.values).enumerate() {
            let wt = if i == 0 || i == times.len() - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += v * (I * w * t).exp() * wt;
        }
        let laplace = acc * (h / 3.0);
        let exact = pair_green(w, &k).unwrap();
        assert!((laplace - exact).norm() < 1e-5 * exact.norm(), "{laplace} vs {exact}");
    }

    #[test]
    fn decoupled_pair_amplitude() {
        let k = cfg(10.0, 0.4, 0.0, 0.25);
        let ts = pair_time_domain(&k, &[0.0, 3.0]).unwrap();
        let exact = -I * (-I * 1.05 * 3.0).exp();
        assert!((ts.values[1] - exact).norm() < 1e-6);
    }

    #[test]
    fn effective_model_matches_exact_poles() {
        let k = cfg(1e4, -1.0, 0.1, 1.0);
        let eff = effective_pair_model(&k).unwrap();
        assert!((eff.delta_omega.norm() - 0.01 / (2.0 * 1e4f64).sqrt()).abs() < 1e-15);
        assert!(eff.residuals.iter().all(|&r| r < 1e-9));
        let exact = find_pair_poles(&k).unwrap();
        let pred = asymptotic_poles(&k, AsymptoticCase::PairResonant).unwrap();
        for (e, p) in eff.poles.iter().zip(&pred) {
            let near = exact
                .iter()
                .map(|q| (q.pole - e).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(near < 1e-3 * p.norm());
            // Leading order within 10%.
            assert!(((e - (-1.0)) - p).norm() < 0.1 * p.norm());
        }
    }

    #[test]
    fn effective_model_validity_checks() {
        assert!(matches!(
            effective_pair_model(&cfg(1e4, -1.0, 0.1, 0.5)),
            Err(Error::OutsideValidity(_))
        ));
        assert!(matches!(
            effective_pair_model(&cfg(5.0, -1.0, 1.0, 1.0)),
            Err(Error::OutsideValidity(_))
        ));
    }

    #[test]
    fn pair_green_has_no_singularity_at_real_frequencies() {
        let k = cfg(100.0, -1.0, 1.0, 1.0);
        for x in linspace(-3.0, 1.0, 9) {
            let d = pair_green(c(x, 0.0), &k).unwrap();
            assert!(d.re.is_finite() && d.im.is_finite());
            let g = green_f(c(x, 0.0), &k).unwrap();
            assert!(g.re.is_finite());
        }
    }
}
