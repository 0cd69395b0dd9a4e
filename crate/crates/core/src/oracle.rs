//! Finite-size ground truth: non-Hermitian evolution in fixed-excitation subspaces, the full
//! master equation of the emitter–lattice system, and small reduced models.
//!
//! The lattice is a ring of `N_b` sites. Jumps are `O_j = b_j + b_{j+1}` at rate `Γ`, plus an
//! on-site jump `b_j` at rate `2γ₀` when the band is gapped, so that the effective Hamiltonian
//! carries `ε_k − iγ_k` with `γ_k = γ₀ + Γ(1 + cos k)` on the grid `k = 2πm/N_b`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bath::complex_band;
use crate::driven::drive_setup;
use crate::green::{Method, TimeSeries};
use crate::numerics::linalg::{
    eigenvalues, eigenvector, expm, krylov_expmv, CMatrix, CVector, SparseMatrix,
};
use crate::numerics::ode::{dopri5, OdeOptions};
use crate::{Config, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn cx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest subspace dimension accepted by the builders.
pub const MAX_DIMENSION: usize = 100_000;
/// Subspaces up to this dimension are propagated with a dense matrix exponential.
pub const DENSE_LIMIT: usize = 400;
/// Local error bound of a Krylov propagation step.
pub const STEP_TOLERANCE: f64 = 1e-9;
/// Largest bath accepted by the master-equation solver.
pub const LINDBLAD_MAX_SITES: usize = 6;
/// Largest excitation cutoff accepted by the master-equation solver.
pub const LINDBLAD_MAX_FOCK: usize = 3;
/// Allowed drift of `tr ρ` during master-equation integration.
pub const TRACE_TOLERANCE: f64 = 1e-8;
/// `‖ρ̇‖₁` below which a state counts as stationary.
pub const STEADY_STATE_TOLERANCE: f64 = 1e-10;
/// Occupation of the cutoff sector above which a driven run is flagged.
pub const LEAKAGE_LIMIT: f64 = 1e-6;
/// Largest `α` for which the pseudo-single-mode reduction is flagged valid.
pub const PSEUDO_MODE_MAX_ALPHA: f64 = 0.1;
/// Liouvillian dimension up to which the steady state is found by a direct linear solve.
const DIRECT_STEADY_LIMIT: usize = 64;

/// Label of a basis vector of a fixed-excitation subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisState {
    /// The vacuum.
    Vacuum,
    /// One excitation in emitter `l`.
    Emitter(usize),
    /// One excitation on lattice site `j`.
    Site(usize),
    /// One excitation in the bath mode `k_m = 2πm/N_b`.
    Mode(usize),
    /// Two excitations in the emitter.
    Doublon,
    /// One excitation in the emitter and one in mode `m`.
    EmitterMode(usize),
    /// Two bath excitations in modes `m ≤ m′` (normalized).
    ModePair(usize, usize),
}

/// A jump operator restricted to a map from the `n`-excitation subspace to the `n−1` one.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    pub rate: f64,
    /// Entries `(row in the lower subspace, column in the model subspace, value)`.
    pub entries: Vec<(usize, usize, Complex64)>,
}

/// Effective Hamiltonian of one fixed-excitation subspace of a finite ring.
#[derive(Debug, Clone)]
pub struct FiniteModel {
    pub nb: usize,
    pub n_exc: usize,
    pub basis: Vec<BasisState>,
    pub h_eff: SparseMatrix,
    /// Basis of the subspace that the jump operators map into.
    pub lower_basis: Vec<BasisState>,
    pub jump_ops: Vec<JumpOperator>,
}

impl FiniteModel {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, state: BasisState) -> Option<usize> {
        self.basis.iter().position(|s| *s == state)
    }

    /// `a†|0⟩` for one excitation, `a†²|0⟩/√2` for two.
    pub fn initial_state(&self) -> CVector {
        let target = if self.n_exc == 1 {
            BasisState::Emitter(0)
        } else {
            BasisState::Doublon
        };
        let mut v = CVector::zeros(self.dim());
        v[self.index_of(target).expect("emitter state is always present")] = cx(1.0);
        v
    }

    /// `½Σ rate·O†O`, the anti-Hermitian part of `H_eff` up to a factor `−i`.
    pub fn dissipator(&self) -> CMatrix {
        let mut d = CMatrix::zeros(self.dim(), self.dim());
        for op in &self.jump_ops {
            add_jump_product(&mut d, op, 0.5 * op.rate);
        }
        d
    }
}

fn add_jump_product(m: &mut CMatrix, op: &JumpOperator, weight: f64) {
    for &(r1, a, va) in &op.entries {
        for &(r2, b, vb) in &op.entries {
            if r1 == r2 {
                m[(a, b)] += va.conj() * vb * weight;
            }
        }
    }
}

fn dissipation_triplets(jumps: &[JumpOperator]) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    for op in jumps {
        for &(r1, a, va) in &op.entries {
            for &(r2, b, vb) in &op.entries {
                if r1 == r2 {
                    out.push((a, b, -I * va.conj() * vb * (0.5 * op.rate)));
                }
            }
        }
    }
    out
}

fn check_lattice(cfg: &Config, nb: usize) -> Result<()> {
    if !cfg.bath.band_kind.is_cosine_1d() {
        return Err(Error::InvalidParameter {
            name: "band_kind",
            reason: format!(
                "finite rings are built for the cosine lattice only, got {}",
                cfg.bath.band_kind.name()
            ),
        });
    }
    if nb < 2 {
        return Err(Error::InvalidParameter {
            name: "nb",
            reason: format!("need at least 2 bath sites, got {nb}"),
        });
    }
    Ok(())
}

fn emitter_sites(cfg: &Config, nb: usize) -> Result<Vec<usize>> {
    let sites: Vec<usize> = cfg
        .emitter
        .positions
        .iter()
        .map(|p| p.rem_euclid(nb as i64) as usize)
        .collect();
    for (i, s) in sites.iter().enumerate() {
        if sites[..i].contains(s) {
            return Err(Error::OverlappingEmitters(*s as i64));
        }
    }
    Ok(sites)
}

fn mode_momentum(m: usize, nb: usize) -> f64 {
    2.0 * PI * m as f64 / nb as f64
}

/// Ring jump operators in real space, as `(rate, [(site, amplitude)])`.
fn ring_jumps(cfg: &Config, nb: usize) -> Vec<(f64, Vec<(usize, Complex64)>)> {
    let mut jumps: Vec<(f64, Vec<(usize, Complex64)>)> = (0..nb)
        .map(|j| (cfg.bath.gamma, vec![(j, cx(1.0)), ((j + 1) % nb, cx(1.0))]))
        .collect();
    if cfg.bath.gamma0 > 0.0 {
        jumps.extend((0..nb).map(|j| (2.0 * cfg.bath.gamma0, vec![(j, cx(1.0))])));
    }
    jumps
}

/// Single-excitation model in real space: emitters first, then the ring sites.
pub fn build_single(cfg: &Config, nb: usize) -> Result<FiniteModel> {
    check_lattice(cfg, nb)?;
    let ne = cfg.emitter.positions.len();
    let dim = ne + nb;
    if dim > MAX_DIMENSION {
        return Err(Error::TooLarge(dim));
    }
    let sites = emitter_sites(cfg, nb)?;
    let p = &cfg.bath;
    let e = &cfg.emitter;
    let mut trip = Vec::new();
    for (l, &j) in sites.iter().enumerate() {
        trip.push((l, l, cx(e.delta)));
        trip.push((l, ne + j, cx(e.omega)));
        trip.push((ne + j, l, cx(e.omega)));
    }
    let hop = Complex64::from_polar(p.j, p.theta);
    for j in 0..nb {
        let jn = (j + 1) % nb;
        trip.push((ne + j, ne + jn, hop));
        trip.push((ne + jn, ne + j, hop.conj()));
    }
    let jump_ops: Vec<JumpOperator> = ring_jumps(cfg, nb)
        .into_iter()
        .map(|(rate, amps)| JumpOperator {
            rate,
            entries: amps.into_iter().map(|(j, v)| (0, ne + j, v)).collect(),
        })
        .collect();
    trip.extend(dissipation_triplets(&jump_ops));
    let basis = (0..ne)
        .map(BasisState::Emitter)
        .chain((0..nb).map(BasisState::Site))
        .collect();
    Ok(FiniteModel {
        nb,
        n_exc: 1,
        basis,
        h_eff: SparseMatrix::from_triplets(dim, trip),
        lower_basis: vec![BasisState::Vacuum],
        jump_ops,
    })
}

/// Two-excitation model of a single emitter in the momentum basis
/// `{|d⟩, a†b_k†|0⟩, b_k†b_{k′}†|0⟩}` with the pair states normalized.
pub fn build_pair(cfg: &Config, nb: usize) -> Result<FiniteModel> {
    check_lattice(cfg, nb)?;
    if cfg.emitter.positions.len() != 1 {
        return Err(Error::InvalidParameter {
            name: "positions",
            reason: "the two-excitation model takes a single emitter".into(),
        });
    }
    let dim = 1 + nb + nb * (nb + 1) / 2;
    if dim > MAX_DIMENSION {
        return Err(Error::TooLarge(dim));
    }
    let p = &cfg.bath;
    let e = &cfg.emitter;
    let energies: Vec<Complex64> = (0..nb)
        .map(|m| complex_band(&[mode_momentum(m, nb)], p))
        .collect();
    let mut basis = vec![BasisState::Doublon];
    basis.extend((0..nb).map(BasisState::EmitterMode));
    let mut pair_index = HashMap::new();
    for m in 0..nb {
        for m2 in m..nb {
            pair_index.insert((m, m2), basis.len());
            basis.push(BasisState::ModePair(m, m2));
        }
    }
    let pair = |a: usize, b: usize| pair_index[&(a.min(b), a.max(b))];
    let g = e.omega / (nb as f64).sqrt();
    let sqrt2 = 2.0_f64.sqrt();
    let mut trip = vec![(0, 0, cx(2.0 * e.delta + e.u))];
    for m in 0..nb {
        let em = 1 + m;
        trip.push((em, em, e.delta + energies[m]));
        trip.push((em, 0, cx(sqrt2 * g)));
        trip.push((0, em, cx(sqrt2 * g)));
        for m2 in 0..nb {
            let c = if m2 == m { sqrt2 * g } else { g };
            let q = pair(m, m2);
            trip.push((q, em, cx(c)));
            trip.push((em, q, cx(c)));
        }
    }
    for (&(m, m2), &q) in &pair_index {
        trip.push((q, q, energies[m] + energies[m2]));
    }

    // Jumps in momentum space: O = Σ_m c_m b_m, lower basis {a†|0⟩, b_m†|0⟩}.
    let norm = 1.0 / (nb as f64).sqrt();
    let jump_ops: Vec<JumpOperator> = ring_jumps(cfg, nb)
        .into_iter()
        .map(|(rate, amps)| {
            let c: Vec<Complex64> = (0..nb)
                .map(|m| {
                    let k = mode_momentum(m, nb);
                    amps.iter()
                        .map(|&(j, v)| v * Complex64::from_polar(norm, k * j as f64))
                        .sum()
                })
                .collect();
            let mut entries = Vec::new();
            for m in 0..nb {
                entries.push((0, 1 + m, c[m]));
            }
            for (&(m, m2), &q) in &pair_index {
                if m == m2 {
                    entries.push((1 + m, q, c[m] * sqrt2));
                } else {
                    entries.push((1 + m2, q, c[m]));
                    entries.push((1 + m, q, c[m2]));
                }
            }
            JumpOperator { rate, entries }
        })
        .collect();
    // The band energies already carry −iγ_k; the jumps are kept for the reverse map only.
    let mut lower_basis = vec![BasisState::Emitter(0)];
    lower_basis.extend((0..nb).map(BasisState::Mode));
    Ok(FiniteModel {
        nb,
        n_exc: 2,
        basis,
        h_eff: SparseMatrix::from_triplets(dim, trip),
        lower_basis,
        jump_ops,
    })
}

fn check_times(times: &[f64]) -> Result<()> {
    let mut last = 0.0;
    for &t in times {
        if !(t >= last) || !t.is_finite() {
            return Err(Error::InvalidParameter {
                name: "times",
                reason: format!("times must be finite, non-negative and ascending, got {t}"),
            });
        }
        last = t;
    }
    Ok(())
}

/// `e^{−iH_eff t}ψ₀` at each time, starting from `t = 0`.
///
/// Dense scaled-and-squared exponentials are used up to [`DENSE_LIMIT`], adaptive Krylov
/// stepping above.
pub fn evolve(model: &FiniteModel, psi0: &CVector, times: &[f64]) -> Result<Vec<CVector>> {
    evolve_with_limit(model, psi0, times, DENSE_LIMIT)
}

fn evolve_with_limit(
    model: &FiniteModel,
    psi0: &CVector,
    times: &[f64],
    dense_limit: usize,
) -> Result<Vec<CVector>> {
    if psi0.len() != model.dim() {
        return Err(Error::InvalidParameter {
            name: "psi0",
            reason: format!("length {} does not match dimension {}", psi0.len(), model.dim()),
        });
    }
    if (psi0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter {
            name: "psi0",
            reason: format!("state must be normalized, norm = {}", psi0.norm()),
        });
    }
    check_times(times)?;
    let dense = (model.dim() <= dense_limit).then(|| model.h_eff.to_dense());
    let mut out = Vec::with_capacity(times.len());
    let mut psi = psi0.clone();
    let mut t_prev = 0.0;
    let mut cached: Option<(f64, CMatrix)> = None;
    for &t in times {
        let dt = t - t_prev;
        if dt > 0.0 {
            psi = match &dense {
                Some(h) => {
                    let reuse = matches!(&cached, Some((d, _)) if (d - dt).abs() <= 1e-13 * dt);
                    if !reuse {
                        cached = Some((dt, expm(&(h * (-I * dt)))));
                    }
                    &cached.as_ref().unwrap().1 * &psi
                }
                None => {
                    let w = krylov_expmv(&model.h_eff, psi.as_slice(), dt, 40, STEP_TOLERANCE)
                        .map_err(|e| Error::StepRejected {
                            time: t_prev + e.time,
                            estimate: e.estimate,
                        })?;
                    CVector::from_vec(w)
                }
            };
        }
        out.push(psi.clone());
        t_prev = t;
    }
    Ok(out)
}

/// `−i⟨n|e^{−iH_eff t}|n⟩` for the emitter-only state with `n = n_exc`.
///
/// This is the finite-ring counterpart of `G(t)` (`n = 1`) and `D(t)` (`n = 2`).
pub fn subspace_dynamics(cfg: &Config, nb: usize, n_exc: usize, times: &[f64]) -> Result<TimeSeries> {
    let model = match n_exc {
        1 => build_single(cfg, nb)?,
        2 => build_pair(cfg, nb)?,
        _ => {
            return Err(Error::InvalidParameter {
                name: "n_exc",
                reason: format!("only 1 or 2 excitations are supported, got {n_exc}"),
            })
        }
    };
    let psi0 = model.initial_state();
    let k = psi0.iter().position(|x| x.re == 1.0).unwrap();
    let states = evolve(&model, &psi0, times)?;
    Ok(TimeSeries {
        times: times.to_vec(),
        values: states.iter().map(|s| -I * s[k]).collect(),
        method: Method::Oracle,
    })
}

/// `α = Ω N_b² / (2π²Γ)`, the ratio of coupling to the finite-size dissipative gap.
pub fn finite_size_alpha(cfg: &Config, nb: usize) -> f64 {
    cfg.emitter.omega * (nb * nb) as f64 / (2.0 * PI * PI * cfg.bath.gamma)
}

// ---------------------------------------------------------------------------------------------
// Master equation
// ---------------------------------------------------------------------------------------------

/// Bosonic Fock states of `modes` modes with at most `max_total` excitations in total.
#[derive(Debug, Clone)]
pub struct FockSpace {
    pub modes: usize,
    pub max_total: usize,
    pub states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl FockSpace {
    pub fn new(modes: usize, max_total: usize) -> Self {
        let mut states = Vec::new();
        let mut cur = vec![0u8; modes];
        fn fill(pos: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
            if pos == cur.len() {
                out.push(cur.clone());
                return;
            }
            for n in 0..=left {
                cur[pos] = n as u8;
                fill(pos + 1, left - n, cur, out);
            }
            cur[pos] = 0;
        }
        fill(0, max_total, &mut cur, &mut states);
        states.sort_by_key(|s| (s.iter().map(|&n| n as usize).sum::<usize>(), std::cmp::Reverse(s.clone())));
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Self {
            modes,
            max_total,
            states,
            index,
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index(&self, occupation: &[u8]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn total(&self, i: usize) -> usize {
        self.states[i].iter().map(|&n| n as usize).sum()
    }

    /// Indices of the states with exactly `n` excitations.
    pub fn sector(&self, n: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.total(i) == n).collect()
    }

    /// Dense annihilation operator of `mode`.
    pub fn annihilation(&self, mode: usize) -> CMatrix {
        let mut a = CMatrix::zeros(self.dim(), self.dim());
        for (i, s) in self.states.iter().enumerate() {
            let n = s[mode];
            if n > 0 {
                let mut t = s.clone();
                t[mode] -= 1;
                a[(self.index[&t], i)] = cx((n as f64).sqrt());
            }
        }
        a
    }

    /// `|n⟩` in `mode` with every other mode empty.
    pub fn single_mode_state(&self, mode: usize, n: usize) -> Option<usize> {
        let mut s = vec![0u8; self.modes];
        s[mode] = n as u8;
        self.index(&s)
    }
}

/// A master equation `ρ̇ = −i[H, ρ] + Σ(LρL† − ½{L†L, ρ})` on a small Hilbert space.
#[derive(Debug, Clone)]
pub struct LindbladSystem {
    dim: usize,
    h_eff: SparseMatrix,
    jumps: Vec<SparseMatrix>,
}

/// Tolerances of master-equation integration.
#[derive(Debug, Clone, Copy)]
pub struct LindbladOptions {
    pub ode: OdeOptions,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions {
                abs_tol: 1e-9,
                rel_tol: 1e-9,
                h_init: 1e-3,
                max_steps: 20_000_000,
            },
        }
    }
}

impl LindbladOptions {
    pub fn tight() -> Self {
        let mut o = Self::default();
        o.ode.abs_tol = 1e-12;
        o.ode.rel_tol = 1e-12;
        o
    }
}

impl LindbladSystem {
    /// `hamiltonian` must be Hermitian; jump operators carry their rates (`L = √κ·O`).
    pub fn new(hamiltonian: &CMatrix, jumps: &[CMatrix]) -> Self {
        let dim = hamiltonian.nrows();
        let mut h_eff = hamiltonian.clone();
        for l in jumps {
            h_eff -= (l.adjoint() * l) * (I * 0.5);
        }
        Self {
            dim,
            h_eff: SparseMatrix::from_dense(&h_eff),
            jumps: jumps.iter().map(SparseMatrix::from_dense).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `ρ̇` for a row-major density matrix.
    pub fn rhs(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim;
        let zero = cx(0.0);
        for v in out.iter_mut() {
            *v = zero;
        }
        for i in 0..n {
            for (j, v) in self.h_eff.row(i) {
                let a = -I * v;
                let b = I * v.conj();
                for c in 0..n {
                    // −iH_eff ρ
                    out[i * n + c] += a * rho[j * n + c];
                    // +iρH_eff†: (ρH_eff†)[c][i] = Σ_j ρ[c][j] conj(H[i][j])
                    out[c * n + i] += b * rho[c * n + j];
                }
            }
        }
        let mut tmp = vec![zero; n * n];
        for l in &self.jumps {
            for v in tmp.iter_mut() {
                *v = zero;
            }
            for i in 0..n {
                for (j, v) in l.row(i) {
                    for c in 0..n {
                        tmp[i * n + c] += v * rho[j * n + c];
                    }
                }
            }
            for k in 0..n {
                for (m, w) in l.row(k) {
                    let wc = w.conj();
                    for i in 0..n {
                        out[i * n + k] += tmp[i * n + m] * wc;
                    }
                }
            }
        }
    }

    /// `‖ρ̇‖₁` as the sum of absolute entries, an upper bound on the trace norm.
    pub fn derivative_norm(&self, rho: &CMatrix) -> f64 {
        let flat = to_row_major(rho);
        let mut out = vec![cx(0.0); flat.len()];
        self.rhs(&flat, &mut out);
        out.iter().map(|x| x.norm()).sum()
    }

    /// Integrates from `ρ₀` at `t = 0` and returns `ρ(t)` at each time.
    pub fn evolve(&self, rho0: &CMatrix, times: &[f64], opts: &LindbladOptions) -> Result<Vec<CMatrix>> {
        check_times(times)?;
        let tr0 = rho0.trace();
        let y0 = to_row_major(rho0);
        let sol = dopri5(|_, y, dy| self.rhs(y, dy), 0.0, &y0, times, opts.ode)
            .map_err(|f| Error::IntegrationFailed(f.time))?;
        let mut out = Vec::with_capacity(sol.len());
        for y in sol {
            let rho = from_row_major(&y, self.dim);
            let drift = (rho.trace() - tr0).norm();
            if drift > TRACE_TOLERANCE * tr0.norm().max(1.0) {
                return Err(Error::TraceDrift(rho.trace().re));
            }
            out.push(rho);
        }
        Ok(out)
    }

    /// Stationary state with unit trace.
    ///
    /// Small systems solve the vectorized Liouvillian directly; larger ones integrate in
    /// growing chunks until `‖ρ̇‖₁ <` [`STEADY_STATE_TOLERANCE`].
    pub fn steady_state(&self, opts: &LindbladOptions) -> Result<CMatrix> {
        let n = self.dim;
        if n <= DIRECT_STEADY_LIMIT {
            let nn = n * n;
            let mut l = CMatrix::zeros(nn, nn);
            let mut e = vec![cx(0.0); nn];
            let mut col = vec![cx(0.0); nn];
            for k in 0..nn {
                e[k] = cx(1.0);
                self.rhs(&e, &mut col);
                for (r, v) in col.iter().enumerate() {
                    l[(r, k)] = *v;
                }
                e[k] = cx(0.0);
            }
            let mut rhs = CVector::zeros(nn);
            for k in 0..nn {
                l[(0, k)] = cx(0.0);
            }
            for i in 0..n {
                l[(0, i * n + i)] = cx(1.0);
            }
            rhs[0] = cx(1.0);
            let x = l.lu().solve(&rhs).ok_or_else(|| Error::InvalidParameter {
                name: "liouvillian",
                reason: "stationary state is not unique".into(),
            })?;
            let rho = from_row_major(x.as_slice(), n);
            return Ok((&rho + rho.adjoint()) * cx(0.5));
        }
        let mut rho = CMatrix::zeros(n, n);
        rho[(0, 0)] = cx(1.0);
        let mut chunk = 10.0;
        let mut elapsed = 0.0;
        while elapsed < 1e7 {
            rho = self.evolve(&rho, &[chunk], opts)?.pop().unwrap();
            elapsed += chunk;
            if self.derivative_norm(&rho) < STEADY_STATE_TOLERANCE {
                return Ok(rho);
            }
            chunk *= 2.0;
        }
        Err(Error::IntegrationFailed(elapsed))
    }
}

fn to_row_major(m: &CMatrix) -> Vec<Complex64> {
    let n = m.nrows();
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            v.push(m[(i, j)]);
        }
    }
    v
}

fn from_row_major(v: &[Complex64], n: usize) -> CMatrix {
    CMatrix::from_row_slice(n, n, v)
}

/// Smallest eigenvalue of the Hermitian part of `ρ`.
pub fn min_eigenvalue(rho: &CMatrix) -> f64 {
    let h = (rho + rho.adjoint()) * cx(0.5);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Trace distance `½‖a − b‖₁` of two Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = a - b;
    let h = (&d + d.adjoint()) * cx(0.5);
    0.5 * h.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>()
}

/// Master equation of the emitters and the ring, truncated to `cutoff` total excitations.
///
/// Modes are ordered emitters first, then sites. A nonzero drive is written in the frame
/// rotating at `omega_d`.
pub struct LatticeLindblad {
    pub system: LindbladSystem,
    pub space: FockSpace,
    pub n_emitters: usize,
    pub omega_d: f64,
    /// Emitter-1 annihilation operator.
    pub a: CMatrix,
}

/// Builds the truncated master equation; `drive` toggles the coherent drive term.
pub fn lattice_lindblad(cfg: &Config, nb: usize, cutoff: usize, drive: bool) -> Result<LatticeLindblad> {
    check_lattice(cfg, nb)?;
    if nb > LINDBLAD_MAX_SITES || cutoff == 0 || cutoff > LINDBLAD_MAX_FOCK {
        return Err(Error::DimensionGuard(format!(
            "need 2 ≤ N_b ≤ {LINDBLAD_MAX_SITES} and 1 ≤ cutoff ≤ {LINDBLAD_MAX_FOCK}, got N_b = {nb}, cutoff = {cutoff}"
        )));
    }
    let sites = emitter_sites(cfg, nb)?;
    let ne = sites.len();
    let space = FockSpace::new(ne + nb, cutoff);
    let dim = space.dim();
    let ops: Vec<CMatrix> = (0..ne + nb).map(|m| space.annihilation(m)).collect();
    let e = &cfg.emitter;
    let p = &cfg.bath;
    let (omega_d, eps) = if drive && e.drive_eps != 0.0 {
        let wd = match e.omega_d {
            Some(w) => w,
            None => drive_setup(cfg)?.omega_d,
        };
        (wd, e.drive_eps)
    } else {
        (0.0, 0.0)
    };
    let mut h = CMatrix::zeros(dim, dim);
    for (l, &j) in sites.iter().enumerate() {
        let a = &ops[l];
        let n = a.adjoint() * a;
        h += &n * cx(e.delta - omega_d);
        h += (&n * &n - &n) * cx(0.5 * e.u);
        let coupling = ops[ne + j].adjoint() * a * cx(e.omega);
        h += &coupling + coupling.adjoint();
        if eps != 0.0 {
            h += (a + a.adjoint()) * cx(eps);
        }
    }
    let hop = Complex64::from_polar(p.j, p.theta);
    for j in 0..nb {
        let b = &ops[ne + j];
        h -= b.adjoint() * b * cx(omega_d);
        let t = b.adjoint() * &ops[ne + (j + 1) % nb] * hop;
        h += &t + t.adjoint();
    }
    let jumps: Vec<CMatrix> = ring_jumps(cfg, nb)
        .into_iter()
        .map(|(rate, amps)| {
            let mut l = CMatrix::zeros(dim, dim);
            for (j, v) in amps {
                l += &ops[ne + j] * v;
            }
            l * cx(rate.sqrt())
        })
        .collect();
    Ok(LatticeLindblad {
        system: LindbladSystem::new(&h, &jumps),
        a: ops[0].clone(),
        space,
        n_emitters: ne,
        omega_d,
    })
}

/// Initial condition of [`lindblad_evolve`].
#[derive(Debug, Clone)]
pub enum LindbladInitial {
    Vacuum,
    /// `n` excitations in emitter 1, everything else empty.
    EmitterFock(usize),
    Density(CMatrix),
}

/// Observables of a master-equation run.
#[derive(Debug, Clone)]
pub struct LindbladRun {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    /// `⟨a₁†a₁⟩(t)`.
    pub emitter_occupation: Vec<f64>,
    /// `P_n(t) = ⟨n, vac|ρ|n, vac⟩` for `n = 0..=cutoff` (emitter 1 holds all excitations).
    pub fock_populations: Vec<Vec<f64>>,
    pub traces: Vec<f64>,
    pub min_eigenvalues: Vec<f64>,
}

/// Integrates the full master equation of the emitters and an `N_b`-site ring.
pub fn lindblad_evolve(
    cfg: &Config,
    nb: usize,
    fock_cutoff: usize,
    init: LindbladInitial,
    times: &[f64],
    opts: &LindbladOptions,
) -> Result<LindbladRun> {
    let lat = lattice_lindblad(cfg, nb, fock_cutoff, true)?;
    let dim = lat.space.dim();
    let rho0 = match init {
        LindbladInitial::Vacuum => {
            let mut r = CMatrix::zeros(dim, dim);
            r[(0, 0)] = cx(1.0);
            r
        }
        LindbladInitial::EmitterFock(n) => {
            let i = lat.space.single_mode_state(0, n).ok_or_else(|| Error::DimensionGuard(
                format!("{n} excitations exceed the cutoff {fock_cutoff}"),
            ))?;
            let mut r = CMatrix::zeros(dim, dim);
            r[(i, i)] = cx(1.0);
            r
        }
        LindbladInitial::Density(r) => {
            if r.nrows() != dim || r.ncols() != dim {
                return Err(Error::DimensionGuard(format!(
                    "density matrix is {}x{}, space has dimension {dim}",
                    r.nrows(),
                    r.ncols()
                )));
            }
            r
        }
    };
    let states = lat.system.evolve(&rho0, times, opts)?;
    let number = lat.a.adjoint() * &lat.a;
    let fock_idx: Vec<usize> = (0..=fock_cutoff)
        .map(|n| lat.space.single_mode_state(0, n).unwrap())
        .collect();
    Ok(LindbladRun {
        times: times.to_vec(),
        emitter_occupation: states.iter().map(|r| (&number * r).trace().re).collect(),
        fock_populations: states
            .iter()
            .map(|r| fock_idx.iter().map(|&i| r[(i, i)].re).collect())
            .collect(),
        traces: states.iter().map(|r| r.trace().re).collect(),
        min_eigenvalues: states.iter().map(min_eigenvalue).collect(),
        states,
    })
}

/// Steady-state photon statistics of a driven emitter from the master equation.
#[derive(Debug, Clone)]
pub struct LindbladG2 {
    pub omega_d: f64,
    /// `⟨a₁†a₁⟩` in the steady state.
    pub population: f64,
    pub g2_zero: f64,
    pub taus: Vec<f64>,
    pub g2: Vec<f64>,
    /// Population of the cutoff sector; above [`LEAKAGE_LIMIT`] the truncation is suspect.
    pub leakage: f64,
    /// `‖ρ̇‖₁` at the returned steady state.
    pub residual: f64,
}

/// `g²(τ)` by the quantum regression route: `Tr[a†a e^{Lτ}(aρ_ss a†)] / n²`.
pub fn lindblad_g2(
    cfg: &Config,
    nb: usize,
    fock_cutoff: usize,
    taus: &[f64],
    opts: &LindbladOptions,
) -> Result<LindbladG2> {
    if cfg.emitter.drive_eps == 0.0 {
        return Err(Error::InvalidParameter {
            name: "drive_eps",
            reason: "photon statistics need a nonzero drive".into(),
        });
    }
    let lat = lattice_lindblad(cfg, nb, fock_cutoff, true)?;
    let rho = lat.system.steady_state(opts)?;
    let a = &lat.a;
    let ad = a.adjoint();
    let number = &ad * a;
    let n = (&number * &rho).trace().re;
    let pair = (&ad * &ad * a * a * &rho).trace().re;
    let top = lat.space.sector(fock_cutoff);
    let leakage = top.iter().map(|&i| rho[(i, i)].re).sum();
    let mut sigma = a * &rho * &ad;
    let norm = sigma.trace().re;
    sigma /= cx(norm);
    let evolved = lat.system.evolve(&sigma, taus, opts)?;
    let g2 = evolved
        .iter()
        .map(|s| (&number * s).trace().re * norm / (n * n))
        .collect();
    Ok(LindbladG2 {
        omega_d: lat.omega_d,
        population: n,
        g2_zero: pair / (n * n),
        taus: taus.to_vec(),
        g2,
        leakage,
        residual: lat.system.derivative_norm(&rho),
    })
}

/// Weak-drive photon statistics from finite-ring resolvents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventStatistics {
    /// `⟨a†a⟩/ε² = |⟨0|a (ω_d − H_eff)⁻¹ a†|0⟩|²`.
    pub population_per_eps2: f64,
    /// `|⟨0|a a (2ω_d − H_eff)⁻¹ a† (ω_d − H_eff)⁻¹ a†|0⟩|² / (⟨a†a⟩/ε²)²`.
    pub g2_zero: f64,
}

/// Leading-order steady-state statistics of a weakly driven emitter on a finite ring.
pub fn resolvent_statistics(cfg: &Config, nb: usize, omega_d: f64) -> Result<ResolventStatistics> {
    check_lattice(cfg, nb)?;
    let sites = emitter_sites(cfg, nb)?;
    let ne = sites.len();
    let space = FockSpace::new(ne + nb, 2);
    if space.dim() > DENSE_LIMIT {
        return Err(Error::TooLarge(space.dim()));
    }
    let undriven = Config {
        emitter: cfg.emitter.clone().with_drive(0.0, None),
        ..cfg.clone()
    };
    let h = build_fock_hamiltonian(&undriven, nb, &space, &sites)?;
    let a = space.annihilation(0);
    let ad = a.adjoint();
    let one = space.sector(1);
    let two = space.sector(2);
    let sub = |idx: &[usize], w: f64| {
        let mut m = CMatrix::zeros(idx.len(), idx.len());
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                m[(r, c)] = -h[(i, j)];
            }
            m[(r, r)] += cx(w);
        }
        m
    };
    let mut src = CVector::zeros(one.len());
    for (r, &i) in one.iter().enumerate() {
        src[r] = ad[(i, 0)];
    }
    let x1 = sub(&one, omega_d).lu().solve(&src).ok_or(Error::ResonantPole(omega_d))?;
    let mut full = CVector::zeros(space.dim());
    for (r, &i) in one.iter().enumerate() {
        full[i] = x1[r];
    }
    let g1 = (0..one.len()).map(|r| src[r].conj() * x1[r]).sum::<Complex64>();
    let lifted = &ad * &full;
    let y = CVector::from_iterator(two.len(), two.iter().map(|&i| lifted[i]));
    let x2 = sub(&two, 2.0 * omega_d).lu().solve(&y).ok_or(Error::ResonantPole(omega_d))?;
    let mut full2 = CVector::zeros(space.dim());
    for (r, &i) in two.iter().enumerate() {
        full2[i] = x2[r];
    }
    let amp = (&a * &a * &full2)[0];
    let pop = g1.norm_sqr();
    Ok(ResolventStatistics {
        population_per_eps2: pop,
        g2_zero: amp.norm_sqr() / (pop * pop),
    })
}

/// Number-conserving `H_eff` of the ring on a Fock space (laboratory frame).
fn build_fock_hamiltonian(cfg: &Config, nb: usize, space: &FockSpace, sites: &[usize]) -> Result<CMatrix> {
    let ne = sites.len();
    let ops: Vec<CMatrix> = (0..ne + nb).map(|m| space.annihilation(m)).collect();
    let e = &cfg.emitter;
    let p = &cfg.bath;
    let dim = space.dim();
    let mut h = CMatrix::zeros(dim, dim);
    for (l, &j) in sites.iter().enumerate() {
        let a = &ops[l];
        let n = a.adjoint() * a;
        h += &n * cx(e.delta);
        h += (&n * &n - &n) * cx(0.5 * e.u);
        let coupling = ops[ne + j].adjoint() * a * cx(e.omega);
        h += &coupling + coupling.adjoint();
    }
    let hop = Complex64::from_polar(p.j, p.theta);
    for j in 0..nb {
        let t = ops[ne + j].adjoint() * &ops[ne + (j + 1) % nb] * hop;
        h += &t + t.adjoint();
    }
    for (rate, amps) in ring_jumps(cfg, nb) {
        let mut l = CMatrix::zeros(dim, dim);
        for (j, v) in amps {
            l += &ops[ne + j] * v;
        }
        h -= (l.adjoint() * l) * (I * (0.5 * rate));
    }
    Ok(h)
}

/// Comparison of master-equation populations with subspace amplitudes.
#[derive(Debug, Clone)]
pub struct JumpExpansionReport {
    pub n_exc: usize,
    pub times: Vec<f64>,
    /// `tr[|n⟩⟨n|ρ(t)]` from the master equation.
    pub lindblad: Vec<f64>,
    /// `|⟨n|e^{−iH_eff t}|n⟩|²` from the subspace evolution.
    pub subspace: Vec<f64>,
    pub max_deviation: f64,
}

/// Checks `tr[|n⟩⟨n|ρ(t)] = |⟨n|e^{−iH_eff t}|n⟩|²` for an undriven emitter prepared with
/// `n` excitations.
pub fn jump_expansion_check(cfg: &Config, nb: usize, n_exc: usize, times: &[f64]) -> Result<JumpExpansionReport> {
    let undriven = Config {
        emitter: cfg.emitter.clone().with_drive(0.0, None),
        ..cfg.clone()
    };
    let series = subspace_dynamics(&undriven, nb, n_exc, times)?;
    let run = lindblad_evolve(
        &undriven,
        nb,
        n_exc,
        LindbladInitial::EmitterFock(n_exc),
        times,
        &LindbladOptions::tight(),
    )?;
    let lindblad: Vec<f64> = run.fock_populations.iter().map(|p| p[n_exc]).collect();
    let subspace = series.populations();
    let max_deviation = lindblad
        .iter()
        .zip(&subspace)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(JumpExpansionReport {
        n_exc,
        times: times.to_vec(),
        lindblad,
        subspace,
        max_deviation,
    })
}

// ---------------------------------------------------------------------------------------------
// Reduced models
// ---------------------------------------------------------------------------------------------

/// Emitters coupled to the single least-damped ring mode, the other modes eliminated.
#[derive(Debug, Clone)]
pub struct PseudoSingleMode {
    pub alpha: f64,
    /// `α <` [`PSEUDO_MODE_MAX_ALPHA`].
    pub valid: bool,
    /// Index `m` of the retained mode `k = 2πm/N_b`.
    pub mode: usize,
    pub mode_energy: Complex64,
    /// `Ω/√N_b`.
    pub coupling: f64,
    /// `(Ω²/N_bΓ) Σ_{k≠k*} 1/(1 + cos k)`.
    pub gamma1: f64,
    /// `(Ω²/N_bΓ) Σ_{k≠k*} e^{−ikd}/(1 + cos k)` for two emitters.
    pub gamma2: Option<f64>,
    /// Population oscillation frequency `2Ω/√N_b`.
    pub rabi_frequency: f64,
    /// Basis: emitters, then the retained mode.
    pub hamiltonian: CMatrix,
    pub eigenvalues: Vec<Complex64>,
    /// Eigenvalue of the antisymmetric emitter state decoupled from the retained mode.
    pub dark_eigenvalue: Option<Complex64>,
}

/// Reduction of the finite ring to the mode with the smallest dissipation rate.
pub fn pseudo_single_mode(cfg: &Config, nb: usize) -> Result<PseudoSingleMode> {
    check_lattice(cfg, nb)?;
    let ne = cfg.emitter.positions.len();
    if ne > 2 {
        return Err(Error::InvalidParameter {
            name: "positions",
            reason: "at most two emitters".into(),
        });
    }
    let p = &cfg.bath;
    let e = &cfg.emitter;
    let energies: Vec<Complex64> = (0..nb)
        .map(|m| complex_band(&[mode_momentum(m, nb)], p))
        .collect();
    let mode = (0..nb)
        .min_by(|&a, &b| (-energies[a].im).total_cmp(&-energies[b].im))
        .unwrap();
    let g = e.omega / (nb as f64).sqrt();
    let pref = e.omega * e.omega / (nb as f64 * p.gamma);
    let others = (0..nb).filter(|&m| m != mode);
    let gamma1 = others
        .clone()
        .map(|m| 1.0 / (1.0 + mode_momentum(m, nb).cos()))
        .sum::<f64>()
        * pref;
    let d = e.d();
    let gamma2 = d.map(|d| {
        others
            .map(|m| {
                let k = mode_momentum(m, nb);
                (k * d as f64).cos() / (1.0 + k.cos())
            })
            .sum::<f64>()
            * pref
    });
    let kstar = mode_momentum(mode, nb);
    let mut h = CMatrix::zeros(ne + 1, ne + 1);
    for l in 0..ne {
        h[(l, l)] = Complex64::new(e.delta, -gamma1);
        let phase = Complex64::from_polar(1.0, kstar * (e.positions[l] - e.positions[0]) as f64);
        h[(l, ne)] = phase * g;
        h[(ne, l)] = phase.conj() * g;
    }
    if let Some(g2) = gamma2 {
        h[(0, 1)] = -I * g2;
        h[(1, 0)] = -I * g2;
    }
    h[(ne, ne)] = energies[mode];
    let dark_eigenvalue = gamma2.map(|g2| {
        let s = Complex64::from_polar(1.0, kstar * d.unwrap() as f64);
        // (1, −s̄) is orthogonal to the coupling column and an eigenvector of the emitter block
        // whenever s = ±1.
        Complex64::new(e.delta, -gamma1) + I * g2 * s.conj()
    });
    let alpha = finite_size_alpha(cfg, nb);
    Ok(PseudoSingleMode {
        alpha,
        valid: alpha < PSEUDO_MODE_MAX_ALPHA,
        mode,
        mode_energy: energies[mode],
        coupling: g,
        gamma1,
        gamma2,
        rabi_frequency: 2.0 * g,
        eigenvalues: eigenvalues(&h),
        hamiltonian: h,
        dark_eigenvalue,
    })
}

/// Eigenvector of the full single-excitation `H_eff` with the largest overlap on
/// `(a₁† − a₂†)|0⟩/√2`, returned as `(eigenvalue, overlap²)`.
pub fn dark_state_overlap(cfg: &Config, nb: usize) -> Result<(Complex64, f64)> {
    let model = build_single(cfg, nb)?;
    if cfg.emitter.positions.len() != 2 {
        return Err(Error::InvalidParameter {
            name: "positions",
            reason: "the dark state needs two emitters".into(),
        });
    }
    let h = model.h_eff.to_dense();
    let s = 1.0 / 2.0_f64.sqrt();
    let mut best = (cx(0.0), 0.0);
    for lam in eigenvalues(&h) {
        let v = eigenvector(&h, lam);
        let ov = (v[0] * s - v[1] * s).norm_sqr();
        if ov > best.1 {
            best = (lam, ov);
        }
    }
    Ok(best)
}

/// Steady state of the driven two-level system `H = ε(σ⁺ + σ⁻)`, `L = √γ σ⁻`.
#[derive(Debug, Clone)]
pub struct TwoLevelBenchmark {
    /// Basis `(g, e)`.
    pub exact: CMatrix,
    /// Expansion of `exact` to order `ε²`.
    pub second_order: CMatrix,
}

pub fn two_level_benchmark(eps: f64, gamma: f64) -> Result<TwoLevelBenchmark> {
    if !(eps > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "eps, gamma",
            reason: format!("both must be positive, got {eps}, {gamma}"),
        });
    }
    let den = 8.0 * eps * eps + gamma * gamma;
    let coh = Complex64::new(0.0, 2.0 * eps * gamma / den);
    let exact = CMatrix::from_row_slice(
        2,
        2,
        &[
            cx((4.0 * eps * eps + gamma * gamma) / den),
            coh,
            -coh,
            cx(4.0 * eps * eps / den),
        ],
    );
    let r = 4.0 * eps * eps / (gamma * gamma);
    let coh2 = Complex64::new(0.0, 2.0 * eps / gamma);
    let second_order = CMatrix::from_row_slice(2, 2, &[cx(1.0 - r), coh2, -coh2, cx(r)]);
    Ok(TwoLevelBenchmark {
        exact,
        second_order,
    })
}

/// The master equation of [`two_level_benchmark`].
pub fn two_level_system(eps: f64, gamma: f64) -> LindbladSystem {
    let h = CMatrix::from_row_slice(2, 2, &[cx(0.0), cx(eps), cx(eps), cx(0.0)]);
    let lower = CMatrix::from_row_slice(2, 2, &[cx(0.0), cx(gamma.sqrt()), cx(0.0), cx(0.0)]);
    LindbladSystem::new(&h, &[lower])
}
