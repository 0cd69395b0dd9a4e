//! Dense and sparse complex linear algebra: matrix exponential, Krylov propagation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &CMatrix) -> CMatrix {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371_920_351_148_152;
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * Complex64::new(0.5_f64.powi(s), 0.0);
    let id = CMatrix::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let c = |k: usize| Complex64::new(B[k], 0.0);
    let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9))
        + &a6 * c(7)
        + &a4 * c(5)
        + &a2 * c(3)
        + &id * c(1);
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8))
        + &a6 * c(6)
        + &a4 * c(4)
        + &a2 * c(2)
        + &id * c(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Padé denominator is nonsingular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Eigenvalues of a general complex matrix from its complex Schur form.
pub fn eigenvalues(a: &CMatrix) -> Vec<Complex64> {
    let t = a.clone().schur().unpack().1;
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Right eigenvector for an eigenvalue estimate `lambda`, by inverse iteration.
///
/// The result has unit 2-norm.
pub fn eigenvector(a: &CMatrix, lambda: Complex64) -> CVector {
    let n = a.nrows();
    let scale = a.iter().map(|x| x.norm()).fold(0.0_f64, f64::max).max(1.0);
    let shift = lambda + Complex64::new(scale * 1e-10, scale * 1e-10);
    let lu = (a - CMatrix::identity(n, n) * shift).lu();
    let mut v = CVector::from_element(n, Complex64::new(1.0, 0.0));
    for _ in 0..4 {
        if let Some(w) = lu.solve(&v) {
            let norm = w.norm();
            if norm == 0.0 || !norm.is_finite() {
                break;
            }
            v = w / Complex64::new(norm, 0.0);
        }
    }
    v
}

/// Compressed sparse row complex matrix.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseMatrix {
    /// Builds from unordered triplets; duplicate entries are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(j);
            vals.push(v);
            row_ptr[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Stored entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    /// All stored entries as `(row, column, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Sparse copy of a dense matrix, dropping exact zeros.
    pub fn from_dense(m: &CMatrix) -> Self {
        let mut trip = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), trip)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn mul_vec(&self, x: &[Complex64], y: &mut [Complex64]) {
        for i in 0..self.n {
            let mut s = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] += self.vals[k];
            }
        }
        m
    }

    /// Upper bound on the 1-norm (max column sum).
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for k in 0..self.vals.len() {
            col[self.cols[k]] += self.vals[k].norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }
}

/// Error returned by [`krylov_expmv`] when a step cannot meet the tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStepRejected {
    pub time: f64,
    pub estimate: f64,
}

/// Computes `exp(-i H t) v` by Arnoldi projection with adaptive substeps.
///
/// The local error of each substep is estimated from the last Hessenberg coefficient and
/// must stay below `tol`; the substep is halved otherwise.
pub fn krylov_expmv(
    h: &SparseMatrix,
    v: &[Complex64],
    t: f64,
    m_max: usize,
    tol: f64,
) -> Result<Vec<Complex64>, KrylovStepRejected> {
    let n = h.n;
    let mut w: Vec<Complex64> = v.to_vec();
    let mut t_done = 0.0;
    let anorm = h.norm1().max(1e-300);
    let mut dt = (t - t_done).min(m_max as f64 / (2.0 * anorm) * 4.0).max(t * 1e-6);
    let m_max = m_max.min(n).max(1);
    while t_done < t {
        dt = dt.min(t - t_done);
        let beta = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if beta == 0.0 {
            return Ok(w);
        }
        let mut basis: Vec<Vec<Complex64>> = vec![w.iter().map(|x| x / beta).collect()];
        let mut hess = CMatrix::zeros(m_max + 1, m_max);
        let mut m_used = m_max;
        let mut breakdown = false;
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..m_max {
            h.mul_vec(&basis[j], &mut tmp);
            for (i, b) in basis.iter().enumerate() {
                let hij: Complex64 = b.iter().zip(&tmp).map(|(bi, ti)| bi.conj() * ti).sum();
                hess[(i, j)] = hij;
                for (tk, bk) in tmp.iter_mut().zip(b) {
                    *tk -= hij * bk;
                }
            }
            let hn = tmp.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            hess[(j + 1, j)] = Complex64::new(hn, 0.0);
            if hn < 1e-12 * anorm {
                m_used = j + 1;
                breakdown = true;
                break;
            }
            basis.push(tmp.iter().map(|x| x / hn).collect());
        }
        loop {
            let hm = hess.view((0, 0), (m_used, m_used)).into_owned();
            let e = expm(&(hm * Complex64::new(0.0, -dt)));
            let err = if breakdown {
                0.0
            } else {
                beta * hess[(m_used, m_used - 1)].norm() * dt * e[(m_used - 1, 0)].norm()
            };
            if err <= tol * dt.max(1e-300) / t.max(1e-300) || breakdown || err <= tol * 1e-3 {
                let mut next = vec![Complex64::new(0.0, 0.0); n];
                for (k, bk) in basis.iter().take(m_used).enumerate() {
                    let coef = e[(k, 0)] * beta;
                    for (nx, b) in next.iter_mut().zip(bk) {
                        *nx += coef * b;
                    }
                }
                w = next;
                t_done += dt;
                if err < 0.1 * tol * dt / t.max(1e-300) {
                    dt *= 1.5;
                }
                break;
            }
            dt *= 0.5;
            if dt < t * 1e-12 {
                return Err(KrylovStepRejected {
                    time: t_done,
                    estimate: err,
                });
            }
        }
    }
    Ok(w)
}
