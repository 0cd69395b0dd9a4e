//! Complex root finding: Aberth–Ehrlich for polynomials and damped Newton for analytic maps.

use num_complex::Complex64;

/// Evaluates a polynomial with coefficients in ascending order together with its derivative.
pub fn poly_eval(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots of a polynomial with ascending coefficients, by simultaneous Aberth iteration.
///
/// Leading zero coefficients are dropped. Returns an empty vector for constants.
pub fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while c.len() > 1 && c[c.len() - 1].norm() == 0.0 {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let monic: Vec<Complex64> = c.iter().map(|x| x / lead).collect();

    // Fujiwara bound 2·max |a_{n−k}/a_n|^{1/k}; stays representable for high degrees.
    let radius = (1..=n)
        .map(|k| monic[n - k].norm().powf(1.0 / k as f64))
        .fold(0.0_f64, f64::max)
        .max(1e-300)
        * 2.0;
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
            Complex64::from_polar(0.5 * radius, ang)
        })
        .collect();

    let mut converged = vec![false; n];
    for _ in 0..500 {
        let mut all = true;
        for i in 0..n {
            if converged[i] {
                continue;
            }
            let (p, dp) = poly_eval(&monic, z[i]);
            if p.norm() == 0.0 {
                converged[i] = true;
                continue;
            }
            let ratio = p / dp;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm() > 0.0 {
                        s += 1.0 / d;
                    }
                }
            }
            let step = ratio / (1.0 - ratio * s);
            z[i] -= step;
            if step.norm() <= 1e-15 * z[i].norm().max(1e-300) {
                converged[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    // Newton polish against the original coefficients.
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = poly_eval(&monic, *zi);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            *zi -= step;
        }
    }
    z
}

/// Outcome of a Newton iteration.
#[derive(Debug, Clone, Copy)]
pub struct NewtonResult {
    pub root: Complex64,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped complex Newton iteration on `f` with derivative `df`.
///
/// `f` may return `None` when evaluated outside its domain; the step is then halved.
/// Returns `None` when no convergence is reached within `max_iter`.
pub fn newton<F>(mut f: F, z0: Complex64, tol: f64, max_iter: usize) -> Option<NewtonResult>
where
    F: FnMut(Complex64) -> Option<(Complex64, Complex64)>,
{
    let mut z = z0;
    let (mut fz, mut dfz) = f(z)?;
    for it in 0..max_iter {
        if fz.norm() < tol {
            return Some(NewtonResult {
                root: z,
                residual: fz.norm(),
                iterations: it,
            });
        }
        if dfz.norm() == 0.0 {
            return None;
        }
        let full = fz / dfz;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = z - full * lambda;
            if let Some((ft, dft)) = f(trial) {
                if ft.norm() < fz.norm() * (1.0 - 1e-4 * lambda) || ft.norm() < tol {
                    z = trial;
                    fz = ft;
                    dfz = dft;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            // Stagnation at machine precision counts as converged when the step is negligible.
            if full.norm() <= 1e-14 * z.norm().max(1e-300) {
                return Some(NewtonResult {
                    root: z,
                    residual: fz.norm(),
                    iterations: it,
                });
            }
            return None;
        }
        if full.norm() * lambda <= 1e-15 * z.norm().max(1e-300) && fz.norm() < tol.sqrt() {
            return Some(NewtonResult {
                root: z,
                residual: fz.norm(),
                iterations: it + 1,
            });
        }
    }
    if fz.norm() < tol {
        Some(NewtonResult {
            root: z,
            residual: fz.norm(),
            iterations: max_iter,
        })
    } else {
        None
    }
}

/// Removes near-duplicates: roots closer than `tol·max(1, |z|)` keep the first occurrence.
pub fn dedup_roots(roots: &mut Vec<Complex64>, tol: f64) {
    let mut out: Vec<Complex64> = Vec::with_capacity(roots.len());
    for &r in roots.iter() {
        if !out
            .iter()
            .any(|&q| (q - r).norm() <= tol * r.norm().max(q.norm()).max(1e-300))
        {
            out.push(r);
        }
    }
    *roots = out;
}

/// Sorts by real part, then imaginary part.
pub fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn recovers_known_roots() {
        let want = [c(1.0, 0.0), c(-2.0, 0.5), c(0.0, -3.0), c(1e-3, 1e-3)];
        let mut coeffs = vec![c(1.0, 0.0)];
        for r in want {
            let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
            for (i, &a) in coeffs.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * r;
            }
            coeffs = next;
        }
        let got = poly_roots(&coeffs);
        for w in want {
            assert!(got.iter().any(|g| (g - w).norm() < 1e-12), "{w} missing from {got:?}");
        }
    }

    #[test]
    fn newton_finds_cube_root() {
        let r = newton(|z| Some((z * z * z - 8.0, 3.0 * z * z)), c(1.5, 0.2), 1e-13, 50).unwrap();
        assert!((r.root - c(2.0, 0.0)).norm() < 1e-12);
    }
}
