//! Adaptive Dormand–Prince 5(4) integrator for complex vector ODEs.

use num_complex::Complex64;

/// Step-size control for [`dopri5`].
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub h_init: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            h_init: 1e-3,
            max_steps: 10_000_000,
        }
    }
}

/// Failure of [`dopri5`]: the step budget was exhausted or the step size underflowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeFailure {
    pub time: f64,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` and records the state at each requested output time.
///
/// `times` must be ascending and start at or after `t0`. Output times are hit exactly.
pub fn dopri5<F>(
    mut f: F,
    t0: f64,
    y0: &[Complex64],
    times: &[f64],
    opts: OdeOptions,
) -> Result<Vec<Vec<Complex64>>, OdeFailure>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut h = opts.h_init;
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    let mut out = Vec::with_capacity(times.len());
    let mut steps = 0usize;
    f(t, &y, &mut k[0]);
    for &target in times {
        while t < target {
            if steps >= opts.max_steps {
                return Err(OdeFailure { time: t });
            }
            let last = t + h >= target;
            let hh = if last { target - t } else { h };
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        if A[s][j] != 0.0 {
                            acc += kj[i] * (hh * A[s][j]);
                        }
                    }
                    tmp[i] = acc;
                }
                f(t + C[s] * hh, &tmp, &mut k[s]);
            }
            // tmp now holds the 5th-order solution (FSAL stage 7 evaluated at it).
            let mut err = 0.0_f64;
            for i in 0..n {
                let mut e = Complex64::new(0.0, 0.0);
                for s in 0..7 {
                    e += k[s][i] * (hh * (B5[s] - B4[s]));
                }
                let sc = opts.abs_tol + opts.rel_tol * y[i].norm().max(tmp[i].norm());
                let r = e.norm() / sc;
                err = err.max(r);
            }
            steps += 1;
            if err <= 1.0 {
                t = if last { target } else { t + hh };
                y.copy_from_slice(&tmp);
                let k6 = k[6].clone();
                k[0] = k6;
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !last {
                    h = hh * fac;
                } else {
                    h = h.max(hh * fac.min(1.0));
                }
            } else {
                h = hh * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(OdeFailure { time: t });
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let y0 = [Complex64::new(1.0, 0.0)];
        let times = [1.0, 5.0, 10.0];
        let sol = dopri5(
            |_, y, dy| dy[0] = Complex64::new(-0.1, -2.0) * y[0],
            0.0,
            &y0,
            &times,
            OdeOptions::default(),
        )
        .unwrap();
        for (s, t) in sol.iter().zip(times) {
            let exact = (Complex64::new(-0.1, -2.0) * t).exp();
            assert!((s[0] - exact).norm() < 1e-8);
        }
    }
}
