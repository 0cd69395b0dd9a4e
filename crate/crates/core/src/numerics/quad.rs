//! Adaptive Gauss–Kronrod (7/15) quadrature for complex-valued integrands.

use num_complex::Complex64;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub intervals: usize,
}

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 20_000,
        }
    }
}

impl QuadOptions {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Single 15-point Kronrod rule with embedded 7-point Gauss estimate.
pub fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += s * WGK[j];
        if j % 2 == 1 {
            rg += s * WG[j / 2];
        }
    }
    let value = rk * h;
    let error = ((rk - rg) * h).norm();
    (value, error)
}

/// Abscissae and weights of the 15-point Kronrod rule mapped to `[a, b]`.
pub fn gk15_nodes(a: f64, b: f64) -> [(f64, f64); 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 15];
    for j in 0..7 {
        out[2 * j] = (c - h * XGK[j], h * WGK[j]);
        out[2 * j + 1] = (c + h * XGK[j], h * WGK[j]);
    }
    out[14] = (c, h * WGK[7]);
    out
}

/// Globally adaptive integration of `f` over `[a, b]`, with optional interior breakpoints.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> QuadResult {
    let panels = adaptive_panels(&mut f, a, b, breaks, opts);
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for p in &panels {
        value += p.value;
        error += p.error;
    }
    QuadResult {
        value,
        error,
        intervals: panels.len(),
    }
}

/// Panels `[a_i, b_i]` produced by the adaptive refinement of `f`, sorted left to right.
pub fn refine_panels<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Vec<(f64, f64)> {
    let mut panels: Vec<(f64, f64)> = adaptive_panels(&mut f, a, b, breaks, opts)
        .into_iter()
        .map(|p| (p.a, p.b))
        .collect();
    panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    panels
}

fn adaptive_panels<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Vec<Panel> {
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x.is_finite() && x > a.min(b) && x < a.max(b))
        .collect();
    if b >= a {
        inner.sort_by(|x, y| x.total_cmp(y));
    } else {
        inner.sort_by(|x, y| y.total_cmp(x));
    }
    inner.dedup();
    pts.extend(inner);
    pts.push(b);

    let mut heap = BinaryHeap::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_err = 0.0;
    for w in pts.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let (v, e) = gk15(f, w[0], w[1]);
        total += v;
        total_err += e;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    while heap.len() < opts.max_intervals {
        let tol = opts.abs_tol.max(opts.rel_tol * total.norm());
        if total_err <= tol {
            break;
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid == worst.a || mid == worst.b {
            heap.push(Panel {
                error: 0.0,
                ..worst
            });
            total_err -= worst.error;
            continue;
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    heap.into_vec()
}

/// Integral over the whole real line. The integrand must decay at least like `1/x²`.
///
/// The line is split at `breaks` (sorted internally); the two tails are mapped onto
/// finite intervals with `x = x₀ ± (1 − t)/t`.
pub fn integrate_real_line<F: FnMut(f64) -> Complex64>(
    mut f: F,
    breaks: &[f64],
    opts: QuadOptions,
) -> QuadResult {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite()).collect();
    if pts.is_empty() {
        pts.push(0.0);
    }
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup();
    let lo = pts[0];
    let hi = pts[pts.len() - 1];
    let scale = (hi - lo).max(1.0);
    let lo_edge = lo - scale;
    let hi_edge = hi + scale;
    let mut inner = pts.clone();
    inner.push(lo_edge);
    inner.push(hi_edge);

    let mid = integrate(&mut f, lo_edge, hi_edge, &inner, opts);
    let right = integrate(
        |t: f64| {
            if t <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let x = hi_edge + scale * (1.0 - t) / t;
            f(x) * (scale / (t * t))
        },
        0.0,
        1.0,
        &[],
        opts,
    );
    let left = integrate(
        |t: f64| {
            if t <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let x = lo_edge - scale * (1.0 - t) / t;
            f(x) * (scale / (t * t))
        },
        0.0,
        1.0,
        &[],
        opts,
    );
    QuadResult {
        value: mid.value + right.value + left.value,
        error: mid.error + right.error + left.error,
        intervals: mid.intervals + right.intervals + left.intervals,
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` via Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| c(x.powi(6) - 2.0 * x), 0.0, 2.0, &[], QuadOptions::default());
        assert!((r.value.re - (128.0 / 7.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let r = integrate(|x| c(1.0 / x.sqrt()), 0.0, 1.0, &[], QuadOptions::new(1e-12, 1e-12));
        assert!((r.value.re - 2.0).abs() < 1e-9, "{:?}", r);
    }

    #[test]
    fn lorentzian_on_real_line() {
        let eta = 1e-3;
        let r = integrate_real_line(
            |x| c(eta / (x * x + eta * eta)),
            &[0.0],
            QuadOptions::new(1e-12, 1e-12),
        );
        assert!((r.value.re - std::f64::consts::PI).abs() < 1e-8, "{:?}", r);
    }

    #[test]
    fn gauss_legendre_integrates_degree_2n_minus_1() {
        let nodes = gauss_legendre(8);
        let s: f64 = nodes.iter().map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let wsum: f64 = nodes.iter().map(|(_, w)| w).sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }
}
