//! Quadrature rules shared by the spectral, semiclassical and overlap code.

use crate::error::{Error, Result};
use crate::tridiag::SymTridiag;
use std::collections::BinaryHeap;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Fixed-order Gauss–Legendre rule mapped to an interval.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights on [a, b].
    pub fn on(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let x = self.nodes.iter().map(|t| c + h * t).collect();
        let w = self.weights.iter().map(|wi| h * wi).collect();
        (x, w)
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * t);
        }
        s * h
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn composite<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * h;
                self.integrate(&mut f, lo, lo + h)
            })
            .sum()
    }
}

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
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive Gauss–Kronrod 7/15 integration.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_subdiv: usize,
) -> Result<Integral> {
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, err: e });
    let mut total = v;
    let mut err = e;
    let mut n = 1;
    loop {
        let tol = abs_tol.max(rel_tol * total.abs());
        if err <= tol {
            break;
        }
        if n >= max_subdiv {
            return Err(Error::QuadratureFailure { tol: rel_tol, estimate: err / total.abs().max(f64::MIN_POSITIVE) });
        }
        let s = heap.pop().expect("non-empty heap");
        let m = 0.5 * (s.a + s.b);
        let (v1, e1) = gk15(&mut f, s.a, m);
        let (v2, e2) = gk15(&mut f, m, s.b);
        total += v1 + v2 - s.value;
        err += e1 + e2 - s.err;
        heap.push(Segment { a: s.a, b: m, value: v1, err: e1 });
        heap.push(Segment { a: m, b: s.b, value: v2, err: e2 });
        n += 1;
    }
    // Re-sum to shed accumulated cancellation in the running total.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.err).sum();
    if !value.is_finite() {
        return Err(Error::QuadratureFailure { tol: rel_tol, estimate: f64::INFINITY });
    }
    Ok(Integral { value, error })
}

/// Tanh–sinh (double exponential) integration, robust against integrable
/// endpoint singularities. `f` is never evaluated at `a` or `b`.
pub fn integrate_tanh_sinh<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64) -> Result<Integral> {
    integrate_tanh_sinh_offsets(|x, _, _| f(x), a, b, rel_tol)
}

/// Tanh–sinh integration where `f(x, x - a, b - x)` also receives the
/// distances to both ends, computed without cancellation.
pub fn integrate_tanh_sinh_offsets<F: FnMut(f64, f64, f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64) -> Result<Integral> {
    use std::f64::consts::FRAC_PI_2;
    let half = 0.5 * (b - a);
    let tmax = 6.5;
    let mut h = 0.5;
    let eval = |t: f64, f: &mut F| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let du = FRAC_PI_2 * t.cosh();
        let ch = u.cosh();
        let w = du / (ch * ch);
        // 1 - tanh|u| computed without cancellation.
        let d = 2.0 / ((2.0 * u.abs()).exp() + 1.0);
        let (x, da, db) = if u >= 0.0 {
            (b - half * d, 2.0 * half - half * d, half * d)
        } else {
            (a + half * d, half * d, 2.0 * half - half * d)
        };
        if !(da > 0.0 && db > 0.0) || w == 0.0 {
            return 0.0;
        }
        let fx = f(x, da, db);
        if fx.is_finite() {
            w * fx
        } else {
            0.0
        }
    };
    let mut sum = eval(0.0, &mut f);
    let mut k = 1;
    while k as f64 * h <= tmax {
        let t = k as f64 * h;
        sum += eval(t, &mut f) + eval(-t, &mut f);
        k += 1;
    }
    let mut prev = sum * h * half;
    for _level in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= tmax {
            let t = k as f64 * h;
            sum += eval(t, &mut f) + eval(-t, &mut f);
            k += 2;
        }
        let cur = sum * h * half;
        let diff = (cur - prev).abs();
        if diff <= rel_tol * cur.abs() || diff < 1e-300 {
            return Ok(Integral { value: cur, error: diff });
        }
        prev = cur;
    }
    Err(Error::QuadratureFailure { tol: rel_tol, estimate: f64::NAN })
}

/// Composite Simpson rule on uniformly spaced samples (odd count).
pub fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd number of samples");
    let mut s = y[0] + y[n - 1];
    for (i, v) in y.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Running integral of uniformly spaced samples, starting at zero.
/// Each cell uses the quadratic through three neighbouring samples.
pub fn cumulative_quadratic(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (y[0] + y[1]);
        return out;
    }
    for i in 0..n - 1 {
        let cell = if i + 2 < n {
            h / 12.0 * (5.0 * y[i] + 8.0 * y[i + 1] - y[i + 2])
        } else {
            h / 12.0 * (-y[i - 1] + 8.0 * y[i] + 5.0 * y[i + 1])
        };
        out[i + 1] = out[i] + cell;
    }
    out
}

/// Gauss–Jacobi rule for the weight (1-x)^a (1+x)^b on [-1, 1], a, b > -1.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && a > -1.0 && b > -1.0);
    let (diag, beta) = jacobi_recurrence(n, a, b);
    let off: Vec<f64> = beta[1..n].iter().map(|x| x.sqrt()).collect();
    let t = SymTridiag::new(diag.clone(), off.clone());
    let nodes = t.eigenvalues(0..n);
    let ln_mu0 = (a + b + 1.0) * std::f64::consts::LN_2 + statrs::function::gamma::ln_gamma(a + 1.0)
        + statrs::function::gamma::ln_gamma(b + 1.0)
        - statrs::function::gamma::ln_gamma(a + b + 2.0);
    let mu0 = ln_mu0.exp();
    let weights = nodes
        .iter()
        .map(|&x| {
            // Christoffel function from the orthonormal recurrence.
            let mut p_prev = 0.0;
            let mut p = 1.0;
            let mut s = 1.0;
            for k in 0..n - 1 {
                let next = ((x - diag[k]) * p - if k > 0 { off[k - 1] * p_prev } else { 0.0 }) / off[k];
                p_prev = p;
                p = next;
                s += p * p;
            }
            mu0 / s
        })
        .collect();
    (nodes, weights)
}

/// Monic Jacobi recurrence: diagonal alpha_k and beta_k (beta_0 unused).
fn jacobi_recurrence(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut diag = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let ab = a + b;
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        diag[k] = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        if k == 1 {
            beta[k] = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab));
        } else if k > 1 {
            beta[k] = 4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0));
        }
    }
    (diag, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let g = GaussLegendre::new(8);
        let v = g.integrate(|x| x.powi(14) + 3.0 * x.powi(3), -1.0, 1.0);
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        let (_, w) = gauss_legendre(40);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let r = integrate_adaptive(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 0.0, 2000).unwrap();
        let exact = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        assert!((r.value - exact).abs() / exact < 1e-11);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        let r = integrate_tanh_sinh_offsets(|_, da, db| 1.0 / (da * db).sqrt(), -1.0, 1.0, 1e-13).unwrap();
        assert!((r.value - PI).abs() < 1e-12);
        let r = integrate_tanh_sinh(|x| x.ln(), 0.0, 1.0, 1e-13).unwrap();
        assert!((r.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_and_cumulative_agree_on_cubic() {
        let n = 101;
        let h = 1.0 / (n - 1) as f64;
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(2)).collect();
        assert!((simpson(&y, h) - 1.0 / 3.0).abs() < 1e-14);
        let c = cumulative_quadratic(&y, h);
        assert!((c[n - 1] - 1.0 / 3.0).abs() < 1e-14);
        assert!((c[50] - 0.125 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_jacobi_chebyshev_weight() {
        // a = b = -1/2 is the Chebyshev weight with total mass pi.
        let (x, w) = gauss_jacobi(12, -0.5, -0.5);
        assert!((w.iter().sum::<f64>() - PI).abs() < 1e-12);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((v - 3.0 * PI / 8.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_jacobi_asymmetric_weight() {
        // int (1-x)^2 (1+x)^0.5 x dx against a fine Gauss-Legendre reference
        let (x, w) = gauss_jacobi(10, 2.0, 0.5);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x).sum();
        let r = integrate_tanh_sinh(|t| (1.0 - t).powi(2) * (1.0 + t).sqrt() * t, -1.0, 1.0, 1e-14).unwrap();
        assert!((v - r.value).abs() < 1e-12, "{v} vs {}", r.value);
    }
}
