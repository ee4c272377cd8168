//! One-particle overlaps <Phi_j|Phi_j> and F(t) of chiral wave packets.
//!
//! Substituting u = f-bar(x) maps the four kernel terms onto a single
//! convolution on the unfolded circle: with A_j(u) = e^{-ikx} xi_j^+(x)
//! f-bar'(x)^{D-1} for u = f-bar(x) in the first half and A_j(u) =
//! e^{ikx} xi_j^-(x) f-bar'(x)^{D-1} for u = f-bar(L) - f-bar(x) in the
//! second, F(t) = (1/2pi) int dz K(z) C(z) where C(z) = int conj(A_2(u + z))
//! A_1(u) du and K is the (time-shifted) kernel. The peak of K has width
//! epsilon, so the z integral uses panels graded towards it.

use super::unfold::UnfoldedMap;
use crate::error::{Error, Result};
use crate::interp::UniformInterp;
use crate::quadrature::{simpson, GaussLegendre};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Free-fermion kernel i pi e^{-i pi x/2L} / (2L sin(pi (x + i eps)/2L)).
pub fn g_ff(x: f64, l: f64, epsilon: f64) -> Complex64 {
    let p = 2.0 * l;
    // Reduce to one period; exact for |x| < 2L by Sterbenz.
    let r = x - p * ((x + l) / p).floor();
    let a = PI / p;
    let num = Complex64::new(0.0, PI) * Complex64::from_polar(1.0, -a * r);
    let den = Complex64::new(a * r, a * epsilon).sin() * p;
    num / den
}

/// Left-moving kernel -i pi e^{i pi x/2L} / (2L sin(pi (x - i eps)/2L)), equal to g_ff(-x).
pub fn g_minus(x: f64, l: f64, epsilon: f64) -> Complex64 {
    let p = 2.0 * l;
    let r = x - p * ((x + l) / p).floor();
    let a = PI / p;
    let num = Complex64::new(0.0, -PI) * Complex64::from_polar(1.0, a * r);
    let den = Complex64::new(a * r, -a * epsilon).sin() * p;
    num / den
}

/// Chiral packet components xi_j^+- sampled on the model grid.
#[derive(Debug, Clone, Serialize)]
pub struct WavePacketPair {
    pub x: Vec<f64>,
    pub xi1_plus: Vec<Complex64>,
    pub xi1_minus: Vec<Complex64>,
    pub xi2_plus: Vec<Complex64>,
    pub xi2_minus: Vec<Complex64>,
    /// Momentum offset entering as e^{+-ikx}.
    pub k: f64,
    /// Conformal weights (Delta+, Delta-).
    pub weights: (f64, f64),
}

/// Gaussian exp(-(x - c)^2 / 2 sigma^2) on the given nodes.
pub fn gaussian_packet(x: &[f64], center: f64, sigma: f64) -> Vec<Complex64> {
    x.iter().map(|&s| Complex64::new((-(s - center).powi(2) / (2.0 * sigma * sigma)).exp(), 0.0)).collect()
}

impl WavePacketPair {
    pub fn new(
        x: Vec<f64>,
        xi1_plus: Vec<Complex64>,
        xi1_minus: Vec<Complex64>,
        xi2_plus: Vec<Complex64>,
        xi2_minus: Vec<Complex64>,
        k: f64,
    ) -> Result<Self> {
        let n = x.len();
        if n < 4 {
            return Err(Error::InvalidInput("packets need at least 4 samples".into()));
        }
        for p in [&xi1_plus, &xi1_minus, &xi2_plus, &xi2_minus] {
            if p.len() != n {
                return Err(Error::InconsistentInput(format!("packet has {} samples, grid {}", p.len(), n)));
            }
            if !p.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::InvalidInput("packet samples must be finite".into()));
            }
        }
        let h = (x[n - 1] - x[0]) / (n - 1) as f64;
        if !(h > 0.0) || x.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
            return Err(Error::InvalidInput("packets must be sampled on a uniform increasing grid".into()));
        }
        if !k.is_finite() {
            return Err(Error::InvalidInput("k must be finite".into()));
        }
        Ok(Self { x, xi1_plus, xi1_minus, xi2_plus, xi2_minus, k, weights: (0.5, 0.0) })
    }

    /// Specular pair xi_2^+-(x) = xi_1^-+(-x) on a symmetric grid.
    pub fn specular(x: Vec<f64>, xi1_plus: Vec<Complex64>, xi1_minus: Vec<Complex64>, k: f64) -> Result<Self> {
        let rev = |v: &[Complex64]| v.iter().rev().copied().collect::<Vec<_>>();
        let (p2, m2) = (rev(&xi1_minus), rev(&xi1_plus));
        Self::new(x, xi1_plus, xi1_minus, p2, m2, k)
    }

    pub fn with_weights(mut self, plus: f64, minus: f64) -> Self {
        self.weights = (plus, minus);
        self
    }

    /// True iff xi_2^+-(x) = xi_1^-+(-x) within 1e-12 on the (symmetric) grid.
    pub fn is_specular(&self) -> bool {
        let n = self.x.len();
        let sym = (0..n).all(|i| (self.x[i] + self.x[n - 1 - i]).abs() <= 1e-12 * self.x[n - 1].abs());
        sym && (0..n).all(|i| {
            (self.xi2_plus[i] - self.xi1_minus[n - 1 - i]).norm() <= 1e-12
                && (self.xi2_minus[i] - self.xi1_plus[n - 1 - i]).norm() <= 1e-12
        })
    }

    /// int |xi_j^+|^2 + |xi_j^-|^2 dx.
    pub fn norm_squared(&self, j: usize) -> f64 {
        let (p, m) = if j == 1 { (&self.xi1_plus, &self.xi1_minus) } else { (&self.xi2_plus, &self.xi2_minus) };
        let h = self.x[1] - self.x[0];
        let y: Vec<f64> = p.iter().zip(m).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect();
        simpson(&y, h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMethod {
    /// Convolution on the unfolded circle with graded panels around the kernel peak.
    Unfolded,
    /// Literal tensor-product Gauss-Legendre rule in (x1, x2).
    TensorGauss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapOptions {
    /// Largest regularization of the sweep; default 4 L/(N - 1).
    pub epsilon: Option<f64>,
    /// Gauss-Legendre nodes per panel (tensor rule: per axis).
    pub nodes: usize,
    pub method: OverlapMethod,
    pub casimir_phase: f64,
    /// Samples per half circle of the mapped packets.
    pub samples: usize,
}

impl Default for OverlapOptions {
    fn default() -> Self {
        Self { epsilon: None, nodes: 128, method: OverlapMethod::Unfolded, casimir_phase: 0.0, samples: 4097 }
    }
}

/// Extrapolated overlap with the raw sweep.
#[derive(Debug, Clone, Serialize)]
pub struct OverlapResult {
    pub value: Complex64,
    /// (epsilon, value) at epsilon, epsilon/2, epsilon/4.
    pub sweep: Vec<(f64, Complex64)>,
    pub extrapolation_error: f64,
    pub quadrature_error: f64,
}

impl OverlapResult {
    pub fn modulus(&self) -> f64 {
        self.value.norm()
    }

    /// Combined error estimate of the reported value.
    pub fn tolerance(&self) -> f64 {
        self.extrapolation_error + self.quadrature_error
    }
}

/// Which overlap to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Overlap {
    Norm(usize),
    F(f64),
}

fn check_weights(p: &WavePacketPair) -> Result<()> {
    let (a, b) = p.weights;
    if !(a >= 0.0 && b >= 0.0) {
        return Err(Error::InvalidInput("conformal weights must be non-negative".into()));
    }
    for w in [a, b] {
        if 2.0 * w >= 2.0 {
            return Err(Error::NonIntegrableWeights(2.0 * w));
        }
    }
    Ok(())
}

/// Kernel G+(z - s)^{2 D+} G-(z + s)^{2 D-} on the circle of length 2L.
fn kernel(z: f64, s: f64, l: f64, eps: f64, w: (f64, f64)) -> Complex64 {
    let pow = |g: Complex64, e: f64| {
        if e == 0.0 {
            Complex64::new(1.0, 0.0)
        } else if e == 1.0 {
            g
        } else {
            g.powf(e)
        }
    };
    pow(g_ff(z - s, l, eps), 2.0 * w.0) * pow(g_minus(z + s, l, eps), 2.0 * w.1)
}

struct Interp2 {
    re: UniformInterp,
    im: UniformInterp,
}

impl Interp2 {
    fn new(a: f64, b: f64, v: &[Complex64]) -> Self {
        Self {
            re: UniformInterp::new(a, b, v.iter().map(|z| z.re).collect(), 3),
            im: UniformInterp::new(a, b, v.iter().map(|z| z.im).collect(), 3),
        }
    }
    fn eval(&self, x: f64) -> Complex64 {
        Complex64::new(self.re.eval(x), self.im.eval(x))
    }
}

/// A_j on the circle [y0, y0 + 2L), sampled per half.
struct CirclePacket {
    y0: f64,
    ymax: f64,
    period: f64,
    fbar_l: f64,
    plus: Interp2,
    minus: Interp2,
}

impl CirclePacket {
    fn eval(&self, u: f64) -> Complex64 {
        let r = u - self.period * ((u - self.y0) / self.period).floor();
        if r <= self.ymax {
            self.plus.eval(r)
        } else {
            self.minus.eval(self.fbar_l - r)
        }
    }
}

struct Prepared {
    a1: CirclePacket,
    a2: CirclePacket,
}

fn prepare(p: &WavePacketPair, map: &UnfoldedMap, pair: (usize, usize), samples: usize) -> Result<Prepared> {
    let cm = map.coordinate_map();
    let (y0, ymax) = (cm.y_min(), cm.y_max());
    let m = samples.max(17);
    let us: Vec<f64> = (0..m).map(|i| y0 + (ymax - y0) * i as f64 / (m - 1) as f64).collect();
    let xs: Vec<f64> = us.iter().map(|&u| cm.x(u)).collect();
    let d = p.weights.0 + p.weights.1;
    let jac: Vec<f64> = xs.iter().map(|&x| map.dfbar_at(x).powf(d - 1.0)).collect();
    let (a, b) = (p.x[0], p.x[p.x.len() - 1]);
    let build = |j: usize| -> CirclePacket {
        let (xp, xm) = if j == 1 { (&p.xi1_plus, &p.xi1_minus) } else { (&p.xi2_plus, &p.xi2_minus) };
        let (ip, im) = (Interp2::new(a, b, xp), Interp2::new(a, b, xm));
        let plus: Vec<Complex64> =
            xs.iter().zip(&jac).map(|(&x, &jw)| Complex64::from_polar(jw, -p.k * x) * ip.eval(x)).collect();
        let minus: Vec<Complex64> =
            xs.iter().zip(&jac).map(|(&x, &jw)| Complex64::from_polar(jw, p.k * x) * im.eval(x)).collect();
        CirclePacket {
            y0,
            ymax,
            period: 2.0 * map.length,
            fbar_l: map.fbar_l,
            plus: Interp2::new(y0, ymax, &plus),
            minus: Interp2::new(y0, ymax, &minus),
        }
    };
    Ok(Prepared { a1: build(pair.0), a2: build(pair.1) })
}

/// C(z) = int over one period of conj(A_2(u + z)) A_1(u), split at the
/// seams of both packets.
fn correlation(pr: &Prepared, z: f64, gl: &GaussLegendre) -> Complex64 {
    let a = &pr.a1;
    let per = a.period;
    let (lo, hi) = (a.y0, a.y0 + per);
    let wrap = |u: f64| lo + (u - lo).rem_euclid(per);
    let mut cuts = vec![lo, a.ymax, hi, wrap(lo - z), wrap(a.ymax - z)];
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|p, q| (*p - *q).abs() <= 1e-14 * per);
    let mut s = Complex64::new(0.0, 0.0);
    for w in cuts.windows(2) {
        let (u0, u1) = (w[0], w[1]);
        if u1 - u0 <= 0.0 {
            continue;
        }
        let (nodes, weights) = gl.on(u0, u1);
        for (u, wt) in nodes.iter().zip(&weights) {
            s += pr.a2.eval(u + z).conj() * pr.a1.eval(*u) * *wt;
        }
    }
    s
}

/// Panel edges on [s - L, s + L] graded geometrically towards the kernel
/// peaks and including the seams of C.
fn z_panels(s: f64, l: f64, eps: f64, minus_peak: bool) -> Vec<f64> {
    let per = 2.0 * l;
    let (lo, hi) = (s - l, s + l);
    let mut e = vec![lo, hi];
    let add_peak = |c: f64, e: &mut Vec<f64>| {
        let c = lo + (c - lo).rem_euclid(per);
        e.push(c);
        let mut d = eps / 8.0;
        while d < l {
            e.push(c - d);
            e.push(c + d);
            d *= 2.0;
        }
    };
    add_peak(s, &mut e);
    if minus_peak {
        add_peak(-s, &mut e);
    }
    for c in [0.0, l, -l] {
        e.push(lo + (c - lo).rem_euclid(per));
    }
    let mut e: Vec<f64> = e.into_iter().filter(|z| *z >= lo && *z <= hi).collect();
    e.sort_by(f64::total_cmp);
    e.dedup_by(|p, q| (*p - *q).abs() <= 1e-13 * l);
    e
}

fn unfolded_value(pr: &Prepared, map: &UnfoldedMap, s: f64, eps: f64, w: (f64, f64), c_nodes: usize, z_nodes: usize) -> Complex64 {
    let l = map.length;
    let glc = GaussLegendre::new(c_nodes);
    let glz = GaussLegendre::new(z_nodes);
    let edges = z_panels(s, l, eps, w.1 > 0.0);
    let mut total = Complex64::new(0.0, 0.0);
    for p in edges.windows(2) {
        let (nodes, weights) = glz.on(p[0], p[1]);
        for (z, wt) in nodes.iter().zip(&weights) {
            total += kernel(*z, s, l, eps, w) * correlation(pr, *z, &glc) * *wt;
        }
    }
    total / (2.0 * PI)
}

fn tensor_value(p: &WavePacketPair, map: &UnfoldedMap, pair: (usize, usize), s: f64, eps: f64, nodes: usize) -> Complex64 {
    let l = map.length;
    let gl = GaussLegendre::new(nodes);
    let (xs, ws) = gl.on(-0.5 * l, 0.5 * l);
    let (a, b) = (p.x[0], p.x[p.x.len() - 1]);
    let pick = |j: usize| if j == 1 { (&p.xi1_plus, &p.xi1_minus) } else { (&p.xi2_plus, &p.xi2_minus) };
    let (p1, m1) = pick(pair.0);
    let (p2, m2) = pick(pair.1);
    let (p1, m1, p2, m2) = (Interp2::new(a, b, p1), Interp2::new(a, b, m1), Interp2::new(a, b, p2), Interp2::new(a, b, m2));
    let d = p.weights.0 + p.weights.1;
    let f: Vec<f64> = xs.iter().map(|&x| map.fbar_at(x)).collect();
    let jw: Vec<f64> = xs.iter().zip(&ws).map(|(&x, &w)| w * map.dfbar_at(x).powf(d)).collect();
    let fl = map.fbar_l;
    let k = p.k;
    let mut total = Complex64::new(0.0, 0.0);
    for (i2, &x2) in xs.iter().enumerate() {
        let (c2p, c2m) = (p2.eval(x2).conj(), m2.eval(x2).conj());
        for (i1, &x1) in xs.iter().enumerate() {
            let (a1p, a1m) = (p1.eval(x1), m1.eval(x1));
            let (f2, f1) = (f[i2], f[i1]);
            let kern = |z: f64| kernel(z, s, l, eps, p.weights);
            let t = Complex64::from_polar(1.0, k * (x2 - x1)) * c2p * a1p * kern(f2 - f1)
                + Complex64::from_polar(1.0, k * (x2 + x1)) * c2p * a1m * kern(f2 + f1 - fl)
                + Complex64::from_polar(1.0, -k * (x2 + x1)) * c2m * a1p * kern(fl - f2 - f1)
                + Complex64::from_polar(1.0, -k * (x2 - x1)) * c2m * a1m * kern(f1 - f2);
            total += t * jw[i2] * jw[i1];
        }
    }
    total / (2.0 * PI)
}

/// Overlap at a single regularization, with a quadrature error estimate
/// from a run at half the node counts.
pub fn overlap_at_epsilon(p: &WavePacketPair, map: &UnfoldedMap, which: Overlap, epsilon: f64, opts: &OverlapOptions) -> Result<(Complex64, f64)> {
    check_weights(p)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if opts.nodes < 4 {
        return Err(Error::InvalidInput("at least 4 quadrature nodes are required".into()));
    }
    let l = map.length;
    if (p.x[p.x.len() - 1] - 0.5 * l).abs() > 1e-9 * l || (p.x[0] + 0.5 * l).abs() > 1e-9 * l {
        return Err(Error::InconsistentInput("packets and map cover different intervals".into()));
    }
    let (pair, s, phase) = match which {
        Overlap::Norm(j) if j == 1 || j == 2 => ((j, j), 0.0, Complex64::new(1.0, 0.0)),
        Overlap::Norm(j) => return Err(Error::InvalidInput(format!("packet index {j} is not 1 or 2"))),
        Overlap::F(t) => {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::InvalidInput("t must be finite and non-negative".into()));
            }
            ((1, 2), map.vbar0 * t, Complex64::from_polar(1.0, -opts.casimir_phase * t))
        }
    };
    let (v, lo) = match opts.method {
        OverlapMethod::Unfolded => {
            let pr = prepare(p, map, pair, opts.samples)?;
            let hi = unfolded_value(&pr, map, s, epsilon, p.weights, opts.nodes, 20);
            let lo = unfolded_value(&pr, map, s, epsilon, p.weights, opts.nodes / 2, 10);
            (hi, lo)
        }
        OverlapMethod::TensorGauss => {
            (tensor_value(p, map, pair, s, epsilon, opts.nodes), tensor_value(p, map, pair, s, epsilon, opts.nodes / 2))
        }
    };
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::QuadratureFailure { tol: 0.0, estimate: f64::INFINITY });
    }
    Ok((v * phase, (v - lo).norm()))
}

fn extrapolated(p: &WavePacketPair, map: &UnfoldedMap, which: Overlap, opts: &OverlapOptions) -> Result<OverlapResult> {
    let n = (map.x.len() + 1) / 2;
    let eps = opts.epsilon.unwrap_or(4.0 * map.length / (n - 1) as f64);
    let mut sweep = Vec::with_capacity(3);
    let mut qerr: f64 = 0.0;
    for e in [eps, 0.5 * eps, 0.25 * eps] {
        let (v, q) = overlap_at_epsilon(p, map, which, e, opts)?;
        sweep.push((e, v));
        qerr = qerr.max(q);
    }
    // First-order error model, then one more Richardson level.
    let r1 = sweep[1].1 * 2.0 - sweep[0].1;
    let r2 = sweep[2].1 * 2.0 - sweep[1].1;
    let value = (r2 * 4.0 - r1) / 3.0;
    Ok(OverlapResult { value, sweep, extrapolation_error: (value - r2).norm(), quadrature_error: qerr })
}

/// <Phi_j|Phi_j>, epsilon-extrapolated.
pub fn overlap_norm(p: &WavePacketPair, map: &UnfoldedMap, j: usize, opts: &OverlapOptions) -> Result<OverlapResult> {
    extrapolated(p, map, Overlap::Norm(j), opts)
}

/// F(t) = <Phi_2| e^{-iHt} |Phi_1>, epsilon-extrapolated.
pub fn overlap_f(p: &WavePacketPair, map: &UnfoldedMap, t: f64, opts: &OverlapOptions) -> Result<OverlapResult> {
    extrapolated(p, map, Overlap::F(t), opts)
}
