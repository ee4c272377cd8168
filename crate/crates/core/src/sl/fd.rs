//! Finite-volume discretization with Richardson extrapolation.

use super::{Method, SLSpectrum, SturmLiouville};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_tanh_sinh_offsets, GaussLegendre};
use crate::tridiag::SymTridiag;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Uniform,
    /// x = (L/2) sin(pi xi / 2) with uniform xi; clusters nodes at the ends.
    Graded,
    /// Graded when the problem has singular ends, uniform otherwise.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdOptions {
    /// Node count of the coarsest level (odd).
    pub base_points: usize,
    /// Number of nested levels; level l has (base - 1) 2^l + 1 nodes.
    pub levels: usize,
    pub grid: GridKind,
    /// Relative tolerance on the extrapolated error estimate.
    pub tol: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self { base_points: 1025, levels: 3, grid: GridKind::Auto, tol: 1e-6 }
    }
}

/// Node placement x(t) for t in [0, 1], uniform or end-graded.
#[derive(Clone, Copy)]
struct Mapping {
    a: f64,
    l: f64,
    graded: bool,
}

impl Mapping {
    /// Position, distances to both ends and dx/dt, from the distances
    /// (ta, tb) of t to 0 and 1.
    fn point(&self, ta: f64, tb: f64) -> (f64, f64, f64, f64) {
        let (da, db, dxdt) = if self.graded {
            let hp = std::f64::consts::FRAC_PI_2;
            let (sa, sb) = ((hp * ta).sin(), (hp * tb).sin());
            let t = if ta < tb { ta } else { 1.0 - tb };
            (self.l * sa * sa, self.l * sb * sb, hp * self.l * (std::f64::consts::PI * t).sin())
        } else {
            (self.l * ta, self.l * tb, self.l)
        };
        let x = if da < db { self.a + da } else { self.a + self.l - db };
        (x, da, db, dxdt)
    }

    /// int f dx over t in [t0, t1], with f given the end distances.
    fn integrate(&self, t0: f64, t1: f64, singular: bool, gl: &GaussLegendre, f: &impl Fn(f64, f64, f64) -> f64) -> f64 {
        if singular && (t0 == 0.0 || t1 == 1.0) {
            let left = t0 == 0.0;
            let r = integrate_tanh_sinh_offsets(
                |_, da, db| {
                    let (ta, tb) = if left { (da, 1.0 - da) } else { (1.0 - (1.0 - t1) - db, (1.0 - t1) + db) };
                    let (x, xa, xb, j) = self.point(ta, tb);
                    f(x, xa, xb) * j
                },
                t0,
                t1,
                1e-14,
            );
            if let Ok(r) = r {
                return r.value;
            }
        }
        gl.integrate(
            |t| {
                let (x, xa, xb, j) = self.point(t, 1.0 - t);
                f(x, xa, xb) * j
            },
            t0,
            t1,
        )
    }
}

/// Eigenvalues 0..=n_max of one discretization level with n nodes.
fn level_eigenvalues<S: SturmLiouville + ?Sized>(sl: &S, map: Mapping, n: usize, n_max: usize) -> Vec<f64> {
    let gl = GaussLegendre::new(4);
    let sing = sl.singular_ends();
    let t = |i: usize| i as f64 / (n - 1) as f64;
    let inv_p = |_: f64, da: f64, db: f64| 1.0 / sl.p_offsets(da, db);
    let w = |_: f64, da: f64, db: f64| sl.w_offsets(da, db);
    let kappa: Vec<f64> = (0..n - 1)
        .into_par_iter()
        .map(|i| 1.0 / map.integrate(t(i), t(i + 1), sing, &gl, &inv_p))
        .collect();
    let cell = |i: usize| -> (f64, f64) {
        let lo = if i == 0 { 0.0 } else { (i as f64 - 0.5) / (n - 1) as f64 };
        let hi = if i == n - 1 { 1.0 } else { (i as f64 + 0.5) / (n - 1) as f64 };
        (lo, hi)
    };
    let mass: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (lo, hi) = cell(i);
            map.integrate(lo, hi, sing, &gl, &w)
        })
        .collect();
    if sl.q_is_zero() {
        // A = C^T C with bidiagonal C; bisection on the zero-diagonal
        // Golub–Kahan form gives singular values to high relative accuracy.
        let mut off = Vec::with_capacity(2 * n - 2);
        for i in 0..n - 1 {
            let s = kappa[i].sqrt();
            off.push(-s / mass[i].sqrt());
            off.push(s / mass[i + 1].sqrt());
        }
        let t = SymTridiag::new(vec![0.0; 2 * n - 1], off);
        let mut out = vec![0.0];
        let sig: Vec<f64> = (n..n + n_max).into_par_iter().map(|k| t.eigenvalue(k)).collect();
        out.extend(sig.iter().map(|s| s * s));
        return out;
    }
    let qf = |x: f64, _: f64, _: f64| sl.q(x);
    let qint: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (lo, hi) = cell(i);
            map.integrate(lo, hi, false, &gl, &qf)
        })
        .collect();
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let k = if i > 0 { kappa[i - 1] } else { 0.0 } + if i + 1 < n { kappa[i] } else { 0.0 };
            (k - qint[i]) / mass[i]
        })
        .collect();
    let off: Vec<f64> = (0..n - 1).map(|i| -kappa[i] / (mass[i] * mass[i + 1]).sqrt()).collect();
    let t = SymTridiag::new(diag, off);
    (0..=n_max).into_par_iter().map(|k| t.eigenvalue(k)).collect()
}

/// Richardson table over levels whose spacing halves each time.
/// Returns the extrapolated value and the difference of the last two
/// extrapolants as error estimate.
pub(crate) fn richardson(values: &[f64]) -> (f64, f64) {
    let l = values.len();
    let mut prev: Vec<f64> = values.to_vec();
    let mut last_two = (values[l - 1], f64::NAN);
    for k in 1..l {
        let f = 4f64.powi(k as i32) - 1.0;
        let cur: Vec<f64> = (1..prev.len()).map(|j| prev[j] + (prev[j] - prev[j - 1]) / f).collect();
        last_two = (cur[cur.len() - 1], prev[prev.len() - 1]);
        prev = cur;
    }
    let err = if l >= 2 { (last_two.0 - last_two.1).abs() } else { f64::NAN };
    (last_two.0, err)
}

/// Solve for lambda_0..lambda_{n_max} on nested grids and extrapolate.
pub fn solve_spectrum_fd<S: SturmLiouville + ?Sized>(sl: &S, n_max: usize, opts: &FdOptions) -> Result<SLSpectrum> {
    if opts.base_points < 5 || opts.base_points % 2 == 0 || opts.levels == 0 {
        return Err(Error::InvalidInput("base_points must be odd >= 5 and levels >= 1".into()));
    }
    if n_max + 2 > opts.base_points {
        return Err(Error::InvalidInput(format!("n_max = {n_max} needs more than {} grid points", opts.base_points)));
    }
    let (a, b) = sl.interval();
    let graded = match opts.grid {
        GridKind::Uniform => false,
        GridKind::Graded => true,
        GridKind::Auto => sl.singular_ends(),
    };
    let per_level: Vec<Vec<f64>> = (0..opts.levels)
        .map(|l| {
            let n = (opts.base_points - 1) * (1 << l) + 1;
            level_eigenvalues(sl, Mapping { a, l: b - a, graded }, n, n_max)
        })
        .collect();
    let scale = sl.lambda_scale();
    let mut lambdas = Vec::with_capacity(n_max + 1);
    let mut errors = Vec::with_capacity(n_max + 1);
    for k in 0..=n_max {
        let col: Vec<f64> = per_level.iter().map(|v| v[k]).collect();
        let (val, err) = if opts.levels > 1 { richardson(&col) } else { (col[0], f64::NAN) };
        let err = if k == 0 && sl.q_is_zero() { 0.0 } else { err };
        if err > opts.tol * val.abs().max(scale) {
            return Err(Error::Convergence { index: k, estimate: err / val.abs().max(scale), tol: opts.tol });
        }
        lambdas.push(val);
        errors.push(err);
    }
    Ok(SLSpectrum::new(lambdas, errors, Method::FiniteDifference))
}
