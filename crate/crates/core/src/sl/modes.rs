//! Sampled eigenfunctions and their companions U_n with U_n' = w u_n.

use super::{SLCoefficients, SLSpectrum, SturmLiouville};
use crate::error::{Error, Result};
use crate::interp::UniformInterp;
use crate::ode::{integrate_through, OdeOptions};
use crate::profiles::{parity_of_samples, Parity, ParityReport};
use crate::quadrature::{cumulative_quadratic, simpson};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct EigenMode {
    pub n: usize,
    pub lambda: f64,
    pub x: Vec<f64>,
    /// Normalized so that int w u^2 = 1 and u(-L/2) > 0.
    pub u: Vec<f64>,
    /// U(-L/2) = 0, U' = w u.
    pub big_u: Vec<f64>,
    pub parity: ParityReport,
    pub zero_count: usize,
}

impl EigenMode {
    pub fn energy(&self) -> f64 {
        self.lambda.max(0.0).sqrt()
    }

    /// Cubic interpolation of u between grid nodes.
    pub fn value_at(&self, x: f64) -> f64 {
        UniformInterp::new(self.x[0], self.x[self.x.len() - 1], self.u.clone(), 3).eval(x)
    }

    pub fn parity_tag(&self) -> Parity {
        self.parity.parity
    }

    /// Build a mode from samples on a uniform grid; normalizes against `w`.
    pub fn from_samples(n: usize, lambda: f64, x: Vec<f64>, mut u: Vec<f64>, w: &[f64]) -> Result<Self> {
        let h = x[1] - x[0];
        let wu2: Vec<f64> = u.iter().zip(w).map(|(u, w)| w * u * u).collect();
        let norm = simpson(&wu2, h);
        if !(norm > 1e-14) {
            return Err(Error::Normalization { index: n, norm });
        }
        Self::finish(n, lambda, x, &mut u, w, norm)
    }

    /// Like `from_samples` with an externally computed weighted norm.
    pub fn with_norm(n: usize, lambda: f64, x: Vec<f64>, mut u: Vec<f64>, w: &[f64], norm: f64) -> Result<Self> {
        if !(norm > 1e-14) {
            return Err(Error::Normalization { index: n, norm });
        }
        Self::finish(n, lambda, x, &mut u, w, norm)
    }

    fn finish(n: usize, lambda: f64, x: Vec<f64>, u: &mut [f64], w: &[f64], norm: f64) -> Result<Self> {
        let s = norm.sqrt();
        let first = u.iter().find(|v| **v != 0.0).copied().unwrap_or(1.0);
        let sign = if first < 0.0 { -1.0 } else { 1.0 };
        u.iter_mut().for_each(|v| *v *= sign / s);
        let h = x[1] - x[0];
        let wu: Vec<f64> = u.iter().zip(w).map(|(u, w)| if w.is_finite() { w * u } else { 0.0 }).collect();
        let big_u = cumulative_quadratic(&wu, h);
        let parity = parity_of_samples(u, 1e-6);
        Ok(Self { n, lambda, x, u: u.to_vec(), big_u, parity, zero_count: zero_count(u) })
    }
}

/// Sign changes across the samples, skipping exact zeros.
pub fn zero_count(u: &[f64]) -> usize {
    let mut last = 0.0f64;
    let mut c = 0;
    for &v in u {
        if v != 0.0 {
            if last != 0.0 && v.signum() != last.signum() {
                c += 1;
            }
            last = v;
        }
    }
    c
}

/// Integrate the SL equation at `lambda` through uniform `nodes`.
pub fn eigenfunction<S: SturmLiouville + ?Sized>(sl: &S, nodes: &[f64], lambda: f64, n: usize) -> Result<EigenMode> {
    let l = nodes[nodes.len() - 1] - nodes[0];
    let o = OdeOptions { rtol: 1e-11, atol: 1e-13, h_min: l * 1e-12, max_steps: 5_000_000 };
    let ys = integrate_through(
        |x, y: &[f64; 2]| [y[1] / sl.p(x), -(lambda * sl.w(x) + sl.q(x)) * y[0]],
        nodes,
        [1.0, 0.0],
        o,
    )?;
    let u: Vec<f64> = ys.iter().map(|y| y[0]).collect();
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Normalization { index: n, norm: f64::NAN });
    }
    let w: Vec<f64> = nodes.iter().map(|&x| sl.w(x)).collect();
    EigenMode::from_samples(n, lambda, nodes.to_vec(), u, &w)
}

/// Eigenfunctions for every eigenvalue of `spectrum` on the model grid.
pub fn eigenfunctions(coeffs: &SLCoefficients, spectrum: &SLSpectrum) -> Result<Vec<EigenMode>> {
    let nodes = coeffs.model.geometry.nodes();
    spectrum
        .lambdas
        .par_iter()
        .enumerate()
        .map(|(n, &l)| eigenfunction(coeffs, &nodes, l, n))
        .collect()
}

/// Gram matrix int w u_n u_m by Simpson on the shared grid.
pub fn gram_matrix(modes: &[EigenMode], w: &[f64]) -> Vec<Vec<f64>> {
    let h = modes[0].x[1] - modes[0].x[0];
    modes
        .iter()
        .map(|a| {
            modes
                .iter()
                .map(|b| {
                    let f: Vec<f64> = a.u.iter().zip(&b.u).zip(w).map(|((x, y), w)| w * x * y).collect();
                    simpson(&f, h)
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::TLLModel;
    use crate::sl::{assemble_coefficients, solve_spectrum_shooting, ShootingOptions};
    use std::f64::consts::PI;

    #[test]
    fn constant_case_modes() {
        let m = TLLModel::constant(1.0, 1.0, 1.0, 257).unwrap();
        let c = assemble_coefficients(&m).unwrap();
        let s = solve_spectrum_shooting(&c, 4, &ShootingOptions::default()).unwrap();
        let modes = eigenfunctions(&c, &s).unwrap();
        let u2 = &modes[2];
        assert_eq!(u2.zero_count, 2);
        assert_eq!(u2.parity.parity, Parity::Even);
        for (x, u) in u2.x.iter().zip(&u2.u) {
            let exact = 2f64.sqrt() * (2.0 * PI * (1.0 + 2.0 * x) / 2.0).cos();
            assert!((u - exact).abs() < 1e-8);
        }
        let u0 = &modes[0];
        assert_eq!(u0.zero_count, 0);
        assert!(u0.u.iter().all(|v| (v - 1.0).abs() < 1e-12));
        // U_0(x) = x + 1/2.
        for (x, uu) in u0.x.iter().zip(&u0.big_u) {
            assert!((uu - (x + 0.5)).abs() < 1e-12);
        }
        assert_eq!(modes[3].parity.parity, Parity::Odd);
    }
}
