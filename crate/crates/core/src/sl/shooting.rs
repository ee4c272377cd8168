//! Scaled Prüfer shooting.
//!
//! With u = r sin(theta) and p u' = S r cos(theta) the phase obeys
//! theta' = (S/p) cos^2 + ((lambda w + q)/S) sin^2. Neumann ends pin theta
//! to pi/2 at x = a, and the n-th eigenfunction ends at pi/2 + n pi.

use super::{Method, SLSpectrum, SturmLiouville};
use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions};
use crate::quadrature::GaussLegendre;
use crate::roots::brent;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingOptions {
    /// Relative tolerance on each eigenvalue.
    pub tol: f64,
    pub ode_rtol: f64,
    pub ode_atol: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { tol: 1e-11, ode_rtol: 1e-12, ode_atol: 1e-13 }
    }
}

struct Phase<'a, S: SturmLiouville + ?Sized> {
    sl: &'a S,
    scale: f64,
    wp_mean: f64,
    opts: ShootingOptions,
}

impl<S: SturmLiouville + ?Sized> Phase<'_, S> {
    fn theta_end(&self, lambda: f64, s: f64, rtol: f64) -> Result<f64> {
        let (a, b) = self.sl.interval();
        let sl = self.sl;
        let o = OdeOptions { rtol, atol: self.opts.ode_atol, h_min: (b - a) * 1e-12, max_steps: 5_000_000 };
        let y = integrate(
            |x, th: &[f64; 1]| {
                let (sn, cs) = th[0].sin_cos();
                [s / sl.p(x) * cs * cs + (lambda * sl.w(x) + sl.q(x)) / s * sn * sn]
            },
            a,
            [FRAC_PI_2],
            b,
            o,
        )?;
        Ok(y[0])
    }

    fn scaling(&self, lambda: f64) -> f64 {
        (lambda.abs().max(self.scale) * self.wp_mean).sqrt()
    }
}

/// Lower bound min(-q/w) on the spectrum, from the Rayleigh quotient.
fn spectral_floor<S: SturmLiouville + ?Sized>(sl: &S) -> f64 {
    if sl.q_is_zero() {
        return 0.0;
    }
    let (a, b) = sl.interval();
    (0..=512)
        .map(|i| {
            let x = a + (b - a) * i as f64 / 512.0;
            -sl.q(x) / sl.w(x)
        })
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min)
}

fn one_eigenvalue<S: SturmLiouville + ?Sized>(ph: &Phase<S>, n: usize, floor: f64) -> Result<(f64, f64)> {
    let target = FRAC_PI_2 + n as f64 * PI;
    let guess = floor.max(0.0) + ph.scale * (n as f64).powi(2);
    let s = ph.scaling(guess);
    let rtol = ph.opts.ode_rtol;
    let f = |l: f64| ph.theta_end(l, s, rtol).map(|t| t - target);
    if n == 0 && ph.sl.q_is_zero() {
        // The constant function is an exact eigenfunction at lambda = 0.
        if f(0.0)?.abs() <= 1e-9 {
            return Ok((0.0, 0.0));
        }
    }
    let mut lo = floor - 1e-3 * ph.scale - 1e-12;
    let flo = f(lo)?;
    if flo >= 0.0 {
        return Err(Error::Bracket { lambda: lo });
    }
    let mut hi = guess.max(lo) + ph.scale * (2.0 * n as f64 + 1.0);
    let mut fhi = f(hi)?;
    let mut guard = 0;
    while fhi <= 0.0 {
        lo = hi;
        hi = lo + 2.0 * (hi - floor).abs().max(ph.scale);
        fhi = f(hi)?;
        guard += 1;
        if guard > 200 || !hi.is_finite() {
            return Err(Error::Bracket { lambda: hi });
        }
    }
    let xtol = ph.opts.tol * guess.abs().max(ph.scale);
    let mut err = None;
    let lam = brent(
        |l| match f(l) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        xtol,
        200,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    // Transport the ODE error to lambda through the local slope.
    let d = 1e-7 * lam.abs().max(ph.scale);
    let f0 = f(lam)?;
    let slope = (f(lam + d)? - f0) / d;
    let loose = ph.theta_end(lam, s, rtol * 10.0)? - target;
    let e = if slope > 0.0 { ((loose - f0).abs() + f0.abs()) / slope } else { f64::NAN };
    Ok((lam, e + xtol))
}

/// Eigenvalues lambda_0..lambda_{n_max} by shooting.
pub fn solve_spectrum_shooting<S: SturmLiouville + ?Sized>(sl: &S, n_max: usize, opts: &ShootingOptions) -> Result<SLSpectrum> {
    let (a, b) = sl.interval();
    let gl = GaussLegendre::new(16);
    let wp_mean = gl.composite(|x| sl.w(x) * sl.p(x), a, b, 8) / (b - a);
    let ph = Phase { sl, scale: sl.lambda_scale(), wp_mean, opts: *opts };
    let floor = spectral_floor(sl);
    let res: Vec<(f64, f64)> = (0..=n_max)
        .into_par_iter()
        .map(|n| one_eigenvalue(&ph, n, floor))
        .collect::<Result<Vec<_>>>()?;
    let (lambdas, errors) = res.into_iter().unzip();
    Ok(SLSpectrum::new(lambdas, errors, Method::Shooting))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{ProfileFn, SystemGeometry, TLLModel};
    use crate::sl::{assemble_coefficients, solve_spectrum_fd, FdOptions};

    #[test]
    fn constant_case() {
        let m = TLLModel::constant(1.0, 1.0, 1.0, 33).unwrap();
        let c = assemble_coefficients(&m).unwrap();
        let s = solve_spectrum_shooting(&c, 12, &ShootingOptions::default()).unwrap();
        assert_eq!(s.lambdas[0], 0.0);
        for n in 1..=12 {
            assert!((s.energies[n] - PI * n as f64).abs() / (PI * n as f64) < 1e-10);
        }
    }

    #[test]
    fn even_velocity_gives_linear_spectrum() {
        let g = SystemGeometry::new(1.0, 33).unwrap();
        let v = ProfileFn::series(vec![1.0, 0.0, 0.5], vec![], 1.0);
        let m = TLLModel::new(g, v, ProfileFn::constant(1.0, 1.0)).unwrap();
        let c = assemble_coefficients(&m).unwrap();
        let s = solve_spectrum_shooting(&c, 8, &ShootingOptions::default()).unwrap();
        for n in 1..=8 {
            let e = PI * n as f64 * c.v0;
            assert!((s.energies[n] - e).abs() / e < 1e-9, "{n}");
        }
    }

    #[test]
    fn agrees_with_fd_with_potential() {
        let g = SystemGeometry::new(1.0, 33).unwrap();
        let m = TLLModel::new(g, ProfileFn::series(vec![1.0, 0.0, 0.3], vec![], 1.0), ProfileFn::exp_quadratic(1.0, 0.5, 1.0))
            .unwrap()
            .with_q(ProfileFn::series(vec![2.0, 0.0, -4.0], vec![], 1.0))
            .unwrap();
        let c = assemble_coefficients(&m).unwrap();
        let a = solve_spectrum_shooting(&c, 6, &ShootingOptions::default()).unwrap();
        let b = solve_spectrum_fd(&c, 6, &FdOptions { base_points: 513, ..Default::default() }).unwrap();
        for n in 0..=6 {
            let tol = a.errors[n] + b.errors[n] + 1e-9 * a.lambdas[n].abs();
            assert!((a.lambdas[n] - b.lambdas[n]).abs() <= tol, "{n}: {} {} tol {tol}", a.lambdas[n], b.lambdas[n]);
        }
    }
}
