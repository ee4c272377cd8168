//! Weyl asymptotics and exact Bohr-Sommerfeld diagnostics in Liouville
//! normal form -u'' + V u = Lambda u with Neumann ends, V = qhat / v0^2.
//!
//! The quantization condition phi(Lambda_n) = pi n with
//! phi ~ sqrt(Lambda) L (1 - a1/2Lambda - (a2 + Delta)/8Lambda^2) means the
//! phase shift pi n - L sqrt(Lambda_n) behaves as -a1 L / 2 sqrt(Lambda_n)
//! and, when a1 = 0, as -L (a2 + Delta) / 8 Lambda_n^(3/2).
//!
//! The boundary term enters with the sign of a2: first-order perturbation
//! theory gives <u_n^2 V> = a1 + Delta L^2 / (2 pi n)^2 + ..., so the
//! correction is phi1 = -(1/8) int V'' (Lambda - V)^(-3/2) ~ -L Delta / 8 Lambda^(3/2).

use crate::error::{Error, Result};
use crate::quadrature::simpson;
use crate::sl::liouville::second_derivative;
use crate::sl::{LiouvilleForm, SLCoefficients, SLSpectrum};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeylCheck {
    /// Least-squares slope of n against E_n over the upper half of the window.
    pub slope: f64,
    /// L / (pi v0).
    pub target: f64,
    /// |slope - target| / target.
    pub relative_gap: f64,
    /// |n/E_n - target| / target at the last computed n.
    pub ratio_gap: f64,
}

fn slope_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let s = sxy / sxx;
    (s, my - s * mx)
}

fn weyl_from(energies: &[f64], target: f64) -> Result<WeylCheck> {
    let n = energies.len();
    if n < 50 {
        return Err(Error::InsufficientModes(n));
    }
    let idx: Vec<f64> = (n / 2..n).map(|i| i as f64).collect();
    let (slope, _) = slope_fit(&energies[n / 2..], &idx);
    let last = n - 1;
    Ok(WeylCheck {
        slope,
        target,
        relative_gap: (slope - target).abs() / target,
        ratio_gap: (last as f64 / energies[last] - target).abs() / target,
    })
}

/// Compare the growth of E_n with (1/pi) int sqrt(w/p) = L/(pi v0).
pub fn weyl_check(coeffs: &SLCoefficients, spectrum: &SLSpectrum) -> Result<WeylCheck> {
    weyl_from(&spectrum.energies, coeffs.length() / (PI * coeffs.v0))
}

/// Samples of V = qhat / v0^2 and the grid spacing.
fn v_samples(form: &LiouvilleForm) -> (&[f64], f64) {
    (&form.potential, form.spacing())
}

/// phi0 = int sqrt(Lambda - V) and phi1 = -(1/8) int V'' (Lambda - V)^(-3/2).
pub fn bs_phase(form: &LiouvilleForm, lambda: f64) -> Result<(f64, f64)> {
    let (v, h) = v_samples(form);
    let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lambda > vmax) {
        return Err(Error::TurningPoint { lambda, vmax });
    }
    let f0: Vec<f64> = v.iter().map(|v| (lambda - v).sqrt()).collect();
    let (d2, _) = second_derivative(v, h);
    let f1: Vec<f64> = v.iter().zip(&d2).map(|(v, d)| d * (lambda - v).powf(-1.5)).collect();
    Ok((simpson(&f0, h), -simpson(&f1, h) / 8.0))
}

/// Third-order one-sided first derivatives at both ends.
fn end_slopes(v: &[f64], h: f64) -> (f64, f64) {
    let n = v.len();
    let left = (-11.0 * v[0] + 18.0 * v[1] - 9.0 * v[2] + 2.0 * v[3]) / (6.0 * h);
    let right = (11.0 * v[n - 1] - 18.0 * v[n - 2] + 9.0 * v[n - 3] - 2.0 * v[n - 4]) / (6.0 * h);
    (left, right)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentReport {
    pub a1: f64,
    pub a2: f64,
    pub delta: f64,
    pub tol: f64,
    /// |a1| <= tol and |a2 + Delta| <= tol.
    pub pwt_moment_ok: bool,
}

/// Mean and second moment of V and the boundary term Delta.
pub fn moment_conditions(form: &LiouvilleForm) -> MomentReport {
    let (v, h) = v_samples(form);
    let l = form.length();
    let a1 = simpson(v, h) / l;
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    let a2 = simpson(&sq, h) / l;
    let (dl, dr) = end_slopes(v, h);
    let delta = (dr - dl) / l;
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-6 * (vmax * l * l).max(1.0);
    MomentReport { a1, a2, delta, tol, pwt_moment_ok: a1.abs() <= tol && (a2 + delta).abs() <= tol }
}

#[derive(Debug, Clone, Serialize)]
pub struct WKBReport {
    pub weyl_slope: f64,
    pub weyl_target: f64,
    pub a1: f64,
    pub a2: f64,
    pub delta: f64,
    pub pwt_moment_ok: bool,
    /// Lambda_n = lambda_n / v0^2.
    pub big_lambdas: Vec<f64>,
    /// phi0 + phi1 - pi n where no turning point exists, else None.
    pub phase_residuals: Vec<Option<f64>>,
    /// pi n - L sqrt(Lambda_n), the part of the phase carried by V.
    pub phase_shifts: Vec<f64>,
    /// Fitted exponent of |phase shift| against Lambda over `fit_range`.
    pub decay_exponent: Option<f64>,
    /// Smallest n0 with round(L sqrt(Lambda_n)/pi) stepping by one for all n > n0.
    pub n0_estimate: Option<usize>,
}

/// Exponent p of |r_n| ~ C Lambda_n^p by least squares in log-log.
pub fn decay_exponent(big_lambdas: &[f64], residuals: &[f64], range: std::ops::RangeInclusive<usize>) -> Option<f64> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for n in range {
        if n < residuals.len() && residuals[n] != 0.0 && big_lambdas[n] > 0.0 {
            xs.push(big_lambdas[n].ln());
            ys.push(residuals[n].abs().ln());
        }
    }
    (xs.len() >= 2).then(|| slope_fit(&xs, &ys).0)
}

fn n0_from(big_lambdas: &[f64], l: f64) -> Option<usize> {
    let m: Vec<i64> = big_lambdas.iter().map(|x| (l * x.max(0.0).sqrt() / PI).round() as i64).collect();
    let n = m.len();
    if n < 2 {
        return None;
    }
    let mut n0 = n - 1;
    while n0 > 0 && m[n0] - m[n0 - 1] == 1 {
        n0 -= 1;
    }
    // The step into n0 fails, so steps hold for every n >= n0.
    (n0 < n - 1).then_some(n0.saturating_sub(1))
}

/// Full report for a normal-form potential and the spectrum of its Neumann problem.
pub fn wkb_report(form: &LiouvilleForm, spectrum: &SLSpectrum, fit_range: std::ops::RangeInclusive<usize>) -> Result<WKBReport> {
    let v0 = form.v0;
    let l = form.length();
    let big: Vec<f64> = spectrum.lambdas.iter().map(|x| x / (v0 * v0)).collect();
    let weyl = weyl_from(&spectrum.energies, l / (PI * v0))?;
    let mom = moment_conditions(form);
    let phase_residuals = big
        .iter()
        .enumerate()
        .map(|(n, &lam)| bs_phase(form, lam).ok().map(|(a, b)| a + b - PI * n as f64))
        .collect();
    let phase_shifts: Vec<f64> = big.iter().enumerate().map(|(n, &lam)| PI * n as f64 - l * lam.max(0.0).sqrt()).collect();
    Ok(WKBReport {
        weyl_slope: weyl.slope,
        weyl_target: weyl.target,
        a1: mom.a1,
        a2: mom.a2,
        delta: mom.delta,
        pwt_moment_ok: mom.pwt_moment_ok,
        decay_exponent: decay_exponent(&big, &phase_shifts, fit_range),
        n0_estimate: n0_from(&big, l),
        big_lambdas: big,
        phase_residuals,
        phase_shifts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl::{solve_spectrum_fd, FdOptions};

    fn form(n: usize, f: impl Fn(f64) -> f64) -> LiouvilleForm {
        let q: Vec<f64> = (0..n).map(|i| f(-0.5 + i as f64 / (n - 1) as f64)).collect();
        LiouvilleForm::from_potential(-0.5, 0.5, 1.0, q).unwrap()
    }

    #[test]
    fn free_phase_is_exact() {
        let f = form(257, |_| 0.0);
        for n in 1..5 {
            let lam = (PI * n as f64).powi(2);
            let (p0, p1) = bs_phase(&f, lam).unwrap();
            assert!((p0 - PI * n as f64).abs() < 1e-13 && p1 == 0.0);
        }
        let m = moment_conditions(&f);
        assert!(m.pwt_moment_ok && m.a1 == 0.0 && m.a2 == 0.0 && m.delta == 0.0);
    }

    #[test]
    fn turning_point_rejected() {
        let f = form(65, |y| 10.0 * y * y);
        assert!(matches!(bs_phase(&f, 1.0), Err(Error::TurningPoint { .. })));
    }

    #[test]
    fn moments_of_polynomial() {
        // V = -12 + 144 y^2: a1 = 0, a2 = 115.2, Delta = 288.
        let f = form(1025, |y| -12.0 + 144.0 * y * y);
        let m = moment_conditions(&f);
        assert!(m.a1.abs() < 1e-12);
        assert!((m.a2 - 115.2).abs() < 1e-8);
        assert!((m.delta - 288.0).abs() < 1e-9);
        assert!(!m.pwt_moment_ok);
        assert!(m.a2 >= m.a1 * m.a1 - 1e-12);
    }

    #[test]
    fn regular_even_potential_fails_moments() {
        let f = form(1025, |y| (2.0 * PI * y).cos() + 0.5);
        let m = moment_conditions(&f);
        assert!(m.delta.abs() < 1e-6 && m.a2 > 0.1 && !m.pwt_moment_ok);
    }

    #[test]
    fn phase_follows_expansion() {
        // Small cosine potential: phi0 = sqrt(Lambda) L (1 + O(beta^2 / Lambda^2)).
        let beta = 0.5;
        let f = form(2049, |y| beta * (2.0 * PI * y).cos());
        let lam = 400.0;
        let (p0, _) = bs_phase(&f, lam).unwrap();
        let a2 = beta * beta / 2.0;
        assert!((p0 - lam.sqrt() * (1.0 - a2 / (8.0 * lam * lam))).abs() < 1e-9);
    }

    #[test]
    fn weyl_for_constant_case() {
        let e: Vec<f64> = (0..60).map(|n| PI * n as f64).collect();
        let w = weyl_from(&e, 1.0 / PI).unwrap();
        assert!(w.relative_gap < 1e-10 && w.ratio_gap < 1e-10);
        assert!(matches!(weyl_from(&e[..10], 1.0), Err(Error::InsufficientModes(10))));
    }

    #[test]
    fn gapped_phase_shift_tracks_mean() {
        // Constant V = c: Lambda_n = (pi n)^2 + c and pi n - sqrt(Lambda_n) ~ -c/(2 pi n).
        let f = form(257, |_| 3.0);
        let s = solve_spectrum_fd(&f, 60, &FdOptions { base_points: 1025, ..Default::default() }).unwrap();
        let r = wkb_report(&f, &s, 20..=60).unwrap();
        for n in 20..=60 {
            let pred = -3.0 / (2.0 * r.big_lambdas[n].sqrt());
            assert!((r.phase_shifts[n] - pred).abs() < 1e-3 * pred.abs(), "{n}");
        }
        assert!((r.decay_exponent.unwrap() + 0.5).abs() < 0.01);
        assert_eq!(r.n0_estimate, Some(0));
    }

    #[test]
    fn boundary_term_sign() {
        // V = -12 + 144 y^2 has a1 = 0, a2 + Delta = 403.2 and a2 - Delta = -172.8.
        let f = form(2049, |y| -12.0 + 144.0 * y * y);
        let s = solve_spectrum_fd(&f, 60, &FdOptions { base_points: 2049, ..Default::default() }).unwrap();
        let r = wkb_report(&f, &s, 30..=60).unwrap();
        for n in [40, 60] {
            let lam = r.big_lambdas[n];
            let coef = -r.phase_shifts[n] * 8.0 * lam.powf(1.5);
            assert!((coef - 403.2).abs() < 0.02 * 403.2, "{n}: {coef}");
            let pr = r.phase_residuals[n].unwrap();
            assert!(pr.abs() < 0.05 * r.phase_shifts[n].abs(), "{n}: {pr}");
        }
    }
}
