//! Closed forms for v = v sqrt(1 - s^2), K = K (1 - s^2)^alpha, s = 2x/L.
//!
//! The eigenfunctions are Gegenbauer polynomials C_n^(alpha)(s) (Chebyshev
//! T_n at alpha = 0) with lambda_n = (pi v0 / L)^2 n (n + 2 alpha) and
//! v0 = 2v/pi. The fine-tuned potential q = -(2 v alpha / L)^2 w completes
//! the square: lambda_n = (pi v0 / L)^2 (n + alpha)^2.

use super::{EigenMode, Method, SLSpectrum};
use crate::error::{Error, Result};
use crate::profiles::{parity_of_samples, SystemGeometry};
use crate::quadrature::{gauss_jacobi, integrate_tanh_sinh_offsets, GaussLegendre};
use crate::sl::modes::zero_count;

/// C_k^(alpha)(s) for k = 0..=n; Chebyshev T_k when alpha = 0.
pub fn gegenbauer_values(n: usize, alpha: f64, s: f64) -> Vec<f64> {
    let mut c = vec![0.0; n + 1];
    c[0] = 1.0;
    if n == 0 {
        return c;
    }
    if alpha == 0.0 {
        c[1] = s;
        for k in 1..n {
            c[k + 1] = 2.0 * s * c[k] - c[k - 1];
        }
        return c;
    }
    c[1] = 2.0 * alpha * s;
    for k in 1..n {
        let kf = k as f64;
        c[k + 1] = (2.0 * s * (kf + alpha) * c[k] - (kf + 2.0 * alpha - 1.0) * c[k - 1]) / (kf + 1.0);
    }
    c
}

/// d/ds of the family above, from C_n' = 2 alpha C_{n-1}^(alpha+1) and
/// T_n' = n U_{n-1}.
fn gegenbauer_derivative(n: usize, alpha: f64, s: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let up = gegenbauer_values(n - 1, alpha + 1.0, s)[n - 1];
    if alpha == 0.0 {
        n as f64 * up
    } else {
        2.0 * alpha * up
    }
}

#[derive(Debug, Clone)]
pub struct GegenbauerSpectrum {
    pub spectrum: SLSpectrum,
    pub modes: Vec<EigenMode>,
    pub v0: f64,
}

pub fn gegenbauer_lambda(alpha: f64, v: f64, length: f64, n: usize, massive: bool) -> f64 {
    let v0 = 2.0 * v / std::f64::consts::PI;
    let c = (std::f64::consts::PI * v0 / length).powi(2);
    let nf = n as f64;
    if massive {
        c * (nf + alpha).powi(2)
    } else {
        c * nf * (nf + 2.0 * alpha)
    }
}

/// Spectrum and normalized eigenfunctions sampled on the geometry grid.
pub fn closed_form_gegenbauer(alpha: f64, v: f64, k: f64, geometry: &SystemGeometry, n_max: usize, massive: bool) -> Result<GegenbauerSpectrum> {
    if alpha <= -0.5 {
        return Err(Error::InvalidInput(format!("alpha must exceed -1/2, got {alpha}")));
    }
    let l = geometry.length;
    let lambdas: Vec<f64> = (0..=n_max).map(|n| gegenbauer_lambda(alpha, v, l, n, massive)).collect();
    let spectrum = SLSpectrum::new(lambdas.clone(), vec![0.0; n_max + 1], Method::ClosedForm);
    let xs = geometry.nodes();
    let ss: Vec<f64> = xs.iter().map(|x| (2.0 * x / l).clamp(-1.0, 1.0)).collect();
    let vals: Vec<Vec<f64>> = ss.iter().map(|&s| gegenbauer_values(n_max, alpha, s)).collect();
    // int w C_n^2 dx = (K/v)(L/2) int (1 - s^2)^(alpha - 1/2) C_n^2 ds.
    let (gx, gw) = gauss_jacobi(n_max + 2, alpha - 0.5, alpha - 0.5);
    let gvals: Vec<Vec<f64>> = gx.iter().map(|&s| gegenbauer_values(n_max, alpha, s)).collect();
    let pref = k / v * 0.5 * l;
    let massless_c = (2.0 * v / l).powi(2);
    let h = 0.5 * l;
    let mut modes = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let norm: f64 = pref * gvals.iter().zip(&gw).map(|(c, w)| w * c[n] * c[n]).sum::<f64>();
        // Sign convention u(-L/2) > 0.
        let scale = if n % 2 == 1 { -1.0 } else { 1.0 } / norm.sqrt();
        let u: Vec<f64> = vals.iter().map(|c| scale * c[n]).collect();
        let big_u: Vec<f64> = if n == 0 {
            // U_0 = u_0 int_{-L/2}^x w.
            let g = GaussLegendre::new(12);
            let wf = |da: f64, db: f64| {
                let oms2 = (4.0 * da * db / (l * l)).max(0.0);
                k / v * oms2.powf(alpha - 0.5)
            };
            let mut acc = 0.0;
            let mut out = vec![0.0; xs.len()];
            for i in 0..xs.len() - 1 {
                let (a, b) = (xs[i], xs[i + 1]);
                let part = if i == 0 {
                    integrate_tanh_sinh_offsets(|_, da, _| wf(da, l - da), a, b, 1e-14)?.value
                } else if i == xs.len() - 2 {
                    integrate_tanh_sinh_offsets(|_, _, db| wf(l - db, db), a, b, 1e-14)?.value
                } else {
                    g.integrate(|x| wf(x + h, h - x), a, b)
                };
                acc += part;
                out[i + 1] = acc * scale;
            }
            out
        } else {
            // -(p u')' = lambda_massless w u, and p u' vanishes at -L/2.
            let lam0 = massless_c * (n as f64) * (n as f64 + 2.0 * alpha);
            xs.iter()
                .zip(&ss)
                .map(|(_, &s)| {
                    let oms2 = (1.0 - s * s).max(0.0);
                    let pu = v * k * oms2.powf(alpha + 0.5) * (2.0 / l) * scale * gegenbauer_derivative(n, alpha, s);
                    -pu / lam0
                })
                .collect()
        };
        let parity = parity_of_samples(&u, 1e-6);
        let zc = zero_count(&u);
        modes.push(EigenMode { n, lambda: lambdas[n], x: xs.clone(), u, big_u, parity, zero_count: zc });
    }
    Ok(GegenbauerSpectrum { spectrum, modes, v0: 2.0 * v / std::f64::consts::PI })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Parity;
    use std::f64::consts::PI;

    #[test]
    fn chebyshev_and_legendre_values() {
        let s = 0.3f64;
        let t = gegenbauer_values(5, 0.0, s);
        assert!((t[5] - (5.0 * s.acos()).cos()).abs() < 1e-14);
        let p = gegenbauer_values(3, 0.5, s);
        assert!((p[3] - 0.5 * (5.0 * s.powi(3) - 3.0 * s)).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_differences() {
        for &a in &[0.0, 0.5, 1.0, 2.0] {
            let d = 1e-6;
            let s = 0.37;
            let fd = (gegenbauer_values(6, a, s + d)[6] - gegenbauer_values(6, a, s - d)[6]) / (2.0 * d);
            assert!((fd - gegenbauer_derivative(6, a, s)).abs() < 1e-6);
        }
    }

    #[test]
    fn spectra() {
        let g = SystemGeometry::new(1.0, 257).unwrap();
        let c = closed_form_gegenbauer(0.0, 1.0, 1.0, &g, 10, false).unwrap();
        for n in 0..=10 {
            assert!((c.spectrum.energies[n] - 2.0 * n as f64).abs() < 1e-13);
        }
        let c = closed_form_gegenbauer(2.0, 1.0, 1.0, &g, 10, true).unwrap();
        for n in 0..=10 {
            assert!((c.spectrum.energies[n] - 2.0 * (n as f64 + 2.0)).abs() < 1e-12);
        }
        let c = closed_form_gegenbauer(0.5, 1.0, 1.0, &g, 4, false).unwrap();
        assert!((c.spectrum.energies[2] - 2.0 * 6f64.sqrt()).abs() < 1e-13);
        let _ = PI;
    }

    #[test]
    fn legendre_mode_three() {
        let g = SystemGeometry::new(1.0, 257).unwrap();
        let c = closed_form_gegenbauer(0.5, 1.0, 1.0, &g, 3, false).unwrap();
        let m = &c.modes[3];
        assert_eq!(m.parity.parity, Parity::Odd);
        assert_eq!(m.zero_count, 3);
        // Normalized Legendre: sqrt((2n+1)/(2 * L/2)) P_3(s) up to sign.
        let nrm = (7.0f64).sqrt();
        for (x, u) in m.x.iter().zip(&m.u) {
            let s = 2.0 * x;
            let p3 = 0.5 * (5.0 * s.powi(3) - 3.0 * s);
            assert!((u + nrm * p3).abs() < 1e-12);
        }
        assert!(m.u[1] > 0.0);
    }

    #[test]
    fn companion_satisfies_derivative_relation() {
        let g = SystemGeometry::new(1.0, 2049).unwrap();
        for &a in &[0.0, 1.0] {
            let c = closed_form_gegenbauer(a, 1.0, 1.0, &g, 4, false).unwrap();
            let m = &c.modes[2];
            let h = g.spacing();
            // Central difference of U against w u in the interior.
            for i in (200..1800).step_by(200) {
                let s: f64 = 2.0 * m.x[i];
                let w = (1.0 - s * s).powf(a - 0.5);
                let d = (m.big_u[i + 1] - m.big_u[i - 1]) / (2.0 * h);
                assert!((d - w * m.u[i]).abs() < 1e-4, "{a} {i}");
            }
            assert!(m.big_u[0].abs() < 1e-12 && m.big_u[2048].abs() < 1e-12);
        }
    }
}
