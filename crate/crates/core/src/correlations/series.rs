//! Ground-state correlators as mode sums and the constant-K closed form.

use super::unfold::UnfoldedMap;
use crate::error::{Error, Result};
use crate::interp::UniformInterp;
use crate::sl::{EigenMode, GegenbauerSpectrum, SLCoefficients, SLSpectrum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Arguments of a two-point function <A(x, t) B(x', t')>.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorRequest {
    pub x: f64,
    pub x_prime: f64,
    pub t: f64,
    pub t_prime: f64,
    pub n_modes: usize,
    /// i0+ regularization in length units. Mode sums are Abel-damped by
    /// exp(-E_n epsilon / v0); 0 means plain truncation.
    pub epsilon: f64,
    /// Constant C of the overlap phase exp(-iCt); unused by mode sums.
    pub casimir_phase: f64,
    /// Relative tolerance of the Cauchy test on the last partial sums.
    pub tol: f64,
}

impl CorrelatorRequest {
    pub fn new(x: f64, x_prime: f64, t: f64, t_prime: f64, n_modes: usize) -> Self {
        Self { x, x_prime, t, t_prime, n_modes, epsilon: 0.0, casimir_phase: 0.0, tol: 1e-3 }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::InvalidInput("n_modes must be at least 1".into()));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidInput("epsilon must be finite and non-negative".into()));
        }
        if ![self.x, self.x_prime, self.t, self.t_prime].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("positions and times must be finite".into()));
        }
        Ok(())
    }
}

/// A truncated mode sum with its truncation estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: Complex64,
    /// max |S_N - S_k| over the last tenth of the partial sums.
    pub truncation: f64,
    pub terms: usize,
    /// Cauchy test: truncation <= tol * max(|value|, 1).
    pub converged: bool,
}

/// Eigenmodes with interpolants of u_n and U_n, ready for correlator sums.
#[derive(Debug, Clone)]
pub struct ModeSet {
    pub energies: Vec<f64>,
    pub v0: f64,
    pub length: f64,
    u: Vec<UniformInterp>,
    big_u: Vec<UniformInterp>,
}

impl ModeSet {
    pub fn new(modes: &[EigenMode], energies: &[f64], v0: f64) -> Result<Self> {
        if modes.len() != energies.len() {
            return Err(Error::InconsistentInput(format!(
                "{} modes but {} energies",
                modes.len(),
                energies.len()
            )));
        }
        if modes.is_empty() {
            return Err(Error::InsufficientModes(0));
        }
        let (a, b) = (modes[0].x[0], *modes[0].x.last().expect("non-empty"));
        let u = modes.iter().map(|m| UniformInterp::new(a, b, m.u.clone(), 3)).collect();
        let big_u = modes.iter().map(|m| UniformInterp::new(a, b, m.big_u.clone(), 3)).collect();
        Ok(Self { energies: energies.to_vec(), v0, length: b - a, u, big_u })
    }

    pub fn from_solution(coeffs: &SLCoefficients, spectrum: &SLSpectrum, modes: &[EigenMode]) -> Result<Self> {
        Self::new(modes, &spectrum.energies, coeffs.v0)
    }

    pub fn from_gegenbauer(g: &GegenbauerSpectrum) -> Result<Self> {
        Self::new(&g.modes, &g.spectrum.energies, g.v0)
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    fn check_range(&self, x: f64) -> Result<()> {
        let h = 0.5 * self.length;
        if x < -h * (1.0 + 1e-12) || x > h * (1.0 + 1e-12) {
            return Err(Error::Domain { x, lo: -h, hi: h });
        }
        Ok(())
    }

    /// Terms c_n a_n(x) b_n(x') exp(-i E_n dt) exp(-E_n eps / v0), n >= 1, E_n > 0.
    fn sum<F>(&self, req: &CorrelatorRequest, term: F) -> Result<SeriesValue>
    where
        F: Fn(usize, f64) -> Complex64,
    {
        req.validate()?;
        self.check_range(req.x)?;
        self.check_range(req.x_prime)?;
        let nmax = req.n_modes.min(self.len().saturating_sub(1));
        if nmax == 0 {
            return Err(Error::InsufficientModes(self.len()));
        }
        let dt = req.t - req.t_prime;
        let damp = if req.epsilon > 0.0 { req.epsilon / self.v0 } else { 0.0 };
        let mut partial = Vec::with_capacity(nmax);
        let mut s = Complex64::new(0.0, 0.0);
        for n in 1..=nmax {
            let e = self.energies[n];
            if e > 0.0 {
                s += term(n, e) * Complex64::from_polar((-e * damp).exp(), -e * dt);
            }
            partial.push(s);
        }
        let tail = (nmax / 10).max(1).min(nmax);
        let truncation = partial[nmax - tail..].iter().map(|p| (s - p).norm()).fold(0.0, f64::max);
        Ok(SeriesValue {
            value: s,
            truncation,
            terms: nmax,
            converged: truncation <= req.tol * s.norm().max(1.0),
        })
    }

    /// <phi(x, t) phi(x', t')> = sum (pi / 2E_n) u_n(x) u_n(x') exp(-i E_n (t - t')).
    pub fn phi_phi(&self, req: &CorrelatorRequest) -> Result<SeriesValue> {
        self.sum(req, |n, e| Complex64::new(PI / (2.0 * e) * self.u[n].eval(req.x) * self.u[n].eval(req.x_prime), 0.0))
    }

    /// <phi theta> = i sum (pi/2) u_n(x) U_n(x') e^{-i E_n dt}.
    pub fn phi_theta(&self, req: &CorrelatorRequest) -> Result<SeriesValue> {
        self.sum(req, |n, _| Complex64::new(0.0, 0.5 * PI * self.u[n].eval(req.x) * self.big_u[n].eval(req.x_prime)))
    }

    /// <theta theta> = sum (pi E_n / 2) U_n(x) U_n(x') e^{-i E_n dt}.
    pub fn theta_theta(&self, req: &CorrelatorRequest) -> Result<SeriesValue> {
        self.sum(req, |n, e| Complex64::new(0.5 * PI * e * self.big_u[n].eval(req.x) * self.big_u[n].eval(req.x_prime), 0.0))
    }

    /// phi-phi on a (t, x) grid for fixed (x', t' = 0); rows are times.
    pub fn phi_phi_field(&self, xs: &[f64], ts: &[f64], x_prime: f64, n_modes: usize, epsilon: f64) -> Result<Vec<Vec<Complex64>>> {
        ts.par_iter()
            .map(|&t| {
                xs.iter()
                    .map(|&x| {
                        let req = CorrelatorRequest::new(x, x_prime, t, 0.0, n_modes).with_epsilon(epsilon);
                        self.phi_phi(&req).map(|s| s.value)
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn phi_phi_series(modes: &ModeSet, req: &CorrelatorRequest) -> Result<SeriesValue> {
    modes.phi_phi(req)
}

/// (phi-theta, theta-theta). Coincident-point theta-theta is distributional
/// and comes back with `converged = false`.
pub fn theta_correlators(modes: &ModeSet, req: &CorrelatorRequest) -> Result<(SeriesValue, SeriesValue)> {
    Ok((modes.phi_theta(req)?, modes.theta_theta(req)?))
}

/// Pole proximity below which a warning is logged.
const BRANCH_CUT_WARN: f64 = 1e-12;

/// Constant-K closed form of <phi(x, t) phi(x', t')> with f = f-bar:
/// (1/4K) times the sum of four logarithms, each written as
/// -log(1 - exp(i phi)) with Im phi = pi epsilon / L > 0 (principal branch).
pub fn phi_phi_closed_form(map: &UnfoldedMap, k: f64, x: f64, x_prime: f64, t: f64, t_prime: f64, epsilon: f64) -> Result<Complex64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if !(k > 0.0) {
        return Err(Error::InvalidInput("K must be positive".into()));
    }
    let l = map.length;
    for &p in &[x, x_prime] {
        if p.abs() > 0.5 * l * (1.0 + 1e-12) {
            return Err(Error::Domain { x: p, lo: -0.5 * l, hi: 0.5 * l });
        }
    }
    let f = map.fbar_at(x);
    let fp = map.fbar_at(x_prime);
    let s = map.vbar0 * (t - t_prime);
    let im = PI * epsilon / l;
    let args = [f - fp - s, f + fp + l - s, -(f + fp + l + s), -(f - fp + s)];
    let mut total = Complex64::new(0.0, 0.0);
    for a in args {
        let z = Complex64::new(0.0, PI * a / l).exp() * (-im).exp();
        let w = Complex64::new(1.0, 0.0) - z;
        if w.norm() < BRANCH_CUT_WARN {
            log::warn!("phi-phi closed form: log argument within {:.1e} of the branch point", w.norm());
        }
        total -= w.ln();
    }
    Ok(total / (4.0 * k))
}
