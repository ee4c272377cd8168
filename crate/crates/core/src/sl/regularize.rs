//! Endpoint-regularization convergence study for singular-end problems.

use super::{solve_spectrum_fd, FdOptions, GridKind, SLCoefficients, SLSpectrum};
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

/// Spectra of v_eps = max(v, eps v_max) (and K alike) for a decreasing eps sequence.
#[derive(Debug, Clone, Serialize)]
pub struct RegularizationStudy {
    pub eps: Vec<f64>,
    pub spectra: Vec<SLSpectrum>,
    /// |lambda_n(eps_last) - lambda_n(eps_prev)| / max(lambda_n, scale).
    pub drift: Vec<f64>,
}

impl RegularizationStudy {
    /// Spectrum at the smallest eps.
    pub fn finest(&self) -> &SLSpectrum {
        self.spectra.last().expect("non-empty study")
    }

    pub fn max_drift(&self) -> f64 {
        self.drift.iter().cloned().fold(0.0, f64::max)
    }
}

/// Solve the regularized problem on a graded grid for every eps (largest first).
pub fn regularization_study(coeffs: &SLCoefficients, n_max: usize, eps: &[f64], opts: &FdOptions) -> Result<RegularizationStudy> {
    if eps.len() < 2 || eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("eps must be a decreasing sequence of at least two values in (0, 1)".into()));
    }
    let o = FdOptions { grid: GridKind::Graded, ..*opts };
    let spectra: Vec<SLSpectrum> = eps
        .par_iter()
        .map(|&e| solve_spectrum_fd(&coeffs.regularized(e), n_max, &o))
        .collect::<Result<_>>()?;
    let k = spectra.len();
    let (a, b) = (&spectra[k - 2].lambdas, &spectra[k - 1].lambdas);
    let scale = (std::f64::consts::PI / coeffs.length()).powi(2) * coeffs.v0 * coeffs.v0;
    let drift = a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs().max(scale)).collect();
    Ok(RegularizationStudy { eps: eps.to_vec(), spectra, drift })
}
