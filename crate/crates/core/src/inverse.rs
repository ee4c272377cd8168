//! Inverse problem: fit an even potential qhat(y) to a Neumann spectrum and
//! rebuild K(x) from v0^2 s'' = qhat s with s = sqrt K.

use crate::error::{Error, Result};
use crate::interp::UniformInterp;
use crate::ode::{integrate_through, OdeOptions};
use crate::profiles::{coordinate_map_for, parity_check, CoordinateMap, Parity, ProfileFn, SystemGeometry, TLLModel};
use crate::pwt::{classify_pwt, PWTVerdict, DEFAULT_EPS_PARITY, DEFAULT_EPS_SPEC};
use crate::sl::{
    assemble_coefficients, eigenfunctions, solve_spectrum_fd, solve_spectrum_shooting, FdOptions, GridKind,
    ShootingOptions, SturmLiouville,
};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Weight of the n = 0 residual that anchors E_0 = 0.
const ZERO_MODE_WEIGHT: f64 = 10.0;
const MAX_DAMPING: f64 = 1e12;
const MAX_CONDITION: f64 = 1e12;

/// Target spectrum and gauge data for the reconstruction.
#[derive(Debug, Clone)]
pub struct InverseProblem {
    /// E_0 = 0, E_1, ..., E_N.
    pub target_energies: Vec<f64>,
    /// Given even velocity profile.
    pub v: ProfileFn,
    /// Number M of cosines cos(2 pi k y / L), k = 1..M.
    pub basis_size: usize,
    /// Tikhonov weight rho on sum c_k^2.
    pub regularization: f64,
    /// K(0).
    pub k0: f64,
    pub grid_points: usize,
}

impl InverseProblem {
    pub fn new(target_energies: Vec<f64>, v: ProfileFn, basis_size: usize) -> Self {
        Self { target_energies, v, basis_size, regularization: 0.0, k0: 1.0, grid_points: 1025 }
    }

    fn validate(&self) -> Result<()> {
        let e = &self.target_energies;
        if e.len() < 3 {
            return Err(Error::InsufficientModes(e.len().saturating_sub(1)));
        }
        if e.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("target energies must be strictly increasing".into()));
        }
        if e[0].abs() > 1e-12 * e[1] {
            return Err(Error::InvalidInput("massless target requires E_0 = 0".into()));
        }
        if self.basis_size == 0 {
            return Err(Error::InvalidInput("basis size must be at least 1".into()));
        }
        if e.len() - 1 < 2 * self.basis_size {
            return Err(Error::InvalidInput(format!(
                "{} nonzero energies do not over-determine {} coefficients (need N >= 2M)",
                e.len() - 1,
                self.basis_size
            )));
        }
        if !(self.regularization >= 0.0) || !(self.k0 > 0.0) {
            return Err(Error::InvalidInput("regularization must be >= 0 and K0 > 0".into()));
        }
        let g = SystemGeometry::new(self.v.length, self.grid_points)?;
        let par = parity_check(&self.v, &g, 1e-10);
        if par.parity != Parity::Even {
            return Err(Error::InvalidInput(format!("v must be even (defect {:.3e})", par.even_defect)));
        }
        Ok(())
    }
}

/// qhat(y) = c0 + sum_k c_k cos(2 pi k y / L) on [-L/2, L/2] as a
/// Sturm-Liouville problem -v0^2 u'' + qhat u = lambda u.
#[derive(Debug, Clone)]
pub struct CosinePotential {
    pub v0: f64,
    pub length: f64,
    pub c0: f64,
    pub coefficients: Vec<f64>,
}

impl CosinePotential {
    pub fn qhat(&self, y: f64) -> f64 {
        let a = 2.0 * PI * y / self.length;
        self.c0 + self.coefficients.iter().enumerate().map(|(k, c)| c * (a * (k + 1) as f64).cos()).sum::<f64>()
    }

    fn from_params(v0: f64, length: f64, p: &[f64]) -> Self {
        Self { v0, length, c0: p[0], coefficients: p[1..].to_vec() }
    }
}

impl SturmLiouville for CosinePotential {
    fn interval(&self) -> (f64, f64) {
        (-0.5 * self.length, 0.5 * self.length)
    }
    fn w(&self, _: f64) -> f64 {
        1.0
    }
    fn p(&self, _: f64) -> f64 {
        self.v0 * self.v0
    }
    fn q(&self, y: f64) -> f64 {
        -self.qhat(y)
    }
    fn q_is_zero(&self) -> bool {
        self.c0 == 0.0 && self.coefficients.iter().all(|c| *c == 0.0)
    }
}

/// Resolution used inside the optimization loop.
pub fn coarse_solver() -> FdOptions {
    FdOptions { base_points: 257, levels: 3, grid: GridKind::Uniform, tol: 1e-4 }
}

/// Resolution of the final polish and of synthetic targets.
pub fn fine_solver() -> FdOptions {
    FdOptions { base_points: 1025, levels: 4, grid: GridKind::Uniform, tol: 1e-4 }
}

/// Neumann eigenvalues lambda_0..lambda_n of the cosine potential.
pub fn forward_lambdas(pot: &CosinePotential, n: usize, opts: &FdOptions) -> Result<Vec<f64>> {
    Ok(solve_spectrum_fd(pot, n, opts)?.lambdas)
}

#[derive(Debug, Clone, Serialize)]
pub struct FitIterate {
    pub iteration: usize,
    pub stage: String,
    /// (c0, c1, ..., cM).
    pub params: Vec<f64>,
    pub residual_norm: f64,
    pub damping: f64,
    pub condition: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    /// Mean c0 of the fitted potential.
    pub c0: f64,
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    /// rms of (E_fit - E_target) / E_target over n >= 1.
    pub spectral_residual: f64,
    pub fitted_energies: Vec<f64>,
    pub condition: f64,
    pub trace: Vec<FitIterate>,
    pub v0: f64,
    pub length: f64,
}

impl FitResult {
    pub fn potential(&self) -> CosinePotential {
        CosinePotential { v0: self.v0, length: self.length, c0: self.c0, coefficients: self.coefficients.clone() }
    }
}

struct Fitter<'a> {
    target: &'a [f64],
    v0: f64,
    length: f64,
    rho: f64,
    e_ref: f64,
}

impl Fitter<'_> {
    fn residuals(&self, p: &[f64], opts: &FdOptions) -> Result<(DVector<f64>, Vec<f64>)> {
        let pot = CosinePotential::from_params(self.v0, self.length, p);
        let n = self.target.len() - 1;
        let lam = forward_lambdas(&pot, n, opts)?;
        let energies: Vec<f64> = lam.iter().map(|l| l.max(0.0).sqrt()).collect();
        let m = p.len() - 1;
        let mut r = DVector::zeros(n + 1 + m);
        r[0] = ZERO_MODE_WEIGHT * lam[0] / self.e_ref;
        for i in 1..=n {
            r[i] = energies[i] - self.target[i];
        }
        let sr = self.rho.sqrt();
        for k in 0..m {
            r[n + 1 + k] = sr * p[k + 1];
        }
        Ok((r, energies))
    }

    fn jacobian(&self, p: &[f64], r0: &DVector<f64>, opts: &FdOptions) -> Result<DMatrix<f64>> {
        let scale = self.e_ref * self.e_ref;
        let cols: Vec<DVector<f64>> = (0..p.len())
            .into_par_iter()
            .map(|j| {
                let h = 1e-4 * p[j].abs().max(scale);
                let mut q = p.to_vec();
                q[j] += h;
                let (r, _) = self.residuals(&q, opts)?;
                Ok((r - r0) / h)
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_columns(&cols))
    }

    /// Levenberg-Marquardt from `p`; appends to `trace`.
    fn run(&self, mut p: Vec<f64>, max_iters: usize, tol: f64, opts: &FdOptions, stage: &str, trace: &mut Vec<FitIterate>) -> Result<(Vec<f64>, f64)> {
        let (mut r, _) = self.residuals(&p, opts)?;
        let mut mu = 1e-3;
        let mut cond = 1.0;
        let start = trace.len();
        trace.push(FitIterate { iteration: start, stage: stage.into(), params: p.clone(), residual_norm: r.norm(), damping: mu, condition: cond });
        for _ in 0..max_iters {
            let rn = r.norm();
            if rn == 0.0 {
                break;
            }
            let j = self.jacobian(&p, &r, opts)?;
            let sv = j.clone().svd(false, false).singular_values;
            let (smax, smin) = (sv.max(), sv.min());
            cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
            if cond > MAX_CONDITION {
                return Err(Error::RankDeficient(cond));
            }
            let jtj = j.transpose() * &j;
            let g = j.transpose() * &r;
            let mut accepted = None;
            loop {
                let mut a = jtj.clone();
                for i in 0..a.nrows() {
                    a[(i, i)] += mu * jtj[(i, i)].max(1e-300);
                }
                let delta = a.lu().solve(&(-&g)).ok_or(Error::RankDeficient(f64::INFINITY))?;
                let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
                let (rt, _) = self.residuals(&trial, opts)?;
                if rt.norm() < rn {
                    mu = (mu / 10.0).max(1e-15);
                    accepted = Some((trial, rt));
                    break;
                }
                // A rejected step whose predicted gain is below tol means the
                // residual sits at the noise floor of the forward solver.
                let predicted = rn * rn - (&r + &j * &delta).norm_squared();
                if predicted <= (tol * rn).powi(2) || delta.norm() <= 1e-14 * (1.0 + p.iter().map(|v| v * v).sum::<f64>().sqrt()) {
                    break;
                }
                mu *= 10.0;
                if mu > MAX_DAMPING {
                    return Err(Error::DivergedFit(mu));
                }
            }
            let Some((np, nr)) = accepted else { break };
            let decrease = rn - nr.norm();
            p = np;
            r = nr;
            trace.push(FitIterate {
                iteration: trace.len(),
                stage: stage.into(),
                params: p.clone(),
                residual_norm: r.norm(),
                damping: mu,
                condition: cond,
            });
            if decrease < tol * rn {
                break;
            }
        }
        Ok((p, cond))
    }
}

/// Levenberg-Marquardt fit of (c0, c_1..c_M): a coarse stage followed by a
/// polish at fine resolution, each limited to `max_iters` iterations.
pub fn fit_qhat(problem: &InverseProblem, max_iters: usize, tol: f64) -> Result<FitResult> {
    fit_qhat_from(problem, &vec![0.0; problem.basis_size + 1], max_iters, tol)
}

/// As `fit_qhat` from the starting point (c0, c_1..c_M).
pub fn fit_qhat_from(problem: &InverseProblem, start: &[f64], max_iters: usize, tol: f64) -> Result<FitResult> {
    problem.validate()?;
    if start.len() != problem.basis_size + 1 {
        return Err(Error::InconsistentInput(format!("start has {} entries, expected {}", start.len(), problem.basis_size + 1)));
    }
    let map = coordinate_map_for(&problem.v, problem.grid_points, 1e-12)?;
    let length = problem.v.length;
    let fitter = Fitter {
        target: &problem.target_energies,
        v0: map.v0,
        length,
        rho: problem.regularization,
        e_ref: PI * map.v0 / length,
    };
    let mut trace = Vec::new();
    let (p, _) = fitter.run(start.to_vec(), max_iters, tol, &coarse_solver(), "coarse", &mut trace)?;
    let (p, cond) = fitter.run(p, max_iters, tol, &fine_solver(), "fine", &mut trace)?;
    let (r, energies) = fitter.residuals(&p, &fine_solver())?;
    let n = problem.target_energies.len() - 1;
    let spectral_residual = ((1..=n)
        .map(|i| ((energies[i] - problem.target_energies[i]) / problem.target_energies[i]).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    Ok(FitResult {
        c0: p[0],
        coefficients: p[1..].to_vec(),
        residual_norm: r.norm(),
        spectral_residual,
        fitted_energies: energies,
        condition: cond,
        trace,
        v0: map.v0,
        length,
    })
}

/// sqrt K obtained from the potential.
#[derive(Debug, Clone)]
pub struct KRecovery {
    pub k: ProfileFn,
    /// Largest |dK/dx| at x = +-L/2.
    pub bc_defect: f64,
    pub positivity_ok: bool,
    pub min_sqrt_k: f64,
}

/// Solve v0^2 s'' = qhat(y) s from y = 0 with s(0) = sqrt(K0), s'(0) = 0 and
/// tabulate K = s(y(x))^2 on the map's x nodes.
pub fn recover_k<F: Fn(f64) -> f64>(qhat: F, map: &CoordinateMap, k0: f64) -> Result<KRecovery> {
    if !(k0 > 0.0) {
        return Err(Error::InvalidInput("K0 must be positive".into()));
    }
    let n = map.x_nodes.len();
    let mid = (n - 1) / 2;
    let v02 = map.v0 * map.v0;
    let opts = OdeOptions { rtol: 1e-12, atol: 1e-14 * k0.sqrt(), ..Default::default() };
    let mut s = vec![0.0; n];
    let mut ds = vec![0.0; n];
    // Right half: y increasing from 0; left half: t = -y increasing from 0.
    for side in [1.0f64, -1.0] {
        let idx: Vec<usize> = if side > 0.0 { (mid..n).collect() } else { (0..=mid).rev().collect() };
        let ts: Vec<f64> = idx.iter().map(|&i| side * map.y_of_x[i]).collect();
        let out = integrate_through(|t, z: &[f64; 2]| [z[1], qhat(side * t) * z[0] / v02], &ts, [k0.sqrt(), 0.0], opts)?;
        for (k, &i) in idx.iter().enumerate() {
            s[i] = out[k][0];
            ds[i] = side * out[k][1];
        }
    }
    if let Some(i) = s.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::SignChange { y: map.y_of_x[i] });
    }
    let min_sqrt_k = s.iter().cloned().fold(f64::INFINITY, f64::min);
    let geom = SystemGeometry::new(map.length, n)?;
    let h = geom.spacing();
    let half = geom.half();
    let kvals: Vec<f64> = s.iter().map(|v| v * v).collect();
    let k = ProfileFn::tabulate(|x| kvals[(((x + half) / h).round() as usize).min(n - 1)], &geom, 3)?;
    // dK/dx = 2 s s_y dy/dx.
    let bc_defect = [0, n - 1]
        .iter()
        .map(|&i| (2.0 * s[i] * ds[i] * map.dy_dx(map.x_nodes[i])).abs())
        .fold(0.0, f64::max);
    Ok(KRecovery { k, bc_defect, positivity_ok: min_sqrt_k > 0.0, min_sqrt_k })
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub fit: FitResult,
    pub coefficients: Vec<f64>,
    /// qhat on the uniform y grid `y`.
    pub y: Vec<f64>,
    pub qhat_fit: Vec<f64>,
    /// Present only when sqrt K stays positive.
    pub k_recovered: Option<ProfileFn>,
    pub spectral_residual: f64,
    pub positivity_ok: bool,
    pub bc_defect: f64,
    pub target_energies: Vec<f64>,
    pub v: ProfileFn,
    pub grid_points: usize,
}

/// fit_qhat followed by recover_k.
pub fn reconstruct(problem: &InverseProblem, max_iters: usize, tol: f64) -> Result<ReconstructionResult> {
    let fit = fit_qhat(problem, max_iters, tol)?;
    let map = coordinate_map_for(&problem.v, problem.grid_points, 1e-12)?;
    let pot = fit.potential();
    let n = problem.grid_points;
    let y: Vec<f64> = (0..n).map(|i| -0.5 * fit.length + fit.length * i as f64 / (n - 1) as f64).collect();
    let qhat_fit = y.iter().map(|&s| pot.qhat(s)).collect();
    let (k_recovered, positivity_ok, bc_defect) = match recover_k(|s| pot.qhat(s), &map, problem.k0) {
        Ok(r) => (Some(r.k), r.positivity_ok, r.bc_defect),
        Err(Error::SignChange { .. }) => (None, false, f64::NAN),
        Err(e) => return Err(e),
    };
    Ok(ReconstructionResult {
        coefficients: fit.coefficients.clone(),
        spectral_residual: fit.spectral_residual,
        fit,
        y,
        qhat_fit,
        k_recovered,
        positivity_ok,
        bc_defect,
        target_energies: problem.target_energies.clone(),
        v: problem.v.clone(),
        grid_points: n,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundtripReport {
    pub energies: Vec<f64>,
    /// |E_n - E_n^target| / E_n^target for n >= 1 (0 for n = 0).
    pub per_mode_error: Vec<f64>,
    pub max_error: f64,
    pub verdict: PWTVerdict,
}

/// Forward x-space shooting solve of (v, K_recovered) against the target.
pub fn roundtrip_validate(result: &ReconstructionResult, v: &ProfileFn, n_check: usize) -> Result<RoundtripReport> {
    let k = result
        .k_recovered
        .clone()
        .ok_or_else(|| Error::InvalidInput("no positive K was recovered".into()))?;
    let n_check = n_check.min(result.target_energies.len() - 1);
    let geom = SystemGeometry::new(v.length, result.grid_points)?;
    let model = TLLModel::new(geom, v.clone(), k)?;
    let coeffs = assemble_coefficients(&model)?;
    let spec = solve_spectrum_shooting(&coeffs, n_check, &ShootingOptions::default())?;
    let per_mode_error: Vec<f64> = spec
        .energies
        .iter()
        .enumerate()
        .map(|(n, e)| if n == 0 { 0.0 } else { (e - result.target_energies[n]).abs() / result.target_energies[n] })
        .collect();
    let max_error = per_mode_error.iter().cloned().fold(0.0, f64::max);
    let modes = eigenfunctions(&coeffs, &spec)?;
    let verdict = classify_pwt(&model, &spec, &modes, DEFAULT_EPS_SPEC, DEFAULT_EPS_PARITY)?;
    Ok(RoundtripReport { energies: spec.energies, per_mode_error, max_error, verdict })
}

/// Eigenfunction-based gradient d lambda_n / d c_k = int u_n^2 cos(2 pi k y/L) dy
/// (c0 column: 1), used to validate the finite-difference Jacobian.
pub fn analytic_lambda_gradient(pot: &CosinePotential, n: usize, grid_points: usize) -> Result<Vec<Vec<f64>>> {
    let spec = solve_spectrum_fd(pot, n, &fine_solver())?;
    let h = 0.5 * pot.length;
    let nodes: Vec<f64> = (0..grid_points).map(|i| -h + pot.length * i as f64 / (grid_points - 1) as f64).collect();
    let dy = nodes[1] - nodes[0];
    (0..=n)
        .map(|i| {
            let m = crate::sl::eigenfunction(pot, &nodes, spec.lambdas[i], i)?;
            let mut row = vec![1.0];
            for k in 1..=pot.coefficients.len() {
                let f: Vec<f64> = nodes
                    .iter()
                    .zip(&m.u)
                    .map(|(y, u)| u * u * (2.0 * PI * k as f64 * y / pot.length).cos())
                    .collect();
                row.push(crate::quadrature::simpson(&f, dy));
            }
            Ok(row)
        })
        .collect()
}

/// Interpolated qhat samples on a uniform grid over [y0, y1].
pub fn sampled_qhat(y0: f64, y1: f64, samples: Vec<f64>) -> impl Fn(f64) -> f64 {
    let it = UniformInterp::new(y0, y1, samples, 3);
    move |y| it.eval(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::coordinate_map;

    fn linear_target(n: usize, v0: f64, l: f64) -> Vec<f64> {
        (0..=n).map(|k| PI * k as f64 * v0 / l).collect()
    }

    /// Target spectrum of c0 + 0.3 cos(2 pi y) - 0.1 cos(4 pi y) with c0 = -lambda_0.
    fn synthetic(n: usize) -> (CosinePotential, Vec<f64>) {
        let mut pot = CosinePotential { v0: 1.0, length: 1.0, c0: 0.0, coefficients: vec![0.3, -0.1] };
        let lam = forward_lambdas(&pot, n, &fine_solver()).unwrap();
        pot.c0 = -lam[0];
        let e = lam.iter().map(|l| (l - lam[0]).max(0.0).sqrt()).collect();
        (pot, e)
    }

    #[test]
    fn linear_spectrum_gives_zero_potential() {
        let p = InverseProblem::new(linear_target(12, 1.0, 1.0), ProfileFn::constant(1.0, 1.0), 3);
        let f = fit_qhat(&p, 30, 1e-10).unwrap();
        assert!(f.coefficients.iter().all(|c| c.abs() < 1e-8), "{:?}", f.coefficients);
        assert!(f.c0.abs() < 1e-8);
        assert!(f.spectral_residual <= 1e-10);
    }

    #[test]
    fn synthetic_roundtrip() {
        let (pot, e) = synthetic(16);
        let p = InverseProblem::new(e.clone(), ProfileFn::constant(1.0, 1.0), 2);
        let f = fit_qhat(&p, 50, 1e-12).unwrap();
        assert!((f.coefficients[0] - 0.3).abs() < 1e-5 && (f.coefficients[1] + 0.1).abs() < 1e-5, "{:?}", f.coefficients);
        assert!((f.c0 - pot.c0).abs() < 1e-5);
        assert!(f.trace.len() > 1);
        // Generating K from the exact potential, compared after K(0) normalization.
        let map = coordinate_map_for(&p.v, 1025, 1e-12).unwrap();
        let exact = recover_k(|y| pot.qhat(y), &map, 1.0).unwrap();
        let r = reconstruct(&p, 50, 1e-12).unwrap();
        let k = r.k_recovered.as_ref().unwrap();
        for &x in &[-0.5, -0.31, 0.0, 0.2, 0.5] {
            let (a, b) = (k.value(x), exact.k.value(x));
            assert!((a - b).abs() < 1e-4 * b);
        }
        assert!(r.bc_defect < 1e-4, "{}", r.bc_defect);
        let rt = roundtrip_validate(&r, &p.v, 16).unwrap();
        assert!(rt.max_error <= 1e-6, "{:?}", rt.per_mode_error);
    }

    #[test]
    fn started_at_truth_does_not_move() {
        let (pot, e) = synthetic(12);
        let p = InverseProblem::new(e, ProfileFn::constant(1.0, 1.0), 2);
        let start = [pot.c0, 0.3, -0.1];
        let f = fit_qhat_from(&p, &start, 20, 1e-8).unwrap();
        for (a, b) in f.trace.last().unwrap().params.iter().zip(&start) {
            // Floor set by the bisection noise of the fine forward solver.
            assert!((a - b).abs() < 1e-6, "{a} {b}");
        }
    }

    #[test]
    fn legendre_target_has_residual_floor() {
        let n = 20;
        let e: Vec<f64> = (0..=n).map(|k| 2.0 * ((k * (k + 1)) as f64).sqrt()).collect();
        let mut p = InverseProblem::new(e, ProfileFn::constant(2.0 / PI, 1.0), 6);
        p.regularization = 1e-6;
        let r = reconstruct(&p, 40, 1e-10).unwrap();
        assert!(r.spectral_residual > 1e-4);
        if r.positivity_ok {
            let rt = roundtrip_validate(&r, &p.v, 20).unwrap();
            assert!(!rt.verdict.is_pwt);
        }
    }

    #[test]
    fn jacobian_matches_eigenfunction_gradient() {
        let pot = CosinePotential { v0: 1.0, length: 1.0, c0: 0.4, coefficients: vec![0.3, -0.1, 0.2] };
        let grad = analytic_lambda_gradient(&pot, 8, 2049).unwrap();
        let h = 1e-3;
        let shifted = |k: usize, d: f64| {
            let mut q = pot.clone();
            if k == 0 {
                q.c0 += d;
            } else {
                q.coefficients[k - 1] += d;
            }
            forward_lambdas(&q, 8, &fine_solver()).unwrap()
        };
        for k in 0..=3 {
            let (lp, lm) = (shifted(k, h), shifted(k, -h));
            for n in 0..=8 {
                let fd = (lp[n] - lm[n]) / (2.0 * h);
                assert!((fd - grad[n][k]).abs() <= 1e-3 * grad[n][k].abs().max(1e-2), "n {n} k {k}: {fd} {}", grad[n][k]);
            }
        }
    }

    #[test]
    fn recover_k_closed_forms() {
        let g = SystemGeometry::new(1.0, 257).unwrap();
        let m = TLLModel::new(g, ProfileFn::constant(1.0, 1.0), ProfileFn::constant(1.0, 1.0)).unwrap();
        let map = coordinate_map(&m, 1e-12).unwrap();
        let r = recover_k(|_| 0.0, &map, 2.5).unwrap();
        assert!((r.k.value(0.37) - 2.5).abs() < 1e-12 && r.bc_defect < 1e-12);
        let beta = 3.0;
        let r = recover_k(|_| beta, &map, 2.0).unwrap();
        // Nodes carry the ODE accuracy, points between nodes the cubic interpolation error.
        for (x, tol) in [(-0.5, 1e-9), (-0.125, 1e-9), (0.25, 1e-9), (0.5, 1e-9), (-0.1, 1e-7), (0.3, 1e-7)] {
            let want = 2.0 * (beta.sqrt() * x).cosh().powi(2);
            assert!((r.k.value(x) - want).abs() < tol * want, "{x} {} {want}", r.k.value(x));
        }
        assert!(matches!(recover_k(|_| -60.0, &map, 1.0), Err(Error::SignChange { .. })));
    }

    #[test]
    fn rescaling_k0_scales_k() {
        let (pot, _) = synthetic(4);
        let map = coordinate_map_for(&ProfileFn::constant(1.0, 1.0), 257, 1e-12).unwrap();
        let a = recover_k(|y| pot.qhat(y), &map, 1.0).unwrap();
        let b = recover_k(|y| pot.qhat(y), &map, 3.0).unwrap();
        for &x in &[-0.4, 0.0, 0.33] {
            assert!((b.k.value(x) - 3.0 * a.k.value(x)).abs() < 1e-10 * b.k.value(x));
        }
    }

    /// Even cosine bump rescaled so that v0 = 1.
    fn bump_with_unit_v0() -> ProfileFn {
        let s = 1.0 / 0.91f64.sqrt();
        ProfileFn::series(vec![s, 0.0, 0.3 * s], vec![], 1.0)
    }

    #[test]
    fn linear_target_roundtrip_is_pwt() {
        let v = bump_with_unit_v0();
        let p = InverseProblem::new(linear_target(12, 1.0, 1.0), v.clone(), 3);
        let r = reconstruct(&p, 30, 1e-10).unwrap();
        let rt = roundtrip_validate(&r, &v, 12).unwrap();
        assert!(rt.max_error <= 1e-7, "{:?}", rt.per_mode_error);
        assert!(rt.verdict.is_pwt);
    }

    #[test]
    fn gauge_covariance_and_k0_rescaling() {
        let (_, e) = synthetic(16);
        let flat = InverseProblem::new(e.clone(), ProfileFn::constant(1.0, 1.0), 2);
        let mut bumped = InverseProblem::new(e, bump_with_unit_v0(), 2);
        let a = reconstruct(&flat, 50, 1e-12).unwrap();
        let b = reconstruct(&bumped, 50, 1e-12).unwrap();
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((x - y).abs() < 1e-6);
        }
        assert!((a.fit.c0 - b.fit.c0).abs() < 1e-6);
        let rt = roundtrip_validate(&b, &bumped.v, 16).unwrap();
        assert!(rt.max_error <= 1e-6, "{:?}", rt.per_mode_error);

        bumped.k0 = 3.0;
        let c = reconstruct(&bumped, 50, 1e-12).unwrap();
        let (kb, kc) = (b.k_recovered.as_ref().unwrap(), c.k_recovered.as_ref().unwrap());
        for &x in &[-0.5, -0.2, 0.0, 0.41] {
            assert!((kc.value(x) - 3.0 * kb.value(x)).abs() < 1e-9 * kc.value(x));
        }
        let rc = roundtrip_validate(&c, &bumped.v, 16).unwrap();
        for (x, y) in rc.energies.iter().zip(&rt.energies) {
            assert!((x - y).abs() < 1e-9 * y.max(1.0));
        }
    }

    #[test]
    fn validation() {
        let v = ProfileFn::constant(1.0, 1.0);
        assert!(fit_qhat(&InverseProblem::new(linear_target(3, 1.0, 1.0), v.clone(), 2), 5, 1e-8).is_err());
        let mut e = linear_target(8, 1.0, 1.0);
        e[0] = 0.5;
        assert!(fit_qhat(&InverseProblem::new(e, v.clone(), 2), 5, 1e-8).is_err());
        let skew = ProfileFn::series(vec![1.0], vec![0.0, 0.2], 1.0);
        assert!(fit_qhat(&InverseProblem::new(linear_target(8, 1.0, 1.0), skew, 2), 5, 1e-8).is_err());
    }
}
