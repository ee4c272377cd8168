//! Liouville normal form: -v0^2 u'' + qhat(y) u = lambda u in the conformal
//! coordinate y, with qhat = -q/w + v0^2 (sqrt K)_yy / sqrt K.

use super::{SLCoefficients, SturmLiouville};
use crate::error::{Error, Result};
use crate::interp::UniformInterp;
use crate::profiles::CoordinateMap;

#[derive(Debug, Clone)]
pub struct LiouvilleForm {
    pub v0: f64,
    /// Uniform y grid.
    pub y: Vec<f64>,
    pub qhat: Vec<f64>,
    /// V = qhat / v0^2.
    pub potential: Vec<f64>,
    /// Richardson estimate of the second-derivative error (in qhat units).
    pub diff_error: f64,
    pub map: Option<CoordinateMap>,
    interp: UniformInterp,
    zero: bool,
}

impl LiouvilleForm {
    /// Normal form given directly by qhat samples on a uniform y grid.
    pub fn from_potential(y0: f64, y1: f64, v0: f64, qhat: Vec<f64>) -> Result<Self> {
        if let Some(i) = qhat.iter().position(|q| !q.is_finite()) {
            let y = y0 + (y1 - y0) * i as f64 / (qhat.len() - 1) as f64;
            return Err(Error::NonFinitePotential { y });
        }
        let n = qhat.len();
        let y: Vec<f64> = (0..n).map(|i| y0 + (y1 - y0) * i as f64 / (n - 1) as f64).collect();
        let potential = qhat.iter().map(|q| q / (v0 * v0)).collect();
        let zero = qhat.iter().all(|q| *q == 0.0);
        let interp = UniformInterp::new(y0, y1, qhat.clone(), 3);
        Ok(Self { v0, y, qhat, potential, diff_error: 0.0, map: None, interp, zero })
    }

    pub fn length(&self) -> f64 {
        self.y[self.y.len() - 1] - self.y[0]
    }

    pub fn spacing(&self) -> f64 {
        self.y[1] - self.y[0]
    }

    pub fn qhat_at(&self, y: f64) -> f64 {
        self.interp.eval(y)
    }

    pub fn max_abs_qhat(&self) -> f64 {
        self.qhat.iter().fold(0.0, |m, q| m.max(q.abs()))
    }
}

impl SturmLiouville for LiouvilleForm {
    fn interval(&self) -> (f64, f64) {
        (self.y[0], self.y[self.y.len() - 1])
    }
    fn w(&self, _: f64) -> f64 {
        1.0
    }
    fn p(&self, _: f64) -> f64 {
        self.v0 * self.v0
    }
    fn q(&self, y: f64) -> f64 {
        -self.interp.eval(y)
    }
    fn q_is_zero(&self) -> bool {
        self.zero
    }
}

/// Second differences of uniformly spaced samples: O(h^4) in the interior
/// by Richardson over spacings h and 2h, one-sided O(h^2) at the ends.
/// Returns the derivative and a per-node error estimate.
pub fn second_derivative(s: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = s.len();
    let h2 = h * h;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for j in 1..n - 1 {
        let dh = ((s[j + 1] - s[j]) - (s[j] - s[j - 1])) / h2;
        if j >= 2 && j + 2 < n {
            let d2h = ((s[j + 2] - s[j]) - (s[j] - s[j - 2])) / (4.0 * h2);
            d[j] = (4.0 * dh - d2h) / 3.0;
            e[j] = (dh - d2h).abs() / 3.0;
        } else {
            d[j] = dh;
            e[j] = f64::NAN;
        }
    }
    d[0] = (2.0 * (s[0] - s[1]) - 3.0 * (s[1] - s[2]) + (s[2] - s[3])) / h2;
    d[n - 1] = (2.0 * (s[n - 1] - s[n - 2]) - 3.0 * (s[n - 2] - s[n - 3]) + (s[n - 3] - s[n - 4])) / h2;
    e[0] = f64::NAN;
    e[n - 1] = f64::NAN;
    // Fill the edge estimates from the nearest interior estimate.
    let interior: Vec<usize> = (0..n).filter(|&j| e[j].is_finite()).collect();
    if let (Some(&lo), Some(&hi)) = (interior.first(), interior.last()) {
        for j in 0..n {
            if !e[j].is_finite() {
                e[j] = if j < lo { e[lo] } else { e[hi] };
            }
        }
    }
    (d, e)
}

/// Transform a model to normal form on a uniform y grid with as many nodes
/// as the model grid.
pub fn liouville_transform(coeffs: &SLCoefficients, map: &CoordinateMap) -> Result<LiouvilleForm> {
    let n = coeffs.model.geometry.grid_points;
    let v0 = map.v0;
    let (ys, xs) = map.x_of_y_table(n);
    let h = ys[1] - ys[0];
    let s: Vec<f64> = xs.iter().map(|&x| coeffs.model.k.value(x).sqrt()).collect();
    let (d2, err) = second_derivative(&s, h);
    let mut qhat = Vec::with_capacity(n);
    let mut est = 0.0f64;
    for j in 0..n {
        let x = xs[j];
        let q = if coeffs.model.has_potential() { -coeffs.q(x) / coeffs.w(x) } else { 0.0 };
        let val = q + v0 * v0 * d2[j] / s[j];
        if !val.is_finite() {
            return Err(Error::NonFinitePotential { y: ys[j] });
        }
        qhat.push(val);
        est = est.max(v0 * v0 * err[j] / s[j]);
    }
    let max_q = qhat.iter().fold(0.0f64, |m, q| m.max(q.abs()));
    // Scale-aware floor so that qhat = 0 does not turn rounding into noise.
    let floor = (std::f64::consts::PI * v0 / map.length).powi(2);
    let limit = 1e-4 * max_q.max(floor);
    if est > limit {
        return Err(Error::DifferentiationNoise { estimate: est, limit });
    }
    let mut form = LiouvilleForm::from_potential(ys[0], ys[n - 1], v0, qhat)?;
    form.diff_error = est;
    form.map = Some(map.clone());
    Ok(form)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{coordinate_map, ProfileFn, SystemGeometry, TLLModel};
    use crate::sl::{assemble_coefficients, solve_spectrum_fd, FdOptions};

    #[test]
    fn constant_k_gives_zero_potential() {
        let g = SystemGeometry::new(1.0, 257).unwrap();
        let m = TLLModel::new(g, ProfileFn::series(vec![1.0, 0.0, 0.4], vec![], 1.0), ProfileFn::constant(2.0, 1.0)).unwrap();
        let c = assemble_coefficients(&m).unwrap();
        let map = coordinate_map(&m, 1e-13).unwrap();
        let f = liouville_transform(&c, &map).unwrap();
        assert!(f.max_abs_qhat() < 1e-12);
    }

    #[test]
    fn gaussian_k_against_fine_grid_oracle() {
        // v = 1 so y = x; compare with centred differences on a 10x finer grid.
        let beta = 0.8;
        let g = SystemGeometry::new(1.0, 401).unwrap();
        let m = TLLModel::new(g, ProfileFn::constant(1.0, 1.0), ProfileFn::exp_quadratic(1.0, beta, 1.0)).unwrap();
        let c = assemble_coefficients(&m).unwrap();
        let map = coordinate_map(&m, 1e-13).unwrap();
        let f = liouville_transform(&c, &map).unwrap();
        let hf = g.spacing() / 10.0;
        let sk = |y: f64| (beta * y * y).exp().sqrt();
        for j in (10..391).step_by(20) {
            let y = f.y[j];
            let oracle = (sk(y + hf) - 2.0 * sk(y) + sk(y - hf)) / (hf * hf) / sk(y);
            assert!((f.qhat[j] - oracle).abs() < 1e-5, "{j}: {} vs {oracle}", f.qhat[j]);
        }
    }

    #[test]
    fn isospectral_with_x_problem() {
        let g = SystemGeometry::new(1.0, 2049).unwrap();
        let m = TLLModel::new(
            g,
            ProfileFn::series(vec![1.0, 0.0, 0.3], vec![], 1.0),
            ProfileFn::series(vec![1.0, 0.0, 0.0, 0.0, 0.2], vec![], 1.0),
        )
        .unwrap();
        let c = assemble_coefficients(&m).unwrap();
        let map = coordinate_map(&m, 1e-13).unwrap();
        let f = liouville_transform(&c, &map).unwrap();
        let o = FdOptions { base_points: 513, ..Default::default() };
        let a = solve_spectrum_fd(&c, 8, &o).unwrap();
        let b = solve_spectrum_fd(&f, 8, &o).unwrap();
        for n in 1..=8 {
            assert!((a.lambdas[n] - b.lambdas[n]).abs() / a.lambdas[n] < 1e-6, "{n}: {} {}", a.lambdas[n], b.lambdas[n]);
        }
    }
}
