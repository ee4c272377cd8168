//! Sturm–Liouville problem -(p u')' - q u = lambda w u with Neumann ends.

pub mod fd;
pub mod gegenbauer;
pub mod liouville;
pub mod modes;
pub mod regularize;
pub mod shooting;

use crate::error::{Error, Result};
use crate::profiles::{coordinate_map, regularity_classify, Regularity, TLLModel};
use crate::quadrature::GaussLegendre;
use serde::Serialize;

pub use fd::{solve_spectrum_fd, FdOptions, GridKind};
pub use gegenbauer::{closed_form_gegenbauer, GegenbauerSpectrum};
pub use liouville::{liouville_transform, LiouvilleForm};
pub use modes::{eigenfunction, eigenfunctions, EigenMode};
pub use regularize::{regularization_study, RegularizationStudy};
pub use shooting::{solve_spectrum_shooting, ShootingOptions};

/// Coefficient access shared by both solvers.
pub trait SturmLiouville: Sync {
    /// Interval [a, b].
    fn interval(&self) -> (f64, f64);
    fn w(&self, x: f64) -> f64;
    fn p(&self, x: f64) -> f64;
    fn q(&self, x: f64) -> f64;
    /// True if q vanishes identically.
    fn q_is_zero(&self) -> bool;
    /// True if w or p vanish or blow up at an end; cell integrals near the
    /// ends then use endpoint-adapted quadrature.
    fn singular_ends(&self) -> bool {
        false
    }
    /// w evaluated from distances to the two ends.
    fn w_offsets(&self, da: f64, db: f64) -> f64 {
        let (a, b) = self.interval();
        self.w(if da < db { a + da } else { b - db })
    }
    fn p_offsets(&self, da: f64, db: f64) -> f64 {
        let (a, b) = self.interval();
        self.p(if da < db { a + da } else { b - db })
    }
    /// Reference eigenvalue scale (pi/L)^2 * mean(p/w).
    fn lambda_scale(&self) -> f64 {
        let (a, b) = self.interval();
        let gl = GaussLegendre::new(16);
        let l = b - a;
        let r = gl.composite(|x| self.p(x) / self.w(x), a, b, 8) / l;
        let c = (std::f64::consts::PI / l).powi(2) * r;
        if c.is_finite() && c > 0.0 {
            c
        } else {
            (std::f64::consts::PI / l).powi(2)
        }
    }
}

/// Coefficients w = K/v, p = vK and q of a channel model.
#[derive(Debug, Clone)]
pub struct SLCoefficients {
    pub model: TLLModel,
    pub regularity: Regularity,
    /// Mean velocity of the model's coordinate map.
    pub v0: f64,
}

/// Build the SL coefficients of a model and check positivity on the grid.
pub fn assemble_coefficients(model: &TLLModel) -> Result<SLCoefficients> {
    let xs = model.geometry.nodes();
    let n = xs.len();
    for &x in &xs[1..n - 1] {
        let v = model.v.value(x);
        let k = model.k.value(x);
        let (w, p) = (k / v, v * k);
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Positivity { name: "w", x, value: w });
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Positivity { name: "p", x, value: p });
        }
    }
    let v0 = coordinate_map(model, 1e-12)?.v0;
    Ok(SLCoefficients { model: model.clone(), regularity: regularity_classify(model).class, v0 })
}

impl SLCoefficients {
    pub fn length(&self) -> f64 {
        self.model.geometry.length
    }

    /// Same coefficients with v and K endpoint-regularized.
    pub fn regularized(&self, eps: f64) -> Self {
        let mut c = self.clone();
        c.model = self.model.regularized(eps);
        c
    }
}

impl SturmLiouville for SLCoefficients {
    fn interval(&self) -> (f64, f64) {
        let h = self.model.geometry.half();
        (-h, h)
    }
    fn w(&self, x: f64) -> f64 {
        self.model.k.value(x) / self.model.v.value(x)
    }
    fn p(&self, x: f64) -> f64 {
        self.model.v.value(x) * self.model.k.value(x)
    }
    fn q(&self, x: f64) -> f64 {
        self.model.q(x)
    }
    fn q_is_zero(&self) -> bool {
        !self.model.has_potential()
    }
    fn singular_ends(&self) -> bool {
        self.model.v.endpoint_singular() || self.model.k.endpoint_singular()
    }
    fn w_offsets(&self, da: f64, db: f64) -> f64 {
        self.model.k.value_offsets(da, db) / self.model.v.value_offsets(da, db)
    }
    fn p_offsets(&self, da: f64, db: f64) -> f64 {
        self.model.k.value_offsets(da, db) * self.model.v.value_offsets(da, db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Shooting,
    FiniteDifference,
    ClosedForm,
}

/// Eigenvalues lambda_0..lambda_nmax with energies E_n = sqrt(lambda_n).
#[derive(Debug, Clone, Serialize)]
pub struct SLSpectrum {
    pub lambdas: Vec<f64>,
    pub energies: Vec<f64>,
    pub method: Method,
    pub errors: Vec<f64>,
}

impl SLSpectrum {
    pub fn new(lambdas: Vec<f64>, errors: Vec<f64>, method: Method) -> Self {
        let energies = lambdas.iter().map(|l| l.max(0.0).sqrt()).collect();
        Self { lambdas, energies, method, errors }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Error estimates transported to the energies.
    pub fn energy_errors(&self) -> Vec<f64> {
        self.lambdas
            .iter()
            .zip(&self.errors)
            .map(|(l, e)| if *l > 0.0 { 0.5 * e / l.sqrt() } else { e.sqrt() })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::ProfileFn;

    #[test]
    fn coefficients_constant_and_gegenbauer() {
        let m = TLLModel::constant(2.0, 3.0, 1.0, 33).unwrap();
        let c = assemble_coefficients(&m).unwrap();
        assert_eq!(c.w(0.1), 1.5);
        assert_eq!(c.p(0.1), 6.0);
        let m = TLLModel::gegenbauer(1.0, 1.0, 1.0, 1.0, 33, false).unwrap();
        let c = assemble_coefficients(&m).unwrap();
        assert!((c.w(0.0) - 1.0).abs() < 1e-15 && (c.p(0.0) - 1.0).abs() < 1e-15);
        assert!((c.w(0.4) - 0.6).abs() < 1e-14);
        assert!((c.p(0.4) - 0.216).abs() < 1e-14);
    }

    #[test]
    fn products_match_profiles() {
        let g = crate::profiles::SystemGeometry::new(1.0, 65).unwrap();
        let v = ProfileFn::series(vec![1.0, 0.0, 0.3], vec![], 1.0);
        let k = ProfileFn::exp_quadratic(1.5, 0.7, 1.0);
        let m = TLLModel::new(g, v.clone(), k.clone()).unwrap();
        let c = assemble_coefficients(&m).unwrap();
        for x in g.nodes() {
            let (kv, vv) = (k.value(x), v.value(x));
            assert!((c.w(x) * c.p(x) - kv * kv).abs() <= 1e-12 * kv * kv);
            assert!((c.p(x) / c.w(x) - vv * vv).abs() <= 1e-12 * vv * vv);
        }
    }

    #[test]
    fn mass_potential_is_assembled() {
        let m = TLLModel::constant(1.0, 1.0, 1.0, 33).unwrap().with_mass(ProfileFn::constant(0.5, 1.0)).unwrap();
        let c = assemble_coefficients(&m).unwrap();
        assert!((c.q(0.2) + 0.25).abs() < 1e-14);
    }
}
