//! Channel profiles v(x), K(x), q(x), the conformal coordinate map and
//! structural classification (parity, endpoint regularity).

use crate::error::{Error, Result};
use crate::interp::UniformInterp;
use crate::quadrature::{integrate_adaptive, integrate_tanh_sinh_offsets};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Interval [-L/2, L/2] with a shared uniform grid of odd size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemGeometry {
    pub length: f64,
    pub grid_points: usize,
}

impl SystemGeometry {
    pub fn new(length: f64, grid_points: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidInput(format!("length must be positive, got {length}")));
        }
        if grid_points < 17 || grid_points % 2 == 0 {
            return Err(Error::InvalidInput(format!("grid_points must be odd and >= 17, got {grid_points}")));
        }
        Ok(Self { length, grid_points })
    }

    pub fn half(&self) -> f64 {
        0.5 * self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.grid_points - 1) as f64
    }

    /// Grid nodes; x_i and x_{n-1-i} are exact negatives of each other.
    pub fn nodes(&self) -> Vec<f64> {
        symmetric_nodes(self.length, self.grid_points)
    }
}

pub(crate) fn symmetric_nodes(length: f64, n: usize) -> Vec<f64> {
    let m = (n - 1) / 2;
    let h = length / (n - 1) as f64;
    let mut x: Vec<f64> = (0..n).map(|i| (i as f64 - m as f64) * h).collect();
    x[0] = -0.5 * length;
    x[n - 1] = 0.5 * length;
    x
}

/// Closed-form or sampled profile shape. `s` below denotes 2x/L.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Descriptor {
    Constant { value: f64 },
    /// amplitude * sqrt(1 - s^2)
    Sqrt { amplitude: f64 },
    /// amplitude * (1 - s^2)^alpha
    Power { amplitude: f64, alpha: f64 },
    /// sum_k cos[k] cos(k pi x / L) + sin[k] sin(k pi x / L), k = 0, 1, ...
    Series {
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// scale * exp(beta x^2)
    ExpQuadratic { scale: f64, beta: f64 },
    /// Samples on the model grid; order 1 (linear) or 3 (cubic).
    Tabulated { samples: Vec<f64>, order: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ParityHint {
    Even,
    #[default]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
    Neither,
}

/// A profile on [-L/2, L/2].
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileFn {
    pub descriptor: Descriptor,
    pub length: f64,
    pub parity_hint: ParityHint,
    /// Endpoint regularization level; 0 disables it.
    reg_eps: f64,
    reg_floor: f64,
    table: Option<UniformInterp>,
}

impl ProfileFn {
    pub fn new(descriptor: Descriptor, length: f64) -> Result<Self> {
        let table = match &descriptor {
            Descriptor::Tabulated { samples, order } => {
                if samples.len() < 4 {
                    return Err(Error::InvalidInput("tabulated profile needs at least 4 samples".into()));
                }
                if !matches!(order, 1 | 3) {
                    return Err(Error::InvalidInput(format!("interpolation order must be 1 or 3, got {order}")));
                }
                Some(UniformInterp::new(-0.5 * length, 0.5 * length, samples.clone(), *order))
            }
            _ => None,
        };
        let parity_hint = match &descriptor {
            Descriptor::Constant { .. } | Descriptor::Sqrt { .. } | Descriptor::Power { .. } | Descriptor::ExpQuadratic { .. } => ParityHint::Even,
            Descriptor::Series { sin, .. } if sin.iter().all(|c| *c == 0.0) => ParityHint::Even,
            _ => ParityHint::None,
        };
        Ok(Self { descriptor, length, parity_hint, reg_eps: 0.0, reg_floor: 0.0, table })
    }

    pub fn constant(value: f64, length: f64) -> Self {
        Self::new(Descriptor::Constant { value }, length).expect("constant profile")
    }

    pub fn sqrt(amplitude: f64, length: f64) -> Self {
        Self::new(Descriptor::Sqrt { amplitude }, length).expect("sqrt profile")
    }

    pub fn power(amplitude: f64, alpha: f64, length: f64) -> Self {
        Self::new(Descriptor::Power { amplitude, alpha }, length).expect("power profile")
    }

    pub fn series(cos: Vec<f64>, sin: Vec<f64>, length: f64) -> Self {
        Self::new(Descriptor::Series { cos, sin }, length).expect("series profile")
    }

    pub fn exp_quadratic(scale: f64, beta: f64, length: f64) -> Self {
        Self::new(Descriptor::ExpQuadratic { scale, beta }, length).expect("exp profile")
    }

    /// Sample `f` on the nodes of `geometry`.
    pub fn tabulate<F: Fn(f64) -> f64>(f: F, geometry: &SystemGeometry, order: u8) -> Result<Self> {
        let samples = geometry.nodes().into_iter().map(f).collect();
        Self::new(Descriptor::Tabulated { samples, order }, geometry.length)
    }

    pub fn reg_eps(&self) -> f64 {
        self.reg_eps
    }

    /// Endpoint-regularized copy. Vanishing factors (1 - s^2) are clamped at
    /// eps^2, so a square-root profile becomes max(v, eps * v_max); other
    /// descriptors are floored at eps * max|p|.
    pub fn regularized(&self, eps: f64) -> Self {
        let mut out = self.clone();
        out.reg_eps = eps;
        out.reg_floor = if eps > 0.0 { eps * self.scan_max_abs() } else { 0.0 };
        out
    }

    fn half(&self) -> f64 {
        0.5 * self.length
    }

    /// Largest |p| over a dense scan of the interior.
    pub fn scan_max_abs(&self) -> f64 {
        let n = 4097;
        let xs = symmetric_nodes(self.length, n);
        xs[1..n - 1].iter().map(|&x| self.value(x).abs()).filter(|v| v.is_finite()).fold(0.0, f64::max)
    }

    fn oms2(&self, x: f64) -> f64 {
        let h = self.half();
        ((h + x) * (h - x) / (h * h)).max(0.0)
    }

    fn raw(&self, x: f64, oms2: f64) -> f64 {
        let oms2_eff = if self.reg_eps > 0.0 { oms2.max(self.reg_eps * self.reg_eps) } else { oms2 };
        let v = match &self.descriptor {
            Descriptor::Constant { value } => *value,
            Descriptor::Sqrt { amplitude } => amplitude * oms2_eff.sqrt(),
            Descriptor::Power { amplitude, alpha } => {
                if *alpha == 0.0 {
                    *amplitude
                } else {
                    amplitude * oms2_eff.powf(*alpha)
                }
            }
            Descriptor::Series { cos, sin } => {
                let k0 = PI * x / self.length;
                let mut s = 0.0;
                for (k, c) in cos.iter().enumerate() {
                    s += c * (k as f64 * k0).cos();
                }
                for (k, c) in sin.iter().enumerate() {
                    s += c * (k as f64 * k0).sin();
                }
                s
            }
            Descriptor::ExpQuadratic { scale, beta } => scale * (beta * x * x).exp(),
            Descriptor::Tabulated { .. } => self.table.as_ref().expect("table").eval(x),
        };
        match &self.descriptor {
            Descriptor::Sqrt { .. } | Descriptor::Power { .. } => v,
            _ if self.reg_eps > 0.0 => v.max(self.reg_floor),
            _ => v,
        }
    }

    /// Value at x without the domain check (x is clamped).
    pub fn value(&self, x: f64) -> f64 {
        let x = x.clamp(-self.half(), self.half());
        self.raw(x, self.oms2(x))
    }

    /// Value given the distances to both ends, which keeps the vanishing
    /// factor of endpoint-singular descriptors accurate.
    pub fn value_offsets(&self, da: f64, db: f64) -> f64 {
        let x = if da < db { -self.half() + da } else { self.half() - db };
        let l2 = self.length * self.length;
        self.raw(x, (4.0 * da * db / l2).max(0.0))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let h = self.half();
        if !(x.abs() <= h * (1.0 + 1e-12)) {
            return Err(Error::Domain { x, lo: -h, hi: h });
        }
        Ok(self.value(x))
    }

    /// Like `eval` but rejects non-positive or non-finite values.
    pub fn eval_positive(&self, x: f64) -> Result<f64> {
        let v = self.eval(x)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::SingularValue { x })
        }
    }

    /// First derivative; analytic for closed forms.
    pub fn derivative(&self, x: f64) -> f64 {
        let x = x.clamp(-self.half(), self.half());
        let l = self.length;
        let oms2 = self.oms2(x);
        let clamped = self.reg_eps > 0.0 && oms2 < self.reg_eps * self.reg_eps;
        match &self.descriptor {
            Descriptor::Constant { .. } => 0.0,
            Descriptor::Sqrt { amplitude } => {
                if clamped {
                    0.0
                } else {
                    -amplitude * 4.0 * x / (l * l) / oms2.sqrt()
                }
            }
            Descriptor::Power { amplitude, alpha } => {
                if clamped || *alpha == 0.0 {
                    0.0
                } else {
                    amplitude * alpha * oms2.powf(alpha - 1.0) * (-8.0 * x / (l * l))
                }
            }
            Descriptor::Series { cos, sin } => {
                let k0 = PI / l;
                let mut s = 0.0;
                for (k, c) in cos.iter().enumerate() {
                    s -= c * k as f64 * k0 * (k as f64 * k0 * x).sin();
                }
                for (k, c) in sin.iter().enumerate() {
                    s += c * k as f64 * k0 * (k as f64 * k0 * x).cos();
                }
                if self.reg_eps > 0.0 && self.raw(x, oms2) <= self.reg_floor {
                    0.0
                } else {
                    s
                }
            }
            Descriptor::ExpQuadratic { scale, beta } => scale * 2.0 * beta * x * (beta * x * x).exp(),
            Descriptor::Tabulated { .. } => self.table.as_ref().expect("table").derivative(x),
        }
    }

    /// True if the descriptor vanishes or blows up at x = +-L/2.
    pub fn endpoint_singular(&self) -> bool {
        if self.reg_eps > 0.0 {
            return false;
        }
        match &self.descriptor {
            Descriptor::Sqrt { .. } => true,
            Descriptor::Power { alpha, .. } => *alpha != 0.0,
            _ => {
                let h = self.half();
                let a = self.value(-h);
                let b = self.value(h);
                !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0)
            }
        }
    }
}

/// Potential term of the channel Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    None,
    /// q(x) supplied directly.
    Direct(ProfileFn),
    /// q = -v0^2 M(x)^2 v(x).
    Mass { mass: ProfileFn, v0: f64 },
}

/// Inhomogeneous channel: geometry, velocity, Luttinger parameter, potential.
#[derive(Debug, Clone, PartialEq)]
pub struct TLLModel {
    pub geometry: SystemGeometry,
    pub v: ProfileFn,
    pub k: ProfileFn,
    pub potential: Potential,
}

impl TLLModel {
    pub fn new(geometry: SystemGeometry, v: ProfileFn, k: ProfileFn) -> Result<Self> {
        let m = Self { geometry, v, k, potential: Potential::None };
        m.validate()?;
        Ok(m)
    }

    pub fn with_q(mut self, q: ProfileFn) -> Result<Self> {
        check_length(&q, &self.geometry)?;
        self.potential = Potential::Direct(q);
        self.validate()?;
        Ok(self)
    }

    /// Attach a mass profile; q follows from q = -v0^2 M^2 v.
    pub fn with_mass(mut self, mass: ProfileFn) -> Result<Self> {
        check_length(&mass, &self.geometry)?;
        let v0 = coordinate_map(&self, 1e-12)?.v0;
        self.potential = Potential::Mass { mass, v0 };
        Ok(self)
    }

    pub fn constant(v: f64, k: f64, length: f64, grid_points: usize) -> Result<Self> {
        let g = SystemGeometry::new(length, grid_points)?;
        Self::new(g, ProfileFn::constant(v, length), ProfileFn::constant(k, length))
    }

    /// v(x) = v sqrt(1 - s^2), K(x) = K (1 - s^2)^alpha, optionally with the
    /// fine-tuned potential q = -(2 v alpha / L)^2 w that completes the square.
    pub fn gegenbauer(alpha: f64, v: f64, k: f64, length: f64, grid_points: usize, massive: bool) -> Result<Self> {
        if alpha <= -0.5 {
            return Err(Error::InvalidInput(format!("alpha must exceed -1/2, got {alpha}")));
        }
        let g = SystemGeometry::new(length, grid_points)?;
        let m = Self::new(g, ProfileFn::sqrt(v, length), ProfileFn::power(k, alpha, length))?;
        if massive && alpha != 0.0 {
            let c = (2.0 * v * alpha / length).powi(2);
            m.with_q(ProfileFn::power(-c * k / v, alpha - 0.5, length))
        } else {
            Ok(m)
        }
    }

    /// Copy with v and K endpoint-regularized at level eps.
    pub fn regularized(&self, eps: f64) -> Self {
        let mut m = self.clone();
        m.v = self.v.regularized(eps);
        m.k = self.k.regularized(eps);
        m
    }

    pub fn has_potential(&self) -> bool {
        !matches!(self.potential, Potential::None)
    }

    pub fn q(&self, x: f64) -> f64 {
        match &self.potential {
            Potential::None => 0.0,
            Potential::Direct(q) => q.value(x),
            Potential::Mass { mass, v0 } => {
                let m = mass.value(x);
                -v0 * v0 * m * m * self.v.value(x)
            }
        }
    }

    pub fn q_derivative(&self, x: f64) -> f64 {
        match &self.potential {
            Potential::None => 0.0,
            Potential::Direct(q) => q.derivative(x),
            Potential::Mass { mass, v0 } => {
                let m = mass.value(x);
                -v0 * v0 * (2.0 * m * mass.derivative(x) * self.v.value(x) + m * m * self.v.derivative(x))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        check_length(&self.v, &self.geometry)?;
        check_length(&self.k, &self.geometry)?;
        for p in [&self.v, &self.k] {
            if let Descriptor::Tabulated { samples, .. } = &p.descriptor {
                if samples.len() != self.geometry.grid_points {
                    return Err(Error::InvalidInput(format!(
                        "tabulated profile has {} samples, grid has {}",
                        samples.len(),
                        self.geometry.grid_points
                    )));
                }
            }
        }
        let xs = self.geometry.nodes();
        let n = xs.len();
        for &x in &xs[1..n - 1] {
            for (name, p) in [("v", &self.v), ("K", &self.k)] {
                let val = p.value(x);
                if !(val > 0.0 && val.is_finite()) {
                    return Err(Error::Positivity { name, x, value: val });
                }
            }
            let q = self.q(x);
            if !q.is_finite() {
                return Err(Error::InvalidInput(format!("q is not finite at x = {x}")));
            }
        }
        Ok(())
    }
}

fn check_length(p: &ProfileFn, g: &SystemGeometry) -> Result<()> {
    if (p.length - g.length).abs() > 1e-12 * g.length {
        return Err(Error::InvalidInput(format!("profile length {} differs from geometry length {}", p.length, g.length)));
    }
    Ok(())
}

/// Result of the parity classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParityReport {
    pub parity: Parity,
    pub even_defect: f64,
    pub odd_defect: f64,
}

impl ParityReport {
    pub fn defect(&self) -> f64 {
        match self.parity {
            Parity::Odd => self.odd_defect,
            Parity::Even => self.even_defect,
            Parity::Neither => self.even_defect.min(self.odd_defect),
        }
    }
}

/// Classify samples `f` on a grid symmetric about zero (interior nodes only,
/// so endpoint singularities do not poison the defect).
pub fn parity_of_samples(f: &[f64], tol: f64) -> ParityReport {
    let n = f.len();
    let scale = f[1..n - 1].iter().map(|v| v.abs()).fold(0.0, f64::max);
    let (mut de, mut dodd) = (0.0f64, 0.0f64);
    for i in 1..n - 1 {
        let a = f[i];
        let b = f[n - 1 - i];
        de = de.max((a - b).abs());
        dodd = dodd.max((a + b).abs());
    }
    let (de, dodd) = if scale > 0.0 { (de / scale, dodd / scale) } else { (0.0, 0.0) };
    let parity = if de <= tol {
        Parity::Even
    } else if dodd <= tol {
        Parity::Odd
    } else {
        Parity::Neither
    };
    ParityReport { parity, even_defect: de, odd_defect: dodd }
}

pub fn parity_check(p: &ProfileFn, geometry: &SystemGeometry, tol: f64) -> ParityReport {
    let f: Vec<f64> = geometry.nodes().iter().map(|&x| p.value(x)).collect();
    parity_of_samples(&f, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularity {
    Regular,
    IrregularEndpoint,
    IrregularAfterUnfolding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityReport {
    pub class: Regularity,
    /// v, K > 0 on the closed interval.
    pub positive_closed: bool,
    /// d/dx(vK) continuous (fails for piecewise-linear tables).
    pub flux_continuous: bool,
    /// Largest scaled endpoint slope among K, v and q.
    pub endpoint_slope: f64,
}

/// Decide whether the problem is regular, irregular only at the endpoints,
/// or regular but losing smoothness when evenly extended past the ends.
pub fn regularity_classify(model: &TLLModel) -> RegularityReport {
    let h = model.geometry.half();
    let positive_closed = [&model.v, &model.k].iter().all(|p| {
        [-h, h].iter().all(|&x| {
            let v = p.value(x);
            v > 0.0 && v.is_finite()
        })
    }) && [-h, h].iter().all(|&x| model.q(x).is_finite());
    let flux_continuous = [&model.v, &model.k]
        .iter()
        .all(|p| !matches!(p.descriptor, Descriptor::Tabulated { order: 1, .. }));
    if !positive_closed {
        return RegularityReport { class: Regularity::IrregularEndpoint, positive_closed, flux_continuous, endpoint_slope: f64::NAN };
    }
    // One-sided second-order differences at both ends.
    let d = model.geometry.length * 1e-4;
    let slope = |f: &dyn Fn(f64) -> f64, scale: f64| -> f64 {
        if scale == 0.0 {
            return 0.0;
        }
        let left = (-3.0 * f(-h) + 4.0 * f(-h + d) - f(-h + 2.0 * d)) / (2.0 * d);
        let right = (3.0 * f(h) - 4.0 * f(h - d) + f(h - 2.0 * d)) / (2.0 * d);
        left.abs().max(right.abs()) * model.geometry.length / scale
    };
    let kf = |x: f64| model.k.value(x);
    let vf = |x: f64| model.v.value(x);
    let qf = |x: f64| model.q(x);
    let q_scale = if model.has_potential() {
        symmetric_nodes(model.geometry.length, 257).iter().map(|&x| model.q(x).abs()).fold(0.0, f64::max)
    } else {
        0.0
    };
    let s = slope(&kf, model.k.scan_max_abs())
        .max(slope(&vf, model.v.scan_max_abs()))
        .max(slope(&qf, q_scale));
    // Differencing error of the stencil is O(d^2) relative.
    let class = if s > 1e-6 { Regularity::IrregularAfterUnfolding } else { Regularity::Regular };
    RegularityReport { class, positive_closed, flux_continuous, endpoint_slope: s }
}

/// Conformal coordinate y(x) = int_0^x v0/v and the mean velocity v0.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMap {
    pub v0: f64,
    pub length: f64,
    pub x_nodes: Vec<f64>,
    pub y_of_x: Vec<f64>,
    pub convergent: bool,
    singular_ends: bool,
    v: ProfileFn,
}

/// Partial integrals of 1/v that stop short of the ends by delta, delta/2,
/// delta/4. Divergent when both increments exceed tol and do not shrink.
fn divergence_probe(v: &ProfileFn, tol: f64) -> Result<()> {
    let l = v.length;
    let h = 0.5 * l;
    let mut vals = [0.0; 3];
    for (i, delta) in [1e-4 * l, 0.5e-4 * l, 0.25e-4 * l].iter().enumerate() {
        let r = integrate_tanh_sinh_offsets(
            |_, da, db| 1.0 / v.value_offsets(da + delta, db + delta),
            -h + delta,
            h - delta,
            1e-12,
        )?;
        vals[i] = r.value;
    }
    let d1 = vals[1] - vals[0];
    let d2 = vals[2] - vals[1];
    let thresh = tol * vals[2].abs().max(l);
    if d1 > thresh && d2 > thresh && d2 >= 0.95 * d1 {
        return Err(Error::DivergentV0 { first: d1, second: d2 });
    }
    Ok(())
}

pub fn coordinate_map(model: &TLLModel, tol: f64) -> Result<CoordinateMap> {
    coordinate_map_for(&model.v, model.geometry.grid_points, tol)
}

/// Coordinate map for a bare velocity profile sampled on `grid_points` nodes.
pub fn coordinate_map_for(v: &ProfileFn, grid_points: usize, tol: f64) -> Result<CoordinateMap> {
    if tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let l = v.length;
    let singular = v.endpoint_singular();
    let xs = symmetric_nodes(l, grid_points);
    let n = xs.len();
    let rel = tol.max(1e-15);
    // Integral of 1/v over each grid panel.
    let panel = |i: usize| -> Result<f64> {
        let (a, b) = (xs[i], xs[i + 1]);
        if singular && (i == 0 || i == n - 2) {
            let left = i == 0;
            let r = integrate_tanh_sinh_offsets(
                |_, da, db| {
                    if left {
                        1.0 / v.value_offsets(da, l - da)
                    } else {
                        1.0 / v.value_offsets(l - db, db)
                    }
                },
                a,
                b,
                rel,
            )?;
            Ok(r.value)
        } else {
            Ok(integrate_adaptive(|x| 1.0 / v.value(x), a, b, rel, 0.0, 200)?.value)
        }
    };
    if singular {
        divergence_probe(v, tol)?;
    }
    let panels = (0..n - 1).map(panel).collect::<Result<Vec<f64>>>()?;
    let total: f64 = panels.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::DivergentV0 { first: total, second: total });
    }
    let v0 = l / total;
    let m = (n - 1) / 2;
    let mut y = vec![0.0; n];
    for i in m + 1..n {
        y[i] = y[i - 1] + v0 * panels[i - 1];
    }
    for i in (0..m).rev() {
        y[i] = y[i + 1] - v0 * panels[i];
    }
    Ok(CoordinateMap { v0, length: l, x_nodes: xs, y_of_x: y, convergent: true, singular_ends: singular, v: v.clone() })
}

impl CoordinateMap {
    fn panel_index(&self, x: f64) -> usize {
        let n = self.x_nodes.len();
        let hx = self.length / (n - 1) as f64;
        (((x + 0.5 * self.length) / hx).floor().max(0.0) as usize).min(n - 2)
    }

    /// y(x) at an arbitrary point.
    pub fn y(&self, x: f64) -> f64 {
        let h = 0.5 * self.length;
        let x = x.clamp(-h, h);
        let n = self.x_nodes.len();
        let i = self.panel_index(x);
        let (a, b) = (self.x_nodes[i], self.x_nodes[i + 1]);
        let end_panel = self.singular_ends && (i == 0 || i == n - 2);
        // Integrate from the node on the regular side of the panel.
        let from_left = if end_panel { i != 0 } else { x - a <= b - x };
        let (base, start) = if from_left { (self.y_of_x[i], a) } else { (self.y_of_x[i + 1], b) };
        if x == start {
            return base;
        }
        let l = self.length;
        let (lo, hi) = if start < x { (start, x) } else { (x, start) };
        let integral = if end_panel {
            let left = i == 0;
            let (off_a, off_b) = (lo + h, h - hi);
            integrate_tanh_sinh_offsets(
                |_, da, db| {
                    if left {
                        1.0 / self.v.value_offsets(off_a + da, l - off_a - da)
                    } else {
                        1.0 / self.v.value_offsets(l - off_b - db, off_b + db)
                    }
                },
                lo,
                hi,
                1e-14,
            )
            .map(|r| r.value)
            .unwrap_or(f64::NAN)
        } else {
            crate::quadrature::GaussLegendre::new(12).integrate(|s| 1.0 / self.v.value(s), lo, hi)
        };
        let sign = if start < x { 1.0 } else { -1.0 };
        base + sign * self.v0 * integral
    }

    /// dy/dx = v0 / v(x).
    pub fn dy_dx(&self, x: f64) -> f64 {
        self.v0 / self.v.value(x)
    }

    pub fn y_min(&self) -> f64 {
        self.y_of_x[0]
    }

    pub fn y_max(&self) -> f64 {
        *self.y_of_x.last().expect("non-empty")
    }

    /// Inverse map x(y) by bracketed Newton iteration.
    pub fn x(&self, y: f64) -> f64 {
        let n = self.x_nodes.len();
        if y <= self.y_of_x[0] {
            return self.x_nodes[0];
        }
        if y >= self.y_of_x[n - 1] {
            return self.x_nodes[n - 1];
        }
        let i = match self.y_of_x.binary_search_by(|p| p.total_cmp(&y)) {
            Ok(i) => return self.x_nodes[i],
            Err(i) => i - 1,
        };
        let (mut lo, mut hi) = (self.x_nodes[i], self.x_nodes[i + 1]);
        let mut x = lo + (hi - lo) * (y - self.y_of_x[i]) / (self.y_of_x[i + 1] - self.y_of_x[i]);
        for _ in 0..100 {
            let r = self.y(x) - y;
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.dy_dx(x);
            let mut nx = x - r / d;
            if !(nx > lo && nx < hi) || !nx.is_finite() {
                nx = 0.5 * (lo + hi);
            }
            if (nx - x).abs() <= 4.0 * f64::EPSILON * self.length || hi - lo <= 4.0 * f64::EPSILON * self.length {
                return nx;
            }
            x = nx;
        }
        x
    }

    /// x at `n` uniformly spaced y values spanning [y_min, y_max].
    pub fn x_of_y_table(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = (self.y_min(), self.y_max());
        let ys: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        let xs = ys.iter().map(|&y| self.x(y)).collect();
        (ys, xs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_validation() {
        assert!(SystemGeometry::new(1.0, 16).is_err());
        assert!(SystemGeometry::new(1.0, 18).is_err());
        assert!(SystemGeometry::new(-1.0, 33).is_err());
        let g = SystemGeometry::new(2.0, 33).unwrap();
        let x = g.nodes();
        assert_eq!(x[16], 0.0);
        for i in 0..33 {
            assert_eq!(x[i], -x[32 - i]);
        }
    }

    #[test]
    fn profile_values() {
        assert_eq!(ProfileFn::constant(1.0, 1.0).eval(0.3).unwrap(), 1.0);
        assert_eq!(ProfileFn::sqrt(1.0, 1.0).eval(0.0).unwrap(), 1.0);
        assert!((ProfileFn::power(2.0, 1.0, 1.0).eval(0.25).unwrap() - 1.5).abs() < 1e-15);
        assert!(matches!(ProfileFn::constant(1.0, 1.0).eval(0.7), Err(Error::Domain { .. })));
        assert!(matches!(ProfileFn::sqrt(1.0, 1.0).eval_positive(0.5), Err(Error::SingularValue { .. })));
        let s = ProfileFn::series(vec![1.0, 0.0, 0.5], vec![], 1.0);
        assert!((s.value(0.25) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let l = 1.3;
        let ps = [
            ProfileFn::sqrt(1.2, l),
            ProfileFn::power(0.7, 1.5, l),
            ProfileFn::series(vec![1.0, 0.2, -0.1], vec![0.0, 0.05, 0.03], l),
            ProfileFn::exp_quadratic(2.0, -0.8, l),
        ];
        for p in &ps {
            for &x in &[-0.4, 0.1, 0.33] {
                let d = 1e-6;
                let fd = (p.value(x + d) - p.value(x - d)) / (2.0 * d);
                assert!((fd - p.derivative(x)).abs() < 1e-7, "{:?}", p.descriptor);
            }
        }
    }

    #[test]
    fn regularization_clamps_sqrt() {
        let p = ProfileFn::sqrt(2.0, 1.0).regularized(1e-3);
        assert!((p.value(0.5) - 2e-3).abs() < 1e-15);
        assert_eq!(p.value(0.0), 2.0);
        assert!(!p.endpoint_singular());
    }

    #[test]
    fn parity_classification() {
        let g = SystemGeometry::new(1.0, 65).unwrap();
        let c = parity_check(&ProfileFn::constant(1.0, 1.0), &g, 1e-12);
        assert_eq!(c.parity, Parity::Even);
        assert_eq!(c.even_defect, 0.0);
        let cube = ProfileFn::tabulate(|x| x * x * x, &g, 3).unwrap();
        assert_eq!(parity_check(&cube, &g, 1e-12).parity, Parity::Odd);
        let skew = ProfileFn::series(vec![1.0], vec![0.0, 0.0, 0.1], 1.0);
        let r = parity_check(&skew, &g, 1e-8);
        assert_eq!(r.parity, Parity::Neither);
        // Grid oracle: max |0.2 sin(2 pi x)| / max v.
        let xs = g.nodes();
        let num = xs.iter().map(|x| (0.2 * (2.0 * PI * x).sin()).abs()).fold(0.0, f64::max);
        let den = xs[1..64].iter().map(|x| (1.0 + 0.1 * (2.0 * PI * x).sin()).abs()).fold(0.0, f64::max);
        assert!((r.even_defect - num / den).abs() < 1e-14);
    }

    #[test]
    fn regularity_classes() {
        let m = TLLModel::constant(1.0, 1.0, 1.0, 65).unwrap();
        assert_eq!(regularity_classify(&m).class, Regularity::Regular);
        let m = TLLModel::gegenbauer(0.0, 1.0, 1.0, 1.0, 65, false).unwrap();
        assert_eq!(regularity_classify(&m).class, Regularity::IrregularEndpoint);
        let g = SystemGeometry::new(1.0, 65).unwrap();
        // cos(pi x / L) has a nonzero slope at the ends.
        let k = ProfileFn::series(vec![1.0, 0.3], vec![], 1.0);
        let m = TLLModel::new(g, ProfileFn::constant(1.0, 1.0), k).unwrap();
        let r = regularity_classify(&m);
        assert_eq!(r.class, Regularity::IrregularAfterUnfolding);
        // cos(2 pi x / L) is flat at the ends.
        let k = ProfileFn::series(vec![1.0, 0.0, 0.3], vec![], 1.0);
        let m = TLLModel::new(g, ProfileFn::constant(1.0, 1.0), k).unwrap();
        assert_eq!(regularity_classify(&m).class, Regularity::Regular);
    }

    #[test]
    fn model_rejects_bad_inputs() {
        let g = SystemGeometry::new(1.0, 33).unwrap();
        let neg = ProfileFn::series(vec![0.1, 0.0, 0.5], vec![], 1.0);
        assert!(matches!(TLLModel::new(g, neg, ProfileFn::constant(1.0, 1.0)), Err(Error::Positivity { .. })));
        let short = ProfileFn::new(Descriptor::Tabulated { samples: vec![1.0; 20], order: 3 }, 1.0).unwrap();
        assert!(TLLModel::new(g, short, ProfileFn::constant(1.0, 1.0)).is_err());
    }

    #[test]
    fn mass_convention_is_consistent() {
        let m = TLLModel::gegenbauer(0.0, 1.0, 1.0, 1.0, 33, false)
            .unwrap()
            .with_mass(ProfileFn::constant(0.7, 1.0))
            .unwrap();
        let v0 = 2.0 / PI;
        for x in m.geometry.nodes() {
            let expect = -v0 * v0 * 0.49 * m.v.value(x);
            assert!((m.q(x) - expect).abs() <= 1e-12 * expect.abs().max(1e-300));
        }
    }

    #[test]
    fn constant_map_is_identity() {
        let m = TLLModel::constant(1.7, 1.0, 1.0, 33).unwrap();
        let c = coordinate_map(&m, 1e-12).unwrap();
        assert!((c.v0 - 1.7).abs() < 1e-14);
        for (x, y) in c.x_nodes.iter().zip(&c.y_of_x) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn sqrt_profile_map() {
        let m = TLLModel::gegenbauer(0.0, 1.0, 1.0, 1.0, 65, false).unwrap();
        let c = coordinate_map(&m, 1e-12).unwrap();
        assert!((c.v0 - 2.0 / PI).abs() < 1e-12);
        // y = (L/pi) arcsin(2x/L) for this profile.
        for (x, y) in c.x_nodes.iter().zip(&c.y_of_x) {
            assert!((y - (2.0 * x).asin() / PI).abs() < 1e-11, "{x} {y}");
        }
        assert!((c.y(0.4999) - (0.9998f64).asin() / PI).abs() < 1e-11);
        assert!((c.x(0.37) - 0.5 * (PI * 0.37).sin()).abs() < 1e-11);
    }

    #[test]
    fn divergent_profile_detected() {
        // v = 1 - s^2 makes 1/v log-divergent at both ends.
        let g = SystemGeometry::new(1.0, 33).unwrap();
        let m = TLLModel::new(g, ProfileFn::power(1.0, 1.0, 1.0), ProfileFn::constant(1.0, 1.0)).unwrap();
        assert!(matches!(coordinate_map(&m, 1e-10), Err(Error::DivergentV0 { .. })));
    }
}
