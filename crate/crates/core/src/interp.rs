//! Interpolation on uniform grids and monotone Hermite tables.

/// Uniformly sampled function with linear (order 1) or Catmull–Rom cubic
/// (order 3) interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformInterp {
    pub x0: f64,
    pub h: f64,
    pub values: Vec<f64>,
    pub order: u8,
}

impl UniformInterp {
    pub fn new(x0: f64, x1: f64, values: Vec<f64>, order: u8) -> Self {
        assert!(values.len() >= 2);
        let h = (x1 - x0) / (values.len() - 1) as f64;
        Self { x0, h, values, order }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let s = ((x - self.x0) / self.h).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        let y = &self.values;
        if self.order < 3 || n < 4 {
            return y[i] + t * (y[i + 1] - y[i]);
        }
        // Cubic through four neighbours; one-sided at the ends.
        let (a, b, c, d) = if i == 0 {
            (3.0 * y[0] - 3.0 * y[1] + y[2], y[0], y[1], y[2])
        } else if i == n - 2 {
            (y[n - 3], y[n - 2], y[n - 1], 3.0 * y[n - 1] - 3.0 * y[n - 2] + y[n - 3])
        } else {
            (y[i - 1], y[i], y[i + 1], y[i + 2])
        };
        let t2 = t * t;
        let t3 = t2 * t;
        0.5 * (2.0 * b + (c - a) * t + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2 + (3.0 * b - a - 3.0 * c + d) * t3)
    }

    /// Derivative of the interpolant.
    pub fn derivative(&self, x: f64) -> f64 {
        let d = 1e-6 * self.h;
        (self.eval(x + d) - self.eval(x - d)) / (2.0 * d)
    }
}

/// Cubic Hermite table on strictly increasing abscissae with known slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteTable {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
}

impl HermiteTable {
    pub fn new(x: Vec<f64>, f: Vec<f64>, df: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == f.len() && f.len() == df.len());
        Self { x, f, df }
    }

    fn locate(xs: &[f64], x: f64) -> usize {
        match xs.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(xs.len() - 2),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = Self::locate(&self.x, x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.f[i] + h10 * h * self.df[i] + h01 * self.f[i + 1] + h11 * h * self.df[i + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let i = Self::locate(&self.x, x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * self.f[i] + d10 * self.df[i] + d01 * self.f[i + 1] + d11 * self.df[i + 1]
    }

    /// Inverse of an increasing table: bracketed Newton inside the cell.
    pub fn inverse(&self, target: f64) -> f64 {
        let n = self.f.len();
        if target <= self.f[0] {
            return self.x[0];
        }
        if target >= self.f[n - 1] {
            return self.x[n - 1];
        }
        let i = Self::locate(&self.f, target);
        let (mut lo, mut hi) = (self.x[i], self.x[i + 1]);
        let mut x = lo + (hi - lo) * (target - self.f[i]) / (self.f[i + 1] - self.f[i]);
        for _ in 0..60 {
            let r = self.eval(x) - target;
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.derivative(x);
            let mut nx = if d > 0.0 { x - r / d } else { 0.5 * (lo + hi) };
            if !(nx > lo && nx < hi) {
                nx = 0.5 * (lo + hi);
            }
            if (nx - x).abs() <= 1e-16 * (1.0 + x.abs()) {
                return nx;
            }
            x = nx;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_interp_is_exact_on_quadratics() {
        let xs: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + x - 2.0 * x * x).collect();
        let it = UniformInterp::new(0.0, 1.0, ys, 3);
        for &x in &[0.03, 0.47, 0.951] {
            assert!((it.eval(x) - (1.0 + x - 2.0 * x * x)).abs() < 1e-13);
        }
    }

    #[test]
    fn hermite_inverse_roundtrip() {
        let xs: Vec<f64> = (0..21).map(|i| i as f64 * 0.05).collect();
        let f: Vec<f64> = xs.iter().map(|x| x.sinh()).collect();
        let df: Vec<f64> = xs.iter().map(|x| x.cosh()).collect();
        let t = HermiteTable::new(xs, f, df);
        for &x in &[0.01, 0.333, 0.9] {
            let y = t.eval(x);
            assert!((t.inverse(y) - x).abs() < 1e-13);
            assert!((y - f64::sinh(x)).abs() < 1e-7);
        }
    }
}
