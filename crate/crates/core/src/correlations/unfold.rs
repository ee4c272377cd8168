//! Unfolding of the open interval onto a circle of circumference 2L.

use crate::error::{Error, Result};
use crate::profiles::{coordinate_map, CoordinateMap, TLLModel};
use serde::Serialize;

/// Identities are validated to this multiple of L.
pub const IDENTITY_TOL: f64 = 1e-9;

/// v-bar, f-bar and its inverse on [-L/2, 3L/2], extended quasi-periodically
/// by f-bar(x + 2L) = f-bar(x) + 2L.
#[derive(Debug, Clone, Serialize)]
pub struct UnfoldedMap {
    pub length: f64,
    /// Nodes of the doubled grid: the model grid followed by its mirror
    /// image x -> L - x.
    pub x: Vec<f64>,
    pub vbar: Vec<f64>,
    /// f-bar at the doubled-grid nodes, f-bar(0) = 0.
    pub fbar: Vec<f64>,
    /// Uniform f-bar samples spanning one period and the matching x values.
    pub fbar_grid: Vec<f64>,
    pub fbar_inv: Vec<f64>,
    pub vbar0: f64,
    pub fbar_l: f64,
    /// Largest violation of the four unfolding identities, in units of L.
    pub identity_defect: f64,
    #[serde(skip)]
    map: CoordinateMap,
}

/// Unfold a model; fails with DivergentV0 when 1/v is not integrable.
pub fn unfold(model: &TLLModel) -> Result<UnfoldedMap> {
    let map = coordinate_map(model, 1e-12)?;
    UnfoldedMap::from_map(map, model)
}

impl UnfoldedMap {
    fn from_map(map: CoordinateMap, model: &TLLModel) -> Result<Self> {
        let l = map.length;
        let xs = &map.x_nodes;
        let n = xs.len();
        let mut x = xs.clone();
        let mut vbar: Vec<f64> = xs.iter().map(|&s| model.v.value(s)).collect();
        let mut fbar = map.y_of_x.clone();
        // Second half by cumulative sums of the mirrored panel increments.
        for j in 1..n {
            let i = n - 1 - j;
            x.push(l - xs[i]);
            vbar.push(vbar[i]);
            let prev = *fbar.last().expect("non-empty");
            fbar.push(prev + (map.y_of_x[i + 1] - map.y_of_x[i]));
        }
        let fbar_l = fbar[n - 1 + (n - 1) / 2];
        let mut out = Self {
            length: l,
            x,
            vbar,
            fbar,
            fbar_grid: Vec::new(),
            fbar_inv: Vec::new(),
            vbar0: map.v0,
            fbar_l,
            identity_defect: 0.0,
            map,
        };
        let m = 2 * n - 1;
        let y0 = out.map.y_min();
        out.fbar_grid = (0..m).map(|i| y0 + 2.0 * l * i as f64 / (m - 1) as f64).collect();
        out.fbar_inv = out.fbar_grid.iter().map(|&y| out.fbar_inv_at(y)).collect();
        out.identity_defect = out.identity_defects().into_iter().fold(0.0, f64::max) / l;
        if !(out.identity_defect <= IDENTITY_TOL) {
            return Err(Error::InconsistentInput(format!(
                "unfolding identities violated by {:.3e} L",
                out.identity_defect
            )));
        }
        Ok(out)
    }

    pub fn coordinate_map(&self) -> &CoordinateMap {
        &self.map
    }

    /// Reduce x to [-L/2, 3L/2) and return the number of periods removed.
    fn reduce(&self, x: f64) -> (f64, f64) {
        let l = self.length;
        let k = ((x + 0.5 * l) / (2.0 * l)).floor();
        let mut r = x - 2.0 * l * k;
        // Guard against rounding pushing r to the far end.
        if r >= 1.5 * l {
            r -= 2.0 * l;
            return (r, k + 1.0);
        }
        (r, k)
    }

    pub fn vbar_at(&self, x: f64) -> f64 {
        let (r, _) = self.reduce(x);
        let l = self.length;
        let s = if r <= 0.5 * l { r } else { l - r };
        self.vbar0 / self.map.dy_dx(s)
    }

    /// d f-bar / dx = vbar0 / v-bar.
    pub fn dfbar_at(&self, x: f64) -> f64 {
        let (r, _) = self.reduce(x);
        let l = self.length;
        self.map.dy_dx(if r <= 0.5 * l { r } else { l - r })
    }

    pub fn fbar_at(&self, x: f64) -> f64 {
        let (r, k) = self.reduce(x);
        let l = self.length;
        let base = if r <= 0.5 * l { self.map.y(r) } else { self.fbar_l - self.map.y(l - r) };
        base + 2.0 * l * k
    }

    pub fn fbar_inv_at(&self, y: f64) -> f64 {
        let l = self.length;
        let y0 = self.map.y_min();
        let k = ((y - y0) / (2.0 * l)).floor();
        let r = y - 2.0 * l * k;
        let x = if r <= self.map.y_max() { self.map.x(r) } else { l - self.map.x(self.fbar_l - r) };
        x + 2.0 * l * k
    }

    /// Light-cone trajectories x-bar_t^+- (x) = f-bar^-1(f-bar(x) +- vbar0 t).
    pub fn x_plus(&self, x: f64, t: f64) -> f64 {
        self.fbar_inv_at(self.fbar_at(x) + self.vbar0 * t)
    }

    pub fn x_minus(&self, x: f64, t: f64) -> f64 {
        self.fbar_inv_at(self.fbar_at(x) - self.vbar0 * t)
    }

    /// Maximum defects of v-bar(L-x) = v-bar(x), f-bar(L-x) = f-bar(L) - f-bar(x),
    /// f-bar^-1(f-bar(L) - y) = L - f-bar^-1(y) and x_t^+(L-x) = L - x_t^-(x)
    /// over the doubled-grid nodes.
    pub fn identity_defects(&self) -> [f64; 4] {
        let l = self.length;
        let m = self.x.len();
        let mut d = [0.0f64; 4];
        let times = [0.0, 0.3 * l / self.vbar0, 0.75 * l / self.vbar0, 1.6 * l / self.vbar0];
        for i in 0..m {
            let j = m - 1 - i;
            // x_j = L - x_i on the doubled grid.
            d[0] = d[0].max((self.vbar[j] - self.vbar[i]).abs() / self.vbar[i].abs().max(f64::MIN_POSITIVE) * l);
            d[1] = d[1].max((self.fbar[j] - (self.fbar_l - self.fbar[i])).abs());
            let y = self.fbar[i];
            d[2] = d[2].max((self.fbar_inv_at(self.fbar_l - y) - (l - self.fbar_inv_at(y))).abs());
            for &t in &times {
                let a = self.x_plus(self.x[j], t);
                let b = l - self.x_minus(self.x[i], t);
                d[3] = d[3].max((a - b).abs());
            }
        }
        d
    }
}
