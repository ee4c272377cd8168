//! Symmetric tridiagonal eigenvalues by Sturm-sequence bisection.

use std::ops::Range;

#[derive(Debug, Clone)]
pub struct SymTridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
    off_sq: Vec<f64>,
}

impl SymTridiag {
    /// `off[i]` couples rows i and i+1.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        let off_sq = off.iter().map(|e| e * e).collect();
        Self { diag, off, off_sq }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            if q == 0.0 {
                q = tiny;
            }
            q = self.diag[i] - x - self.off_sq[i - 1] / q;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The k-th smallest eigenvalue (0-based), bisected to rounding level.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (lo, hi) = self.bounds();
        self.bisect(k, lo, hi)
    }

    fn bisect(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * mid.abs() + f64::MIN_POSITIVE * scale {
                return mid;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    /// Eigenvalues with indices in `range`, ascending.
    pub fn eigenvalues(&self, range: Range<usize>) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        let mut out = Vec::with_capacity(range.len());
        let mut floor = lo;
        for k in range {
            // Earlier eigenvalues are valid lower bounds for later ones.
            let v = self.bisect(k, floor, hi);
            floor = v.min(hi);
            out.push(v);
        }
        out
    }
}
