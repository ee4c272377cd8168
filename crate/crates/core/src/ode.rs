//! Adaptive Dormand–Prince 5(4) integration for small fixed-size systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Absolute lower bound on |h|; falling below it raises `Stiffness`.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h_min: 1e-12, max_steps: 2_000_000 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lin<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Stateful integrator that remembers its step size between calls.
pub struct Dopri5<const N: usize> {
    opts: OdeOptions,
    h: Option<f64>,
    pub steps: usize,
}

impl<const N: usize> Dopri5<N> {
    pub fn new(opts: OdeOptions) -> Self {
        Self { opts, h: None, steps: 0 }
    }

    /// Advance `y` from `t0` to `t1` (either direction).
    pub fn advance<F: FnMut(f64, &[f64; N]) -> [f64; N]>(&mut self, f: &mut F, t0: f64, y: &mut [f64; N], t1: f64) -> Result<()> {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let mut t = t0;
        let mut k1 = f(t, y);
        let mut h = self.h.map(|h| h.abs()).unwrap_or_else(|| self.initial_step(y, &k1, span.abs()));
        h = h.min(span.abs());
        let mut steps = 0usize;
        loop {
            let remaining = (t1 - t) * dir;
            if remaining <= 1e-15 * t1.abs().max(span.abs()) {
                break;
            }
            let last = h >= remaining;
            let hs = if last { remaining } else { h } * dir;
            let k2 = f(t + C2 * hs, &lin(y, hs, &[(A21, &k1)]));
            let k3 = f(t + C3 * hs, &lin(y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * hs, &lin(y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(t + C5 * hs, &lin(y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(t + hs, &lin(y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y5 = lin(y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(t + hs, &y5);
            let mut err = 0.0f64;
            for i in 0..N {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.opts.atol + self.opts.rtol * y[i].abs().max(y5[i].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                err = 1e10;
            }
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(Error::Stiffness { x: t, step: h });
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + hs };
                *y = y5;
                k1 = k7;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h *= fac;
                } else {
                    h = h.max(hs.abs() * fac);
                }
            } else {
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < self.opts.h_min {
                    return Err(Error::Stiffness { x: t, step: h });
                }
            }
        }
        self.steps += steps;
        self.h = Some(h);
        Ok(())
    }

    fn initial_step(&self, y: &[f64; N], f0: &[f64; N], span: f64) -> f64 {
        let mut d0 = 0.0f64;
        let mut d1 = 0.0f64;
        for i in 0..N {
            let sc = self.opts.atol + self.opts.rtol * y[i].abs();
            d0 = d0.max((y[i] / sc).abs());
            d1 = d1.max((f0[i] / sc).abs());
        }
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
        h.min(span).max(self.opts.h_min * 10.0)
    }
}

/// Integrate once from `t0` to `t1`.
pub fn integrate<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]>(mut f: F, t0: f64, y0: [f64; N], t1: f64, opts: OdeOptions) -> Result<[f64; N]> {
    let mut s = Dopri5::new(opts);
    let mut y = y0;
    s.advance(&mut f, t0, &mut y, t1)?;
    Ok(y)
}

/// Integrate through the monotone sequence `ts`, returning the state at each point.
pub fn integrate_through<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]>(mut f: F, ts: &[f64], y0: [f64; N], opts: OdeOptions) -> Result<Vec<[f64; N]>> {
    let mut s = Dopri5::new(opts);
    let mut y = y0;
    let mut out = Vec::with_capacity(ts.len());
    out.push(y);
    for w in ts.windows(2) {
        s.advance(&mut f, w[0], &mut y, w[1])?;
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let o = OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        let y = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 2.0 * std::f64::consts::PI, o).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10);
    }

    #[test]
    fn backwards_and_dense_output() {
        let o = OdeOptions::default();
        let ts: Vec<f64> = (0..=10).map(|i| -(i as f64) * 0.1).collect();
        let ys = integrate_through(|_, y: &[f64; 1]| [y[0]], &ts, [1.0], o).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - t.exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn collapsing_step_is_reported() {
        let o = OdeOptions { h_min: 1e-6, ..Default::default() };
        let r = integrate(|t, _: &[f64; 1]| [1.0 / (1.0 - t).powi(2)], 0.0, [0.0], 1.0, o);
        assert!(matches!(r, Err(Error::Stiffness { .. })));
    }
}
