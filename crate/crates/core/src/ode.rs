//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { atol: 1e-11, rtol: 1e-11, max_steps: 2_000_000 }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions { atol: tol, rtol: tol, ..Default::default() }
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
// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Stateful stepper: remembers the last accepted step size so consecutive
/// calls to [`Dopri5::advance`] over adjacent intervals stay efficient.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub opts: OdeOptions,
    h: f64,
    pub steps: usize,
    pub rejected: usize,
}

#[inline]
fn comb<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] += h * s;
    }
    out
}

impl Dopri5 {
    pub fn new(opts: OdeOptions) -> Self {
        Dopri5 { opts, h: 0.0, steps: 0, rejected: 0 }
    }

    /// Integrate `y' = f(x, y)` from `x0` to `x1` (either direction).
    pub fn advance<const N: usize, F>(&mut self, f: &F, x0: f64, y0: [f64; N], x1: f64) -> Result<[f64; N]>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let span = x1 - x0;
        if span == 0.0 {
            return Ok(y0);
        }
        let dir = span.signum();
        let mut h =
            if self.h > 0.0 { self.h.min(span.abs()) } else { (0.01 * span.abs()).max(1e-6_f64.min(span.abs())) };
        let mut x = x0;
        let mut y = y0;
        let mut k1 = f(x, &y);
        let h_min = 1e-13 * (1.0 + x0.abs().max(x1.abs()));
        loop {
            let remaining = (x1 - x).abs();
            let mut last = false;
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
                last = true;
            }
            let hs = dir * h;
            let k2 = f(x + C2 * hs, &comb(&y, hs, &[(A21, &k1)]));
            let k3 = f(x + C3 * hs, &comb(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(x + C4 * hs, &comb(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(x + C5 * hs, &comb(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(x + hs, &comb(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y_new = comb(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let x_new = if last { x1 } else { x + hs };
            let k7 = f(x_new, &y_new);

            let mut err = 0.0f64;
            for i in 0..N {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.opts.atol + self.opts.rtol * y[i].abs().max(y_new[i].abs());
                let r = e / sc;
                err += r * r;
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Integration { x, reason: "non-finite state".into() });
            }
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Err(Error::Integration { x, reason: "maximum number of steps exceeded".into() });
            }
            if err <= 1.0 {
                x = x_new;
                y = y_new;
                k1 = k7;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if last {
                    // keep the step that would have been taken, not the truncated one
                    self.h = self.h.max(h * fac);
                    return Ok(y);
                }
                h *= fac;
                self.h = h;
            } else {
                self.rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if h < h_min {
                    return Err(Error::Integration { x, reason: format!("step size underflow (h = {h:e})") });
                }
            }
        }
    }
}

/// One-shot integration with fresh stepper state.
pub fn integrate<const N: usize, F>(f: &F, x0: f64, y0: [f64; N], x1: f64, opts: OdeOptions) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    Dopri5::new(opts).advance(f, x0, y0, x1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let y = integrate(&|_x, y: &[f64; 1]| [y[0]], 0.0, [1.0], 1.0, OdeOptions::default()).unwrap();
        assert!((y[0] - std::f64::consts::E).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let f = |_x: f64, y: &[f64; 2]| [y[1], -y[0]];
        let y = integrate(&f, 1.0, [0.0, 1.0], 0.0, OdeOptions::with_tol(1e-12)).unwrap();
        // y(x) = sin(x - 1)
        assert!((y[0] - (-1f64).sin()).abs() < 1e-11);
        assert!((y[1] - (-1f64).cos()).abs() < 1e-11);
    }

    #[test]
    fn segmented_advance_matches_single_run() {
        let f = |x: f64, y: &[f64; 2]| [y[1], (x * x - 3.0) * y[0]];
        let single = integrate(&f, 0.0, [0.0, 1.0], 1.0, OdeOptions::with_tol(1e-12)).unwrap();
        let mut s = Dopri5::new(OdeOptions::with_tol(1e-12));
        let mut y = [0.0, 1.0];
        for i in 0..16 {
            y = s.advance(&f, i as f64 / 16.0, y, (i + 1) as f64 / 16.0).unwrap();
        }
        assert!((y[0] - single[0]).abs() < 1e-11);
    }

    #[test]
    fn singular_problem_reports_location() {
        // y' = y^2, y(0) = 2 blows up at x = 0.5
        let r = integrate(&|_x, y: &[f64; 1]| [y[0] * y[0]], 0.0, [2.0], 1.0, OdeOptions::default());
        match r {
            Err(Error::Integration { x, .. }) => assert!((x - 0.5).abs() < 1e-3),
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
