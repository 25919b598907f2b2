//! Interpolation on uniform grids over [0, 1].

use crate::error::{Error, Result};

/// Not-a-knot cubic spline through uniformly spaced samples on [0, 1].
#[derive(Debug, Clone)]
pub struct CubicSpline {
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n < 4 {
            return Err(Error::Representation(format!(
                "a twice-differentiable spline needs at least 4 samples, got {n}"
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Representation(format!("sample {i} is not finite")));
        }
        let h = 1.0 / (n - 1) as f64;
        let rhs = |i: usize| 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);

        // Unknowns M_1..M_{n-2}. Eliminating M_0 = 2M_1 - M_2 and the mirrored
        // end condition turns the first and last rows into 6 M = rhs.
        let k = n - 2;
        let mut diag = vec![4.0; k];
        let mut lower = vec![1.0; k];
        let mut upper = vec![1.0; k];
        let mut b: Vec<f64> = (1..=k).map(rhs).collect();
        diag[0] = 6.0;
        upper[0] = 0.0;
        diag[k - 1] = 6.0;
        lower[k - 1] = 0.0;
        // Thomas algorithm
        for i in 1..k {
            let w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            b[i] -= w * b[i - 1];
        }
        let mut inner = vec![0.0; k];
        inner[k - 1] = b[k - 1] / diag[k - 1];
        for i in (0..k - 1).rev() {
            inner[i] = (b[i] - upper[i] * inner[i + 1]) / diag[i];
        }
        let mut m = Vec::with_capacity(n);
        m.push(if k >= 2 { 2.0 * inner[0] - inner[1] } else { inner[0] });
        m.extend_from_slice(&inner);
        m.push(if k >= 2 { 2.0 * inner[k - 1] - inner[k - 2] } else { inner[k - 1] });
        Ok(CubicSpline { h, y, m })
    }

    /// Build from a function sampled at `n` uniform points.
    pub fn sample<F: Fn(f64) -> f64>(n: usize, f: F) -> Result<Self> {
        let h = 1.0 / (n - 1) as f64;
        Self::new((0..n).map(|i| f(i as f64 * h)).collect())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.y
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.y.len();
        let s = (x / self.h).floor();
        let i = if s < 0.0 { 0 } else { (s as usize).min(n - 2) };
        (i, x - i as f64 * self.h)
    }

    /// Value, first and second derivative at `x`.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let (i, t) = self.locate(x);
        let h = self.h;
        let (y0, y1, m0, m1) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        let a = h - t;
        let v = m0 * a * a * a / (6.0 * h)
            + m1 * t * t * t / (6.0 * h)
            + (y0 / h - m0 * h / 6.0) * a
            + (y1 / h - m1 * h / 6.0) * t;
        let d1 = -m0 * a * a / (2.0 * h) + m1 * t * t / (2.0 * h) + (y1 - y0) / h - (m1 - m0) * h / 6.0;
        let d2 = (m0 * a + m1 * t) / h;
        (v, d1, d2)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval3(x).0
    }

    /// Third derivative (piecewise constant).
    pub fn d3(&self, x: f64) -> f64 {
        let (i, _) = self.locate(x);
        (self.m[i + 1] - self.m[i]) / self.h
    }
}

/// Quintic Hermite interpolant on one cell of width `h`, at local coordinate `t = (x - x0)/h`.
/// Inputs are value, first and second derivative at both ends.
/// Returns value, first and second derivative.
pub fn quintic_hermite(t: f64, h: f64, a: [f64; 3], b: [f64; 3]) -> (f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = [
        1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
        -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
        -60.0 * t + 180.0 * t2 - 120.0 * t3,
    ];
    let h1 = [
        t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
        1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
        -36.0 * t + 96.0 * t2 - 60.0 * t3,
    ];
    let h2 = [
        0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
        t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4,
        1.0 - 9.0 * t + 18.0 * t2 - 10.0 * t3,
    ];
    let h3 = [10.0 * t3 - 15.0 * t4 + 6.0 * t5, 30.0 * t2 - 60.0 * t3 + 30.0 * t4, 60.0 * t - 180.0 * t2 + 120.0 * t3];
    let h4 = [-4.0 * t3 + 7.0 * t4 - 3.0 * t5, -12.0 * t2 + 28.0 * t3 - 15.0 * t4, -24.0 * t + 84.0 * t2 - 60.0 * t3];
    let h5 = [0.5 * t3 - t4 + 0.5 * t5, 1.5 * t2 - 4.0 * t3 + 2.5 * t4, 3.0 * t - 12.0 * t2 + 10.0 * t3];
    let mut out = [0.0; 3];
    for (j, o) in out.iter_mut().enumerate() {
        let p = a[0] * h0[j]
            + h * a[1] * h1[j]
            + h * h * a[2] * h2[j]
            + b[0] * h3[j]
            + h * b[1] * h4[j]
            + h * h * b[2] * h5[j];
        *o = p / h.powi(j as i32);
    }
    (out[0], out[1], out[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x * x * x;
        let s = CubicSpline::sample(11, f).unwrap();
        for &x in &[0.0, 0.013, 0.5, 0.77, 1.0] {
            let (v, d1, d2) = s.eval3(x);
            assert!((v - f(x)).abs() < 1e-12);
            assert!((d1 - (-2.0 + x + 9.0 * x * x)).abs() < 1e-10);
            assert!((d2 - (1.0 + 18.0 * x)).abs() < 1e-9);
            assert!((s.d3(x) - 18.0).abs() < 1e-7);
        }
    }

    #[test]
    fn smooth_function_accuracy() {
        let s = CubicSpline::sample(1025, |x| (3.0 * x).sin()).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let (v, d1, d2) = s.eval3(x);
            assert!((v - (3.0 * x).sin()).abs() < 1e-11);
            assert!((d1 - 3.0 * (3.0 * x).cos()).abs() < 1e-7);
            assert!((d2 + 9.0 * (3.0 * x).sin()).abs() < 1e-4);
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(CubicSpline::new(vec![1.0, 2.0, 3.0]).is_err());
        assert!(CubicSpline::new(vec![1.0, 2.0, 3.0, 4.0]).is_ok());
    }

    #[test]
    fn quintic_hermite_reproduces_quintics() {
        let p = |x: f64| [x.powi(5) - x * x, 5.0 * x.powi(4) - 2.0 * x, 20.0 * x.powi(3) - 2.0];
        let (x0, h) = (0.3, 0.2);
        for &t in &[0.0, 0.25, 0.6, 1.0] {
            let (v, d1, d2) = quintic_hermite(t, h, p(x0), p(x0 + h));
            let e = p(x0 + t * h);
            assert!((v - e[0]).abs() < 1e-14);
            assert!((d1 - e[1]).abs() < 1e-12);
            assert!((d2 - e[2]).abs() < 1e-10);
        }
    }
}
