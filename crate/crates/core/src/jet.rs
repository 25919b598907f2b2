//! Second-order jets: a value together with its first two derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const fn new(v: f64, d1: f64, d2: f64) -> Self {
        Jet { v, d1, d2 }
    }

    pub const fn constant(v: f64) -> Self {
        Jet { v, d1: 0.0, d2: 0.0 }
    }

    /// The identity function at `x`.
    pub const fn var(x: f64) -> Self {
        Jet { v: x, d1: 1.0, d2: 0.0 }
    }

    /// Compose with a scalar function given its value and two derivatives at `self.v`.
    pub fn chain(self, g0: f64, g1: f64, g2: f64) -> Self {
        Jet { v: g0, d1: g1 * self.d1, d2: g2 * self.d1 * self.d1 + g1 * self.d2 }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(self.v.ln(), r, -r * r)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn powf(self, p: f64) -> Self {
        let a = self.v.powf(p - 2.0);
        self.chain(a * self.v * self.v, p * a * self.v, p * (p - 1.0) * a)
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Jet::constant(1.0);
        }
        let v = self.v;
        let nf = n as f64;
        let g1 = nf * v.powi(n - 1);
        let g2 = if n == 1 { 0.0 } else { nf * (nf - 1.0) * v.powi(n - 2) };
        self.chain(v.powi(n), g1, g2)
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn scale(self, s: f64) -> Self {
        Jet { v: s * self.v, d1: s * self.d1, d2: s * self.d2 }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet { v: self.v + c, ..self }
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, c: f64) -> Jet {
        Jet { v: self.v - c, ..self }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn product_rule() {
        // x^2 * exp(x) at x = 0.7
        let x = Jet::var(0.7);
        let j = x * x * x.exp();
        let e = 0.7f64.exp();
        assert!(close(j.v, 0.49 * e));
        assert!(close(j.d1, (1.4 + 0.49) * e));
        assert!(close(j.d2, (2.0 + 2.8 + 0.49) * e));
    }

    #[test]
    fn quotient_and_powers() {
        let x = Jet::var(2.0);
        let j = Jet::constant(1.0) / x;
        assert!(close(j.d1, -0.25) && close(j.d2, 0.25));
        let p = x.powf(0.25);
        assert!(close(p.d2, 0.25 * -0.75 * 2f64.powf(-1.75)));
        let q = x.powi(4);
        assert!(close(q.v, 16.0) && close(q.d1, 32.0) && close(q.d2, 48.0));
        let s = x.sqrt();
        assert!(close(s.d2, -0.25 * 2f64.powf(-1.5)));
        let l = x.ln();
        assert!(close(l.d1, 0.5) && close(l.d2, -0.25));
    }
}
