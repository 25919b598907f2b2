//! Gauss–Kronrod quadrature and cumulative integrals on [0, 1].

#![allow(clippy::excessive_precision)]

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// 15-point Kronrod estimate with the embedded 7-point Gauss error estimate.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = hl * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * hl, ((kronrod - gauss) * hl).abs())
}

/// Adaptive Gauss–Kronrod integration to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth >= 40 || (b - a).abs() < 1e-14 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(f, a, b, tol, 0)
}

/// x ↦ ∫₀ˣ g, tabulated on a uniform grid and completed by a single
/// Kronrod rule on the partial cell.
#[derive(Debug, Clone)]
pub struct CumulativeIntegral<F> {
    g: F,
    h: f64,
    nodes: Vec<f64>,
}

impl<F: Fn(f64) -> f64> CumulativeIntegral<F> {
    pub fn new(g: F, cells: usize, tol: f64) -> Self {
        let h = 1.0 / cells as f64;
        let mut nodes = Vec::with_capacity(cells + 1);
        let mut acc = 0.0;
        nodes.push(0.0);
        for i in 0..cells {
            let a = i as f64 * h;
            acc += integrate(&g, a, a + h, tol * h);
            nodes.push(acc);
        }
        CumulativeIntegral { g, h, nodes }
    }

    pub fn integrand(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    pub fn total(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let cells = self.nodes.len() - 1;
        let i = ((x / self.h).floor().max(0.0) as usize).min(cells - 1);
        let a = i as f64 * self.h;
        if x == a {
            return self.nodes[i];
        }
        self.nodes[i] + gk15(&self.g, a, x).0
    }
}

/// Nodes and weights of 6-point Gauss–Legendre on [-1, 1].
pub const GAUSS6: [(f64, f64); 6] = [
    (-0.932469514203152027812301554493995, 0.171324492379170345040296142172732),
    (-0.661209386466264513661399595019906, 0.360761573048138607569833513837716),
    (-0.238619186083196908630501721680712, 0.467913934572691047389870343989551),
    (0.238619186083196908630501721680712, 0.467913934572691047389870343989551),
    (0.661209386466264513661399595019906, 0.360761573048138607569833513837716),
    (0.932469514203152027812301554493995, 0.171324492379170345040296142172732),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let (v, _) = gk15(&|x: f64| x.powi(6), 0.0, 1.0);
        assert!((v - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let f = |x: f64| 1.0 / (1e-3 + (x - 0.3) * (x - 0.3));
        let exact =
            (0.7f64 / 1e-3f64.sqrt()).atan() / 1e-3f64.sqrt() + (0.3f64 / 1e-3f64.sqrt()).atan() / 1e-3f64.sqrt();
        assert!((integrate(&f, 0.0, 1.0, 1e-12) - exact).abs() < 1e-9);
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let c = CumulativeIntegral::new(|x: f64| (2.0 * x).cos(), 64, 1e-13);
        for &x in &[0.0, 0.01, 0.333, 0.5, 1.0] {
            assert!((c.eval(x) - 0.5 * (2.0 * x).sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn gauss6_weights_sum_to_two() {
        let s: f64 = GAUSS6.iter().map(|p| p.1).sum();
        assert!((s - 2.0).abs() < 1e-15);
    }
}
