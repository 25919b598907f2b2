//! Fundamental solutions, characteristic and Weyl–Titchmarsh functions,
//! Dirichlet spectrum, eigenfunctions and residues for
//! −v'' + q v = −z v on [0, 1] with z = μ².

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{Dopri5, OdeOptions};
use crate::profiles::Potential;
use crate::roots::brent;
use crate::spline::quintic_hermite;

pub const DEFAULT_TOL: f64 = 1e-11;

/// Number of samples of the eigenfunction grid.
pub const EIGEN_GRID: usize = 1025;

/// |Δ| below this is treated as a pole of M and N.
pub fn pole_guard(z: Complex64) -> f64 {
    1e-8 * z.norm().max(1.0)
}

/// Endpoint values of the fundamental solutions c₀, s₀ (at x = 1) and c₁, s₁ (at x = 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FssData {
    pub z: Complex64,
    pub c0_1: Complex64,
    pub c0p_1: Complex64,
    pub s0_1: Complex64,
    pub s0p_1: Complex64,
    pub c1_0: Complex64,
    pub c1p_0: Complex64,
    pub s1_0: Complex64,
    pub s1p_0: Complex64,
}

/// |W − 1| scaled by the size of the two products forming W, so that
/// exponential growth of the solutions does not masquerade as a defect.
pub fn wronskian_defect(c: Complex64, cp: Complex64, s: Complex64, sp: Complex64) -> f64 {
    let a = c * sp;
    let b = cp * s;
    (a - b - 1.0).norm() / (a.norm() + b.norm()).max(1.0)
}

impl FssData {
    /// W(c₀, s₀) at x = 1.
    pub fn wronskian_left(&self) -> Complex64 {
        self.c0_1 * self.s0p_1 - self.c0p_1 * self.s0_1
    }

    /// W(c₁, s₁) at x = 0.
    pub fn wronskian_right(&self) -> Complex64 {
        self.c1_0 * self.s1p_0 - self.c1p_0 * self.s1_0
    }

    pub fn wronskian_defect_left(&self) -> f64 {
        wronskian_defect(self.c0_1, self.c0p_1, self.s0_1, self.s0p_1)
    }

    pub fn wronskian_defect_right(&self) -> f64 {
        wronskian_defect(self.c1_0, self.c1p_0, self.s1_0, self.s1p_0)
    }
}

/// Δ, D, E and the Weyl–Titchmarsh functions M = −D/Δ, N = −E/Δ at z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralFunctions {
    pub z: Complex64,
    pub delta: Complex64,
    pub d: Complex64,
    pub e: Complex64,
    pub m: Option<Complex64>,
    pub n: Option<Complex64>,
    pub pole: bool,
}

impl SpectralFunctions {
    pub fn from_fss(fss: &FssData) -> Self {
        let delta = fss.s0_1;
        let d = fss.c0_1;
        let e = fss.c1_0;
        let pole = delta.norm() < pole_guard(fss.z);
        let (m, n) = if pole { (None, None) } else { (Some(-d / delta), Some(-e / delta)) };
        SpectralFunctions { z: fss.z, delta, d, e, m, n, pole }
    }

    /// Real parts of (Δ, M, N), failing at a pole.
    pub fn real_mn(&self) -> Result<(f64, f64, f64)> {
        match (self.m, self.n) {
            (Some(m), Some(n)) => Ok((self.delta.re, m.re, n.re)),
            _ => Err(Error::Pole { z: self.z.re, distance: self.delta.norm() }),
        }
    }
}

/// A computed Dirichlet eigenvalue with the residual |Δ(−λ)| after polishing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub k: usize,
    pub lambda: f64,
    pub residual: f64,
}

/// Normalized Dirichlet eigenfunction sampled on a uniform grid, with
/// the running integral of its square.
#[derive(Debug, Clone)]
pub struct Eigenfunction {
    pub lambda: f64,
    h: f64,
    v: Vec<f64>,
    dv: Vec<f64>,
    ddv: Vec<f64>,
    cum: Vec<f64>,
}

impl Eigenfunction {
    pub fn grid_len(&self) -> usize {
        self.v.len()
    }

    pub fn grid_x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn samples(&self) -> &[f64] {
        &self.v
    }

    pub fn derivative_samples(&self) -> &[f64] {
        &self.dv
    }

    fn cell(&self, x: f64) -> (usize, f64) {
        let n = self.v.len();
        let x = x.clamp(0.0, 1.0);
        let s = (x / self.h).floor() as usize;
        let i = s.min(n - 2);
        (i, (x - i as f64 * self.h) / self.h)
    }

    /// v, v', v'' at x (quintic Hermite interpolation of the grid solution).
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let (i, t) = self.cell(x);
        quintic_hermite(
            t,
            self.h,
            [self.v[i], self.dv[i], self.ddv[i]],
            [self.v[i + 1], self.dv[i + 1], self.ddv[i + 1]],
        )
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// ∫₀ˣ v².
    pub fn cumulative(&self, x: f64) -> f64 {
        let (i, t) = self.cell(x);
        let node = |j: usize| [self.cum[j], self.v[j] * self.v[j], 2.0 * self.v[j] * self.dv[j]];
        quintic_hermite(t, self.h, node(i), node(i + 1)).0
    }

    /// ∫ₓ¹ v².
    pub fn tail(&self, x: f64) -> f64 {
        1.0 - self.cumulative(x)
    }

    pub fn tail_at_node(&self, i: usize) -> f64 {
        1.0 - self.cum[i]
    }
}

/// First K eigenvalues with their normalized eigenfunctions.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub eigenfunctions: Vec<Eigenfunction>,
}

impl SpectralData {
    /// Eigenfunction of index k (1-based).
    pub fn eigenfunction(&self, k: usize) -> Result<&Eigenfunction> {
        if k == 0 || k > self.eigenfunctions.len() {
            return Err(Error::Invalid(format!(
                "eigen index {k} outside computed range 1..={}",
                self.eigenfunctions.len()
            )));
        }
        Ok(&self.eigenfunctions[k - 1])
    }

    /// α_k² = −λ_k.
    pub fn alpha2(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| -l).collect()
    }
}

/// Residue of M at a pole, in the μ² variable and in the μ variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residue {
    pub k: usize,
    pub alpha2: f64,
    pub mu2_residue: f64,
    /// Res(m; α_k) with α_k the principal square root of α_k² (Im ≥ 0).
    pub mu_residue: Complex64,
    pub alpha: Complex64,
}

/// Sturm–Liouville solver with a fixed integration tolerance.
#[derive(Debug, Clone, Copy)]
pub struct Solver {
    pub tol: f64,
}

impl Default for Solver {
    fn default() -> Self {
        Solver { tol: DEFAULT_TOL }
    }
}

fn cplx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl Solver {
    pub fn new(tol: f64) -> Self {
        Solver { tol }
    }

    fn opts(&self) -> OdeOptions {
        OdeOptions::with_tol(self.tol)
    }

    /// Integrates the pair (c, s) with Cauchy data (1,0), (0,1) from `x0` to each of `stops`
    /// (monotone, in the direction of integration). Returns [c, c', s, s'] at each stop.
    fn pair_real(&self, q: &Potential, z: f64, x0: f64, stops: &[f64]) -> Result<Vec<[f64; 4]>> {
        let f = |x: f64, y: &[f64; 4]| {
            let w = q.eval(x) + z;
            [y[1], w * y[0], y[3], w * y[2]]
        };
        let mut st = Dopri5::new(self.opts());
        let mut y = [1.0, 0.0, 0.0, 1.0];
        let mut x = x0;
        let mut out = Vec::with_capacity(stops.len());
        for &s in stops {
            y = st.advance(&f, x, y, s)?;
            x = s;
            out.push(y);
        }
        Ok(out)
    }

    fn pair_complex(&self, q: &Potential, z: Complex64, x0: f64, stops: &[f64]) -> Result<Vec<[Complex64; 4]>> {
        let (zr, zi) = (z.re, z.im);
        let f = |x: f64, y: &[f64; 8]| {
            let wr = q.eval(x) + zr;
            let mul = |a: f64, b: f64| (wr * a - zi * b, wr * b + zi * a);
            let (c2r, c2i) = mul(y[0], y[1]);
            let (s2r, s2i) = mul(y[4], y[5]);
            [y[2], y[3], c2r, c2i, y[6], y[7], s2r, s2i]
        };
        let mut st = Dopri5::new(self.opts());
        let mut y = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let mut x = x0;
        let mut out = Vec::with_capacity(stops.len());
        for &s in stops {
            y = st.advance(&f, x, y, s)?;
            x = s;
            out.push([cplx(y[0], y[1]), cplx(y[2], y[3]), cplx(y[4], y[5]), cplx(y[6], y[7])]);
        }
        Ok(out)
    }

    /// Trajectory of (c, c', s, s') from the left endpoint sampled at increasing `xs`.
    pub fn left_trajectory(&self, q: &Potential, z: Complex64, xs: &[f64]) -> Result<Vec<[Complex64; 4]>> {
        if z.im == 0.0 {
            let r = self.pair_real(q, z.re, 0.0, xs)?;
            Ok(r.into_iter().map(|y| [cplx(y[0], 0.0), cplx(y[1], 0.0), cplx(y[2], 0.0), cplx(y[3], 0.0)]).collect())
        } else {
            self.pair_complex(q, z, 0.0, xs)
        }
    }

    /// Trajectory of (c₁, c₁', s₁, s₁') from the right endpoint sampled at decreasing `xs`.
    pub fn right_trajectory(&self, q: &Potential, z: Complex64, xs: &[f64]) -> Result<Vec<[Complex64; 4]>> {
        if z.im == 0.0 {
            let r = self.pair_real(q, z.re, 1.0, xs)?;
            Ok(r.into_iter().map(|y| [cplx(y[0], 0.0), cplx(y[1], 0.0), cplx(y[2], 0.0), cplx(y[3], 0.0)]).collect())
        } else {
            self.pair_complex(q, z, 1.0, xs)
        }
    }

    pub fn integrate_fss(&self, q: &Potential, z: Complex64) -> Result<FssData> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Invalid(format!("spectral parameter {z} is not finite")));
        }
        let l = self.left_trajectory(q, z, &[1.0])?[0];
        let r = self.right_trajectory(q, z, &[0.0])?[0];
        Ok(FssData {
            z,
            c0_1: l[0],
            c0p_1: l[1],
            s0_1: l[2],
            s0p_1: l[3],
            c1_0: r[0],
            c1p_0: r[1],
            s1_0: r[2],
            s1p_0: r[3],
        })
    }

    pub fn spectral_functions(&self, q: &Potential, z: Complex64) -> Result<SpectralFunctions> {
        Ok(SpectralFunctions::from_fss(&self.integrate_fss(q, z)?))
    }

    /// Real spectral parameter convenience.
    pub fn spectral_functions_real(&self, q: &Potential, z: f64) -> Result<SpectralFunctions> {
        self.spectral_functions(q, cplx(z, 0.0))
    }

    /// Modified Prüfer variables for real λ: ω v = r sin θ, v' = r cos θ.
    /// Returns (θ(1), ln r(1), ω).
    fn prufer(&self, q: &Potential, lambda: f64, theta0: f64, lnr0: f64) -> Result<(f64, f64, f64)> {
        let omega = (lambda - q.mean()).max(1.0).sqrt();
        let f = |x: f64, y: &[f64; 2]| {
            let a = (lambda - q.eval(x)) / omega;
            let (s, c) = y[0].sin_cos();
            [omega * c * c + a * s * s, (omega - a) * s * c]
        };
        let y = Dopri5::new(self.opts()).advance(&f, 0.0, [theta0, lnr0], 1.0)?;
        Ok((y[0], y[1], omega))
    }

    /// Prüfer phase of s₀(·, −λ) at x = 1; the number of eigenvalues below λ is ⌊θ/π⌋.
    pub fn prufer_phase(&self, q: &Potential, lambda: f64) -> Result<f64> {
        Ok(self.prufer(q, lambda, 0.0, 0.0)?.0)
    }

    /// Δ(−λ) = s₀(1, −λ) through the Prüfer representation.
    pub fn delta_at_eigen_scale(&self, q: &Potential, lambda: f64) -> Result<f64> {
        let (th, lnr, om) = self.prufer(q, lambda, 0.0, 0.0)?;
        Ok(lnr.exp() * th.sin() / om)
    }

    /// D(−λ) = c₀(1, −λ) through the Prüfer representation.
    pub fn d_at_eigen_scale(&self, q: &Potential, lambda: f64) -> Result<f64> {
        let omega = (lambda - q.mean()).max(1.0).sqrt();
        let (th, lnr, om) = self.prufer(q, lambda, std::f64::consts::FRAC_PI_2, omega.ln())?;
        Ok(lnr.exp() * th.sin() / om)
    }

    /// s₀ and its running squared integral at x = 1 for real λ: (v(1), v'(1), ∫v²).
    fn shoot_with_norm(&self, q: &Potential, lambda: f64) -> Result<[f64; 3]> {
        let f = |x: f64, y: &[f64; 3]| [y[1], (q.eval(x) - lambda) * y[0], y[0] * y[0]];
        let opts = OdeOptions { atol: self.tol * 1e-2, rtol: self.tol, ..Default::default() };
        Dopri5::new(opts).advance(&f, 0.0, [0.0, 1.0, 0.0], 1.0)
    }

    /// k-th Dirichlet eigenvalue (1-based) by Prüfer-phase bracketing, Brent refinement
    /// and one Newton step on λ ↦ Δ(−λ).
    pub fn eigenvalue(&self, q: &Potential, k: usize) -> Result<Eigenvalue> {
        if k == 0 {
            return Err(Error::Invalid("eigen index starts at 1".into()));
        }
        let target = k as f64 * std::f64::consts::PI;
        let base = (k * k) as f64 * std::f64::consts::PI.powi(2);
        let mut lo = base + q.min() - 1.0;
        let mut hi = base + q.max() + 1.0;
        let phase = |l: f64| self.prufer_phase(q, l).map(|t| t - target);
        let mut flo = phase(lo)?;
        let mut fhi = phase(hi)?;
        let mut tries = 0;
        while flo >= 0.0 || fhi <= 0.0 {
            tries += 1;
            if tries > 60 {
                return Err(Error::Search(format!("could not bracket eigenvalue {k}")));
            }
            let w = hi - lo;
            if flo >= 0.0 {
                lo -= w;
                flo = phase(lo)?;
            }
            if fhi <= 0.0 {
                hi += w;
                fhi = phase(hi)?;
            }
        }
        let xtol = 4.0 * f64::EPSILON * base.max(1.0);
        let mut lambda = brent(phase, lo, hi, flo, fhi, xtol, 200)?;

        // Newton polish: ∂_λ s₀(1) = ∫ s₀² / s₀'(1) at an eigenvalue.
        let [v1, dv1, nrm] = self.shoot_with_norm(q, lambda)?;
        let mut residual = v1.abs();
        if nrm > 0.0 && dv1 != 0.0 {
            let cand = lambda - v1 * dv1 / nrm;
            if cand > lo && cand < hi {
                let [w1, _, _] = self.shoot_with_norm(q, cand)?;
                if w1.abs() < residual {
                    lambda = cand;
                    residual = w1.abs();
                }
            }
        }
        Ok(Eigenvalue { k, lambda, residual })
    }

    /// First K eigenvalues, strictly increasing.
    pub fn eigenvalues(&self, q: &Potential, count: usize) -> Result<Vec<Eigenvalue>> {
        let ks: Vec<usize> = (1..=count).collect();
        let ev: Vec<Eigenvalue> = crate::par::try_map(&ks, |&k| self.eigenvalue(q, k))?;
        for w in ev.windows(2) {
            if !(w[1].lambda > w[0].lambda) {
                return Err(Error::Search(format!(
                    "eigenvalues {} and {} are not strictly increasing",
                    w[0].k, w[1].k
                )));
            }
        }
        Ok(ev)
    }

    /// Normalized eigenfunction for a computed eigenvalue λ.
    pub fn eigenfunction(&self, q: &Potential, lambda: f64) -> Result<Eigenfunction> {
        let n = EIGEN_GRID;
        let h = 1.0 / (n - 1) as f64;
        let f = |x: f64, y: &[f64; 3]| [y[1], (q.eval(x) - lambda) * y[0], y[0] * y[0]];
        let tol = self.tol.min(1e-12);
        let mut st = Dopri5::new(OdeOptions { atol: tol * 1e-2, rtol: tol, ..Default::default() });
        let mut y = [0.0, 1.0, 0.0];
        let mut raw = Vec::with_capacity(n);
        raw.push(y);
        for i in 1..n {
            y = st.advance(&f, (i - 1) as f64 * h, y, i as f64 * h)?;
            raw.push(y);
        }
        let total = y[2];
        let shift = y[0] * y[1] / total;
        if !(shift.abs() <= 1e-8 * lambda.abs().max(1.0)) {
            return Err(Error::Invalid(format!(
                "lambda = {lambda} is not within 1e-8 of a Dirichlet eigenvalue (estimated distance {:e})",
                shift.abs()
            )));
        }
        let scale = 1.0 / total.sqrt();
        let mut v = Vec::with_capacity(n);
        let mut dv = Vec::with_capacity(n);
        let mut ddv = Vec::with_capacity(n);
        let mut cum = Vec::with_capacity(n);
        for (i, r) in raw.iter().enumerate() {
            let x = i as f64 * h;
            v.push(r[0] * scale);
            dv.push(r[1] * scale);
            ddv.push((q.eval(x) - lambda) * r[0] * scale);
            cum.push(r[2] / total);
        }
        Ok(Eigenfunction { lambda, h, v, dv, ddv, cum })
    }

    pub fn dirichlet_spectrum(&self, q: &Potential, count: usize) -> Result<SpectralData> {
        if count == 0 {
            return Err(Error::Invalid("K must be at least 1".into()));
        }
        let ev = self.eigenvalues(q, count)?;
        let eigenfunctions = crate::par::try_map(&ev, |e| self.eigenfunction(q, e.lambda))?;
        Ok(SpectralData {
            eigenvalues: ev.iter().map(|e| e.lambda).collect(),
            residuals: ev.iter().map(|e| e.residual).collect(),
            eigenfunctions,
        })
    }

    /// dΔ/dz at real z by the 4th-order central stencil with step 1e−4·max(1, |z|).
    pub fn delta_derivative(&self, q: &Potential, z: f64) -> Result<f64> {
        let h = 1e-4 * z.abs().max(1.0);
        let d = |zz: f64| self.delta_at_eigen_scale(q, -zz);
        let (p1, m1, p2, m2) = (d(z + h)?, d(z - h)?, d(z + 2.0 * h)?, d(z - 2.0 * h)?);
        Ok((-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h))
    }

    /// Residue of z ↦ M(z) at z = α_k² = −λ_k.
    pub fn residue_at(&self, q: &Potential, k: usize, lambda_k: f64) -> Result<Residue> {
        let alpha2 = -lambda_k;
        let dd = self.delta_derivative(q, alpha2)?;
        if dd.abs() < 1e-12 {
            return Err(Error::Degenerate(format!("|dDelta/dz| = {:e} at z = {alpha2}", dd.abs())));
        }
        let d = self.d_at_eigen_scale(q, lambda_k)?;
        let r = -d / dd;
        let alpha = cplx(alpha2, 0.0).sqrt();
        let alpha = if alpha.im < 0.0 { -alpha } else { alpha };
        Ok(Residue { k, alpha2, mu2_residue: r, mu_residue: cplx(r, 0.0) / (2.0 * alpha), alpha })
    }

    pub fn residue_at_pole(&self, q: &Potential, k: usize) -> Result<Residue> {
        let ev = self.eigenvalue(q, k)?;
        self.residue_at(q, k, ev.lambda)
    }
}

pub fn integrate_fss(q: &Potential, z: Complex64, tol: f64) -> Result<FssData> {
    Solver::new(tol).integrate_fss(q, z)
}

pub fn spectral_functions(q: &Potential, z: Complex64) -> Result<SpectralFunctions> {
    Solver::default().spectral_functions(q, z)
}

pub fn dirichlet_spectrum(q: &Potential, count: usize) -> Result<SpectralData> {
    Solver::default().dirichlet_spectrum(q, count)
}

pub fn eigenfunction(q: &Potential, lambda: f64) -> Result<Eigenfunction> {
    Solver::default().eigenfunction(q, lambda)
}

pub fn residue_at_pole(q: &Potential, k: usize) -> Result<Residue> {
    Solver::default().residue_at_pole(q, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        cplx(re, 0.0)
    }

    #[test]
    fn flat_fss_closed_forms() {
        let q = Potential::constant(0.0);
        let f = integrate_fss(&q, c(1.0), DEFAULT_TOL).unwrap();
        assert!((f.c0_1.re - 1f64.cosh()).abs() < 1e-10);
        assert!((f.s0_1.re - 1f64.sinh()).abs() < 1e-10);
        let f0 = integrate_fss(&q, c(0.0), DEFAULT_TOL).unwrap();
        assert!((f0.s0_1.re - 1.0).abs() < 1e-12 && (f0.c0_1.re - 1.0).abs() < 1e-12);
        assert!(f.wronskian_defect_left() < 1e-10 && f.wronskian_defect_right() < 1e-10);
    }

    #[test]
    fn constant_shift_oracle() {
        let q = Potential::constant(5.0);
        let f = integrate_fss(&q, c(1.0), DEFAULT_TOL).unwrap();
        let r6 = 6f64.sqrt();
        assert!((f.s0_1.re - r6.sinh() / r6).abs() < 1e-10);
    }

    #[test]
    fn spectral_function_examples() {
        let q = Potential::constant(0.0);
        let sf = spectral_functions(&q, c(1.0)).unwrap();
        assert!((sf.delta.re - 1f64.sinh()).abs() < 1e-10);
        assert!((sf.m.unwrap().re + 1.0 / 1f64.tanh()).abs() < 1e-10);
        let sf = spectral_functions(&q, c(-PI * PI)).unwrap();
        assert!(sf.pole && sf.m.is_none());
        let sf = spectral_functions(&q, c(0.0)).unwrap();
        assert!((sf.delta.re - 1.0).abs() < 1e-12);
        assert!((sf.m.unwrap().re + 1.0).abs() < 1e-12 && (sf.n.unwrap().re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_parameter_matches_closed_form() {
        let q = Potential::constant(0.0);
        let mu = cplx(1.0, 0.7);
        let sf = spectral_functions(&q, mu * mu).unwrap();
        let expect = mu.sinh() / mu;
        assert!((sf.delta - expect).norm() < 1e-10);
        assert!((sf.m.unwrap() + mu / mu.tanh()).norm() < 1e-9);
    }

    #[test]
    fn flat_and_shifted_spectrum() {
        let s = dirichlet_spectrum(&Potential::constant(0.0), 3).unwrap();
        for (k, l) in s.eigenvalues.iter().enumerate() {
            let e = ((k + 1) * (k + 1)) as f64 * PI * PI;
            assert!((l - e).abs() < 1e-9 * e);
        }
        assert_eq!(s.alpha2()[1], -s.eigenvalues[1]);
        let s = dirichlet_spectrum(&Potential::constant(5.0), 1).unwrap();
        assert!((s.eigenvalues[0] - 5.0 - PI * PI).abs() < 1e-9);
    }

    #[test]
    fn flat_eigenfunction() {
        let q = Potential::constant(0.0);
        let ef = eigenfunction(&q, PI * PI).unwrap();
        assert!((ef.value(0.5) - 2f64.sqrt()).abs() < 1e-9);
        assert!((ef.tail(0.5) - 0.5).abs() < 1e-10);
        assert!(ef.tail(1.0).abs() < 1e-14);
        assert!((ef.tail(0.0) - 1.0).abs() < 1e-14);
        let (v, dv, _) = ef.eval(0.123);
        assert!((v - 2f64.sqrt() * (PI * 0.123).sin()).abs() < 1e-9);
        assert!((dv - 2f64.sqrt() * PI * (PI * 0.123).cos()).abs() < 1e-8);
        assert!(eigenfunction(&q, PI * PI + 1e-3).is_err());
    }

    #[test]
    fn flat_residues() {
        let q = Potential::constant(0.0);
        for k in 1..=2 {
            let r = residue_at_pole(&q, k).unwrap();
            let e = 2.0 * (k * k) as f64 * PI * PI;
            assert!((r.mu2_residue - e).abs() < 1e-7 * e, "{} vs {}", r.mu2_residue, e);
            assert!(r.alpha.im > 0.0);
        }
        // M for q ≡ 5 is M for q ≡ 0 translated by 5, so the residue is unchanged
        let r = residue_at_pole(&Potential::constant(5.0), 1).unwrap();
        assert!((r.alpha2 + 5.0 + PI * PI).abs() < 1e-9);
        assert!((r.mu2_residue - 2.0 * PI * PI).abs() < 1e-6);
    }

    #[test]
    fn nonconstant_eigenvalues_within_bounds() {
        let q = Potential::from_expr("3*sin(2*pi*x) + 10*x").unwrap();
        let ev = Solver::default().eigenvalues(&q, 8).unwrap();
        for e in &ev {
            let b = (e.k * e.k) as f64 * PI * PI;
            assert!(e.lambda >= b + q.min() - 1e-9 && e.lambda <= b + q.max() + 1e-9);
            assert!(e.residual < 1e-11);
        }
    }
}
