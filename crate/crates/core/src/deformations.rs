//! Isospectral deformations of potentials and the metric / Schrödinger
//! families built from them.
//!
//! For an eigenfunction v_k with tail integral τ_k(x) = ∫ₓ¹ v_k², set
//! θ_{k,t} = 1 + (e^t − 1) τ_k. The deformed potential is
//! q_{k,t} = q − 2 (log θ_{k,t})''. Since θ' = −(e^t − 1) v_k², this expands to
//! q + 2[2(e^t − 1) θ v_k v_k' + (e^t − 1)² v_k⁴] / θ².

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::profiles::{
    reduced_potential_2d, reduced_potential_3d, Potential, ProfileFn, RadialProfile, Reduction, CHECK_GRID,
};
use crate::quad::GAUSS6;
use crate::sl_engine::{Eigenfunction, Solver, SpectralData, EIGEN_GRID};
use crate::spline::CubicSpline;

/// Finite-support sequence ξ; entry i corresponds to eigen index i + 1.
#[derive(Debug, Clone, PartialEq)]
pub struct XiVector {
    pub entries: Vec<f64>,
}

impl XiVector {
    pub fn new(entries: Vec<f64>) -> Self {
        XiVector { entries }
    }

    /// Eigen indices (1-based) with a nonzero entry.
    pub fn support(&self) -> Vec<usize> {
        self.entries.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i + 1).collect()
    }

    pub fn single(k: usize, t: f64) -> Self {
        let mut entries = vec![0.0; k];
        entries[k - 1] = t;
        XiVector { entries }
    }
}

/// θ_{k,t}(x).
pub fn theta_kt(spec: &SpectralData, k: usize, t: f64, x: f64) -> Result<f64> {
    let ef = spec.eigenfunction(k)?;
    Ok(1.0 + t.exp_m1() * ef.tail(x))
}

/// q_{k,t} − q = −2 (log θ_{k,t})'' at x.
pub fn single_correction(ef: &Eigenfunction, t: f64, x: f64) -> f64 {
    let a = t.exp_m1();
    if a == 0.0 {
        return 0.0;
    }
    let theta = 1.0 + a * ef.tail(x);
    let (v, dv, _) = ef.eval(x);
    let v2 = v * v;
    2.0 * (2.0 * a * theta * v * dv + a * a * v2 * v2) / (theta * theta)
}

/// A profile whose value is `base + scale·corr(x)/weight(x)` evaluated exactly, with the
/// derivatives of the correction taken from a spline through its grid samples.
struct CorrectedProfile {
    base: RadialProfile,
    corr: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    spline: CubicSpline,
}

impl ProfileFn for CorrectedProfile {
    fn jet(&self, x: f64) -> Jet {
        let b = self.base.jet(x);
        let (_, d1, d2) = self.spline.eval3(x);
        Jet::new(b.v + (self.corr)(x), b.d1 + d1, b.d2 + d2)
    }

    fn d3(&self, x: f64) -> Option<f64> {
        Some(self.base.third_derivative(x) + self.spline.d3(x))
    }
}

fn corrected_profile<F>(base: &RadialProfile, corr: F, name: &str) -> Result<RadialProfile>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let spline = CubicSpline::sample(EIGEN_GRID, &corr)?;
    Ok(RadialProfile::from_impl(CorrectedProfile { base: base.clone(), corr: Arc::new(corr), spline }, name))
}

/// Deformation machinery with a chosen solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct Deformer {
    pub solver: Solver,
}

impl Deformer {
    pub fn new(solver: Solver) -> Self {
        Deformer { solver }
    }

    pub fn deform_potential_single(&self, q: &Potential, spec: &SpectralData, k: usize, t: f64) -> Result<Potential> {
        let ef = spec.eigenfunction(k)?.clone();
        let red = Reduction::Deformed { base: Box::new(q.reduction.clone()) };
        if t == 0.0 {
            return Ok(q.clone().with_reduction(red));
        }
        q.plus(move |x| single_correction(&ef, t, x), red)
    }

    pub fn deform_potential_xi(&self, q: &Potential, spec: &SpectralData, xi: &XiVector) -> Result<Potential> {
        let support = xi.support();
        let red = Reduction::Deformed { base: Box::new(q.reduction.clone()) };
        if support.is_empty() {
            return Ok(q.clone().with_reduction(red));
        }
        let efs: Vec<&Eigenfunction> = support.iter().map(|&k| spec.eigenfunction(k)).collect::<Result<_>>()?;
        let s = support.len();
        let n = EIGEN_GRID;
        let h = 1.0 / (n - 1) as f64;
        let weights: Vec<f64> = support.iter().map(|&k| xi.entries[k - 1].exp_m1()).collect();

        // cross integrals ∫ₓ¹ v_i v_j on the grid, accumulated from the right
        let mut cross = vec![vec![0.0; s * s]; n];
        for cell in (0..n - 1).rev() {
            let a = cell as f64 * h;
            let mut acc = vec![0.0; s * s];
            for &(node, w) in &GAUSS6 {
                let x = a + 0.5 * h * (node + 1.0);
                let vals: Vec<f64> = efs.iter().map(|e| e.value(x)).collect();
                for i in 0..s {
                    for j in 0..s {
                        acc[i * s + j] += 0.5 * h * w * vals[i] * vals[j];
                    }
                }
            }
            for idx in 0..s * s {
                cross[cell][idx] = cross[cell + 1][idx] + acc[idx];
            }
        }
        let mut logdet = Vec::with_capacity(n);
        for (i, c) in cross.iter().enumerate() {
            let mut m = vec![0.0; s * s];
            for r in 0..s {
                for col in 0..s {
                    m[r * s + col] = if r == col { 1.0 } else { 0.0 } + weights[r] * c[r * s + col];
                }
            }
            let d = determinant(&mut m, s);
            if !(d > 0.0) {
                return Err(Error::Internal(format!("det Theta = {d} is not positive at x = {}", i as f64 * h)));
            }
            logdet.push(d.ln());
        }
        let second = second_derivative_4th(&logdet, h);
        let corr: Vec<f64> = second.iter().map(|d| -2.0 * d).collect();
        let spline = CubicSpline::new(corr)?;
        q.plus(move |x| spline.eval(x), red)
    }

    fn reduced_spectrum(&self, q: &Potential, k: usize) -> Result<SpectralData> {
        self.solver.dirichlet_spectrum(q, k)
    }

    /// f_{λ,k,t} = (q_λ)_{k,t} / (−λ²) with q_λ = −λ² f.
    pub fn deform_metric_2d(&self, f: &RadialProfile, lambda2: f64, k: usize, t: f64) -> Result<MetricDeformation> {
        if lambda2 == 0.0 {
            return Err(Error::Invalid("the metric family requires a nonzero frequency".into()));
        }
        if k == 0 {
            return Err(Error::Invalid("eigen index starts at 1".into()));
        }
        let q = reduced_potential_2d(f, None, lambda2)?;
        let spec = self.reduced_spectrum(&q, k)?;
        self.metric_from_spectrum(f, lambda2, &spec, k, t)
    }

    pub fn metric_from_spectrum(
        &self,
        f: &RadialProfile,
        lambda2: f64,
        spec: &SpectralData,
        k: usize,
        t: f64,
    ) -> Result<MetricDeformation> {
        let ef = spec.eigenfunction(k)?.clone();
        let name = format!("f_(lambda2={lambda2},k={k},t={t})");
        let f_tilde = corrected_profile(f, move |x| -single_correction(&ef, t, x) / lambda2, &name)?;
        let positive = f_tilde.check_positive().is_ok();
        Ok(MetricDeformation { f_tilde, positive, eigenvalue: spec.eigenvalues[k - 1] })
    }

    /// Largest T (≤ `cap`) such that f_{λ,k,t} > 0 on the check grid for 33 values of t in [−T, T].
    pub fn positivity_window(&self, f: &RadialProfile, lambda2: f64, k: usize, cap: f64) -> Result<f64> {
        if lambda2 == 0.0 {
            return Err(Error::Invalid("the metric family requires a nonzero frequency".into()));
        }
        let q = reduced_potential_2d(f, None, lambda2)?;
        let spec = self.reduced_spectrum(&q, k)?;
        let ef = spec.eigenfunction(k)?;
        let hx = 1.0 / (CHECK_GRID - 1) as f64;
        let base: Vec<f64> = (0..CHECK_GRID).map(|i| f.value(i as f64 * hx)).collect();
        let ok = |tmax: f64| {
            (0..33).all(|j| {
                let t = -tmax + 2.0 * tmax * j as f64 / 32.0;
                (0..CHECK_GRID).all(|i| base[i] - single_correction(ef, t, i as f64 * hx) / lambda2 > 0.0)
            })
        };
        if ok(cap) {
            return Ok(cap);
        }
        let (mut lo, mut hi) = (0.0, cap);
        while hi - lo > 1e-3 * hi {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// Ṽ = V − (2/f)(log θ_{k,t})'' built on q_{λ,V} (2D) or q_{λ,V,n=0} (3D with f = h).
    #[allow(clippy::too_many_arguments)]
    pub fn deform_schrodinger_potential(
        &self,
        f: &RadialProfile,
        h: Option<&RadialProfile>,
        v: &RadialProfile,
        lambda2: f64,
        k: usize,
        t: f64,
    ) -> Result<RadialProfile> {
        let q = match h {
            None => reduced_potential_2d(f, Some(v), lambda2)?,
            Some(h) => {
                let hx = 1.0 / (CHECK_GRID - 1) as f64;
                for i in 0..CHECK_GRID {
                    let x = i as f64 * hx;
                    if (f.value(x) - h.value(x)).abs() > 1e-12 {
                        return Err(Error::Invalid(format!(
                            "the three-dimensional Schrödinger family needs f = h (differ at x = {x})"
                        )));
                    }
                }
                reduced_potential_3d(f, h, Some(v), lambda2, 0)?
            }
        };
        let spec = self.reduced_spectrum(&q, k)?;
        let ef = spec.eigenfunction(k)?.clone();
        let fc = f.clone();
        corrected_profile(v, move |x| single_correction(&ef, t, x) / fc.value(x), &format!("V_(k={k},t={t})"))
    }
}

/// Result of the two-dimensional metric deformation.
#[derive(Debug, Clone)]
pub struct MetricDeformation {
    pub f_tilde: RadialProfile,
    /// Whether f̃ passed the positivity check.
    pub positive: bool,
    pub eigenvalue: f64,
}

fn determinant(m: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a * n + c].abs().total_cmp(&m[b * n + c].abs())).unwrap();
        if m[p * n + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for j in 0..n {
                m.swap(p * n + j, c * n + j);
            }
            det = -det;
        }
        let piv = m[c * n + c];
        det *= piv;
        for r in c + 1..n {
            let f = m[r * n + c] / piv;
            for j in c..n {
                m[r * n + j] -= f * m[c * n + j];
            }
        }
    }
    det
}

/// Fourth-order finite-difference second derivative on a uniform grid.
pub fn second_derivative_4th(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let h2 = 12.0 * h * h;
    let mut out = vec![0.0; n];
    let fwd0 = |s: &dyn Fn(usize) -> f64| {
        (45.0 * s(0) - 154.0 * s(1) + 214.0 * s(2) - 156.0 * s(3) + 61.0 * s(4) - 10.0 * s(5)) / h2
    };
    let fwd1 =
        |s: &dyn Fn(usize) -> f64| (10.0 * s(0) - 15.0 * s(1) - 4.0 * s(2) + 14.0 * s(3) - 6.0 * s(4) + s(5)) / h2;
    out[0] = fwd0(&|i| y[i]);
    out[1] = fwd1(&|i| y[i]);
    out[n - 1] = fwd0(&|i| y[n - 1 - i]);
    out[n - 2] = fwd1(&|i| y[n - 1 - i]);
    for i in 2..n - 2 {
        out[i] = (-y[i - 2] + 16.0 * y[i - 1] - 30.0 * y[i] + 16.0 * y[i + 1] - y[i + 2]) / h2;
    }
    out
}

pub fn theta(spec: &SpectralData, k: usize, t: f64, x: f64) -> Result<f64> {
    theta_kt(spec, k, t, x)
}

pub fn deform_potential_single(q: &Potential, spec: &SpectralData, k: usize, t: f64) -> Result<Potential> {
    Deformer::default().deform_potential_single(q, spec, k, t)
}

pub fn deform_potential_xi(q: &Potential, spec: &SpectralData, xi: &XiVector) -> Result<Potential> {
    Deformer::default().deform_potential_xi(q, spec, xi)
}

pub fn deform_metric_2d(f: &RadialProfile, lambda2: f64, k: usize, t: f64) -> Result<MetricDeformation> {
    Deformer::default().deform_metric_2d(f, lambda2, k, t)
}

pub fn positivity_window(f: &RadialProfile, lambda2: f64, k: usize) -> Result<f64> {
    Deformer::default().positivity_window(f, lambda2, k, 10.0)
}

pub fn deform_schrodinger_potential(
    f: &RadialProfile,
    h: Option<&RadialProfile>,
    v: &RadialProfile,
    lambda2: f64,
    k: usize,
    t: f64,
) -> Result<RadialProfile> {
    Deformer::default().deform_schrodinger_potential(f, h, v, lambda2, k, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl_engine::dirichlet_spectrum;

    fn flat_spec(k: usize) -> SpectralData {
        dirichlet_spectrum(&Potential::constant(0.0), k).unwrap()
    }

    #[test]
    fn theta_examples() {
        let s = flat_spec(1);
        assert_eq!(theta_kt(&s, 1, 0.0, 0.3).unwrap(), 1.0);
        assert!((theta_kt(&s, 1, 0.5, 0.5).unwrap() - 1.32436).abs() < 1e-5);
        assert!((theta_kt(&s, 1, 0.7, 1.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_deformation_closed_form() {
        let q = Potential::constant(0.0);
        let s = flat_spec(1);
        let d = deform_potential_single(&q, &s, 1, 0.5).unwrap();
        let a = 0.5f64.exp_m1();
        let th = 1.0 + a / 2.0;
        assert!((d.eval(0.5) - 8.0 * a * a / (th * th)).abs() < 1e-9);
        assert!((d.eval(0.5) - 1.91952).abs() < 1e-5);
        assert!(d.eval(0.0).abs() < 1e-10 && d.eval(1.0).abs() < 1e-10);
        let same = deform_potential_single(&q, &s, 1, 0.0).unwrap();
        assert_eq!(same.eval(0.3), 0.0);
    }

    #[test]
    fn xi_single_entry_matches_closed_form() {
        let q = Potential::constant(0.0);
        let s = flat_spec(2);
        let a = deform_potential_single(&q, &s, 2, 0.4).unwrap();
        let b = deform_potential_xi(&q, &s, &XiVector::single(2, 0.4)).unwrap();
        for i in 0..=64 {
            let x = i as f64 / 64.0;
            assert!((a.eval(x) - b.eval(x)).abs() < 1e-6, "x = {x} {} {}", a.eval(x), b.eval(x));
        }
        let z = deform_potential_xi(&q, &s, &XiVector::new(vec![0.0, 0.0])).unwrap();
        assert_eq!(z.eval(0.4), 0.0);
    }

    #[test]
    fn metric_deformation_closed_form() {
        let one = RadialProfile::constant(1.0);
        let d = deform_metric_2d(&one, 1.0, 1, 0.1).unwrap();
        assert!((d.f_tilde.value(0.5) - 0.92013).abs() < 1e-5);
        assert!((d.f_tilde.value(0.0) - 1.0).abs() < 1e-9 && (d.f_tilde.value(1.0) - 1.0).abs() < 1e-9);
        // outside the positivity window: f̃ < 0 near x = 1/4
        assert!(!d.positive);
        assert!(deform_metric_2d(&one, 1.0, 1, 0.05).unwrap().positive);
        assert!(deform_metric_2d(&one, 0.0, 1, 0.1).is_err());
    }

    #[test]
    fn window_for_flat_metric() {
        let w = positivity_window(&RadialProfile::constant(1.0), 1.0, 1).unwrap();
        // closed form over the whole check grid gives T ≈ 0.0812 (the minimum sits near x = 1/4)
        assert!(w > 0.080 && w < 0.082, "{w}");
    }

    #[test]
    fn schrodinger_deformation_endpoints() {
        let one = RadialProfile::constant(1.0);
        let zero = RadialProfile::constant(0.0);
        let v = deform_schrodinger_potential(&one, None, &zero, 0.0, 1, 0.5).unwrap();
        assert!((v.value(0.5) - 1.91952).abs() < 1e-5);
        assert!(v.value(0.0).abs() < 1e-9 && v.value(1.0).abs() < 1e-9);
        let two = RadialProfile::constant(2.0);
        assert!(deform_schrodinger_potential(&one, Some(&two), &zero, 0.0, 1, 0.5).is_err());
    }

    #[test]
    fn fd_second_derivative_order() {
        let n = 257;
        let h = 1.0 / (n - 1) as f64;
        let y: Vec<f64> = (0..n).map(|i| (2.0 * i as f64 * h).sin()).collect();
        let d = second_derivative_4th(&y, h);
        for (i, v) in d.iter().enumerate() {
            let x = i as f64 * h;
            assert!((v + 4.0 * (2.0 * x).sin()).abs() < 1e-6);
        }
    }
}
