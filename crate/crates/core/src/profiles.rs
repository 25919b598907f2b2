//! Radial profiles f, h, V, c on [0, 1] and the reductions to 1D potentials.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr, Var};
use crate::jet::Jet;
use crate::spline::CubicSpline;

/// Number of points of the uniform grid used for positivity and boundedness checks.
pub const CHECK_GRID: usize = 2049;

/// Anything that can produce a second-order jet at points of [0, 1].
pub trait ProfileFn: Send + Sync {
    fn jet(&self, x: f64) -> Jet;

    /// Third derivative, when the representation knows it exactly.
    fn d3(&self, _x: f64) -> Option<f64> {
        None
    }

    fn constant(&self) -> Option<f64> {
        None
    }
}

struct ExprProfile {
    e: Expr,
    d1: Expr,
    d2: Expr,
    d3: Expr,
}

impl ProfileFn for ExprProfile {
    fn jet(&self, x: f64) -> Jet {
        Jet::new(self.e.eval(x), self.d1.eval(x), self.d2.eval(x))
    }

    fn d3(&self, x: f64) -> Option<f64> {
        Some(self.d3.eval(x))
    }

    fn constant(&self) -> Option<f64> {
        if self.e.is_constant() {
            Some(self.e.eval(0.0))
        } else {
            None
        }
    }
}

struct SplineProfile(CubicSpline);

impl ProfileFn for SplineProfile {
    fn jet(&self, x: f64) -> Jet {
        let (v, d1, d2) = self.0.eval3(x);
        Jet::new(v, d1, d2)
    }

    fn d3(&self, x: f64) -> Option<f64> {
        Some(self.0.d3(x))
    }
}

struct FnProfile<F, G> {
    jet: F,
    d3: Option<G>,
}

impl<F, G> ProfileFn for FnProfile<F, G>
where
    F: Fn(f64) -> Jet + Send + Sync,
    G: Fn(f64) -> f64 + Send + Sync,
{
    fn jet(&self, x: f64) -> Jet {
        (self.jet)(x)
    }

    fn d3(&self, x: f64) -> Option<f64> {
        self.d3.as_ref().map(|g| g(x))
    }
}

/// A smooth real function of x ∈ [0, 1] with access to two derivatives.
#[derive(Clone)]
pub struct RadialProfile {
    inner: Arc<dyn ProfileFn>,
    name: String,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RadialProfile({})", self.name)
    }
}

impl RadialProfile {
    pub fn from_expr(src: &str) -> Result<Self> {
        let e = parse_expression(src)?;
        Ok(Self::from_tree(e, src.trim()))
    }

    pub fn from_tree(e: Expr, name: &str) -> Self {
        let d1 = e.diff(Var::X);
        let d2 = d1.diff(Var::X);
        let d3 = d2.diff(Var::X);
        RadialProfile { inner: Arc::new(ExprProfile { e, d1, d2, d3 }), name: name.to_string() }
    }

    pub fn constant(v: f64) -> Self {
        Self::from_tree(Expr::Num(v), &format!("{v}"))
    }

    /// Samples at `n` uniform points of [0, 1], interpolated by a not-a-knot cubic spline.
    pub fn from_samples(samples: Vec<f64>, name: &str) -> Result<Self> {
        let s = CubicSpline::new(samples)?;
        Ok(RadialProfile { inner: Arc::new(SplineProfile(s)), name: name.to_string() })
    }

    pub fn from_spline(s: CubicSpline, name: &str) -> Self {
        RadialProfile { inner: Arc::new(SplineProfile(s)), name: name.to_string() }
    }

    /// A profile defined by a jet-valued closure. The third derivative falls back
    /// to finite differences of the second.
    pub fn from_jet_fn<F>(name: &str, jet: F) -> Self
    where
        F: Fn(f64) -> Jet + Send + Sync + 'static,
    {
        let p: FnProfile<F, fn(f64) -> f64> = FnProfile { jet, d3: None };
        RadialProfile { inner: Arc::new(p), name: name.to_string() }
    }

    pub fn from_jet_fn_with_d3<F, G>(name: &str, jet: F, d3: G) -> Self
    where
        F: Fn(f64) -> Jet + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        RadialProfile { inner: Arc::new(FnProfile { jet, d3: Some(d3) }), name: name.to_string() }
    }

    pub fn from_impl<P: ProfileFn + 'static>(p: P, name: &str) -> Self {
        RadialProfile { inner: Arc::new(p), name: name.to_string() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    /// Checked evaluation of the derivative of the given order.
    pub fn eval(&self, x: f64, order: usize) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain { x });
        }
        let j = self.inner.jet(x);
        match order {
            0 => Ok(j.v),
            1 => Ok(j.d1),
            2 => Ok(j.d2),
            _ => Err(Error::UnsupportedOrder { order }),
        }
    }

    #[inline]
    pub fn jet(&self, x: f64) -> Jet {
        self.inner.jet(x)
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self.inner.constant() {
            Some(c) => c,
            None => self.inner.jet(x).v,
        }
    }

    pub fn third_derivative(&self, x: f64) -> f64 {
        if let Some(v) = self.inner.d3(x) {
            return v;
        }
        let h = 1e-4;
        let d2 = |s: f64| self.inner.jet(s).d2;
        if x - h < 0.0 {
            (-3.0 * d2(x) + 4.0 * d2(x + h) - d2(x + 2.0 * h)) / (2.0 * h)
        } else if x + h > 1.0 {
            (3.0 * d2(x) - 4.0 * d2(x - h) + d2(x - 2.0 * h)) / (2.0 * h)
        } else {
            (d2(x + h) - d2(x - h)) / (2.0 * h)
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.inner.constant()
    }

    /// Values at `n` uniform points of [0, 1].
    pub fn sample(&self, n: usize) -> Vec<f64> {
        let h = 1.0 / (n - 1) as f64;
        (0..n).map(|i| self.value(i as f64 * h)).collect()
    }

    /// Grid-based positivity guard on the check grid.
    pub fn check_positive(&self) -> Result<()> {
        let h = 1.0 / (CHECK_GRID - 1) as f64;
        for i in 0..CHECK_GRID {
            let x = i as f64 * h;
            let v = self.value(x);
            if !v.is_finite() {
                return Err(Error::NotFinite { name: self.name.clone(), x });
            }
            if v <= 0.0 {
                return Err(Error::NotPositive { name: self.name.clone(), value: v, x });
            }
        }
        Ok(())
    }

    /// Checks that value and both derivatives are finite on the check grid.
    pub fn check_finite(&self) -> Result<()> {
        let h = 1.0 / (CHECK_GRID - 1) as f64;
        for i in 0..CHECK_GRID {
            let x = i as f64 * h;
            let j = self.jet(x);
            if !(j.v.is_finite() && j.d1.is_finite() && j.d2.is_finite()) {
                return Err(Error::NotFinite { name: self.name.clone(), x });
            }
        }
        Ok(())
    }

    /// Pointwise combination of two profiles through their jets.
    pub fn combine<F>(&self, other: &RadialProfile, name: &str, op: F) -> RadialProfile
    where
        F: Fn(Jet, Jet) -> Jet + Send + Sync + 'static,
    {
        let (a, b) = (self.clone(), other.clone());
        if let (Some(ca), Some(cb)) = (a.as_constant(), b.as_constant()) {
            return RadialProfile::constant(op(Jet::constant(ca), Jet::constant(cb)).v).with_name(name);
        }
        RadialProfile::from_jet_fn(name, move |x| op(a.jet(x), b.jet(x)))
    }

    pub fn map<F>(&self, name: &str, op: F) -> RadialProfile
    where
        F: Fn(Jet) -> Jet + Send + Sync + 'static,
    {
        let a = self.clone();
        if let Some(c) = a.as_constant() {
            return RadialProfile::constant(op(Jet::constant(c)).v).with_name(name);
        }
        RadialProfile::from_jet_fn(name, move |x| op(a.jet(x)))
    }
}

/// Two-dimensional warped metric f(x)(dx² + dy²).
#[derive(Debug, Clone)]
pub struct Metric2D {
    pub f: RadialProfile,
}

impl Metric2D {
    pub fn new(f: RadialProfile) -> Result<Self> {
        f.check_positive()?;
        Ok(Metric2D { f })
    }

    /// Skips the interior positivity check and only requires f(0), f(1) > 0.
    /// DN blocks depend on f through q = (V − λ²)f and the endpoint values, so
    /// they stay well defined for deformed profiles outside their positivity window.
    pub fn formal(f: RadialProfile) -> Result<Self> {
        f.check_finite()?;
        for x in [0.0, 1.0] {
            let v = f.value(x);
            if v <= 0.0 {
                return Err(Error::NotPositive { name: f.name().to_string(), value: v, x });
            }
        }
        Ok(Metric2D { f })
    }
}

/// Three-dimensional warped metric f(x)(dx² + dy²) + h(x)dz².
#[derive(Debug, Clone)]
pub struct Metric3D {
    pub f: RadialProfile,
    pub h: RadialProfile,
}

impl Metric3D {
    pub fn new(f: RadialProfile, h: RadialProfile) -> Result<Self> {
        f.check_positive()?;
        h.check_positive()?;
        h.check_finite()?;
        Ok(Metric3D { f, h })
    }

    /// (log h)' and (log h)'' at x.
    pub fn log_h_derivs(&self, x: f64) -> (f64, f64) {
        log_derivs(&self.h, x)
    }
}

pub(crate) fn log_derivs(h: &RadialProfile, x: f64) -> (f64, f64) {
    if h.as_constant().is_some() {
        return (0.0, 0.0);
    }
    let j = h.jet(x);
    let l1 = j.d1 / j.v;
    (l1, j.d2 / j.v - l1 * l1)
}

/// Where a potential came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Reduction {
    Direct,
    TwoD { lambda2: f64, with_v: bool },
    ThreeD { lambda2: f64, n: i64, with_v: bool },
    ConformalLaplacian,
    Deformed { base: Box<Reduction> },
}

type QFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A bounded real potential q on [0, 1] for the operator −d²/dx² + q.
#[derive(Clone)]
pub struct Potential {
    f: Arc<QFn>,
    constant: Option<f64>,
    pub reduction: Reduction,
    min: f64,
    max: f64,
    mean: f64,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("reduction", &self.reduction)
            .field("min", &self.min)
            .field("max", &self.max)
            .finish()
    }
}

impl Potential {
    pub fn new<F>(f: F, reduction: Reduction) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let h = 1.0 / (CHECK_GRID - 1) as f64;
        let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for i in 0..CHECK_GRID {
            let x = i as f64 * h;
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NotFinite { name: "q".into(), x });
            }
            min = min.min(v);
            max = max.max(v);
            let w = if i == 0 || i == CHECK_GRID - 1 { 0.5 } else { 1.0 };
            sum += w * v;
        }
        Ok(Potential { f: Arc::new(f), constant: None, reduction, min, max, mean: sum * h })
    }

    pub fn constant(c: f64) -> Self {
        Potential { f: Arc::new(move |_| c), constant: Some(c), reduction: Reduction::Direct, min: c, max: c, mean: c }
    }

    pub fn from_expr(src: &str) -> Result<Self> {
        let p = RadialProfile::from_expr(src)?;
        Self::from_profile(&p)
    }

    pub fn from_profile(p: &RadialProfile) -> Result<Self> {
        if let Some(c) = p.as_constant() {
            return Ok(Self::constant(c));
        }
        let p = p.clone();
        Self::new(move |x| p.value(x), Reduction::Direct)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self.constant {
            Some(c) => c,
            None => (self.f)(x),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// q + a for a constant a.
    pub fn shifted(&self, a: f64) -> Potential {
        if let Some(c) = self.constant {
            let mut p = Potential::constant(c + a);
            p.reduction = self.reduction.clone();
            return p;
        }
        let f = self.f.clone();
        Potential {
            f: Arc::new(move |x| f(x) + a),
            constant: None,
            reduction: self.reduction.clone(),
            min: self.min + a,
            max: self.max + a,
            mean: self.mean + a,
        }
    }

    /// q + g for a bounded function g.
    pub fn plus<G>(&self, g: G, reduction: Reduction) -> Result<Potential>
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f = self.f.clone();
        let c = self.constant;
        Potential::new(
            move |x| {
                let base = match c {
                    Some(c) => c,
                    None => f(x),
                };
                base + g(x)
            },
            reduction,
        )
    }

    pub fn with_reduction(mut self, reduction: Reduction) -> Self {
        self.reduction = reduction;
        self
    }
}

/// q = (V − λ²) f.
pub fn reduced_potential_2d(f: &RadialProfile, v: Option<&RadialProfile>, lambda2: f64) -> Result<Potential> {
    let reduction = Reduction::TwoD { lambda2, with_v: v.is_some() };
    let vc = match v {
        None => Some(0.0),
        Some(v) => v.as_constant(),
    };
    if let (Some(fc), Some(vc)) = (f.as_constant(), vc) {
        return Ok(Potential::constant((vc - lambda2) * fc).with_reduction(reduction));
    }
    let f = f.clone();
    let v = v.cloned();
    Potential::new(
        move |x| {
            let vv = v.as_ref().map_or(0.0, |v| v.value(x));
            (vv - lambda2) * f.value(x)
        },
        reduction,
    )
}

/// q = ((log h)')²/16 + (log h)''/4 + n² f/h + (V − λ²) f.
pub fn reduced_potential_3d(
    f: &RadialProfile,
    h: &RadialProfile,
    v: Option<&RadialProfile>,
    lambda2: f64,
    n: i64,
) -> Result<Potential> {
    let reduction = Reduction::ThreeD { lambda2, n, with_v: v.is_some() };
    let n2 = (n * n) as f64;
    let vc = match v {
        None => Some(0.0),
        Some(v) => v.as_constant(),
    };
    if let (Some(fc), Some(hc), Some(vc)) = (f.as_constant(), h.as_constant(), vc) {
        return Ok(Potential::constant(n2 * fc / hc + (vc - lambda2) * fc).with_reduction(reduction));
    }
    let f = f.clone();
    let h = h.clone();
    let v = v.cloned();
    Potential::new(
        move |x| {
            let (l1, l2) = log_derivs(&h, x);
            let fv = f.value(x);
            let vv = v.as_ref().map_or(0.0, |v| v.value(x));
            l1 * l1 / 16.0 + l2 / 4.0 + n2 * fv / h.value(x) + (vv - lambda2) * fv
        },
        reduction,
    )
}

/// Potential of the conformal Laplacian in three dimensions:
/// q = −c^{−1/4} (1/f) [w'' + ½ (log h)' w'] with w = c^{1/4}.
pub fn conformal_laplacian_q(c: &RadialProfile, g: &Metric3D) -> Result<Potential> {
    c.check_positive()?;
    if c.as_constant().is_some() {
        return Ok(Potential::constant(0.0).with_reduction(Reduction::ConformalLaplacian));
    }
    let c = c.clone();
    let g = g.clone();
    Potential::new(
        move |x| {
            let w = c.jet(x).powf(0.25);
            let (l1, _) = g.log_h_derivs(x);
            -(w.d2 + 0.5 * l1 * w.d1) / (w.v * g.f.value(x))
        },
        Reduction::ConformalLaplacian,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(s: &str) -> RadialProfile {
        RadialProfile::from_expr(s).unwrap()
    }

    #[test]
    fn eval_profile_examples() {
        assert_eq!(p("1+x").eval(0.5, 1).unwrap(), 1.0);
        assert!((p("sin(pi*x)").eval(0.5, 2).unwrap() + PI * PI).abs() < 1e-12);
        assert_eq!(p("1").eval(0.3, 0).unwrap(), 1.0);
    }

    #[test]
    fn eval_profile_errors() {
        assert!(matches!(p("x").eval(1.5, 0), Err(Error::Domain { .. })));
        assert!(matches!(p("x").eval(-0.1, 0), Err(Error::Domain { .. })));
        assert!(matches!(p("x").eval(0.5, 3), Err(Error::UnsupportedOrder { order: 3 })));
    }

    #[test]
    fn spline_profile_derivatives() {
        let s = RadialProfile::from_samples(p("exp(x)").sample(1025), "s").unwrap();
        let j = s.jet(0.4);
        let e = 0.4f64.exp();
        assert!((j.v - e).abs() < 1e-12);
        assert!((j.d1 - e).abs() < 1e-7);
        assert!((j.d2 - e).abs() < 1e-4);
    }

    #[test]
    fn positivity_guard() {
        assert!(p("1 + x").check_positive().is_ok());
        match p("x - 0.5").check_positive() {
            Err(Error::NotPositive { x, .. }) => assert_eq!(x, 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reduced_2d_examples() {
        let one = RadialProfile::constant(1.0);
        assert_eq!(reduced_potential_2d(&one, None, 0.0).unwrap().eval(0.3), 0.0);
        assert_eq!(reduced_potential_2d(&one, None, 1.0).unwrap().eval(0.3), -1.0);
        let q = reduced_potential_2d(&RadialProfile::constant(2.0), Some(&RadialProfile::constant(3.0)), 1.0).unwrap();
        assert_eq!(q.eval(0.7), 4.0);
    }

    #[test]
    fn reduced_3d_examples() {
        let one = RadialProfile::constant(1.0);
        assert_eq!(reduced_potential_3d(&one, &one, None, 0.0, 0).unwrap().eval(0.2), 0.0);
        assert_eq!(reduced_potential_3d(&one, &one, None, 0.0, 2).unwrap().eval(0.2), 4.0);
        let q = reduced_potential_3d(&one, &p("exp(2*x)"), None, 0.0, 0).unwrap();
        for &x in &[0.0, 0.4, 1.0] {
            assert!((q.eval(x) - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn n_dependence_is_additive() {
        let f = p("1 + 0.3*sin(x)");
        let h = p("2 + x^2");
        let q0 = reduced_potential_3d(&f, &h, None, 1.5, 0).unwrap();
        let q3 = reduced_potential_3d(&f, &h, None, 1.5, 3).unwrap();
        for &x in &[0.0, 0.25, 0.9] {
            let expect = 9.0 * f.value(x) / h.value(x);
            assert!((q3.eval(x) - q0.eval(x) - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn conformal_laplacian_examples() {
        let g = Metric3D::new(RadialProfile::constant(1.0), RadialProfile::constant(1.0)).unwrap();
        let q = conformal_laplacian_q(&RadialProfile::constant(3.0), &g).unwrap();
        assert_eq!(q.eval(0.5), 0.0);
        let q = conformal_laplacian_q(&p("(1+x)^4"), &g).unwrap();
        assert!(q.eval(0.3).abs() < 1e-13);
        let q = conformal_laplacian_q(&p("exp(4*x)"), &g).unwrap();
        assert!((q.eval(0.3) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn third_derivative_fallback() {
        let f = RadialProfile::from_jet_fn("cubic", |x| {
            let j = Jet::var(x);
            j * j * j
        });
        for &x in &[0.0, 0.5, 1.0] {
            assert!((f.third_derivative(x) - 6.0).abs() < 1e-6);
        }
        assert!((p("x^4").third_derivative(0.5) - 12.0).abs() < 1e-12);
    }
}
