//! Conformal factors c for three-dimensional warped metrics and the families
//! g̃ = c⁴ g that keep every reduced potential q_{λn} unchanged.
//!
//! The factor must satisfy c'' + ½(log h)' c' + λ² f (c − c⁵) = 0. At λ² = 0 the
//! solutions are affine in ∫ ds/√h. For λ² ≠ 0 the families fix c and solve
//! the same equation for h instead.

use serde::Serialize;

use crate::dn_assembler::{Assembler, DnBlock, Setup};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::ode::{Dopri5, OdeOptions};
use crate::par;
use crate::profiles::{log_derivs, reduced_potential_3d, Metric3D, ProfileFn, RadialProfile, CHECK_GRID};
use crate::quad::{integrate, CumulativeIntegral};
use crate::sl_engine::DEFAULT_TOL;
use crate::spline::quintic_hermite;

/// Bounds the ODE solution must respect to count as a global positive solution.
pub const C_MIN: f64 = 1e-6;
pub const C_CAP: f64 = 1e6;

const ODE_GRID: usize = 1025;
const QUAD_CELLS: usize = 256;
const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    OdeSolved,
    AffineZeroFrequency,
    Family,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Constant,
    None,
}

impl Monotonicity {
    pub fn is_strict(self) -> bool {
        matches!(self, Monotonicity::Increasing | Monotonicity::Decreasing)
    }
}

/// Sign pattern of c' on the check grid.
pub fn monotonicity(c: &RadialProfile) -> Monotonicity {
    let h = 1.0 / (CHECK_GRID - 1) as f64;
    let (mut pos, mut neg, mut zero) = (0usize, 0usize, 0usize);
    for i in 0..CHECK_GRID {
        let d = c.jet(i as f64 * h).d1;
        if d > 0.0 {
            pos += 1;
        } else if d < 0.0 {
            neg += 1;
        } else {
            zero += 1;
        }
    }
    match (pos, neg, zero) {
        (p, 0, 0) if p > 0 => Monotonicity::Increasing,
        (0, n, 0) if n > 0 => Monotonicity::Decreasing,
        (0, 0, _) => Monotonicity::Constant,
        _ => Monotonicity::None,
    }
}

/// A positive radial conformal factor.
#[derive(Debug, Clone)]
pub struct ConformalFactor {
    pub c: RadialProfile,
    pub provenance: Provenance,
    pub c0: f64,
    pub c1: f64,
    pub monotone: Monotonicity,
}

impl ConformalFactor {
    pub fn new(c: RadialProfile, provenance: Provenance) -> Result<Self> {
        c.check_positive()?;
        c.check_finite()?;
        let monotone = if c.as_constant().is_some() { Monotonicity::Constant } else { monotonicity(&c) };
        Ok(ConformalFactor { c0: c.value(0.0), c1: c.value(1.0), c, provenance, monotone })
    }

    pub fn constant(a: f64) -> Result<Self> {
        Self::new(RadialProfile::constant(a), Provenance::Family)
    }
}

/// Direction of the affine integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// c = A + B ∫₀ˣ ds/√h
    FromZero,
    /// c = A + B ∫ₓ¹ ds/√h
    FromOne,
}

/// Dense output of the c-equation: samples of (c, c', c'') joined by quintic Hermite cells.
struct OdeFactor {
    y: Vec<[f64; 3]>,
    h: f64,
    f: RadialProfile,
    hp: RadialProfile,
    lambda2: f64,
}

impl ProfileFn for OdeFactor {
    fn jet(&self, x: f64) -> Jet {
        let cells = self.y.len() - 1;
        let i = ((x / self.h).floor().max(0.0) as usize).min(cells - 1);
        let t = (x - i as f64 * self.h) / self.h;
        let (v, d1, d2) = quintic_hermite(t, self.h, self.y[i], self.y[i + 1]);
        Jet::new(v, d1, d2)
    }

    fn d3(&self, x: f64) -> Option<f64> {
        // differentiate the equation once
        let c = self.jet(x);
        let (l1, l2) = log_derivs(&self.hp, x);
        let f = self.f.jet(x);
        let c5 = c.v.powi(5);
        Some(
            -0.5 * (l2 * c.d1 + l1 * c.d2)
                - self.lambda2 * (f.d1 * (c.v - c5) + f.v * (1.0 - 5.0 * c.v.powi(4)) * c.d1),
        )
    }
}

fn c_second(f: f64, l1: f64, lambda2: f64, c: f64, cp: f64) -> f64 {
    -0.5 * l1 * cp - lambda2 * f * (c - c.powi(5))
}

/// Integrates the c-equation from x = 0 with c(0) = c0, c'(0) = c0p.
pub fn solve_c_ode(f: &RadialProfile, h: &RadialProfile, lambda2: f64, c0: f64, c0p: f64) -> Result<ConformalFactor> {
    solve_c_ode_with(f, h, lambda2, c0, c0p, OdeOptions::with_tol(DEFAULT_TOL))
}

pub fn solve_c_ode_with(
    f: &RadialProfile,
    h: &RadialProfile,
    lambda2: f64,
    c0: f64,
    c0p: f64,
    opts: OdeOptions,
) -> Result<ConformalFactor> {
    if !(c0 > 0.0) {
        return Err(Error::Invalid(format!("initial value c(0) = {c0} must be positive")));
    }
    Metric3D::new(f.clone(), h.clone())?;
    let rhs = |x: f64, y: &[f64; 2]| {
        let (l1, _) = log_derivs(h, x);
        [y[1], c_second(f.value(x), l1, lambda2, y[0], y[1])]
    };
    let dx = 1.0 / (ODE_GRID - 1) as f64;
    let mut stepper = Dopri5::new(opts);
    let mut y = [c0, c0p];
    let mut samples = Vec::with_capacity(ODE_GRID);
    let second = |x: f64, y: &[f64; 2]| rhs(x, y)[1];
    samples.push([y[0], y[1], second(0.0, &y)]);
    for i in 1..ODE_GRID {
        let (xa, xb) = ((i - 1) as f64 * dx, i as f64 * dx);
        y = stepper.advance(&rhs, xa, y, xb).map_err(|e| match e {
            Error::Integration { x, .. } => Error::BlowUp { x, value: y[0] },
            other => other,
        })?;
        if !(y[0] > C_MIN && y[0] < C_CAP) {
            return Err(Error::BlowUp { x: xb, value: y[0] });
        }
        samples.push([y[0], y[1], second(xb, &y)]);
    }
    let c = if samples.iter().all(|s| s[0] == c0 && s[1] == 0.0 && s[2] == 0.0) {
        RadialProfile::constant(c0)
    } else {
        let name = format!("c[ode; lambda2={lambda2}, c0={c0}, c0'={c0p}]");
        RadialProfile::from_impl(OdeFactor { y: samples, h: dx, f: f.clone(), hp: h.clone(), lambda2 }, &name)
    };
    ConformalFactor::new(c, Provenance::OdeSolved)
}

/// ∫₀¹ ds/√h.
pub fn inverse_sqrt_h_integral(h: &RadialProfile) -> f64 {
    match h.as_constant() {
        Some(hc) => 1.0 / hc.sqrt(),
        None => integrate(&|x: f64| 1.0 / h.value(x).sqrt(), 0.0, 1.0, 1e-12),
    }
}

/// The λ² = 0 solution A + B ∫ ds/√h, integrated from the chosen end.
pub fn c_affine_zero_freq(h: &RadialProfile, a: f64, b: f64, direction: Direction) -> Result<ConformalFactor> {
    if !(a > 0.0) {
        return Err(Error::Invalid(format!("A = {a} must be positive")));
    }
    h.check_positive()?;
    if b == 0.0 {
        return ConformalFactor::new(RadialProfile::constant(a), Provenance::AffineZeroFrequency);
    }
    let sign = match direction {
        Direction::FromZero => 1.0,
        Direction::FromOne => -1.0,
    };
    let name = format!("c[affine; A={a}, B={b}, {}]", if sign > 0.0 { "from-0" } else { "from-1" });
    let c = if let Some(hc) = h.as_constant() {
        let s = b / hc.sqrt();
        let (a0, slope) = if sign > 0.0 { (a, s) } else { (a + s, -s) };
        RadialProfile::from_jet_fn_with_d3(&name, move |x| Jet::new(a0 + slope * x, slope, 0.0), |_| 0.0)
    } else {
        let hp = h.clone();
        let integral = CumulativeIntegral::new(move |x: f64| 1.0 / hp.value(x).sqrt(), QUAD_CELLS, QUAD_TOL);
        let total = integral.total();
        let (hj, hd) = (h.clone(), h.clone());
        let base = if sign > 0.0 { a } else { a + b * total };
        RadialProfile::from_jet_fn_with_d3(
            &name,
            move |x| {
                let r = hj.jet(x).powf(-0.5);
                Jet::new(base + sign * b * integral.eval(x), sign * b * r.v, sign * b * r.d1)
            },
            move |x| sign * b * hd.jet(x).powf(-0.5).d2,
        )
    };
    ConformalFactor::new(c, Provenance::AffineZeroFrequency)
}

/// The cross-component λ² = 0 factor A + (A³ − A)/∫₀¹(1/√h) · ∫ₓ¹ ds/√h,
/// which satisfies c(1) = A and c(0) = A³.
pub fn c_cross_component(h: &RadialProfile, a: f64) -> Result<ConformalFactor> {
    let b = (a * a * a - a) / inverse_sqrt_h_integral(h);
    c_affine_zero_freq(h, a, b, Direction::FromOne)
}

/// h = C exp(−2 ∫₀ˣ (c'' + λ² f (c − c⁵)) / c'), the metric coefficient for
/// which the given c solves the c-equation.
pub fn h_from_c(f: &RadialProfile, c: &ConformalFactor, lambda2: f64, scale: f64) -> Result<RadialProfile> {
    if !(scale > 0.0) {
        return Err(Error::Invalid(format!("integration constant C = {scale} must be positive")));
    }
    if !c.monotone.is_strict() {
        return Err(Error::Degenerate(format!("c' must not vanish on [0, 1] (c is {:?})", c.monotone)));
    }
    f.check_positive()?;
    let (cp, fp) = (c.c.clone(), f.clone());
    let g = move |x: f64| {
        let cj = cp.jet(x);
        (cj.d2 + lambda2 * fp.value(x) * (cj.v - cj.v.powi(5))) / cj.d1
    };
    let h_grid = 1.0 / (CHECK_GRID - 1) as f64;
    if (0..CHECK_GRID).all(|i| g(i as f64 * h_grid) == 0.0) {
        return Ok(RadialProfile::constant(scale));
    }
    let gx = g.clone();
    let big_g = CumulativeIntegral::new(gx, QUAD_CELLS, QUAD_TOL);
    let (cj, fj) = (c.c.clone(), f.clone());
    let g_prime = move |x: f64| {
        let c = cj.jet(x);
        let c3 = cj.third_derivative(x);
        let f = fj.jet(x);
        let p = c.v - c.v.powi(5);
        let num = c.d2 + lambda2 * f.v * p;
        let num_d = c3 + lambda2 * (f.d1 * p + f.v * (1.0 - 5.0 * c.v.powi(4)) * c.d1);
        (num_d * c.d1 - num * c.d2) / (c.d1 * c.d1)
    };
    let name = format!("h[from c={}, lambda2={lambda2}, C={scale}]", c.c.name());
    let h = RadialProfile::from_jet_fn(&name, move |x| {
        let gv = big_g.integrand(x);
        let v = scale * (-2.0 * big_g.eval(x)).exp();
        Jet::new(v, -2.0 * gv * v, (4.0 * gv * gv - 2.0 * g_prime(x)) * v)
    });
    h.check_positive()?;
    h.check_finite()?;
    Ok(h)
}

/// g̃ = c⁴ g, i.e. f̃ = c⁴ f and h̃ = c⁴ h.
pub fn conformal_metric(g: &Metric3D, c: &ConformalFactor) -> Result<Metric3D> {
    if c.c.as_constant() == Some(1.0) {
        return Ok(g.clone());
    }
    let f = c.c.combine(&g.f, &format!("c^4*({})", g.f.name()), |c, f| c.powi(4) * f);
    let h = c.c.combine(&g.h, &format!("c^4*({})", g.h.name()), |c, h| c.powi(4) * h);
    Metric3D::new(f, h)
}

/// Residual of the c-equation on the check grid (max absolute value).
pub fn c_equation_residual(f: &RadialProfile, h: &RadialProfile, c: &RadialProfile, lambda2: f64) -> f64 {
    let step = 1.0 / (CHECK_GRID - 1) as f64;
    (0..CHECK_GRID)
        .map(|i| {
            let x = i as f64 * step;
            let cj = c.jet(x);
            let (l1, _) = log_derivs(h, x);
            (cj.d2 + 0.5 * l1 * cj.d1 + lambda2 * f.value(x) * (cj.v - cj.v.powi(5))).abs()
        })
        .fold(0.0, f64::max)
}

/// ∫₀¹ √(f² h) dx, the volume of one period cell up to the factor (2π)².
pub fn volume(g: &Metric3D) -> f64 {
    let (f, h) = (g.f.clone(), g.h.clone());
    if let (Some(fc), Some(hc)) = (f.as_constant(), h.as_constant()) {
        return fc * hc.sqrt();
    }
    integrate(&|x: f64| f.value(x) * h.value(x).sqrt(), 0.0, 1.0, 1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeWitness {
    pub volume: f64,
    pub volume_tilde: f64,
    pub relative_difference: f64,
}

pub fn volume_witness(g: &Metric3D, g_tilde: &Metric3D) -> VolumeWitness {
    let (v, vt) = (volume(g), volume(g_tilde));
    VolumeWitness { volume: v, volume_tilde: vt, relative_difference: (vt - v).abs() / v }
}

/// Largest deviation of a scalar and where it happened.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxDeviation {
    pub value: f64,
    pub m: Option<i64>,
    pub n: Option<i64>,
    pub x: Option<f64>,
}

impl MaxDeviation {
    pub fn zero() -> Self {
        MaxDeviation { value: 0.0, m: None, n: None, x: None }
    }

    pub fn absorb(&mut self, other: MaxDeviation) {
        if other.value > self.value || other.value.is_nan() {
            *self = other;
        }
    }
}

/// max over n ∈ 0..=nmax and the check grid of |q_{λn} − q̃_{λn}|.
pub fn potential_deviation(g: &Metric3D, g_tilde: &Metric3D, lambda2: f64, nmax: i64) -> Result<MaxDeviation> {
    let ns: Vec<i64> = (0..=nmax).collect();
    let per_n = par::try_map(&ns, |&n| {
        let q = reduced_potential_3d(&g.f, &g.h, None, lambda2, n)?;
        let qt = reduced_potential_3d(&g_tilde.f, &g_tilde.h, None, lambda2, n)?;
        let step = 1.0 / (CHECK_GRID - 1) as f64;
        let mut best = MaxDeviation::zero();
        for i in 0..CHECK_GRID {
            let x = i as f64 * step;
            best.absorb(MaxDeviation { value: (q.eval(x) - qt.eval(x)).abs(), m: None, n: Some(n), x: Some(x) });
        }
        Ok(best)
    })?;
    let mut best = MaxDeviation::zero();
    for d in per_n {
        best.absorb(d);
    }
    Ok(best)
}

/// Blocks of both metrics (V ≡ 0) for |m|, |n| ≤ cutoff.
pub fn paired_blocks(
    asm: &Assembler,
    g: &Metric3D,
    g_tilde: &Metric3D,
    lambda2: f64,
    cutoff: usize,
) -> Result<(Vec<DnBlock>, Vec<DnBlock>)> {
    let a = asm.blocks(&Setup::ThreeD { g: g.clone(), v: None }, lambda2, cutoff, cutoff)?;
    let b = asm.blocks(&Setup::ThreeD { g: g_tilde.clone(), v: None }, lambda2, cutoff, cutoff)?;
    Ok((a, b))
}

pub fn block_deviation<F: Fn(&DnBlock) -> f64>(a: &[DnBlock], b: &[DnBlock], entry: F) -> MaxDeviation {
    let mut best = MaxDeviation::zero();
    for (x, y) in a.iter().zip(b) {
        best.absorb(MaxDeviation { value: (entry(x) - entry(y)).abs(), m: Some(x.m), n: x.n, x: None });
    }
    best
}

/// How the conformal factor of a family is chosen.
#[derive(Debug, Clone)]
pub enum FactorChoice {
    /// Same component: the B of A + B∫₀ˣ with A = 1. Cross component: the A.
    Parameter(f64),
    /// An explicit strictly monotone factor; h is rebuilt from it.
    Factor(RadialProfile),
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub lambda2: f64,
    pub c0: f64,
    pub c1: f64,
    pub monotone: Monotonicity,
    pub potential_deviation: MaxDeviation,
    /// Which block entry is compared: "T_L" across components, "M" (L without the (log h)' term) on Γ₀.
    pub block_entry: String,
    pub block_deviation: MaxDeviation,
    pub boundary_constraint_defect: Option<f64>,
    pub volume: VolumeWitness,
    pub h_rebuilt: bool,
}

/// A metric, its conformal deformation and the factor relating them.
#[derive(Debug, Clone)]
pub struct Family {
    pub g: Metric3D,
    pub g_tilde: Metric3D,
    pub factor: ConformalFactor,
    pub report: FamilyReport,
}

impl Family {
    /// Rows `x, f, h, c, f_tilde, h_tilde` on n uniform points.
    pub fn table(&self, n: usize) -> Vec<[f64; 6]> {
        let step = 1.0 / (n.max(2) - 1) as f64;
        (0..n.max(2))
            .map(|i| {
                let x = i as f64 * step;
                [
                    x,
                    self.g.f.value(x),
                    self.g.h.value(x),
                    self.factor.c.value(x),
                    self.g_tilde.f.value(x),
                    self.g_tilde.h.value(x),
                ]
            })
            .collect()
    }
}

/// Builder for the conformal families.
#[derive(Debug, Clone, Copy)]
pub struct FamilyBuilder {
    pub assembler: Assembler,
    /// Integration constant C used when h is rebuilt from c.
    pub h_scale: f64,
    /// Mode cutoff for the block comparison.
    pub cutoff: usize,
    /// Largest n of the potential comparison.
    pub nmax_potential: i64,
}

impl Default for FamilyBuilder {
    fn default() -> Self {
        FamilyBuilder { assembler: Assembler::default(), h_scale: 1.0, cutoff: 8, nmax_potential: 3 }
    }
}

impl FamilyBuilder {
    fn factor_and_base(
        &self,
        g: &Metric3D,
        lambda2: f64,
        choice: &FactorChoice,
        zero_freq: impl Fn(&RadialProfile, f64) -> Result<ConformalFactor>,
    ) -> Result<(ConformalFactor, Metric3D, bool)> {
        match choice {
            FactorChoice::Parameter(p) if lambda2 == 0.0 => Ok((zero_freq(&g.h, *p)?, g.clone(), false)),
            FactorChoice::Parameter(_) => {
                Err(Error::Invalid("for lambda2 != 0 the family needs an explicit strictly monotone factor c".into()))
            }
            FactorChoice::Factor(c) => {
                let factor = ConformalFactor::new(c.clone(), Provenance::Family)?;
                if factor.c.as_constant().is_some() {
                    return Ok((factor, g.clone(), false));
                }
                let h = h_from_c(&g.f, &factor, lambda2, self.h_scale)?;
                Ok((factor, Metric3D::new(g.f.clone(), h)?, true))
            }
        }
    }

    fn finish(
        &self,
        g: Metric3D,
        factor: ConformalFactor,
        lambda2: f64,
        cross: bool,
        h_rebuilt: bool,
    ) -> Result<Family> {
        let g_tilde = conformal_metric(&g, &factor)?;
        let potential_deviation = potential_deviation(&g, &g_tilde, lambda2, self.nmax_potential)?;
        let (a, b) = paired_blocks(&self.assembler, &g, &g_tilde, lambda2, self.cutoff)?;
        let (entry, dev) = if cross {
            ("T_L", block_deviation(&a, &b, |blk| blk.t_l))
        } else {
            let (sf0, sft0) = (g.f.value(0.0).sqrt(), g_tilde.f.value(0.0).sqrt());
            let mut best = MaxDeviation::zero();
            for (x, y) in a.iter().zip(&b) {
                let d = (x.m_wt / sf0 - y.m_wt / sft0).abs();
                best.absorb(MaxDeviation { value: d, m: Some(x.m), n: x.n, x: None });
            }
            ("M", best)
        };
        let boundary_constraint_defect = cross.then(|| (factor.c1.powi(3) - factor.c0).abs());
        let report = FamilyReport {
            lambda2,
            c0: factor.c0,
            c1: factor.c1,
            monotone: factor.monotone,
            potential_deviation,
            block_entry: entry.into(),
            block_deviation: dev,
            boundary_constraint_defect,
            volume: volume_witness(&g, &g_tilde),
            h_rebuilt,
        };
        Ok(Family { g, g_tilde, factor, report })
    }

    /// Factor with c(0) = 1, so the data on Γ₀ are unchanged up to the (log h)'(0) term.
    pub fn same_component(&self, g: &Metric3D, lambda2: f64, choice: &FactorChoice) -> Result<Family> {
        let (factor, base, rebuilt) =
            self.factor_and_base(g, lambda2, choice, |h, b| c_affine_zero_freq(h, 1.0, b, Direction::FromZero))?;
        if (factor.c0 - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!("same-component factor needs c(0) = 1, got {}", factor.c0)));
        }
        self.finish(base, factor, lambda2, false, rebuilt)
    }

    /// Factor with c(1)³ = c(0), so the Γ₀ → Γ₁ entry T_L is unchanged.
    pub fn cross_component(&self, g: &Metric3D, lambda2: f64, choice: &FactorChoice) -> Result<Family> {
        let (factor, base, rebuilt) = self.factor_and_base(g, lambda2, choice, c_cross_component)?;
        let defect = (factor.c1.powi(3) - factor.c0).abs();
        if defect > 1e-10 * factor.c0.max(1.0) {
            return Err(Error::Invalid(format!(
                "cross-component factor needs c(1)^3 = c(0): c(0) = {}, c(1) = {}",
                factor.c0, factor.c1
            )));
        }
        self.finish(base, factor, lambda2, true, rebuilt)
    }
}

pub fn family_same_component(g: &Metric3D, lambda2: f64, choice: &FactorChoice) -> Result<Family> {
    FamilyBuilder::default().same_component(g, lambda2, choice)
}

pub fn family_cross_component(g: &Metric3D, lambda2: f64, choice: &FactorChoice) -> Result<Family> {
    FamilyBuilder::default().cross_component(g, lambda2, choice)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> RadialProfile {
        RadialProfile::from_expr(s).unwrap()
    }

    fn flat() -> Metric3D {
        Metric3D::new(p("1"), p("1")).unwrap()
    }

    #[test]
    fn equilibrium_stays_constant() {
        let c = solve_c_ode(&p("1+x"), &p("2+x^2"), 3.0, 1.0, 0.0).unwrap();
        assert_eq!(c.c.as_constant(), Some(1.0));
    }

    #[test]
    fn ode_zero_frequency_is_affine() {
        let c = solve_c_ode(&p("1"), &p("1"), 0.0, 1.0, 1.0).unwrap();
        for &x in &[0.0, 0.3, 0.77, 1.0] {
            assert!((c.c.value(x) - (1.0 + x)).abs() < 1e-10);
        }
        let c = solve_c_ode(&p("1"), &p("(1+x)^2"), 0.0, 1.0, 1.0).unwrap();
        for &x in &[0.1, 0.5, 1.0] {
            assert!((c.c.value(x) - (1.0 + (1.0 + x).ln())).abs() < 1e-9);
        }
    }

    #[test]
    fn ode_reports_blow_up() {
        // c'' = λ²(c⁵ − c) with c0 > 1 runs away before x = 1
        let e = solve_c_ode(&p("1"), &p("1"), 50.0, 2.0, 5.0).unwrap_err();
        assert!(matches!(e, Error::BlowUp { x, .. } if x > 0.0 && x <= 1.0));
    }

    #[test]
    fn affine_examples() {
        let c = c_affine_zero_freq(&p("1"), 1.0, 1.0, Direction::FromZero).unwrap();
        assert!((c.c1 - 2.0).abs() < 1e-15);
        assert_eq!(c.monotone, Monotonicity::Increasing);
        let c = c_cross_component(&p("1"), 2.0).unwrap();
        assert!((c.c0 - 8.0).abs() < 1e-14 && (c.c1 - 2.0).abs() < 1e-14);
        assert!((c.c.value(0.5) - 5.0).abs() < 1e-14);
        let c = c_affine_zero_freq(&p("1+x"), 3.0, 0.0, Direction::FromOne).unwrap();
        assert_eq!(c.c.as_constant(), Some(3.0));
        assert!(c_affine_zero_freq(&p("1"), 1.0, -2.0, Direction::FromZero).is_err());
    }

    #[test]
    fn affine_with_variable_h_matches_ode() {
        let h = p("1+0.5*sin(3*x)");
        let a = c_affine_zero_freq(&h, 1.0, 0.7, Direction::FromZero).unwrap();
        let s = solve_c_ode(&p("2"), &h, 0.0, 1.0, 0.7 / h.value(0.0).sqrt()).unwrap();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert!((a.c.value(x) - s.c.value(x)).abs() < 1e-9, "x = {x}");
        }
        assert!(c_equation_residual(&p("2"), &h, &a.c, 0.0) < 1e-10);
        // the analytic third derivative agrees with differences of c''
        let x = 0.4;
        let fd = (a.c.jet(x + 1e-4).d2 - a.c.jet(x - 1e-4).d2) / 2e-4;
        assert!((a.c.third_derivative(x) - fd).abs() < 1e-6, "{} vs {fd}", a.c.third_derivative(x));
    }

    #[test]
    fn h_from_c_examples() {
        let c = ConformalFactor::new(p("1+x"), Provenance::Family).unwrap();
        let h = h_from_c(&p("1"), &c, 0.0, 1.0).unwrap();
        assert_eq!(h.as_constant(), Some(1.0));

        let c = ConformalFactor::new(p("1+x^2+x"), Provenance::Family).unwrap();
        let h = h_from_c(&p("1"), &c, 0.0, 1.0).unwrap();
        for &x in &[0.0, 0.4, 1.0] {
            let cp = 2.0 * x + 1.0;
            assert!((h.value(x) - 1.0 / (cp * cp)).abs() < 1e-11);
        }

        let one = ConformalFactor::constant(1.0).unwrap();
        assert!(matches!(h_from_c(&p("1"), &one, 1.0, 1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn h_from_c_quadrature_oracle() {
        // g = (1+s) − (1+s)⁵, ∫₀ˣ g = (1+x)²/2 − (1+x)⁶/6 + 1/6 − 1/2
        let c = ConformalFactor::new(p("1+x"), Provenance::Family).unwrap();
        let h = h_from_c(&p("1"), &c, 1.0, 1.0).unwrap();
        for &x in &[0.25f64, 0.5, 1.0] {
            let big_g = (1.0 + x) * (1.0 + x) / 2.0 - (1.0 + x).powi(6) / 6.0 + 1.0 / 6.0 - 0.5;
            let exact = (-2.0 * big_g).exp();
            assert!((h.value(x) / exact - 1.0).abs() < 1e-11);
        }
        assert!(c_equation_residual(&p("1"), &h, &c.c, 1.0) < 1e-8);
    }

    #[test]
    fn conformal_metric_scales_by_c4() {
        let c = ConformalFactor::new(p("1+x"), Provenance::Family).unwrap();
        let gt = conformal_metric(&flat(), &c).unwrap();
        assert!((gt.f.value(1.0) - 16.0).abs() < 1e-13 && (gt.h.value(1.0) - 16.0).abs() < 1e-13);
        let w = volume_witness(&flat(), &gt);
        assert!((w.volume_tilde - 127.0 / 7.0).abs() < 1e-10);
        let same = conformal_metric(&flat(), &ConformalFactor::constant(1.0).unwrap()).unwrap();
        assert_eq!(same.f.as_constant(), Some(1.0));
    }

    #[test]
    fn same_component_zero_frequency() {
        let fam = family_same_component(&flat(), 0.0, &FactorChoice::Parameter(1.0)).unwrap();
        assert!(fam.report.potential_deviation.value < 1e-10);
        assert!(fam.report.block_deviation.value < 1e-8);
        assert!((fam.g_tilde.f.value(0.5) - 1.5f64.powi(4)).abs() < 1e-13);
        let id = family_same_component(&flat(), 0.0, &FactorChoice::Parameter(0.0)).unwrap();
        assert_eq!(id.report.volume.relative_difference, 0.0);
    }

    #[test]
    fn same_component_nonzero_frequency() {
        let fam = family_same_component(&flat(), 1.0, &FactorChoice::Factor(p("1+x"))).unwrap();
        assert!(fam.report.h_rebuilt);
        assert!(fam.report.potential_deviation.value < 1e-9, "{:?}", fam.report.potential_deviation);
    }

    #[test]
    fn cross_component_zero_frequency() {
        let fam = family_cross_component(&flat(), 0.0, &FactorChoice::Parameter(2.0)).unwrap();
        assert!(fam.report.boundary_constraint_defect.unwrap() < 1e-12);
        assert!(fam.report.block_deviation.value < 1e-8, "{:?}", fam.report.block_deviation);
        let id = family_cross_component(&flat(), 0.0, &FactorChoice::Parameter(1.0)).unwrap();
        assert_eq!(id.factor.c.as_constant(), Some(1.0));
        assert!(family_cross_component(&flat(), 1.0, &FactorChoice::Factor(p("2-x"))).is_err());
    }
}
