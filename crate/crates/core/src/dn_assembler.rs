//! Per-mode DN blocks and the partial DN map on boundary data over T¹ / T².
//!
//! Boundary components are Γ₀ = {x = 0} and Γ₁ = {x = 1}. For a mode the
//! block maps Dirichlet data (ψ⁰, ψ¹) to Neumann data by
//!
//! ```text
//! (∂ν u)|Γ₀ = L ψ⁰ + T_R ψ¹
//! (∂ν u)|Γ₁ = T_L ψ⁰ + R ψ¹
//! ```
//!
//! The Fourier convention is ψ̂(m) = (1/2π)∫ψ(y)e^{−imy}dy, and the normal
//! derivative at x = 0 is −(1/√f(0))∂ₓu.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::parse_expression;
use crate::par;
use crate::profiles::{reduced_potential_2d, reduced_potential_3d, Metric2D, Metric3D, Potential, RadialProfile};
use crate::sl_engine::{pole_guard, Solver};

/// The 2×2 block of one Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DnBlock {
    pub m: i64,
    pub n: Option<i64>,
    pub l: f64,
    pub t_r: f64,
    pub t_l: f64,
    pub r: f64,
    /// Δ at the mode's spectral parameter.
    pub delta: f64,
    /// Weyl–Titchmarsh values M and N at the mode.
    pub m_wt: f64,
    pub n_wt: f64,
}

/// A metric together with an optional potential V.
#[derive(Debug, Clone)]
pub enum Setup {
    TwoD { g: Metric2D, v: Option<RadialProfile> },
    ThreeD { g: Metric3D, v: Option<RadialProfile> },
}

impl Setup {
    pub fn two_d(f: RadialProfile, v: Option<RadialProfile>) -> Result<Self> {
        Ok(Setup::TwoD { g: Metric2D::new(f)?, v })
    }

    /// 2D setup that only requires f > 0 at the boundary (see [`Metric2D::formal`]).
    pub fn two_d_formal(f: RadialProfile, v: Option<RadialProfile>) -> Result<Self> {
        Ok(Setup::TwoD { g: Metric2D::formal(f)?, v })
    }

    pub fn three_d(f: RadialProfile, h: RadialProfile, v: Option<RadialProfile>) -> Result<Self> {
        Ok(Setup::ThreeD { g: Metric3D::new(f, h)?, v })
    }

    pub fn dim(&self) -> usize {
        match self {
            Setup::TwoD { .. } => 2,
            Setup::ThreeD { .. } => 3,
        }
    }

    pub fn f(&self) -> &RadialProfile {
        match self {
            Setup::TwoD { g, .. } => &g.f,
            Setup::ThreeD { g, .. } => &g.f,
        }
    }

    pub fn v(&self) -> Option<&RadialProfile> {
        match self {
            Setup::TwoD { v, .. } | Setup::ThreeD { v, .. } => v.as_ref(),
        }
    }

    /// Reduced potential for the z-mode index n (ignored in 2D).
    pub fn potential(&self, lambda2: f64, n: i64) -> Result<Potential> {
        match self {
            Setup::TwoD { g, v } => reduced_potential_2d(&g.f, v.as_ref(), lambda2),
            Setup::ThreeD { g, v } => reduced_potential_3d(&g.f, &g.h, v.as_ref(), lambda2, n),
        }
    }
}

/// Outcome of the frequency guard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GuardOutcome {
    Pass,
    Reject { m: i64, n: i64, delta_abs: f64 },
}

/// Block assembly with a chosen Sturm–Liouville solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct Assembler {
    pub solver: Solver,
}

impl Assembler {
    pub fn new(solver: Solver) -> Self {
        Assembler { solver }
    }

    fn block_from(&self, setup: &Setup, q: &Potential, m: i64, n: Option<i64>) -> Result<DnBlock> {
        let z = (m * m) as f64;
        let sf = self.solver.spectral_functions_real(q, z)?;
        if sf.pole {
            return Err(Error::Frequency { m, n: n.unwrap_or(0), delta_abs: sf.delta.norm() });
        }
        let (delta, mw, nw) = sf.real_mn()?;
        let f = setup.f();
        let (sf0, sf1) = (f.value(0.0).sqrt(), f.value(1.0).sqrt());
        let blk = match setup {
            Setup::TwoD { .. } => DnBlock {
                m,
                n,
                l: -mw / sf0,
                t_r: -1.0 / (sf0 * delta),
                t_l: -1.0 / (sf1 * delta),
                r: -nw / sf1,
                delta,
                m_wt: mw,
                n_wt: nw,
            },
            Setup::ThreeD { g, .. } => {
                let (h0, h1) = (g.h.value(0.0), g.h.value(1.0));
                let (lh0, _) = g.log_h_derivs(0.0);
                let (lh1, _) = g.log_h_derivs(1.0);
                let ratio = (h1 / h0).powf(0.25);
                DnBlock {
                    m,
                    n,
                    l: lh0 / (4.0 * sf0) - mw / sf0,
                    t_r: -ratio / (sf0 * delta),
                    t_l: -1.0 / (ratio * sf1 * delta),
                    r: -lh1 / (4.0 * sf1) - nw / sf1,
                    delta,
                    m_wt: mw,
                    n_wt: nw,
                }
            }
        };
        Ok(blk)
    }

    pub fn dn_block_2d(&self, g: &Metric2D, v: Option<&RadialProfile>, lambda2: f64, m: i64) -> Result<DnBlock> {
        let setup = Setup::TwoD { g: g.clone(), v: v.cloned() };
        let q = setup.potential(lambda2, 0)?;
        self.block_from(&setup, &q, m, None)
    }

    pub fn dn_block_3d(
        &self,
        g: &Metric3D,
        v: Option<&RadialProfile>,
        lambda2: f64,
        m: i64,
        n: i64,
    ) -> Result<DnBlock> {
        let setup = Setup::ThreeD { g: g.clone(), v: v.cloned() };
        let q = setup.potential(lambda2, n)?;
        self.block_from(&setup, &q, m, Some(n))
    }

    /// All blocks with |m| ≤ mmax (and |n| ≤ nmax in 3D), ordered by m then n.
    pub fn blocks(&self, setup: &Setup, lambda2: f64, mmax: usize, nmax: usize) -> Result<Vec<DnBlock>> {
        let (mm, nm) = (mmax as i64, nmax as i64);
        let ns: Vec<i64> = match setup {
            Setup::TwoD { .. } => vec![0],
            Setup::ThreeD { .. } => (0..=nm).collect(),
        };
        let potentials = par::try_map(&ns, |&n| setup.potential(lambda2, n))?;
        let pairs: Vec<(usize, i64)> = (0..ns.len()).flat_map(|i| (0..=mm).map(move |m| (i, m))).collect();
        let base = par::try_map(&pairs, |&(i, m)| {
            let n = match setup {
                Setup::TwoD { .. } => None,
                Setup::ThreeD { .. } => Some(ns[i]),
            };
            self.block_from(setup, &potentials[i], m, n)
        })?;
        let lookup = |m: i64, n: i64| base[n.unsigned_abs() as usize * (mmax + 1) + m.unsigned_abs() as usize];
        let mut out = Vec::new();
        for m in -mm..=mm {
            match setup {
                Setup::TwoD { .. } => out.push(DnBlock { m, ..lookup(m, 0) }),
                Setup::ThreeD { .. } => {
                    for n in -nm..=nm {
                        out.push(DnBlock { m, n: Some(n), ..lookup(m, n) });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Checks that every mode within the cutoffs stays away from the Dirichlet spectrum.
    pub fn frequency_guard(&self, setup: &Setup, lambda2: f64, mmax: usize, nmax: usize) -> Result<GuardOutcome> {
        let ns: Vec<i64> = match setup {
            Setup::TwoD { .. } => vec![0],
            Setup::ThreeD { .. } => (0..=nmax as i64).collect(),
        };
        let potentials = par::try_map(&ns, |&n| setup.potential(lambda2, n))?;
        let pairs: Vec<(usize, i64)> = (0..ns.len()).flat_map(|i| (0..=mmax as i64).map(move |m| (i, m))).collect();
        let deltas = par::try_map(&pairs, |&(i, m)| {
            let z = (m * m) as f64;
            let sf = self.solver.spectral_functions_real(&potentials[i], z)?;
            Ok((m, ns[i], sf.delta.norm(), pole_guard(sf.z)))
        })?;
        for (m, n, d, eps) in deltas {
            if d <= eps {
                return Ok(GuardOutcome::Reject { m, n, delta_abs: d });
            }
        }
        Ok(GuardOutcome::Pass)
    }
}

pub fn dn_block_2d(g: &Metric2D, v: Option<&RadialProfile>, lambda2: f64, m: i64) -> Result<DnBlock> {
    Assembler::default().dn_block_2d(g, v, lambda2, m)
}

pub fn dn_block_3d(g: &Metric3D, v: Option<&RadialProfile>, lambda2: f64, m: i64, n: i64) -> Result<DnBlock> {
    Assembler::default().dn_block_3d(g, v, lambda2, m, n)
}

pub fn frequency_guard(setup: &Setup, lambda2: f64, mmax: usize, nmax: usize) -> Result<GuardOutcome> {
    Assembler::default().frequency_guard(setup, lambda2, mmax, nmax)
}

/// Boundary component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Zero,
    One,
}

impl FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" => Ok(Side::Zero),
            "1" => Ok(Side::One),
            other => Err(Error::Invalid(format!("boundary side must be 0 or 1, got `{other}`"))),
        }
    }
}

/// Open arc of T¹ = [−π, π) running counter-clockwise from `start` over `len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcSet {
    start: f64,
    len: f64,
}

fn wrap(y: f64) -> f64 {
    (y + PI).rem_euclid(2.0 * PI) - PI
}

impl ArcSet {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Invalid("arc endpoints must be finite".into()));
        }
        if b - a >= 2.0 * PI {
            return Ok(ArcSet { start: -PI, len: 2.0 * PI });
        }
        let start = wrap(a);
        let mut len = wrap(b) - start;
        if len <= 0.0 {
            len += 2.0 * PI;
        }
        if a == b {
            return Err(Error::Invalid("arc is empty".into()));
        }
        Ok(ArcSet { start, len })
    }

    pub fn full() -> Self {
        ArcSet { start: -PI, len: 2.0 * PI }
    }

    pub fn contains(&self, y: f64) -> bool {
        if self.len >= 2.0 * PI {
            return true;
        }
        let d = (y - self.start).rem_euclid(2.0 * PI);
        d > 0.0 && d < self.len
    }
}

/// Finite union of arcs (2D) or of products of arcs (3D).
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryMask {
    Arcs(Vec<ArcSet>),
    Rects(Vec<(ArcSet, ArcSet)>),
}

fn parse_angle(s: &str) -> Result<f64> {
    let e = parse_expression(s)?;
    if !e.is_constant() {
        return Err(Error::Invalid(format!("arc endpoint `{s}` must be a constant")));
    }
    Ok(e.eval(0.0))
}

fn parse_arc(s: &str) -> Result<ArcSet> {
    let s = s.trim();
    if s == "all" || s == "full" {
        return Ok(ArcSet::full());
    }
    let (a, b) = s.split_once(':').ok_or_else(|| Error::Invalid(format!("arc `{s}` must have the form a:b")))?;
    ArcSet::new(parse_angle(a)?, parse_angle(b)?)
}

impl BoundaryMask {
    /// Parses `a:b,c:d` (arcs) or `a:b|c:d,...` (rectangles in (y, z)).
    /// Endpoints are constant expressions such as `-pi/2`; `all` is the whole circle.
    pub fn parse(src: &str) -> Result<Self> {
        let items: Vec<&str> = src.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if items.is_empty() {
            return Err(Error::Invalid("boundary mask is empty".into()));
        }
        if items.iter().any(|s| s.contains('|')) {
            let rects = items
                .iter()
                .map(|s| {
                    let (y, z) =
                        s.split_once('|').ok_or_else(|| Error::Invalid(format!("rectangle `{s}` must be a:b|c:d")))?;
                    Ok((parse_arc(y)?, parse_arc(z)?))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(BoundaryMask::Rects(rects))
        } else {
            Ok(BoundaryMask::Arcs(items.iter().map(|s| parse_arc(s)).collect::<Result<Vec<_>>>()?))
        }
    }

    pub fn full(dim: usize) -> Self {
        if dim == 2 {
            BoundaryMask::Arcs(vec![ArcSet::full()])
        } else {
            BoundaryMask::Rects(vec![(ArcSet::full(), ArcSet::full())])
        }
    }

    pub fn contains(&self, y: f64, z: f64) -> bool {
        match self {
            BoundaryMask::Arcs(a) => a.iter().any(|s| s.contains(y)),
            BoundaryMask::Rects(r) => r.iter().any(|(a, b)| a.contains(y) && b.contains(z)),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if *self == Side::Zero { 0 } else { 1 })
    }
}

/// Sampled Neumann trace on one boundary component.
#[derive(Debug, Clone)]
pub struct Trace {
    pub grid: usize,
    pub dim: usize,
    /// All samples on the observation component, row-major in (y, z) for 3D.
    pub full: Vec<Complex64>,
    /// Samples restricted to Γ_N as (y, z, value); z = 0 in 2D.
    pub restricted: Vec<(f64, f64, Complex64)>,
}

/// Grid coordinate y_j = −π + 2πj/G.
pub fn grid_point(j: usize, g: usize) -> f64 {
    -PI + 2.0 * PI * j as f64 / g as f64
}

fn mode_index(m: i64, g: usize) -> usize {
    m.rem_euclid(g as i64) as usize
}

fn sign(m: i64) -> f64 {
    if m.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Applies the partial DN map to samples `psi` of Dirichlet data on component `d_side`,
/// supported in `gamma_d`, and returns the Neumann trace on component `n_side`
/// restricted to `gamma_n`. In 3D `psi` is row-major with y the slow index.
#[allow(clippy::too_many_arguments)]
pub fn apply_partial_dn(
    asm: &Assembler,
    setup: &Setup,
    lambda2: f64,
    psi: &[Complex64],
    d_side: Side,
    gamma_d: &BoundaryMask,
    n_side: Side,
    gamma_n: &BoundaryMask,
    mmax: usize,
    nmax: usize,
) -> Result<Trace> {
    let dim = setup.dim();
    let total_len = psi.len();
    let g = if dim == 2 { total_len } else { (total_len as f64).sqrt().round() as usize };
    if g < 4 || !g.is_power_of_two() || (dim == 3 && g * g != total_len) {
        return Err(Error::Invalid(format!(
            "boundary grid must be a power of two per circle, got {total_len} samples"
        )));
    }
    if 2 * mmax >= g || (dim == 3 && 2 * nmax >= g) {
        return Err(Error::Invalid(format!("mode cutoff too large for boundary grid of size {g}")));
    }
    let coord = |idx: usize| -> (f64, f64) {
        if dim == 2 {
            (grid_point(idx, g), 0.0)
        } else {
            (grid_point(idx / g, g), grid_point(idx % g, g))
        }
    };

    // support check
    let (mut inside, mut outside) = (0.0, 0.0);
    for (idx, v) in psi.iter().enumerate() {
        let (y, z) = coord(idx);
        if gamma_d.contains(y, z) {
            inside += v.norm_sqr();
        } else {
            outside += v.norm_sqr();
        }
    }
    let total = inside + outside;
    if total > 0.0 && outside / total > 1e-10 {
        return Err(Error::Support { ratio: outside / total });
    }
    match asm.frequency_guard(setup, lambda2, mmax, nmax)? {
        GuardOutcome::Pass => {}
        GuardOutcome::Reject { m, n, delta_abs } => return Err(Error::Frequency { m, n, delta_abs }),
    }
    let real_input = psi.iter().all(|v| v.im == 0.0);

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(g);
    let inv = planner.plan_fft_inverse(g);
    let mut spec = psi.to_vec();
    fft_nd(&mut spec, g, dim, &*fwd);
    let norm = 1.0 / total_len as f64;

    let blocks = asm.blocks(setup, lambda2, mmax, if dim == 2 { 0 } else { nmax })?;
    let mut out = vec![Complex64::new(0.0, 0.0); total_len];
    for b in &blocks {
        let coeff = match (d_side, n_side) {
            (Side::Zero, Side::Zero) => b.l,
            (Side::Zero, Side::One) => b.t_l,
            (Side::One, Side::Zero) => b.t_r,
            (Side::One, Side::One) => b.r,
        };
        let (idx, s) = if dim == 2 {
            (mode_index(b.m, g), sign(b.m))
        } else {
            let n = b.n.unwrap_or(0);
            (mode_index(b.m, g) * g + mode_index(n, g), sign(b.m) * sign(n))
        };
        // shift to the [−π, π) grid: ψ̂ = (−1)^m X_m / G, and back again on synthesis
        let hat = spec[idx] * (s * norm);
        out[idx] = hat * coeff * s;
    }
    if real_input {
        // enforce Hermitian symmetry of the output coefficients
        let mut sym = out.clone();
        for idx in 0..total_len {
            let mirror = if dim == 2 {
                (g - idx) % g
            } else {
                let (i, j) = (idx / g, idx % g);
                ((g - i) % g) * g + (g - j) % g
            };
            sym[idx] = 0.5 * (out[idx] + out[mirror].conj());
        }
        out = sym;
    }
    fft_nd(&mut out, g, dim, &*inv);
    if real_input {
        for v in out.iter_mut() {
            v.im = 0.0;
        }
    }
    let restricted = out
        .iter()
        .enumerate()
        .filter_map(|(idx, v)| {
            let (y, z) = coord(idx);
            gamma_n.contains(y, z).then_some((y, z, *v))
        })
        .collect();
    Ok(Trace { grid: g, dim, full: out, restricted })
}

fn fft_nd(data: &mut [Complex64], g: usize, dim: usize, plan: &dyn rustfft::Fft<f64>) {
    if dim == 2 {
        plan.process(data);
        return;
    }
    for row in data.chunks_mut(g) {
        plan.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); g];
    for j in 0..g {
        for i in 0..g {
            col[i] = data[i * g + j];
        }
        plan.process(&mut col);
        for i in 0..g {
            data[i * g + j] = col[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat2() -> Setup {
        Setup::two_d(RadialProfile::constant(1.0), None).unwrap()
    }

    #[test]
    fn flat_2d_blocks() {
        let g = Metric2D::new(RadialProfile::constant(1.0)).unwrap();
        let b = dn_block_2d(&g, None, 0.0, 1).unwrap();
        assert!((b.l - 1.0 / 1f64.tanh()).abs() < 1e-10);
        assert!((b.t_r + 1.0 / 1f64.sinh()).abs() < 1e-10);
        assert!((b.l - b.r).abs() < 1e-10 && (b.t_l - b.t_r).abs() < 1e-12);
        let b = dn_block_2d(&g, None, 0.0, 0).unwrap();
        assert!((b.l - 1.0).abs() < 1e-12 && (b.t_r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_3d_blocks() {
        let one = RadialProfile::constant(1.0);
        let g = Metric3D::new(one.clone(), one).unwrap();
        let b = dn_block_3d(&g, None, 0.0, 1, 0).unwrap();
        assert!((b.l - 1.0 / 1f64.tanh()).abs() < 1e-10);
        assert!((b.t_r + 1.0 / 1f64.sinh()).abs() < 1e-10);
        let b = dn_block_3d(&g, None, 0.0, 0, 1).unwrap();
        assert!((b.t_r + 1.0 / 1f64.sinh()).abs() < 1e-10);
        let b = dn_block_3d(&g, None, 0.0, 0, 0).unwrap();
        assert!((b.l - 1.0).abs() < 1e-12 && (b.r - 1.0).abs() < 1e-12 && (b.t_r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn guard_examples() {
        let s = flat2();
        let a = Assembler::default();
        match a.frequency_guard(&s, PI * PI, 4, 0).unwrap() {
            GuardOutcome::Reject { m, .. } => assert_eq!(m, 0),
            GuardOutcome::Pass => panic!("expected rejection"),
        }
        assert_eq!(a.frequency_guard(&s, 1.0, 10, 0).unwrap(), GuardOutcome::Pass);
        assert_eq!(a.frequency_guard(&s, -1.0, 10, 0).unwrap(), GuardOutcome::Pass);
    }

    #[test]
    fn arcs_wrap() {
        let a = ArcSet::new(3.0, -3.0).unwrap();
        assert!(a.contains(3.1) && a.contains(-3.1) && !a.contains(0.0));
        let m = BoundaryMask::parse("-pi/2:0, 1:2").unwrap();
        assert!(m.contains(-0.5, 0.0) && m.contains(1.5, 0.0) && !m.contains(0.5, 0.0));
        let r = BoundaryMask::parse("0:1|all").unwrap();
        assert!(r.contains(0.5, 3.0) && !r.contains(-0.5, 0.0));
        assert!(BoundaryMask::parse("1").is_err());
    }

    #[test]
    fn single_mode_trace() {
        let s = flat2();
        let g = 64;
        let psi: Vec<Complex64> = (0..g).map(|j| Complex64::from_polar(1.0, grid_point(j, g))).collect();
        let full = BoundaryMask::full(2);
        let t =
            apply_partial_dn(&Assembler::default(), &s, 0.0, &psi, Side::Zero, &full, Side::One, &full, 8, 0).unwrap();
        let c = -1.0 / 1f64.sinh();
        for (j, v) in t.full.iter().enumerate() {
            assert!((v - psi[j] * c).norm() < 1e-10);
        }
        let ones = vec![Complex64::new(1.0, 0.0); g];
        let t = apply_partial_dn(&Assembler::default(), &s, 0.0, &ones, Side::Zero, &full, Side::Zero, &full, 8, 0)
            .unwrap();
        assert!(t.full.iter().all(|v| (v.re - 1.0).abs() < 1e-12 && v.im == 0.0));
    }

    #[test]
    fn support_violation() {
        let s = flat2();
        let g = 32;
        let psi = vec![Complex64::new(1.0, 0.0); g];
        let gd = BoundaryMask::parse("0:1").unwrap();
        let r = apply_partial_dn(&Assembler::default(), &s, 0.0, &psi, Side::Zero, &gd, Side::One, &gd, 4, 0);
        assert!(matches!(r, Err(Error::Support { .. })));
    }
}
