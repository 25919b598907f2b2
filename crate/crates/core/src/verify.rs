//! Numerical checks and scenario runners producing pass/fail reports.
//!
//! Equalities that hold exactly in theory are checked against `tol_eq`
//! (default 1e−8); pairs that must be distinguishable are checked against
//! `tol_neq` (default 1e−3).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conformal3d::{
    block_deviation, conformal_metric, paired_blocks, potential_deviation, volume_witness, ConformalFactor,
    FactorChoice, FamilyBuilder, MaxDeviation, Provenance, VolumeWitness,
};
use crate::deformations::Deformer;
use crate::dn_assembler::{apply_partial_dn, grid_point, Assembler, BoundaryMask, DnBlock, GuardOutcome, Setup, Side};
use crate::error::{Error, Result};
use crate::par;
use crate::profiles::{
    conformal_laplacian_q, reduced_potential_2d, Metric2D, Metric3D, Potential, RadialProfile, CHECK_GRID,
};
use crate::sl_engine::{FssData, Solver, SpectralFunctions, EIGEN_GRID};

/// Names accepted by [`Verifier::run`].
pub const SCENARIOS: &[&str] = &[
    "flat-closed-forms",
    "flat-spectrum",
    "thm-T-2D",
    "thm-R-2D-negative",
    "thm-schrodinger-2D",
    "uni-pot-q",
    "thm-nonuniq-R-3D",
    "thm-nonuniq-T-3D-zero",
    "thm-T-3D",
    "thm-second-schrodinger-3D",
    "link-q2q3",
    "residue-ml",
    "structural",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// Passes when value < tolerance.
    Below,
    /// Passes when value > tolerance.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
}

impl Criterion {
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Criterion {
            name: name.into(),
            value,
            tolerance,
            comparison: Comparison::Below,
            pass: value < tolerance,
            location: None,
        }
    }

    pub fn above(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Criterion {
            name: name.into(),
            value,
            tolerance,
            comparison: Comparison::Above,
            pass: value > tolerance,
            location: None,
        }
    }

    pub fn at(mut self, location: impl Into<String>) -> Self {
        self.location = Some(location.into());
        self
    }

    fn from_dev(name: impl Into<String>, d: &MaxDeviation, tolerance: f64, comparison: Comparison) -> Self {
        let c = match comparison {
            Comparison::Below => Criterion::below(name, d.value, tolerance),
            Comparison::Above => Criterion::above(name, d.value, tolerance),
        };
        match describe(d) {
            Some(loc) => c.at(loc),
            None => c,
        }
    }
}

fn describe(d: &MaxDeviation) -> Option<String> {
    let mut parts = Vec::new();
    if let Some(m) = d.m {
        parts.push(format!("m={m}"));
    }
    if let Some(n) = d.n {
        parts.push(format!("n={n}"));
    }
    if let Some(x) = d.x {
        parts.push(format!("x={x}"));
    }
    (!parts.is_empty()).then(|| parts.join(","))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub tol_ode: f64,
    pub tol_eq: f64,
    pub tol_neq: f64,
    pub eigen_grid: usize,
    pub check_grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub pass: bool,
    pub criteria: Vec<Criterion>,
    pub environment: Environment,
}

impl Report {
    pub fn failed(&self) -> impl Iterator<Item = &Criterion> {
        self.criteria.iter().filter(|c| !c.pass)
    }
}

/// Per-entry maximal deviations between the blocks of two setups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DnComparison {
    pub l: MaxDeviation,
    pub t_r: MaxDeviation,
    pub t_l: MaxDeviation,
    pub r: MaxDeviation,
    /// The Weyl–Titchmarsh parts −M/√f(0) and −N/√f(1) of L and R.
    pub m_part: MaxDeviation,
    pub n_part: MaxDeviation,
    pub delta: MaxDeviation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectraComparison {
    pub max_abs: f64,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MittagLeffler {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub defect: f64,
}

/// Boundary and interior comparison of two 2D metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryWitness {
    /// max(|f(0) − f̃(0)|, |f(1) − f̃(1)|); equal circumferences 2π√f at both ends.
    pub boundary_defect: f64,
    pub interior_max_difference: f64,
    pub x: f64,
}

/// Runs checks with a fixed solver and tolerances.
#[derive(Debug, Clone, Copy)]
pub struct Verifier {
    pub asm: Assembler,
    pub tol_eq: f64,
    pub tol_neq: f64,
}

impl Default for Verifier {
    fn default() -> Self {
        Verifier { asm: Assembler::default(), tol_eq: 1e-8, tol_neq: 1e-3 }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn crel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

fn grid_max<F: Fn(f64) -> f64>(f: F) -> (f64, f64) {
    let h = 1.0 / (CHECK_GRID - 1) as f64;
    let mut best = (0.0, 0.0);
    for i in 0..CHECK_GRID {
        let x = i as f64 * h;
        let v = f(x).abs();
        if v > best.0 {
            best = (v, x);
        }
    }
    best
}

/// The Δ, M, D, E identities and both Wronskians for one set of fundamental solutions.
pub fn check_fss(fss: &FssData, sf: &SpectralFunctions, tol: f64) -> Vec<Criterion> {
    let z = fss.z;
    let at = format!("z={}", z.re);
    let mut out = vec![
        Criterion::below("wronskian c0,s0", fss.wronskian_defect_left(), tol).at(&at),
        Criterion::below("wronskian c1,s1", fss.wronskian_defect_right(), tol).at(&at),
        Criterion::below("Delta = s0(1) = -s1(0)", crel(sf.delta, fss.s0_1).max(crel(sf.delta, -fss.s1_0)), tol)
            .at(&at),
        Criterion::below("D = c0(1) = s1'(0)", crel(sf.d, fss.c0_1).max(crel(sf.d, fss.s1p_0)), tol).at(&at),
        Criterion::below("E = c1(0) = s0'(1)", crel(sf.e, fss.c1_0).max(crel(sf.e, fss.s0p_1)), tol).at(&at),
    ];
    if let (Some(m), Some(n)) = (sf.m, sf.n) {
        out.push(Criterion::below("M = -D/Delta", crel(m * sf.delta, -sf.d), tol).at(&at));
        out.push(Criterion::below("N = -E/Delta", crel(n * sf.delta, -sf.e), tol).at(&at));
    }
    out
}

impl Verifier {
    pub fn new(asm: Assembler, tol_eq: f64, tol_neq: f64) -> Self {
        Verifier { asm, tol_eq, tol_neq }
    }

    fn solver(&self) -> &Solver {
        &self.asm.solver
    }

    pub fn environment(&self) -> Environment {
        Environment {
            tol_ode: self.asm.solver.tol,
            tol_eq: self.tol_eq,
            tol_neq: self.tol_neq,
            eigen_grid: EIGEN_GRID,
            check_grid: CHECK_GRID,
        }
    }

    fn report(&self, scenario: &str, criteria: Vec<Criterion>) -> Report {
        Report {
            scenario: scenario.into(),
            pass: criteria.iter().all(|c| c.pass),
            criteria,
            environment: self.environment(),
        }
    }

    /// Maximal deviations of every block entry over |m| ≤ mmax, |n| ≤ nmax.
    pub fn compare_dn(&self, a: &Setup, b: &Setup, lambda2: f64, mmax: usize, nmax: usize) -> Result<DnComparison> {
        for s in [a, b] {
            if let GuardOutcome::Reject { m, n, delta_abs } = self.asm.frequency_guard(s, lambda2, mmax, nmax)? {
                return Err(Error::Frequency { m, n, delta_abs });
            }
        }
        let ba = self.asm.blocks(a, lambda2, mmax, nmax)?;
        let bb = self.asm.blocks(b, lambda2, mmax, nmax)?;
        Ok(self.compare_blocks(a, b, &ba, &bb))
    }

    fn compare_blocks(&self, a: &Setup, b: &Setup, ba: &[DnBlock], bb: &[DnBlock]) -> DnComparison {
        let (fa0, fa1) = (a.f().value(0.0).sqrt(), a.f().value(1.0).sqrt());
        let (fb0, fb1) = (b.f().value(0.0).sqrt(), b.f().value(1.0).sqrt());
        let mut m_part = MaxDeviation::zero();
        let mut n_part = MaxDeviation::zero();
        for (x, y) in ba.iter().zip(bb) {
            let loc = |value: f64| MaxDeviation { value, m: Some(x.m), n: x.n, x: None };
            m_part.absorb(loc((x.m_wt / fa0 - y.m_wt / fb0).abs()));
            n_part.absorb(loc((x.n_wt / fa1 - y.n_wt / fb1).abs()));
        }
        DnComparison {
            l: block_deviation(ba, bb, |b| b.l),
            t_r: block_deviation(ba, bb, |b| b.t_r),
            t_l: block_deviation(ba, bb, |b| b.t_l),
            r: block_deviation(ba, bb, |b| b.r),
            m_part,
            n_part,
            delta: block_deviation(ba, bb, |b| b.delta),
        }
    }

    /// max_k |λ_k(q₁) − λ_k(q₂)| over the first `count` Dirichlet eigenvalues.
    pub fn compare_spectra(&self, q1: &Potential, q2: &Potential, count: usize) -> Result<SpectraComparison> {
        let a = self.solver().eigenvalues(q1, count)?;
        let b = self.solver().eigenvalues(q2, count)?;
        let mut best = SpectraComparison { max_abs: 0.0, k: 1 };
        for (x, y) in a.iter().zip(&b) {
            let d = (x.lambda - y.lambda).abs();
            if d > best.max_abs {
                best = SpectraComparison { max_abs: d, k: x.k };
            }
        }
        Ok(best)
    }

    /// |Δ(z) − Δ(0) ∏_{k≤K} (1 + z/λ_k)| / |Δ(z)|. Zeros of Δ sit at z = −λ_k.
    pub fn hadamard_check(&self, q: &Potential, z: Complex64, count: usize) -> Result<f64> {
        if z == Complex64::new(0.0, 0.0) {
            return Ok(0.0);
        }
        let d0 = self.solver().spectral_functions(q, Complex64::new(0.0, 0.0))?.delta;
        if d0.norm() < 1e-12 {
            return Err(Error::Degenerate("Delta(0) vanishes; 0 is a Dirichlet eigenvalue".into()));
        }
        let dz = self.solver().spectral_functions(q, z)?.delta;
        let ev = self.solver().eigenvalues(q, count)?;
        let prod = ev.iter().fold(Complex64::new(1.0, 0.0), |acc, e| acc * (1.0 + z / e.lambda));
        Ok((dz - d0 * prod).norm() / dz.norm())
    }

    /// Compares M(z) − M(0) with the truncated pole expansion
    /// 2 Σ (Res_μ/α_k) · z/(z − α_k²), poles α_k² = −λ_k.
    pub fn mittag_leffler_check(&self, q: &Potential, z: Complex64, count: usize) -> Result<MittagLeffler> {
        let zero = Complex64::new(0.0, 0.0);
        if z == zero {
            return Ok(MittagLeffler { lhs: zero, rhs: zero, defect: 0.0 });
        }
        let m = |zz: Complex64| -> Result<Complex64> {
            self.solver().spectral_functions(q, zz)?.m.ok_or(Error::Pole { z: zz.re, distance: 0.0 })
        };
        let lhs = m(z)? - m(zero)?;
        let ev = self.solver().eigenvalues(q, count)?;
        let residues = par::try_map(&ev, |e| self.solver().residue_at(q, e.k, e.lambda))?;
        let rhs = residues.iter().map(|r| 2.0 * (r.mu_residue / r.alpha) * z / (z - r.alpha2)).fold(zero, |a, b| a + b);
        Ok(MittagLeffler { lhs, rhs, defect: (lhs - rhs).norm() / lhs.norm() })
    }

    /// Structural identities at each sample z.
    pub fn structural_identities(&self, q: &Potential, zs: &[Complex64]) -> Result<Vec<Criterion>> {
        let per_z = par::try_map(zs, |&z| {
            let fss = self.solver().integrate_fss(q, z)?;
            Ok(check_fss(&fss, &SpectralFunctions::from_fss(&fss), 1e-9))
        })?;
        Ok(per_z.into_iter().flatten().collect())
    }

    /// Boundary circumferences and the interior pointwise difference of two 2D metrics.
    pub fn non_isometry_witness_2d(&self, g: &Metric2D, gt: &Metric2D) -> BoundaryWitness {
        let boundary_defect = (g.f.value(0.0) - gt.f.value(0.0)).abs().max((g.f.value(1.0) - gt.f.value(1.0)).abs());
        let (d, x) = grid_max(|x| g.f.value(x) - gt.f.value(x));
        BoundaryWitness { boundary_defect, interior_max_difference: d, x }
    }

    pub fn non_isometry_witness_3d(&self, g: &Metric3D, gt: &Metric3D) -> VolumeWitness {
        volume_witness(g, gt)
    }

    /// Blocks of (c g, V ≡ 0) against (g, V = −q_c) at λ² = 0, where q_c is the
    /// conformal Laplacian potential of c^{1/4}. Here c scales all of g (f̃ = c f, h̃ = c h).
    pub fn link_q2q3_check(&self, g: &Metric3D, c: &RadialProfile, cutoff: usize) -> Result<MaxDeviation> {
        let (j0, j1) = (c.jet(0.0), c.jet(1.0));
        let bc = (j0.v - 1.0).abs().max((j1.v - 1.0).abs()).max(j0.d1.abs()).max(j1.d1.abs());
        if bc > 1e-10 {
            return Err(Error::Invalid(format!("the link needs c = 1 and c' = 0 at both ends (defect {bc:e})")));
        }
        let scaled = Metric3D::new(
            c.combine(&g.f, &format!("c*({})", g.f.name()), |c, f| c * f),
            c.combine(&g.h, &format!("c*({})", g.h.name()), |c, h| c * h),
        )?;
        let q = conformal_laplacian_q(c, g)?;
        let v = match q.as_constant() {
            Some(qc) => RadialProfile::constant(-qc),
            None => RadialProfile::from_samples(
                (0..CHECK_GRID).map(|i| -q.eval(i as f64 / (CHECK_GRID - 1) as f64)).collect(),
                "-q_c",
            )?,
        };
        let a = Setup::ThreeD { g: scaled, v: None };
        let b = Setup::ThreeD { g: g.clone(), v: Some(v) };
        let cmp = self.compare_dn(&a, &b, 0.0, cutoff, cutoff)?;
        let mut best = cmp.l;
        for d in [cmp.t_r, cmp.t_l, cmp.r] {
            best.absorb(d);
        }
        Ok(best)
    }

    pub fn run(&self, scenario: &str) -> Result<Report> {
        let criteria = match scenario {
            "flat-closed-forms" => self.flat_closed_forms()?,
            "flat-spectrum" => self.flat_spectrum()?,
            "thm-T-2D" => self.transmission_2d()?,
            "thm-R-2D-negative" => self.reflection_2d_negative()?,
            "thm-schrodinger-2D" => self.schrodinger_2d()?,
            "uni-pot-q" => self.uni_pot_q()?,
            "thm-nonuniq-R-3D" => self.same_component_3d()?,
            "thm-nonuniq-T-3D-zero" => self.cross_component_zero_3d()?,
            "thm-T-3D" => self.cross_component_3d()?,
            "thm-second-schrodinger-3D" => self.schrodinger_3d()?,
            "link-q2q3" => self.link()?,
            "residue-ml" => self.residue_ml()?,
            "structural" => self.structural(25, 20240917)?,
            other => {
                return Err(Error::Invalid(format!("unknown scenario `{other}`; known: {}", SCENARIOS.join(", "))))
            }
        };
        Ok(self.report(scenario, criteria))
    }

    /// Every scenario in order.
    pub fn demo(&self) -> Result<Vec<Report>> {
        SCENARIOS.iter().map(|s| self.run(s)).collect()
    }

    fn flat_closed_forms(&self) -> Result<Vec<Criterion>> {
        let q = Potential::constant(0.0);
        let mut mus: Vec<Complex64> = [0.5, 1.0, 2.0, 5.0, 10.0].iter().map(|&r| Complex64::new(r, 0.0)).collect();
        mus.extend([0.5, 1.0, 2.0, 5.0, 10.0].iter().map(|&r| Complex64::new(0.0, r)));
        let vals = par::try_map(&mus, |&mu| self.solver().spectral_functions(&q, mu * mu).map(|sf| (mu, sf)))?;
        let (mut dd, mut dm) = ((0.0, String::new()), (0.0, String::new()));
        for (mu, sf) in vals {
            let d = (sf.delta * mu / mu.sinh() - 1.0).norm();
            let m = sf.m.ok_or(Error::Pole { z: (mu * mu).re, distance: 0.0 })?;
            let e = (m + mu * mu.cosh() / mu.sinh()).norm() / mu.norm();
            if d >= dd.0 {
                dd = (d, format!("mu={mu}"));
            }
            if e >= dm.0 {
                dm = (e, format!("mu={mu}"));
            }
        }
        Ok(vec![
            Criterion::below("|Delta mu/sinh mu - 1|", dd.0, 1e-9).at(dd.1),
            Criterion::below("|M + mu coth mu|/|mu|", dm.0, 1e-8).at(dm.1),
        ])
    }

    fn flat_spectrum(&self) -> Result<Vec<Criterion>> {
        let mut out = Vec::new();
        for shift in [0.0, 5.0] {
            let ev = self.solver().eigenvalues(&Potential::constant(shift), 20)?;
            let (mut worst, mut at) = (0.0, 1);
            for e in &ev {
                let exact = shift + (e.k as f64 * PI).powi(2);
                let r = (e.lambda - exact).abs() / exact;
                if r > worst {
                    worst = r;
                    at = e.k;
                }
            }
            out.push(
                Criterion::below(format!("q={shift}: relative error vs {shift}+k^2 pi^2"), worst, 1e-8)
                    .at(format!("k={at}")),
            );
        }
        Ok(out)
    }

    fn metric_pair_2d(&self, lambda2: f64, k: usize, t: f64) -> Result<(Setup, Setup, RadialProfile)> {
        let f = RadialProfile::constant(1.0);
        let def = Deformer::new(*self.solver()).deform_metric_2d(&f, lambda2, k, t)?;
        let a = Setup::two_d(f, None)?;
        let b = Setup::two_d_formal(def.f_tilde.clone(), None)?;
        Ok((a, b, def.f_tilde))
    }

    fn transmission_2d(&self) -> Result<Vec<Criterion>> {
        let lambda2 = 1.0;
        let cases: Vec<(usize, f64)> = [1, 2, 3].iter().flat_map(|&k| [0.05, 0.1].map(move |t| (k, t))).collect();
        let mut out = Vec::new();
        for (k, t) in cases {
            let tag = format!("k={k},t={t}");
            let (a, b, ft) = self.metric_pair_2d(lambda2, k, t)?;
            let spec = self.compare_spectra(&a.potential(lambda2, 0)?, &b.potential(lambda2, 0)?, 15)?;
            out.push(Criterion::below(format!("{tag}: spectra (15)"), spec.max_abs, 1e-6).at(format!("k={}", spec.k)));
            let cmp = self.compare_dn(&a, &b, lambda2, 10, 0)?;
            out.push(Criterion::from_dev(format!("{tag}: T_R"), &cmp.t_r, self.tol_eq, Comparison::Below));
            out.push(Criterion::from_dev(format!("{tag}: T_L"), &cmp.t_l, self.tol_eq, Comparison::Below));
            let ends = (ft.value(0.0) - 1.0).abs().max((ft.value(1.0) - 1.0).abs());
            out.push(Criterion::below(format!("{tag}: f~(0), f~(1) = 1"), ends, 1e-9));
            let w =
                self.non_isometry_witness_2d(&Metric2D::formal(RadialProfile::constant(1.0))?, &Metric2D::formal(ft)?);
            out.push(
                Criterion::above(format!("{tag}: max |f~ - f|"), w.interior_max_difference, self.tol_neq)
                    .at(format!("x={}", w.x)),
            );
            out.push(Criterion::from_dev(format!("{tag}: L differs"), &cmp.l, self.tol_neq, Comparison::Above));
        }
        // trace-level smoke check: Γ_D ⊂ Γ₀, Γ_N ⊂ Γ₁
        let (a, b, _) = self.metric_pair_2d(lambda2, 1, 0.1)?;
        out.push(self.trace_smoke(&a, &b, lambda2, Side::Zero, Side::One, 3)?);
        Ok(out)
    }

    /// Applies both partial DN maps to `samples` random bumps supported in
    /// (−π/2, π/2) and compares the traces on (π/4, 3π/4) relative to their size.
    fn trace_smoke(&self, a: &Setup, b: &Setup, lambda2: f64, d: Side, n: Side, samples: usize) -> Result<Criterion> {
        let g = 256;
        let gamma_d = BoundaryMask::parse("-pi/2:pi/2")?;
        let gamma_n = BoundaryMask::parse("pi/4:3*pi/4")?;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let psi: Vec<Complex64> = (0..g)
                .map(|j| {
                    let y = grid_point(j, g);
                    let v = if y.abs() < PI / 2.0 {
                        let s = (PI * y).cos().powi(2) * (y * 2.0).cos().powi(4);
                        s * coeffs.iter().enumerate().map(|(i, c)| c * (i as f64 * y).cos()).sum::<f64>()
                    } else {
                        0.0
                    };
                    Complex64::new(v, 0.0)
                })
                .collect();
            let ta = apply_partial_dn(&self.asm, a, lambda2, &psi, d, &gamma_d, n, &gamma_n, 40, 0)?;
            let tb = apply_partial_dn(&self.asm, b, lambda2, &psi, d, &gamma_d, n, &gamma_n, 40, 0)?;
            let scale = ta.restricted.iter().map(|p| p.2.norm()).fold(0.0, f64::max).max(1e-300);
            for (p, q) in ta.restricted.iter().zip(&tb.restricted) {
                worst = worst.max((p.2 - q.2).norm() / scale);
            }
        }
        Ok(Criterion::below("trace on disjoint sets (relative)", worst, self.tol_eq))
    }

    fn reflection_2d_negative(&self) -> Result<Vec<Criterion>> {
        let lambda2 = 1.0;
        let (a, b, _) = self.metric_pair_2d(lambda2, 1, 0.1)?;
        let cmp = self.compare_dn(&a, &b, lambda2, 10, 0)?;
        Ok(vec![
            Criterion::from_dev("L differs", &cmp.l, self.tol_neq, Comparison::Above),
            Criterion::from_dev("R differs", &cmp.r, self.tol_neq, Comparison::Above),
            Criterion::from_dev("T_L equal", &cmp.t_l, self.tol_eq, Comparison::Below),
        ])
    }

    fn schrodinger_2d(&self) -> Result<Vec<Criterion>> {
        let (lambda2, k, t) = (1.0, 1, 0.5);
        let f = RadialProfile::constant(1.0);
        let v = RadialProfile::constant(0.0);
        let vt = Deformer::new(*self.solver()).deform_schrodinger_potential(&f, None, &v, lambda2, k, t)?;
        let a = Setup::two_d(f.clone(), Some(v))?;
        let b = Setup::two_d(f, Some(vt.clone()))?;
        let cmp = self.compare_dn(&a, &b, lambda2, 10, 0)?;
        let ends = vt.value(0.0).abs().max(vt.value(1.0).abs());
        Ok(vec![
            Criterion::from_dev("T_R", &cmp.t_r, self.tol_eq, Comparison::Below),
            Criterion::from_dev("T_L", &cmp.t_l, self.tol_eq, Comparison::Below),
            Criterion::below("V~(0), V~(1) = 0", ends, 1e-9),
            Criterion::from_dev("M-part of L differs", &cmp.m_part, self.tol_neq, Comparison::Above),
        ])
    }

    fn flat_3d() -> Result<Metric3D> {
        Metric3D::new(RadialProfile::constant(1.0), RadialProfile::constant(1.0))
    }

    fn uni_pot_q(&self) -> Result<Vec<Criterion>> {
        let g = Self::flat_3d()?;
        let c = ConformalFactor::new(RadialProfile::from_expr("1+x")?, Provenance::Family)?;
        let mut out = Vec::new();
        let gt = conformal_metric(&g, &c)?;
        let d = potential_deviation(&g, &gt, 0.0, 3)?;
        out.push(Criterion::from_dev("lambda2=0: max |q - q~| (n<=3)", &d, 1e-9, Comparison::Below));
        let h = crate::conformal3d::h_from_c(&g.f, &c, 1.0, 1.0)?;
        let g1 = Metric3D::new(g.f.clone(), h)?;
        let gt1 = conformal_metric(&g1, &c)?;
        let d = potential_deviation(&g1, &gt1, 1.0, 3)?;
        out.push(Criterion::from_dev("lambda2=1 (h rebuilt): max |q - q~| (n<=3)", &d, 1e-9, Comparison::Below));
        Ok(out)
    }

    fn same_component_3d(&self) -> Result<Vec<Criterion>> {
        let builder = FamilyBuilder { assembler: self.asm, cutoff: 6, ..FamilyBuilder::default() };
        let g = Self::flat_3d()?;
        let cases = [
            ("lambda2=0,B=1", 0.0, FactorChoice::Parameter(1.0)),
            ("lambda2=1,c=1+x", 1.0, FactorChoice::Factor(RadialProfile::from_expr("1+x")?)),
        ];
        let mut out = Vec::new();
        for (tag, lambda2, choice) in cases {
            let fam = builder.same_component(&g, lambda2, &choice)?;
            out.push(Criterion::from_dev(
                format!("{tag}: max |q - q~|"),
                &fam.report.potential_deviation,
                1e-9,
                Comparison::Below,
            ));
            let (a, b) = paired_blocks(&self.asm, &fam.g, &fam.g_tilde, lambda2, 6)?;
            let a_term = |m: &Metric3D| m.log_h_derivs(0.0).0 / (4.0 * m.f.value(0.0).sqrt());
            let shift = a_term(&fam.g_tilde) - a_term(&fam.g);
            let mut m_dev = MaxDeviation::zero();
            let mut l_dev = MaxDeviation::zero();
            let (s0, st0) = (fam.g.f.value(0.0).sqrt(), fam.g_tilde.f.value(0.0).sqrt());
            for (x, y) in a.iter().zip(&b) {
                let loc = |value: f64| MaxDeviation { value, m: Some(x.m), n: x.n, x: None };
                m_dev.absorb(loc((x.m_wt / s0 - y.m_wt / st0).abs()));
                l_dev.absorb(loc(((y.l - x.l) - shift).abs()));
            }
            out.push(Criterion::from_dev(
                format!("{tag}: L without the (log h)' term"),
                &m_dev,
                self.tol_eq,
                Comparison::Below,
            ));
            out.push(Criterion::from_dev(format!("{tag}: L~ - L = A~ - A"), &l_dev, self.tol_eq, Comparison::Below));
            out.push(Criterion::above(format!("{tag}: |A~ - A|"), shift.abs(), self.tol_neq));
            out.push(Criterion::above(
                format!("{tag}: volume witness"),
                fam.report.volume.relative_difference,
                self.tol_neq,
            ));
        }
        Ok(out)
    }

    fn cross_component_zero_3d(&self) -> Result<Vec<Criterion>> {
        let builder = FamilyBuilder { assembler: self.asm, cutoff: 8, ..FamilyBuilder::default() };
        let g = Self::flat_3d()?;
        let fam = builder.cross_component(&g, 0.0, &FactorChoice::Parameter(2.0))?;
        let (a, b) = paired_blocks(&self.asm, &fam.g, &fam.g_tilde, 0.0, 8)?;
        let t_r = block_deviation(&a, &b, |b| b.t_r);
        let exact = (8f64.powi(7) - 2f64.powi(7)) / 42.0;
        Ok(vec![
            Criterion::below("c(1)^3 = c(0)", fam.report.boundary_constraint_defect.unwrap_or(f64::NAN), 1e-10),
            Criterion::from_dev("T_L (|m|,|n|<=8)", &fam.report.block_deviation, self.tol_eq, Comparison::Below),
            Criterion::from_dev("max |q - q~|", &fam.report.potential_deviation, 1e-9, Comparison::Below),
            Criterion::above("volume witness (relative)", fam.report.volume.relative_difference, 10.0),
            Criterion::below("volume matches int (8-6x)^6", rel(fam.report.volume.volume_tilde, exact), 1e-10),
            Criterion::from_dev("T_R differs", &t_r, self.tol_neq, Comparison::Above),
        ])
    }

    fn cross_component_3d(&self) -> Result<Vec<Criterion>> {
        let (lambda2, a) = (0.5, 1.1f64);
        let builder = FamilyBuilder { assembler: self.asm, cutoff: 6, ..FamilyBuilder::default() };
        let g = Self::flat_3d()?;
        let c = RadialProfile::from_expr(&format!("{} + {}*x", a.powi(3), a - a.powi(3)))?;
        let fam = builder.cross_component(&g, lambda2, &FactorChoice::Factor(c))?;
        let (ba, bb) = paired_blocks(&self.asm, &fam.g, &fam.g_tilde, lambda2, 6)?;
        let t_r = block_deviation(&ba, &bb, |b| b.t_r);
        Ok(vec![
            Criterion::below("c(1)^3 = c(0)", fam.report.boundary_constraint_defect.unwrap_or(f64::NAN), 1e-10),
            Criterion::from_dev("T_L (|m|,|n|<=6)", &fam.report.block_deviation, self.tol_eq, Comparison::Below),
            Criterion::from_dev("max |q - q~|", &fam.report.potential_deviation, 1e-9, Comparison::Below),
            Criterion::above("volume witness (relative)", fam.report.volume.relative_difference, self.tol_neq),
            Criterion::from_dev("T_R differs", &t_r, self.tol_neq, Comparison::Above),
        ])
    }

    fn schrodinger_3d(&self) -> Result<Vec<Criterion>> {
        let (lambda2, k, t) = (0.0, 1, 0.5);
        let one = RadialProfile::constant(1.0);
        let v = RadialProfile::constant(0.0);
        let vt = Deformer::new(*self.solver()).deform_schrodinger_potential(&one, Some(&one), &v, lambda2, k, t)?;
        let a = Setup::three_d(one.clone(), one.clone(), Some(v))?;
        let b = Setup::three_d(one.clone(), one, Some(vt.clone()))?;
        let cmp = self.compare_dn(&a, &b, lambda2, 6, 6)?;
        let ends = vt.value(0.0).abs().max(vt.value(1.0).abs());
        Ok(vec![
            Criterion::from_dev("Delta (|m|,|n|<=6)", &cmp.delta, self.tol_eq, Comparison::Below),
            Criterion::below("V~(0), V~(1) = 0", ends, 1e-9),
            Criterion::from_dev("M_V differs", &cmp.m_part, self.tol_neq, Comparison::Above),
        ])
    }

    fn link(&self) -> Result<Vec<Criterion>> {
        let g = Self::flat_3d()?;
        let c = RadialProfile::from_expr("1 + 0.1*x^2*(1-x)^2")?;
        let d = self.link_q2q3_check(&g, &c, 4)?;
        let d1 = self.link_q2q3_check(&g, &RadialProfile::constant(1.0), 4)?;
        Ok(vec![
            Criterion::from_dev("c = 1 + 0.1 x^2 (1-x)^2: max block deviation", &d, 1e-6, Comparison::Below),
            Criterion::from_dev("c = 1: max block deviation", &d1, 1e-12, Comparison::Below),
        ])
    }

    fn residue_ml(&self) -> Result<Vec<Criterion>> {
        let q = Potential::constant(0.0);
        let r = self.solver().residue_at_pole(&q, 1)?;
        let exact = 2.0 * PI * PI;
        let ml = self.mittag_leffler_check(&q, Complex64::new(1.0, 0.0), 1000)?;
        let target = 1.0 - 1f64.cosh() / 1f64.sinh();
        let had = self.hadamard_check(&q, Complex64::new(-PI * PI / 4.0, 0.0), 200)?;
        Ok(vec![
            Criterion::below("residue k=1 vs 2 pi^2 (relative)", (r.mu2_residue - exact).abs() / exact, 1e-6),
            Criterion::below("Mittag-Leffler defect (z=1, K=1000)", ml.defect, 1e-3),
            Criterion::below("M(1) - M(0) vs 1 - coth 1", (ml.lhs.re - target).abs(), 1e-8),
            Criterion::below("Hadamard defect (z=-pi^2/4, K=200)", had, 0.02),
        ])
    }

    /// Structural identities, shift covariance, the 3D → 2D reduction and the
    /// growth rate of Δ and M on randomized smooth profiles.
    pub fn structural(&self, count: usize, seed: u64) -> Result<Vec<Criterion>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let specs: Vec<(String, String, f64)> = (0..count)
            .map(|_| {
                let q = format!(
                    "{:.4} + {:.4}*sin({:.4}*x) + {:.4}*x^2",
                    rng.gen_range(-5.0..5.0),
                    rng.gen_range(-8.0..8.0),
                    rng.gen_range(1.0..9.0),
                    rng.gen_range(-6.0..6.0)
                );
                let f = format!(
                    "{:.4} + {:.4}*cos({:.4}*x)",
                    rng.gen_range(1.0..2.0),
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(1.0..6.0)
                );
                (q, f, rng.gen_range(-3.0..3.0))
            })
            .collect();
        let zs: Vec<Complex64> = [-30.5, -3.3, 0.7, 4.0, 60.0, 400.0]
            .iter()
            .map(|&r| Complex64::new(r, 0.0))
            .chain([Complex64::new(2.0, 5.0)])
            .collect();
        let results = par::try_map(&specs, |(qs, fs, shift)| {
            let q = Potential::from_expr(qs)?;
            let mut worst = [0.0f64; 5];
            for c in self.structural_identities(&q, &zs)? {
                worst[0] = worst[0].max(c.value);
            }
            // Δ_{q+a}(z) = Δ_q(z + a)
            let qa = q.shifted(*shift);
            for &z in &zs[..4] {
                let a = self.solver().spectral_functions(&qa, z)?.delta;
                let b = self.solver().spectral_functions(&q, z + shift)?.delta;
                worst[1] = worst[1].max(crel(a, b));
            }
            let ea = self.solver().eigenvalues(&q, 5)?;
            let eb = self.solver().eigenvalues(&qa, 5)?;
            for (x, y) in ea.iter().zip(&eb) {
                worst[1] = worst[1].max(rel(y.lambda, x.lambda + shift));
            }
            // 3D with constant h at n = 0 reduces to 2D
            let f = RadialProfile::from_expr(fs)?;
            let g2 = Metric2D::new(f.clone())?;
            let g3 = Metric3D::new(f.clone(), RadialProfile::constant(1.7))?;
            let lambda2 = 0.3;
            let q2 = reduced_potential_2d(&f, None, lambda2)?;
            if self.solver().spectral_functions_real(&q2, 0.0)?.pole {
                return Err(Error::Internal("random profile landed on a pole".into()));
            }
            for m in 0..4 {
                let b2 = self.asm.dn_block_2d(&g2, None, lambda2, m)?;
                let b3 = self.asm.dn_block_3d(&g3, None, lambda2, m, 0)?;
                for (x, y) in [(b2.l, b3.l), (b2.t_r, b3.t_r), (b2.t_l, b3.t_l), (b2.r, b3.r)] {
                    worst[2] = worst[2].max(rel(x, y));
                }
            }
            // growth: d log Δ(μ²)/dμ → 1 and M(μ²)/μ → −1
            let (mu1, mu2) = (40.0, 80.0);
            let s1 = self.solver().spectral_functions_real(&q, mu1 * mu1)?;
            let s2 = self.solver().spectral_functions_real(&q, mu2 * mu2)?;
            let slope = (s2.delta.re.abs().ln() - s1.delta.re.abs().ln()) / (mu2 - mu1);
            worst[3] = worst[3].max((slope - 1.0).abs());
            let (_, m2, _) = s2.real_mn()?;
            worst[4] = worst[4].max((m2 / mu2 + 1.0).abs());
            Ok(worst)
        })?;
        let mut worst = [0.0f64; 5];
        for w in results {
            for i in 0..5 {
                worst[i] = worst[i].max(w[i]);
            }
        }
        let tag = format!("{count} profiles");
        Ok(vec![
            Criterion::below(format!("{tag}: Wronskian and Delta/D/E/M/N identities"), worst[0], 1e-9),
            Criterion::below(format!("{tag}: constant-shift covariance"), worst[1], 1e-9),
            Criterion::below(format!("{tag}: 3D (h const, n=0) = 2D blocks"), worst[2], 1e-10),
            Criterion::below(format!("{tag}: |d log Delta/d mu - 1| at mu in [40, 80]"), worst[3], 0.05),
            Criterion::below(format!("{tag}: |M/mu + 1| at mu = 80"), worst[4], 0.05),
        ])
    }
}

pub fn compare_dn(a: &Setup, b: &Setup, lambda2: f64, mmax: usize, nmax: usize) -> Result<DnComparison> {
    Verifier::default().compare_dn(a, b, lambda2, mmax, nmax)
}

pub fn compare_spectra(q1: &Potential, q2: &Potential, count: usize) -> Result<SpectraComparison> {
    Verifier::default().compare_spectra(q1, q2, count)
}

pub fn hadamard_check(q: &Potential, z: Complex64, count: usize) -> Result<f64> {
    Verifier::default().hadamard_check(q, z, count)
}

pub fn mittag_leffler_check(q: &Potential, z: Complex64, count: usize) -> Result<MittagLeffler> {
    Verifier::default().mittag_leffler_check(q, z, count)
}

pub fn structural_identities(q: &Potential, zs: &[Complex64]) -> Result<Vec<Criterion>> {
    Verifier::default().structural_identities(q, zs)
}

pub fn link_q2q3_check(g: &Metric3D, c: &RadialProfile, cutoff: usize) -> Result<MaxDeviation> {
    Verifier::default().link_q2q3_check(g, c, cutoff)
}

pub fn run_scenario(name: &str) -> Result<Report> {
    Verifier::default().run(name)
}
