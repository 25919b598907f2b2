//! Exit-gate checks. Each test prints one PASS/FAIL line with the measured
//! value, the tolerance and the wall time, then asserts both.
//!
//! Tests take a shared lock so that timings are not inflated by neighbours.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use calderon::conformal3d::{paired_blocks, FactorChoice, FamilyBuilder};
use calderon::deformations::Deformer;
use calderon::dn_assembler::{Assembler, Setup};
use calderon::profiles::{Metric3D, Potential, RadialProfile};
use calderon::sl_engine::Solver;
use calderon::verify::Verifier;
use calderon::Complex64;

static SERIAL: Mutex<()> = Mutex::new(());

struct Line {
    label: &'static str,
    checks: Vec<(String, bool)>,
}

impl Line {
    fn new(label: &'static str) -> Self {
        Line { label, checks: Vec::new() }
    }

    fn below(&mut self, what: &str, value: f64, tol: f64) {
        self.checks.push((format!("{what} = {value:.3e} < {tol:e}"), value < tol));
    }

    fn above(&mut self, what: &str, value: f64, tol: f64) {
        self.checks.push((format!("{what} = {value:.3e} > {tol:e}"), value > tol));
    }

    fn finish(self, start: Instant, limit: Duration) {
        let elapsed = start.elapsed();
        let in_time = elapsed < limit;
        let ok = in_time && self.checks.iter().all(|c| c.1);
        let detail: Vec<&str> = self.checks.iter().map(|c| c.0.as_str()).collect();
        // Straight to the stderr handle so the line shows even when the harness captures output.
        let _ = writeln!(
            std::io::stderr().lock(),
            "{} {}: {} [{:.2} s, limit {} s]",
            if ok { "PASS" } else { "FAIL" },
            self.label,
            detail.join("; "),
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
        for (text, pass) in &self.checks {
            assert!(pass, "{}: {text}", self.label);
        }
        assert!(in_time, "{}: took {elapsed:?}, limit {limit:?}", self.label);
    }
}

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn solver() -> Solver {
    Solver::default()
}

fn flat3() -> Metric3D {
    Metric3D::new(RadialProfile::constant(1.0), RadialProfile::constant(1.0)).unwrap()
}

#[test]
fn criterion_1_zero_frequency_closed_forms() {
    let _g = lock();
    let start = Instant::now();
    let q = Potential::constant(0.0);
    let radii = [0.5, 1.0, 2.0, 5.0, 10.0];
    let mus = radii.iter().map(|&r| Complex64::new(r, 0.0)).chain(radii.iter().map(|&r| Complex64::new(0.0, r)));
    let (mut delta_err, mut m_err) = (0.0f64, 0.0f64);
    for mu in mus {
        let sf = solver().spectral_functions(&q, mu * mu).unwrap();
        delta_err = delta_err.max((sf.delta * mu / mu.sinh() - 1.0).norm());
        let m = sf.m.expect("no pole on this set");
        m_err = m_err.max((m + mu * mu.cosh() / mu.sinh()).norm() / mu.norm());
    }
    let mut line = Line::new("1 closed forms at zero frequency");
    line.below("max |Delta mu/sinh mu - 1|", delta_err, 1e-9);
    line.below("max |M + mu coth mu|/|mu|", m_err, 1e-8);
    line.finish(start, Duration::from_secs(1));
}

#[test]
fn criterion_2_flat_spectrum() {
    let _g = lock();
    let start = Instant::now();
    let mut line = Line::new("2 flat and shifted spectra");
    for shift in [0.0, 5.0] {
        let spec = solver().dirichlet_spectrum(&Potential::constant(shift), 20).unwrap();
        assert_eq!(spec.eigenvalues.len(), 20);
        let worst = spec
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let exact = shift + ((i + 1) as f64 * PI).powi(2);
                (l - exact).abs() / exact
            })
            .fold(0.0, f64::max);
        line.below(&format!("q={shift} relative error"), worst, 1e-8);
    }
    line.finish(start, Duration::from_secs(5));
}

#[test]
fn criterion_3_transmission_family_2d() {
    let _g = lock();
    let start = Instant::now();
    let verifier = Verifier::default();
    let lambda2 = 1.0;
    let f = RadialProfile::constant(1.0);
    let base = Setup::two_d(f.clone(), None).unwrap();
    let q = base.potential(lambda2, 0).unwrap();
    let deformer = Deformer::new(solver());
    let (mut spec_dev, mut t_dev, mut ends, mut interior, mut l_dev) =
        (0.0f64, 0.0f64, 0.0f64, f64::INFINITY, f64::INFINITY);
    for k in [1, 2, 3] {
        for t in [0.05, 0.1] {
            let def = deformer.deform_metric_2d(&f, lambda2, k, t).unwrap();
            let ft = def.f_tilde;
            let other = Setup::two_d_formal(ft.clone(), None).unwrap();
            let sp = verifier.compare_spectra(&q, &other.potential(lambda2, 0).unwrap(), 15).unwrap();
            spec_dev = spec_dev.max(sp.max_abs);
            let cmp = verifier.compare_dn(&base, &other, lambda2, 10, 0).unwrap();
            t_dev = t_dev.max(cmp.t_r.value).max(cmp.t_l.value);
            ends = ends.max((ft.value(0.0) - 1.0).abs()).max((ft.value(1.0) - 1.0).abs());
            let diff = (0..=2048).map(|i| (ft.value(i as f64 / 2048.0) - 1.0).abs()).fold(0.0, f64::max);
            interior = interior.min(diff);
            l_dev = l_dev.min(cmp.l.value);
        }
    }
    let mut line = Line::new("3 two-dimensional transmission family");
    line.below("15 eigenvalues max |diff|", spec_dev, 1e-6);
    line.below("T_R/T_L max dev (|m|<=10)", t_dev, 1e-8);
    line.below("|f~(0)-1|, |f~(1)-1|", ends, 1e-9);
    line.above("min over cases of max |f~-f|", interior, 1e-3);
    line.above("min over cases of max L dev", l_dev, 1e-3);
    line.finish(start, Duration::from_secs(60));
}

#[test]
fn criterion_4_conformal_potential_identity() {
    let _g = lock();
    let start = Instant::now();
    let g = flat3();
    let c = RadialProfile::from_expr("1+x").unwrap();
    let builder = FamilyBuilder::default();
    let mut line = Line::new("4 conformal potential identity");
    // λ² = 0: c = 1 + B∫₀ˣ h^{-1/2} with B = 1 keeps h. λ² = 1: h is rebuilt from c.
    let cases = [(0.0, FactorChoice::Parameter(1.0), false), (1.0, FactorChoice::Factor(c), true)];
    for (lambda2, choice, rebuilt) in cases {
        let fam = builder.same_component(&g, lambda2, &choice).unwrap();
        assert_eq!(fam.report.h_rebuilt, rebuilt);
        assert!((fam.factor.c.value(0.5) - 1.5).abs() < 1e-12, "c = 1 + x");
        line.below(&format!("lambda2={lambda2} max |q-q~| (n<=3)"), fam.report.potential_deviation.value, 1e-9);
    }
    line.finish(start, Duration::from_secs(5));
}

#[test]
fn criterion_5_cross_component_zero_frequency() {
    let _g = lock();
    let start = Instant::now();
    let asm = Assembler::default();
    let builder = FamilyBuilder { cutoff: 8, ..FamilyBuilder::default() };
    let fam = builder.cross_component(&flat3(), 0.0, &FactorChoice::Parameter(2.0)).unwrap();
    assert!((fam.factor.c.value(0.5) - 5.0).abs() < 1e-12, "c = 8 - 6x");
    let (a, b) = paired_blocks(&asm, &fam.g, &fam.g_tilde, 0.0, 8).unwrap();
    assert_eq!(a.len(), 17 * 17);
    let t_l = a.iter().zip(&b).map(|(x, y)| (x.t_l - y.t_l).abs()).fold(0.0, f64::max);
    let exact = (8f64.powi(7) - 2f64.powi(7)) / 42.0;
    let vol = fam.report.volume;
    let mut line = Line::new("5 cross-component family at zero frequency");
    line.below("T_L max dev (|m|,|n|<=8)", t_l, 1e-8);
    line.above("volume relative difference", vol.relative_difference, 10.0);
    line.below("volume vs int (8-6x)^6 (relative)", (vol.volume_tilde - exact).abs() / exact, 1e-10);
    line.finish(start, Duration::from_secs(60));
}

#[test]
fn criterion_6_residue_and_pole_expansion() {
    let _g = lock();
    let start = Instant::now();
    let q = Potential::constant(0.0);
    let r = solver().residue_at_pole(&q, 1).unwrap();
    let exact = 2.0 * PI * PI;
    let ml = Verifier::default().mittag_leffler_check(&q, Complex64::new(1.0, 0.0), 1000).unwrap();
    let target = 1.0 - 1f64.cosh() / 1f64.sinh();
    let mut line = Line::new("6 residue and pole expansion");
    line.below("residue k=1 vs 2 pi^2 (relative)", (r.mu2_residue - exact).abs() / exact, 1e-6);
    line.below("pole expansion defect (z=1, K=1000)", ml.defect, 1e-3);
    line.below("|M(1)-M(0) - (1 - coth 1)|", (ml.lhs.re - target).abs(), 1e-8);
    line.finish(start, Duration::from_secs(30));
}

#[test]
fn criterion_7_schrodinger_family_3d() {
    let _g = lock();
    let start = Instant::now();
    let verifier = Verifier::default();
    let one = RadialProfile::constant(1.0);
    let v = RadialProfile::constant(0.0);
    let vt = Deformer::new(solver()).deform_schrodinger_potential(&one, Some(&one), &v, 0.0, 1, 0.5).unwrap();
    let a = Setup::three_d(one.clone(), one.clone(), Some(v)).unwrap();
    let b = Setup::three_d(one.clone(), one, Some(vt.clone())).unwrap();
    let cmp = verifier.compare_dn(&a, &b, 0.0, 6, 6).unwrap();
    let mut line = Line::new("7 three-dimensional Schrodinger family");
    line.below("Delta max dev (|m|,|n|<=6)", cmp.delta.value, 1e-8);
    line.below("|V~(0)|, |V~(1)|", vt.value(0.0).abs().max(vt.value(1.0).abs()), 1e-9);
    line.above("M_V max dev", cmp.m_part.value, 1e-3);
    line.finish(start, Duration::from_secs(60));
}

#[test]
fn criterion_8_conformal_to_potential_link() {
    let _g = lock();
    let start = Instant::now();
    let c = RadialProfile::from_expr("1 + 0.1*x^2*(1-x)^2").unwrap();
    let d = Verifier::default().link_q2q3_check(&flat3(), &c, 4).unwrap();
    let mut line = Line::new("8 conformal scaling vs potential link");
    line.below("max block dev (|m|,|n|<=4)", d.value, 1e-6);
    line.finish(start, Duration::from_secs(30));
}

#[test]
fn criterion_9_structural_suite() {
    let _g = lock();
    let start = Instant::now();
    let criteria = Verifier::default().structural(25, 20240917).unwrap();
    let mut line = Line::new("9 structural suite (25 profiles)");
    for c in &criteria {
        line.below(&c.name, c.value, c.tolerance);
    }
    line.finish(start, Duration::from_secs(120));
}
