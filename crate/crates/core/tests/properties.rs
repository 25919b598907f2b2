use std::f64::consts::PI;

use calderon::deformations::{Deformer, XiVector};
use calderon::dn_assembler::{Assembler, Setup};
use calderon::expr::parse_expression;
use calderon::profiles::{Metric2D, Potential, RadialProfile};
use calderon::sl_engine::Solver;
use calderon::verify::check_fss;
use calderon::Complex64;
use proptest::prelude::*;

fn smooth_potential(a: f64, b: f64, w: f64) -> Potential {
    Potential::from_expr(&format!("{a} + {b}*sin({w}*x)")).unwrap()
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn polynomial_derivatives_match_hand_rule(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, x in 0.0..1.0f64) {
        let e = parse_expression(&format!("{a} + {b}*x + {c}*x^3")).unwrap();
        let d1 = e.diff(calderon::expr::Var::X);
        let d2 = d1.diff(calderon::expr::Var::X);
        prop_assert!((e.eval(x) - (a + b * x + c * x.powi(3))).abs() < 1e-12);
        prop_assert!((d1.eval(x) - (b + 3.0 * c * x * x)).abs() < 1e-12);
        prop_assert!((d2.eval(x) - 6.0 * c * x).abs() < 1e-12);
    }

    #[test]
    fn fundamental_solutions_satisfy_identities(a in -5.0..5.0f64, b in -5.0..5.0f64, w in 1.0..8.0f64, zr in -40.0..40.0f64, zi in -10.0..10.0f64) {
        let q = smooth_potential(a, b, w);
        let fss = Solver::default().integrate_fss(&q, Complex64::new(zr, zi)).unwrap();
        let sf = calderon::sl_engine::SpectralFunctions::from_fss(&fss);
        prop_assume!(!sf.pole);
        for c in check_fss(&fss, &sf, 1e-9) {
            prop_assert!(c.pass, "{} = {:e}", c.name, c.value);
        }
    }

    #[test]
    fn constant_shift_moves_every_eigenvalue(a in -5.0..5.0f64, b in -5.0..5.0f64, w in 1.0..8.0f64, s in -10.0..10.0f64) {
        let q = smooth_potential(a, b, w);
        let solver = Solver::default();
        let e0 = solver.eigenvalues(&q, 6).unwrap();
        let e1 = solver.eigenvalues(&q.shifted(s), 6).unwrap();
        for (x, y) in e0.iter().zip(&e1) {
            prop_assert!((y.lambda - x.lambda - s).abs() < 1e-8 * x.lambda.abs().max(1.0));
        }
    }

    #[test]
    fn eigenvalues_are_increasing_and_above_min_q(a in -5.0..5.0f64, b in -5.0..5.0f64, w in 1.0..8.0f64) {
        let q = smooth_potential(a, b, w);
        let ev = Solver::default().eigenvalues(&q, 8).unwrap();
        prop_assert!(ev[0].lambda > q.min() + PI * PI - 1e-9);
        for p in ev.windows(2) {
            prop_assert!(p[1].lambda > p[0].lambda);
        }
    }

    #[test]
    fn blocks_are_even_in_the_mode(f0 in 1.0..2.0f64, amp in -0.4..0.4f64, lambda2 in -3.0..3.0f64, m in 1i64..6) {
        let f = RadialProfile::from_expr(&format!("{f0} + {amp}*cos(3*x)")).unwrap();
        let g = Metric2D::new(f).unwrap();
        let asm = Assembler::default();
        let guard = asm.frequency_guard(&Setup::two_d(g.f.clone(), None).unwrap(), lambda2, m as usize, 0).unwrap();
        prop_assume!(matches!(guard, calderon::dn_assembler::GuardOutcome::Pass));
        let p = asm.dn_block_2d(&g, None, lambda2, m).unwrap();
        let n = asm.dn_block_2d(&g, None, lambda2, -m).unwrap();
        prop_assert_eq!(p.l, n.l);
        prop_assert_eq!(p.t_r, n.t_r);
        prop_assert_eq!(p.r, n.r);
        // T_L √f(1) = T_R √f(0) = −1/Δ
        let (s0, s1) = (g.f.value(0.0).sqrt(), g.f.value(1.0).sqrt());
        prop_assert!((p.t_l * s1 - p.t_r * s0).abs() < 1e-12 * (p.t_r * s0).abs().max(1e-300));
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn single_deformation_is_isospectral(a in -3.0..3.0f64, b in -3.0..3.0f64, k in 1usize..4, t in -0.8..0.8f64) {
        let q = smooth_potential(a, b, 2.5);
        let solver = Solver::default();
        let spec = solver.dirichlet_spectrum(&q, 15).unwrap();
        let qt = Deformer::new(solver).deform_potential_single(&q, &spec, k, t).unwrap();
        let e0 = solver.eigenvalues(&q, 15).unwrap();
        let e1 = solver.eigenvalues(&qt, 15).unwrap();
        for (x, y) in e0.iter().zip(&e1) {
            prop_assert!((x.lambda - y.lambda).abs() < 1e-6, "k={}: {} vs {}", x.k, x.lambda, y.lambda);
        }
        // Δ(z) depends only on the Dirichlet spectrum
        let z = Complex64::new(0.37, 0.0);
        let d0 = solver.spectral_functions(&q, z).unwrap().delta;
        let d1 = solver.spectral_functions(&qt, z).unwrap().delta;
        prop_assert!((d0 - d1).norm() < 1e-8 * d0.norm().max(1.0));
    }

    #[test]
    fn multi_index_deformation_is_isospectral(t1 in -0.5..0.5f64, t3 in -0.5..0.5f64) {
        let q = Potential::constant(-1.0);
        let solver = Solver::default();
        let spec = solver.dirichlet_spectrum(&q, 3).unwrap();
        let qt = Deformer::new(solver).deform_potential_xi(&q, &spec, &XiVector::new(vec![t1, 0.0, t3])).unwrap();
        let e0 = solver.eigenvalues(&q, 15).unwrap();
        let e1 = solver.eigenvalues(&qt, 15).unwrap();
        for (x, y) in e0.iter().zip(&e1) {
            prop_assert!((x.lambda - y.lambda).abs() < 1e-6);
        }
    }
}

#[test]
fn zero_parameter_deformation_is_identity() {
    let q = smooth_potential(1.0, 2.0, 3.0);
    let solver = Solver::default();
    let spec = solver.dirichlet_spectrum(&q, 2).unwrap();
    let qt = Deformer::new(solver).deform_potential_single(&q, &spec, 2, 0.0).unwrap();
    for i in 0..=100 {
        let x = i as f64 / 100.0;
        assert!((q.eval(x) - qt.eval(x)).abs() < 1e-12);
    }
}
