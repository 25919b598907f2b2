//! Browser bindings. Every export takes plain numbers and expression strings
//! and returns a JSON document for the page to plot.

use calderon::conformal3d::{paired_blocks, FactorChoice, FamilyBuilder};
use calderon::deformations::Deformer;
use calderon::dn_assembler::{Assembler, GuardOutcome, Setup};
use calderon::profiles::{Metric3D, RadialProfile};
use calderon::sl_engine::Solver;
use serde::Serialize;
use wasm_bindgen::prelude::*;

type Res<T> = std::result::Result<T, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn grid(rows: usize) -> Vec<f64> {
    let n = rows.clamp(2, 2049);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

#[derive(Serialize)]
struct Block {
    m: i64,
    l: f64,
    t_r: f64,
    t_l: f64,
    r: f64,
}

#[derive(Serialize)]
struct SpectrumView {
    eigenvalues: Vec<f64>,
    blocks: Vec<Block>,
}

/// Dirichlet eigenvalues of q = (V − λ²) f and the DN blocks for |m| ≤ mmax.
pub fn spectrum_view(f: &str, v: &str, lambda2: f64, count: usize, mmax: usize) -> Res<String> {
    let f = RadialProfile::from_expr(f).map_err(err)?;
    let v = if v.trim().is_empty() { None } else { Some(RadialProfile::from_expr(v).map_err(err)?) };
    let setup = Setup::two_d(f, v).map_err(err)?;
    let asm = Assembler::default();
    let q = setup.potential(lambda2, 0).map_err(err)?;
    let eigenvalues = asm.solver.eigenvalues(&q, count.clamp(1, 50)).map_err(err)?.iter().map(|e| e.lambda).collect();
    let mmax = mmax.min(40);
    if let GuardOutcome::Reject { m, delta_abs, .. } = asm.frequency_guard(&setup, lambda2, mmax, 0).map_err(err)? {
        return Err(format!("lambda2 sits on a Dirichlet eigenvalue for m = {m} (|Delta| = {delta_abs:e})"));
    }
    let blocks = asm
        .blocks(&setup, lambda2, mmax, 0)
        .map_err(err)?
        .into_iter()
        .filter(|b| b.m >= 0)
        .map(|b| Block { m: b.m, l: b.l, t_r: b.t_r, t_l: b.t_l, r: b.r })
        .collect();
    serde_json::to_string(&SpectrumView { eigenvalues, blocks }).map_err(err)
}

#[derive(Serialize)]
struct DeformView {
    x: Vec<f64>,
    f: Vec<f64>,
    f_tilde: Vec<f64>,
    positive: bool,
    eigenvalues: Vec<f64>,
    eigenvalues_tilde: Vec<f64>,
    blocks: Vec<Block>,
    blocks_tilde: Vec<Block>,
}

/// One-parameter isospectral deformation of a 2D metric with the blocks of both.
pub fn deform_view(f: &str, lambda2: f64, k: usize, t: f64, rows: usize) -> Res<String> {
    let f = RadialProfile::from_expr(f).map_err(err)?;
    let solver = Solver::default();
    let def = Deformer::new(solver).deform_metric_2d(&f, lambda2, k.max(1), t).map_err(err)?;
    let a = Setup::two_d(f.clone(), None).map_err(err)?;
    let b = Setup::two_d_formal(def.f_tilde.clone(), None).map_err(err)?;
    let asm = Assembler::new(solver);
    let spec = |s: &Setup| -> Res<Vec<f64>> {
        let q = s.potential(lambda2, 0).map_err(err)?;
        Ok(solver.eigenvalues(&q, 8).map_err(err)?.iter().map(|e| e.lambda).collect())
    };
    let blocks = |s: &Setup| -> Res<Vec<Block>> {
        Ok(asm
            .blocks(s, lambda2, 8, 0)
            .map_err(err)?
            .into_iter()
            .filter(|b| b.m >= 0)
            .map(|b| Block { m: b.m, l: b.l, t_r: b.t_r, t_l: b.t_l, r: b.r })
            .collect())
    };
    let x = grid(rows);
    let view = DeformView {
        f: x.iter().map(|&x| f.value(x)).collect(),
        f_tilde: x.iter().map(|&x| def.f_tilde.value(x)).collect(),
        x,
        positive: def.positive,
        eigenvalues: spec(&a)?,
        eigenvalues_tilde: spec(&b)?,
        blocks: blocks(&a)?,
        blocks_tilde: blocks(&b)?,
    };
    serde_json::to_string(&view).map_err(err)
}

#[derive(Serialize)]
struct FamilyView {
    x: Vec<f64>,
    c: Vec<f64>,
    h: Vec<f64>,
    h_tilde: Vec<f64>,
    c0: f64,
    c1: f64,
    volume: f64,
    volume_tilde: f64,
    t_l_deviation: f64,
    t_r_deviation: f64,
}

/// Zero-frequency family whose factor satisfies c(1)³ = c(0) for a given h.
pub fn family_view(h: &str, a: f64, cutoff: usize, rows: usize) -> Res<String> {
    let g = Metric3D::new(RadialProfile::constant(1.0), RadialProfile::from_expr(h).map_err(err)?).map_err(err)?;
    let cutoff = cutoff.min(10);
    let builder = FamilyBuilder { cutoff, ..FamilyBuilder::default() };
    let fam = builder.cross_component(&g, 0.0, &FactorChoice::Parameter(a)).map_err(err)?;
    let (ba, bb) = paired_blocks(&builder.assembler, &fam.g, &fam.g_tilde, 0.0, cutoff).map_err(err)?;
    let t_r_deviation = ba.iter().zip(&bb).map(|(x, y)| (x.t_r - y.t_r).abs()).fold(0.0, f64::max);
    let x = grid(rows);
    let view = FamilyView {
        c: x.iter().map(|&x| fam.factor.c.value(x)).collect(),
        h: x.iter().map(|&x| fam.g.h.value(x)).collect(),
        h_tilde: x.iter().map(|&x| fam.g_tilde.h.value(x)).collect(),
        x,
        c0: fam.report.c0,
        c1: fam.report.c1,
        volume: fam.report.volume.volume,
        volume_tilde: fam.report.volume.volume_tilde,
        t_l_deviation: fam.report.block_deviation.value,
        t_r_deviation,
    };
    serde_json::to_string(&view).map_err(err)
}

#[wasm_bindgen]
pub fn spectrum(f: &str, v: &str, lambda2: f64, count: usize, mmax: usize) -> Result<String, JsValue> {
    spectrum_view(f, v, lambda2, count, mmax).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn deform(f: &str, lambda2: f64, k: usize, t: f64, rows: usize) -> Result<String, JsValue> {
    deform_view(f, lambda2, k, t, rows).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn family(h: &str, a: f64, cutoff: usize, rows: usize) -> Result<String, JsValue> {
    family_view(h, a, cutoff, rows).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn flat_spectrum_view() {
        let v: Value = serde_json::from_str(&spectrum_view("1", "", 0.0, 3, 2).unwrap()).unwrap();
        let ev = v["eigenvalues"].as_array().unwrap();
        assert!((ev[0].as_f64().unwrap() - std::f64::consts::PI.powi(2)).abs() < 1e-8);
        assert_eq!(v["blocks"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn deform_view_keeps_transmission() {
        let v: Value = serde_json::from_str(&deform_view("1", 1.0, 1, 0.1, 33).unwrap()).unwrap();
        assert_eq!(v["x"].as_array().unwrap().len(), 33);
        let (a, b) = (v["blocks"].as_array().unwrap(), v["blocks_tilde"].as_array().unwrap());
        for (x, y) in a.iter().zip(b) {
            assert!((x["t_r"].as_f64().unwrap() - y["t_r"].as_f64().unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn family_view_reports_equal_t_l() {
        let v: Value = serde_json::from_str(&family_view("1", 2.0, 3, 17).unwrap()).unwrap();
        assert!(v["t_l_deviation"].as_f64().unwrap() < 1e-8);
        assert_eq!(v["c0"].as_f64().unwrap(), 8.0);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(spectrum_view("1 + * x", "", 0.0, 3, 2).is_err());
        assert!(spectrum_view("1", "", std::f64::consts::PI.powi(2), 3, 2).is_err());
    }
}
