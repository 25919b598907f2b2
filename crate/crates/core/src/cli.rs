//! Command-line front end. Flags override values from a JSON `--config` file.
//!
//! Exit codes: 0 success, 1 computation error, 2 configuration error,
//! 3 a verification criterion failed.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::json;

use crate::conformal3d::{FactorChoice, FamilyBuilder};
use crate::deformations::{Deformer, XiVector};
use crate::dn_assembler::{apply_partial_dn, grid_point, Assembler, BoundaryMask, GuardOutcome, Setup, Side};
use crate::error::Error;
use crate::expr::{parse_with_vars, Env, Var};
use crate::par;
use crate::profiles::{Metric3D, RadialProfile};
use crate::sl_engine::{Solver, DEFAULT_TOL};
use crate::verify::{Criterion, Report, Verifier, SCENARIOS};

#[derive(Debug, Parser)]
#[command(name = "calderon", version, about = "Partial Dirichlet-to-Neumann maps on warped-product cylinders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dirichlet eigenvalues of the reduced potential (CSV `k,eigenvalue`).
    Spectrum(Opts),
    /// Per-mode DN blocks (CSV `m,n,L,T_R,T_L,R`).
    Dn(Opts),
    /// Partial DN map applied to boundary data (CSV `y,z,re,im` on Γ_N).
    Trace(Opts),
    /// Isospectral deformation of f (or of V when --V is given).
    Deform(Opts),
    /// Conformal 3D family (CSV `x,f,h,c,f_tilde,h_tilde`, JSON report).
    Family3d(Opts),
    /// Run one verification scenario and print its JSON report.
    Verify {
        /// Scenario name; `list` prints the known names.
        scenario: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run every scenario.
    Demo(Opts),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Same,
    Cross,
}

#[derive(Debug, Default, Clone, Args)]
pub struct Opts {
    /// JSON file with any of the options below (snake_case keys); flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Profile f: an expression in x or `@file.csv#column`.
    #[arg(long)]
    pub f: Option<String>,
    #[arg(long)]
    pub h: Option<String>,
    #[arg(long = "V")]
    pub v: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda2: Option<f64>,
    /// Treat the --lambda2 value as λ and square it (guard probe near λ = kπ).
    #[arg(long, hide = true)]
    pub lambda2_is_eigenvalue_test: bool,
    #[arg(long)]
    pub mmax: Option<usize>,
    #[arg(long)]
    pub nmax: Option<usize>,
    /// z-mode index for `spectrum` in 3D.
    #[arg(long, allow_hyphen_values = true)]
    pub n: Option<i64>,
    #[arg(short = 'K', long = "count")]
    pub count: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Comma-separated ξ entries for eigen indices 1, 2, ...
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<String>,
    #[arg(long = "A")]
    pub a: Option<f64>,
    #[arg(long = "B", allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Integration constant for h rebuilt from c.
    #[arg(long = "C")]
    pub h_scale: Option<f64>,
    /// Explicit conformal factor c(x) for `family3d`.
    #[arg(long)]
    pub c: Option<String>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyKind>,
    /// Dirichlet set: `a:b,c:d` (2D) or `a:b|c:d,...` (3D), radians, or `all`.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_d: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_n: Option<String>,
    /// Boundary component (0 or 1) carrying the Dirichlet data.
    #[arg(long)]
    pub gamma_d_side: Option<String>,
    #[arg(long)]
    pub gamma_n_side: Option<String>,
    /// Boundary data ψ(y) (2D) or ψ(y, z) (3D).
    #[arg(long, allow_hyphen_values = true)]
    pub psi: Option<String>,
    /// Multiply ψ by the indicator of Γ_D before applying the map.
    #[arg(long)]
    pub restrict_psi: bool,
    /// Boundary samples per circle (power of two).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Rows of profile output.
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub tol_ode: Option<f64>,
    #[arg(long)]
    pub tol_eq: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where `family3d` writes its JSON report (stderr if absent).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Values accepted in the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dim: Option<usize>,
    f: Option<String>,
    h: Option<String>,
    #[serde(alias = "V")]
    v: Option<String>,
    lambda2: Option<f64>,
    mmax: Option<usize>,
    nmax: Option<usize>,
    n: Option<i64>,
    #[serde(alias = "K")]
    count: Option<usize>,
    k: Option<usize>,
    t: Option<f64>,
    xi: Option<XiField>,
    #[serde(alias = "A")]
    a: Option<f64>,
    #[serde(alias = "B")]
    b: Option<f64>,
    #[serde(alias = "C")]
    h_scale: Option<f64>,
    c: Option<String>,
    family: Option<FamilyKind>,
    gamma_d: Option<String>,
    gamma_n: Option<String>,
    gamma_d_side: Option<String>,
    gamma_n_side: Option<String>,
    psi: Option<String>,
    restrict_psi: Option<bool>,
    grid: Option<usize>,
    rows: Option<usize>,
    tol_ode: Option<f64>,
    tol_eq: Option<f64>,
    out: Option<PathBuf>,
    report: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum XiField {
    List(Vec<f64>),
    Text(String),
}

/// Errors sorted by exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(Error),
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => 1,
            CliError::Config(_) => 2,
            CliError::Failed(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Compute(e) => write!(f, "computation error: {e}"),
            CliError::Failed(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Compute(e)
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Shortest representation that round-trips, switching to exponent form
/// outside [1e-5, 1e16).
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn merge(mut o: Opts) -> CliResult<Opts> {
    let Some(path) = o.config.clone() else { return Ok(o) };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let c: FileConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    macro_rules! fill {
        ($($field:ident),*) => { $( if o.$field.is_none() { o.$field = c.$field; } )* };
    }
    fill!(dim, f, h, v, lambda2, mmax, nmax, n, count, k, t, a, b, h_scale, c, family, gamma_d, gamma_n);
    fill!(gamma_d_side, gamma_n_side, psi, grid, rows, tol_ode, tol_eq, out, report);
    if o.xi.is_none() {
        o.xi = c.xi.map(|x| match x {
            XiField::List(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            XiField::Text(s) => s,
        });
    }
    o.restrict_psi |= c.restrict_psi.unwrap_or(false);
    Ok(o)
}

/// Parses an expression in x or loads `@file.csv[#column]` as uniform samples on [0, 1].
pub fn load_profile(spec: &str, base: Option<&Path>) -> CliResult<RadialProfile> {
    let spec = spec.trim();
    let Some(rest) = spec.strip_prefix('@') else {
        return RadialProfile::from_expr(spec).map_err(config_err);
    };
    let (file, column) = match rest.rsplit_once('#') {
        Some((f, c)) => (f, Some(c)),
        None => (rest, None),
    };
    let mut path = PathBuf::from(file);
    if path.is_relative() {
        if let Some(b) = base {
            path = b.join(path);
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(&path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(config_err)?.clone();
    let idx = match column {
        None => headers.len().saturating_sub(1),
        Some(c) => match c.parse::<usize>() {
            Ok(i) => i,
            Err(_) => headers
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| CliError::Config(format!("{}: no column `{c}`", path.display())))?,
        },
    };
    let mut samples = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(config_err)?;
        let cell = rec
            .get(idx)
            .ok_or_else(|| CliError::Config(format!("{}: row {} has no column {idx}", path.display(), row + 2)))?;
        let v: f64 = cell
            .parse()
            .map_err(|_| CliError::Config(format!("{}: row {}: `{cell}` is not a number", path.display(), row + 2)))?;
        samples.push(v);
    }
    RadialProfile::from_samples(samples, spec).map_err(config_err)
}

struct Ctx {
    o: Opts,
    base: Option<PathBuf>,
    asm: Assembler,
}

impl Ctx {
    fn new(o: Opts) -> CliResult<Self> {
        let o = merge(o)?;
        let base = o.config.as_ref().and_then(|p| p.parent().map(Path::to_path_buf));
        let tol = o.tol_ode.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol < 1e-2) {
            return Err(CliError::Config(format!("--tol-ode {tol} must lie in (0, 1e-2)")));
        }
        Ok(Ctx { o, base, asm: Assembler::new(Solver::new(tol)) })
    }

    fn dim(&self) -> CliResult<usize> {
        match self.o.dim.unwrap_or(2) {
            d @ (2 | 3) => Ok(d),
            d => Err(CliError::Config(format!("--dim must be 2 or 3, got {d}"))),
        }
    }

    fn profile(&self, src: Option<&String>, default: Option<&str>, name: &str) -> CliResult<Option<RadialProfile>> {
        match src.map(String::as_str).or(default) {
            Some(s) => load_profile(s, self.base.as_deref()).map(Some),
            None => Err(CliError::Config(format!("missing --{name}"))),
        }
    }

    fn f(&self) -> CliResult<RadialProfile> {
        Ok(self.profile(self.o.f.as_ref(), Some("1"), "f")?.unwrap())
    }

    fn h(&self) -> CliResult<RadialProfile> {
        Ok(self.profile(self.o.h.as_ref(), Some("1"), "h")?.unwrap())
    }

    fn v(&self) -> CliResult<Option<RadialProfile>> {
        match &self.o.v {
            Some(s) => Ok(Some(load_profile(s, self.base.as_deref())?)),
            None => Ok(None),
        }
    }

    fn lambda2(&self) -> CliResult<f64> {
        let l = self.o.lambda2.unwrap_or(0.0);
        if !l.is_finite() {
            return Err(CliError::Config("--lambda2 must be finite".into()));
        }
        Ok(if self.o.lambda2_is_eigenvalue_test { l * l } else { l })
    }

    fn setup(&self) -> CliResult<Setup> {
        let v = self.v()?;
        let s = if self.dim()? == 2 { Setup::two_d(self.f()?, v) } else { Setup::three_d(self.f()?, self.h()?, v) };
        s.map_err(config_err)
    }

    fn side(&self, s: Option<&String>, default: Side) -> CliResult<Side> {
        s.map_or(Ok(default), |s| s.parse::<Side>().map_err(config_err))
    }

    fn mask(&self, s: Option<&String>, dim: usize) -> CliResult<BoundaryMask> {
        let m = match s {
            None => BoundaryMask::full(dim),
            Some(s) => BoundaryMask::parse(s).map_err(config_err)?,
        };
        match (&m, dim) {
            (BoundaryMask::Arcs(_), 2) | (BoundaryMask::Rects(_), 3) => Ok(m),
            (BoundaryMask::Arcs(a), 3) => {
                Ok(BoundaryMask::Rects(a.iter().map(|s| (*s, crate::dn_assembler::ArcSet::full())).collect()))
            }
            _ => Err(CliError::Config("rectangle masks (a:b|c:d) need --dim 3".into())),
        }
    }

    fn verifier(&self) -> CliResult<Verifier> {
        let tol_eq = self.o.tol_eq.unwrap_or(1e-8);
        if !(tol_eq > 0.0) {
            return Err(CliError::Config("--tol-eq must be positive".into()));
        }
        Ok(Verifier { asm: self.asm, tol_eq, ..Verifier::default() })
    }

    fn rows(&self) -> usize {
        self.o.rows.unwrap_or(1025).max(2)
    }

    fn emit(&self, text: &str) -> CliResult<()> {
        match &self.o.out {
            Some(p) => fs::write(p, text).map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
            None => io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Config(e.to_string())),
        }
    }
}

fn csv_line(cells: &[String]) -> String {
    let mut s = cells.join(",");
    s.push('\n');
    s
}

fn spectrum(ctx: &Ctx) -> CliResult<()> {
    let setup = ctx.setup()?;
    let count = ctx.o.count.unwrap_or(10);
    if count == 0 {
        return Err(CliError::Config("-K must be at least 1".into()));
    }
    let q = setup.potential(ctx.lambda2()?, ctx.o.n.unwrap_or(0))?;
    let ev = ctx.asm.solver.eigenvalues(&q, count)?;
    let mut out = String::from("k,eigenvalue\n");
    for e in ev {
        out += &csv_line(&[e.k.to_string(), fmt_f64(e.lambda)]);
    }
    ctx.emit(&out)
}

fn guard(ctx: &Ctx, setup: &Setup, lambda2: f64, mmax: usize, nmax: usize) -> CliResult<()> {
    match ctx.asm.frequency_guard(setup, lambda2, mmax, nmax)? {
        GuardOutcome::Pass => Ok(()),
        GuardOutcome::Reject { m, n, delta_abs } => Err(CliError::Compute(Error::Frequency { m, n, delta_abs })),
    }
}

fn dn(ctx: &Ctx) -> CliResult<()> {
    let setup = ctx.setup()?;
    let lambda2 = ctx.lambda2()?;
    let mmax = ctx.o.mmax.unwrap_or(10);
    let nmax = if setup.dim() == 3 { ctx.o.nmax.unwrap_or(mmax) } else { 0 };
    guard(ctx, &setup, lambda2, mmax, nmax)?;
    let blocks = ctx.asm.blocks(&setup, lambda2, mmax, nmax)?;
    let mut out = String::from("m,n,L,T_R,T_L,R\n");
    for b in blocks {
        let n = b.n.map(|n| n.to_string()).unwrap_or_default();
        out += &csv_line(&[b.m.to_string(), n, fmt_f64(b.l), fmt_f64(b.t_r), fmt_f64(b.t_l), fmt_f64(b.r)]);
    }
    ctx.emit(&out)
}

fn trace(ctx: &Ctx) -> CliResult<()> {
    let setup = ctx.setup()?;
    let dim = setup.dim();
    let lambda2 = ctx.lambda2()?;
    let g = ctx.o.grid.unwrap_or(64);
    let mmax = ctx.o.mmax.unwrap_or(g / 2 - 1);
    let nmax = if dim == 3 { ctx.o.nmax.unwrap_or(mmax) } else { 0 };
    let gamma_d = ctx.mask(ctx.o.gamma_d.as_ref(), dim)?;
    let gamma_n = ctx.mask(ctx.o.gamma_n.as_ref(), dim)?;
    let d_side = ctx.side(ctx.o.gamma_d_side.as_ref(), Side::Zero)?;
    let n_side = ctx.side(ctx.o.gamma_n_side.as_ref(), Side::One)?;
    let vars: &[Var] = if dim == 2 { &[Var::Y] } else { &[Var::Y, Var::Z] };
    let src = ctx.o.psi.as_deref().ok_or_else(|| CliError::Config("missing --psi".into()))?;
    let psi_e = parse_with_vars(src, vars).map_err(config_err)?;
    let total = if dim == 2 { g } else { g * g };
    let psi: Vec<Complex64> = (0..total)
        .map(|idx| {
            let (y, z) =
                if dim == 2 { (grid_point(idx, g), 0.0) } else { (grid_point(idx / g, g), grid_point(idx % g, g)) };
            let keep = !ctx.o.restrict_psi || gamma_d.contains(y, z);
            let v = if keep { psi_e.eval_env(&Env { x: 0.0, y, z }) } else { 0.0 };
            Complex64::new(v, 0.0)
        })
        .collect();
    let tr = apply_partial_dn(&ctx.asm, &setup, lambda2, &psi, d_side, &gamma_d, n_side, &gamma_n, mmax, nmax)
        .map_err(|e| match e {
            Error::Support { .. } | Error::Invalid(_) => CliError::Config(e.to_string()),
            other => CliError::Compute(other),
        })?;
    let mut out = String::from("y,z,re,im\n");
    for (y, z, v) in tr.restricted {
        let z = if dim == 2 { String::new() } else { fmt_f64(z) };
        out += &csv_line(&[fmt_f64(y), z, fmt_f64(v.re), fmt_f64(v.im)]);
    }
    ctx.emit(&out)
}

fn parse_xi(s: &str) -> CliResult<XiVector> {
    let entries = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::Config(format!("--xi entry `{p}` is not a number"))))
        .collect::<CliResult<Vec<f64>>>()?;
    if entries.iter().any(|e| !e.is_finite()) {
        return Err(CliError::Config("--xi entries must be finite".into()));
    }
    Ok(XiVector::new(entries))
}

fn deform(ctx: &Ctx) -> CliResult<()> {
    let dim = ctx.dim()?;
    let f = ctx.f()?;
    let lambda2 = ctx.lambda2()?;
    let xi = match (&ctx.o.xi, ctx.o.k, ctx.o.t) {
        (Some(s), _, _) => parse_xi(s)?,
        (None, Some(k), Some(t)) if k >= 1 => XiVector::single(k, t),
        _ => return Err(CliError::Config("give --k and --t, or --xi".into())),
    };
    let support = xi.support();
    let v = ctx.v()?;
    if v.is_none() && lambda2 == 0.0 {
        return Err(CliError::Config("the metric family needs --lambda2 != 0".into()));
    }
    let q = match (&v, dim) {
        (_, 2) => Setup::two_d(f.clone(), v.clone()).map_err(config_err)?.potential(lambda2, 0)?,
        (Some(v), _) => {
            let h = ctx.h()?;
            if (0..=64).any(|i| (h.value(i as f64 / 64.0) - f.value(i as f64 / 64.0)).abs() > 1e-12) {
                eprintln!("note: f != h, so only the n = 0 reduced potential is preserved");
            }
            Setup::three_d(f.clone(), h, Some(v.clone())).map_err(config_err)?.potential(lambda2, 0)?
        }
        (None, _) => return Err(CliError::Config("3D deformations act on V; pass --V".into())),
    };
    let deformer = Deformer::new(ctx.asm.solver);
    let count = support.iter().copied().max().unwrap_or(1);
    let spec = ctx.asm.solver.dirichlet_spectrum(&q, count)?;
    let qt = deformer.deform_potential_xi(&q, &spec, &xi)?;
    let n = ctx.rows();
    let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let (head, rows): (&str, Vec<(f64, f64)>) = match &v {
        None => (
            "x,f_original,f_deformed\n",
            xs.iter().map(|&x| (f.value(x), f.value(x) - (qt.eval(x) - q.eval(x)) / lambda2)).collect(),
        ),
        Some(v) => (
            "x,V_original,V_deformed\n",
            xs.iter().map(|&x| (v.value(x), v.value(x) + (qt.eval(x) - q.eval(x)) / f.value(x))).collect(),
        ),
    };
    if v.is_none() {
        if let Some((x, _)) = xs.iter().zip(&rows).find(|(_, r)| r.1 <= 0.0) {
            eprintln!("note: deformed f is not positive (first at x = {x}); it is a formal profile, not a metric");
        }
    }
    let mut out = String::from(head);
    for (x, (a, b)) in xs.iter().zip(rows) {
        out += &csv_line(&[fmt_f64(*x), fmt_f64(a), fmt_f64(b)]);
    }
    ctx.emit(&out)
}

fn family3d(ctx: &Ctx) -> CliResult<()> {
    if ctx.o.dim.is_some_and(|d| d != 3) {
        return Err(CliError::Config("family3d works in --dim 3".into()));
    }
    let g = Metric3D::new(ctx.f()?, ctx.h()?).map_err(config_err)?;
    let lambda2 = ctx.lambda2()?;
    let kind = ctx.o.family.unwrap_or(FamilyKind::Same);
    let choice = match (&ctx.o.c, kind) {
        (Some(c), _) => FactorChoice::Factor(load_profile(c, ctx.base.as_deref())?),
        (None, FamilyKind::Same) => FactorChoice::Parameter(ctx.o.b.unwrap_or(1.0)),
        (None, FamilyKind::Cross) => FactorChoice::Parameter(ctx.o.a.unwrap_or(2.0)),
    };
    let cutoff = ctx.o.mmax.unwrap_or(8);
    let builder =
        FamilyBuilder { assembler: ctx.asm, h_scale: ctx.o.h_scale.unwrap_or(1.0), cutoff, nmax_potential: 3 };
    let fam = match kind {
        FamilyKind::Same => builder.same_component(&g, lambda2, &choice),
        FamilyKind::Cross => builder.cross_component(&g, lambda2, &choice),
    }
    .map_err(|e| match e {
        Error::Invalid(m) => CliError::Config(m),
        other => CliError::Compute(other),
    })?;
    let n = ctx.rows();
    let mut out = String::from("x,f,h,c,f_tilde,h_tilde\n");
    for row in fam.table(n) {
        out += &csv_line(&row.map(fmt_f64));
    }
    ctx.emit(&out)?;

    let verifier = ctx.verifier()?;
    let r = &fam.report;
    let mut criteria = vec![
        Criterion::below("max |q - q~| over n <= 3", r.potential_deviation.value, 1e-9),
        Criterion::below(
            format!("{} blocks equal (|m|,|n| <= {cutoff})", r.block_entry),
            r.block_deviation.value,
            verifier.tol_eq,
        ),
    ];
    if let Some(d) = r.boundary_constraint_defect {
        criteria.push(Criterion::below("c(1)^3 = c(0)", d, 1e-10));
    }
    let report = Report {
        scenario: format!("family3d-{}", if kind == FamilyKind::Same { "same" } else { "cross" }),
        pass: criteria.iter().all(|c| c.pass),
        criteria,
        environment: verifier.environment(),
    };
    let text = serde_json::to_string_pretty(&json!({ "report": report, "family": r })).map_err(config_err)? + "\n";
    match &ctx.o.report {
        Some(p) => fs::write(p, &text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => eprint!("{text}"),
    }
    if !report.pass {
        return Err(CliError::Failed(report.scenario));
    }
    Ok(())
}

fn verify(ctx: &Ctx, scenario: &str) -> CliResult<()> {
    if scenario == "list" {
        return ctx.emit(&(SCENARIOS.join("\n") + "\n"));
    }
    if !SCENARIOS.contains(&scenario) {
        return Err(CliError::Config(format!("unknown scenario `{scenario}`; known: {}", SCENARIOS.join(", "))));
    }
    let report = ctx.verifier()?.run(scenario)?;
    ctx.emit(&(serde_json::to_string_pretty(&report).map_err(config_err)? + "\n"))?;
    if !report.pass {
        let names: Vec<&str> = report.failed().map(|c| c.name.as_str()).collect();
        return Err(CliError::Failed(format!("{scenario}: {}", names.join("; "))));
    }
    Ok(())
}

fn demo(ctx: &Ctx) -> CliResult<()> {
    let verifier = ctx.verifier()?;
    let mut reports = Vec::new();
    for s in SCENARIOS {
        let r = verifier.run(s)?;
        eprintln!("{} {s}", if r.pass { "PASS" } else { "FAIL" });
        reports.push(r);
    }
    ctx.emit(&(serde_json::to_string_pretty(&reports).map_err(config_err)? + "\n"))?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.scenario.as_str()).collect();
    if !failed.is_empty() {
        return Err(CliError::Failed(failed.join(", ")));
    }
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    if let Ok(n) = std::env::var("CALDERON_THREADS") {
        let n: usize =
            n.trim().parse().map_err(|_| CliError::Config(format!("CALDERON_THREADS=`{n}` is not a count")))?;
        par::set_threads(n);
    }
    match cli.command {
        Command::Spectrum(o) => spectrum(&Ctx::new(o)?),
        Command::Dn(o) => dn(&Ctx::new(o)?),
        Command::Trace(o) => trace(&Ctx::new(o)?),
        Command::Deform(o) => deform(&Ctx::new(o)?),
        Command::Family3d(o) => family3d(&Ctx::new(o)?),
        Command::Verify { scenario, opts } => verify(&Ctx::new(opts)?, &scenario),
        Command::Demo(o) => demo(&Ctx::new(o)?),
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("calderon: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for &x in &[0.0, 1.0, -2.5, 9.869604401089358, 1e-7, 3.2e20, -4.4e-300, 0.1 + 0.2] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(1e-7), "1e-7");
        assert_eq!(fmt_f64(0.5), "0.5");
    }

    #[test]
    fn xi_parsing() {
        assert_eq!(parse_xi("0, 0.5").unwrap().support(), vec![2]);
        assert!(parse_xi("0,a").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
