//! Command dispatch: one function per verb, each writing its artifacts.

use std::path::PathBuf;

use gdms::measures::semicontinuity_counterexample;
use gdms::multifractal::{beta_surface, estimate_kl, estimate_m, spectrum_scan, BetaSolver};
use gdms::thermo::{thermo_report, PressureEngine};
use gdms::{PotentialVector, SystemDescriptor};
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};
use crate::output::{indexed, num, Artifacts, Metadata};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Verb {
    Pressure,
    Dimension,
    Spectrum,
    Sets,
    Counterexample,
    Beta,
}

impl Verb {
    pub fn name(&self) -> &'static str {
        match self {
            Verb::Pressure => "pressure",
            Verb::Dimension => "dimension",
            Verb::Spectrum => "spectrum",
            Verb::Sets => "sets",
            Verb::Counterexample => "counterexample",
            Verb::Beta => "beta",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("computation failed: {0}")]
    Compute(#[from] gdms::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub verbose: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub summary: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Parses, validates and runs `verb`; the worker pool covers the whole run.
pub fn run(verb: Verb, config_text: &str, opts: &RunOptions) -> Result<Outcome, RunError> {
    let cfg = RunConfig::parse(config_text)?;
    cfg.numerics.validate()?;
    let workers = opts.workers.or(cfg.numerics.workers);
    if workers == Some(0) {
        return Err(ConfigError::new("--workers", "must be at least 1").into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Io(std::io::Error::other(e)))?;
    pool.install(|| {
        let ctx = Context::new(verb, &cfg, config_text, opts)?;
        match verb {
            Verb::Pressure => pressure(ctx),
            Verb::Dimension => dimension(ctx),
            Verb::Spectrum => spectrum(ctx),
            Verb::Sets => sets(ctx),
            Verb::Counterexample => counterexample(ctx),
            Verb::Beta => beta(ctx),
        }
    })
}

struct Context<'a> {
    cfg: &'a RunConfig,
    sys: Option<SystemDescriptor>,
    j: PotentialVector,
    seed: u64,
    art: Artifacts,
    verbose: bool,
}

impl<'a> Context<'a> {
    fn new(verb: Verb, cfg: &'a RunConfig, text: &str, opts: &RunOptions) -> Result<Self, RunError> {
        let sys = match verb {
            Verb::Counterexample => None,
            _ => Some(cfg.system()?),
        };
        let j = cfg.potential.build()?;
        let seed = opts.seed.unwrap_or(cfg.numerics.seed);
        let truncation = sys.as_ref().map_or(0, |s| cfg.numerics.truncation_for(s));
        let meta = Metadata::new(verb.name(), text, seed, cfg.numerics.n, truncation, rayon::current_num_threads());
        let art = Artifacts::new(&opts.out, meta)?;
        Ok(Context { cfg, sys, j, seed, art, verbose: opts.verbose })
    }

    fn sys(&self) -> &SystemDescriptor {
        self.sys.as_ref().expect("system is built for every verb that needs it")
    }

    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[gdms] {}", msg.as_ref());
        }
    }

    fn solver(&self) -> Result<BetaSolver, RunError> {
        let mut opts = self.cfg.numerics.beta(self.sys());
        opts.enclose = false;
        Ok(BetaSolver::new(self.sys(), &self.j, opts)?)
    }

    fn finish(self, summary: Vec<String>) -> Outcome {
        Outcome { summary, files: self.art.written().to_vec() }
    }
}

fn check_dim(path: &str, got: usize, want: usize) -> Result<(), ConfigError> {
    if got != want {
        return Err(ConfigError::new(path, format!("expected {want} coordinates, got {got}")));
    }
    Ok(())
}

fn pressure(mut ctx: Context) -> Result<Outcome, RunError> {
    let cfg = ctx.cfg;
    let section = cfg.section(&cfg.pressure, "pressure")?;
    let d = ctx.j.dim();
    let queries = section.queries(d)?;
    let n = &cfg.numerics;
    let trunc = n.truncation_for(ctx.sys());
    let engine = PressureEngine::new(ctx.sys(), &ctx.j, n.n, trunc, n.method(), &n.kernel())?;
    ctx.log(format!("{} queries, n = {}, N = {trunc}, ratio = {}", queries.len(), n.n, engine.is_ratio()));
    let mut header = indexed("t", d);
    header.extend(["beta", "lower", "upper", "n", "N", "tail_bound", "exact"].map(String::from));
    let mut rows = Vec::new();
    let mut failure = None;
    for (t, b) in &queries {
        match engine.bracket(t, *b) {
            Ok(p) => {
                let mut r: Vec<String> = t.iter().map(|&x| num(x)).collect();
                r.extend([num(*b), num(p.lower), num(p.upper), p.n.to_string(), p.truncation.to_string(), num(p.tail_bound), p.exact.to_string()]);
                rows.push(r);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    ctx.art.csv("pressure.csv", &header, &rows)?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let summary = vec![format!("{} pressure brackets written", rows.len())];
    Ok(ctx.finish(summary))
}

fn dimension(mut ctx: Context) -> Result<Outcome, RunError> {
    let cfg = ctx.cfg;
    let section = cfg.dimension.clone().unwrap_or_default();
    if let Some(t) = section.tol {
        if !(t > 0.0) {
            return Err(ConfigError::new("dimension.tol", "must be positive").into());
        }
    }
    let opts = cfg.numerics.bowen(ctx.sys(), section.tol);
    let report = thermo_report(ctx.sys(), &opts, &section.probe_t)?;
    ctx.art.json("dimension.json", &report)?;
    let summary = vec![
        format!("dimension in [{}, {}]", num(report.hausdorff_dim.lo), num(report.hausdorff_dim.hi)),
        format!("regularity: {:?}", report.regularity),
    ];
    Ok(ctx.finish(summary))
}

fn spectrum(mut ctx: Context) -> Result<Outcome, RunError> {
    let cfg = ctx.cfg;
    let section = cfg.section(&cfg.spectrum, "spectrum")?.clone();
    let d = ctx.j.dim();
    let lopts = section.legendre.options("spectrum.legendre")?;
    if section.alpha.is_none() && section.surface.is_none() {
        return Err(ConfigError::new("spectrum", "request an alpha grid, a surface grid, or both").into());
    }
    if let Some(g) = &section.alpha {
        g.validate("spectrum.alpha", d)?;
    }
    if let Some(g) = &section.surface {
        g.validate("spectrum.surface", d)?;
    }
    let solver = ctx.solver()?;
    let mut summary = Vec::new();
    if let Some(g) = &section.surface {
        let grid = g.points();
        ctx.log(format!("surface over {} points", grid.len()));
        let surf = beta_surface(&solver, &grid)?;
        let mut header = indexed("t", d);
        header.push("beta".into());
        let rows: Vec<Vec<String>> = surf
            .iter()
            .map(|p| p.t.iter().map(|&x| num(x)).chain(std::iter::once(num(p.beta))).collect())
            .collect();
        ctx.art.csv("surface.csv", &header, &rows)?;
        summary.push(format!("{} surface points", rows.len()));
    }
    if let Some(g) = &section.alpha {
        let grid = g.points();
        ctx.log(format!("Legendre transform at {} points", grid.len()));
        let pts = spectrum_scan(&solver, &grid, &lopts);
        let mut header = indexed("alpha", d);
        header.extend(["beta_hat".to_string(), "status".to_string()]);
        header.extend(indexed("t_star", d));
        header.extend(["beta_at_t_star", "grad_residual", "iterations"].map(String::from));
        let rows: Vec<Vec<String>> = pts
            .iter()
            .map(|p| {
                let mut r: Vec<String> = p.alpha.iter().map(|&x| num(x)).collect();
                r.push(num(p.beta_hat));
                r.push(serde_json::to_value(p.status).unwrap().as_str().unwrap_or_default().to_string());
                match &p.minimizer_t {
                    Some(t) => r.extend(t.iter().map(|&x| num(x))),
                    None => r.extend(std::iter::repeat_n(String::new(), d)),
                }
                r.push(p.beta_at_minimizer.map(num).unwrap_or_default());
                r.push(num(p.grad_residual));
                r.push(p.iterations.to_string());
                r
            })
            .collect();
        ctx.art.csv("spectrum.csv", &header, &rows)?;
        let interior = pts.iter().filter(|p| p.status == gdms::multifractal::SpectrumStatus::Interior).count();
        summary.push(format!("{} spectrum points, {interior} interior", rows.len()));
    }
    Ok(ctx.finish(summary))
}

#[derive(Serialize)]
struct SetsReport {
    zero_in_m: bool,
    minimizer: Option<Vec<f64>>,
    minimizer_grad_norm: Option<f64>,
    degenerate: bool,
    m_hull: Vec<Vec<f64>>,
    l_hull: Vec<Vec<f64>>,
    max_m_distance: f64,
    max_k_distance: f64,
    eps: f64,
    consistent: bool,
}

fn sets(mut ctx: Context) -> Result<Outcome, RunError> {
    let cfg = ctx.cfg;
    let section = cfg.section(&cfg.sets, "sets")?.clone();
    let d = ctx.j.dim();
    section.t_grid.validate("sets.t_grid", d)?;
    let lopts = section.legendre.options("sets.legendre")?;
    let solver = ctx.solver()?;
    let grid = section.t_grid.points();
    ctx.log(format!("gradient cloud over {} points", grid.len()));
    let m = estimate_m(&solver, &grid, &lopts)?;
    let grads: Vec<Vec<f64>> = m.cloud.iter().map(|c| c.1.clone()).collect();
    let kl = estimate_kl(ctx.sys(), &ctx.j, &grads, &section.kl(ctx.sys(), ctx.seed))?;

    let mut header = indexed("t", d);
    header.extend(indexed("grad", d));
    let rows: Vec<Vec<String>> = m.cloud.iter().map(|(t, g)| t.iter().chain(g).map(|&x| num(x)).collect()).collect();
    ctx.art.csv("m_points.csv", &header, &rows)?;

    let mut header = vec!["cycle".to_string()];
    header.extend(indexed("q", d));
    let rows: Vec<Vec<String>> = kl
        .k_points
        .iter()
        .map(|(w, q)| std::iter::once(w.to_string()).chain(q.iter().map(|&x| num(x))).collect())
        .collect();
    ctx.art.csv("k_points.csv", &header, &rows)?;

    let rows: Vec<Vec<String>> = kl.l_points.iter().map(|q| q.iter().map(|&x| num(x)).collect()).collect();
    ctx.art.csv("l_points.csv", &indexed("q", d), &rows)?;

    let report = SetsReport {
        zero_in_m: m.zero_in_m,
        minimizer: m.minimizer.clone(),
        minimizer_grad_norm: m.minimizer_grad_norm,
        degenerate: m.degenerate,
        m_hull: m.hull.clone(),
        l_hull: kl.l_hull.clone(),
        max_m_distance: kl.max_m_distance,
        max_k_distance: kl.max_k_distance,
        eps: kl.eps,
        consistent: kl.consistent,
    };
    ctx.art.json("sets.json", &report)?;
    let summary = vec![
        format!("zero in M: {}", m.zero_in_m),
        format!("inclusion check: {}", if kl.consistent { "consistent" } else { "violated" }),
    ];
    Ok(ctx.finish(summary))
}

fn counterexample(mut ctx: Context) -> Result<Outcome, RunError> {
    let cfg = ctx.cfg;
    let section = cfg.section(&cfg.counterexample, "counterexample")?.clone();
    if !section.m.is_finite() {
        return Err(ConfigError::new("counterexample.m", "must be finite").into());
    }
    if section.n.is_empty() {
        return Err(ConfigError::new("counterexample.n", "at least one n is required").into());
    }
    for (i, &n) in section.n.iter().enumerate() {
        if !(n >= 2.0 && n.is_finite() && n.fract() == 0.0) {
            return Err(ConfigError::new(format!("counterexample.n[{i}]"), "must be an integer >= 2").into());
        }
    }
    let report = semicontinuity_counterexample(section.m, &section.n)?;
    let header: Vec<String> = ["n", "c_n", "valid", "i_mean_lower", "i_mean_upper", "floor_2m", "gap_k1", "gap_k2", "gap_k3"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![num(r.n), num(r.c_n), r.valid.to_string(), num(r.i_mean.lo), num(r.i_mean.hi), num(r.floor)];
            v.extend(r.cylinder_gap.iter().map(|&g| num(g)));
            v
        })
        .collect();
    ctx.art.csv("counterexample.csv", &header, &rows)?;
    ctx.art.json("counterexample.json", &report)?;
    let summary = vec![
        format!("limit int I dmu in [{}, {}]", num(report.limit_i_mean.lo), num(report.limit_i_mean.hi)),
        format!("verdict: {:?} ({})", report.verdict, report.reason),
    ];
    Ok(ctx.finish(summary))
}

#[derive(Serialize)]
struct BetaRecord {
    point: gdms::multifractal::BetaPoint,
    gradient: Option<gdms::multifractal::GradientReport>,
    hessian: Option<gdms::multifractal::HessianReport>,
}

fn beta(mut ctx: Context) -> Result<Outcome, RunError> {
    let cfg = ctx.cfg;
    let section = cfg.section(&cfg.beta, "beta")?.clone();
    let d = ctx.j.dim();
    section.t.validate("beta.t", d)?;
    let grid = section.t.points();
    if grid.is_empty() {
        return Err(ConfigError::new("beta.t", "at least one point is required").into());
    }
    let solver = BetaSolver::new(ctx.sys(), &ctx.j, cfg.numerics.beta(ctx.sys()))?;
    let mut records = Vec::new();
    let mut failure = None;
    for t in &grid {
        check_dim("beta.t", t.len(), d)?;
        let rec = (|| -> gdms::Result<BetaRecord> {
            let point = solver.solve(t)?;
            let (gradient, hessian) = if section.derivatives {
                (Some(solver.grad_beta(t)?), Some(solver.hessian_beta(t)?))
            } else {
                (None, None)
            };
            Ok(BetaRecord { point, gradient, hessian })
        })();
        match rec {
            Ok(r) => records.push(r),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let mut header = indexed("t", d);
    header.extend(["lower", "upper", "central"].map(String::from));
    header.extend(indexed("grad", d));
    header.extend(indexed("grad_fd", d));
    header.extend(["fd_discrepancy", "width_limited", "required_n"].map(String::from));
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let p = &r.point;
            let mut v: Vec<String> = p.t.iter().map(|&x| num(x)).collect();
            v.extend([num(p.beta.lo), num(p.beta.hi), num(p.beta_central)]);
            v.extend(p.grad.iter().map(|&x| num(x)));
            match &r.gradient {
                Some(g) => {
                    v.extend(g.finite_difference.iter().map(|&x| num(x)));
                    v.push(num(g.max_discrepancy));
                }
                None => {
                    v.extend(std::iter::repeat_n(String::new(), d + 1));
                }
            }
            v.push(p.width_limited.to_string());
            v.push(p.required_n.map(|n| n.to_string()).unwrap_or_default());
            v
        })
        .collect();
    ctx.art.csv("beta.csv", &header, &rows)?;
    ctx.art.json("beta.json", &records)?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let summary = records
        .iter()
        .map(|r| format!("beta({:?}) in [{}, {}]", r.point.t, num(r.point.beta.lo), num(r.point.beta.hi)))
        .collect();
    Ok(ctx.finish(summary))
}
