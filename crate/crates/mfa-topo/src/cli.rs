//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfa_topo_core::baseline::{marching_squares, pl_jacobi, pl_ridge_valley, sample};
use mfa_topo_core::features::{extract_contour, extract_jacobi, extract_ridge_valley, DerivedFieldH, DerivedFieldHTilde, Extraction};
use mfa_topo_core::field::ScalarField;
use mfa_topo_core::graph::{MetricsReport, TopoGraph};
use mfa_topo_core::synthetic::{AnalyticField, SAMPLES_PER_SPAN};
use mfa_topo_core::tracer::TraceConfig;
use mfa_topo_core::MfaModel;

use crate::config::ConfigFile;
use crate::error::{CliError, Result};
use crate::io::{self, MetricsRow};
use crate::parallel::RayonExecutor;

#[derive(Debug, Parser)]
#[command(name = "mfa-topo", version, about = "Topological descriptors of B-spline models: contours, Jacobi sets, ridge-valley graphs")]
pub struct Cli {
    /// TOML file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for per-span work.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a B-spline model to gridded samples.
    Fit(FitArgs),
    /// Extract an isocontour.
    Contour(ExtractArgs),
    /// Extract the Jacobi set of two models.
    Jacobi(ExtractArgs),
    /// Extract the ridge-valley graph of a model.
    RidgeValley(ExtractArgs),
    /// Marching-squares reference on a sampled model.
    Baseline(BaselineArgs),
    /// Metrics for a range of step divisors, accuracy or connection thresholds.
    Sweep(SweepArgs),
    /// Sample a closed-form benchmark field.
    Synth(SynthArgs),
    /// Recompute metrics of a stored graph.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Contour,
    Jacobi,
    RidgeValley,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Contour => "contour",
            Kind::Jacobi => "jacobi",
            Kind::RidgeValley => "ridge-valley",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        <Kind as ValueEnum>::from_str(s, true).map_err(|_| CliError::Usage(format!("unknown kind `{s}`")))
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub degree: Option<usize>,
    /// Span counts as `N1xN2`.
    #[arg(long)]
    pub spans: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct TraceArgs {
    /// Step divisor k: s = l / k with l the span length.
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Connection threshold as a multiple of s.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Seeds per span and axis.
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Second model for Jacobi sets.
    #[arg(long)]
    pub model_g: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub isovalue: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct OutputArgs {
    /// Graph document (JSON).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Metrics file (JSON or CSV by extension).
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Edge list as CSV for plotting.
    #[arg(long)]
    pub segments: Option<PathBuf>,
    /// Inserted critical points as CSV.
    #[arg(long)]
    pub criticals: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    #[command(flatten)]
    pub trace: TraceArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    #[command(flatten)]
    pub models: ModelArgs,
    /// Lattice cells per span and axis.
    #[arg(long)]
    pub ratio: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    #[command(flatten)]
    pub models: ModelArgs,
    #[command(flatten)]
    pub trace: TraceArgs,
    #[arg(long, value_delimiter = ',')]
    pub k_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub epsilon_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub gamma_list: Option<Vec<f64>>,
    /// CSV table; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long)]
    pub samples_per_span: Option<usize>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    #[command(flatten)]
    pub models: ModelArgs,
    /// Metrics file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| CliError::Usage(format!("missing required option --{flag}")))
}

/// Resolved settings for one run: command line first, then config file.
struct Ctx {
    cfg: ConfigFile,
    exec: RayonExecutor,
}

impl Ctx {
    fn models(&self, m: &ModelArgs) -> (Option<PathBuf>, Option<PathBuf>, Option<f64>) {
        (
            m.model.clone().or_else(|| self.cfg.model.clone()),
            m.model_g.clone().or_else(|| self.cfg.model_g.clone()),
            m.isovalue.or(self.cfg.isovalue),
        )
    }

    fn trace(&self, t: &TraceArgs) -> Trace {
        Trace {
            k: t.k.or(self.cfg.k).unwrap_or(4.0),
            epsilon: t.epsilon.or(self.cfg.epsilon).unwrap_or(1e-10),
            gamma: t.gamma.or(self.cfg.gamma).unwrap_or(2.0),
            seeds: t.seeds.or(self.cfg.seeds),
        }
    }

    fn outputs(&self, o: &OutputArgs) -> OutputArgs {
        OutputArgs {
            output: o.output.clone().or_else(|| self.cfg.output.clone()),
            metrics: o.metrics.clone().or_else(|| self.cfg.metrics.clone()),
            segments: o.segments.clone().or_else(|| self.cfg.segments.clone()),
            criticals: o.criticals.clone().or_else(|| self.cfg.criticals.clone()),
        }
    }

    fn kind(&self, k: Option<Kind>) -> Result<Kind> {
        match k {
            Some(k) => Ok(k),
            None => Kind::parse(&required(self.cfg.kind.clone(), "kind")?),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Trace {
    k: f64,
    epsilon: f64,
    gamma: f64,
    seeds: Option<usize>,
}

impl Trace {
    fn validate(&self) -> Result<()> {
        let k = self.k;
        if !(k >= 2.0 && k.fract() == 0.0 && (k as u64).is_power_of_two()) {
            return Err(CliError::Usage(format!("step divisor k = {k} must be a power of two, at least 2")));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(CliError::Usage("epsilon must be positive".into()));
        }
        if self.gamma.is_nan() || self.gamma < 1.0 {
            return Err(CliError::Usage("gamma must be at least 1 (gamma >= s)".into()));
        }
        if self.seeds == Some(0) {
            return Err(CliError::Usage("seeds must be at least 1".into()));
        }
        Ok(())
    }

    fn config<F: ScalarField + ?Sized>(&self, field: &F) -> TraceConfig {
        let mut c = TraceConfig::for_field(field, self.k).with_gamma_factor(self.gamma);
        c.epsilon = self.epsilon;
        c.seeds_per_dim = self.seeds;
        c
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let threads = cli.threads.or(cfg.threads).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let exec = RayonExecutor::new(threads).map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
    let ctx = Ctx { cfg, exec };
    match cli.command {
        Command::Fit(a) => cmd_fit(&ctx, a),
        Command::Contour(a) => cmd_extract(&ctx, Kind::Contour, a),
        Command::Jacobi(a) => cmd_extract(&ctx, Kind::Jacobi, a),
        Command::RidgeValley(a) => cmd_extract(&ctx, Kind::RidgeValley, a),
        Command::Baseline(a) => cmd_baseline(&ctx, a),
        Command::Sweep(a) => cmd_sweep(&ctx, a),
        Command::Synth(a) => cmd_synth(&ctx, a),
        Command::Metrics(a) => cmd_metrics(&ctx, a),
    }
}

fn parse_spans(s: &str) -> Result<(usize, usize)> {
    let bad = || CliError::Usage(format!("--spans expects N1xN2, got `{s}`"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn cmd_fit(ctx: &Ctx, a: FitArgs) -> Result<()> {
    let input = required(a.input.or_else(|| ctx.cfg.input.clone()), "input")?;
    let output = required(a.output.or_else(|| ctx.cfg.output.clone()), "output")?;
    let degree = a.degree.or(ctx.cfg.degree).unwrap_or(4);
    if degree == 0 || degree > mfa_topo_core::model::MAX_DEGREE {
        return Err(CliError::Usage(format!("--degree must lie in 1..={}", mfa_topo_core::model::MAX_DEGREE)));
    }
    let (s1, s2) = parse_spans(&required(a.spans.or_else(|| ctx.cfg.spans.clone()), "spans")?)?;
    let grid = io::load_grid(&input)?;
    let fit = MfaModel::fit(&grid, degree, s1 + degree, s2 + degree)?;
    io::save_model(&output, &fit.model)?;
    println!("rms {:e} condition {:e}", fit.rms, fit.condition);
    if fit.regularized {
        eprintln!("warning: normal equations were singular; a ridge term was added (condition {:e})", fit.condition);
    }
    Ok(())
}

fn load(path: Option<PathBuf>, flag: &str) -> Result<MfaModel> {
    io::load_model(&required(path, flag)?)
}

/// The field whose level set `kind` extracts, as a closure for residuals.
fn residual_field<'a>(kind: Kind, f: &'a MfaModel, g: Option<&'a MfaModel>) -> Result<Box<dyn Fn(mfa_topo_core::Vec2) -> f64 + 'a>> {
    Ok(match kind {
        Kind::Contour => Box::new(move |p| f.value(p)),
        Kind::Jacobi => {
            let h = DerivedFieldH::new(f, required(g, "model-g")?)?;
            Box::new(move |p| h.value(p))
        }
        Kind::RidgeValley => {
            let h = DerivedFieldHTilde::new(f);
            Box::new(move |p| h.value(p))
        }
    })
}

struct Run {
    extraction: Extraction,
    row: MetricsRow,
}

fn extract(ctx: &Ctx, kind: Kind, f: &MfaModel, g: Option<&MfaModel>, level: f64, t: Trace) -> Result<Run> {
    t.validate()?;
    let cfg = t.config(f);
    let start = Instant::now();
    let ex = match kind {
        Kind::Contour => extract_contour(f, level, &cfg, &ctx.exec)?,
        Kind::Jacobi => extract_jacobi(f, required(g, "model-g")?, &cfg, &ctx.exec)?,
        Kind::RidgeValley => extract_ridge_valley(f, &cfg, &ctx.exec)?,
    };
    let wall = start.elapsed().as_secs_f64();
    let field = residual_field(kind, f, g)?;
    let rep = MetricsReport::compute(&ex.graph, field, level);
    let row = MetricsRow {
        kind: kind.name().into(),
        method: "continuous".into(),
        level,
        step_divisor: Some(t.k),
        ratio: None,
        epsilon: Some(t.epsilon),
        gamma_factor: Some(t.gamma),
        loops: rep.n_loop,
        components: rep.n_cc,
        e_max: rep.e_max,
        e_avg: rep.e_avg,
        vertices: rep.n_vertices,
        edges: rep.n_edges,
        criticals: ex.criticals.len(),
        wall_time: wall,
    };
    Ok(Run { extraction: ex, row })
}

fn write_outputs(out: &OutputArgs, g: &TopoGraph, criticals: Option<&[mfa_topo_core::critical::CriticalPoint]>, row: &MetricsRow) -> Result<()> {
    if let Some(p) = &out.output {
        io::save_graph(p, g)?;
    }
    if let Some(p) = &out.segments {
        io::save_segments(p, g)?;
    }
    if let (Some(p), Some(c)) = (&out.criticals, criticals) {
        io::save_criticals(p, c)?;
    }
    if let Some(p) = &out.metrics {
        io::save_metrics(p, std::slice::from_ref(row))?;
    }
    print!("{}", io::metrics_csv(std::slice::from_ref(row)));
    Ok(())
}

fn level_for(kind: Kind, isovalue: Option<f64>) -> Result<f64> {
    match kind {
        Kind::Contour => required(isovalue, "isovalue"),
        _ => Ok(0.0),
    }
}

fn cmd_extract(ctx: &Ctx, kind: Kind, a: ExtractArgs) -> Result<()> {
    let (mf, mg, iso) = ctx.models(&a.models);
    let level = level_for(kind, iso)?;
    let trace = ctx.trace(&a.trace);
    trace.validate()?;
    let f = load(mf, "model")?;
    let g = if kind == Kind::Jacobi { Some(load(mg, "model-g")?) } else { None };
    let run = extract(ctx, kind, &f, g.as_ref(), level, trace)?;
    for w in &run.extraction.warnings {
        eprintln!("warning: {w}");
    }
    write_outputs(&ctx.outputs(&a.out), &run.extraction.graph, Some(&run.extraction.criticals), &run.row)
}

fn cmd_baseline(ctx: &Ctx, a: BaselineArgs) -> Result<()> {
    let kind = ctx.kind(a.kind)?;
    let (mf, mg, iso) = ctx.models(&a.models);
    let level = level_for(kind, iso)?;
    let ratio = a.ratio.or(ctx.cfg.ratio).unwrap_or(4);
    if ratio == 0 {
        return Err(CliError::Usage("--ratio must be at least 1".into()));
    }
    let f = load(mf, "model")?;
    let g = if kind == Kind::Jacobi { Some(load(mg, "model-g")?) } else { None };
    let start = Instant::now();
    let graph = match kind {
        Kind::Contour => marching_squares(&sample(&f, ratio, &ctx.exec)?, level),
        Kind::Jacobi => pl_jacobi(&f, g.as_ref().expect("loaded above"), ratio, &ctx.exec)?.0,
        Kind::RidgeValley => pl_ridge_valley(&f, ratio, &ctx.exec)?.0,
    };
    let wall = start.elapsed().as_secs_f64();
    let rep = MetricsReport::compute(&graph, residual_field(kind, &f, g.as_ref())?, level);
    let row = MetricsRow {
        kind: kind.name().into(),
        method: "baseline".into(),
        level,
        step_divisor: None,
        ratio: Some(ratio),
        epsilon: None,
        gamma_factor: None,
        loops: rep.n_loop,
        components: rep.n_cc,
        e_max: rep.e_max,
        e_avg: rep.e_avg,
        vertices: rep.n_vertices,
        edges: rep.n_edges,
        criticals: 0,
        wall_time: wall,
    };
    write_outputs(&ctx.outputs(&a.out), &graph, None, &row)
}

fn cmd_sweep(ctx: &Ctx, a: SweepArgs) -> Result<()> {
    let kind = ctx.kind(a.kind)?;
    let (mf, mg, iso) = ctx.models(&a.models);
    let level = level_for(kind, iso)?;
    let base = ctx.trace(&a.trace);
    let lists = [
        a.k_list.or_else(|| ctx.cfg.k_list.clone()),
        a.epsilon_list.or_else(|| ctx.cfg.epsilon_list.clone()),
        a.gamma_list.or_else(|| ctx.cfg.gamma_list.clone()),
    ];
    let traces: Vec<Trace> = match lists {
        [Some(ks), None, None] => ks.into_iter().map(|k| Trace { k, ..base }).collect(),
        [None, Some(es), None] => es.into_iter().map(|epsilon| Trace { epsilon, ..base }).collect(),
        [None, None, Some(gs)] => gs.into_iter().map(|gamma| Trace { gamma, ..base }).collect(),
        _ => return Err(CliError::Usage("give exactly one of --k-list, --epsilon-list, --gamma-list".into())),
    };
    if traces.is_empty() {
        return Err(CliError::Usage("sweep list is empty".into()));
    }
    for t in &traces {
        t.validate()?;
    }
    let f = load(mf, "model")?;
    let g = if kind == Kind::Jacobi { Some(load(mg, "model-g")?) } else { None };
    let mut rows = Vec::with_capacity(traces.len());
    for t in traces {
        rows.push(extract(ctx, kind, &f, g.as_ref(), level, t)?.row);
    }
    match a.output.or_else(|| ctx.cfg.output.clone()) {
        Some(p) => io::save_metrics(&p, &rows),
        None => {
            print!("{}", io::metrics_csv(&rows));
            Ok(())
        }
    }
}

fn cmd_synth(ctx: &Ctx, a: SynthArgs) -> Result<()> {
    let name = required(a.field.or_else(|| ctx.cfg.field.clone()), "field")?;
    let field = AnalyticField::parse(&name).map_err(|e| CliError::Usage(e.to_string()))?;
    let output = required(a.output.or_else(|| ctx.cfg.output.clone()), "output")?;
    let per = a.samples_per_span.or(ctx.cfg.samples_per_span).unwrap_or(SAMPLES_PER_SPAN);
    if per == 0 {
        return Err(CliError::Usage("--samples-per-span must be at least 1".into()));
    }
    let (dx, dy) = field.grid_size(per);
    let (nx, ny) = (a.nx.or(ctx.cfg.nx).unwrap_or(dx), a.ny.or(ctx.cfg.ny).unwrap_or(dy));
    let grid = field.make_grid(nx, ny).map_err(|e| CliError::Usage(e.to_string()))?;
    io::save_grid(&output, &grid)?;
    let (s1, s2) = field.spans();
    println!("{} {nx}x{ny} samples; reference spans {s1}x{s2}", field.name());
    Ok(())
}

fn cmd_metrics(ctx: &Ctx, a: MetricsArgs) -> Result<()> {
    let kind = ctx.kind(a.kind)?;
    let graph_path = required(a.graph.or_else(|| ctx.cfg.graph.clone()), "graph")?;
    let (mf, mg, iso) = ctx.models(&a.models);
    let level = level_for(kind, iso)?;
    let graph = io::load_graph(&graph_path)?;
    let f = load(mf, "model")?;
    let g = if kind == Kind::Jacobi { Some(load(mg, "model-g")?) } else { None };
    let rep = MetricsReport::compute(&graph, residual_field(kind, &f, g.as_ref())?, level);
    let row = MetricsRow {
        kind: kind.name().into(),
        method: "stored".into(),
        level,
        step_divisor: None,
        ratio: None,
        epsilon: None,
        gamma_factor: None,
        loops: rep.n_loop,
        components: rep.n_cc,
        e_max: rep.e_max,
        e_avg: rep.e_avg,
        vertices: rep.n_vertices,
        edges: rep.n_edges,
        criticals: graph.vertices().iter().filter(|v| v.kind != mfa_topo_core::graph::VertexKind::Regular).count(),
        wall_time: 0.0,
    };
    match a.output.or_else(|| ctx.cfg.output.clone()) {
        Some(p) => io::save_metrics(&p, &[row]),
        None => {
            print!("{}", io::metrics_csv(&[row]));
            Ok(())
        }
    }
}

