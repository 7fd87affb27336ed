//! Command-line front end: generate data, fit, evaluate and compare.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rbf_lsq::bench::{
    compare, error_grid, error_report, sweep_alpha, write_error_grid_csv, write_sweep_csv,
    AlphaSpec, EvalSet, ExperimentConfig, FieldSource, PointKind, PointSpec, RunManifest,
    SweepPlan, Truth,
};
use rbf_lsq::fit::{load_model, save_model};
use rbf_lsq::{
    assembly, Domain2, Error, Field, FitOptions, KernelKind, KernelSpec, Method, PointSet, Result,
    ScatteredData, SolverPath,
};

#[derive(Parser)]
#[command(
    name = "rbf-lsq",
    version,
    about = "Least-squares RBF approximation with linear reproduction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a test field at generated sites and write `x,y,h` CSV.
    GenData(GenDataArgs),
    /// Fit one model and write it as JSON.
    Fit(FitArgs),
    /// Evaluate a saved model at points or on a grid.
    Eval(EvalArgs),
    /// Fit both formulations on identical inputs and report their errors.
    Compare(CompareArgs),
    /// Shape-parameter sweep written as CSV.
    Sweep(SweepArgs),
    /// Plot-ready error surface of a saved model against an analytic field.
    ErrorGrid(ErrorGridArgs),
}

#[derive(Args, Clone)]
struct FieldArgs {
    /// Analytic test field: sinc2d or franke.
    #[arg(long, default_value = "sinc2d", conflicts_with = "data")]
    field: Field,
    /// Stretch the field onto this rectangle: xmin,xmax,ymin,ymax (franke only).
    #[arg(long, value_name = "RECT")]
    field_domain: Option<Domain2>,
    /// Scattered data CSV (`x,y,h`) instead of an analytic field.
    #[arg(long)]
    data: Option<PathBuf>,
}

impl FieldArgs {
    fn source(&self) -> Result<FieldSource> {
        if let Some(path) = &self.data {
            return Ok(FieldSource::External { path: path.clone() });
        }
        let field = match (&self.field, self.field_domain) {
            (Field::Franke { .. }, Some(domain)) => Field::Franke { domain },
            (_, Some(_)) => {
                return Err(Error::Contract(
                    "--field-domain only applies to the franke field".into(),
                ))
            }
            (field, None) => field.clone(),
        };
        Ok(FieldSource::Analytic { field })
    }
}

#[derive(Args, Clone)]
struct DataPointArgs {
    /// Data-site distribution.
    #[arg(long = "points", default_value = "halton")]
    kind: PointKind,
    /// Number of data sites.
    #[arg(long, default_value_t = 1089)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    /// First Halton index used for data sites.
    #[arg(long, default_value_t = 1)]
    start_index: u64,
}

impl DataPointArgs {
    fn spec(&self) -> PointSpec {
        PointSpec {
            start_index: self.start_index,
            ..PointSpec::new(self.kind, self.n).with_seed(self.data_seed)
        }
    }
}

#[derive(Args, Clone)]
struct CenterArgs {
    /// Center distribution.
    #[arg(long, default_value = "halton", conflicts_with = "centers_file")]
    centers: PointKind,
    /// Centers from an `x,y` CSV.
    #[arg(long)]
    centers_file: Option<PathBuf>,
    /// Number of centers.
    #[arg(long, default_value_t = 81)]
    m: usize,
    #[arg(long, requires = "m_y")]
    m_x: Option<usize>,
    #[arg(long, requires = "m_x")]
    m_y: Option<usize>,
    /// Epsilon drift as a fraction of the grid spacing.
    #[arg(long, default_value_t = 0.5)]
    jitter: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Center rectangle xmin,xmax,ymin,ymax; defaults to the data's domain.
    #[arg(long, value_name = "RECT")]
    domain: Option<Domain2>,
}

impl CenterArgs {
    fn spec(&self) -> PointSpec {
        let count = match (self.m_x, self.m_y) {
            (Some(x), Some(y)) => x * y,
            _ => self.m,
        };
        PointSpec {
            nx: self.m_x,
            ny: self.m_y,
            jitter: self.jitter,
            domain: self.domain,
            ..PointSpec::new(self.centers, count).with_seed(self.seed)
        }
    }
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// normal (double-double LDLᵀ) or qr (pivoted Householder).
    #[arg(long, default_value = "normal")]
    solver: SolverPath,
    /// Relative ridge applied from the start.
    #[arg(long, default_value_t = 0.0)]
    ridge: f64,
    /// Bound on the relative normal-equation residual.
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    /// One step of iterative refinement.
    #[arg(long)]
    refine: bool,
}

impl SolverArgs {
    fn options(&self) -> FitOptions {
        FitOptions {
            solver_path: self.solver,
            ridge: self.ridge,
            tolerance: self.tolerance,
            refine: self.refine,
            ..FitOptions::default()
        }
    }
}

#[derive(Args)]
struct GenDataArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[command(flatten)]
    points: DataPointArgs,
    /// Jitter for epsilon data sites.
    #[arg(long, default_value_t = 0.5)]
    jitter: f64,
    /// Write only the sites (`x,y`), e.g. for use as centers.
    #[arg(long)]
    sites_only: bool,
    /// Read the field and data-site spec from a TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[command(flatten)]
    points: DataPointArgs,
    #[command(flatten)]
    centers: CenterArgs,
    #[arg(long, default_value = "gauss")]
    kernel: KernelKind,
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    #[arg(long, default_value = "proposed")]
    method: Method,
    #[command(flatten)]
    solver: SolverArgs,
    /// TOML experiment file replacing the data, center, kernel and solver flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write B and f as plain text.
    #[arg(long)]
    dump_system: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// `x,y` points (extra columns such as `h` are ignored unless
    /// `--report` is given).
    #[arg(long, conflicts_with = "grid")]
    points: Option<PathBuf>,
    /// Evaluate on an nx,ny grid over the model's center bounding box or
    /// `--domain`.
    #[arg(long, value_parser = parse_pair, value_name = "NX,NY")]
    grid: Option<(usize, usize)>,
    #[arg(long, value_name = "RECT")]
    domain: Option<Domain2>,
    /// Treat `--points` as `x,y,h` data and print error statistics.
    #[arg(long, requires = "points")]
    report: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Built-in configuration: sinc-gauss or franke-iq.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[command(flatten)]
    field: FieldArgs,
    #[command(flatten)]
    points: DataPointArgs,
    #[command(flatten)]
    centers: CenterArgs,
    #[arg(long, default_value = "gauss")]
    kernel: KernelKind,
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Error statistics at training points instead of the default grid.
    #[arg(long, value_parser = ["grid", "training"])]
    eval_at: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the comparison as JSON (a manifest is written alongside).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML sweep plan; without it the built-in sinc sweep over all kernels
    /// and center distributions runs.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Restrict to one kernel.
    #[arg(long)]
    kernel: Option<KernelKind>,
    /// Restrict to one center distribution.
    #[arg(long)]
    centers: Option<PointKind>,
    /// Log range min,max,count overriding the kernel defaults.
    #[arg(long, value_parser = parse_range, value_name = "MIN,MAX,COUNT")]
    alphas: Option<(f64, f64, usize)>,
    #[arg(long, value_parser = ["grid", "training"])]
    eval_at: Option<String>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct ErrorGridArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "sinc2d")]
    field: Field,
    #[arg(long, value_name = "RECT")]
    field_domain: Option<Domain2>,
    #[arg(long, default_value_t = 101)]
    nx: usize,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long, short)]
    out: PathBuf,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected NX,NY")?;
    Ok((
        a.trim().parse().map_err(|e| format!("{e}"))?,
        b.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b, n] = parts[..] else {
        return Err("expected MIN,MAX,COUNT".into());
    };
    Ok((
        a.parse().map_err(|e| format!("{e}"))?,
        b.parse().map_err(|e| format!("{e}"))?,
        n.parse().map_err(|e| format!("{e}"))?,
    ))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn eval_set(flag: Option<&str>, default: EvalSet) -> EvalSet {
    match flag {
        Some("training") => EvalSet::Training,
        Some(_) if default == EvalSet::Training => EvalSet::Grid { nx: 101, ny: 101 },
        _ => default,
    }
}

fn experiment(
    field: &FieldArgs,
    points: &DataPointArgs,
    centers: &CenterArgs,
    kernel: KernelKind,
    alpha: f64,
    solver: &SolverArgs,
) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        field: field.source()?,
        data: points.spec(),
        centers: centers.spec(),
        kernel,
        alphas: AlphaSpec::single(alpha),
        methods: vec![Method::Original, Method::Proposed],
        eval: None,
        fit: solver.options(),
    })
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_manifest<C: Serialize>(command: &str, config: &C, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new(command, config);
    manifest.outputs.push(out.display().to_string());
    manifest.write(manifest_path(out))
}

fn gen_data(args: GenDataArgs) -> Result<()> {
    let (source, spec) = match &args.config {
        Some(path) => {
            let cfg = ExperimentConfig::from_toml(&read_text(path)?)?;
            (cfg.field, cfg.data)
        }
        None => {
            let spec = PointSpec {
                jitter: args.jitter,
                ..args.points.spec()
            };
            (args.field.source()?, spec)
        }
    };
    let FieldSource::Analytic { field } = source else {
        return Err(Error::Contract("gen-data needs an analytic field".into()));
    };
    let sites = spec.generate(&field.domain())?;
    if args.sites_only {
        sites.save_csv(&args.out)
    } else {
        field.sample(&sites)?.save(&args.out)
    }
}

fn fit_cmd(args: FitArgs) -> Result<()> {
    let (cfg, method) = match &args.config {
        Some(path) => {
            let cfg = ExperimentConfig::from_toml(&read_text(path)?)?;
            let method = match cfg.methods[..] {
                [m] => m,
                _ => args.method,
            };
            (cfg, method)
        }
        None => (
            experiment(
                &args.field,
                &args.points,
                &args.centers,
                args.kernel,
                args.alpha,
                &args.solver,
            )?,
            args.method,
        ),
    };
    let alphas = cfg.alphas.values()?;
    let [alpha] = alphas[..] else {
        return Err(Error::Contract(
            "fit takes exactly one shape parameter".into(),
        ));
    };
    let data = cfg.load_data()?;
    let centers = match (&args.centers.centers_file, &args.config) {
        (Some(path), None) => PointSet::load_csv(path)?,
        _ => cfg.centers.generate(&cfg.domain(&data)?)?,
    };
    let kernel = KernelSpec::new(cfg.kernel, alpha)?;
    let design = assembly::build_design(&data, &centers, &kernel)?;
    if let Some(path) = &args.dump_system {
        assembly::assemble(&design, method)?.write_text(path)?;
    }
    let model = rbf_lsq::fit::fit_design(&design, &centers, &kernel, method, &cfg.fit)?;
    if model.diagnostics.underdetermined {
        eprintln!(
            "warning: {} data points for {} unknowns; the fit is not unique",
            data.len(),
            centers.len() + 3
        );
    }
    save_model(&model, &args.out)?;
    let d = &model.diagnostics;
    println!(
        "{method} {kernel} alpha={alpha}: R={:.6e} normal_residual={:.3e} cond~{:.3e} ridge={:e}",
        d.residual_norm,
        d.normal_residual,
        d.condition_estimate,
        d.ridge_used,
        kernel = cfg.kernel
    );
    Ok(())
}

fn eval_cmd(args: EvalArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    if args.report {
        let path = args.points.as_ref().expect("clap enforces --points");
        let data = ScatteredData::load(path)?;
        let r = error_report(&model, Truth::Data(&data), EvalSet::Training)?;
        println!(
            "max_abs={:.17e} mean_abs={:.17e} rms={:.17e} count={}",
            r.max_abs, r.mean_abs, r.rms, r.count
        );
        return Ok(());
    }
    let points = match (&args.points, args.grid) {
        (Some(path), _) => PointSet::load_csv(path)?,
        (None, Some((nx, ny))) => {
            let domain = match args.domain {
                Some(d) => d,
                None => {
                    let c = &model.centers.points;
                    let xs = c.iter().map(|p| p.x);
                    let ys = c.iter().map(|p| p.y);
                    Domain2::new(
                        xs.clone().fold(f64::INFINITY, f64::min),
                        xs.fold(f64::NEG_INFINITY, f64::max),
                        ys.clone().fold(f64::INFINITY, f64::min),
                        ys.fold(f64::NEG_INFINITY, f64::max),
                    )?
                }
            };
            rbf_lsq::pointgen::regular_grid(nx, ny, &domain)?
        }
        (None, None) => {
            return Err(Error::Contract("give --points or --grid".into()));
        }
    };
    let values = model.evaluate_many(&points.points);
    let data = ScatteredData::new(points, values)?;
    match &args.out {
        Some(path) => data.save(path),
        None => {
            print!("{}", data.to_csv_string());
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct CompareOutput<'a> {
    kernel: KernelKind,
    alpha: f64,
    methods: [Method; 2],
    reports: [rbf_lsq::bench::ErrorReport; 2],
    ratio: f64,
    ratio_infinite: bool,
    max_ratio: f64,
    diagnostics: [&'a rbf_lsq::fit::Diagnostics; 2],
}

fn compare_cmd(args: CompareArgs) -> Result<()> {
    let mut cfg = match (&args.config, args.preset.as_deref()) {
        (Some(path), _) => ExperimentConfig::from_toml(&read_text(path)?)?,
        (None, Some("sinc-gauss")) => ExperimentConfig::sinc_gauss(),
        (None, Some("franke-iq")) => ExperimentConfig::franke_iq(),
        (None, Some(other)) => {
            return Err(Error::Contract(format!(
                "unknown preset `{other}` (expected sinc-gauss or franke-iq)"
            )))
        }
        (None, None) => experiment(
            &args.field,
            &args.points,
            &args.centers,
            args.kernel,
            args.alpha,
            &args.solver,
        )?,
    };
    if args.eval_at.is_some() {
        cfg.eval = Some(eval_set(args.eval_at.as_deref(), cfg.eval_set()));
    }
    let cmp = compare(&cfg)?;
    for (method, r) in cmp.methods.iter().zip(&cmp.reports) {
        println!(
            "{method:>8}: max_abs={:.6e} mean_abs={:.6e} rms={:.6e} on {}",
            r.max_abs, r.mean_abs, r.rms, r.eval_set
        );
    }
    let flag = if cmp.ratio_infinite {
        " (proposed error is zero)"
    } else {
        ""
    };
    println!(
        "mean-error ratio {:.6}{flag}, max-error ratio {:.6}",
        cmp.ratio, cmp.max_ratio
    );
    if let Some(out) = &args.out {
        let output = CompareOutput {
            kernel: cfg.kernel,
            alpha: cmp.models[0].kernel.alpha(),
            methods: cmp.methods,
            reports: cmp.reports,
            ratio: cmp.ratio,
            ratio_infinite: cmp.ratio_infinite,
            max_ratio: cmp.max_ratio,
            diagnostics: [&cmp.models[0].diagnostics, &cmp.models[1].diagnostics],
        };
        let text = serde_json::to_string_pretty(&output)
            .map_err(|e| Error::Contract(format!("report: {e}")))?;
        std::fs::write(out, text + "\n").map_err(|e| Error::io(out, e))?;
        write_manifest("compare", &cfg, out)?;
    }
    Ok(())
}

fn sweep_cmd(args: SweepArgs) -> Result<()> {
    let mut plan = match &args.config {
        Some(path) => {
            let text = read_text(path)?;
            // a plan file, or a single-kernel experiment with an alpha range
            match SweepPlan::from_toml(&text) {
                Ok(plan) => plan,
                Err(plan_err) => match ExperimentConfig::from_toml(&text) {
                    Ok(cfg) => {
                        let rows = sweep_alpha(&cfg)?;
                        write_sweep_csv(&rows, &args.out)?;
                        report_sweep(&rows);
                        return write_manifest("sweep", &cfg, &args.out);
                    }
                    Err(_) => return Err(plan_err),
                },
            }
        }
        None => SweepPlan::sinc_default(),
    };
    if let Some(kind) = args.kernel {
        plan.kernels.retain(|(k, _)| *k == kind);
        if plan.kernels.is_empty() {
            plan.kernels.push((kind, AlphaSpec::default_sweep(kind)));
        }
    }
    if let Some((min, max, count)) = args.alphas {
        for (_, spec) in &mut plan.kernels {
            *spec = AlphaSpec::LogRange { min, max, count };
        }
    }
    if let Some(dist) = args.centers {
        plan.distributions = vec![dist];
    }
    if args.eval_at.is_some() {
        plan.base.eval = Some(eval_set(args.eval_at.as_deref(), plan.base.eval_set()));
    }
    let rows = plan.run()?;
    write_sweep_csv(&rows, &args.out)?;
    report_sweep(&rows);
    write_manifest("sweep", &plan, &args.out)
}

fn report_sweep(rows: &[rbf_lsq::bench::SweepRow]) {
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let below = rows
        .iter()
        .filter(|r| r.error.is_none() && r.ratio <= 1.0)
        .count();
    println!(
        "{} rows, {} with ratio <= 1, {} failed fits",
        rows.len(),
        below,
        failed
    );
}

fn error_grid_cmd(args: ErrorGridArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let field = match (args.field, args.field_domain) {
        (Field::Franke { .. }, Some(domain)) => Field::Franke { domain },
        (_, Some(_)) => {
            return Err(Error::Contract(
                "--field-domain only applies to the franke field".into(),
            ))
        }
        (field, None) => field,
    };
    let ny = args.ny.unwrap_or(match field {
        Field::Sinc2d => 51,
        _ => args.nx,
    });
    let samples = error_grid(&model, &field, args.nx, ny)?;
    write_error_grid_csv(&samples, &args.out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::ErrorGrid(a) => error_grid_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_solver_failure() { 2 } else { 1 })
        }
    }
}
