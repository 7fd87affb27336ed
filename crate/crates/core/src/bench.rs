//! Error metrics, method comparison and shape-parameter sweeps.
//!
//! The headline number is the mean-error ratio
//! `mean error(original) / mean error(proposed)`; values above one favour the
//! unconstrained formulation.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{build_design, Method};
use crate::error::{Error, Result};
use crate::fields::{Field, ScatteredData};
use crate::fit::{fit_design, FitOptions, Model};
use crate::kernels::{KernelKind, KernelSpec};
use crate::pointgen::{
    epsilon_points, fmt_f64, halton_points, regular_grid, square_factorization, Domain2, Point2,
    PointSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EvalSet {
    /// The data sites the model was fitted to.
    Training,
    /// `nx × ny` regular grid over the field's domain, corners included.
    Grid { nx: usize, ny: usize },
}

impl EvalSet {
    /// 101×51 for the 2:1 sinc rectangle, 101×101 otherwise.
    pub fn default_for(field: &Field) -> Self {
        match field {
            Field::Sinc2d => EvalSet::Grid { nx: 101, ny: 51 },
            Field::Scaled { inner, .. } => Self::default_for(inner),
            _ => EvalSet::Grid { nx: 101, ny: 101 },
        }
    }
}

impl fmt::Display for EvalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalSet::Training => f.write_str("training"),
            EvalSet::Grid { nx, ny } => write!(f, "grid{nx}x{ny}"),
        }
    }
}

/// Absolute-error statistics of a model over an evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub rms: f64,
    pub eval_set: EvalSet,
    pub count: usize,
}

/// Statistics of `|approx − truth|`.
pub fn error_stats(approx: &[f64], truth: &[f64], eval_set: EvalSet) -> Result<ErrorReport> {
    if approx.len() != truth.len() {
        return Err(Error::Contract(format!(
            "{} approximations against {} reference values",
            approx.len(),
            truth.len()
        )));
    }
    if approx.is_empty() {
        return Err(Error::Contract(
            "error statistics need a non-empty evaluation set".into(),
        ));
    }
    let n = approx.len() as f64;
    let (mut max, mut sum, mut sum_sq) = (0.0f64, 0.0, 0.0);
    for (a, t) in approx.iter().zip(truth) {
        let e = (a - t).abs();
        max = max.max(e);
        sum += e;
        sum_sq += e * e;
    }
    Ok(ErrorReport {
        max_abs: max,
        mean_abs: sum / n,
        rms: (sum_sq / n).sqrt(),
        eval_set,
        count: approx.len(),
    })
}

/// What the model is measured against.
#[derive(Debug, Clone, Copy)]
pub enum Truth<'a> {
    Field(&'a Field),
    Data(&'a ScatteredData),
}

/// Errors of `model` against `truth`. Grid evaluation needs an analytic
/// field; training-point evaluation needs the sample data.
pub fn error_report(model: &Model, truth: Truth<'_>, eval_set: EvalSet) -> Result<ErrorReport> {
    match (truth, eval_set) {
        (Truth::Field(field), EvalSet::Grid { nx, ny }) => {
            let grid = regular_grid(nx, ny, &field.domain())?;
            let approx = model.evaluate_many(&grid.points);
            let exact: Vec<f64> = grid.iter().map(|p| field.value(p)).collect();
            error_stats(&approx, &exact, eval_set)
        }
        (Truth::Data(data), EvalSet::Training) => {
            let approx = model.evaluate_many(&data.points().points);
            error_stats(&approx, data.values(), eval_set)
        }
        (Truth::Data(_), EvalSet::Grid { .. }) => Err(Error::Contract(
            "grid evaluation needs an analytic field, not sample data".into(),
        )),
        (Truth::Field(_), EvalSet::Training) => Err(Error::Contract(
            "training-point evaluation needs the sample data".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Halton,
    Epsilon,
    Grid,
}

impl PointKind {
    pub const ALL: [PointKind; 3] = [PointKind::Halton, PointKind::Epsilon, PointKind::Grid];

    pub fn as_str(self) -> &'static str {
        match self {
            PointKind::Halton => "halton",
            PointKind::Epsilon => "epsilon",
            PointKind::Grid => "grid",
        }
    }
}

impl fmt::Display for PointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PointKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "halton" => Ok(PointKind::Halton),
            "epsilon" => Ok(PointKind::Epsilon),
            "grid" => Ok(PointKind::Grid),
            other => Err(Error::Domain(format!(
                "unknown point distribution `{other}` (expected halton, epsilon or grid)"
            ))),
        }
    }
}

fn default_start_index() -> u64 {
    1
}

fn default_jitter() -> f64 {
    0.5
}

/// Recipe for a generated point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub kind: PointKind,
    /// Total count; grid and epsilon sets factor it as nearly square unless
    /// `nx`/`ny` are given.
    pub count: usize,
    #[serde(default)]
    pub nx: Option<usize>,
    #[serde(default)]
    pub ny: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    #[serde(default = "default_start_index")]
    pub start_index: u64,
    /// Defaults to the field's domain.
    #[serde(default)]
    pub domain: Option<Domain2>,
}

impl PointSpec {
    pub fn new(kind: PointKind, count: usize) -> Self {
        PointSpec {
            kind,
            count,
            nx: None,
            ny: None,
            seed: 0,
            jitter: default_jitter(),
            start_index: 1,
            domain: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_domain(mut self, domain: Domain2) -> Self {
        self.domain = Some(domain);
        self
    }

    fn grid_shape(&self) -> Result<(usize, usize)> {
        match (self.nx, self.ny) {
            (Some(nx), Some(ny)) => Ok((nx, ny)),
            (None, None) => square_factorization(self.count),
            _ => Err(Error::Contract("give both nx and ny, or neither".into())),
        }
    }

    /// Number of points this spec produces.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> Result<usize> {
        match self.kind {
            PointKind::Halton => Ok(self.count),
            PointKind::Epsilon | PointKind::Grid => self.grid_shape().map(|(x, y)| x * y),
        }
    }

    pub fn generate(&self, default_domain: &Domain2) -> Result<PointSet> {
        let domain = self.domain.unwrap_or(*default_domain);
        match self.kind {
            PointKind::Halton => halton_points(self.count, self.start_index, &domain),
            PointKind::Grid => {
                let (nx, ny) = self.grid_shape()?;
                regular_grid(nx, ny, &domain)
            }
            PointKind::Epsilon => {
                let (nx, ny) = self.grid_shape()?;
                epsilon_points(nx, ny, self.jitter, self.seed, &domain)
            }
        }
    }
}

/// Shape parameters: an explicit list or `count` log-spaced values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    List(Vec<f64>),
    LogRange { min: f64, max: f64, count: usize },
}

impl AlphaSpec {
    pub fn single(alpha: f64) -> Self {
        AlphaSpec::List(vec![alpha])
    }

    /// The default sweep for a kernel: 20 log-spaced values over two decades
    /// centred on 0.001 (Gauss), 0.005 (IQ) and 1 (TPS).
    pub fn default_sweep(kind: KernelKind) -> Self {
        let (min, max) = match kind {
            KernelKind::Gauss => (1e-4, 1e-2),
            KernelKind::InverseQuadric => (5e-4, 5e-2),
            KernelKind::ThinPlateSpline => (0.1, 10.0),
        };
        AlphaSpec::LogRange {
            min,
            max,
            count: 20,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let values = match self {
            AlphaSpec::List(v) => v.clone(),
            AlphaSpec::LogRange { min, max, count } => {
                if *count == 0 || !(*min > 0.0 && max >= min) {
                    return Err(Error::Contract(format!(
                        "log range needs 0 < min <= max and count >= 1, got {min}..{max} x{count}"
                    )));
                }
                if *count == 1 {
                    vec![*min]
                } else {
                    let (lo, hi) = (min.ln(), max.ln());
                    (0..*count)
                        .map(|i| (lo + (hi - lo) * i as f64 / (*count - 1) as f64).exp())
                        .collect()
                }
            }
        };
        if let Some(bad) = values.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::Contract(format!(
                "shape parameter {bad} is not positive"
            )));
        }
        Ok(values)
    }
}

/// Where the sample values come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FieldSource {
    Analytic { field: Field },
    External { path: PathBuf },
}

/// Domain of the Franke experiment. At α = 0.005 the IQ kernel is nearly
/// constant across the unit square (αr < 0.008), so the basis degenerates
/// to a quadratic; stretching to [0, 500]² puts αr on the same O(1) scale as
/// the sinc experiment.
pub const FRANKE_EXPERIMENT_DOMAIN: Domain2 = Domain2 {
    x_min: 0.0,
    x_max: 500.0,
    y_min: 0.0,
    y_max: 500.0,
};

fn default_methods() -> Vec<Method> {
    vec![Method::Original, Method::Proposed]
}

/// One experiment: data, centers, kernel, shape parameter(s), methods and
/// evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub field: FieldSource,
    /// Ignored for external data.
    pub data: PointSpec,
    pub centers: PointSpec,
    pub kernel: KernelKind,
    pub alphas: AlphaSpec,
    /// Numerator then denominator of the error ratio.
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Defaults per field; training points for external data.
    #[serde(default)]
    pub eval: Option<EvalSet>,
    #[serde(default)]
    pub fit: FitOptions,
}

impl ExperimentConfig {
    /// 1089 Halton points of the sinc surface, 81 Halton centers, Gauss
    /// with α = 0.001.
    pub fn sinc_gauss() -> Self {
        ExperimentConfig {
            field: FieldSource::Analytic {
                field: Field::Sinc2d,
            },
            data: PointSpec::new(PointKind::Halton, 1089),
            centers: PointSpec::new(PointKind::Halton, 81),
            kernel: KernelKind::Gauss,
            alphas: AlphaSpec::single(0.001),
            methods: default_methods(),
            eval: None,
            fit: FitOptions::default(),
        }
    }

    /// 4225 Halton points of Franke's surface, 17×17 grid centers, IQ with
    /// α = 0.005, on [`FRANKE_EXPERIMENT_DOMAIN`].
    pub fn franke_iq() -> Self {
        Self::franke_iq_on(FRANKE_EXPERIMENT_DOMAIN)
    }

    /// As [`ExperimentConfig::franke_iq`] with Franke's surface stretched
    /// onto `domain`.
    pub fn franke_iq_on(domain: Domain2) -> Self {
        ExperimentConfig {
            field: FieldSource::Analytic {
                field: Field::Franke { domain },
            },
            data: PointSpec::new(PointKind::Halton, 4225),
            centers: PointSpec::new(PointKind::Grid, 289),
            kernel: KernelKind::InverseQuadric,
            alphas: AlphaSpec::single(0.005),
            methods: default_methods(),
            eval: None,
            fit: FitOptions::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0),
            message: e.message().to_string(),
        })
    }

    pub fn analytic_field(&self) -> Option<&Field> {
        match &self.field {
            FieldSource::Analytic { field } => Some(field),
            FieldSource::External { .. } => None,
        }
    }

    /// Domain used for generated centers (and data).
    pub fn domain(&self, data: &ScatteredData) -> Result<Domain2> {
        match &self.field {
            FieldSource::Analytic { field } => Ok(field.domain()),
            FieldSource::External { .. } => bounding_box(&data.points().points),
        }
    }

    pub fn eval_set(&self) -> EvalSet {
        self.eval.unwrap_or_else(|| match self.analytic_field() {
            Some(field) => EvalSet::default_for(field),
            None => EvalSet::Training,
        })
    }

    pub fn load_data(&self) -> Result<ScatteredData> {
        match &self.field {
            FieldSource::Analytic { field } => {
                let sites = self.data.generate(&field.domain())?;
                field.sample(&sites)
            }
            FieldSource::External { path } => ScatteredData::load(path),
        }
    }

    /// Data and centers shared by every fit of this experiment.
    pub fn materialize(&self) -> Result<(ScatteredData, PointSet)> {
        let data = self.load_data()?;
        let centers = self.centers.generate(&self.domain(&data)?)?;
        if data.len() <= centers.len() + 3 {
            return Err(Error::Contract(format!(
                "experiments need more data points than unknowns: N={} , M+3={}",
                data.len(),
                centers.len() + 3
            )));
        }
        Ok((data, centers))
    }
}

fn bounding_box(points: &[Point2]) -> Result<Domain2> {
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    Domain2::new(x0, x1, y0, y1)
}

/// Errors of the two methods on one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub methods: [Method; 2],
    pub reports: [ErrorReport; 2],
    /// `mean_abs[0] / mean_abs[1]`; +∞ when the denominator vanishes.
    pub ratio: f64,
    pub ratio_infinite: bool,
    pub max_ratio: f64,
    #[serde(skip)]
    pub models: [Model; 2],
}

fn ratio(num: f64, den: f64) -> (f64, bool) {
    if den == 0.0 {
        (f64::INFINITY, true)
    } else {
        (num / den, false)
    }
}

/// Fits both methods on identical data and centers at the configuration's
/// single shape parameter and compares their errors.
pub fn compare(config: &ExperimentConfig) -> Result<Comparison> {
    let alphas = config.alphas.values()?;
    let [alpha] = alphas[..] else {
        return Err(Error::Contract(format!(
            "compare takes exactly one shape parameter, got {}",
            alphas.len()
        )));
    };
    let (data, centers) = config.materialize()?;
    compare_on(config, &data, &centers, alpha)
}

/// [`compare`] on already generated data and centers.
pub fn compare_on(
    config: &ExperimentConfig,
    data: &ScatteredData,
    centers: &PointSet,
    alpha: f64,
) -> Result<Comparison> {
    let [first, second] = config.methods[..] else {
        return Err(Error::Contract(format!(
            "comparison needs exactly two methods, got {}",
            config.methods.len()
        )));
    };
    let kernel = KernelSpec::new(config.kernel, alpha)?;
    let design = build_design(data, centers, &kernel)?;
    let eval_set = config.eval_set();
    let truth = match (config.analytic_field(), eval_set) {
        (Some(field), EvalSet::Grid { .. }) => Truth::Field(field),
        _ => Truth::Data(data),
    };
    let fit_one = |method| -> Result<(Model, ErrorReport)> {
        let model = fit_design(&design, centers, &kernel, method, &config.fit)?;
        let report = error_report(&model, truth, eval_set)?;
        Ok((model, report))
    };
    let (m0, r0) = fit_one(first)?;
    let (m1, r1) = fit_one(second)?;
    let (mean_ratio, infinite) = ratio(r0.mean_abs, r1.mean_abs);
    let (max_ratio, _) = ratio(r0.max_abs, r1.max_abs);
    Ok(Comparison {
        methods: [first, second],
        reports: [r0, r1],
        ratio: mean_ratio,
        ratio_infinite: infinite,
        max_ratio,
        models: [m0, m1],
    })
}

/// One line of a shape-parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kernel: KernelKind,
    pub center_distribution: PointKind,
    pub alpha: f64,
    pub mean_err_original: f64,
    pub mean_err_proposed: f64,
    pub ratio: f64,
    pub ratio_infinite: bool,
    pub max_err_original: f64,
    pub max_err_proposed: f64,
    pub cond_original: f64,
    pub cond_proposed: f64,
    pub ridge_original: f64,
    pub ridge_proposed: f64,
    pub data_seed: u64,
    pub center_seed: u64,
    /// Set when either fit failed; the numeric columns are then NaN.
    pub error: Option<String>,
}

pub const SWEEP_HEADER: &str = "kernel,center_distribution,alpha,mean_err_original,mean_err_proposed,ratio,ratio_infinite,max_err_original,max_err_proposed,cond_original,cond_proposed,ridge_original,ridge_proposed,data_seed,center_seed,error";

impl SweepRow {
    fn failed(config: &ExperimentConfig, alpha: f64, error: &Error) -> Self {
        SweepRow {
            kernel: config.kernel,
            center_distribution: config.centers.kind,
            alpha,
            mean_err_original: f64::NAN,
            mean_err_proposed: f64::NAN,
            ratio: f64::NAN,
            ratio_infinite: false,
            max_err_original: f64::NAN,
            max_err_proposed: f64::NAN,
            cond_original: f64::NAN,
            cond_proposed: f64::NAN,
            ridge_original: f64::NAN,
            ridge_proposed: f64::NAN,
            data_seed: config.data.seed,
            center_seed: config.centers.seed,
            error: Some(error.to_string()),
        }
    }

    pub fn to_csv_line(&self) -> String {
        let error = self
            .error
            .as_deref()
            .map(|e| format!("\"{}\"", e.replace('"', "'")))
            .unwrap_or_default();
        [
            self.kernel.to_string(),
            self.center_distribution.to_string(),
            fmt_f64(self.alpha),
            fmt_f64(self.mean_err_original),
            fmt_f64(self.mean_err_proposed),
            fmt_f64(self.ratio),
            self.ratio_infinite.to_string(),
            fmt_f64(self.max_err_original),
            fmt_f64(self.max_err_proposed),
            fmt_f64(self.cond_original),
            fmt_f64(self.cond_proposed),
            fmt_f64(self.ridge_original),
            fmt_f64(self.ridge_proposed),
            self.data_seed.to_string(),
            self.center_seed.to_string(),
            error,
        ]
        .join(",")
    }
}

/// Sweep one kernel and one center distribution over the configured shape
/// parameters. Failed fits become error rows.
pub fn sweep_alpha(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let alphas = config.alphas.values()?;
    if alphas.len() < 2 {
        return Err(Error::Contract(format!(
            "a sweep needs at least two shape parameters, got {}",
            alphas.len()
        )));
    }
    let (data, centers) = config.materialize()?;
    Ok(sweep_on(config, &data, &centers, &alphas))
}

fn sweep_on(
    config: &ExperimentConfig,
    data: &ScatteredData,
    centers: &PointSet,
    alphas: &[f64],
) -> Vec<SweepRow> {
    let methods = ExperimentConfig {
        methods: default_methods(),
        ..config.clone()
    };
    alphas
        .par_iter()
        .map(|&alpha| match compare_on(&methods, data, centers, alpha) {
            Ok(cmp) => {
                let [orig, prop] = &cmp.models;
                SweepRow {
                    kernel: config.kernel,
                    center_distribution: config.centers.kind,
                    alpha,
                    mean_err_original: cmp.reports[0].mean_abs,
                    mean_err_proposed: cmp.reports[1].mean_abs,
                    ratio: cmp.ratio,
                    ratio_infinite: cmp.ratio_infinite,
                    max_err_original: cmp.reports[0].max_abs,
                    max_err_proposed: cmp.reports[1].max_abs,
                    cond_original: orig.diagnostics.condition_estimate,
                    cond_proposed: prop.diagnostics.condition_estimate,
                    ridge_original: orig.diagnostics.ridge_used,
                    ridge_proposed: prop.diagnostics.ridge_used,
                    data_seed: config.data.seed,
                    center_seed: config.centers.seed,
                    error: None,
                }
            }
            Err(e) => SweepRow::failed(config, alpha, &e),
        })
        .collect()
}

/// A grid of sweeps over kernels and center distributions sharing one data
/// set. Each kernel carries its own shape-parameter list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub base: ExperimentConfig,
    pub kernels: Vec<(KernelKind, AlphaSpec)>,
    pub distributions: Vec<PointKind>,
}

impl SweepPlan {
    /// Sinc surface, 1089 Halton data points, 81 centers in each of the
    /// three distributions, all three kernels over their default ranges.
    pub fn sinc_default() -> Self {
        SweepPlan {
            base: ExperimentConfig::sinc_gauss(),
            kernels: KernelKind::ALL
                .iter()
                .map(|&k| (k, AlphaSpec::default_sweep(k)))
                .collect(),
            distributions: PointKind::ALL.to_vec(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0),
            message: e.message().to_string(),
        })
    }

    /// Rows ordered by (kernel, distribution, alpha) as listed in the plan.
    pub fn run(&self) -> Result<Vec<SweepRow>> {
        let data = self.base.load_data()?;
        let domain = self.base.domain(&data)?;
        let mut cells = Vec::new();
        for (kernel, alphas) in &self.kernels {
            let values = alphas.values()?;
            if values.len() < 2 {
                return Err(Error::Contract(format!(
                    "{kernel}: a sweep needs at least two shape parameters"
                )));
            }
            for &dist in &self.distributions {
                let config = ExperimentConfig {
                    kernel: *kernel,
                    alphas: alphas.clone(),
                    centers: PointSpec {
                        kind: dist,
                        ..self.base.centers
                    },
                    ..self.base.clone()
                };
                let centers = config.centers.generate(&domain)?;
                if data.len() <= centers.len() + 3 {
                    return Err(Error::Contract(format!(
                        "N={} data points cannot support M={} centers",
                        data.len(),
                        centers.len()
                    )));
                }
                cells.push((config, centers, values.clone()));
            }
        }
        let rows: Vec<Vec<SweepRow>> = cells
            .par_iter()
            .map(|(config, centers, alphas)| sweep_on(config, &data, centers, alphas))
            .collect();
        Ok(rows.into_iter().flatten().collect())
    }
}

pub fn write_sweep_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, sweep_csv_string(rows)).map_err(|e| Error::io(path, e))
}

pub fn sweep_csv_string(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

/// Parses a sweep CSV written by [`write_sweep_csv`].
pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != SWEEP_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: "unexpected sweep header".into(),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("bad {what}"),
        };
        let num = |i: usize| {
            record[i]
                .parse::<f64>()
                .map_err(|_| bad(SWEEP_HEADER.split(',').nth(i).unwrap_or("")))
        };
        rows.push(SweepRow {
            kernel: record[0].parse()?,
            center_distribution: record[1].parse()?,
            alpha: num(2)?,
            mean_err_original: num(3)?,
            mean_err_proposed: num(4)?,
            ratio: num(5)?,
            ratio_infinite: record[6].parse().map_err(|_| bad("ratio_infinite"))?,
            max_err_original: num(7)?,
            max_err_proposed: num(8)?,
            cond_original: num(9)?,
            cond_proposed: num(10)?,
            ridge_original: num(11)?,
            ridge_proposed: num(12)?,
            data_seed: record[13].parse().map_err(|_| bad("data_seed"))?,
            center_seed: record[14].parse().map_err(|_| bad("center_seed"))?,
            error: Some(record[15].to_string()).filter(|s| !s.is_empty()),
        });
    }
    Ok(rows)
}

/// One evaluation point of an error surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSample {
    pub x: f64,
    pub y: f64,
    pub truth: f64,
    pub approx: f64,
    pub abs_error: f64,
}

/// Model and truth on an `nx × ny` grid over the field's domain, row-major.
pub fn error_grid(model: &Model, truth: &Field, nx: usize, ny: usize) -> Result<Vec<GridSample>> {
    let grid = regular_grid(nx, ny, &truth.domain())?;
    let approx = model.evaluate_many(&grid.points);
    Ok(grid
        .iter()
        .zip(approx)
        .map(|(p, a)| {
            let t = truth.value(p);
            GridSample {
                x: p.x,
                y: p.y,
                truth: t,
                approx: a,
                abs_error: (a - t).abs(),
            }
        })
        .collect())
}

pub fn write_error_grid_csv(samples: &[GridSample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("x,y,true,approx,abs_error\n");
    for s in samples {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(s.x),
            fmt_f64(s.y),
            fmt_f64(s.truth),
            fmt_f64(s.approx),
            fmt_f64(s.abs_error)
        ));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

/// Self-description written next to every experiment output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    pub outputs: Vec<String>,
}

impl<'a, C: Serialize> RunManifest<'a, C> {
    pub fn new(command: &'a str, config: &'a C) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Contract(format!("manifest: {e}")))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_by_hand() {
        let r = error_stats(&[0.0, 0.0], &[1.0, 1.0], EvalSet::Training).unwrap();
        assert_eq!((r.max_abs, r.mean_abs, r.rms, r.count), (1.0, 1.0, 1.0, 2));
        let r = error_stats(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], EvalSet::Training).unwrap();
        assert_eq!((r.max_abs, r.mean_abs, r.rms), (0.0, 0.0, 0.0));
        let r = error_stats(&[0.0, 3.0], &[4.0, 3.0], EvalSet::Training).unwrap();
        assert_eq!((r.max_abs, r.mean_abs), (4.0, 2.0));
        assert!((r.rms - 8.0f64.sqrt()).abs() < 1e-15);
        assert!(error_stats(&[], &[], EvalSet::Training).is_err());
    }

    #[test]
    fn alpha_specs() {
        let v = AlphaSpec::LogRange {
            min: 1e-3,
            max: 1e-1,
            count: 3,
        }
        .values()
        .unwrap();
        assert!((v[1] - 1e-2).abs() < 1e-16);
        assert_eq!(
            AlphaSpec::default_sweep(KernelKind::Gauss)
                .values()
                .unwrap()
                .len(),
            20
        );
        assert!(AlphaSpec::List(vec![1.0, -1.0]).values().is_err());
    }

    #[test]
    fn point_spec_shapes() {
        let d = Field::SINC_DOMAIN;
        assert_eq!(
            PointSpec::new(PointKind::Grid, 81)
                .generate(&d)
                .unwrap()
                .len(),
            81
        );
        assert_eq!(PointSpec::new(PointKind::Epsilon, 81).len().unwrap(), 81);
        assert!(PointSpec::new(PointKind::Grid, 83).generate(&d).is_err());
    }

    #[test]
    fn config_toml() {
        let text = r#"
            kernel = "tps"
            alphas = { min = 0.1, max = 10.0, count = 5 }
            [field]
            type = "analytic"
            field = { type = "sinc2d" }
            [data]
            kind = "halton"
            count = 200
            [centers]
            kind = "epsilon"
            count = 25
            seed = 7
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.kernel, KernelKind::ThinPlateSpline);
        assert_eq!(cfg.centers.seed, 7);
        assert_eq!(cfg.methods, [Method::Original, Method::Proposed]);
        assert_eq!(cfg.eval_set(), EvalSet::Grid { nx: 101, ny: 51 });
        let err = ExperimentConfig::from_toml("kernel = 3").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn sweep_rejects_single_alpha() {
        let cfg = ExperimentConfig::sinc_gauss();
        assert!(matches!(sweep_alpha(&cfg), Err(Error::Contract(_))));
    }
}
