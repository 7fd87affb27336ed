//! Solving the normal systems and evaluating the fitted approximant
//! `f(x) = Σ c_j φ(‖x − ξ_j‖) + aᵀx + a0`.

mod io;
mod ldlt;
mod qr;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::assembly::{self, data_residual, DesignMatrices, Method, NormalSystem};
use crate::dot::dot2;
use crate::error::{Error, Result};
use crate::fields::ScatteredData;
use crate::kernels::KernelSpec;
use crate::pointgen::{Point2, PointSet};

pub use io::{load_model, save_model};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverPath {
    /// Double-double `LDLᵀ` of `Bλ = f`.
    #[serde(rename = "normal")]
    NormalEq,
    /// Pivoted Householder QR of the rectangular system behind `B`.
    #[serde(rename = "qr")]
    StackedQr,
}

impl fmt::Display for SolverPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverPath::NormalEq => "normal",
            SolverPath::StackedQr => "qr",
        })
    }
}

impl FromStr for SolverPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "normaleq" => Ok(SolverPath::NormalEq),
            "qr" | "stackedqr" => Ok(SolverPath::StackedQr),
            other => Err(Error::Domain(format!(
                "unknown solver `{other}` (expected normal or qr)"
            ))),
        }
    }
}

/// Solver settings.
///
/// Ridges are relative: after symmetric diagonal scaling of `B` to unit
/// diagonal, `ridge·I` is added, i.e. `B + ridge·diag(B)` in the original
/// variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub solver_path: SolverPath,
    /// Bound on `‖Bλ − f‖ / max(‖f‖, 1)`.
    pub tolerance: f64,
    /// Ridge applied from the start (0 for none).
    pub ridge: f64,
    /// First ridge tried after the factorisation breaks down.
    pub ridge_start: f64,
    /// Number of ×10 escalations after `ridge_start` before giving up.
    pub max_escalations: u32,
    /// One step of iterative refinement on the normal-equation path.
    pub refine: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            solver_path: SolverPath::NormalEq,
            tolerance: 1e-8,
            ridge: 0.0,
            ridge_start: 1e-26,
            max_escalations: 6,
            refine: false,
        }
    }
}

impl FitOptions {
    pub fn with_solver(mut self, path: SolverPath) -> Self {
        self.solver_path = path;
        self
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Contract(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite())
            || !(self.ridge_start > 0.0 && self.ridge_start.is_finite())
        {
            return Err(Error::Contract(
                "ridge values must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `R = ‖Ac + Pk − h‖` at the data sites.
    pub residual_norm: f64,
    /// `‖Bλ − f‖ / max(‖f‖, 1)` for the method's own normal system.
    pub normal_residual: f64,
    /// Order-of-magnitude estimate of the condition number of the
    /// diagonally scaled `B` (pivot ratio of the factorisation).
    pub condition_estimate: f64,
    /// Relative ridge actually used; 0 when none was needed.
    pub ridge_used: f64,
    pub solver_path: SolverPath,
    /// Numerical rank retained by the QR path (full order on the normal path).
    pub rank: usize,
    /// Fewer data points than unknowns (`N < M + 3`).
    pub underdetermined: bool,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub lambda: DVector<f64>,
    pub normal_residual: f64,
    pub condition_estimate: f64,
    pub ridge_used: f64,
    pub rank: usize,
}

fn check_system(system: &NormalSystem) -> Result<()> {
    let k = system.dim();
    for j in 0..k {
        for i in 0..k {
            if !system.b()[(i, j)].is_finite() {
                return Err(Error::NonFinite {
                    what: "normal matrix B",
                    row: i,
                    col: j,
                });
            }
        }
        if !system.f()[j].is_finite() {
            return Err(Error::NonFinite {
                what: "right-hand side f",
                row: j,
                col: 0,
            });
        }
    }
    Ok(())
}

/// Diagonal scaling `s_j = 1/√B_jj` (1 for empty columns).
fn equilibration(system: &NormalSystem) -> Vec<f64> {
    (0..system.dim())
        .map(|j| {
            let d = system.b()[(j, j)];
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        })
        .collect()
}

/// `‖Bλ − f‖ / max(‖f‖, 1)` evaluated in double-double.
pub fn normal_residual(system: &NormalSystem, lambda: &DVector<f64>) -> f64 {
    let k = system.dim();
    let mut r2 = 0.0;
    let mut f2 = 0.0;
    for i in 0..k {
        let mut acc = -system.f_dd(i);
        for j in 0..k {
            let b = system.b_dd(i, j);
            acc += b * lambda[j];
        }
        let r = acc.hi() + acc.lo();
        r2 += r * r;
        f2 += system.f()[i] * system.f()[i];
    }
    r2.sqrt() / f2.sqrt().max(1.0)
}

/// Solves `Bλ = f` by `LDLᵀ` of the diagonally scaled matrix. A ridge is
/// added, and escalated, only when the factorisation breaks down or the
/// rounded solution misses the residual tolerance.
pub fn solve_normal(system: &NormalSystem, options: &FitOptions) -> Result<SolveReport> {
    options.validate()?;
    check_system(system)?;
    let k = system.dim();
    let scale = equilibration(system);
    let scaled = ldlt::DdMatrix::from_fn(k, |i, j| system.b_dd(i, j) * scale[i] * scale[j]);
    let rhs: Vec<TwoFloat> = (0..k).map(|i| system.f_dd(i) * scale[i]).collect();

    let mut ridges = Vec::with_capacity(options.max_escalations as usize + 2);
    ridges.push(options.ridge);
    let mut next = options.ridge_start.max(options.ridge);
    for _ in 0..=options.max_escalations {
        if next > options.ridge {
            ridges.push(next);
        }
        next *= 10.0;
    }

    let mut last_estimate = f64::INFINITY;
    let mut best_residual = f64::INFINITY;
    for ridge in ridges {
        let factor = match ldlt::factor(&scaled, ridge) {
            ldlt::Factor::Ok(f) => f,
            ldlt::Factor::Breakdown { condition_estimate } => {
                last_estimate = condition_estimate;
                continue;
            }
        };
        let mut x = factor.solve(&rhs);
        if options.refine {
            // residual of the unridged scaled system
            let r: Vec<TwoFloat> = (0..k)
                .map(|i| {
                    let mut acc = rhs[i];
                    for (j, xj) in x.iter().enumerate() {
                        acc -= scaled.get(i, j) * *xj;
                    }
                    acc
                })
                .collect();
            let dx = factor.solve(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        let lambda = DVector::from_fn(k, |i, _| {
            let v = x[i] * scale[i];
            v.hi() + v.lo()
        });
        let residual = normal_residual(system, &lambda);
        if residual.is_nan() || residual > options.tolerance {
            // huge cancelling weights lose the residual when rounded to f64;
            // a larger ridge trades a little bias for smaller weights
            best_residual = best_residual.min(residual);
            continue;
        }
        return Ok(SolveReport {
            lambda,
            normal_residual: residual,
            condition_estimate: factor.pivot_ratio(),
            ridge_used: ridge,
            rank: k,
        });
    }
    if best_residual.is_finite() {
        return Err(Error::ToleranceNotMet {
            residual: best_residual,
            tolerance: options.tolerance,
        });
    }
    Err(Error::SingularSystem {
        condition_estimate: last_estimate,
    })
}

/// Least-squares solve of the rectangular system behind `system`, with the
/// same column scaling and (fixed) ridge convention as [`solve_normal`].
pub fn solve_stacked(
    design: &DesignMatrices,
    system: &NormalSystem,
    options: &FitOptions,
) -> Result<SolveReport> {
    options.validate()?;
    check_system(system)?;
    let (mut s, mut rhs) = design.rectangular(system.method());
    let k = s.ncols();
    let scale = equilibration(system);
    for (j, sj) in scale.iter().enumerate() {
        s.column_mut(j).scale_mut(*sj);
    }
    if options.ridge > 0.0 {
        let rows = s.nrows();
        let root = options.ridge.sqrt();
        s = s.insert_rows(rows, k, 0.0);
        for j in 0..k {
            s[(rows + j, j)] = root;
        }
        rhs = rhs.insert_rows(rows, k, 0.0);
    }
    let sol = qr::lstsq(s, rhs);
    let lambda = DVector::from_fn(k, |i, _| sol.x[i] * scale[i]);
    let residual = normal_residual(system, &lambda);
    if residual.is_nan() || residual > options.tolerance {
        return Err(Error::ToleranceNotMet {
            residual,
            tolerance: options.tolerance,
        });
    }
    Ok(SolveReport {
        lambda,
        normal_residual: residual,
        condition_estimate: sol.r_ratio * sol.r_ratio,
        ridge_used: options.ridge,
        rank: sol.rank,
    })
}

/// A fitted approximant. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub kernel: KernelSpec,
    pub centers: PointSet,
    pub weights: Vec<f64>,
    pub a: [f64; 2],
    pub a0: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl Model {
    /// `Σ c_j φ(‖x − ξ_j‖) + aᵀx + a0`.
    pub fn evaluate(&self, p: &Point2) -> f64 {
        let terms = self
            .centers
            .iter()
            .zip(&self.weights)
            .map(|(c, &w)| (w, self.kernel.phi(p.distance(c))))
            .chain([(self.a[0], p.x), (self.a[1], p.y), (self.a0, 1.0)]);
        let v = dot2(terms);
        v.hi() + v.lo()
    }

    pub fn evaluate_many(&self, points: &[Point2]) -> Vec<f64> {
        points.par_iter().map(|p| self.evaluate(p)).collect()
    }

    /// `(c; a_x, a_y, a0)`.
    pub fn coefficients(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.weights.len() + 3,
            self.weights
                .iter()
                .copied()
                .chain([self.a[0], self.a[1], self.a0]),
        )
    }

    /// Recomputes `R = ‖Ac + Pk − h‖` against `data`.
    pub fn residual_norm(&self, data: &ScatteredData) -> Result<f64> {
        let design = assembly::build_design(data, &self.centers, &self.kernel)?;
        let (c, k) = split(&self.coefficients(), self.weights.len());
        let r = data_residual(&design, &c, &k);
        Ok(r.iter().map(|v| v * v).sum::<f64>().sqrt())
    }
}

fn split(lambda: &DVector<f64>, m: usize) -> (DVector<f64>, DVector<f64>) {
    (
        lambda.rows(0, m).into_owned(),
        lambda.rows(m, 3).into_owned(),
    )
}

/// Fits `data` with RBFs on `centers` using the chosen formulation.
pub fn fit(
    data: &ScatteredData,
    centers: &PointSet,
    kernel: &KernelSpec,
    method: Method,
    options: &FitOptions,
) -> Result<Model> {
    let design = assembly::build_design(data, centers, kernel)?;
    fit_design(&design, centers, kernel, method, options)
}

/// As [`fit`] with the design matrices already built, so both methods can
/// share one assembly of `A` and `P`.
pub fn fit_design(
    design: &DesignMatrices,
    centers: &PointSet,
    kernel: &KernelSpec,
    method: Method,
    options: &FitOptions,
) -> Result<Model> {
    if design.n_centers() != centers.len() {
        return Err(Error::Contract(format!(
            "design has {} columns but {} centers were given",
            design.n_centers(),
            centers.len()
        )));
    }
    let system = assembly::assemble(design, method)?;
    let report = match options.solver_path {
        SolverPath::NormalEq => solve_normal(&system, options)?,
        SolverPath::StackedQr => solve_stacked(design, &system, options)?,
    };
    let m = centers.len();
    let (c, k) = split(&report.lambda, m);
    let residual = data_residual(design, &c, &k);
    let residual_norm = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(Model {
        kernel: *kernel,
        centers: centers.clone(),
        weights: c.iter().copied().collect(),
        a: [k[0], k[1]],
        a0: k[2],
        method,
        diagnostics: Diagnostics {
            residual_norm,
            normal_residual: report.normal_residual,
            condition_estimate: report.condition_estimate,
            ridge_used: report.ridge_used,
            solver_path: options.solver_path,
            rank: report.rank,
            underdetermined: design.n_data() < m + 3,
            tolerance: options.tolerance,
        },
    })
}

/// Free-function form of [`Model::evaluate`].
pub fn evaluate(model: &Model, point: &Point2) -> f64 {
    model.evaluate(point)
}
