//! JSON model files.
//!
//! ```json
//! {
//!   "format": "rbf-lsq-model", "version": 1,
//!   "kernel": "gauss", "alpha": 0.001, "method": "proposed",
//!   "centers": [[x, y], ...], "weights": [...], "a": [ax, ay], "a0": ...,
//!   "diagnostics": { ... }
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, so a save/load cycle is
//! bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Diagnostics, Model};
use crate::assembly::Method;
use crate::error::{Error, Result};
use crate::kernels::{KernelKind, KernelSpec};
use crate::pointgen::{Point2, PointSet, Provenance};

const FORMAT: &str = "rbf-lsq-model";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    kernel: KernelKind,
    alpha: f64,
    method: Method,
    #[serde(default = "external")]
    centers_provenance: Provenance,
    centers: Vec<[f64; 2]>,
    weights: Vec<f64>,
    a: [f64; 2],
    a0: f64,
    diagnostics: Diagnostics,
}

fn external() -> Provenance {
    Provenance::External
}

impl Model {
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            kernel: self.kernel.kind(),
            alpha: self.kernel.alpha(),
            method: self.method,
            centers_provenance: self.centers.provenance,
            centers: self.centers.iter().map(|p| [p.x, p.y]).collect(),
            weights: self.weights.clone(),
            a: self.a,
            a0: self.a0,
            diagnostics: self.diagnostics.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.format != FORMAT {
            return Err(Error::ModelFormat(format!(
                "unexpected format tag `{}`",
                file.format
            )));
        }
        if file.version != VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported version {} (this build reads version {VERSION})",
                file.version
            )));
        }
        if file.centers.len() != file.weights.len() {
            return Err(Error::ModelFormat(format!(
                "{} centers but {} weights",
                file.centers.len(),
                file.weights.len()
            )));
        }
        let kernel = KernelSpec::new(file.kernel, file.alpha)
            .map_err(|e| Error::ModelFormat(format!("field `alpha`: {e}")))?;
        let numbers = file
            .weights
            .iter()
            .chain(&file.a)
            .chain(std::iter::once(&file.a0));
        if numbers.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::ModelFormat("non-finite coefficient".into()));
        }
        let mut centers = PointSet::external(
            file.centers
                .iter()
                .map(|&[x, y]| Point2::new(x, y))
                .collect(),
        )
        .map_err(|e| Error::ModelFormat(format!("field `centers`: {e}")))?;
        centers.provenance = file.centers_provenance;
        Ok(Model {
            kernel,
            centers,
            weights: file.weights,
            a: file.a,
            a0: file.a0,
            method: file.method,
            diagnostics: file.diagnostics,
        })
    }
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = model.to_json()?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Model::from_json(&text)
}
