//! Global radial basis functions with a shape parameter.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Serialised as `gauss`, `iq`, `tps`; parsing ignores case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "&'static str", try_from = "String")]
pub enum KernelKind {
    /// `exp(−(αr)²)`
    Gauss,
    /// `1 / (1 + (αr)²)`
    InverseQuadric,
    /// `(αr)² log(αr)`
    ThinPlateSpline,
}

impl From<KernelKind> for &'static str {
    fn from(kind: KernelKind) -> Self {
        kind.as_str()
    }
}

impl TryFrom<String> for KernelKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [
        KernelKind::Gauss,
        KernelKind::InverseQuadric,
        KernelKind::ThinPlateSpline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Gauss => "gauss",
            KernelKind::InverseQuadric => "iq",
            KernelKind::ThinPlateSpline => "tps",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gauss" => Ok(KernelKind::Gauss),
            "iq" => Ok(KernelKind::InverseQuadric),
            "tps" => Ok(KernelKind::ThinPlateSpline),
            other => Err(Error::Domain(format!(
                "unknown kernel `{other}` (expected gauss, iq or tps)"
            ))),
        }
    }
}

/// A kernel family together with its shape parameter `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSpec {
    kind: KernelKind,
    alpha: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Domain(format!(
                "shape parameter must be positive and finite, got {alpha}"
            )));
        }
        Ok(KernelSpec { kind, alpha })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Evaluates `φ(r)`, rejecting negative or non-finite distances.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::Domain(format!(
                "kernel distance must be finite and non-negative, got {r}"
            )));
        }
        Ok(self.phi(r))
    }

    /// Unchecked evaluation for distances already known to be valid.
    #[inline]
    pub(crate) fn phi(&self, r: f64) -> f64 {
        let t = self.alpha * r;
        match self.kind {
            KernelKind::Gauss => (-(t * t)).exp(),
            KernelKind::InverseQuadric => 1.0 / (1.0 + t * t),
            KernelKind::ThinPlateSpline => {
                if t == 0.0 {
                    0.0
                } else {
                    t * t * t.ln()
                }
            }
        }
    }
}
