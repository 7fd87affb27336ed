//! Least-squares radial basis function approximation of scattered 2D data with
//! linear polynomial reproduction.
//!
//! Two formulations are provided side by side:
//!
//! * [`Method::Proposed`] minimises `‖Ac + Pk − h‖²` directly, giving the normal
//!   system `[AᵀA AᵀP; PᵀA PᵀP] λ = [Aᵀh; Pᵀh]`.
//! * [`Method::Original`] appends the side conditions `Σc = 0`, `Σcξ = 0` as
//!   extra rows of the overdetermined system, which adds `ΞᵀΞ` to the `AᵀA`
//!   block of the normal matrix.
//!
//! The [`bench`] module compares both on the sinc and Franke test surfaces.

pub mod assembly;
pub mod bench;
mod dot;
pub mod error;
pub mod fields;
pub mod fit;
pub mod kernels;
pub mod pointgen;

pub use assembly::{DesignMatrices, Method, NormalSystem};
pub use error::{Error, Result};
pub use fields::{Field, ScatteredData};
pub use fit::{FitOptions, Model, SolverPath};
pub use kernels::{KernelKind, KernelSpec};
pub use pointgen::{Domain2, Point2, PointSet, Provenance};
