//! Design matrices and the two normal systems built from them.
//!
//! With `S = [A P]` the stacked design matrix, the proposed normal system is
//! `SᵀS λ = Sᵀh`. The original constrained formulation augments the RBF block
//! with the side-condition matrix `Ξ`, adding `ΞᵀΞ` to the top-left `AᵀA`
//! block while leaving the right-hand side unchanged.
//!
//! Every entry of `B` and `f` is a compensated dot product carried as a
//! double-double; [`NormalSystem::b`] exposes the rounded values and the
//! solver consumes the full-width ones.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::dot::dot2;
use crate::error::{Error, Result};
use crate::fields::ScatteredData;
use crate::kernels::KernelSpec;
use crate::pointgen::{fmt_f64, PointSet};

/// Which least-squares formulation to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Side conditions folded into the normal equations (`AᵀA + ΞᵀΞ`).
    Original,
    /// Plain minimisation of `‖Ac + Pk − h‖²`.
    Proposed,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Original => "original",
            Method::Proposed => "proposed",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "original" => Ok(Method::Original),
            "proposed" => Ok(Method::Proposed),
            other => Err(Error::Domain(format!(
                "unknown method `{other}` (expected original or proposed)"
            ))),
        }
    }
}

/// `A` (N×M kernel values), `P` (N×3 rows `(x, y, 1)`), `Ξ` (3×M rows
/// `ξ`, `η`, `1`) and the data vector `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    pub a: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub xi: DMatrix<f64>,
    pub h: DVector<f64>,
}

impl DesignMatrices {
    pub fn n_data(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_centers(&self) -> usize {
        self.a.ncols()
    }

    /// `[A P]`, N×(M+3).
    pub fn stacked(&self) -> DMatrix<f64> {
        let (n, m) = self.a.shape();
        let mut s = DMatrix::zeros(n, m + 3);
        s.columns_mut(0, m).copy_from(&self.a);
        s.columns_mut(m, 3).copy_from(&self.p);
        s
    }

    /// The rectangular least-squares system whose normal equations are the
    /// given method's `Bλ = f`: `[A P]λ ≈ h` for the proposed method and
    /// `[A P; Ξ 0]λ ≈ [h; 0]` for the original one.
    pub fn rectangular(&self, method: Method) -> (DMatrix<f64>, DVector<f64>) {
        let s = self.stacked();
        match method {
            Method::Proposed => (s, self.h.clone()),
            Method::Original => {
                let (n, m) = self.a.shape();
                let mut t = DMatrix::zeros(n + 3, m + 3);
                t.rows_mut(0, n).copy_from(&s);
                t.view_mut((n, 0), (3, m)).copy_from(&self.xi);
                let mut rhs = DVector::zeros(n + 3);
                rhs.rows_mut(0, n).copy_from(&self.h);
                (t, rhs)
            }
        }
    }
}

/// Builds `A`, `P`, `Ξ` and `h` for the given data, centers and kernel.
pub fn build_design(
    data: &ScatteredData,
    centers: &PointSet,
    kernel: &KernelSpec,
) -> Result<DesignMatrices> {
    let n = data.len();
    let m = centers.len();
    if n == 0 || m == 0 {
        return Err(Error::Contract(format!(
            "need at least one data point and one center, got N={n}, M={m}"
        )));
    }
    let sites = &data.points().points;

    // row-parallel; each entry depends only on its own (i, j)
    let rows: Vec<Vec<f64>> = sites
        .par_iter()
        .map(|x| centers.iter().map(|c| kernel.phi(x.distance(c))).collect())
        .collect();
    let mut a = DMatrix::zeros(n, m);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "design matrix A",
                    row: i,
                    col: j,
                });
            }
            a[(i, j)] = v;
        }
    }

    let p = DMatrix::from_fn(n, 3, |i, k| match k {
        0 => sites[i].x,
        1 => sites[i].y,
        _ => 1.0,
    });
    let xi = DMatrix::from_fn(3, m, |k, j| match k {
        0 => centers.points[j].x,
        1 => centers.points[j].y,
        _ => 1.0,
    });
    let h = DVector::from_column_slice(data.values());
    Ok(DesignMatrices { a, p, xi, h })
}

/// `Bλ = f` with `B` of order M+3. Entries are held as high and low words of
/// a double-double; `b` and `f` are the correctly rounded f64 values.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalSystem {
    b: DMatrix<f64>,
    b_lo: DMatrix<f64>,
    f: DVector<f64>,
    f_lo: DVector<f64>,
    n_centers: usize,
    method: Method,
}

impl NormalSystem {
    /// Builds a system from plain f64 entries. `b` must be exactly symmetric.
    pub fn from_parts(
        b: DMatrix<f64>,
        f: DVector<f64>,
        n_centers: usize,
        method: Method,
    ) -> Result<Self> {
        let k = b.nrows();
        if b.ncols() != k || f.len() != k || n_centers > k {
            return Err(Error::Contract(format!(
                "normal system shape mismatch: B is {}x{}, f has {} entries, {n_centers} centers",
                b.nrows(),
                b.ncols(),
                f.len()
            )));
        }
        for i in 0..k {
            for j in 0..i {
                if b[(i, j)].to_bits() != b[(j, i)].to_bits() {
                    return Err(Error::Contract(format!("B is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(NormalSystem {
            b_lo: DMatrix::zeros(k, k),
            f_lo: DVector::zeros(k),
            b,
            f,
            n_centers,
            method,
        })
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn f(&self) -> &DVector<f64> {
        &self.f
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    pub fn n_centers(&self) -> usize {
        self.n_centers
    }

    #[inline]
    pub(crate) fn b_dd(&self, i: usize, j: usize) -> TwoFloat {
        TwoFloat::new_add(self.b[(i, j)], self.b_lo[(i, j)])
    }

    #[inline]
    pub(crate) fn f_dd(&self, i: usize) -> TwoFloat {
        TwoFloat::new_add(self.f[i], self.f_lo[i])
    }

    /// Writes `B` then `f` as whitespace-separated rows, 17 significant digits.
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let k = self.dim();
        let mut out = format!(
            "# normal system method={} order={k} centers={}\n# B\n",
            self.method, self.n_centers
        );
        for i in 0..k {
            let row: Vec<String> = (0..k).map(|j| fmt_f64(self.b[(i, j)])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out.push_str("# f\n");
        let f: Vec<String> = self.f.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&f.join(" "));
        out.push('\n');
        std::fs::File::create(path)
            .and_then(|mut file| file.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

fn check_finite(b: &DMatrix<f64>, f: &DVector<f64>) -> Result<()> {
    let (rows, cols) = b.shape();
    for j in 0..cols {
        for i in 0..rows {
            if !b[(i, j)].is_finite() {
                return Err(Error::NonFinite {
                    what: "normal matrix B",
                    row: i,
                    col: j,
                });
            }
        }
    }
    if let Some(i) = f.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "right-hand side f",
            row: i,
            col: 0,
        });
    }
    Ok(())
}

/// Gram matrix `SᵀS` (upper triangle computed, lower mirrored) and `Sᵀh`.
fn gram(d: &DesignMatrices) -> (Vec<TwoFloat>, Vec<TwoFloat>, usize) {
    let s = d.stacked();
    let k = s.ncols();
    let cols: Vec<&[f64]> = (0..k)
        .map(|j| {
            let start = j * s.nrows();
            &s.as_slice()[start..start + s.nrows()]
        })
        .collect();
    let h = d.h.as_slice();

    let upper: Vec<Vec<TwoFloat>> = (0..k)
        .into_par_iter()
        .map(|j| {
            (j..k)
                .map(|l| dot2(cols[j].iter().copied().zip(cols[l].iter().copied())))
                .collect()
        })
        .collect();
    let mut b = vec![TwoFloat::from(0.0); k * k];
    for (j, row) in upper.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            let l = j + offset;
            b[j * k + l] = v;
            b[l * k + j] = v;
        }
    }
    let f = cols
        .iter()
        .map(|c| dot2(c.iter().copied().zip(h.iter().copied())))
        .collect();
    (b, f, k)
}

fn into_system(
    b: Vec<TwoFloat>,
    f: Vec<TwoFloat>,
    k: usize,
    n_centers: usize,
    method: Method,
) -> Result<NormalSystem> {
    let b_hi = DMatrix::from_fn(k, k, |i, j| b[i * k + j].hi());
    let b_lo = DMatrix::from_fn(k, k, |i, j| b[i * k + j].lo());
    let f_hi = DVector::from_fn(k, |i, _| f[i].hi());
    let f_lo = DVector::from_fn(k, |i, _| f[i].lo());
    check_finite(&b_hi, &f_hi)?;
    Ok(NormalSystem {
        b: b_hi,
        b_lo,
        f: f_hi,
        f_lo,
        n_centers,
        method,
    })
}

/// `B = [[AᵀA, AᵀP], [PᵀA, PᵀP]]`, `f = [Aᵀh; Pᵀh]`.
pub fn assemble_proposed(d: &DesignMatrices) -> Result<NormalSystem> {
    let (b, f, k) = gram(d);
    into_system(b, f, k, d.n_centers(), Method::Proposed)
}

/// As [`assemble_proposed`] with `ΞᵀΞ` added to the `AᵀA` block, i.e.
/// `(AᵀA + ΞᵀΞ)_jk = Σ_i φ_ij φ_ik + ξ_j ξ_k + η_j η_k + 1`.
pub fn assemble_original(d: &DesignMatrices) -> Result<NormalSystem> {
    let (mut b, f, k) = gram(d);
    let m = d.n_centers();
    for j in 0..m {
        for l in j..m {
            let xtx = dot2((0..3).map(|r| (d.xi[(r, j)], d.xi[(r, l)])));
            let v = b[j * k + l] + xtx;
            b[j * k + l] = v;
            b[l * k + j] = v;
        }
    }
    into_system(b, f, k, m, Method::Original)
}

pub fn assemble(d: &DesignMatrices, method: Method) -> Result<NormalSystem> {
    match method {
        Method::Proposed => assemble_proposed(d),
        Method::Original => assemble_original(d),
    }
}

/// Squared residual `R² = ‖Ac + Pk − h‖²` and its gradients
/// `∂R²/∂c = 2(AᵀAc + AᵀPk − Aᵀh)`, `∂R²/∂k = 2(PᵀAc + PᵀPk − Pᵀh)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualGradient {
    pub r2: f64,
    pub grad_c: DVector<f64>,
    pub grad_k: DVector<f64>,
}

pub fn residual_and_gradient(
    d: &DesignMatrices,
    c: &DVector<f64>,
    k: &DVector<f64>,
) -> Result<ResidualGradient> {
    let (n, m) = d.a.shape();
    if c.len() != m || k.len() != 3 {
        return Err(Error::Contract(format!(
            "expected {m} weights and 3 polynomial coefficients, got {} and {}",
            c.len(),
            k.len()
        )));
    }
    let residual = data_residual(d, c, k);
    let r2 = dot2(residual.iter().map(|&r| (r, r)));
    let grad = |mat: &DMatrix<f64>| {
        DVector::from_fn(mat.ncols(), |j, _| {
            let g = dot2((0..n).map(|i| (mat[(i, j)], residual[i])));
            2.0 * (g.hi() + g.lo())
        })
    };
    Ok(ResidualGradient {
        r2: r2.hi() + r2.lo(),
        grad_c: grad(&d.a),
        grad_k: grad(&d.p),
    })
}

/// `Ac + Pk − h`, each row accumulated with compensation.
pub(crate) fn data_residual(d: &DesignMatrices, c: &DVector<f64>, k: &DVector<f64>) -> Vec<f64> {
    let m = d.n_centers();
    (0..d.n_data())
        .map(|i| {
            let terms = (0..m)
                .map(|j| (d.a[(i, j)], c[j]))
                .chain((0..3).map(|l| (d.p[(i, l)], k[l])))
                .chain(std::iter::once((d.h[i], -1.0)));
            let r = dot2(terms);
            r.hi() + r.lo()
        })
        .collect()
}
