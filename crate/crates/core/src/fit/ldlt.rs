//! Square-root-free Cholesky (`LDLᵀ`) in double-double arithmetic for
//! symmetric positive (semi)definite matrices.

use twofloat::TwoFloat;

use crate::dot::dd_div;

/// Unit roundoff of double-double arithmetic, 2⁻¹⁰⁴.
const DD_EPS: f64 = 4.930_380_657_631_324e-32;

/// Packed row-major symmetric matrix.
#[derive(Debug, Clone)]
pub(crate) struct DdMatrix {
    n: usize,
    data: Vec<TwoFloat>,
}

impl DdMatrix {
    pub(crate) fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> TwoFloat) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        DdMatrix { n, data }
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> TwoFloat {
        self.data[i * self.n + j]
    }

    pub(crate) fn dim(&self) -> usize {
        self.n
    }
}

#[derive(Debug)]
pub(crate) struct Ldlt {
    n: usize,
    /// Unit lower triangle, row-major; diagonal unused.
    l: Vec<TwoFloat>,
    d: Vec<TwoFloat>,
}

/// Outcome of an attempted factorisation.
pub(crate) enum Factor {
    Ok(Ldlt),
    /// A pivot fell below the breakdown threshold; carries the pivot ratio
    /// seen up to that point as a condition estimate.
    Breakdown {
        condition_estimate: f64,
    },
}

/// Factors `A + shift·I`. `A` is expected to have unit-order diagonal, so the
/// breakdown threshold on pivots is absolute.
pub(crate) fn factor(a: &DdMatrix, shift: f64) -> Factor {
    let n = a.dim();
    let threshold = 8.0 * n.max(1) as f64 * DD_EPS;
    let mut l = vec![TwoFloat::from(0.0); n * n];
    let mut d = vec![TwoFloat::from(0.0); n];
    let (mut d_max, mut d_min) = (0.0f64, f64::INFINITY);

    // w[k] = L[j][k]·d[k], reused across rows
    let mut w = vec![TwoFloat::from(0.0); n];
    for j in 0..n {
        for k in 0..j {
            w[k] = l[j * n + k] * d[k];
        }
        let mut dj = a.get(j, j) + shift;
        for k in 0..j {
            dj -= l[j * n + k] * w[k];
        }
        let pivot = dj.hi();
        if pivot.is_nan() || pivot <= threshold {
            let estimate = if d_min.is_finite() && pivot > 0.0 {
                d_max.max(pivot) / pivot
            } else {
                f64::INFINITY
            };
            return Factor::Breakdown {
                condition_estimate: estimate,
            };
        }
        d_max = d_max.max(pivot);
        d_min = d_min.min(pivot);
        d[j] = dj;
        let inv = dd_div(TwoFloat::from(1.0), dj);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * w[k];
            }
            l[i * n + j] = s * inv;
        }
    }
    Factor::Ok(Ldlt { n, l, d })
}

impl Ldlt {
    /// Ratio of the largest to the smallest pivot.
    pub(crate) fn pivot_ratio(&self) -> f64 {
        let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
        for d in &self.d {
            hi = hi.max(d.hi());
            lo = lo.min(d.hi());
        }
        if self.n == 0 {
            1.0
        } else {
            hi / lo
        }
    }

    #[allow(clippy::needless_range_loop)]
    pub(crate) fn solve(&self, rhs: &[TwoFloat]) -> Vec<TwoFloat> {
        let n = self.n;
        let mut x = rhs.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] = dd_div(x[i], self.d[i]);
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s;
        }
        x
    }
}
