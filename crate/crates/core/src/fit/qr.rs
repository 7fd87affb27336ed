//! Householder QR with column pivoting for dense least squares.

use nalgebra::{DMatrix, DVector};

pub(crate) struct LstsqSolution {
    pub x: DVector<f64>,
    pub rank: usize,
    /// `|R₀₀| / |R_rr|` over the retained diagonal.
    pub r_ratio: f64,
}

/// Minimises `‖Sx − b‖` for a tall or square `S`. Columns whose pivoted
/// diagonal falls below `max(rows, cols)·ε·|R₀₀|` are dropped (basic
/// solution, zero in the dropped components).
pub(crate) fn lstsq(mut s: DMatrix<f64>, mut b: DVector<f64>) -> LstsqSolution {
    let (rows, cols) = s.shape();
    assert!(
        rows >= cols,
        "least squares needs at least as many rows as columns"
    );
    assert_eq!(b.len(), rows);
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut norms: Vec<f64> = (0..cols).map(|j| s.column(j).norm_squared()).collect();
    let mut norms_ref = norms.clone();
    let mut diag = Vec::with_capacity(cols);

    for k in 0..cols {
        // pivot: largest remaining column norm, first index on ties
        let (p, _) = norms[k..]
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
        let p = p + k;
        if p != k {
            s.swap_columns(k, p);
            norms.swap(k, p);
            norms_ref.swap(k, p);
            perm.swap(k, p);
        }

        let mut x = s.view_mut((k, k), (rows - k, 1));
        let alpha = x.norm();
        if alpha == 0.0 {
            diag.push(0.0);
            continue;
        }
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let r_kk = -sign * alpha;
        x[0] -= r_kk;
        let vnorm2 = x.norm_squared();
        let v: DVector<f64> = x.column(0).into_owned();

        for j in k + 1..cols {
            let mut col = s.view_mut((k, j), (rows - k, 1));
            let t = 2.0 * v.dot(&col) / vnorm2;
            col.column_mut(0).axpy(-t, &v, 1.0);
        }
        {
            let mut tail = b.rows_mut(k, rows - k);
            let t = 2.0 * v.dot(&tail) / vnorm2;
            tail.axpy(-t, &v, 1.0);
        }
        s[(k, k)] = r_kk;
        diag.push(r_kk.abs());

        for j in k + 1..cols {
            let r = s[(k, j)];
            norms[j] -= r * r;
            // recompute when downdating has lost too many digits
            if norms[j] <= 1e-6 * norms_ref[j] || norms[j] < 0.0 {
                norms[j] = s.view((k + 1, j), (rows - k - 1, 1)).norm_squared();
                norms_ref[j] = norms[j];
            }
        }
    }

    let r00 = diag.first().copied().unwrap_or(0.0);
    let tol = rows.max(cols) as f64 * f64::EPSILON * r00;
    let rank = diag.iter().take_while(|&&d| d > tol && d > 0.0).count();

    let mut z = DVector::zeros(cols);
    for i in (0..rank).rev() {
        let mut acc = b[i];
        for j in i + 1..rank {
            acc -= s[(i, j)] * z[j];
        }
        z[i] = acc / s[(i, i)];
    }
    let mut x = DVector::zeros(cols);
    for (k, &col) in perm.iter().enumerate() {
        x[col] = z[k];
    }
    let r_ratio = if rank == 0 {
        f64::INFINITY
    } else {
        r00 / diag[rank - 1]
    };
    LstsqSolution { x, rank, r_ratio }
}
