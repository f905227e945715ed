//! Small dense helpers over `nalgebra`.

use nalgebra::{DMatrix, DVector};

pub(crate) fn matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

/// Minimum-norm solution of `J x = b` via the pseudo-inverse.
pub(crate) fn min_norm_solve(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let j = matrix(rows);
    let pinv = j.pseudo_inverse(1e-14).ok()?;
    let x = pinv * DVector::from_column_slice(rhs);
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

pub(crate) fn singular_values(rows: &[Vec<f64>]) -> Vec<f64> {
    if rows.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = matrix(rows).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub(crate) fn smallest_singular_value(rows: &[Vec<f64>]) -> f64 {
    singular_values(rows).last().copied().unwrap_or(f64::INFINITY)
}

/// Numerical rank: singular values above `tol · max(1, σ_max)`.
pub(crate) fn rank(rows: &[Vec<f64>], tol: f64) -> usize {
    let s = singular_values(rows);
    let scale = s.first().copied().unwrap_or(0.0).max(1.0);
    s.iter().filter(|v| **v > tol * scale).count()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

pub(crate) fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum())
                .collect()
        })
        .collect()
}

pub(crate) fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub(crate) fn inverse(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let inv = matrix(m).try_inverse()?;
    Some(
        (0..inv.nrows())
            .map(|i| (0..inv.ncols()).map(|j| inv[(i, j)]).collect())
            .collect(),
    )
}

pub(crate) fn determinant(m: &[Vec<f64>]) -> f64 {
    matrix(m).determinant()
}

/// Unit vector spanning the null space of a `(d-1) × d` matrix.
pub(crate) fn null_direction(rows: &[Vec<f64>]) -> Option<Vec<f64>> {
    let d = rows.first()?.len();
    let t = match (d, rows.len()) {
        (2, 1) => vec![-rows[0][1], rows[0][0]],
        (3, 2) => {
            let (a, b) = (&rows[0], &rows[1]);
            vec![
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ]
        }
        _ => return None,
    };
    let n = norm(&t);
    (n > 1e-300).then(|| t.iter().map(|c| c / n).collect())
}

/// Orthonormal basis of the orthogonal complement of a nonzero `v`.
pub(crate) fn orthonormal_complement(v: &[f64]) -> Vec<Vec<f64>> {
    let d = v.len();
    let nv = norm(v);
    let u: Vec<f64> = v.iter().map(|c| c / nv).collect();
    let mut basis: Vec<Vec<f64>> = vec![u];
    let mut axes: Vec<usize> = (0..d).collect();
    // Axes least aligned with v first keeps Gram–Schmidt well conditioned.
    axes.sort_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()));
    for axis in axes {
        let mut e: Vec<f64> = (0..d).map(|i| if i == axis { 1.0 } else { 0.0 }).collect();
        for b in &basis {
            let p = dot(&e, b);
            e.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let ne = norm(&e);
        if ne > 1e-8 {
            basis.push(e.iter().map(|c| c / ne).collect());
        }
        if basis.len() == d {
            break;
        }
    }
    basis.remove(0);
    basis
}
