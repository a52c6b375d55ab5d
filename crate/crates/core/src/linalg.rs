//! Small dense-matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, Schur, SVD};

pub type Mat = DMatrix<f64>;

pub fn commutator(x: &Mat, y: &Mat) -> Mat {
    x * y - y * x
}

/// `m^k`, accumulated left to right as `((m m) m) ...` so that
/// `power(m, k) * m` is bit-identical to `power(m, k + 1)`.
pub fn power(m: &Mat, k: usize) -> Mat {
    let mut acc = Mat::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        acc = &acc * m;
    }
    acc
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn is_diagonal(m: &Mat) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == 0.0))
}

pub fn diag(values: &[f64]) -> Mat {
    Mat::from_diagonal(&nalgebra::DVector::from_column_slice(values))
}

/// Row-major nested vectors, the JSON layout.
pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Option<Mat> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return None;
    }
    Some(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

/// Singular values in descending order.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    let mut s: Vec<f64> = SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn condition_number(m: &Mat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigenIssue {
    NotReal,
    NotDistinct { rel_gap: f64 },
    Failed,
}

/// Real, distinct spectrum with an eigenvector basis.
#[derive(Debug, Clone)]
pub struct RealEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unit columns, first non-negligible entry positive; column `i` belongs to `values[i]`.
    pub vectors: Mat,
    /// Smallest consecutive gap divided by `1 + spectral radius`.
    pub rel_gap: f64,
}

/// Diagonalizes `m` when its eigenvalues are real and pairwise distinct.
///
/// Eigenvalues count as real when `|Im| < tol (1 + rho)` and as distinct when
/// every gap exceeds `tol (1 + rho)`, with `rho` the spectral radius.
pub fn real_eigen(m: &Mat, tol: f64) -> Result<RealEigen, EigenIssue> {
    let n = m.nrows();
    if n == 0 || m.iter().any(|v| !v.is_finite()) {
        return Err(EigenIssue::Failed);
    }
    if is_diagonal(m) {
        return diagonal_eigen(m, tol);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(EigenIssue::Failed)?;
    let spectrum = schur.complex_eigenvalues();
    let rho = spectrum.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    let scale = tol * (1.0 + rho);
    if spectrum.iter().any(|z| z.im.abs() >= scale) {
        return Err(EigenIssue::NotReal);
    }
    let mut values: Vec<f64> = spectrum.iter().map(|z| z.re).collect();
    values.sort_by(f64::total_cmp);
    let rel_gap = min_gap(&values) / (1.0 + rho);
    if n > 1 && rel_gap * (1.0 + rho) <= scale {
        return Err(EigenIssue::NotDistinct { rel_gap });
    }

    let mut vectors = Mat::zeros(n, n);
    for (col, &lambda) in values.iter().enumerate() {
        let shifted = m - Mat::identity(n, n) * lambda;
        let svd = SVD::new(shifted, false, true);
        let v_t = svd.v_t.ok_or(EigenIssue::Failed)?;
        let (idx, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .ok_or(EigenIssue::Failed)?;
        let mut v: Vec<f64> = v_t.row(idx).iter().copied().collect();
        normalize_sign(&mut v);
        for (i, x) in v.into_iter().enumerate() {
            vectors[(i, col)] = x;
        }
    }
    Ok(RealEigen {
        values,
        vectors,
        rel_gap,
    })
}

fn diagonal_eigen(m: &Mat, tol: f64) -> Result<RealEigen, EigenIssue> {
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let rho = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let rel_gap = min_gap(&values) / (1.0 + rho);
    if n > 1 && rel_gap <= tol {
        return Err(EigenIssue::NotDistinct { rel_gap });
    }
    let mut vectors = Mat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors[(i, col)] = 1.0;
    }
    Ok(RealEigen {
        values,
        vectors,
        rel_gap,
    })
}

fn min_gap(sorted: &[f64]) -> f64 {
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

fn normalize_sign(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let first = v.iter().copied().find(|x| x.abs() > 1e-12 * norm).unwrap_or(1.0);
    let s = if first < 0.0 { -1.0 / norm } else { 1.0 / norm };
    v.iter_mut().for_each(|x| *x *= s);
}
