//! Dense complex linear algebra used by the DMD fit: ordered SVD, the
//! eigendecomposition of a general complex matrix, and least squares.
//!
//! Matrices are `nalgebra` containers; the factorizations themselves run in
//! `faer`.

use faer::Mat;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

fn to_faer(m: &DMatrix<C64>) -> Mat<faer::c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    })
}

fn from_faer(m: faer::MatRef<'_, faer::c64>) -> DMatrix<C64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        C64::new(z.re, z.im)
    })
}

fn check_finite(m: &DMatrix<C64>, what: &str) -> Result<()> {
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Numerical(format!("{what} input contains non-finite entries")));
    }
    Ok(())
}

/// Thin SVD with singular values in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<C64>,
    pub singular_values: Vec<f64>,
    /// `V` (not `V^H`), one right singular vector per column.
    pub v: DMatrix<C64>,
}

pub fn svd(matrix: &DMatrix<C64>) -> Result<Svd> {
    let (rows, cols) = matrix.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::Structure("SVD of an empty matrix".into()));
    }
    check_finite(matrix, "SVD")?;
    let f = to_faer(matrix)
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD of {rows}x{cols} matrix failed: {e:?}")))?;
    let s = f.S().column_vector();
    let k = s.nrows();
    let raw: Vec<f64> = (0..k).map(|i| s[i].re).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));
    let u_raw = from_faer(f.U());
    let v_raw = from_faer(f.V());
    let u = DMatrix::from_columns(&order.iter().map(|&i| u_raw.column(i)).collect::<Vec<_>>());
    let v = DMatrix::from_columns(&order.iter().map(|&i| v_raw.column(i)).collect::<Vec<_>>());
    Ok(Svd { u, singular_values: order.iter().map(|&i| raw[i]).collect(), v })
}

/// Eigenvalues and unit-norm right eigenvectors of a square complex matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<C64>,
    pub vectors: DMatrix<C64>,
}

pub fn eig(matrix: &DMatrix<C64>) -> Result<Eigen> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::Structure(format!("eigenproblem on a non-square {n}x{} matrix", matrix.ncols())));
    }
    if n == 0 {
        return Ok(Eigen { values: vec![], vectors: DMatrix::zeros(0, 0) });
    }
    check_finite(matrix, "eigenproblem")?;
    let f = to_faer(matrix).eigen().map_err(|e| {
        Error::Numerical(format!(
            "eigendecomposition of {n}x{n} matrix failed: {e:?} (max |a_ij| = {:e})",
            matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
        ))
    })?;
    let s = f.S().column_vector();
    let values = (0..n).map(|i| C64::new(s[i].re, s[i].im)).collect();
    let mut vectors = from_faer(f.U());
    for mut col in vectors.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 && norm.is_finite() {
            col /= C64::new(norm, 0.0);
        }
    }
    Ok(Eigen { values, vectors })
}

/// Minimum-norm least-squares solution of `A x = b`.
pub fn lstsq(a: &DMatrix<C64>, b: &DVector<C64>) -> Result<DVector<C64>> {
    if a.nrows() != b.len() {
        return Err(Error::Structure(format!("least squares: {} rows vs rhs of {}", a.nrows(), b.len())));
    }
    let f = svd(a)?;
    let cutoff = f.singular_values.first().copied().unwrap_or(0.0)
        * f64::EPSILON
        * a.nrows().max(a.ncols()) as f64;
    let uhb = f.u.adjoint() * b;
    let mut coef = DVector::zeros(f.singular_values.len());
    for (i, &s) in f.singular_values.iter().enumerate() {
        if s > cutoff {
            coef[i] = uhb[i] / s;
        }
    }
    Ok(&f.v * coef)
}

/// Moore-Penrose pseudoinverse with the default relative cutoff.
pub fn pinv(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let f = svd(a)?;
    let cutoff = f.singular_values.first().copied().unwrap_or(0.0)
        * f64::EPSILON
        * a.nrows().max(a.ncols()) as f64;
    let k = f.singular_values.len();
    let mut vs = f.v.clone();
    for i in 0..k {
        let s = f.singular_values[i];
        let inv = if s > cutoff { 1.0 / s } else { 0.0 };
        vs.column_mut(i).scale_mut(inv);
    }
    Ok(vs * f.u.adjoint())
}
