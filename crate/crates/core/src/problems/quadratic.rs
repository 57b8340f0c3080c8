//! Smooth quadratic `f(x) = x'Ax/2 + <c, x>` with symmetric, possibly
//! indefinite `A`.

use nalgebra::{DMatrix, DVector};

use crate::linalg::dot;

pub(crate) fn value(hessian: &[f64], linear: &[f64], x: &[f64]) -> f64 {
    let d = linear.len();
    let quad: f64 = hessian
        .chunks_exact(d)
        .zip(x)
        .map(|(row, xi)| xi * dot(row, x))
        .sum();
    0.5 * quad + dot(linear, x)
}

pub(crate) fn gradient(hessian: &[f64], linear: &[f64], x: &[f64], out: &mut [f64]) {
    let d = linear.len();
    for ((o, row), c) in out.iter_mut().zip(hessian.chunks_exact(d)).zip(linear) {
        *o = dot(row, x) + c;
    }
}

/// Eigenvalues of the symmetric matrix, ascending.
pub(crate) fn eigenvalues(hessian: &[f64], d: usize) -> Vec<f64> {
    let m = DMatrix::from_row_slice(d, d, hessian);
    let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

/// Solves `(A + beta I) y = beta * center - c`; `None` unless `A + beta I` is
/// positive definite.
pub(crate) fn prox(hessian: &[f64], linear: &[f64], center: &[f64], beta: f64) -> Option<Vec<f64>> {
    let d = linear.len();
    let m = DMatrix::from_row_slice(d, d, hessian) + DMatrix::identity(d, d) * beta;
    let rhs = DVector::from_iterator(d, center.iter().zip(linear).map(|(x, c)| beta * x - c));
    let chol = m.cholesky()?;
    Some(chol.solve(&rhs).iter().copied().collect())
}
