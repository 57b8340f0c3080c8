use crate::linalg::{axpy, finite_vector, norm_sq, DenseVector};
use crate::error::Result;

/// Global minimizer of `|gamma + <zeta, delta>| + ||delta||^2 / 2`.
///
/// The minimizer is `clip(-gamma / ||zeta||^2, -1, 1) * zeta`, and the zero
/// vector when `zeta = 0`.
pub fn solve_linear_model_prox(gamma: f64, zeta: &DenseVector) -> Result<DenseVector> {
    let mut out = vec![0.0; zeta.dim()];
    linear_model_prox_into(gamma, zeta.as_slice(), &mut out);
    finite_vector(out)
}

pub(crate) fn linear_model_prox_into(gamma: f64, zeta: &[f64], out: &mut [f64]) {
    let nz = norm_sq(zeta);
    if nz == 0.0 {
        out.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let t = (-gamma / nz).clamp(-1.0, 1.0);
    for (o, z) in out.iter_mut().zip(zeta) {
        *o = t * z;
    }
}

/// `argmin_y |offset + <grad, y - center>| + (beta/2) ||y - center||^2`,
/// written into `out`. `offset` is the affine function's value at `center`.
pub(crate) fn abs_affine_prox_into(
    offset: f64,
    grad: &[f64],
    center: &[f64],
    beta: f64,
    out: &mut [f64],
) {
    let lambda = 1.0 / beta;
    let nz = norm_sq(grad) * lambda * lambda;
    out.copy_from_slice(center);
    if nz == 0.0 {
        return;
    }
    let t = (-(lambda * offset) / nz).clamp(-1.0, 1.0);
    axpy(t * lambda, grad, out);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::from_slice(x).unwrap()
    }

    #[test]
    fn degenerate_cases() {
        assert_eq!(solve_linear_model_prox(0.0, &v(&[0.3, -1.0])).unwrap(), v(&[0.0, 0.0]));
        assert_eq!(solve_linear_model_prox(2.5, &v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
    }

    #[test]
    fn clipped_solution() {
        // -gamma/||zeta||^2 = -1.875 clips to -1.
        let d = solve_linear_model_prox(0.3, &v(&[0.4, 0.0])).unwrap();
        assert!((d[0] + 0.4).abs() < 1e-15 && d[1] == 0.0);
    }

    #[test]
    fn interior_solution_zeroes_the_residual() {
        let zeta = v(&[1.0, 2.0]);
        let d = solve_linear_model_prox(0.5, &zeta).unwrap();
        assert!((0.5 + zeta.dot(&d).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn centered_form_matches_clip_formula() {
        let grad = [0.4 * 10.0, 0.0];
        let mut out = [0.0; 2];
        abs_affine_prox_into(3.0, &grad, &[2.0, 0.0], 10.0, &mut out);
        assert!((out[0] - 1.6).abs() < 1e-15 && out[1] == 0.0);
    }
}
