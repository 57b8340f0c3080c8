//! Real roots of polynomials of degree at most four.
//!
//! Roots come from the eigenvalues of the (scaled) companion matrix, followed
//! by one guarded Newton step on the real part. Eigenvalues with a tiny
//! imaginary part are real roots; clusters from a multiple real root spread
//! into the complex plane by about `eps^(1/k)`, so those are also accepted when
//! the polished real part has a negligible residual.

use nalgebra::{Complex, DMatrix, Schur};

use crate::error::{Error, Result};

const IMAG_TOL: f64 = 1e-7;
const CLUSTER_IMAG_TOL: f64 = 1e-3;
const RESIDUAL_TOL: f64 = 1e-8;

/// `c4 t^4 + c3 t^3 + c2 t^2 + c1 t + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticPoly {
    coeffs: [f64; 5],
}

impl QuarticPoly {
    pub fn new(c4: f64, c3: f64, c2: f64, c1: f64, c0: f64) -> Result<Self> {
        let coeffs = [c4, c3, c2, c1, c0];
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(QuarticPoly { coeffs })
    }

    /// Coefficients, highest degree first.
    pub fn coefficients(&self) -> [f64; 5] {
        self.coeffs
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let [c4, c3, c2, c1, _] = self.coeffs;
        ((4.0 * c4 * t + 3.0 * c3) * t + 2.0 * c2) * t + c1
    }

    /// Sum of `|c_k| |t|^k`; the natural scale for rounding error in `eval`.
    pub fn magnitude(&self, t: f64) -> f64 {
        let a = t.abs();
        self.coeffs.iter().fold(0.0, |acc, c| acc * a + c.abs())
    }

    pub fn max_coefficient(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Tolerance applied to `|p(root)|` when accepting a root.
    pub fn residual_tolerance(&self, t: f64) -> f64 {
        RESIDUAL_TOL * (1.0 + self.max_coefficient()).max(self.magnitude(t))
    }
}

/// All real roots of `p`, repeated by multiplicity and sorted ascending.
///
/// Degree drops are handled by solving the reduced polynomial; a nonzero
/// constant has no roots.
pub fn quartic_real_roots(p: &QuarticPoly) -> Result<Vec<f64>> {
    let c = p.coefficients();
    let Some(lead) = c.iter().position(|&v| v != 0.0) else {
        return Err(Error::DegeneratePolynomial);
    };
    let active = &c[lead..];
    // Exact zero roots: strip trailing zero coefficients.
    let trailing = active.iter().rev().take_while(|&&v| v == 0.0).count();
    let reduced = &active[..active.len() - trailing];
    let mut roots = vec![0.0; trailing];
    let degree = reduced.len() - 1;

    match degree {
        0 => {}
        1 => roots.push(-reduced[1] / reduced[0]),
        _ => {
            // Scale t = s * z so the monic coefficients of the polynomial in z
            // are bounded by one.
            let monic: Vec<f64> = reduced[1..].iter().map(|v| v / reduced[0]).collect();
            let scale = monic
                .iter()
                .enumerate()
                .map(|(k, v)| v.abs().powf(1.0 / (k + 1) as f64))
                .fold(0.0_f64, f64::max);
            let scale = if scale > 0.0 { scale } else { 1.0 };
            let companion = DMatrix::from_fn(degree, degree, |i, j| {
                if i == 0 {
                    -monic[j] / scale.powi(j as i32 + 1)
                } else if i == j + 1 {
                    1.0
                } else {
                    0.0
                }
            });
            for z in companion_roots(companion, &monic, scale) {
                let re = z.re * scale;
                let im = z.im * scale;
                let bound = 1.0 + re.abs();
                if im.abs() > CLUSTER_IMAG_TOL * bound {
                    continue;
                }
                let root = newton_polish(p, re);
                let accept = im.abs() <= IMAG_TOL * bound
                    || p.eval(root).abs() <= p.residual_tolerance(root);
                if accept {
                    roots.push(root);
                }
            }
        }
    }

    roots.retain(|&r| p.eval(r).abs() <= p.residual_tolerance(r));
    roots.sort_by(|a, b| a.total_cmp(b));
    Ok(roots)
}

const SCHUR_MAX_ITER: usize = 500;

/// Eigenvalues of the scaled companion matrix (roots of the scaled monic
/// polynomial). The unbounded QR iteration can stall on companion matrices,
/// so it runs with an iteration cap, retries on the transpose, and finally
/// falls back to Durand-Kerner iteration.
fn companion_roots(companion: DMatrix<f64>, monic: &[f64], scale: f64) -> Vec<Complex<f64>> {
    let eps = f64::EPSILON;
    if let Some(s) = Schur::try_new(companion.clone(), eps, SCHUR_MAX_ITER) {
        return s.complex_eigenvalues().iter().copied().collect();
    }
    if let Some(s) = Schur::try_new(companion.transpose(), eps, SCHUR_MAX_ITER) {
        return s.complex_eigenvalues().iter().copied().collect();
    }
    let scaled: Vec<f64> = monic
        .iter()
        .enumerate()
        .map(|(k, v)| v / scale.powi(k as i32 + 1))
        .collect();
    durand_kerner(&scaled)
}

/// Simultaneous iteration for all roots of `z^n + c[0] z^(n-1) + ... + c[n-1]`.
fn durand_kerner(c: &[f64]) -> Vec<Complex<f64>> {
    let n = c.len();
    let eval = |z: Complex<f64>| c.iter().fold(Complex::new(1.0, 0.0), |acc, &ck| acc * z + ck);
    let seed = Complex::new(0.4, 0.9);
    let mut roots: Vec<Complex<f64>> = (0..n).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..500 {
        let mut shift = 0.0_f64;
        for i in 0..n {
            let zi = roots[i];
            let denom = (0..n)
                .filter(|&j| j != i)
                .fold(Complex::new(1.0, 0.0), |acc, j| acc * (zi - roots[j]));
            if denom.norm() == 0.0 {
                continue;
            }
            let step = eval(zi) / denom;
            roots[i] = zi - step;
            shift = shift.max(step.norm());
        }
        if shift <= 1e-15 {
            break;
        }
    }
    roots
}

fn newton_polish(p: &QuarticPoly, t: f64) -> f64 {
    let value = p.eval(t);
    let slope = p.derivative(t);
    if value == 0.0 || slope == 0.0 {
        return t;
    }
    let next = t - value / slope;
    if next.is_finite() && p.eval(next).abs() <= value.abs() {
        next
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roots(c: [f64; 5]) -> Vec<f64> {
        quartic_real_roots(&QuarticPoly::new(c[0], c[1], c[2], c[3], c[4]).unwrap()).unwrap()
    }

    fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn symmetric_quartic() {
        assert_close(&roots([1.0, 0.0, 0.0, 0.0, -1.0]), &[-1.0, 1.0], 1e-12);
    }

    #[test]
    fn zero_root_with_multiplicity_four() {
        assert_eq!(roots([1.0, 0.0, 0.0, 0.0, 0.0]), vec![0.0; 4]);
    }

    #[test]
    fn triple_root_from_deconvolution_quartic() {
        let p = QuarticPoly::new(1.0, -2.0, 0.0, 2.0, -1.0).unwrap();
        let r = quartic_real_roots(&p).unwrap();
        assert_close(&r, &[-1.0, 1.0, 1.0, 1.0], 1e-4);
        for t in r {
            assert!(p.eval(t).abs() <= 1e-8 * (1.0 + p.max_coefficient()));
        }
    }

    #[test]
    fn reduced_degrees() {
        assert_close(&roots([0.0, 0.0, 1.0, 0.0, -4.0]), &[-2.0, 2.0], 1e-12);
        assert_close(&roots([0.0, 0.0, 0.0, 2.0, -1.0]), &[0.5], 1e-15);
        assert!(roots([0.0, 0.0, 0.0, 0.0, 3.0]).is_empty());
        assert_close(&roots([0.0, 1.0, 0.0, -1.0, 0.0]), &[-1.0, 0.0, 1.0], 1e-12);
    }

    #[test]
    fn no_real_roots() {
        assert!(roots([1.0, 0.0, 2.0, 0.0, 1.5]).is_empty());
    }

    #[test]
    fn all_zero_is_degenerate() {
        let p = QuarticPoly::new(0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(quartic_real_roots(&p), Err(Error::DegeneratePolynomial));
    }
}
