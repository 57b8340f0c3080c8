//! Seeded random streams and the Gaussian / sphere samplers built on them.
//!
//! Every stream is a ChaCha8 generator keyed by `seed` with its 64-bit stream
//! counter set to `stream`, so `(seed, stream)` pairs identify independent,
//! reproducible sequences without any coordination between sweep cells.
//!
//! Normal deviates use the Box-Muller transform: two uniforms `u1 in (0, 1]`,
//! `u2 in [0, 1)` give `sqrt(-2 ln u1) * (cos 2 pi u2, sin 2 pi u2)`. The sine
//! half is cached and returned by the next call.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{norm, DenseVector};

const SELECTION_TAG: u64 = 1 << 63;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngStream {
            seed,
            stream,
            inner,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh stream reserved for iterate selection, distinct from the
    /// sampling stream it is derived from.
    pub fn selection_stream(&self) -> RngStream {
        RngStream::new(self.seed, self.stream ^ SELECTION_TAG)
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform index in `0..n`. Panics when `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// `d` i.i.d. standard normal entries.
pub fn gaussian_vector(rng: &mut RngStream, d: usize) -> DenseVector {
    DenseVector::from_vec_unchecked((0..d).map(|_| rng.standard_normal()).collect())
}

/// A point drawn uniformly from the unit sphere in `R^d` (normalized Gaussian).
pub fn unit_sphere_point(rng: &mut RngStream, d: usize) -> Result<DenseVector> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let n = norm(&g);
        if n > 0.0 {
            return Ok(DenseVector::from_vec_unchecked(
                g.into_iter().map(|v| v / n).collect(),
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_stream_reproduce() {
        let a = gaussian_vector(&mut RngStream::new(7, 3), 25);
        let b = gaussian_vector(&mut RngStream::new(7, 3), 25);
        assert_eq!(a, b);
        let c = gaussian_vector(&mut RngStream::new(7, 4), 25);
        assert_ne!(a, c);
    }

    #[test]
    fn empty_gaussian_vector() {
        assert_eq!(gaussian_vector(&mut RngStream::new(0, 0), 0).dim(), 0);
    }

    #[test]
    fn pooled_gaussian_moments() {
        let mut rng = RngStream::new(2024, 0);
        let n = 100_000;
        let xs = gaussian_vector(&mut rng, n);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() <= 0.02, "mean {mean}");
        assert!((var - 1.0).abs() <= 0.05, "variance {var}");
    }

    #[test]
    fn sphere_points_have_unit_norm() {
        let mut rng = RngStream::new(1, 1);
        for d in 1..12 {
            for _ in 0..50 {
                let p = unit_sphere_point(&mut rng, d).unwrap();
                assert!((p.norm() - 1.0).abs() <= 1e-12);
            }
        }
        let p = unit_sphere_point(&mut rng, 1).unwrap();
        assert!(p[0] == 1.0 || p[0] == -1.0);
        assert_eq!(
            unit_sphere_point(&mut rng, 0),
            Err(Error::InvalidDimension(0))
        );
    }

    #[test]
    fn sphere_point_is_deterministic() {
        let a = unit_sphere_point(&mut RngStream::new(5, 9), 6).unwrap();
        let b = unit_sphere_point(&mut RngStream::new(5, 9), 6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn selection_stream_is_distinct() {
        let rng = RngStream::new(3, 11);
        let mut sel = rng.selection_stream();
        let mut base = RngStream::new(3, 11);
        assert_ne!(sel.uniform(), base.uniform());
    }
}
