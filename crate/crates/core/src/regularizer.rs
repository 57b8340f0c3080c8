//! Closed regularizers with exact values and exact proximal maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, finite_vector, norm, DenseVector};

/// A closed convex function `r` whose proximal map has a closed form.
///
/// `SquaredL2 { weight }` is `r(x) = (weight / 2) ||x||^2`, which is
/// `weight`-strongly convex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Regularizer {
    #[default]
    Zero,
    IndicatorBall {
        radius: f64,
    },
    /// Per-coordinate bounds; infinite bounds leave a coordinate free.
    IndicatorBox {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    L1 {
        weight: f64,
    },
    SquaredL2 {
        weight: f64,
    },
}

impl Regularizer {
    pub fn indicator_ball(radius: f64) -> Result<Self> {
        let r = Regularizer::IndicatorBall { radius };
        r.validate()?;
        Ok(r)
    }

    pub fn indicator_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let r = Regularizer::IndicatorBox { lower, upper };
        r.validate()?;
        Ok(r)
    }

    pub fn l1(weight: f64) -> Result<Self> {
        let r = Regularizer::L1 { weight };
        r.validate()?;
        Ok(r)
    }

    pub fn squared_l2(weight: f64) -> Result<Self> {
        let r = Regularizer::SquaredL2 { weight };
        r.validate()?;
        Ok(r)
    }

    /// Checks parameters; deserialized values should pass through here.
    pub fn validate(&self) -> Result<()> {
        match self {
            Regularizer::Zero => Ok(()),
            Regularizer::IndicatorBall { radius } => {
                if radius.is_finite() && *radius >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::param("radius", "must be finite and nonnegative"))
                }
            }
            Regularizer::IndicatorBox { lower, upper } => {
                check_dim(lower.len(), upper.len())?;
                for (l, u) in lower.iter().zip(upper) {
                    if l.is_nan() || u.is_nan() || l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY
                    {
                        return Err(Error::param("bounds", format!("invalid interval [{l}, {u}]")));
                    }
                }
                Ok(())
            }
            Regularizer::L1 { weight } | Regularizer::SquaredL2 { weight } => {
                if weight.is_finite() && *weight >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::param("weight", "must be finite and nonnegative"))
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::Zero => "zero",
            Regularizer::IndicatorBall { .. } => "indicator-ball",
            Regularizer::IndicatorBox { .. } => "indicator-box",
            Regularizer::L1 { .. } => "l1",
            Regularizer::SquaredL2 { .. } => "squared-l2",
        }
    }

    /// Strong convexity modulus (zero for every kind except `SquaredL2`).
    pub fn strong_convexity(&self) -> f64 {
        match self {
            Regularizer::SquaredL2 { weight } => *weight,
            _ => 0.0,
        }
    }

    /// `Some(weight)` when `r` is the quadratic `(weight/2)||x||^2` (including
    /// zero), which lets step solvers fold `r` into the proximal quadratic.
    pub fn quadratic_weight(&self) -> Option<f64> {
        match self {
            Regularizer::Zero => Some(0.0),
            Regularizer::SquaredL2 { weight } => Some(*weight),
            _ => None,
        }
    }

    pub fn value(&self, x: &DenseVector) -> Result<f64> {
        self.check_dim(x.dim())?;
        Ok(self.value_slice(x.as_slice()))
    }

    pub fn prox(&self, x: &DenseVector, step: f64) -> Result<DenseVector> {
        if !(step > 0.0) {
            return Err(Error::NonPositiveStep(step));
        }
        self.check_dim(x.dim())?;
        let mut out = x.as_slice().to_vec();
        self.prox_in_place(&mut out, step);
        finite_vector(out)
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            Regularizer::IndicatorBox { lower, .. } => check_dim(lower.len(), dim),
            _ => Ok(()),
        }
    }

    pub(crate) fn value_slice(&self, x: &[f64]) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::IndicatorBall { radius } => {
                if norm(x) <= *radius * (1.0 + 1e-12) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Regularizer::IndicatorBox { lower, upper } => {
                let inside = x
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .all(|(v, (l, u))| v >= l && v <= u);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Regularizer::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::SquaredL2 { weight } => 0.5 * weight * x.iter().map(|v| v * v).sum::<f64>(),
        }
    }

    /// `x <- prox_{step * r}(x)`; `step > 0` is the caller's responsibility.
    pub(crate) fn prox_in_place(&self, x: &mut [f64], step: f64) {
        match self {
            Regularizer::Zero => {}
            Regularizer::IndicatorBall { radius } => {
                let n = norm(x);
                if n > *radius {
                    let s = radius / n;
                    x.iter_mut().for_each(|v| *v *= s);
                }
            }
            Regularizer::IndicatorBox { lower, upper } => {
                for (v, (l, u)) in x.iter_mut().zip(lower.iter().zip(upper)) {
                    *v = v.clamp(*l, *u);
                }
            }
            Regularizer::L1 { weight } => {
                let t = step * weight;
                for v in x.iter_mut() {
                    *v = v.signum() * (v.abs() - t).max(0.0);
                }
            }
            Regularizer::SquaredL2 { weight } => {
                let s = 1.0 / (1.0 + step * weight);
                x.iter_mut().for_each(|v| *v *= s);
            }
        }
    }

    /// Nearest point of `dom r` (identity for finite-valued kinds).
    pub(crate) fn project_domain(&self, x: &mut [f64]) {
        match self {
            Regularizer::IndicatorBall { .. } | Regularizer::IndicatorBox { .. } => {
                self.prox_in_place(x, 1.0)
            }
            _ => {}
        }
    }
}

/// A regularizer acting on the leading `active` coordinates of a longer
/// variable; the remaining coordinates are free.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BlockReg<'a> {
    pub reg: &'a Regularizer,
    pub active: usize,
}

impl BlockReg<'_> {
    pub fn value(&self, z: &[f64]) -> f64 {
        self.reg.value_slice(&z[..self.active])
    }

    pub fn prox_in_place(&self, z: &mut [f64], step: f64) {
        self.reg.prox_in_place(&mut z[..self.active], step)
    }

    pub fn project_domain(&self, z: &mut [f64]) {
        self.reg.project_domain(&mut z[..self.active])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_vector, RngStream};

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::from_slice(x).unwrap()
    }

    #[test]
    fn values() {
        let ball = Regularizer::indicator_ball(1.0).unwrap();
        assert_eq!(ball.value(&v(&[0.5, 0.0])).unwrap(), 0.0);
        assert_eq!(ball.value(&v(&[3.0, 4.0])).unwrap(), f64::INFINITY);
        assert_eq!(Regularizer::l1(2.0).unwrap().value(&v(&[1.0, -1.0])).unwrap(), 4.0);
        assert_eq!(
            Regularizer::squared_l2(2.0).unwrap().value(&v(&[1.0, 2.0])).unwrap(),
            5.0
        );
    }

    #[test]
    fn proxes() {
        let x = v(&[3.0, 4.0]);
        assert_eq!(Regularizer::Zero.prox(&x, 0.7).unwrap(), x);
        let p = Regularizer::indicator_ball(1.0).unwrap().prox(&x, 2.0).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        let s = Regularizer::l1(1.0).unwrap().prox(&v(&[1.5]), 1.0).unwrap();
        assert_eq!(s[0], 0.5);
        let b = Regularizer::indicator_box(vec![f64::NEG_INFINITY, 0.0], vec![1.0, f64::INFINITY])
            .unwrap()
            .prox(&v(&[5.0, -2.0]), 1.0)
            .unwrap();
        assert_eq!(b.as_slice(), &[1.0, 0.0]);
        let q = Regularizer::squared_l2(1.0).unwrap().prox(&v(&[2.0]), 1.0).unwrap();
        assert_eq!(q[0], 1.0);
    }

    #[test]
    fn errors() {
        let x = v(&[1.0]);
        assert_eq!(Regularizer::Zero.prox(&x, 0.0), Err(Error::NonPositiveStep(0.0)));
        assert!(Regularizer::indicator_ball(-1.0).is_err());
        assert!(Regularizer::indicator_box(vec![1.0], vec![0.0]).is_err());
        let boxed = Regularizer::indicator_box(vec![0.0; 2], vec![1.0; 2]).unwrap();
        assert!(matches!(boxed.value(&x), Err(Error::DimensionMismatch { .. })));
    }

    fn all_kinds(d: usize) -> Vec<Regularizer> {
        vec![
            Regularizer::Zero,
            Regularizer::indicator_ball(1.3).unwrap(),
            Regularizer::indicator_box(vec![-0.5; d], vec![0.7; d]).unwrap(),
            Regularizer::l1(0.8).unwrap(),
            Regularizer::squared_l2(1.7).unwrap(),
        ]
    }

    #[test]
    fn prox_is_nonexpansive() {
        let mut rng = RngStream::new(11, 0);
        for r in all_kinds(4) {
            for _ in 0..1000 {
                let x = gaussian_vector(&mut rng, 4);
                let y = gaussian_vector(&mut rng, 4);
                let step = 0.1 + 2.0 * rng.uniform();
                let px = r.prox(&x, step).unwrap();
                let py = r.prox(&y, step).unwrap();
                assert!(px.distance(&py).unwrap() <= x.distance(&y).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn prox_beats_random_candidates() {
        let mut rng = RngStream::new(12, 0);
        for r in all_kinds(3) {
            let x = gaussian_vector(&mut rng, 3);
            let step = 0.6;
            let p = r.prox(&x, step).unwrap();
            let objective = |y: &DenseVector| {
                r.value(y).unwrap() + y.distance(&x).unwrap().powi(2) / (2.0 * step)
            };
            let best = objective(&p);
            for _ in 0..1000 {
                let mut c = gaussian_vector(&mut rng, 3).into_vec();
                // Mix near and far candidates; project some into the domain.
                c.iter_mut().zip(p.iter()).for_each(|(ci, pi)| *ci = pi + 0.3 * *ci);
                if rng.uniform() < 0.5 {
                    r.project_domain(&mut c);
                }
                let c = DenseVector::new(c).unwrap();
                assert!(best <= objective(&c) + 1e-10, "{} prox not optimal", r.name());
            }
        }
    }
}
