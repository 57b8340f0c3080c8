//! Moreau envelope `phi_lambda(x) = min_y phi(y) + ||y - x||^2 / (2 lambda)`
//! of `phi = f + r`, and the prox-gradient mapping.
//!
//! The inner problem is solved on the dual of the consensus splitting
//!
//! ```text
//! min_y sum_i g_i(y),   g_i(y) = f_i(y)/m + (kappa_i/2)||y - x||^2,
//!                       g_r(y) = r(y)     + (kappa_r/2)||y - x||^2,
//! ```
//!
//! with `kappa_i = rho_i/m + M/J`, `kappa_r = M/J`, `M = 1/lambda - mean rho_i`
//! and `J = m + 1`, so every piece is `M/J`-strongly convex and its conjugate
//! is evaluated through the exact single-datum proximal map. Accelerated
//! gradient ascent with adaptive restart runs on the multipliers `w_i`
//! (`sum w_i = 0`). Any such `w` gives a lower bound, any primal point an
//! upper bound; the gap certifies the returned point. Kinds without a
//! single-datum proximal map use the bundle solver instead.

use crate::error::{Error, Result};
use crate::linalg::{dist_sq, dot, finite_vector, norm, DenseVector};
use crate::oracle::{bundle_prox, SubgradientOracle};
use crate::problems::ProblemInstance;
use crate::regularizer::{BlockReg, Regularizer};

const MAX_SPLITTING_ITERS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub lambda: f64,
    pub envelope_value: f64,
    pub prox_point: DenseVector,
    /// `||x - prox_point|| / lambda`.
    pub grad_norm: f64,
    /// Certified bound on `envelope_value - phi_lambda(x)`.
    pub inner_suboptimality: f64,
    pub iterations: usize,
}

impl EnvelopeReport {
    /// `(x - prox_point) / lambda`.
    pub fn gradient(&self, x: &DenseVector) -> Result<DenseVector> {
        let g: Vec<f64> = x
            .iter()
            .zip(self.prox_point.iter())
            .map(|(xi, pi)| (xi - pi) / self.lambda)
            .collect();
        finite_vector(g)
    }
}

/// Default envelope parameter `1 / (2 rho)` (or `1/2` when `rho = 0`).
pub fn default_lambda(problem: &ProblemInstance) -> f64 {
    let rho = problem.weak_convexity();
    if rho > 0.0 {
        0.5 / rho
    } else {
        0.5
    }
}

/// `f` averaged over all data, as an oracle.
pub(crate) struct FullObjective<'a>(pub &'a ProblemInstance);

impl SubgradientOracle for FullObjective<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, z: &[f64]) -> f64 {
        self.0.objective_slice(z)
    }

    fn subgradient(&self, z: &[f64], out: &mut [f64]) {
        let m = self.0.num_data();
        let mut g = vec![0.0; z.len()];
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..m {
            self.0.datum_subgradient_into(i, z, &mut g);
            out.iter_mut().zip(&g).for_each(|(o, gi)| *o += gi / m as f64);
        }
    }

    fn weak_convexity(&self) -> f64 {
        self.0.weak_convexity()
    }
}

pub fn moreau_envelope(
    problem: &ProblemInstance,
    reg: &Regularizer,
    x: &DenseVector,
    lambda: f64,
    tol: f64,
) -> Result<EnvelopeReport> {
    problem.check_point(x)?;
    problem.check_regularizer(reg)?;
    let rho = problem.weak_convexity();
    if !(lambda > 0.0 && lambda.is_finite() && lambda * rho < 1.0) {
        return Err(Error::EnvelopeParameter { lambda, rho });
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let block = BlockReg {
        reg,
        active: problem.reg_dim(),
    };
    let (point, value, gap, iterations) = if problem.has_datum_prox() {
        splitting(problem, block, x.as_slice(), lambda, tol)?
    } else {
        let s = bundle_prox(&FullObjective(problem), block, x.as_slice(), 1.0 / lambda, tol, None)?;
        (s.point, s.value, s.value - s.lower_bound, s.iterations)
    };
    let grad_norm = dist_sq(&point, x.as_slice()).sqrt() / lambda;
    Ok(EnvelopeReport {
        lambda,
        envelope_value: value,
        prox_point: finite_vector(point)?,
        grad_norm,
        inner_suboptimality: gap.max(0.0),
        iterations,
    })
}

struct Splitting<'a> {
    problem: &'a ProblemInstance,
    reg: BlockReg<'a>,
    x: &'a [f64],
    kappa: Vec<f64>,
    inv_lambda: f64,
}

impl Splitting<'_> {
    fn parts(&self) -> usize {
        self.kappa.len()
    }

    /// Fills `ys` with the piecewise minimizers at multipliers `w` and
    /// returns the dual value.
    fn dual(&self, w: &[f64], ys: &mut [f64], center: &mut [f64]) -> Result<f64> {
        let n = self.x.len();
        let m = self.problem.num_data();
        let mut total = 0.0;
        for (j, (wj, yj)) in w.chunks_exact(n).zip(ys.chunks_exact_mut(n)).enumerate() {
            let k = self.kappa[j];
            for ((c, xi), wi) in center.iter_mut().zip(self.x).zip(wj) {
                *c = xi + wi / k;
            }
            let piece = if j < m {
                if !self.problem.datum_prox_into(j, center, m as f64 * k, yj) {
                    return Err(Error::NonconvexSubproblem {
                        beta: m as f64 * k,
                        eta: self.problem.datum_weak_convexity(j),
                    });
                }
                self.problem.datum_value(j, yj) / m as f64
            } else {
                yj.copy_from_slice(center);
                self.reg.prox_in_place(yj, 1.0 / k);
                self.reg.value(yj)
            };
            total += piece + 0.5 * k * dist_sq(yj, self.x) - dot(wj, yj);
        }
        Ok(total)
    }

    fn primal(&self, z: &[f64]) -> f64 {
        self.problem.objective_slice(z) + self.reg.value(z) + 0.5 * self.inv_lambda * dist_sq(z, self.x)
    }
}

fn splitting(
    problem: &ProblemInstance,
    reg: BlockReg,
    x: &[f64],
    lambda: f64,
    tol: f64,
) -> Result<(Vec<f64>, f64, f64, usize)> {
    let n = x.len();
    let m = problem.num_data();
    let rho_mean = problem.datum_weak_convexities().iter().sum::<f64>() / m as f64;
    let parts = m + 1;
    let share = (1.0 / lambda - rho_mean) / parts as f64;
    let mut kappa: Vec<f64> = problem
        .datum_weak_convexities()
        .iter()
        .map(|r| r / m as f64 + share)
        .collect();
    kappa.push(share);
    let sp = Splitting {
        problem,
        reg,
        x,
        kappa,
        inv_lambda: 1.0 / lambda,
    };

    let len = sp.parts() * n;
    let mut w = vec![0.0; len];
    let mut w_prev = vec![0.0; len];
    let mut v = vec![0.0; len];
    let mut ys = vec![0.0; len];
    let mut center = vec![0.0; n];
    let mut mean = vec![0.0; n];
    let mut candidate = vec![0.0; n];
    let mut momentum = 1.0_f64;
    let mut lower = f64::NEG_INFINITY;
    let mut best = x.to_vec();
    reg.project_domain(&mut best);
    let mut upper = sp.primal(&best);

    for it in 1..=MAX_SPLITTING_ITERS {
        lower = lower.max(sp.dual(&v, &mut ys, &mut center)?);
        mean.iter_mut().for_each(|c| *c = 0.0);
        for yj in ys.chunks_exact(n) {
            mean.iter_mut().zip(yj).for_each(|(c, y)| *c += y / sp.parts() as f64);
        }
        candidate.copy_from_slice(&mean);
        reg.project_domain(&mut candidate);
        for z in [&candidate[..], &ys[(sp.parts() - 1) * n..]] {
            let value = sp.primal(z);
            if value < upper {
                upper = value;
                best.copy_from_slice(z);
            }
        }
        if upper - lower <= tol {
            return Ok((best, upper, upper - lower, it));
        }

        // Ascent on D along the projected gradient mean(y) - y_j.
        std::mem::swap(&mut w, &mut w_prev);
        let mut progress = 0.0;
        for ((wj, vj), yj) in w.chunks_exact_mut(n).zip(v.chunks_exact(n)).zip(ys.chunks_exact(n)) {
            for (((wi, vi), yi), ci) in wj.iter_mut().zip(vj).zip(yj).zip(&mean) {
                *wi = vi + share * (ci - yi);
            }
        }
        for (((wi, pi), yi), ci) in w.iter().zip(&w_prev).zip(&ys).zip(mean.iter().cycle()) {
            progress += (ci - yi) * (wi - pi);
        }
        if progress < 0.0 {
            momentum = 1.0;
            v.copy_from_slice(&w);
            continue;
        }
        let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next;
        momentum = next;
        for ((vi, wi), pi) in v.iter_mut().zip(&w).zip(&w_prev) {
            *vi = wi + beta * (wi - pi);
        }
    }
    // The splitting stalled; the bundle method still certifies.
    let s = bundle_prox(&FullObjective(problem), reg, x, 1.0 / lambda, tol, None).map_err(|e| match e {
        Error::ToleranceNotMet { tol, iterations, .. } => Error::ToleranceNotMet {
            tol,
            gap: upper - lower,
            iterations: iterations + MAX_SPLITTING_ITERS,
        },
        other => other,
    })?;
    Ok((s.point, s.value, s.value - s.lower_bound, s.iterations + MAX_SPLITTING_ITERS))
}

/// A smooth function with exact gradients.
pub trait SmoothObjective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

/// Quadratic instances are smooth; their gradient is exact.
impl SmoothObjective for ProblemInstance {
    fn dim(&self) -> usize {
        ProblemInstance::dim(self)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.objective_slice(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        FullObjective(self).subgradient(x, out)
    }
}

/// `G_lambda(x) = (x - prox_{lambda r}(x - lambda grad f(x))) / lambda`.
pub fn prox_gradient_mapping(
    f: &dyn SmoothObjective,
    reg: &Regularizer,
    x: &DenseVector,
    lambda: f64,
) -> Result<DenseVector> {
    if x.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: x.dim(),
        });
    }
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveStep(lambda));
    }
    let mut g = vec![0.0; x.dim()];
    f.gradient(x.as_slice(), &mut g);
    let shifted: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - lambda * gi).collect();
    let p = reg.prox(&DenseVector::new(shifted)?, lambda)?;
    finite_vector(x.iter().zip(p.iter()).map(|(xi, pi)| (xi - pi) / lambda).collect())
}

/// `||G_lambda(x)||`.
pub fn prox_gradient_norm(f: &dyn SmoothObjective, reg: &Regularizer, x: &DenseVector, lambda: f64) -> Result<f64> {
    Ok(norm(prox_gradient_mapping(f, reg, x, lambda)?.as_slice()))
}
