//! Finite-sum weakly convex problem instances, data generators, per-datum
//! subgradients and the closed-form model steps.
//!
//! Each instance is `f(z) = (1/m) sum_i g_i(z)`; the regularizer is kept
//! separate and added by callers. Variables are flat vectors: blind
//! deconvolution stacks `z = (x, y)` and the cVaR problem appends the scalar
//! `gamma` after `x`.

mod blind;
mod container;
mod cvar;
mod linear_prox;
mod phase;
mod quadratic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, dot, finite_vector, norm, norm_sq, DenseVector};
use crate::regularizer::Regularizer;
use crate::rng::{gaussian_vector, unit_sphere_point, RngStream};

pub use linear_prox::solve_linear_model_prox;

pub(crate) use linear_prox::abs_affine_prox_into;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    PhaseRetrieval,
    BlindDeconvolution,
    Lad,
    Cvar,
    Quadratic,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::PhaseRetrieval => "phase-retrieval",
            ProblemKind::BlindDeconvolution => "blind-deconvolution",
            ProblemKind::Lad => "lad",
            ProblemKind::Cvar => "cvar",
            ProblemKind::Quadratic => "quadratic",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase-retrieval" => Ok(ProblemKind::PhaseRetrieval),
            "blind-deconvolution" => Ok(ProblemKind::BlindDeconvolution),
            "lad" => Ok(ProblemKind::Lad),
            "cvar" => Ok(ProblemKind::Cvar),
            "quadratic" => Ok(ProblemKind::Quadratic),
            other => Err(Error::param("kind", format!("unknown problem kind `{other}`"))),
        }
    }
}

/// An element `G(x, xi)` of the datum subdifferential.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientSample {
    pub vector: DenseVector,
    pub datum: usize,
    /// Local Lipschitz bound at the query point; always `>= ||vector||`.
    pub per_datum_lipschitz: f64,
}

/// A finite-sum objective with its data.
///
/// Storage per kind: `rows` holds `a_i` (phase, LAD, cVaR), `u_i` (blind) or
/// the row-major Hessian (quadratic); `cols` holds `v_i` (blind) or the linear
/// term (quadratic).
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    kind: ProblemKind,
    m: usize,
    d1: usize,
    d2: usize,
    rows: Vec<f64>,
    cols: Vec<f64>,
    b: Vec<f64>,
    alpha: f64,
    mu: f64,
    ground_truth: Option<DenseVector>,
    seed: Option<(u64, u64)>,
    datum_rho: Vec<f64>,
    rho: f64,
}

fn flatten(vectors: &[DenseVector]) -> Result<(usize, Vec<f64>)> {
    let Some(first) = vectors.first() else {
        return Err(Error::InvalidDimension(0));
    };
    let d = first.dim();
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let mut flat = Vec::with_capacity(d * vectors.len());
    for v in vectors {
        check_dim(d, v.dim())?;
        flat.extend_from_slice(v.as_slice());
    }
    Ok((d, flat))
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

impl ProblemInstance {
    /// `g_i(x) = |<a_i, x>^2 - b_i|` with every `b_i >= 0`.
    pub fn phase_retrieval(a: &[DenseVector], b: Vec<f64>) -> Result<Self> {
        let (d, rows) = flatten(a)?;
        check_dim(a.len(), b.len())?;
        check_finite(&b)?;
        if b.iter().any(|&v| v < 0.0) {
            return Err(Error::param("b", "phase retrieval measurements must be nonnegative"));
        }
        Self::assemble(ProblemKind::PhaseRetrieval, a.len(), d, 0, rows, Vec::new(), b, 0.0, 0.0)
    }

    /// `g_i(x, y) = |<u_i, x><v_i, y> - b_i|`.
    pub fn blind_deconvolution(u: &[DenseVector], v: &[DenseVector], b: Vec<f64>) -> Result<Self> {
        let (d1, rows) = flatten(u)?;
        let (d2, cols) = flatten(v)?;
        check_dim(u.len(), v.len())?;
        check_dim(u.len(), b.len())?;
        check_finite(&b)?;
        Self::assemble(ProblemKind::BlindDeconvolution, u.len(), d1, d2, rows, cols, b, 0.0, 0.0)
    }

    /// `g_i(x) = |<a_i, x> - b_i|`; `mu > 0` is the weight of the default
    /// squared-l2 regularizer.
    pub fn lad(a: &[DenseVector], b: Vec<f64>, mu: f64) -> Result<Self> {
        let (d, rows) = flatten(a)?;
        check_dim(a.len(), b.len())?;
        check_finite(&b)?;
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::param("mu", "must be finite and nonnegative"));
        }
        Self::assemble(ProblemKind::Lad, a.len(), d, 0, rows, Vec::new(), b, 0.0, mu)
    }

    /// `g_i(x, gamma) = (1 - alpha) gamma + max(|<a_i, x> - b_i| - gamma, 0)`.
    pub fn cvar(a: &[DenseVector], b: Vec<f64>, alpha: f64) -> Result<Self> {
        let (d, rows) = flatten(a)?;
        check_dim(a.len(), b.len())?;
        check_finite(&b)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param("alpha", "tail level must lie in (0, 1)"));
        }
        Self::assemble(ProblemKind::Cvar, a.len(), d, 0, rows, Vec::new(), b, alpha, 0.0)
    }

    /// `f(x) = x'Ax/2 + <c, x>` as a single datum; `hessian` is row-major.
    pub fn quadratic(hessian: Vec<f64>, linear: Vec<f64>) -> Result<Self> {
        let d = linear.len();
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        check_dim(d * d, hessian.len())?;
        check_finite(&hessian)?;
        check_finite(&linear)?;
        let scale = hessian.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for i in 0..d {
            for j in 0..i {
                if (hessian[i * d + j] - hessian[j * d + i]).abs() > 1e-12 * scale {
                    return Err(Error::param("hessian", "must be symmetric"));
                }
            }
        }
        Self::assemble(ProblemKind::Quadratic, 1, d, 0, hessian, linear, Vec::new(), 0.0, 0.0)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        kind: ProblemKind,
        m: usize,
        d1: usize,
        d2: usize,
        rows: Vec<f64>,
        cols: Vec<f64>,
        b: Vec<f64>,
        alpha: f64,
        mu: f64,
    ) -> Result<Self> {
        check_finite(&rows)?;
        check_finite(&cols)?;
        let mut p = ProblemInstance {
            kind,
            m,
            d1,
            d2,
            rows,
            cols,
            b,
            alpha,
            mu,
            ground_truth: None,
            seed: None,
            datum_rho: Vec::new(),
            rho: 0.0,
        };
        p.datum_rho = match kind {
            ProblemKind::PhaseRetrieval => (0..m).map(|i| 2.0 * norm_sq(p.row(i))).collect(),
            ProblemKind::BlindDeconvolution => {
                (0..m).map(|i| norm(p.row(i)) * norm(p.col(i))).collect()
            }
            ProblemKind::Lad | ProblemKind::Cvar => vec![0.0; m],
            ProblemKind::Quadratic => {
                let e = quadratic::eigenvalues(&p.rows, d1);
                vec![e[0].abs().max(e[d1 - 1].abs())]
            }
        };
        p.rho = p.datum_rho.iter().fold(0.0_f64, |a, &b| a.max(b));
        Ok(p)
    }

    /// Attaches a planted solution (checked against the variable dimension).
    pub fn with_ground_truth(mut self, truth: DenseVector) -> Result<Self> {
        check_dim(self.dim(), truth.dim())?;
        self.ground_truth = Some(truth);
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64, stream: u64) -> Self {
        self.seed = Some((seed, stream));
        self
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    /// Dimension of the optimization variable.
    pub fn dim(&self) -> usize {
        match self.kind {
            ProblemKind::BlindDeconvolution => self.d1 + self.d2,
            ProblemKind::Cvar => self.d1 + 1,
            _ => self.d1,
        }
    }

    /// Number of leading coordinates a regularizer acts on (all of them,
    /// except the cVaR threshold `gamma`).
    pub fn reg_dim(&self) -> usize {
        match self.kind {
            ProblemKind::Cvar => self.d1,
            _ => self.dim(),
        }
    }

    pub fn num_data(&self) -> usize {
        self.m
    }

    /// Signal dimensions `(d1, d2)`; `d2 = 0` outside blind deconvolution.
    pub fn dims(&self) -> (usize, usize) {
        (self.d1, self.d2)
    }

    pub fn tail_level(&self) -> f64 {
        self.alpha
    }

    pub fn lad_weight(&self) -> f64 {
        self.mu
    }

    pub fn ground_truth(&self) -> Option<&DenseVector> {
        self.ground_truth.as_ref()
    }

    pub fn seed(&self) -> Option<(u64, u64)> {
        self.seed
    }

    /// `a_i` (phase, LAD, cVaR) or `u_i` (blind).
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d1..(i + 1) * self.d1]
    }

    /// `v_i` (blind only).
    pub fn col(&self, i: usize) -> &[f64] {
        &self.cols[i * self.d2..(i + 1) * self.d2]
    }

    pub fn measurement(&self, i: usize) -> f64 {
        self.b[i]
    }

    pub fn measurements(&self) -> &[f64] {
        &self.b
    }

    /// Row-major Hessian and linear term of a quadratic instance.
    pub fn quadratic_terms(&self) -> Option<(&[f64], &[f64])> {
        (self.kind == ProblemKind::Quadratic).then_some((self.rows.as_slice(), self.cols.as_slice()))
    }

    /// `min f` when it is known: zero for the realizable kinds.
    pub fn optimal_value(&self) -> Option<f64> {
        match self.kind {
            ProblemKind::PhaseRetrieval | ProblemKind::BlindDeconvolution | ProblemKind::Cvar => {
                Some(0.0)
            }
            ProblemKind::Lad if self.mu == 0.0 => Some(0.0),
            _ => None,
        }
    }

    /// Weak-convexity modulus `rho` of `f`: the largest per-datum modulus
    /// (phase `2||a_i||^2`, blind `||u_i|| ||v_i||`, quadratic `||A||`).
    pub fn weak_convexity(&self) -> f64 {
        self.rho
    }

    pub fn datum_weak_convexity(&self, i: usize) -> f64 {
        self.datum_rho[i]
    }

    pub(crate) fn datum_weak_convexities(&self) -> &[f64] {
        &self.datum_rho
    }

    /// The regularizer implied by the instance (LAD weight, otherwise zero).
    pub fn default_regularizer(&self) -> Regularizer {
        if self.kind == ProblemKind::Lad && self.mu > 0.0 {
            Regularizer::SquaredL2 { weight: self.mu }
        } else {
            Regularizer::Zero
        }
    }

    pub fn check_regularizer(&self, reg: &Regularizer) -> Result<()> {
        reg.validate()?;
        if let Regularizer::IndicatorBox { lower, .. } = reg {
            check_dim(self.reg_dim(), lower.len())?;
        }
        Ok(())
    }

    pub(crate) fn check_point(&self, x: &DenseVector) -> Result<()> {
        check_dim(self.dim(), x.dim())
    }

    pub(crate) fn check_datum(&self, i: usize) -> Result<()> {
        if i < self.m {
            Ok(())
        } else {
            Err(Error::InvalidDatum {
                index: i,
                count: self.m,
            })
        }
    }

    fn expect_kind(&self, kind: ProblemKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::param(
                "problem",
                format!("expected a {kind} instance, got {}", self.kind),
            ))
        }
    }

    pub fn objective(&self, x: &DenseVector) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.objective_slice(x.as_slice()))
    }

    pub(crate) fn objective_slice(&self, z: &[f64]) -> f64 {
        let sum: f64 = (0..self.m).map(|i| self.datum_value(i, z)).sum();
        sum / self.m as f64
    }

    /// `f(z) + r(z)` with `r` applied to the leading `reg_dim` coordinates.
    pub(crate) fn composite_slice(&self, reg: &Regularizer, z: &[f64]) -> f64 {
        self.objective_slice(z) + reg.value_slice(&z[..self.reg_dim()])
    }

    pub(crate) fn datum_value(&self, i: usize, z: &[f64]) -> f64 {
        match self.kind {
            ProblemKind::PhaseRetrieval => phase::value(self.row(i), self.b[i], z),
            ProblemKind::BlindDeconvolution => blind::value(self.row(i), self.col(i), self.b[i], z),
            ProblemKind::Lad => (dot(self.row(i), z) - self.b[i]).abs(),
            ProblemKind::Cvar => cvar::value(self.row(i), self.b[i], self.alpha, z),
            ProblemKind::Quadratic => quadratic::value(&self.rows, &self.cols, z),
        }
    }

    pub fn datum_objective(&self, i: usize, x: &DenseVector) -> Result<f64> {
        self.check_datum(i)?;
        self.check_point(x)?;
        Ok(self.datum_value(i, x.as_slice()))
    }

    /// Writes `G(z, xi_i)` into `out` and returns its local Lipschitz bound.
    pub(crate) fn datum_subgradient_into(&self, i: usize, z: &[f64], out: &mut [f64]) -> f64 {
        match self.kind {
            ProblemKind::PhaseRetrieval => phase::subgradient(self.row(i), self.b[i], z, out),
            ProblemKind::BlindDeconvolution => {
                blind::subgradient(self.row(i), self.col(i), self.b[i], z, out)
            }
            ProblemKind::Lad => {
                let a = self.row(i);
                let r = dot(a, z) - self.b[i];
                let s = if r > 0.0 {
                    1.0
                } else if r < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                for (o, ai) in out.iter_mut().zip(a) {
                    *o = s * ai;
                }
                norm(a)
            }
            ProblemKind::Cvar => cvar::subgradient(self.row(i), self.b[i], self.alpha, z, out),
            ProblemKind::Quadratic => {
                quadratic::gradient(&self.rows, &self.cols, z, out);
                norm(out)
            }
        }
    }

    pub fn stochastic_subgradient(&self, x: &DenseVector, sample: usize) -> Result<SubgradientSample> {
        self.check_datum(sample)?;
        self.check_point(x)?;
        let mut out = vec![0.0; self.dim()];
        let lip = self.datum_subgradient_into(sample, x.as_slice(), &mut out);
        Ok(SubgradientSample {
            vector: finite_vector(out)?,
            datum: sample,
            per_datum_lipschitz: lip,
        })
    }

    /// Average of the datum subgradients.
    pub fn full_subgradient(&self, x: &DenseVector) -> Result<DenseVector> {
        self.check_point(x)?;
        let mut total = vec![0.0; self.dim()];
        let mut g = vec![0.0; self.dim()];
        for i in 0..self.m {
            self.datum_subgradient_into(i, x.as_slice(), &mut g);
            total.iter_mut().zip(&g).for_each(|(t, gi)| *t += gi);
        }
        total.iter_mut().for_each(|t| *t /= self.m as f64);
        finite_vector(total)
    }

    /// Bound on the datum's Lipschitz constant over the ball of the given
    /// radius around the origin.
    pub fn lipschitz_on_ball(&self, i: usize, radius: f64) -> f64 {
        match self.kind {
            ProblemKind::PhaseRetrieval => 2.0 * norm_sq(self.row(i)) * radius,
            ProblemKind::BlindDeconvolution => norm(self.row(i)) * norm(self.col(i)) * radius,
            ProblemKind::Lad => norm(self.row(i)),
            ProblemKind::Cvar => (norm_sq(self.row(i)) + self.alpha * self.alpha)
                .sqrt()
                .max(1.0 - self.alpha),
            ProblemKind::Quadratic => self.rho * radius + norm(&self.cols),
        }
    }

    /// Exact `argmin_y g_i(y) + (beta/2)||y - center||^2` when a closed form
    /// exists; returns `false` (leaving `out` untouched) otherwise.
    pub(crate) fn datum_prox_into(&self, i: usize, center: &[f64], beta: f64, out: &mut [f64]) -> bool {
        match self.kind {
            ProblemKind::PhaseRetrieval => {
                phase::proxpoint_into(self.row(i), self.b[i], center, beta, out);
                true
            }
            ProblemKind::BlindDeconvolution => {
                blind::proxpoint_into(self.row(i), self.col(i), self.b[i], center, beta, out);
                true
            }
            ProblemKind::Lad => {
                let a = self.row(i);
                let offset = dot(a, center) - self.b[i];
                abs_affine_prox_into(offset, a, center, beta, out);
                true
            }
            ProblemKind::Quadratic => match quadratic::prox(&self.rows, &self.cols, center, beta) {
                Some(y) => {
                    out.copy_from_slice(&y);
                    true
                }
                None => false,
            },
            ProblemKind::Cvar => false,
        }
    }

    pub(crate) fn has_datum_prox(&self) -> bool {
        self.kind != ProblemKind::Cvar
    }

    /// Linearized (prox-linear) model value `h(c(base) + c'(base)(z - base))`;
    /// for kinds whose inner map is affine this is the datum itself.
    pub(crate) fn proxlinear_value(&self, i: usize, base: &[f64], z: &[f64]) -> f64 {
        match self.kind {
            ProblemKind::PhaseRetrieval => phase::proxlinear_value(self.row(i), self.b[i], base, z),
            ProblemKind::BlindDeconvolution => {
                blind::proxlinear_value(self.row(i), self.col(i), self.b[i], base, z)
            }
            ProblemKind::Cvar => cvar::linearized_value(self.row(i), self.b[i], self.alpha, base, z),
            ProblemKind::Lad => self.datum_value(i, z),
            ProblemKind::Quadratic => {
                let mut g = vec![0.0; self.d1];
                quadratic::gradient(&self.rows, &self.cols, base, &mut g);
                self.datum_value(i, base) + dot(&g, z) - dot(&g, base)
            }
        }
    }

    pub(crate) fn proxlinear_subgradient(&self, i: usize, base: &[f64], z: &[f64], out: &mut [f64]) {
        match self.kind {
            ProblemKind::PhaseRetrieval | ProblemKind::BlindDeconvolution => {
                // sign(model(z)) * grad c(base)
                let mut g = vec![0.0; self.dim()];
                let q = match self.kind {
                    ProblemKind::PhaseRetrieval => {
                        let a = self.row(i);
                        let t = dot(a, base);
                        g.iter_mut().zip(a).for_each(|(gi, ai)| *gi = 2.0 * t * ai);
                        t * t - self.b[i]
                    }
                    _ => {
                        let (x, y) = base.split_at(self.d1);
                        let ux = dot(self.row(i), x);
                        let vy = dot(self.col(i), y);
                        let (gx, gy) = g.split_at_mut(self.d1);
                        gx.iter_mut().zip(self.row(i)).for_each(|(gi, ui)| *gi = vy * ui);
                        gy.iter_mut().zip(self.col(i)).for_each(|(gi, vi)| *gi = ux * vi);
                        ux * vy - self.b[i]
                    }
                };
                let r = q + dot(&g, z) - dot(&g, base);
                let s = if r > 0.0 {
                    1.0
                } else if r < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                out.iter_mut().zip(&g).for_each(|(o, gi)| *o = s * gi);
            }
            ProblemKind::Cvar => {
                cvar::linearized_subgradient(self.row(i), self.b[i], self.alpha, base, z, out)
            }
            ProblemKind::Lad => {
                self.datum_subgradient_into(i, z, out);
            }
            ProblemKind::Quadratic => {
                quadratic::gradient(&self.rows, &self.cols, base, out);
            }
        }
    }

    /// Closed-form prox-linear step with `center` in place of `base` in the
    /// proximal term (used to fold a squared-l2 regularizer).
    pub(crate) fn proxlinear_step_into(
        &self,
        i: usize,
        base: &[f64],
        center: &[f64],
        beta: f64,
        out: &mut [f64],
    ) -> bool {
        match self.kind {
            ProblemKind::PhaseRetrieval => {
                phase::proxlinear_into(self.row(i), self.b[i], base, center, beta, out);
                true
            }
            ProblemKind::BlindDeconvolution => {
                blind::proxlinear_into(self.row(i), self.col(i), self.b[i], base, center, beta, out);
                true
            }
            ProblemKind::Lad => self.datum_prox_into(i, center, beta, out),
            ProblemKind::Quadratic => {
                let mut g = vec![0.0; self.d1];
                quadratic::gradient(&self.rows, &self.cols, base, &mut g);
                out.iter_mut()
                    .zip(center.iter().zip(&g))
                    .for_each(|(o, (c, gi))| *o = c - gi / beta);
                true
            }
            ProblemKind::Cvar => false,
        }
    }

    pub(crate) fn cvar_step_into(
        &self,
        i: usize,
        base: &[f64],
        beta: f64,
        reg: &Regularizer,
        out: &mut [f64],
    ) {
        cvar::step_into(self.row(i), self.b[i], self.alpha, base, beta, reg, out)
    }

    /// Splits a blind-deconvolution variable into its two factors.
    pub fn split_factors(&self, z: &DenseVector) -> Result<(DenseVector, DenseVector)> {
        self.expect_kind(ProblemKind::BlindDeconvolution)?;
        self.check_point(z)?;
        let (x, y) = z.as_slice().split_at(self.d1);
        Ok((DenseVector::from_slice(x)?, DenseVector::from_slice(y)?))
    }

    /// Stacks two blind-deconvolution factors into one variable.
    pub fn stack_factors(&self, x: &DenseVector, y: &DenseVector) -> Result<DenseVector> {
        self.expect_kind(ProblemKind::BlindDeconvolution)?;
        check_dim(self.d1, x.dim())?;
        check_dim(self.d2, y.dim())?;
        let mut z = x.as_slice().to_vec();
        z.extend_from_slice(y.as_slice());
        finite_vector(z)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveStep(beta))
    }
}

fn check_dims(d: usize, m: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    if m == 0 {
        return Err(Error::param("m", "need at least one datum"));
    }
    Ok(())
}

fn provenance(p: ProblemInstance, rng: &RngStream) -> ProblemInstance {
    p.with_seed(rng.seed(), rng.stream())
}

/// Gaussian `a_i`, planted `x` uniform on the sphere, `b_i = <a_i, x>^2`.
pub fn generate_phase_retrieval(rng: &mut RngStream, d: usize, m: usize) -> Result<ProblemInstance> {
    check_dims(d, m)?;
    let start = rng.clone();
    let a: Vec<DenseVector> = (0..m).map(|_| gaussian_vector(rng, d)).collect();
    let truth = unit_sphere_point(rng, d)?;
    let b = a.iter().map(|ai| dot(ai.as_slice(), truth.as_slice()).powi(2)).collect();
    let p = ProblemInstance::phase_retrieval(&a, b)?.with_ground_truth(truth)?;
    Ok(provenance(p, &start))
}

/// Gaussian `u_i, v_i` and `b_i = <u_i, s><v_i, s>` for one planted signal
/// `s` on the sphere, so the ground truth is `(s, s)`. When `d1 != d2` the two
/// factors get independent sphere points.
pub fn generate_blind_deconvolution(
    rng: &mut RngStream,
    d1: usize,
    d2: usize,
    m: usize,
) -> Result<ProblemInstance> {
    check_dims(d1.min(d2), m)?;
    let start = rng.clone();
    let u: Vec<DenseVector> = (0..m).map(|_| gaussian_vector(rng, d1)).collect();
    let v: Vec<DenseVector> = (0..m).map(|_| gaussian_vector(rng, d2)).collect();
    let xs = unit_sphere_point(rng, d1)?;
    let ys = if d1 == d2 {
        xs.clone()
    } else {
        unit_sphere_point(rng, d2)?
    };
    let b = u
        .iter()
        .zip(&v)
        .map(|(ui, vi)| dot(ui.as_slice(), xs.as_slice()) * dot(vi.as_slice(), ys.as_slice()))
        .collect();
    let p = ProblemInstance::blind_deconvolution(&u, &v, b)?;
    let truth = p.stack_factors(&xs, &ys)?;
    Ok(provenance(p.with_ground_truth(truth)?, &start))
}

/// Gaussian `a_i`, planted `x` on the sphere, `b_i = <a_i, x>`.
pub fn generate_lad(rng: &mut RngStream, d: usize, m: usize, mu: f64) -> Result<ProblemInstance> {
    check_dims(d, m)?;
    let start = rng.clone();
    let a: Vec<DenseVector> = (0..m).map(|_| gaussian_vector(rng, d)).collect();
    let truth = unit_sphere_point(rng, d)?;
    let b = a.iter().map(|ai| dot(ai.as_slice(), truth.as_slice())).collect();
    let p = ProblemInstance::lad(&a, b, mu)?.with_ground_truth(truth)?;
    Ok(provenance(p, &start))
}

/// LAD data in the cVaR hinge form; the ground truth is `(x, 0)`.
pub fn generate_cvar(rng: &mut RngStream, d: usize, m: usize, alpha: f64) -> Result<ProblemInstance> {
    check_dims(d, m)?;
    let start = rng.clone();
    let a: Vec<DenseVector> = (0..m).map(|_| gaussian_vector(rng, d)).collect();
    let truth = unit_sphere_point(rng, d)?;
    let b = a.iter().map(|ai| dot(ai.as_slice(), truth.as_slice())).collect();
    let mut z = truth.into_vec();
    z.push(0.0);
    let p = ProblemInstance::cvar(&a, b, alpha)?.with_ground_truth(finite_vector(z)?)?;
    Ok(provenance(p, &start))
}

/// Random quadratic whose Hessian has spectrum in `[-rho, rho]` with both
/// extremes attained (for `d >= 2`), and a Gaussian linear term.
pub fn generate_quadratic(rng: &mut RngStream, d: usize, rho: f64) -> Result<ProblemInstance> {
    check_dims(d, 1)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::param("rho", "must be positive"));
    }
    let start = rng.clone();
    let g: Vec<f64> = (0..d * d).map(|_| rng.standard_normal()).collect();
    let q = nalgebra::DMatrix::from_row_slice(d, d, &g).qr().q();
    let mut spectrum: Vec<f64> = (0..d).map(|_| rho * (2.0 * rng.uniform() - 1.0)).collect();
    spectrum[0] = rho;
    if d > 1 {
        spectrum[1] = -rho;
    }
    let lam = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(spectrum));
    let a = &q * lam * q.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let mut hessian = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            hessian.push(a[(i, j)]);
        }
    }
    let linear = gaussian_vector(rng, d).into_vec();
    Ok(provenance(ProblemInstance::quadratic(hessian, linear)?, &start))
}

pub fn objective_value(problem: &ProblemInstance, x: &DenseVector) -> Result<f64> {
    problem.objective(x)
}

pub fn stochastic_subgradient(
    problem: &ProblemInstance,
    x: &DenseVector,
    sample: usize,
) -> Result<SubgradientSample> {
    problem.stochastic_subgradient(x, sample)
}

fn step_preamble(problem: &ProblemInstance, kind: ProblemKind, x: &DenseVector, sample: usize, beta: f64) -> Result<()> {
    problem.expect_kind(kind)?;
    problem.check_datum(sample)?;
    problem.check_point(x)?;
    check_beta(beta)
}

/// `x + Delta*` for the linearized phase retrieval datum, `lambda = 1/beta`.
pub fn proxlinear_step_phase(
    problem: &ProblemInstance,
    x: &DenseVector,
    sample: usize,
    beta: f64,
) -> Result<DenseVector> {
    step_preamble(problem, ProblemKind::PhaseRetrieval, x, sample, beta)?;
    let mut out = vec![0.0; x.dim()];
    let xs = x.as_slice();
    phase::proxlinear_into(problem.row(sample), problem.b[sample], xs, xs, beta, &mut out);
    finite_vector(out)
}

/// Enumerated global minimizer of the phase retrieval proximal subproblem.
pub fn proxpoint_step_phase(
    problem: &ProblemInstance,
    x: &DenseVector,
    sample: usize,
    beta: f64,
) -> Result<DenseVector> {
    step_preamble(problem, ProblemKind::PhaseRetrieval, x, sample, beta)?;
    let mut out = vec![0.0; x.dim()];
    phase::proxpoint_into(problem.row(sample), problem.b[sample], x.as_slice(), beta, &mut out);
    finite_vector(out)
}

fn blind_step(
    problem: &ProblemInstance,
    x: &DenseVector,
    y: &DenseVector,
    sample: usize,
    beta: f64,
    linearized: bool,
) -> Result<(DenseVector, DenseVector)> {
    let z = problem.stack_factors(x, y)?;
    step_preamble(problem, ProblemKind::BlindDeconvolution, &z, sample, beta)?;
    let (u, v, b) = (problem.row(sample), problem.col(sample), problem.b[sample]);
    let zs = z.as_slice();
    let mut out = vec![0.0; zs.len()];
    if linearized {
        blind::proxlinear_into(u, v, b, zs, zs, beta, &mut out);
    } else {
        blind::proxpoint_into(u, v, b, zs, beta, &mut out);
    }
    problem.split_factors(&finite_vector(out)?)
}

pub fn proxlinear_step_blind(
    problem: &ProblemInstance,
    x: &DenseVector,
    y: &DenseVector,
    sample: usize,
    beta: f64,
) -> Result<(DenseVector, DenseVector)> {
    blind_step(problem, x, y, sample, beta, true)
}

pub fn proxpoint_step_blind(
    problem: &ProblemInstance,
    x: &DenseVector,
    y: &DenseVector,
    sample: usize,
    beta: f64,
) -> Result<(DenseVector, DenseVector)> {
    blind_step(problem, x, y, sample, beta, false)
}

/// Points on `<u,x><v,y> = b` produced by the boundary quartic of the blind
/// proximal subproblem, as stacked `(x, y)` vectors.
pub fn blind_boundary_candidates(
    problem: &ProblemInstance,
    x: &DenseVector,
    y: &DenseVector,
    sample: usize,
) -> Result<Vec<DenseVector>> {
    let z = problem.stack_factors(x, y)?;
    problem.check_datum(sample)?;
    blind::boundary_candidates(problem.row(sample), problem.col(sample), problem.b[sample], z.as_slice())
        .into_iter()
        .map(finite_vector)
        .collect()
}

/// Exact cVaR step with the absolute residual linearized at `x`, over
/// `(y, gamma)`; `reg` acts on `y` only.
pub fn cvar_model_step(
    problem: &ProblemInstance,
    x: &DenseVector,
    gamma: f64,
    sample: usize,
    beta: f64,
    reg: &Regularizer,
) -> Result<(DenseVector, f64)> {
    problem.expect_kind(ProblemKind::Cvar)?;
    problem.check_datum(sample)?;
    check_dim(problem.d1, x.dim())?;
    if !gamma.is_finite() {
        return Err(Error::NonFinite { index: x.dim() });
    }
    check_beta(beta)?;
    problem.check_regularizer(reg)?;
    let mut base = x.as_slice().to_vec();
    base.push(gamma);
    let mut out = vec![0.0; base.len()];
    problem.cvar_step_into(sample, &base, beta, reg, &mut out);
    let g = out.pop().unwrap_or_default();
    if !g.is_finite() {
        return Err(Error::NonFinite { index: out.len() });
    }
    Ok((finite_vector(out)?, g))
}
