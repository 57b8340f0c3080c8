//! Stochastic one-sided models and the model-based step subproblem
//! `argmin_y r(y) + f_x(y, xi) + (beta/2)||y - x||^2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, dist_sq, dot, finite_vector, DenseVector};
use crate::oracle::{bundle_prox, SubgradientOracle, GENERIC_TOL};
use crate::problems::{ProblemInstance, ProblemKind};
use crate::regularizer::{BlockReg, Regularizer};

/// The three model families:
/// `linear` `f(x) + <G(x), y - x>`, `prox-linear` `h(c(x) + c'(x)(y - x))`,
/// and `prox-point` `f(y)` itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelFamily {
    #[serde(rename = "sgd")]
    Linear,
    #[serde(rename = "prox-linear")]
    ProxLinear,
    #[serde(rename = "prox-point")]
    ProxPoint,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 3] = [ModelFamily::Linear, ModelFamily::ProxLinear, ModelFamily::ProxPoint];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelFamily::Linear => "sgd",
            ModelFamily::ProxLinear => "prox-linear",
            ModelFamily::ProxPoint => "prox-point",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" | "linear" => Ok(ModelFamily::Linear),
            "prox-linear" => Ok(ModelFamily::ProxLinear),
            "prox-point" => Ok(ModelFamily::ProxPoint),
            other => Err(Error::param("method", format!("unknown method `{other}`"))),
        }
    }
}

/// Constants entering the convergence guarantees.
///
/// `tau` bounds the one-sided model error, `eta` the model's weak convexity,
/// `lipschitz_l` the second moment of the model slopes on the ball of radius
/// [`LIPSCHITZ_RADIUS`]. `sigma` is reported for analysis only and
/// `delta_gap` is known only once an initial point is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalConstants {
    pub rho: f64,
    pub rho_bar: f64,
    pub tau: f64,
    pub eta: f64,
    pub lipschitz_l: f64,
    pub mu: f64,
    pub sigma: f64,
    pub delta_gap: Option<f64>,
}

pub const LIPSCHITZ_RADIUS: f64 = 2.0;

impl TheoreticalConstants {
    pub fn with_rho_bar(mut self, rho_bar: f64) -> Result<Self> {
        if !(rho_bar > self.tau + self.eta) || !rho_bar.is_finite() {
            return Err(Error::param("rho_bar", format!("must exceed tau + eta = {}", self.tau + self.eta)));
        }
        self.rho_bar = rho_bar;
        Ok(self)
    }

    pub fn with_delta_gap(mut self, delta: f64) -> Self {
        self.delta_gap = Some(delta.max(0.0));
        self
    }
}

impl ProblemInstance {
    /// Constants for the given family with the default `rho_bar =
    /// 2 max(tau + eta, rho)` (or 1 when both vanish).
    pub fn constants(&self, family: ModelFamily) -> TheoreticalConstants {
        let rho = self.weak_convexity();
        let (tau, eta) = match family {
            ModelFamily::Linear | ModelFamily::ProxLinear => (rho, 0.0),
            ModelFamily::ProxPoint => (0.0, rho),
        };
        let base = 2.0 * (tau + eta).max(rho);
        let rho_bar = if base > 0.0 { base } else { 1.0 };
        let m = self.num_data();
        let l2 = (0..m).map(|i| self.lipschitz_on_ball(i, LIPSCHITZ_RADIUS).powi(2)).sum::<f64>() / m as f64;
        TheoreticalConstants {
            rho,
            rho_bar,
            tau,
            eta,
            lipschitz_l: l2.sqrt(),
            mu: self.default_regularizer().strong_convexity(),
            sigma: l2.sqrt(),
            delta_gap: None,
        }
    }

    /// As [`ProblemInstance::constants`], with `delta_gap = f(x0) + r(x0) - min`
    /// when the optimal value is known (an upper bound for the envelope gap).
    pub fn constants_at(&self, family: ModelFamily, x0: &DenseVector) -> Result<TheoreticalConstants> {
        let c = self.constants(family);
        let value = self.objective(x0)? + self.default_regularizer().value_slice(&x0.as_slice()[..self.reg_dim()]);
        Ok(match self.optimal_value() {
            Some(opt) => c.with_delta_gap(value - opt),
            None => c,
        })
    }
}

/// The model `f_base(., xi_sample)` of one family as a subgradient oracle.
pub struct ModelOracle<'a> {
    family: ModelFamily,
    problem: &'a ProblemInstance,
    base: Vec<f64>,
    sample: usize,
    base_value: f64,
    base_grad: Vec<f64>,
}

impl<'a> ModelOracle<'a> {
    pub fn new(family: ModelFamily, problem: &'a ProblemInstance, base: &DenseVector, sample: usize) -> Result<Self> {
        problem.check_datum(sample)?;
        problem.check_point(base)?;
        Ok(Self::from_slice(family, problem, base.as_slice(), sample))
    }

    pub(crate) fn from_slice(family: ModelFamily, problem: &'a ProblemInstance, base: &[f64], sample: usize) -> Self {
        let mut base_grad = vec![0.0; base.len()];
        let base_value = problem.datum_value(sample, base);
        if family == ModelFamily::Linear {
            problem.datum_subgradient_into(sample, base, &mut base_grad);
        }
        ModelOracle {
            family,
            problem,
            base: base.to_vec(),
            sample,
            base_value,
            base_grad,
        }
    }
}

impl SubgradientOracle for ModelOracle<'_> {
    fn dim(&self) -> usize {
        self.base.len()
    }

    fn value(&self, z: &[f64]) -> f64 {
        match self.family {
            ModelFamily::Linear => self.base_value + dot(&self.base_grad, z) - dot(&self.base_grad, &self.base),
            ModelFamily::ProxLinear => self.problem.proxlinear_value(self.sample, &self.base, z),
            ModelFamily::ProxPoint => self.problem.datum_value(self.sample, z),
        }
    }

    fn subgradient(&self, z: &[f64], out: &mut [f64]) {
        match self.family {
            ModelFamily::Linear => out.copy_from_slice(&self.base_grad),
            ModelFamily::ProxLinear => self.problem.proxlinear_subgradient(self.sample, &self.base, z, out),
            ModelFamily::ProxPoint => {
                self.problem.datum_subgradient_into(self.sample, z, out);
            }
        }
    }

    fn weak_convexity(&self) -> f64 {
        match self.family {
            ModelFamily::ProxPoint => self.problem.datum_weak_convexity(self.sample),
            _ => 0.0,
        }
    }
}

/// `f_base(y, xi_sample)`.
pub fn model_value(
    family: ModelFamily,
    problem: &ProblemInstance,
    base: &DenseVector,
    sample: usize,
    y: &DenseVector,
) -> Result<f64> {
    let oracle = ModelOracle::new(family, problem, base, sample)?;
    check_dim(base.dim(), y.dim())?;
    Ok(oracle.value(y.as_slice()))
}

/// `r(y) + f_base(y, xi) + (beta/2)||y - base||^2`.
pub fn subproblem_value(
    family: ModelFamily,
    problem: &ProblemInstance,
    reg: &Regularizer,
    base: &DenseVector,
    sample: usize,
    beta: f64,
    y: &DenseVector,
) -> Result<f64> {
    let model = model_value(family, problem, base, sample, y)?;
    let r = reg.value_slice(&y.as_slice()[..problem.reg_dim()]);
    Ok(model + r + 0.5 * beta * dist_sq(y.as_slice(), base.as_slice()))
}

/// Exact minimizer of the model-based step subproblem.
///
/// Closed forms (global for every `beta > 0`) cover the linear family with any
/// regularizer, the prox-linear and prox-point families on phase retrieval,
/// blind deconvolution, LAD and quadratics with a zero or squared-l2
/// regularizer, and the prox-linear cVaR step with any regularizer. Other
/// combinations go to the generic bundle solver, which needs `beta > eta`.
pub fn model_step(
    family: ModelFamily,
    problem: &ProblemInstance,
    reg: &Regularizer,
    base: &DenseVector,
    sample: usize,
    beta: f64,
) -> Result<DenseVector> {
    problem.check_datum(sample)?;
    problem.check_point(base)?;
    problem.check_regularizer(reg)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::NonPositiveStep(beta));
    }
    let mut out = vec![0.0; base.dim()];
    let mut scratch = vec![0.0; base.dim()];
    model_step_into(family, problem, reg, base.as_slice(), sample, beta, &mut scratch, &mut out)?;
    finite_vector(out)
}

/// `prox_{alpha r}(x - alpha G(x, xi))`, shared by both algorithms so the
/// linear-model step and the subgradient step agree bit for bit.
pub(crate) fn linear_step_into(
    problem: &ProblemInstance,
    reg: &Regularizer,
    x: &[f64],
    sample: usize,
    alpha: f64,
    grad: &mut [f64],
    out: &mut [f64],
) {
    problem.datum_subgradient_into(sample, x, grad);
    for ((o, xi), gi) in out.iter_mut().zip(x).zip(grad.iter()) {
        *o = xi - alpha * gi;
    }
    BlockReg {
        reg,
        active: problem.reg_dim(),
    }
    .prox_in_place(out, alpha);
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn model_step_into(
    family: ModelFamily,
    problem: &ProblemInstance,
    reg: &Regularizer,
    base: &[f64],
    sample: usize,
    beta: f64,
    scratch: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    if family == ModelFamily::Linear {
        linear_step_into(problem, reg, base, sample, 1.0 / beta, scratch, out);
        return Ok(());
    }
    if problem.kind() == ProblemKind::Cvar && family == ModelFamily::ProxLinear {
        problem.cvar_step_into(sample, base, beta, reg, out);
        return Ok(());
    }
    if let Some(weight) = reg.quadratic_weight() {
        // Fold (w/2)||y||^2 into the proximal term:
        // (beta/2)||y - x||^2 + (w/2)||y||^2 = ((beta + w)/2)||y - c||^2 + const.
        let folded = beta + weight;
        for (c, x) in scratch.iter_mut().zip(base) {
            *c = beta * x / folded;
        }
        let solved = match family {
            ModelFamily::ProxLinear => problem.proxlinear_step_into(sample, base, scratch, folded, out),
            _ => problem.datum_prox_into(sample, scratch, folded, out),
        };
        if solved {
            return Ok(());
        }
        if problem.kind() == ProblemKind::Quadratic {
            return Err(Error::NonconvexSubproblem {
                beta,
                eta: problem.datum_weak_convexity(sample),
            });
        }
    }
    let oracle = ModelOracle::from_slice(family, problem, base, sample);
    let eta = oracle.weak_convexity();
    if beta <= eta {
        return Err(Error::NonconvexSubproblem { beta, eta });
    }
    let block = BlockReg {
        reg,
        active: problem.reg_dim(),
    };
    let solution = bundle_prox(&oracle, block, base, beta, GENERIC_TOL, None)?;
    out.copy_from_slice(&solution.point);
    Ok(())
}
