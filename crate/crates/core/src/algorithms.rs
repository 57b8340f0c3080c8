//! The proximal stochastic subgradient loop, the model-based loop, step-size
//! schedules, random iterate selection and weighted averaging.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, DenseVector};
use crate::models::{linear_step_into, model_step_into, ModelFamily};
use crate::problems::ProblemInstance;
use crate::regularizer::Regularizer;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// `alpha_t = gamma / sqrt(T + 1)`.
    ConstantAlpha { gamma: f64 },
    /// `beta_t = rho_bar + sqrt(T + 1) / gamma`.
    ConstantBeta { rho_bar: f64, gamma: f64 },
    /// `beta_t = mu (t + 1) / 2`.
    StronglyConvex { mu: f64 },
    /// Explicit `beta_0, ..., beta_T`.
    Custom { betas: Vec<f64> },
}

/// Per-step parameters for `t = 0..=T`. `alpha_t` drives the subgradient
/// loop and `beta_t` the model-based loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    alphas: Vec<f64>,
    betas: Vec<f64>,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

/// Builds the schedule for `T + 1` steps. `horizon` is `T`; it is ignored for
/// `Custom`, whose length fixes `T`.
pub fn make_schedule(kind: ScheduleKind, horizon: usize) -> Result<Schedule> {
    let n = horizon + 1;
    let root = (n as f64).sqrt();
    let (alphas, betas) = match &kind {
        ScheduleKind::ConstantAlpha { gamma } => {
            positive("gamma", *gamma)?;
            let alpha = gamma / root;
            (vec![alpha; n], vec![1.0 / alpha; n])
        }
        ScheduleKind::ConstantBeta { rho_bar, gamma } => {
            positive("gamma", *gamma)?;
            if !(rho_bar.is_finite() && *rho_bar >= 0.0) {
                return Err(Error::param("rho_bar", "must be finite and nonnegative"));
            }
            let beta = rho_bar + root / gamma;
            (vec![1.0 / beta; n], vec![beta; n])
        }
        ScheduleKind::StronglyConvex { mu } => {
            positive("mu", *mu)?;
            let betas: Vec<f64> = (0..n).map(|t| mu * (t as f64 + 1.0) / 2.0).collect();
            (betas.iter().map(|b| 1.0 / b).collect(), betas)
        }
        ScheduleKind::Custom { betas } => {
            if betas.is_empty() {
                return Err(Error::param("betas", "must not be empty"));
            }
            for b in betas {
                positive("betas", *b)?;
            }
            (betas.iter().map(|b| 1.0 / b).collect(), betas.clone())
        }
    };
    Ok(Schedule { kind, alphas, betas })
}

/// Number of steps `T + 1` covering `epochs` passes of `m` samples, as a
/// horizon `T`.
pub fn horizon_for_epochs(epochs: usize, m: usize) -> usize {
    (epochs * m).max(1) - 1
}

impl Schedule {
    /// `T`.
    pub fn horizon(&self) -> usize {
        self.betas.len() - 1
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t]
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Subgradient-method selection weights `alpha_t / sum alpha`.
    pub fn psg_weights(&self) -> Vec<f64> {
        normalize(self.alphas.clone())
    }

    /// Model-based selection weights, proportional to
    /// `(rho_bar - tau - eta) / (beta_t - eta)`; the numerator cancels.
    pub fn model_weights(&self, eta: f64) -> Result<Vec<f64>> {
        let mut w = Vec::with_capacity(self.betas.len());
        for &beta in &self.betas {
            if !(beta > eta) {
                return Err(Error::NonconvexSubproblem { beta, eta });
            }
            w.push(1.0 / (beta - eta));
        }
        Ok(normalize(w))
    }

    /// Stepsize parameter `gamma` of the constant schedules.
    pub fn gamma(&self) -> Option<f64> {
        match self.kind {
            ScheduleKind::ConstantAlpha { gamma } | ScheduleKind::ConstantBeta { gamma, .. } => Some(gamma),
            _ => None,
        }
    }

    /// The subgradient rate guarantee on weakly convex problems asks for
    /// `gamma <= 1/(2 rho)`. Violations are logged, or rejected when `strict`.
    pub fn check_weakly_convex_regime(&self, rho: f64, strict: bool) -> Result<()> {
        let Some(gamma) = self.gamma() else {
            return Ok(());
        };
        if rho > 0.0 && gamma > 0.5 / rho {
            if strict {
                return Err(Error::param("gamma", format!("{gamma} exceeds 1/(2 rho) = {}", 0.5 / rho)));
            }
            log::warn!("gamma = {gamma} exceeds 1/(2 rho) = {}; rate guarantee does not apply", 0.5 / rho);
        }
        Ok(())
    }
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AveragingMode {
    /// Plain mean of `x_1, ..., x_{T+1}`.
    Uniform,
    /// `(1 / sum alpha) sum alpha_t x_{t+1}`.
    StepWeighted,
    /// `(2 / ((T+2)(T+3) - 2)) sum_{t=1}^{T+1} (t+1) x_t`.
    StronglyConvex,
}

impl AveragingMode {
    /// Coefficients on `x_1, ..., x_{T+1}`.
    pub fn coefficients(&self, alphas: &[f64]) -> Vec<f64> {
        let n = alphas.len();
        match self {
            AveragingMode::Uniform => vec![1.0 / n as f64; n],
            AveragingMode::StepWeighted => normalize(alphas.to_vec()),
            AveragingMode::StronglyConvex => {
                let t = (n - 1) as f64;
                let scale = 2.0 / ((t + 2.0) * (t + 3.0) - 2.0);
                (1..=n).map(|k| scale * (k as f64 + 1.0)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Keep every iterate `x_0, ..., x_{T+1}`, not just epoch snapshots.
    pub full_trajectory: bool,
    pub averaging: Option<AveragingMode>,
    /// Evaluate the full objective at every epoch boundary.
    pub log_objective: bool,
    /// Reject stepsizes outside the weakly convex regime instead of warning.
    pub strict_stepsize: bool,
    pub record_wall_time: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            full_trajectory: false,
            averaging: None,
            log_objective: true,
            strict_stepsize: false,
            record_wall_time: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Step counts at which snapshots were taken: `0, m, 2m, ...` and `T + 1`.
    pub epoch_steps: Vec<usize>,
    pub iterates: Vec<DenseVector>,
    /// `f + r` over the full data at each snapshot (empty when not logged).
    pub objective_per_epoch: Vec<f64>,
    /// `x_0, ..., x_{T+1}` when retained.
    pub trajectory: Option<Vec<DenseVector>>,
    /// Selection weights over `0..=T`.
    pub weights: Vec<f64>,
    pub t_star: usize,
    pub x_star: DenseVector,
    pub final_iterate: DenseVector,
    pub averaged_iterate: Option<DenseVector>,
    /// Per-step `alpha_t` (or `1/beta_t`), used by the averaging modes.
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
    pub wall_time: Option<Duration>,
}

impl RunRecord {
    pub fn epochs(&self) -> usize {
        self.epoch_steps.len() - 1
    }
}

/// Draws an index from the categorical distribution `weights`.
pub fn sample_categorical(weights: &[f64], rng: &mut RngStream) -> Result<usize> {
    let last = weights.iter().rposition(|w| *w > 0.0).ok_or(Error::EmptyTrajectory)?;
    let total: f64 = weights.iter().sum();
    let target = rng.uniform() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc && *w > 0.0 {
            return Ok(i);
        }
    }
    Ok(last)
}

/// Draws `t*` from `weights` and returns it with `x_{t*}` from the retained
/// trajectory.
pub fn select_iterate(record: &RunRecord, weights: &[f64], rng: &mut RngStream) -> Result<(usize, DenseVector)> {
    let trajectory = record.trajectory.as_ref().ok_or(Error::TrajectoryNotRetained)?;
    if trajectory.is_empty() || weights.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    check_len(weights.len(), trajectory.len())?;
    let t = sample_categorical(weights, rng)?;
    Ok((t, trajectory[t].clone()))
}

fn check_len(weights: usize, trajectory: usize) -> Result<()> {
    if weights <= trajectory {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: trajectory,
            got: weights,
        })
    }
}

/// Convex combination of `x_1, ..., x_{T+1}` from the retained trajectory.
pub fn weighted_average(record: &RunRecord, mode: AveragingMode) -> Result<DenseVector> {
    let trajectory = record.trajectory.as_ref().ok_or(Error::TrajectoryNotRetained)?;
    if trajectory.len() < 2 {
        return Err(Error::EmptyTrajectory);
    }
    let coeffs = mode.coefficients(&record.alphas);
    let mut acc = vec![0.0; trajectory[0].dim()];
    for (c, x) in coeffs.iter().zip(&trajectory[1..]) {
        acc.iter_mut().zip(x.iter()).for_each(|(a, xi)| *a += c * xi);
    }
    Ok(DenseVector::from_vec_unchecked(acc))
}

enum Stepper<'a> {
    Subgradient,
    Model(ModelFamily, &'a Schedule),
}

/// Proximal stochastic subgradient method:
/// `x_{t+1} = prox_{alpha_t r}(x_t - alpha_t G(x_t, xi_t))`, with `t*` drawn
/// with probability `alpha_t / sum alpha`.
pub fn run_psg(
    problem: &ProblemInstance,
    reg: &Regularizer,
    schedule: &Schedule,
    x0: &DenseVector,
    rng: &mut RngStream,
    options: &RunOptions,
) -> Result<RunRecord> {
    schedule.check_weakly_convex_regime(problem.weak_convexity(), options.strict_stepsize)?;
    let weights = schedule.psg_weights();
    run(problem, reg, Stepper::Subgradient, schedule.alphas(), weights, x0, rng, options)
}

/// Stochastic model-based method:
/// `x_{t+1} = argmin r + f_{x_t}(., xi_t) + (beta_t/2)||. - x_t||^2`, with
/// `t*` drawn with probability proportional to `1 / (beta_t - eta)`.
pub fn run_model_based(
    problem: &ProblemInstance,
    reg: &Regularizer,
    family: ModelFamily,
    schedule: &Schedule,
    x0: &DenseVector,
    rng: &mut RngStream,
    options: &RunOptions,
) -> Result<RunRecord> {
    let eta = problem.constants(family).eta;
    // Closed-form steps stay exact for beta <= eta, but the selection rule
    // needs beta > eta; fall back to alpha-proportional weights there. The
    // generic step still rejects such beta on its own.
    let weights = match schedule.model_weights(eta) {
        Err(Error::NonconvexSubproblem { beta, .. }) => {
            log::debug!("beta {beta} <= eta {eta}: selecting t* with weights proportional to 1/beta");
            schedule.psg_weights()
        }
        other => other?,
    };
    let alphas: Vec<f64> = schedule.betas().iter().map(|b| 1.0 / b).collect();
    run(problem, reg, Stepper::Model(family, schedule), &alphas, weights, x0, rng, options)
}

#[allow(clippy::too_many_arguments)]
fn run(
    problem: &ProblemInstance,
    reg: &Regularizer,
    stepper: Stepper,
    alphas: &[f64],
    weights: Vec<f64>,
    x0: &DenseVector,
    rng: &mut RngStream,
    options: &RunOptions,
) -> Result<RunRecord> {
    problem.check_regularizer(reg)?;
    problem.check_point(x0)?;
    let start = Instant::now();
    let steps = alphas.len();
    let m = problem.num_data();
    let n = x0.dim();

    // Drawn up front from a separate stream so only x_{t*} needs keeping.
    let t_star = sample_categorical(&weights, &mut rng.selection_stream())?;
    let averaging = options.averaging.map(|mode| mode.coefficients(alphas));

    let mut x = x0.as_slice().to_vec();
    let mut next = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut avg = averaging.as_ref().map(|_| vec![0.0; n]);
    let mut x_star = None;
    let mut trajectory = options.full_trajectory.then(|| vec![x0.clone()]);
    let mut epoch_steps = vec![0];
    let mut iterates = vec![x0.clone()];
    let mut objective = Vec::new();
    if options.log_objective {
        objective.push(problem.composite_slice(reg, &x));
    }

    for t in 0..steps {
        if t == t_star {
            x_star = Some(DenseVector::from_vec_unchecked(x.clone()));
        }
        let sample = rng.index(m);
        match &stepper {
            Stepper::Subgradient => linear_step_into(problem, reg, &x, sample, alphas[t], &mut scratch, &mut next),
            Stepper::Model(family, schedule) => {
                model_step_into(*family, problem, reg, &x, sample, schedule.beta(t), &mut scratch, &mut next)?
            }
        }
        if !all_finite(&next) {
            return Err(Error::Diverged { step: t });
        }
        std::mem::swap(&mut x, &mut next);
        if let (Some(acc), Some(c)) = (avg.as_mut(), averaging.as_ref()) {
            acc.iter_mut().zip(&x).for_each(|(a, xi)| *a += c[t] * xi);
        }
        if let Some(tr) = trajectory.as_mut() {
            tr.push(DenseVector::from_vec_unchecked(x.clone()));
        }
        let done = t + 1;
        if done % m == 0 || done == steps {
            epoch_steps.push(done);
            iterates.push(DenseVector::from_vec_unchecked(x.clone()));
            if options.log_objective {
                let value = problem.composite_slice(reg, &x);
                log::debug!("epoch {} step {done}: objective {value:e}", epoch_steps.len() - 1);
                objective.push(value);
            }
        }
    }

    Ok(RunRecord {
        epoch_steps,
        iterates,
        objective_per_epoch: objective,
        trajectory,
        weights,
        t_star,
        x_star: x_star.unwrap_or_else(|| DenseVector::from_vec_unchecked(x.clone())),
        final_iterate: DenseVector::from_vec_unchecked(x),
        averaged_iterate: avg.map(DenseVector::from_vec_unchecked),
        alphas: alphas.to_vec(),
        seed: rng.seed(),
        stream: rng.stream(),
        wall_time: options.record_wall_time.then(|| start.elapsed()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;
    use crate::problems::generate_phase_retrieval;

    fn abs_problem() -> ProblemInstance {
        ProblemInstance::lad(&[DenseVector::new(vec![1.0]).unwrap()], vec![0.0], 0.0).unwrap()
    }

    fn full() -> RunOptions {
        RunOptions {
            full_trajectory: true,
            ..RunOptions::default()
        }
    }

    #[test]
    fn schedule_values() {
        let s = make_schedule(ScheduleKind::ConstantAlpha { gamma: 1.0 }, 3).unwrap();
        assert_eq!(s.alphas(), &[0.5; 4]);
        assert_eq!(s.psg_weights(), vec![0.25; 4]);
        let s = make_schedule(ScheduleKind::StronglyConvex { mu: 2.0 }, 3).unwrap();
        assert_eq!(s.betas(), &[1.0, 2.0, 3.0, 4.0]);
        let w = s.model_weights(0.0).unwrap();
        assert!(w.windows(2).all(|p| p[0] > p[1]));
        let s = make_schedule(ScheduleKind::ConstantBeta { rho_bar: 2.0, gamma: 0.5 }, 3).unwrap();
        assert_eq!(s.beta(0), 6.0);
        assert_eq!(s.model_weights(1.0).unwrap(), vec![0.25; 4]);
        assert!(make_schedule(ScheduleKind::ConstantAlpha { gamma: 0.0 }, 3).is_err());
        assert!(make_schedule(ScheduleKind::StronglyConvex { mu: -1.0 }, 3).is_err());
        assert!(make_schedule(ScheduleKind::Custom { betas: vec![] }, 0).is_err());
    }

    #[test]
    fn strict_regime_rejects_large_gamma() {
        let s = make_schedule(ScheduleKind::ConstantAlpha { gamma: 1.0 }, 3).unwrap();
        assert!(s.check_weakly_convex_regime(1.0, false).is_ok());
        assert!(s.check_weakly_convex_regime(1.0, true).is_err());
        assert!(s.check_weakly_convex_regime(0.5, true).is_ok());
    }

    #[test]
    fn psg_on_abs() {
        let p = abs_problem();
        let s = make_schedule(ScheduleKind::Custom { betas: vec![2.0; 4] }, 0).unwrap();
        let x0 = DenseVector::new(vec![1.0]).unwrap();
        let rec = run_psg(&p, &Regularizer::Zero, &s, &x0, &mut RngStream::new(1, 0), &full()).unwrap();
        let xs: Vec<f64> = rec.trajectory.unwrap().iter().map(|x| x.as_slice()[0]).collect();
        assert_eq!(xs, vec![1.0, 0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn proxpoint_soft_thresholds() {
        let p = abs_problem();
        let s = make_schedule(ScheduleKind::Custom { betas: vec![1.0] }, 0).unwrap();
        let x0 = DenseVector::new(vec![1.0]).unwrap();
        let rec = run_model_based(
            &p,
            &Regularizer::Zero,
            ModelFamily::ProxPoint,
            &s,
            &x0,
            &mut RngStream::new(1, 0),
            &full(),
        )
        .unwrap();
        assert_eq!(rec.final_iterate.as_slice(), &[0.0]);
    }

    #[test]
    fn linear_family_matches_psg_bitwise() {
        let p = generate_phase_retrieval(&mut RngStream::new(3, 0), 4, 12).unwrap();
        let x0 = DenseVector::new(vec![0.3, -0.2, 0.5, 1.0]).unwrap();
        let s = make_schedule(ScheduleKind::ConstantBeta { rho_bar: 3.0, gamma: 0.2 }, 59).unwrap();
        let reg = Regularizer::indicator_ball(1.5).unwrap();
        let a = run_psg(&p, &reg, &s, &x0, &mut RngStream::new(9, 2), &full()).unwrap();
        let b = run_model_based(&p, &reg, ModelFamily::Linear, &s, &x0, &mut RngStream::new(9, 2), &full()).unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.t_star, b.t_star);
        for x in a.trajectory.unwrap() {
            assert!(norm(x.as_slice()) <= 1.5 + 1e-12);
        }
    }

    #[test]
    fn record_bookkeeping() {
        let p = generate_phase_retrieval(&mut RngStream::new(3, 0), 3, 5).unwrap();
        let x0 = DenseVector::new(vec![0.3, -0.2, 0.5]).unwrap();
        let s = make_schedule(ScheduleKind::ConstantAlpha { gamma: 0.05 }, 11).unwrap();
        let opts = RunOptions {
            averaging: Some(AveragingMode::StepWeighted),
            ..full()
        };
        let rec = run_psg(&p, &Regularizer::Zero, &s, &x0, &mut RngStream::new(1, 1), &opts).unwrap();
        assert_eq!(rec.epoch_steps, vec![0, 5, 10, 12]);
        assert_eq!(rec.objective_per_epoch.len(), rec.epochs() + 1);
        assert!(rec.t_star <= s.horizon());
        assert_eq!(rec.trajectory.as_ref().unwrap()[rec.t_star], rec.x_star);
        let avg = weighted_average(&rec, AveragingMode::StepWeighted).unwrap();
        let online = rec.averaged_iterate.as_ref().unwrap();
        assert!(avg.distance(online).unwrap() < 1e-14);
        let mut sel = RngStream::new(1, 1).selection_stream();
        let (t, x) = select_iterate(&rec, &rec.weights, &mut sel).unwrap();
        assert_eq!((t, &x), (rec.t_star, &rec.x_star));
        let again = run_psg(&p, &Regularizer::Zero, &s, &x0, &mut RngStream::new(1, 1), &opts).unwrap();
        assert_eq!(again, rec);
    }

    #[test]
    fn averaging_coefficients() {
        let c = AveragingMode::StronglyConvex.coefficients(&[1.0, 1.0]);
        assert!((c[0] - 0.4).abs() < 1e-15 && (c[1] - 0.6).abs() < 1e-15);
        for mode in [AveragingMode::Uniform, AveragingMode::StepWeighted, AveragingMode::StronglyConvex] {
            let c = mode.coefficients(&[0.3, 0.2, 0.7, 0.1, 0.9]);
            assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn selection_edge_cases() {
        let mut rng = RngStream::new(4, 0);
        assert_eq!(sample_categorical(&[0.0, 0.0, 1.0], &mut rng).unwrap(), 2);
        assert!(sample_categorical(&[0.0, 0.0], &mut rng).is_err());
        let mut rec_rng = RngStream::new(4, 1);
        let p = abs_problem();
        let s = make_schedule(ScheduleKind::Custom { betas: vec![2.0; 3] }, 0).unwrap();
        let x0 = DenseVector::new(vec![1.0]).unwrap();
        let rec = run_psg(&p, &Regularizer::Zero, &s, &x0, &mut rec_rng, &RunOptions::default()).unwrap();
        assert_eq!(weighted_average(&rec, AveragingMode::Uniform), Err(Error::TrajectoryNotRetained));
        assert!(select_iterate(&rec, &[1.0], &mut rng).is_err());
    }
}
