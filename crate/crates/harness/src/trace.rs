//! Envelope-gradient traces along a single run.

use std::io::Write;
use std::path::Path;

use weakcvx::algorithms::{make_schedule, run_model_based, run_psg, RunOptions, ScheduleKind};
use weakcvx::stationarity::{default_lambda, moreau_envelope};
use weakcvx::{ModelFamily, Regularizer, RngStream};

use crate::error::{HarnessError, Result};
use crate::presets::ProblemSpec;
use crate::sweep::{cell_stream, instance_stream};

pub const TRACE_HEADER: [&str; 5] = ["epoch", "lambda", "envelope_value", "grad_norm", "inner_suboptimality"];

#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    pub problem: ProblemSpec,
    pub method: ModelFamily,
    pub stepsize: f64,
    pub epochs: usize,
    pub checkpoints: Vec<usize>,
    pub seed: u64,
    /// Start at the planted solution instead of a random point.
    pub from_truth: bool,
    pub tol: f64,
}

impl TraceConfig {
    pub fn new(problem: ProblemSpec, method: ModelFamily, stepsize: f64, epochs: usize, checkpoints: Vec<usize>, seed: u64) -> Self {
        TraceConfig {
            problem,
            method,
            stepsize,
            epochs,
            checkpoints,
            seed,
            from_truth: false,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub epoch: usize,
    pub lambda: f64,
    pub envelope_value: f64,
    pub grad_norm: f64,
    pub inner_suboptimality: f64,
}

pub fn run_envelope_trace(config: &TraceConfig) -> Result<Vec<TraceRow>> {
    if !(config.stepsize > 0.0 && config.stepsize.is_finite()) {
        return Err(HarnessError::invalid("stepsize", "must be positive"));
    }
    if config.epochs == 0 {
        return Err(HarnessError::invalid("epochs", "must be at least 1"));
    }
    if let Some(&c) = config.checkpoints.iter().find(|&&c| c > config.epochs) {
        return Err(HarnessError::invalid("checkpoints", format!("{c} exceeds epochs {}", config.epochs)));
    }
    let (problem, mut x0) = config.problem.instance(&mut RngStream::new(config.seed, instance_stream(0)))?;
    if config.from_truth {
        if let Some(truth) = problem.ground_truth() {
            x0 = truth.clone();
        }
    }
    let mut rng = RngStream::new(config.seed, cell_stream(config.method, 0, 0));
    let schedule = make_schedule(
        ScheduleKind::Custom {
            betas: vec![1.0 / config.stepsize; config.epochs * problem.num_data()],
        },
        0,
    )?;
    let options = RunOptions {
        log_objective: false,
        ..RunOptions::default()
    };
    let reg = Regularizer::Zero;
    let record = match config.method {
        ModelFamily::Linear => run_psg(&problem, &reg, &schedule, &x0, &mut rng, &options)?,
        family => run_model_based(&problem, &reg, family, &schedule, &x0, &mut rng, &options)?,
    };
    let lambda = default_lambda(&problem);
    config
        .checkpoints
        .iter()
        .map(|&epoch| {
            let r = moreau_envelope(&problem, &reg, &record.iterates[epoch], lambda, config.tol)?;
            Ok(TraceRow {
                epoch,
                lambda,
                envelope_value: r.envelope_value,
                grad_norm: r.grad_norm,
                inner_suboptimality: r.inner_suboptimality,
            })
        })
        .collect()
}

pub fn write_trace<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in rows {
        w.write_record([
            r.epoch.to_string(),
            r.lambda.to_string(),
            r.envelope_value.to_string(),
            r.grad_norm.to_string(),
            r.inner_suboptimality.to_string(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io("csv output", e))?;
    Ok(())
}

pub fn write_trace_file(rows: &[TraceRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_trace(rows, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_zero_matches_direct_envelope() {
        let spec = ProblemSpec::phase(4, 10);
        let cfg = TraceConfig::new(spec, ModelFamily::ProxLinear, 0.05, 3, vec![0, 3], 5);
        let rows = run_envelope_trace(&cfg).unwrap();
        let (p, x0) = spec.instance(&mut RngStream::new(5, instance_stream(0))).unwrap();
        let direct = moreau_envelope(&p, &Regularizer::Zero, &x0, default_lambda(&p), 1e-8).unwrap();
        assert_eq!(rows[0].grad_norm, direct.grad_norm);
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn truth_start_is_stationary() {
        let mut cfg = TraceConfig::new(ProblemSpec::phase(4, 10), ModelFamily::ProxPoint, 0.05, 2, vec![0, 1, 2], 1);
        cfg.from_truth = true;
        for row in run_envelope_trace(&cfg).unwrap() {
            assert!(row.grad_norm < 1e-3, "{row:?}");
        }
    }
}
