//! Stepsize sweeps: one run per (method, stepsize, round) cell.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use weakcvx::algorithms::{make_schedule, run_model_based, run_psg, RunOptions, ScheduleKind};
use weakcvx::{ModelFamily, Regularizer, RngStream};

use crate::config::SweepConfig;
use crate::error::{HarnessError, Result};

/// Thread-count override for the work pool.
pub const THREADS_ENV: &str = "WEAKCVX_THREADS";

pub const CSV_HEADER: [&str; 7] = [
    "method",
    "stepsize",
    "round",
    "final_gap",
    "epochs_to_target",
    "wall_ms",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub method: ModelFamily,
    pub grid_index: usize,
    pub stepsize: f64,
    pub round: usize,
    /// `phi(x_final) - 0`; infinite when the run diverged.
    pub final_gap: f64,
    pub epochs_to_target: Option<usize>,
    pub wall_ms: f64,
    pub seed: u64,
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: ModelFamily,
    pub grid_index: usize,
    pub stepsize: f64,
    pub mean_final_gap: f64,
    /// Mean over the rounds that reached the target.
    pub mean_epochs_to_target: Option<f64>,
    pub mean_wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub summary: Vec<SummaryRow>,
    pub seed: u64,
}

fn method_index(m: ModelFamily) -> u64 {
    ModelFamily::ALL.iter().position(|f| *f == m).unwrap_or(0) as u64
}

/// Stream of a cell; slot 0 of the method field is left for the per-round
/// instance streams.
pub fn cell_stream(method: ModelFamily, grid_index: usize, round: usize) -> u64 {
    ((method_index(method) + 1) << 48) | ((grid_index as u64) << 24) | round as u64
}

pub fn instance_stream(round: usize) -> u64 {
    round as u64
}

/// Builds a pool honouring [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| HarnessError::invalid(THREADS_ENV, format!("`{v}` is not a thread count")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| HarnessError::invalid(THREADS_ENV, e.to_string()))
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let grid = config.stepsize.points();
    let instances = (0..config.rounds)
        .map(|r| config.problem.instance(&mut RngStream::new(config.seed, instance_stream(r))))
        .collect::<Result<Vec<_>>>()?;
    let mut coords = Vec::new();
    for &method in &config.methods {
        for g in 0..grid.len() {
            for r in 0..config.rounds {
                coords.push((method, g, r));
            }
        }
    }
    let pool = thread_pool()?;
    let mut cells = pool.install(|| {
        coords
            .par_iter()
            .map(|&(method, g, r)| {
                let (problem, x0) = &instances[r];
                run_cell(config, problem, x0, method, g, grid[g], r)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    cells.sort_by_key(|c| (method_index(c.method), c.grid_index, c.round));
    let summary = summarize(&cells);
    Ok(SweepResult {
        cells,
        summary,
        seed: config.seed,
    })
}

fn run_cell(
    config: &SweepConfig,
    problem: &weakcvx::ProblemInstance,
    x0: &weakcvx::DenseVector,
    method: ModelFamily,
    grid_index: usize,
    stepsize: f64,
    round: usize,
) -> Result<SweepCell> {
    let stream = cell_stream(method, grid_index, round);
    let mut rng = RngStream::new(config.seed, stream);
    let steps = config.epochs * problem.num_data();
    let schedule = make_schedule(
        ScheduleKind::Custom {
            betas: vec![1.0 / stepsize; steps],
        },
        0,
    )?;
    let options = RunOptions {
        record_wall_time: config.record_wall_time,
        ..RunOptions::default()
    };
    let reg = Regularizer::Zero;
    let outcome = match method {
        ModelFamily::Linear => run_psg(problem, &reg, &schedule, x0, &mut rng, &options),
        family => run_model_based(problem, &reg, family, &schedule, x0, &mut rng, &options),
    };
    let mut cell = SweepCell {
        method,
        grid_index,
        stepsize,
        round,
        final_gap: f64::INFINITY,
        epochs_to_target: None,
        wall_ms: 0.0,
        seed: config.seed,
        stream,
    };
    match outcome {
        Ok(record) => {
            cell.final_gap = record.objective_per_epoch.last().copied().unwrap_or(f64::INFINITY).max(0.0);
            cell.epochs_to_target = record.objective_per_epoch.iter().position(|v| *v <= config.target);
            cell.wall_ms = record.wall_time.map_or(0.0, |d| d.as_secs_f64() * 1e3);
        }
        Err(weakcvx::Error::Diverged { step }) => {
            log::debug!("{method} stepsize {stepsize} round {round} diverged at step {step}");
        }
        Err(e) => return Err(e.into()),
    }
    Ok(cell)
}

fn summarize(cells: &[SweepCell]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(u64, usize), Vec<&SweepCell>> = BTreeMap::new();
    for c in cells {
        groups.entry((method_index(c.method), c.grid_index)).or_default().push(c);
    }
    groups
        .into_values()
        .map(|group| {
            let n = group.len() as f64;
            let reached: Vec<f64> = group.iter().filter_map(|c| c.epochs_to_target).map(|e| e as f64).collect();
            SummaryRow {
                method: group[0].method,
                grid_index: group[0].grid_index,
                stepsize: group[0].stepsize,
                mean_final_gap: group.iter().map(|c| c.final_gap).sum::<f64>() / n,
                mean_epochs_to_target: (!reached.is_empty()).then(|| reached.iter().sum::<f64>() / reached.len() as f64),
                mean_wall_ms: group.iter().map(|c| c.wall_ms).sum::<f64>() / n,
            }
        })
        .collect()
}

impl SweepResult {
    /// Number of stepsizes whose mean final gap is at most `target`.
    pub fn reach_count(&self, method: ModelFamily, target: f64) -> usize {
        self.summary
            .iter()
            .filter(|s| s.method == method && s.mean_final_gap <= target)
            .count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        let seed = self.seed.to_string();
        for c in &self.cells {
            w.write_record([
                c.method.as_str().to_string(),
                c.stepsize.to_string(),
                c.round.to_string(),
                c.final_gap.to_string(),
                c.epochs_to_target.map_or("NA".to_string(), |e| e.to_string()),
                c.wall_ms.to_string(),
                seed.clone(),
            ])?;
        }
        for s in &self.summary {
            w.write_record([
                s.method.as_str().to_string(),
                s.stepsize.to_string(),
                "mean".to_string(),
                s.mean_final_gap.to_string(),
                s.mean_epochs_to_target.map_or("NA".to_string(), |e| e.to_string()),
                s.mean_wall_ms.to_string(),
                seed.clone(),
            ])?;
        }
        w.flush().map_err(|e| HarnessError::io("csv output", e))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::StepGrid;
    use crate::presets::ProblemSpec;

    fn small() -> SweepConfig {
        SweepConfig {
            problem: ProblemSpec::phase(3, 6),
            methods: vec![ModelFamily::Linear, ModelFamily::ProxLinear],
            stepsize: StepGrid {
                count: 3,
                min: 0.01,
                max: 0.2,
                ..StepGrid::default()
            },
            epochs: 5,
            rounds: 2,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn cardinality_and_order() {
        let r = run_sweep(&small()).unwrap();
        assert_eq!(r.cells.len(), 12);
        assert_eq!(r.summary.len(), 6);
        assert!(r.cells.iter().all(|c| c.final_gap >= 0.0 && c.wall_ms == 0.0));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 12 + 6);
        assert!(text.starts_with("method,stepsize,round,final_gap,epochs_to_target,wall_ms,seed\n"));
    }

    #[test]
    fn streams_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for m in ModelFamily::ALL {
            for g in 0..100 {
                for r in 0..15 {
                    assert!(seen.insert(cell_stream(m, g, r)));
                }
            }
        }
        assert!(!seen.contains(&instance_stream(3)));
    }

    #[test]
    fn divergence_is_a_sentinel() {
        let mut c = small();
        c.methods = vec![ModelFamily::Linear];
        c.stepsize = StepGrid {
            count: 1,
            min: 1e6,
            max: 1e6,
            ..StepGrid::default()
        };
        let r = run_sweep(&c).unwrap();
        assert!(r.cells.iter().all(|c| c.final_gap.is_infinite() && c.epochs_to_target.is_none()));
    }
}
