use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use weakcvx::{ModelFamily, RngStream};
use weakcvx_harness::sweep::instance_stream;
use weakcvx_harness::trace::{write_trace, write_trace_file};
use weakcvx_harness::{
    load_config, run_envelope_trace, run_sweep, verify_all, Fault, HarnessError, ProblemSpec, SweepConfig, TraceConfig,
    VerifyOptions,
};

#[derive(Parser)]
#[command(name = "weakcvx", version, about = "Sweeps, envelope traces and oracle checks for weakcvx")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a planted instance in the text container format.
    Generate {
        #[arg(long, default_value = "phase-10-30")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a stepsize sweep and write the CSV.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
    },
    /// Envelope gradient norms at epoch checkpoints of one run.
    Trace {
        #[arg(long, default_value = "phase-10-30")]
        preset: String,
        #[arg(long, default_value = "prox-linear")]
        method: String,
        #[arg(long, default_value_t = 0.01)]
        stepsize: f64,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        /// Comma-separated epochs (default: every epoch).
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Start from the planted solution.
        #[arg(long)]
        from_truth: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every oracle pairing; exits with status 2 on any failure.
    Verify {
        #[arg(long, default_value_t = VerifyOptions::default().instances)]
        instances: usize,
        #[arg(long, default_value_t = VerifyOptions::default().seed)]
        seed: u64,
        /// Run with a deliberate defect (test fixture).
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

enum Failure {
    Harness(HarnessError),
    Verification,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Harness(e)
    }
}

impl From<weakcvx::Error> for Failure {
    fn from(e: weakcvx::Error) -> Self {
        Failure::Harness(e.into())
    }
}

fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Harness(HarnessError::io(path, e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate { preset, seed, out } => {
            let spec: ProblemSpec = preset.parse()?;
            let (problem, _) = spec.instance(&mut RngStream::new(seed, instance_stream(0)))?;
            let text = problem.to_text();
            match out {
                Some(path) => std::fs::write(&path, text).map_err(io_err(&path))?,
                None => print!("{text}"),
            }
        }
        Command::Sweep {
            config,
            seed,
            out,
            preset,
        } => {
            let mut cfg = match config {
                Some(path) => load_config(&path)?,
                None => SweepConfig::default(),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.output = out;
            }
            if let Some(preset) = preset {
                cfg.problem = preset.parse()?;
            }
            cfg.validate()?;
            let result = run_sweep(&cfg)?;
            result.write_csv_file(&cfg.output)?;
            for method in &cfg.methods {
                log::info!(
                    "{method}: {} of {} stepsizes reach {:e}",
                    result.reach_count(*method, cfg.target),
                    cfg.stepsize.count,
                    cfg.target
                );
            }
        }
        Command::Trace {
            preset,
            method,
            stepsize,
            epochs,
            checkpoints,
            seed,
            from_truth,
            out,
        } => {
            let method: ModelFamily = method.parse()?;
            let checkpoints = if checkpoints.is_empty() {
                (0..=epochs).collect()
            } else {
                checkpoints
            };
            let mut cfg = TraceConfig::new(preset.parse()?, method, stepsize, epochs, checkpoints, seed);
            cfg.from_truth = from_truth;
            let rows = run_envelope_trace(&cfg)?;
            match out {
                Some(path) => write_trace_file(&rows, &path)?,
                None => write_trace(&rows, std::io::stdout().lock())?,
            }
        }
        Command::Verify {
            instances,
            seed,
            inject_fault,
        } => {
            let fault = inject_fault.map(|f| f.parse::<Fault>()).transpose()?;
            let reports = verify_all(&VerifyOptions { instances, seed, fault });
            let mut failed = 0;
            for r in &reports {
                println!(
                    "{} {:<52} n={:<6} max_err={:.3e} tol={:.1e}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.op_name,
                    r.instances_checked,
                    r.max_abs_error,
                    r.tolerance
                );
                if !r.passed {
                    failed += 1;
                    println!("     worst: {}", r.worst_instance);
                }
            }
            println!("{} reports, {failed} failed", reports.len());
            if failed > 0 {
                return Err(Failure::Verification);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(2),
        Err(Failure::Harness(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
