//! Experiment harness: sweep configuration, stepsize sweeps, envelope traces
//! and oracle verification.

pub mod config;
pub mod error;
pub mod presets;
pub mod sweep;
pub mod trace;
pub mod verify;

pub use config::{load_config, Spacing, StepGrid, SweepConfig};
pub use error::{HarnessError, Result};
pub use presets::{ProblemSpec, StartPoint};
pub use sweep::{run_sweep, SweepCell, SweepResult};
pub use trace::{run_envelope_trace, TraceConfig, TraceRow};
pub use verify::{verify_all, Fault, VerifyOptions};
