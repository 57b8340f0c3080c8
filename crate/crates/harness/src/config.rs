//! Sweep configuration files (TOML).
//!
//! ```toml
//! preset = "phase-10-30"          # or a [problem] table
//! start = "independent"           # blind only; or "shared"
//! methods = ["sgd", "prox-linear", "prox-point"]
//! epochs = 100
//! rounds = 15
//! target = 1e-4
//! seed = 0
//! output = "sweep.csv"
//!
//! [stepsize]
//! count = 100
//! min = 1e-4
//! max = 1.0
//! spacing = "linear"
//! ```
//!
//! Every key is optional; an empty file gives the default phase retrieval
//! protocol on `phase-10-30`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use weakcvx::ModelFamily;

use crate::error::{HarnessError, Result};
use crate::presets::{ProblemSpec, StartPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// Grid of stepsizes `1/beta` (equal to `alpha` for the subgradient method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepGrid {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub spacing: Spacing,
}

impl Default for StepGrid {
    fn default() -> Self {
        StepGrid {
            count: 100,
            min: 1e-4,
            max: 1.0,
            spacing: Spacing::Linear,
        }
    }
}

impl StepGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                let s = k as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + s * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + s * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub problem: ProblemSpec,
    pub methods: Vec<ModelFamily>,
    pub stepsize: StepGrid,
    pub epochs: usize,
    pub rounds: usize,
    pub target: f64,
    pub seed: u64,
    pub output: PathBuf,
    pub record_wall_time: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            problem: ProblemSpec::phase(10, 30),
            methods: ModelFamily::ALL.to_vec(),
            stepsize: StepGrid::default(),
            epochs: 100,
            rounds: 15,
            target: 1e-4,
            seed: 0,
            output: PathBuf::from("sweep.csv"),
            record_wall_time: false,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    count: Option<usize>,
    min: Option<f64>,
    max: Option<f64>,
    spacing: Option<Spacing>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    problem: Option<ProblemSpec>,
    start: Option<StartPoint>,
    methods: Option<Vec<ModelFamily>>,
    stepsize: Option<RawGrid>,
    epochs: Option<usize>,
    rounds: Option<usize>,
    target: Option<f64>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    record_wall_time: Option<bool>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| HarnessError::Parse {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        let defaults = SweepConfig::default();
        let mut problem: ProblemSpec = match (raw.preset, raw.problem) {
            (Some(_), Some(_)) => {
                return Err(HarnessError::invalid("preset", "give either `preset` or `[problem]`, not both"))
            }
            (Some(name), None) => name.parse()?,
            (None, Some(spec)) => spec,
            (None, None) => defaults.problem,
        };
        if let Some(start) = raw.start {
            problem.start = start;
        }
        let grid = raw.stepsize.unwrap_or_default();
        let config = SweepConfig {
            problem,
            methods: raw.methods.unwrap_or(defaults.methods),
            stepsize: StepGrid {
                count: grid.count.unwrap_or(defaults.stepsize.count),
                min: grid.min.unwrap_or(defaults.stepsize.min),
                max: grid.max.unwrap_or(defaults.stepsize.max),
                spacing: grid.spacing.unwrap_or(defaults.stepsize.spacing),
            },
            epochs: raw.epochs.unwrap_or(defaults.epochs),
            rounds: raw.rounds.unwrap_or(defaults.rounds),
            target: raw.target.unwrap_or(defaults.target),
            seed: raw.seed.unwrap_or(defaults.seed),
            output: raw.output.unwrap_or(defaults.output),
            record_wall_time: raw.record_wall_time.unwrap_or(defaults.record_wall_time),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        if self.methods.is_empty() {
            return Err(HarnessError::invalid("methods", "must list at least one method"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(HarnessError::invalid("methods", format!("`{m}` listed twice")));
            }
        }
        let g = &self.stepsize;
        if g.count == 0 {
            return Err(HarnessError::invalid("stepsize.count", "must be at least 1"));
        }
        if !(g.min > 0.0 && g.min.is_finite()) {
            return Err(HarnessError::invalid("stepsize.min", "must be positive and finite"));
        }
        if !g.max.is_finite() {
            return Err(HarnessError::invalid("stepsize.max", "must be finite"));
        }
        if g.min > g.max || (g.count > 1 && g.min == g.max) {
            return Err(HarnessError::invalid(
                "stepsize.min",
                format!("min {} must be below max {}", g.min, g.max),
            ));
        }
        if self.epochs == 0 {
            return Err(HarnessError::invalid("epochs", "must be at least 1"));
        }
        if self.rounds == 0 {
            return Err(HarnessError::invalid("rounds", "must be at least 1"));
        }
        if !(self.target > 0.0 && self.target.is_finite()) {
            return Err(HarnessError::invalid("target", "must be positive"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| HarnessError::io(path, e))
    }
}

pub fn load_config(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    SweepConfig::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = SweepConfig::parse("").unwrap();
        assert_eq!(c, SweepConfig::default());
        assert_eq!(c.stepsize.points().len(), 100);
        assert_eq!(c.problem, ProblemSpec::phase(10, 30));
    }

    #[test]
    fn grid_spacing() {
        let g = StepGrid {
            count: 3,
            min: 0.1,
            max: 0.5,
            spacing: Spacing::Linear,
        };
        assert_eq!(g.points(), vec![0.1, 0.30000000000000004, 0.5]);
        let g = StepGrid {
            count: 3,
            min: 0.01,
            max: 1.0,
            spacing: Spacing::Log,
        };
        let p = g.points();
        assert!((p[1] - 0.1).abs() < 1e-15 && (p[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn min_above_max_names_field() {
        let err = SweepConfig::parse("[stepsize]\nmin = 2.0\nmax = 1.0\n").unwrap_err();
        assert!(matches!(&err, HarnessError::Validation { field, .. } if field == "stepsize.min"), "{err}");
    }

    #[test]
    fn parse_error_has_line() {
        let err = SweepConfig::parse("epochs = 3\nrounds = \"x\"\n").unwrap_err();
        assert!(matches!(err, HarnessError::Parse { line: 2, .. }), "{err}");
        let err = SweepConfig::parse("epochs = 3\n\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, HarnessError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn round_trip() {
        let c = SweepConfig::parse(
            "preset = \"blind-10-10-30\"\nmethods = [\"sgd\", \"prox-point\"]\nseed = 7\n[stepsize]\ncount = 4\nspacing = \"log\"\n",
        )
        .unwrap();
        assert_eq!(SweepConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn start_key_sets_initial_point() {
        let c = SweepConfig::parse("preset = \"blind-10-10-30\"\nstart = \"shared\"\n").unwrap();
        assert_eq!(c.problem.start, StartPoint::Shared);
        assert_eq!(SweepConfig::parse(&c.to_toml()).unwrap(), c);
        assert!(SweepConfig::parse("start = \"nearby\"\n").is_err());
    }
}
