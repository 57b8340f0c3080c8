//! Named problem sizes and the per-round instance / starting point draw.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use weakcvx::problems::{generate_blind_deconvolution, generate_lad, generate_phase_retrieval};
use weakcvx::rng::unit_sphere_point;
use weakcvx::{DenseVector, ProblemInstance, ProblemKind, RngStream};

use crate::error::{HarnessError, Result};

pub const PRESET_NAMES: [&str; 7] = [
    "phase-10-30",
    "phase-50-150",
    "phase-100-300",
    "blind-10-10-30",
    "blind-10-10-50",
    "blind-50-50-200",
    "blind-100-100-400",
];

/// Starting point of a blind deconvolution run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartPoint {
    /// Independent unit-sphere points for the two factors.
    #[default]
    Independent,
    /// One unit-sphere point used for both factors (needs `d1 == d2`).
    Shared,
}

/// A realizable problem family and its sizes. `d2` and `start` are only used
/// by blind deconvolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub d1: usize,
    #[serde(default)]
    pub d2: usize,
    pub m: usize,
    #[serde(default)]
    pub start: StartPoint,
}

impl ProblemSpec {
    pub fn phase(d: usize, m: usize) -> Self {
        ProblemSpec {
            kind: ProblemKind::PhaseRetrieval,
            d1: d,
            d2: 0,
            m,
            start: StartPoint::default(),
        }
    }

    pub fn blind(d1: usize, d2: usize, m: usize) -> Self {
        ProblemSpec {
            kind: ProblemKind::BlindDeconvolution,
            d1,
            d2,
            m,
            start: StartPoint::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d1 == 0 {
            return Err(HarnessError::invalid("problem.d1", "must be positive"));
        }
        if self.m == 0 {
            return Err(HarnessError::invalid("problem.m", "must be positive"));
        }
        match self.kind {
            ProblemKind::PhaseRetrieval | ProblemKind::Lad => Ok(()),
            ProblemKind::BlindDeconvolution if self.d2 == 0 => {
                Err(HarnessError::invalid("problem.d2", "must be positive for blind deconvolution"))
            }
            ProblemKind::BlindDeconvolution if self.start == StartPoint::Shared && self.d1 != self.d2 => {
                Err(HarnessError::invalid("problem.start", "a shared start needs d1 == d2"))
            }
            ProblemKind::BlindDeconvolution => Ok(()),
            other => Err(HarnessError::invalid(
                "problem.kind",
                format!("`{other}` has no realizable generator"),
            )),
        }
    }

    /// Planted instance plus a starting point on the unit sphere (per factor
    /// for blind deconvolution, see [`StartPoint`]), both drawn from `rng`.
    pub fn instance(&self, rng: &mut RngStream) -> Result<(ProblemInstance, DenseVector)> {
        self.validate()?;
        let problem = match self.kind {
            ProblemKind::PhaseRetrieval => generate_phase_retrieval(rng, self.d1, self.m)?,
            ProblemKind::BlindDeconvolution => generate_blind_deconvolution(rng, self.d1, self.d2, self.m)?,
            _ => generate_lad(rng, self.d1, self.m, 0.0)?,
        };
        let x0 = if self.kind == ProblemKind::BlindDeconvolution {
            let x = unit_sphere_point(rng, self.d1)?;
            let y = match self.start {
                StartPoint::Independent => unit_sphere_point(rng, self.d2)?,
                StartPoint::Shared => x.clone(),
            };
            problem.stack_factors(&x, &y)?
        } else {
            unit_sphere_point(rng, self.d1)?
        };
        Ok((problem, x0))
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ProblemKind::PhaseRetrieval => write!(f, "phase-{}-{}", self.d1, self.m),
            ProblemKind::BlindDeconvolution => write!(f, "blind-{}-{}-{}", self.d1, self.d2, self.m),
            kind => write!(f, "{kind}-{}-{}", self.d1, self.m),
        }
    }
}

impl FromStr for ProblemSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        if !PRESET_NAMES.contains(&s) {
            return Err(HarnessError::invalid(
                "preset",
                format!("unknown preset `{s}` (expected one of {})", PRESET_NAMES.join(", ")),
            ));
        }
        let nums: Vec<usize> = s.split('-').skip(1).map(|t| t.parse().unwrap_or(0)).collect();
        Ok(match nums.as_slice() {
            [d, m] => ProblemSpec::phase(*d, *m),
            [d1, d2, m] => ProblemSpec::blind(*d1, *d2, *m),
            _ => unreachable!("preset names have two or three sizes"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_print() {
        for name in PRESET_NAMES {
            let spec: ProblemSpec = name.parse().unwrap();
            assert_eq!(spec.to_string(), name);
        }
        assert!("phase-3-4".parse::<ProblemSpec>().is_err());
    }

    #[test]
    fn instance_draw_is_reproducible() {
        let spec = ProblemSpec::blind(2, 3, 5);
        let (p, x0) = spec.instance(&mut RngStream::new(1, 2)).unwrap();
        let (q, y0) = spec.instance(&mut RngStream::new(1, 2)).unwrap();
        assert_eq!((p, x0.clone()), (q, y0));
        assert_eq!(x0.dim(), 5);
    }

    #[test]
    fn shared_start_uses_equal_factors() {
        let mut spec = ProblemSpec::blind(3, 3, 6);
        spec.start = StartPoint::Shared;
        let (_, x0) = spec.instance(&mut RngStream::new(4, 0)).unwrap();
        assert_eq!(x0.as_slice()[..3], x0.as_slice()[3..]);
        spec = ProblemSpec::blind(2, 3, 6);
        spec.start = StartPoint::Shared;
        assert!(spec.validate().is_err());
    }
}
