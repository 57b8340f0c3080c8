//! Plain-text instance container.
//!
//! ```text
//! weakcvx-instance v1
//! kind phase-retrieval
//! dims <d1> <d2> <m>
//! seed <seed> <stream>            (optional)
//! alpha <tail level>              (cvar only)
//! mu <weight>                     (lad only)
//! ground_truth <z_1> ... <z_n>    (optional)
//! rows <flattened a_i / u_i / Hessian>
//! cols <flattened v_i / linear term>   (blind, quadratic)
//! b <b_1> ... <b_m>               (all kinds except quadratic)
//! ```
//!
//! Floats are written in shortest round-trip form, so a save/load cycle
//! reproduces the instance bit for bit. Blank lines and `#` comments are
//! ignored.

use std::collections::HashMap;

use super::{ProblemInstance, ProblemKind};
use crate::error::{Error, Result};
use crate::linalg::DenseVector;

const HEADER: &str = "weakcvx-instance v1";

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for v in values {
        s.push(' ');
        s.push_str(&v.to_string());
    }
    s
}

fn chunks(flat: &[f64], width: usize) -> Result<Vec<DenseVector>> {
    flat.chunks_exact(width).map(DenseVector::from_slice).collect()
}

struct Fields {
    values: HashMap<String, (usize, Vec<String>)>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<(usize, Vec<String>)> {
        self.values.remove(key)
    }

    fn required(&mut self, key: &str, last_line: usize) -> Result<(usize, Vec<String>)> {
        self.take(key).ok_or_else(|| Error::Parse {
            line: last_line,
            message: format!("missing `{key}` line"),
        })
    }

    fn floats(&mut self, key: &str, last_line: usize) -> Result<Vec<f64>> {
        let (line, tokens) = self.required(key, last_line)?;
        parse_all(line, &tokens)
    }
}

fn parse_all<T: std::str::FromStr>(line: usize, tokens: &[String]) -> Result<Vec<T>> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<T>().map_err(|_| Error::Parse {
                line,
                message: format!("cannot parse `{t}`"),
            })
        })
        .collect()
}

fn expect_len<T>(line: usize, key: &str, values: &[T], want: usize) -> Result<()> {
    if values.len() == want {
        Ok(())
    } else {
        Err(Error::Parse {
            line,
            message: format!("`{key}` has {} values, expected {want}", values.len()),
        })
    }
}

impl ProblemInstance {
    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\nkind {}\ndims {} {} {}\n", self.kind, self.d1, self.d2, self.m);
        if let Some((seed, stream)) = self.seed {
            out.push_str(&format!("seed {seed} {stream}\n"));
        }
        match self.kind {
            ProblemKind::Cvar => out.push_str(&format!("alpha {}\n", self.alpha)),
            ProblemKind::Lad => out.push_str(&format!("mu {}\n", self.mu)),
            _ => {}
        }
        if let Some(truth) = &self.ground_truth {
            out.push_str(&format!("ground_truth{}\n", join(truth.as_slice())));
        }
        out.push_str(&format!("rows{}\n", join(&self.rows)));
        if matches!(self.kind, ProblemKind::BlindDeconvolution | ProblemKind::Quadratic) {
            out.push_str(&format!("cols{}\n", join(&self.cols)));
        }
        if self.kind != ProblemKind::Quadratic {
            out.push_str(&format!("b{}\n", join(&self.b)));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some((_, HEADER)) => {}
            Some((line, other)) => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected `{HEADER}`, found `{other}`"),
                })
            }
            None => {
                return Err(Error::Parse {
                    line: 0,
                    message: "empty instance file".into(),
                })
            }
        }
        let mut values = HashMap::new();
        let mut last_line = 1;
        for (line, content) in lines {
            last_line = line;
            let mut tokens = content.split_whitespace().map(str::to_owned);
            let key = tokens.next().unwrap_or_default();
            if values.insert(key.clone(), (line, tokens.collect())).is_some() {
                return Err(Error::Parse {
                    line,
                    message: format!("duplicate `{key}` line"),
                });
            }
        }
        let mut fields = Fields { values };

        let (line, kind) = fields.required("kind", last_line)?;
        expect_len(line, "kind", &kind, 1)?;
        let kind: ProblemKind = kind[0].parse().map_err(|_| Error::Parse {
            line,
            message: format!("unknown kind `{}`", kind[0]),
        })?;
        let (line, dims) = fields.required("dims", last_line)?;
        let dims: Vec<usize> = parse_all(line, &dims)?;
        expect_len(line, "dims", &dims, 3)?;
        let (d1, d2, m) = (dims[0], dims[1], dims[2]);
        if d1 == 0 || m == 0 {
            return Err(Error::Parse {
                line,
                message: "dimensions must be positive".into(),
            });
        }

        let (rows_line, _) = fields.values.get("rows").cloned().unwrap_or((last_line, Vec::new()));
        let rows = fields.floats("rows", last_line)?;
        let rows_len = if kind == ProblemKind::Quadratic { d1 * d1 } else { m * d1 };
        expect_len(rows_line, "rows", &rows, rows_len)?;

        let b = if kind == ProblemKind::Quadratic {
            Vec::new()
        } else {
            let line = fields.values.get("b").map_or(last_line, |(l, _)| *l);
            let b = fields.floats("b", last_line)?;
            expect_len(line, "b", &b, m)?;
            b
        };

        let problem = match kind {
            ProblemKind::PhaseRetrieval => ProblemInstance::phase_retrieval(&chunks(&rows, d1)?, b)?,
            ProblemKind::BlindDeconvolution => {
                let line = fields.values.get("cols").map_or(last_line, |(l, _)| *l);
                let cols = fields.floats("cols", last_line)?;
                if d2 == 0 {
                    return Err(Error::Parse {
                        line,
                        message: "blind deconvolution needs d2 >= 1".into(),
                    });
                }
                expect_len(line, "cols", &cols, m * d2)?;
                ProblemInstance::blind_deconvolution(&chunks(&rows, d1)?, &chunks(&cols, d2)?, b)?
            }
            ProblemKind::Lad => {
                let mu = fields.floats("mu", last_line)?;
                expect_len(last_line, "mu", &mu, 1)?;
                ProblemInstance::lad(&chunks(&rows, d1)?, b, mu[0])?
            }
            ProblemKind::Cvar => {
                let alpha = fields.floats("alpha", last_line)?;
                expect_len(last_line, "alpha", &alpha, 1)?;
                ProblemInstance::cvar(&chunks(&rows, d1)?, b, alpha[0])?
            }
            ProblemKind::Quadratic => {
                let line = fields.values.get("cols").map_or(last_line, |(l, _)| *l);
                let cols = fields.floats("cols", last_line)?;
                expect_len(line, "cols", &cols, d1)?;
                ProblemInstance::quadratic(rows, cols)?
            }
        };
        let mut problem = problem;
        if let Some((line, tokens)) = fields.take("seed") {
            let s: Vec<u64> = parse_all(line, &tokens)?;
            expect_len(line, "seed", &s, 2)?;
            problem = problem.with_seed(s[0], s[1]);
        }
        if let Some((line, tokens)) = fields.take("ground_truth") {
            let truth: Vec<f64> = parse_all(line, &tokens)?;
            problem = problem.with_ground_truth(DenseVector::new(truth)?)?;
        }
        if let Some((key, (line, _))) = fields.values.iter().min_by_key(|(_, (l, _))| *l) {
            return Err(Error::Parse {
                line: *line,
                message: format!("unknown key `{key}`"),
            });
        }
        Ok(problem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{generate_blind_deconvolution, generate_cvar, generate_lad, generate_phase_retrieval, generate_quadratic};
    use crate::rng::RngStream;

    #[test]
    fn round_trip_every_kind() {
        let mut rng = RngStream::new(17, 4);
        let instances = vec![
            generate_phase_retrieval(&mut rng, 3, 5).unwrap(),
            generate_blind_deconvolution(&mut rng, 2, 3, 4).unwrap(),
            generate_lad(&mut rng, 3, 6, 0.5).unwrap(),
            generate_cvar(&mut rng, 2, 5, 0.8).unwrap(),
            generate_quadratic(&mut rng, 3, 1.5).unwrap(),
        ];
        for p in instances {
            let text = p.to_text();
            let back = ProblemInstance::from_text(&text).unwrap();
            assert_eq!(back, p, "{text}");
            assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn parse_errors_carry_lines() {
        let err = ProblemInstance::from_text("weakcvx-instance v1\nkind phase-retrieval\ndims 1 0 1\nrows x\nb 1\n");
        assert!(matches!(err, Err(Error::Parse { line: 4, .. })), "{err:?}");
        let err = ProblemInstance::from_text("nonsense\n");
        assert!(matches!(err, Err(Error::Parse { line: 1, .. })));
        let err = ProblemInstance::from_text("weakcvx-instance v1\nkind lad\ndims 1 0 1\nmu 0\nrows 1\nb 1\nextra 2\n");
        assert!(matches!(err, Err(Error::Parse { line: 7, .. })), "{err:?}");
    }
}
