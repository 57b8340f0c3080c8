//! Oracle pairings: every closed-form step checked against a lattice search
//! or the certified generic solver, plus finite-difference, envelope and
//! trajectory invariant batches.
//!
//! Objectives are rewritten here from their definitions instead of calling
//! the library's model code, so a mistake shared by both sides is unlikely.

use std::fmt;
use std::str::FromStr;

use weakcvx::algorithms::{make_schedule, run_model_based, run_psg, RunOptions, ScheduleKind};
use weakcvx::linalg::{dist_sq, dot, max_abs, norm, norm_sq};
use weakcvx::oracle::{
    finite_difference_check, generic_prox_subproblem, grid_minimize_1d, grid_minimize_2d, FnOracle, OracleReport,
};
use weakcvx::problems::{
    blind_boundary_candidates, cvar_model_step, generate_blind_deconvolution, generate_lad, generate_phase_retrieval,
    generate_quadratic, proxlinear_step_blind, proxlinear_step_phase, proxpoint_step_blind, proxpoint_step_phase,
    solve_linear_model_prox,
};
use weakcvx::quartic::{quartic_real_roots, QuarticPoly};
use weakcvx::rng::gaussian_vector;
use weakcvx::stationarity::{default_lambda, moreau_envelope, prox_gradient_mapping};
use weakcvx::{DenseVector, ModelFamily, ProblemInstance, Regularizer, RngStream};

use crate::error::HarnessError;

/// Deliberate defects used to show that each pairing can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fault {
    /// Clip bounds `[-1/2, 1/2]` instead of `[-1, 1]`.
    ClipBound,
    PhaseProxLinear,
    BlindProxLinear,
    PhaseProxPoint,
    BlindProxPoint,
    CvarStep,
    QuarticRoots,
    Subgradient,
    Envelope,
}

impl Fault {
    pub const ALL: [Fault; 9] = [
        Fault::ClipBound,
        Fault::PhaseProxLinear,
        Fault::BlindProxLinear,
        Fault::PhaseProxPoint,
        Fault::BlindProxPoint,
        Fault::CvarStep,
        Fault::QuarticRoots,
        Fault::Subgradient,
        Fault::Envelope,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Fault::ClipBound => "clip-bound",
            Fault::PhaseProxLinear => "phase-prox-linear",
            Fault::BlindProxLinear => "blind-prox-linear",
            Fault::PhaseProxPoint => "phase-prox-point",
            Fault::BlindProxPoint => "blind-prox-point",
            Fault::CvarStep => "cvar-step",
            Fault::QuarticRoots => "quartic-roots",
            Fault::Subgradient => "subgradient",
            Fault::Envelope => "envelope",
        }
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Fault {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        Fault::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| HarnessError::invalid("fault", format!("unknown fault `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub instances: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            instances: 200,
            seed: 20_240_601,
            fault: None,
        }
    }
}

impl VerifyOptions {
    fn rng(&self, tag: u64) -> RngStream {
        RngStream::new(self.seed, tag)
    }

    fn has(&self, fault: Fault) -> bool {
        self.fault == Some(fault)
    }
}

pub struct Pairing {
    pub name: &'static str,
    pub run: fn(&VerifyOptions) -> Vec<OracleReport>,
}

pub fn registry() -> Vec<Pairing> {
    vec![
        Pairing {
            name: "solve_linear_model_prox",
            run: |o| vec![linear_model_prox_vs_grid(o)],
        },
        Pairing {
            name: "proxlinear_step_phase",
            run: |o| vec![proxlinear_phase_vs_grid(o), proxlinear_phase_vs_generic(o)],
        },
        Pairing {
            name: "proxlinear_step_blind",
            run: |o| vec![proxlinear_blind_vs_grid(o), proxlinear_blind_vs_generic(o)],
        },
        Pairing {
            name: "proxpoint_step_phase",
            run: |o| {
                let mut r = proxpoint_phase_vs_grid(o).to_vec();
                r.push(proxpoint_phase_vs_generic(o));
                r
            },
        },
        Pairing {
            name: "proxpoint_step_blind",
            run: |o| proxpoint_blind_vs_grid(o).to_vec(),
        },
        Pairing {
            name: "cvar_model_step",
            run: |o| vec![cvar_vs_generic(o)],
        },
        Pairing {
            name: "quartic_real_roots",
            run: |o| vec![quartic_vs_constructed(o)],
        },
        Pairing {
            name: "finite_differences",
            run: |o| vec![subgradient_finite_differences(o)],
        },
        Pairing {
            name: "moreau_envelope",
            run: |o| envelope_identities(o).to_vec(),
        },
        Pairing {
            name: "trajectory_invariants",
            run: |o| trajectory_invariants(o).to_vec(),
        },
    ]
}

/// Runs every registered pairing.
pub fn verify_all(options: &VerifyOptions) -> Vec<OracleReport> {
    registry().iter().flat_map(|p| (p.run)(options)).collect()
}

fn normal_vec(rng: &mut RngStream, d: usize) -> Vec<f64> {
    gaussian_vector(rng, d).into_vec()
}

fn vector(v: Vec<f64>) -> DenseVector {
    DenseVector::new(v).expect("finite test data")
}

fn log_uniform(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.uniform() * (hi.ln() - lo.ln())).exp()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn shift(mut v: Vec<f64>, on: bool) -> Vec<f64> {
    if on {
        v[0] += 1e-3;
    }
    v
}

/// Minimizes `f` over the box `center +- radius` (1-D or 2-D).
fn grid_argmin(f: &dyn Fn(&[f64]) -> f64, center: &[f64], radius: f64, resolution: f64) -> (Vec<f64>, f64) {
    let r = radius + 1e-3;
    let g = if center.len() == 1 {
        grid_minimize_1d(|t| f(&[t]), center[0] - r, center[0] + r, resolution)
    } else {
        grid_minimize_2d(
            |s, t| f(&[s, t]),
            [center[0] - r, center[1] - r],
            [center[0] + r, center[1] + r],
            resolution,
        )
    }
    .expect("valid box");
    (g.argmin, g.value)
}

fn perturbed_clip(gamma: f64, zeta: &[f64]) -> Vec<f64> {
    let nz = norm_sq(zeta);
    if nz == 0.0 {
        return vec![0.0; zeta.len()];
    }
    let t = (-gamma / nz).clamp(-0.5, 0.5);
    zeta.iter().map(|z| t * z).collect()
}

pub fn linear_model_prox_vs_grid(o: &VerifyOptions) -> OracleReport {
    let mut report = OracleReport::new("solve_linear_model_prox vs grid", 1e-6);
    let mut rng = o.rng(1);
    for k in 0..o.instances {
        let d = 1 + k % 2;
        let gamma = 2.0 * rng.standard_normal();
        let zeta = normal_vec(&mut rng, d);
        let closed = if o.has(Fault::ClipBound) {
            perturbed_clip(gamma, &zeta)
        } else {
            match solve_linear_model_prox(gamma, &vector(zeta.clone())) {
                Ok(v) => v.into_vec(),
                Err(e) => {
                    report.record_failure(|| format!("gamma={gamma} zeta={zeta:?}: {e}"));
                    continue;
                }
            }
        };
        let f = |z: &[f64]| (gamma + dot(&zeta, z)).abs() + 0.5 * norm_sq(z);
        let (grid, _) = grid_argmin(&f, &vec![0.0; d], (2.0 * gamma.abs()).sqrt(), 1e-4);
        report.record(max_diff(&closed, &grid), || format!("gamma={gamma} zeta={zeta:?}"));
    }
    report
}

struct PhaseCase {
    a: Vec<f64>,
    b: f64,
    x: Vec<f64>,
    beta: f64,
}

fn phase_case(rng: &mut RngStream, d: usize) -> PhaseCase {
    let a = normal_vec(rng, d);
    let planted = normal_vec(rng, d);
    PhaseCase {
        b: dot(&a, &planted).powi(2),
        a,
        x: normal_vec(rng, d),
        beta: log_uniform(rng, 0.5, 5.0),
    }
}

impl PhaseCase {
    fn problem(&self) -> ProblemInstance {
        ProblemInstance::phase_retrieval(&[vector(self.a.clone())], vec![self.b]).expect("valid datum")
    }

    fn value(&self, y: &[f64]) -> f64 {
        (dot(&self.a, y).powi(2) - self.b).abs()
    }

    fn linearized(&self, y: &[f64]) -> f64 {
        let ax = dot(&self.a, &self.x);
        let shift: f64 = self.a.iter().zip(y).zip(&self.x).map(|((a, yi), xi)| a * (yi - xi)).sum();
        (ax * ax - self.b + 2.0 * ax * shift).abs()
    }

    fn linearized_subgradient(&self, y: &[f64], out: &mut [f64]) {
        let ax = dot(&self.a, &self.x);
        let inner = ax * ax - self.b + 2.0 * ax * (dot(&self.a, y) - ax);
        let s = inner.signum() * f64::from(inner != 0.0);
        out.iter_mut().zip(&self.a).for_each(|(o, a)| *o = s * 2.0 * ax * a);
    }

    fn subgradient(&self, y: &[f64], out: &mut [f64]) {
        let ay = dot(&self.a, y);
        let inner = ay * ay - self.b;
        let s = inner.signum() * f64::from(inner != 0.0);
        out.iter_mut().zip(&self.a).for_each(|(o, a)| *o = s * 2.0 * ay * a);
    }

    fn prox_term(&self, y: &[f64]) -> f64 {
        0.5 * self.beta * dist_sq(y, &self.x)
    }

    fn describe(&self) -> String {
        format!("a={:?} b={} x={:?} beta={}", self.a, self.b, self.x, self.beta)
    }
}

pub fn proxlinear_phase_vs_grid(o: &VerifyOptions) -> OracleReport {
    let mut report = OracleReport::new("proxlinear_step_phase vs grid", 1e-6);
    let mut rng = o.rng(2);
    for k in 0..o.instances {
        let c = phase_case(&mut rng, 1 + k % 2);
        let closed = match proxlinear_step_phase(&c.problem(), &vector(c.x.clone()), 0, c.beta) {
            Ok(v) => shift(v.into_vec(), o.has(Fault::PhaseProxLinear)),
            Err(e) => {
                report.record_failure(|| format!("{}: {e}", c.describe()));
                continue;
            }
        };
        let f = |y: &[f64]| c.linearized(y) + c.prox_term(y);
        let radius = (2.0 * c.linearized(&c.x) / c.beta).sqrt();
        let (grid, _) = grid_argmin(&f, &c.x, radius, 1e-4);
        report.record(max_diff(&closed, &grid), || c.describe());
    }
    report
}

/// `S(closed) - LB` where `LB` is the generic solver's certified lower bound.
fn certified_gap(
    value: &dyn Fn(&[f64]) -> f64,
    subgradient: &dyn Fn(&[f64], &mut [f64]),
    eta: f64,
    reg: &Regularizer,
    base: &[f64],
    beta: f64,
    closed: &[f64],
) -> Result<f64, weakcvx::Error> {
    let oracle = FnOracle {
        dim: base.len(),
        value,
        subgradient,
        eta,
    };
    let sol = generic_prox_subproblem(&oracle, reg, &vector(base.to_vec()), beta, 1e-10)?;
    let closed_value = value(closed) + reg.value(&vector(closed.to_vec()))? + 0.5 * beta * dist_sq(closed, base);
    Ok(closed_value - sol.lower_bound)
}

pub fn proxlinear_phase_vs_generic(o: &VerifyOptions) -> OracleReport {
    let mut report = OracleReport::new("proxlinear_step_phase vs generic", 1e-6);
    let mut rng = o.rng(3);
    for k in 0..o.instances {
        let c = phase_case(&mut rng, 3 + k % 4);
        let outcome = proxlinear_step_phase(&c.problem(), &vector(c.x.clone()), 0, c.beta).and_then(|v| {
            let closed = shift(v.into_vec(), o.has(Fault::PhaseProxLinear));
            certified_gap(
                &|y| c.linearized(y),
                &|y, out| c.linearized_subgradient(y, out),
                0.0,
                &Regularizer::Zero,
                &c.x,
                c.beta,
                &closed,
            )
        });
        match outcome {
            Ok(gap) => report.record(gap.max(0.0), || c.describe()),
            Err(e) => report.record_failure(|| format!("{}: {e}", c.describe())),
        }
    }
    report
}

struct BlindCase {
    u: Vec<f64>,
    v: Vec<f64>,
    b: f64,
    z: Vec<f64>,
    beta: f64,
}

fn blind_case(rng: &mut RngStream, d1: usize, d2: usize) -> BlindCase {
    let u = normal_vec(rng, d1);
    let v = normal_vec(rng, d2);
    let (p, q) = (normal_vec(rng, d1), normal_vec(rng, d2));
    BlindCase {
        b: dot(&u, &p) * dot(&v, &q),
        u,
        v,
        z: normal_vec(rng, d1 + d2),
        beta: log_uniform(rng, 0.5, 5.0),
    }
}

impl BlindCase {
    fn d1(&self) -> usize {
        self.u.len()
    }

    fn problem(&self) -> ProblemInstance {
        ProblemInstance::blind_deconvolution(&[vector(self.u.clone())], &[vector(self.v.clone())], vec![self.b])
            .expect("valid datum")
    }

    fn factors(&self, z: &[f64]) -> (f64, f64) {
        let (x, y) = z.split_at(self.d1());
        (dot(&self.u, x), dot(&self.v, y))
    }

    fn value(&self, z: &[f64]) -> f64 {
        let (ux, vy) = self.factors(z);
        (ux * vy - self.b).abs()
    }

    fn linearized_inner(&self, z: &[f64]) -> f64 {
        let (ux0, vy0) = self.factors(&self.z);
        let (ux, vy) = self.factors(z);
        ux0 * vy0 - self.b + vy0 * (ux - ux0) + ux0 * (vy - vy0)
    }

    fn linearized(&self, z: &[f64]) -> f64 {
        self.linearized_inner(z).abs()
    }

    fn linearized_subgradient(&self, z: &[f64], out: &mut [f64]) {
        let (ux0, vy0) = self.factors(&self.z);
        let inner = self.linearized_inner(z);
        let s = inner.signum() * f64::from(inner != 0.0);
        let d1 = self.d1();
        out[..d1].iter_mut().zip(&self.u).for_each(|(o, u)| *o = s * vy0 * u);
        out[d1..].iter_mut().zip(&self.v).for_each(|(o, v)| *o = s * ux0 * v);
    }

    fn prox_term(&self, z: &[f64]) -> f64 {
        0.5 * self.beta * dist_sq(z, &self.z)
    }

    fn step(&self, linearized: bool) -> Result<Vec<f64>, weakcvx::Error> {
        let p = self.problem();
        let (x, y) = self.z.split_at(self.d1());
        let (x, y) = (vector(x.to_vec()), vector(y.to_vec()));
        let (nx, ny) = if linearized {
            proxlinear_step_blind(&p, &x, &y, 0, self.beta)?
        } else {
            proxpoint_step_blind(&p, &x, &y, 0, self.beta)?
        };
        let mut out = nx.into_vec();
        out.extend(ny.iter());
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("u={:?} v={:?} b={} z={:?} beta={}", self.u, self.v, self.b, self.z, self.beta)
    }
}

pub fn proxlinear_blind_vs_grid(o: &VerifyOptions) -> OracleReport {
    let mut report = OracleReport::new("proxlinear_step_blind vs grid", 1e-6);
    let mut rng = o.rng(4);
    for _ in 0..o.instances {
        let c = blind_case(&mut rng, 1, 1);
        let closed = match c.step(true) {
            Ok(v) => shift(v, o.has(Fault::BlindProxLinear)),
            Err(e) => {
                report.record_failure(|| format!("{}: {e}", c.describe()));
                continue;
            }
        };
        let f = |z: &[f64]| c.linearized(z) + c.prox_term(z);
        let radius = (2.0 * c.linearized(&c.z) / c.beta).sqrt();
        let (grid, _) = grid_argmin(&f, &c.z, radius, 1e-4);
        report.record(max_diff(&closed, &grid), || c.describe());
    }
    report
}

pub fn proxlinear_blind_vs_generic(o: &VerifyOptions) -> OracleReport {
    let mut report = OracleReport::new("proxlinear_step_blind vs generic", 1e-6);
    let mut rng = o.rng(5);
    for k in 0..o.instances {
        let c = blind_case(&mut rng, 1 + k % 3, 1 + (k / 3) % 3);
        let outcome = c.step(true).and_then(|v| {
            let closed = shift(v, o.has(Fault::BlindProxLinear));
            certified_gap(
                &|z| c.linearized(z),
                &|z, out| c.linearized_subgradient(z, out),
                0.0,
                &Regularizer::Zero,
                &c.z,
                c.beta,
                &closed,
            )
        });
        match outcome {
            Ok(gap) => report.record(gap.max(0.0), || c.describe()),
            Err(e) => report.record_failure(|| format!("{}: {e}", c.describe())),
        }
    }
    report
}

/// Argument (tolerance 1e-4) and value (1e-6) agreement on 1-D instances.
pub fn proxpoint_phase_vs_grid(o: &VerifyOptions) -> [OracleReport; 2] {
    let mut arg = OracleReport::new("proxpoint_step_phase vs grid (argument)", 1e-4);
    let mut val = OracleReport::new("proxpoint_step_phase vs grid (value)", 1e-6);
    let mut rng = o.rng(6);
    for _ in 0..o.instances {
        let c = phase_case(&mut rng, 1);
        let closed = match proxpoint_step_phase(&c.problem(), &vector(c.x.clone()), 0, c.beta) {
            Ok(v) => shift(v.into_vec(), o.has(Fault::PhaseProxPoint)),
            Err(e) => {
                arg.record_failure(|| format!("{}: {e}", c.describe()));
                val.record_failure(|| format!("{}: {e}", c.describe()));
                continue;
            }
        };
        let f = |y: &[f64]| c.value(y) + c.prox_term(y);
        let radius = (2.0 * c.value(&c.x) / c.beta).sqrt();
        let (grid, grid_value) = grid_argmin(&f, &c.x, radius, 1e-4);
        arg.record(max_diff(&closed, &grid), || c.describe());
        val.record(f(&closed) - grid_value, || c.describe());
    }
    [arg, val]
}

pub fn proxpoint_phase_vs_generic(o: &VerifyOptions) -> OracleReport {
    let mut report = OracleReport::new("proxpoint_step_phase vs generic", 1e-6);
    let mut rng = o.rng(7);
    for k in 0..o.instances {
        let mut c = phase_case(&mut rng, 2 + k % 4);
        let eta = 2.0 * norm_sq(&c.a);
        c.beta += eta;
        let outcome = proxpoint_step_phase(&c.problem(), &vector(c.x.clone()), 0, c.beta).and_then(|v| {
            let closed = shift(v.into_vec(), o.has(Fault::PhaseProxPoint));
            certified_gap(
                &|y| c.value(y),
                &|y, out| c.subgradient(y, out),
                eta,
                &Regularizer::Zero,
                &c.x,
                c.beta,
                &closed,
            )
        });
        match outcome {
            Ok(gap) => report.record(gap.max(0.0), || c.describe()),
            Err(e) => report.record_failure(|| format!("{}: {e}", c.describe())),
        }
    }
    report
}

/// Argument agreement with the 2-D grid (1e-3), value agreement (1e-6) and
/// the boundary quartic candidates lying on `<u,x><v,y> = b` (1e-8).
pub fn proxpoint_blind_vs_grid(o: &VerifyOptions) -> [OracleReport; 3] {
    let mut arg = OracleReport::new("proxpoint_step_blind vs grid (argument)", 1e-3);
    let mut val = OracleReport::new("proxpoint_step_blind vs grid (value)", 1e-6);
    let mut boundary = OracleReport::new("blind boundary candidates on constraint", 1e-8);
    let mut rng = o.rng(8);
    let faulty = o.has(Fault::BlindProxPoint);
    for _ in 0..o.instances {
        let c = blind_case(&mut rng, 1, 1);
        let closed = match c.step(false) {
            Ok(v) => shift(v, faulty),
            Err(e) => {
                arg.record_failure(|| format!("{}: {e}", c.describe()));
                continue;
            }
        };
        let f = |z: &[f64]| c.value(z) + c.prox_term(z);
        let radius = (2.0 * c.value(&c.z) / c.beta).sqrt();
        let (grid, grid_value) = grid_argmin(&f, &c.z, radius, 1e-4);
        arg.record(max_diff(&closed, &grid), || c.describe());
        val.record(f(&closed) - grid_value, || c.describe());

        let (x, y) = (vector(vec![c.z[0]]), vector(vec![c.z[1]]));
        match blind_boundary_candidates(&c.problem(), &x, &y, 0) {
            Ok(cands) => {
                let worst = cands
                    .iter()
                    .map(|p| {
                        let p = shift(p.as_slice().to_vec(), faulty);
                        c.value(&p) / c.b.abs().max(1.0)
                    })
                    .fold(0.0, f64::max);
                boundary.record(worst, || c.describe());
            }
            Err(e) => boundary.record_failure(|| format!("{}: {e}", c.describe())),
        }
    }
    [arg, val, boundary]
}

pub fn cvar_vs_generic(o: &VerifyOptions) -> OracleReport {
    let mut report = OracleReport::new("cvar_model_step vs generic", 1e-6);
    let mut rng = o.rng(9);
    for k in 0..o.instances {
        let d = 1 + k % 4;
        let a = normal_vec(&mut rng, d);
        let b = rng.standard_normal();
        let alpha = 0.05 + 0.9 * rng.uniform();
        let x = normal_vec(&mut rng, d);
        let gamma = rng.standard_normal();
        let beta = log_uniform(&mut rng, 0.5, 5.0);
        let reg = if k % 2 == 0 {
            Regularizer::Zero
        } else {
            Regularizer::indicator_box(vec![-0.5; d], vec![0.5; d]).expect("valid box")
        };
        let describe = || format!("a={a:?} b={b} alpha={alpha} x={x:?} gamma={gamma} beta={beta} reg={reg:?}");
        let problem = match ProblemInstance::cvar(&[vector(a.clone())], vec![b], alpha) {
            Ok(p) => p,
            Err(e) => {
                report.record_failure(|| format!("{}: {e}", describe()));
                continue;
            }
        };
        let outcome = cvar_model_step(&problem, &vector(x.clone()), gamma, 0, beta, &reg).and_then(|(y, g)| {
            let mut closed = y.into_vec();
            closed.push(if o.has(Fault::CvarStep) { g + 1e-3 } else { g });
            let r0 = dot(&a, &x) - b;
            let s = r0.signum() * f64::from(r0 != 0.0);
            let inner = |z: &[f64]| r0.abs() + s * (dot(&a, &z[..d]) - dot(&a, &x));
            let value = |z: &[f64]| (1.0 - alpha) * z[d] + (inner(z) - z[d]).max(0.0);
            let subgradient = |z: &[f64], out: &mut [f64]| {
                if inner(z) - z[d] > 0.0 {
                    out[..d].iter_mut().zip(&a).for_each(|(o, ai)| *o = s * ai);
                    out[d] = -alpha;
                } else {
                    out[..d].iter_mut().for_each(|o| *o = 0.0);
                    out[d] = 1.0 - alpha;
                }
            };
            let mut base = x.clone();
            base.push(gamma);
            // The regularizer acts on `x` only: extend it with a free `gamma`.
            let full_reg = match &reg {
                Regularizer::IndicatorBox { lower, upper } => {
                    let mut lo = lower.clone();
                    let mut hi = upper.clone();
                    lo.push(f64::NEG_INFINITY);
                    hi.push(f64::INFINITY);
                    Regularizer::indicator_box(lo, hi)?
                }
                other => other.clone(),
            };
            certified_gap(&value, &subgradient, 0.0, &full_reg, &base, beta, &closed)
        });
        match outcome {
            Ok(gap) => report.record(gap.max(0.0), describe),
            Err(e) => report.record_failure(|| format!("{}: {e}", describe())),
        }
    }
    report
}

/// Quartics built from known roots (all real, or two real and a complex
/// pair): every known real root must be found, and nothing else.
pub fn quartic_vs_constructed(o: &VerifyOptions) -> OracleReport {
    let mut report = OracleReport::new("quartic_real_roots vs constructed roots", 1e-6);
    let mut rng = o.rng(10);
    for k in 0..o.instances {
        let lead = if rng.uniform() < 0.5 { -1.0 } else { 1.0 } * log_uniform(&mut rng, 0.1, 10.0);
        let r1 = 2.0 * rng.standard_normal();
        let r2 = 2.0 * rng.standard_normal();
        // (t - r1)(t - r2) (t^2 + p t + q)
        let (p, q, mut real) = if k % 2 == 0 {
            let r3 = 2.0 * rng.standard_normal();
            let r4 = 2.0 * rng.standard_normal();
            (-(r3 + r4), r3 * r4, vec![r1, r2, r3, r4])
        } else {
            let re = 2.0 * rng.standard_normal();
            let im = 0.1 + rng.uniform() * 2.0;
            (-2.0 * re, re * re + im * im, vec![r1, r2])
        };
        real.sort_by(f64::total_cmp);
        let (s, m) = (-(r1 + r2), r1 * r2);
        let coeffs = [1.0, s + p, m + s * p + q, m * p + s * q, m * q].map(|c| c * lead);
        let describe = || format!("coefficients {coeffs:?}, real roots {real:?}");
        let poly = match QuarticPoly::new(coeffs[0], coeffs[1], coeffs[2], coeffs[3], coeffs[4]) {
            Ok(p) => p,
            Err(e) => {
                report.record_failure(|| format!("{}: {e}", describe()));
                continue;
            }
        };
        match quartic_real_roots(&poly) {
            Ok(mut found) => {
                if o.has(Fault::QuarticRoots) {
                    found.pop();
                }
                // Each known root near a found root, scaled by the local
                // conditioning (close roots separate only to sqrt(eps)).
                let missing = real
                    .iter()
                    .map(|r| found.iter().map(|f| (f - r).abs()).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max);
                let spurious = found
                    .iter()
                    .map(|f| real.iter().map(|r| (f - r).abs()).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max);
                let count_error = if found.len() == real.len() { 0.0 } else { f64::INFINITY };
                report.record(missing.max(spurious).max(count_error), describe);
            }
            Err(e) => report.record_failure(|| format!("{}: {e}", describe())),
        }
    }
    report
}

/// Central differences of each datum against its subgradient at random
/// (almost surely smooth) points, relative to `1 + |G|_inf`.
pub fn subgradient_finite_differences(o: &VerifyOptions) -> OracleReport {
    let mut report = OracleReport::new("stochastic_subgradient vs finite differences", 1e-5);
    let mut rng = o.rng(11);
    let per_kind = o.instances.div_ceil(4).max(1);
    let problems = [
        generate_phase_retrieval(&mut rng, 4, per_kind),
        generate_blind_deconvolution(&mut rng, 3, 2, per_kind),
        generate_lad(&mut rng, 4, per_kind, 0.0),
        generate_quadratic(&mut rng, 4, 2.0),
    ];
    for problem in problems {
        let problem = match problem {
            Ok(p) => p,
            Err(e) => {
                report.record_failure(|| e.to_string());
                continue;
            }
        };
        for i in 0..per_kind {
            let sample = i % problem.num_data();
            let x = gaussian_vector(&mut rng, problem.dim());
            let g = match problem.stochastic_subgradient(&x, sample) {
                Ok(g) => g.vector.into_vec(),
                Err(e) => {
                    report.record_failure(|| e.to_string());
                    continue;
                }
            };
            let g: Vec<f64> = if o.has(Fault::Subgradient) {
                g.iter().map(|v| 1.01 * v).collect()
            } else {
                g
            };
            let h = |z: &[f64]| problem.datum_objective(sample, &vector(z.to_vec())).unwrap_or(f64::NAN);
            let err = finite_difference_check(&h, x.as_slice(), &g, 1e-6).unwrap_or(f64::INFINITY);
            report.record(err / (1.0 + max_abs(&g)), || format!("{} datum {sample} at {x:?}", problem.kind()));
        }
    }
    report
}

/// Envelope gradient identity against central differences (h = 1e-4, inner
/// tolerance 1e-10), and `phi(x_hat) <= phi(x) + tol`.
pub fn envelope_identities(o: &VerifyOptions) -> [OracleReport; 2] {
    let mut identity = OracleReport::new("moreau_envelope gradient vs finite differences", 1e-3);
    let mut decrease = OracleReport::new("moreau_envelope prox point decreases phi", 1e-10);
    let mut rng = o.rng(12);
    let tol = 1e-10;
    let points = (o.instances / 10).max(3);
    for k in 0..points {
        let problem = if k % 2 == 0 {
            generate_phase_retrieval(&mut rng, 3, 6)
        } else {
            generate_blind_deconvolution(&mut rng, 2, 2, 6)
        };
        let problem = match problem {
            Ok(p) => p,
            Err(e) => {
                identity.record_failure(|| e.to_string());
                continue;
            }
        };
        let lambda = default_lambda(&problem);
        let x = gaussian_vector(&mut rng, problem.dim());
        let reg = Regularizer::Zero;
        let report = match moreau_envelope(&problem, &reg, &x, lambda, tol) {
            Ok(r) => r,
            Err(e) => {
                identity.record_failure(|| e.to_string());
                continue;
            }
        };
        let mut grad = report.gradient(&x).map(DenseVector::into_vec).unwrap_or_default();
        if o.has(Fault::Envelope) {
            grad.iter_mut().for_each(|g| *g *= 1.05);
        }
        let env = |z: &[f64]| {
            moreau_envelope(&problem, &reg, &vector(z.to_vec()), lambda, tol).map_or(f64::NAN, |r| r.envelope_value)
        };
        let err = finite_difference_check(&env, x.as_slice(), &grad, 1e-4).unwrap_or(f64::INFINITY);
        identity.record(err / (1.0 + max_abs(&grad)), || format!("{} at {x:?}", problem.kind()));
        let phi_hat = problem.objective(&report.prox_point).unwrap_or(f64::NAN);
        let phi_x = problem.objective(&x).unwrap_or(f64::NAN);
        decrease.record((phi_hat - phi_x - tol).max(0.0), || format!("{} at {x:?}", problem.kind()));
    }
    [identity, decrease]
}

/// Subgradient method equals the linear model-based method bit for bit, and
/// ball-constrained runs stay feasible; plus the stationarity-measure
/// proportionality on quadratic-plus-ball instances.
pub fn trajectory_invariants(o: &VerifyOptions) -> [OracleReport; 3] {
    let mut equal = OracleReport::new("run_psg equals linear run_model_based", 0.0);
    let mut feasible = OracleReport::new("indicator-ball iterates feasible", 1e-12);
    let mut proportional = OracleReport::new("envelope vs prox-gradient proportionality", 1e-4);
    let mut rng = o.rng(13);
    let runs = (o.instances / 20).max(2);
    let options = RunOptions {
        full_trajectory: true,
        ..RunOptions::default()
    };
    for k in 0..runs {
        let problem = match generate_phase_retrieval(&mut rng, 3, 8) {
            Ok(p) => p,
            Err(e) => {
                equal.record_failure(|| e.to_string());
                continue;
            }
        };
        let x0 = gaussian_vector(&mut rng, 3);
        let radius = 0.5 + rng.uniform();
        let reg = Regularizer::indicator_ball(radius).expect("valid radius");
        // Stays inside the weakly convex stepsize regime.
        let gamma = log_uniform(&mut rng, 1e-3, 1.0) * 0.5 / problem.weak_convexity();
        let outcome = make_schedule(ScheduleKind::ConstantBeta { rho_bar: 1.0, gamma }, 40).and_then(|s| {
            let a = run_psg(&problem, &reg, &s, &x0, &mut RngStream::new(o.seed, k as u64), &options)?;
            let b = run_model_based(
                &problem,
                &reg,
                ModelFamily::Linear,
                &s,
                &x0,
                &mut RngStream::new(o.seed, k as u64),
                &options,
            )?;
            Ok((a, b))
        });
        match outcome {
            Ok((a, b)) => {
                let same = a.trajectory == b.trajectory && a.t_star == b.t_star;
                equal.record(if same { 0.0 } else { f64::INFINITY }, || format!("run {k}"));
                let worst = a
                    .trajectory
                    .iter()
                    .flatten()
                    .skip(1)
                    .map(|x| norm(x.as_slice()) - radius)
                    .fold(0.0, f64::max);
                feasible.record(worst, || format!("run {k} radius {radius}"));
            }
            Err(e) => equal.record_failure(|| format!("run {k}: {e}")),
        }

        let spread = 1.0 + rng.uniform();
        let quad = match generate_quadratic(&mut rng, 3, spread) {
            Ok(q) => q,
            Err(e) => {
                proportional.record_failure(|| e.to_string());
                continue;
            }
        };
        let x = gaussian_vector(&mut rng, 3);
        let reg = Regularizer::indicator_ball(1.0 + rng.uniform()).expect("valid radius");
        let projected = reg.prox(&x, 1.0).expect("valid point");
        match proportionality_violation(&quad, &reg, &projected) {
            Ok(v) => proportional.record(v, || format!("quadratic at {projected:?}")),
            Err(e) => proportional.record_failure(|| e.to_string()),
        }
    }
    [equal, feasible, proportional]
}

/// `max(lower - |G|, |G| - upper, 0)` with `lower = |grad env|/4` and
/// `upper = (3/2)(1 + 1/sqrt 2)|grad env|`, envelope at `1/(2 rho)` and the
/// mapping at `1/rho`.
pub fn proportionality_violation(problem: &ProblemInstance, reg: &Regularizer, x: &DenseVector) -> Result<f64, weakcvx::Error> {
    let rho = problem.weak_convexity();
    let env = moreau_envelope(problem, reg, x, 0.5 / rho, 1e-12)?;
    let mapping = norm(prox_gradient_mapping(problem, reg, x, 1.0 / rho)?.as_slice());
    let lower = 0.25 * env.grad_norm;
    let upper = 1.5 * (1.0 + std::f64::consts::FRAC_1_SQRT_2) * env.grad_norm;
    Ok((lower - mapping).max(mapping - upper).max(0.0))
}
