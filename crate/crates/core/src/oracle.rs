//! Brute-force verifiers: lattice minimizers, a generic certified solver for
//! proximal subproblems, and finite-difference checks.
//!
//! The generic solver is a proximal cutting-plane method with a fixed center.
//! For `S(z) = M(z) + r(z) + (beta/2)||z - x||^2` with `M` `eta`-weakly convex,
//! write `psi = M + (eta/2)||. - x||^2` (convex) and `mu = beta - eta`. Every
//! trial point adds a cut `a_j + <s_j, z> <= psi(z)`. The cutting-plane
//! subproblem is solved through its dual over the simplex,
//! `D(theta) = sum_j theta_j a_j + min_z <s_theta, z> + r(z) + (mu/2)||z - x||^2`,
//! whose inner minimizer is `prox_{r/mu}(x - s_theta/mu)`. Any `theta` gives a
//! certified lower bound `D(theta) <= min S`, and the best evaluated `S` is the
//! upper bound; the solver stops when the two agree to `tol`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{check_dim, dist_sq, dot, finite_vector, DenseVector};
use crate::regularizer::{BlockReg, Regularizer};

/// Certificate tolerance used when a model step falls back to the generic
/// solver.
pub const GENERIC_TOL: f64 = 1e-10;

const MAX_OUTER: usize = 2000;
const MAX_INNER: usize = 20_000;
const MAX_CUTS: usize = 60;

/// A function with computable subgradients, possibly `eta`-weakly convex.
pub trait SubgradientOracle {
    fn dim(&self) -> usize;
    fn value(&self, z: &[f64]) -> f64;
    fn subgradient(&self, z: &[f64], out: &mut [f64]);
    /// A modulus `eta` such that `value + (eta/2)||.||^2` is convex.
    fn weak_convexity(&self) -> f64 {
        0.0
    }
}

/// Adapts a pair of closures into a [`SubgradientOracle`].
pub struct FnOracle<V, G> {
    pub dim: usize,
    pub value: V,
    pub subgradient: G,
    pub eta: f64,
}

impl<V, G> SubgradientOracle for FnOracle<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, z: &[f64]) -> f64 {
        (self.value)(z)
    }

    fn subgradient(&self, z: &[f64], out: &mut [f64]) {
        (self.subgradient)(z, out)
    }

    fn weak_convexity(&self) -> f64 {
        self.eta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenericSolution {
    pub point: DenseVector,
    pub value: f64,
    /// Certified lower bound on the subproblem minimum.
    pub lower_bound: f64,
    pub iterations: usize,
    /// Best objective value after each iteration (non-increasing).
    pub history: Vec<f64>,
}

/// Certified minimizer of `model(z) + r(z) + (beta/2)||z - base||^2`.
pub fn generic_prox_subproblem(
    model: &dyn SubgradientOracle,
    reg: &Regularizer,
    base: &DenseVector,
    beta: f64,
    tol: f64,
) -> Result<GenericSolution> {
    check_dim(model.dim(), base.dim())?;
    if let Regularizer::IndicatorBox { lower, .. } = reg {
        check_dim(base.dim(), lower.len())?;
    }
    reg.validate()?;
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let block = BlockReg {
        reg,
        active: base.dim(),
    };
    let s = bundle_prox(model, block, base.as_slice(), beta, tol, None)?;
    Ok(GenericSolution {
        point: finite_vector(s.point)?,
        value: s.value,
        lower_bound: s.lower_bound,
        iterations: s.iterations,
        history: s.history,
    })
}

pub(crate) struct BundleSolution {
    pub point: Vec<f64>,
    pub value: f64,
    pub lower_bound: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

struct Cut {
    offset: f64,
    slope: Vec<f64>,
}

struct Bundle<'a> {
    reg: BlockReg<'a>,
    base: &'a [f64],
    mu: f64,
    cuts: Vec<Cut>,
}

impl Bundle<'_> {
    fn aggregate_slope(&self, theta: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (t, c) in theta.iter().zip(&self.cuts) {
            if *t != 0.0 {
                out.iter_mut().zip(&c.slope).for_each(|(o, s)| *o += t * s);
            }
        }
    }

    /// `z_theta` into `z`; returns `D(theta)` and fills `grad` with
    /// `a_j + <s_j, z_theta>`.
    fn dual(&self, theta: &[f64], z: &mut [f64], grad: &mut [f64]) -> f64 {
        self.aggregate_slope(theta, z);
        for (zi, xi) in z.iter_mut().zip(self.base) {
            *zi = xi - *zi / self.mu;
        }
        self.reg.prox_in_place(z, 1.0 / self.mu);
        for (g, c) in grad.iter_mut().zip(&self.cuts) {
            *g = c.offset + dot(&c.slope, z);
        }
        dot(theta, grad) + self.reg.value(z) + 0.5 * self.mu * dist_sq(z, self.base)
    }

    /// Maximizes `D` over the simplex by pairwise exchanges with exact line
    /// searches, warm-started at `theta`: mass moves from the cut with the
    /// smallest partial derivative (among those in use) to the largest. Along
    /// such a direction `D` is concave, so its derivative is monotone and the
    /// step is found in closed form when `r` is quadratic and by bisection
    /// otherwise. Returns `D(theta)` and `z_theta`.
    fn solve_dual(&self, theta: &mut [f64], tol: f64) -> (f64, Vec<f64>) {
        let k = self.cuts.len();
        let n = self.base.len();
        let quadratic = self.reg.reg.quadratic_weight();
        let mut z = vec![0.0; n];
        let mut grad = vec![0.0; k];
        let mut trial = theta.to_vec();
        let mut d = self.dual(theta, &mut z, &mut grad);
        for _ in 0..MAX_INNER {
            let up = (0..k).max_by(|&a, &b| grad[a].total_cmp(&grad[b])).unwrap_or(0);
            let down = (0..k)
                .filter(|&j| theta[j] > 0.0)
                .min_by(|&a, &b| grad[a].total_cmp(&grad[b]))
                .unwrap_or(up);
            if up == down || grad[up] - grad[down] <= tol {
                break;
            }
            let limit = theta[down];
            let slope0 = grad[up] - grad[down];
            let step = match quadratic {
                Some(w) => {
                    let diff = dist_sq(&self.cuts[up].slope, &self.cuts[down].slope);
                    let curvature = diff / (self.mu + w);
                    if curvature > 0.0 {
                        (slope0 / curvature).min(limit)
                    } else {
                        limit
                    }
                }
                None => {
                    let mut slope_at = |s: f64| {
                        trial.copy_from_slice(theta);
                        trial[up] += s;
                        trial[down] -= s;
                        self.dual(&trial, &mut z, &mut grad);
                        grad[up] - grad[down]
                    };
                    if slope_at(limit) >= 0.0 {
                        limit
                    } else {
                        let (mut lo, mut hi) = (0.0, limit);
                        for _ in 0..100 {
                            let mid = 0.5 * (lo + hi);
                            if mid <= lo || mid >= hi {
                                break;
                            }
                            if slope_at(mid) > 0.0 {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        0.5 * (lo + hi)
                    }
                }
            };
            if step <= 0.0 {
                break;
            }
            trial.copy_from_slice(theta);
            trial[up] += step;
            trial[down] = if step == limit { 0.0 } else { trial[down] - step };
            let next = self.dual(&trial, &mut z, &mut grad);
            theta.copy_from_slice(&trial);
            d = next;
        }
        let d = d.max(self.dual(theta, &mut z, &mut grad));
        (d, z)
    }
}

pub(crate) fn bundle_prox(
    oracle: &dyn SubgradientOracle,
    reg: BlockReg,
    base: &[f64],
    beta: f64,
    tol: f64,
    max_iter: Option<usize>,
) -> Result<BundleSolution> {
    let eta = oracle.weak_convexity();
    let mu = beta - eta;
    if !(mu > 0.0) {
        return Err(Error::NonconvexSubproblem { beta, eta });
    }
    let n = base.len();
    let objective = |z: &[f64]| oracle.value(z) + reg.value(z) + 0.5 * beta * dist_sq(z, base);
    let make_cut = |z: &[f64]| {
        let mut slope = vec![0.0; n];
        oracle.subgradient(z, &mut slope);
        for ((s, zi), xi) in slope.iter_mut().zip(z).zip(base) {
            *s += eta * (zi - xi);
        }
        let psi = oracle.value(z) + 0.5 * eta * dist_sq(z, base);
        Cut {
            offset: psi - dot(&slope, z),
            slope,
        }
    };

    let mut z0 = base.to_vec();
    reg.prox_in_place(&mut z0, 1.0 / beta);
    let mut best = z0.clone();
    let mut upper = objective(&z0);
    let mut lower = f64::NEG_INFINITY;
    let mut bundle = Bundle {
        reg,
        base,
        mu,
        cuts: vec![make_cut(&z0)],
    };
    let mut theta = vec![1.0];
    let mut history = Vec::new();
    let budget = max_iter.unwrap_or(MAX_OUTER);
    for it in 1..=budget {
        let (d, z) = bundle.solve_dual(&mut theta, 0.25 * tol);
        lower = lower.max(d);
        let value = objective(&z);
        if value < upper {
            upper = value;
            best.clone_from(&z);
        }
        history.push(upper);
        if upper - lower <= tol {
            return Ok(BundleSolution {
                point: best,
                value: upper,
                lower_bound: lower,
                iterations: it,
                history,
            });
        }
        if bundle.cuts.len() >= MAX_CUTS {
            let mut agg = vec![0.0; n];
            bundle.aggregate_slope(&theta, &mut agg);
            let offset = theta.iter().zip(&bundle.cuts).map(|(t, c)| t * c.offset).sum();
            let keep: Vec<Cut> = bundle
                .cuts
                .drain(..)
                .zip(&theta)
                .filter(|(_, t)| **t > 0.0)
                .map(|(c, _)| c)
                .collect();
            if keep.len() + 2 <= MAX_CUTS {
                theta.retain(|t| *t > 0.0);
                bundle.cuts = keep;
            } else {
                bundle.cuts = vec![Cut { offset, slope: agg }];
                theta = vec![1.0];
            }
        }
        bundle.cuts.push(make_cut(&z));
        theta.push(0.0);
    }
    Err(Error::ToleranceNotMet {
        tol,
        gap: upper - lower,
        iterations: budget,
    })
}

/// Result of a lattice search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMinimum {
    pub argmin: Vec<f64>,
    pub value: f64,
    /// Best value on the lattice itself, before refinement.
    pub lattice_value: f64,
    pub evaluations: usize,
}

/// Search region for [`grid_minimize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchBox {
    Interval(f64, f64),
    Rectangle([f64; 2], [f64; 2]),
}

const TOP_K: usize = 4;
const COARSE_POINTS_2D: f64 = 600.0;

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo <= hi {
        Ok(())
    } else {
        Err(Error::EmptyBox)
    }
}

fn check_resolution(resolution: f64) -> Result<()> {
    if resolution > 0.0 && resolution.is_finite() {
        Ok(())
    } else {
        Err(Error::param("resolution", "must be positive"))
    }
}

/// Exhaustive lattice search followed by local refinement.
///
/// 1-D: every lattice point `lo + k * resolution` (and `hi`) is evaluated and
/// golden-section search runs on the two-cell bracket around each of the best
/// few lattice local minima. 2-D: nested search `min_x min_y f(x, y)`, where
/// both levels use a lattice of at most about 600 cells per axis (finer if
/// `resolution` asks for fewer) followed by the same golden-section
/// refinement, so the returned point is resolved well below `resolution`.
pub fn grid_minimize(f: &dyn Fn(&[f64]) -> f64, search: &SearchBox, resolution: f64) -> Result<GridMinimum> {
    match *search {
        SearchBox::Interval(lo, hi) => grid_minimize_1d(|x| f(&[x]), lo, hi, resolution),
        SearchBox::Rectangle(lo, hi) => grid_minimize_2d(|x, y| f(&[x, y]), lo, hi, resolution),
    }
}

pub fn grid_minimize_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, resolution: f64) -> Result<GridMinimum> {
    check_interval(lo, hi)?;
    check_resolution(resolution)?;
    let r = minimize_1d(&f, lo, hi, resolution);
    Ok(GridMinimum {
        argmin: vec![r.x],
        value: r.value,
        lattice_value: r.lattice_value,
        evaluations: r.evaluations,
    })
}

pub fn grid_minimize_2d(
    f: impl Fn(f64, f64) -> f64,
    lo: [f64; 2],
    hi: [f64; 2],
    resolution: f64,
) -> Result<GridMinimum> {
    check_interval(lo[0], hi[0])?;
    check_interval(lo[1], hi[1])?;
    check_resolution(resolution)?;
    let cell = |k: usize| resolution.max((hi[k] - lo[k]) / COARSE_POINTS_2D);
    let (cx, cy) = (cell(0), cell(1));
    let evaluations = std::cell::Cell::new(0usize);
    let lattice_best = std::cell::Cell::new(f64::INFINITY);
    let inner = |x: f64| {
        let r = minimize_1d(&|y| f(x, y), lo[1], hi[1], cy);
        evaluations.set(evaluations.get() + r.evaluations);
        lattice_best.set(lattice_best.get().min(r.lattice_value));
        r
    };
    let outer = minimize_1d(&|x| inner(x).value, lo[0], hi[0], cx);
    let y = inner(outer.x);
    Ok(GridMinimum {
        argmin: vec![outer.x, y.x],
        value: y.value.min(outer.value),
        lattice_value: lattice_best.get(),
        evaluations: evaluations.get(),
    })
}

struct LineMin {
    x: f64,
    value: f64,
    lattice_value: f64,
    evaluations: usize,
}

fn minimize_1d(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, res: f64) -> LineMin {
    let steps = ((hi - lo) / res).floor() as usize;
    let mut xs: Vec<f64> = (0..=steps).map(|k| lo + k as f64 * res).collect();
    if *xs.last().unwrap_or(&lo) < hi {
        xs.push(hi);
    }
    let values: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut evaluations = values.len();
    let n = values.len();

    // Best few lattice local minima (plateaus count once per point).
    let mut minima: Vec<usize> = (0..n)
        .filter(|&k| {
            let left = k == 0 || values[k] <= values[k - 1];
            let right = k + 1 == n || values[k] <= values[k + 1];
            left && right
        })
        .collect();
    minima.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    minima.truncate(TOP_K);

    let lattice_k = minima.first().copied().unwrap_or(0);
    let lattice_value = values[lattice_k];
    let mut best_x = xs[lattice_k];
    let mut best_v = lattice_value;
    for k in minima {
        let a = xs[k.saturating_sub(1)];
        let b = xs[(k + 1).min(n - 1)];
        let (x, v, evals) = golden_section(f, a, b);
        evaluations += evals;
        if v < best_v {
            best_v = v;
            best_x = x;
        }
    }
    LineMin {
        x: best_x,
        value: best_v,
        lattice_value,
        evaluations,
    }
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64, usize) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evals = 2;
    let (mut best_x, mut best_v) = if fc <= fd { (c, fc) } else { (d, fd) };
    while b - a > 1e-13 * (1.0 + a.abs().max(b.abs())) && evals < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evals += 1;
        for (x, v) in [(c, fc), (d, fd)] {
            if v < best_v {
                best_v = v;
                best_x = x;
            }
        }
    }
    (best_x, best_v, evals)
}

/// `max_i |(g(x + h e_i) - g(x - h e_i)) / 2h - v_i|`.
pub fn finite_difference_check(g: &dyn Fn(&[f64]) -> f64, x: &[f64], v: &[f64], h: f64) -> Result<f64> {
    check_dim(x.len(), v.len())?;
    if !(h > 0.0) {
        return Err(Error::NonPositiveStep(h));
    }
    let mut probe = x.to_vec();
    let mut worst = 0.0_f64;
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = g(&probe);
        probe[i] = x[i] - h;
        let down = g(&probe);
        probe[i] = x[i];
        worst = worst.max(((up - down) / (2.0 * h) - v[i]).abs());
    }
    Ok(worst)
}

/// Outcome of one oracle pairing over a batch of instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub op_name: String,
    pub instances_checked: usize,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub worst_instance: String,
    pub passed: bool,
}

impl OracleReport {
    pub fn new(op_name: impl Into<String>, tolerance: f64) -> Self {
        OracleReport {
            op_name: op_name.into(),
            instances_checked: 0,
            max_abs_error: 0.0,
            tolerance,
            worst_instance: String::new(),
            passed: true,
        }
    }

    /// Records one instance; a NaN error counts as a failure.
    pub fn record(&mut self, error: f64, describe: impl FnOnce() -> String) {
        self.instances_checked += 1;
        let error = if error.is_nan() { f64::INFINITY } else { error.abs() };
        if self.instances_checked == 1 || error > self.max_abs_error {
            self.max_abs_error = error;
            self.worst_instance = describe();
        }
        self.passed = self.max_abs_error <= self.tolerance;
    }

    /// Records a hard failure (for example an error returned by the code under
    /// test).
    pub fn record_failure(&mut self, describe: impl FnOnce() -> String) {
        self.record(f64::INFINITY, describe);
    }
}
