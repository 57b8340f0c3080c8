//! Conditional value-at-risk of absolute residuals, in the hinge form
//! `(1 - alpha) gamma + max(|<a, x> - b| - gamma, 0)` over `z = (x, gamma)`.

use crate::linalg::{dot, norm_sq};
use crate::regularizer::Regularizer;

fn residual(a: &[f64], b: f64, x: &[f64]) -> (f64, f64) {
    let r = dot(a, x) - b;
    let s = if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    };
    (r.abs(), s)
}

pub(crate) fn value(a: &[f64], b: f64, alpha: f64, z: &[f64]) -> f64 {
    let (x, gamma) = split(z);
    let (loss, _) = residual(a, b, x);
    (1.0 - alpha) * gamma + (loss - gamma).max(0.0)
}

fn split(z: &[f64]) -> (&[f64], f64) {
    let (x, g) = z.split_at(z.len() - 1);
    (x, g[0])
}

pub(crate) fn subgradient(a: &[f64], b: f64, alpha: f64, z: &[f64], out: &mut [f64]) -> f64 {
    let (x, gamma) = split(z);
    let (loss, s) = residual(a, b, x);
    let d = x.len();
    if loss - gamma > 0.0 {
        for (o, ai) in out[..d].iter_mut().zip(a) {
            *o = s * ai;
        }
        out[d] = -alpha;
    } else {
        out[..d].iter_mut().for_each(|o| *o = 0.0);
        out[d] = 1.0 - alpha;
    }
    (s * s * norm_sq(a) + alpha * alpha).sqrt().max(1.0 - alpha)
}

/// Model with the absolute residual linearized at `base`:
/// `(1 - alpha) gamma + max(l + <v, y - x_t> - gamma, 0)`.
pub(crate) fn linearized_value(a: &[f64], b: f64, alpha: f64, base: &[f64], z: &[f64]) -> f64 {
    let (xt, _) = split(base);
    let (y, gamma) = split(z);
    let (loss, s) = residual(a, b, xt);
    let inner = loss + s * (dot(a, y) - dot(a, xt));
    (1.0 - alpha) * gamma + (inner - gamma).max(0.0)
}

pub(crate) fn linearized_subgradient(
    a: &[f64],
    b: f64,
    alpha: f64,
    base: &[f64],
    z: &[f64],
    out: &mut [f64],
) {
    let (xt, _) = split(base);
    let (y, gamma) = split(z);
    let (loss, s) = residual(a, b, xt);
    let inner = loss + s * (dot(a, y) - dot(a, xt));
    let theta = if inner - gamma > 0.0 { 1.0 } else { 0.0 };
    let d = y.len();
    for (o, ai) in out[..d].iter_mut().zip(a) {
        *o = theta * s * ai;
    }
    out[d] = 1.0 - alpha - theta;
}

/// Exact minimizer of the linearized model plus `r(y)` plus
/// `(beta/2)(||y - x_t||^2 + (gamma - gamma_t)^2)`.
///
/// With `theta in [0, 1]` the hinge multiplier, optimality reads
/// `gamma = gamma_t - (1 - alpha - theta)/beta` and
/// `y = prox_{r/beta}(x_t - theta v / beta)`. The hinge argument
/// `h(theta) = l + <v, y(theta) - x_t> - gamma(theta)` is strictly decreasing,
/// so the inactive case (`h(0) <= 0`), the active case (`h(1) >= 0`) and the
/// kink (`h(theta) = 0`) are mutually exclusive. The kink is solved in closed
/// form when `y` is affine in `theta` and by bisection otherwise.
pub(crate) fn step_into(
    a: &[f64],
    b: f64,
    alpha: f64,
    base: &[f64],
    beta: f64,
    reg: &Regularizer,
    out: &mut [f64],
) {
    let (xt, gamma_t) = split(base);
    let d = xt.len();
    let (loss, s) = residual(a, b, xt);
    let vx = s * dot(a, xt);

    let eval = |theta: f64, y: &mut [f64]| -> f64 {
        for ((yi, xi), ai) in y.iter_mut().zip(xt).zip(a) {
            *yi = xi - theta * s * ai / beta;
        }
        reg.prox_in_place(y, 1.0 / beta);
        let gamma = gamma_t - (1.0 - alpha - theta) / beta;
        loss + s * dot(a, y) - vx - gamma
    };

    let (y, g) = out.split_at_mut(d);
    let h0 = eval(0.0, y);
    let theta = if h0 <= 0.0 {
        0.0
    } else {
        let h1 = eval(1.0, y);
        if h1 >= 0.0 {
            1.0
        } else if reg.quadratic_weight().is_some() {
            (h0 / (h0 - h1)).clamp(0.0, 1.0)
        } else {
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            while hi - lo > f64::EPSILON {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if eval(mid, y) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };
    eval(theta, y);
    g[0] = gamma_t - (1.0 - alpha - theta) / beta;
}
