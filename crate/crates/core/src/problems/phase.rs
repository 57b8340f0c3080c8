//! Robust phase retrieval datum `g(x) = |<a, x>^2 - b|`.

use super::linear_prox::abs_affine_prox_into;
use crate::linalg::{dot, norm};

pub(crate) fn value(a: &[f64], b: f64, x: &[f64]) -> f64 {
    let t = dot(a, x);
    (t * t - b).abs()
}

/// Writes `2 <a,x> sign(<a,x>^2 - b) a` (sign 0 at the tie) and returns the
/// local Lipschitz constant `2 |<a,x>| ||a||`.
pub(crate) fn subgradient(a: &[f64], b: f64, x: &[f64], out: &mut [f64]) -> f64 {
    let t = dot(a, x);
    let r = t * t - b;
    let s = if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    };
    for (o, ai) in out.iter_mut().zip(a) {
        *o = 2.0 * t * s * ai;
    }
    2.0 * t.abs() * norm(a)
}

/// Linearized model `|<a,base>^2 - b + 2<a,base><a, y - base>|`.
pub(crate) fn proxlinear_value(a: &[f64], b: f64, base: &[f64], y: &[f64]) -> f64 {
    let t = dot(a, base);
    (t * t - b + 2.0 * t * (dot(a, y) - t)).abs()
}

/// Minimizer of the linearized model plus `(beta/2)||y - center||^2`.
pub(crate) fn proxlinear_into(
    a: &[f64],
    b: f64,
    base: &[f64],
    center: &[f64],
    beta: f64,
    out: &mut [f64],
) {
    let t = dot(a, base);
    let grad: Vec<f64> = a.iter().map(|ai| 2.0 * t * ai).collect();
    let offset = t * t - b + 2.0 * t * (dot(a, center) - t);
    abs_affine_prox_into(offset, &grad, center, beta, out);
}

/// Global minimizer of `g(y) + (beta/2)||y - center||^2`.
///
/// Every minimizer lies on the line `center - s a`. Candidates, in tie-break
/// order: the stationary points of the `+` and `-` smooth branches, the two
/// zero-residual points with `<a,y> = +sqrt(b)` and `<a,y> = -sqrt(b)`, and
/// `center` itself. A smooth `-` branch with `2 ||a||^2 / beta = 1` is skipped.
pub(crate) fn proxpoint_into(a: &[f64], b: f64, center: &[f64], beta: f64, out: &mut [f64]) {
    out.copy_from_slice(center);
    let na = dot(a, a);
    if na == 0.0 {
        return;
    }
    let lambda = 1.0 / beta;
    let ac = dot(a, center);
    let root_b = b.max(0.0).sqrt();
    let objective = |s: f64| {
        let t = ac - s * na;
        (t * t - b).abs() + 0.5 * beta * s * s * na
    };
    let minus_denom = 2.0 * lambda * na - 1.0;
    let candidates = [
        Some(2.0 * lambda * ac / (2.0 * lambda * na + 1.0)),
        (minus_denom != 0.0).then(|| 2.0 * lambda * ac / minus_denom),
        Some((ac - root_b) / na),
        Some((ac + root_b) / na),
        Some(0.0),
    ];
    let mut best_s = 0.0;
    let mut best = f64::INFINITY;
    for s in candidates.into_iter().flatten() {
        if !s.is_finite() {
            continue;
        }
        let v = objective(s);
        if v < best {
            best = v;
            best_s = s;
        }
    }
    for (o, ai) in out.iter_mut().zip(a) {
        *o -= best_s * ai;
    }
}
