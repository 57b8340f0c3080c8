//! Blind deconvolution datum `g(x, y) = |<u, x><v, y> - b|` on the stacked
//! variable `z = (x, y)`.

use super::linear_prox::abs_affine_prox_into;
use crate::linalg::dot;
use crate::quartic::{quartic_real_roots, QuarticPoly};

pub(crate) fn value(u: &[f64], v: &[f64], b: f64, z: &[f64]) -> f64 {
    let (x, y) = z.split_at(u.len());
    (dot(u, x) * dot(v, y) - b).abs()
}

/// Writes `sign(<u,x><v,y> - b) (<v,y> u, <u,x> v)` (sign 0 at the tie) and
/// returns the local Lipschitz constant `||(<v,y> u, <u,x> v)||`.
pub(crate) fn subgradient(u: &[f64], v: &[f64], b: f64, z: &[f64], out: &mut [f64]) -> f64 {
    let d1 = u.len();
    let (x, y) = z.split_at(d1);
    let ux = dot(u, x);
    let vy = dot(v, y);
    let r = ux * vy - b;
    let s = if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    };
    let (ox, oy) = out.split_at_mut(d1);
    for (o, ui) in ox.iter_mut().zip(u) {
        *o = s * vy * ui;
    }
    for (o, vi) in oy.iter_mut().zip(v) {
        *o = s * ux * vi;
    }
    (vy * vy * dot(u, u) + ux * ux * dot(v, v)).sqrt()
}

fn linearization(u: &[f64], v: &[f64], b: f64, base: &[f64]) -> (f64, Vec<f64>) {
    let (x, y) = base.split_at(u.len());
    let ux = dot(u, x);
    let vy = dot(v, y);
    let grad = u.iter().map(|ui| vy * ui).chain(v.iter().map(|vi| ux * vi)).collect();
    (ux * vy - b, grad)
}

pub(crate) fn proxlinear_value(u: &[f64], v: &[f64], b: f64, base: &[f64], z: &[f64]) -> f64 {
    let (q, grad) = linearization(u, v, b, base);
    (q + dot(&grad, z) - dot(&grad, base)).abs()
}

pub(crate) fn proxlinear_into(
    u: &[f64],
    v: &[f64],
    b: f64,
    base: &[f64],
    center: &[f64],
    beta: f64,
    out: &mut [f64],
) {
    let (q, grad) = linearization(u, v, b, base);
    let offset = q + dot(&grad, center) - dot(&grad, base);
    abs_affine_prox_into(offset, &grad, center, beta, out);
}

/// Offsets `(p, q)` of the boundary point with `<u,x> = eta`: `x = cx - p u`,
/// `y = cy - q v`. Taking `<v,y> = b/eta` directly keeps the point on the
/// constraint even when the root is slightly off.
fn boundary_offsets(eta: f64, ux0: f64, vy0: f64, nu: f64, nv: f64, b: f64) -> (f64, f64) {
    ((ux0 - eta) / nu, (vy0 - b / eta) / nv)
}

/// Global minimizer of `g(z) + (beta/2)||z - center||^2`.
///
/// Candidates, in tie-break order: the smooth stationary points for sign `+`
/// then `-` (skipped when `lambda^2 ||u||^2 ||v||^2 = 1`), the points on
/// `<u,x><v,y> = b` given by the nonzero real roots of the boundary quartic in
/// ascending order (only when `b != 0`), the two projections onto
/// `<u,x> = 0` and `<v,y> = 0` (only when `b = 0`), and `center`.
pub(crate) fn proxpoint_into(
    u: &[f64],
    v: &[f64],
    b: f64,
    center: &[f64],
    beta: f64,
    out: &mut [f64],
) {
    let d1 = u.len();
    let (cx, cy) = center.split_at(d1);
    let lambda = 1.0 / beta;
    let nu = dot(u, u);
    let nv = dot(v, v);
    let ux0 = dot(u, cx);
    let vy0 = dot(v, cy);

    // Each candidate is x = cx - p u, y = cy - q v; its objective only
    // depends on (p, q).
    let objective = |p: f64, q: f64| {
        let ux = ux0 - p * nu;
        let vy = vy0 - q * nv;
        (ux * vy - b).abs() + 0.5 * beta * (p * p * nu + q * q * nv)
    };
    let mut best = (0.0, 0.0);
    let mut best_value = f64::INFINITY;
    let mut consider = |p: f64, q: f64| {
        if p.is_finite() && q.is_finite() {
            let val = objective(p, q);
            if val < best_value {
                best_value = val;
                best = (p, q);
            }
        }
    };

    let det = 1.0 - lambda * lambda * nu * nv;
    if det != 0.0 {
        for s in [1.0, -1.0] {
            let vy = (vy0 - s * lambda * nv * ux0) / det;
            let ux = (ux0 - s * lambda * nu * vy0) / det;
            consider(s * lambda * vy, s * lambda * ux);
        }
    }
    if b != 0.0 && nu > 0.0 && nv > 0.0 {
        if let Ok(poly) = QuarticPoly::new(nv, -nv * ux0, 0.0, b * nu * vy0, -b * b * nu) {
            for eta in quartic_real_roots(&poly).unwrap_or_default() {
                if eta != 0.0 {
                    let (p, q) = boundary_offsets(eta, ux0, vy0, nu, nv, b);
                    consider(p, q);
                }
            }
        }
    }
    if b == 0.0 {
        if nu > 0.0 {
            consider(ux0 / nu, 0.0);
        }
        if nv > 0.0 {
            consider(0.0, vy0 / nv);
        }
    }
    consider(0.0, 0.0);

    let (p, q) = best;
    let (ox, oy) = out.split_at_mut(d1);
    for ((o, c), ui) in ox.iter_mut().zip(cx).zip(u) {
        *o = c - p * ui;
    }
    for ((o, c), vi) in oy.iter_mut().zip(cy).zip(v) {
        *o = c - q * vi;
    }
}

/// Boundary candidates (the quartic family only), for inspection in tests.
pub(crate) fn boundary_candidates(
    u: &[f64],
    v: &[f64],
    b: f64,
    center: &[f64],
) -> Vec<Vec<f64>> {
    let d1 = u.len();
    let (cx, cy) = center.split_at(d1);
    let nu = dot(u, u);
    let nv = dot(v, v);
    let ux0 = dot(u, cx);
    let vy0 = dot(v, cy);
    if b == 0.0 || nu == 0.0 || nv == 0.0 {
        return Vec::new();
    }
    let Ok(poly) = QuarticPoly::new(nv, -nv * ux0, 0.0, b * nu * vy0, -b * b * nu) else {
        return Vec::new();
    };
    quartic_real_roots(&poly)
        .unwrap_or_default()
        .into_iter()
        .filter(|&eta| eta != 0.0)
        .map(|eta| {
            let (p, q) = boundary_offsets(eta, ux0, vy0, nu, nv, b);
            cx.iter()
                .zip(u)
                .map(|(c, ui)| c - p * ui)
                .chain(cy.iter().zip(v).map(|(c, vi)| c - q * vi))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_plus_case_wins() {
        let mut z = [0.0; 2];
        proxpoint_into(&[1.0], &[1.0], 1.0, &[2.0, 2.0], 10.0, &mut z);
        assert!((z[0] - 20.0 / 11.0).abs() < 1e-12 && (z[1] - 20.0 / 11.0).abs() < 1e-12);
        let val = value(&[1.0], &[1.0], 1.0, &z) + 5.0 * ((z[0] - 2.0).powi(2) + (z[1] - 2.0).powi(2));
        assert!((val - 2.636_363_636_363_636).abs() < 1e-9);
    }

    #[test]
    fn boundary_points_of_worked_example() {
        let pts = boundary_candidates(&[1.0], &[1.0], 1.0, &[2.0, 2.0]);
        assert_eq!(pts.len(), 4);
        assert!((pts[0][0] + 1.0).abs() < 1e-6 && (pts[0][1] + 1.0).abs() < 1e-6);
        for p in &pts[1..] {
            assert!((p[0] - 1.0).abs() < 1e-4 && (p[1] - 1.0).abs() < 1e-4);
        }
        for p in &pts {
            assert!((p[0] * p[1] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_measurement_projects_onto_a_factor() {
        let mut z = [0.0; 2];
        proxpoint_into(&[1.0], &[1.0], 0.0, &[0.1, 3.0], 1.0, &mut z);
        assert_eq!(z, [0.0, 3.0]);
    }
}
