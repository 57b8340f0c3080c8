use proptest::prelude::*;

use weakcvx::quartic::{quartic_real_roots, QuarticPoly};
use weakcvx::RngStream;

/// Coefficients of `lead * prod (t - r_k)` times an optional `t^2 + p t + q`.
fn expand(lead: f64, real: &[f64], pair: Option<(f64, f64)>) -> [f64; 5] {
    let mut c = vec![lead];
    let mut multiply = |factor: &[f64]| {
        let mut next = vec![0.0; c.len() + factor.len() - 1];
        for (i, a) in c.iter().enumerate() {
            for (j, b) in factor.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        c = next;
    };
    for r in real {
        multiply(&[1.0, -r]);
    }
    if let Some((p, q)) = pair {
        multiply(&[1.0, p, q]);
    }
    let mut out = [0.0; 5];
    out[5 - c.len()..].copy_from_slice(&c);
    out
}

fn check(planted: &mut [f64], coeffs: [f64; 5]) {
    let p = QuarticPoly::new(coeffs[0], coeffs[1], coeffs[2], coeffs[3], coeffs[4]).unwrap();
    let found = quartic_real_roots(&p).unwrap();
    planted.sort_by(|a, b| a.total_cmp(b));
    assert_eq!(found.len(), planted.len(), "planted {planted:?}, found {found:?}");
    for (f, r) in found.iter().zip(planted.iter()) {
        assert!((f - r).abs() <= 1e-6 * r.abs().max(1.0), "planted {planted:?}, found {found:?}");
        assert!(p.eval(*f).abs() <= 1e-8 * (1.0 + p.max_coefficient()));
    }
}

#[test]
fn planted_real_roots_are_recovered() {
    let mut rng = RngStream::new(31, 0);
    for k in 0..10_000 {
        let lead = (0.1 + 4.0 * rng.uniform()) * if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        let count = if k % 2 == 0 { 4 } else { 2 };
        let mut roots: Vec<f64> = (0..count).map(|_| 10.0 * rng.uniform() - 5.0).collect();
        let pair = (count == 2).then(|| {
            let (re, im) = (4.0 * rng.uniform() - 2.0, 0.1 + 2.0 * rng.uniform());
            (-2.0 * re, re * re + im * im)
        });
        let coeffs = expand(lead, &roots, pair);
        check(&mut roots, coeffs);
    }
}

#[test]
fn deconvolution_quartic_factors() {
    // t^4 - 2t^3 + 2t - 1 = (t - 1)^3 (t + 1).
    let c = expand(1.0, &[1.0, 1.0, 1.0, -1.0], None);
    assert_eq!(c, [1.0, -2.0, 0.0, 2.0, -1.0]);
    let p = QuarticPoly::new(c[0], c[1], c[2], c[3], c[4]).unwrap();
    let r = quartic_real_roots(&p).unwrap();
    assert_eq!(r.len(), 4);
    assert!((r[0] + 1.0).abs() < 1e-12);
    assert!(r[1..].iter().all(|t| (t - 1.0).abs() < 1e-4));
}

proptest! {
    #[test]
    fn lower_degree_roots(a in -5.0f64..5.0, b in -5.0f64..5.0, lead in 0.5f64..3.0) {
        let c = expand(lead, &[a, b], None);
        let mut planted = vec![a, b];
        check(&mut planted, c);
    }

    #[test]
    fn identical_inputs_give_identical_roots(c in prop::array::uniform5(-10.0f64..10.0)) {
        let p = QuarticPoly::new(c[0], c[1], c[2], c[3], c[4]).unwrap();
        prop_assert_eq!(quartic_real_roots(&p).ok(), quartic_real_roots(&p).ok());
    }
}
