use std::f64::consts::PI;

use sucp_lab::verification::{check_far_bound, check_near_bound, check_triangle_bound, triangle_ratio, SweepSpec, TRIANGLE_INFIMUM};

// |a − e^{iθ}|² = a² − 2a cos θ + 1, written out independently of the library.
fn ratio(a: f64, theta: f64) -> Option<f64> {
    let den = (a - 1.0).abs() + theta.sin().abs();
    (den > 0.0).then(|| (a * a - 2.0 * a * theta.cos() + 1.0).max(0.0).sqrt() / den)
}

#[test]
fn frozen_triangle_infimum_matches_fine_grid_oracle() {
    let m = 2000;
    let mut inf = f64::INFINITY;
    for i in 0..m {
        let a = 3.0 * i as f64 / (m - 1) as f64;
        for k in 0..m {
            if let Some(q) = ratio(a, 2.0 * PI * k as f64 / (m - 1) as f64) {
                inf = inf.min(q);
            }
        }
    }
    assert!((inf - TRIANGLE_INFIMUM).abs() < 1e-3, "oracle infimum {inf}");
    assert!(TRIANGLE_INFIMUM >= 0.2);
    let rep = check_triangle_bound((0.0, 3.0), 301, 721, 0.2);
    assert!(rep.pass && rep.empirical_constant >= TRIANGLE_INFIMUM - 1e-3);
}

#[test]
fn triangle_examples() {
    assert!((triangle_ratio(1.0, PI / 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    assert!((triangle_ratio(0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
    assert!(triangle_ratio(1.0, 0.0).is_none());
    // on negative a the ratio reaches 0 at the point a = −1, θ = π
    assert!(triangle_ratio(-1.0, PI).unwrap() < 1e-15);
}

#[test]
fn bound_reports_are_reproducible() {
    let sweep = SweepSpec { n_values: vec![4, 8, 16], samples_per_n: 60, ..SweepSpec::default() };
    let a = check_near_bound(&sweep).unwrap();
    let b = check_near_bound(&sweep).unwrap();
    assert_eq!(a.empirical_constant.to_bits(), b.empirical_constant.to_bits());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let f1 = check_far_bound(&sweep).unwrap();
    let f2 = check_far_bound(&sweep).unwrap();
    assert_eq!(f1, f2);
    assert!(a.empirical_constant.is_finite() && f1.empirical_constant.is_finite());
}
