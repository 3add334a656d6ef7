//! Gaussian min-estimate: ∫_γ e^{−ρq′x²}(|x|+λ)^{−q′} dx against
//! C^{q′} λ^{−q′} min{λ, |γ|, ρ^{−1/2}}.
//!
//! The constant must cover the whole-line case ρ = 0, |γ| = ∞, where the
//! integral is 2λ^{1−q′}/(q′−1); hence C^{q′} ≥ 2/(q′−1) is needed, and
//! C = max{(2/(q′−1))^{1/q′}, 2} is used. With C = max{1/(q′−1), 2} the
//! bound fails for q′ near 1 on intervals straddling 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quadrature::adaptive_gk;

pub const MIN_ESTIMATE_RTOL: f64 = 1e-10;
const MAX_INTERVALS: usize = 20_000;

/// C_{q′} used by [`min_estimate_check`].
pub fn min_estimate_constant(q_prime: f64) -> f64 {
    (2.0 / (q_prime - 1.0)).powf(1.0 / q_prime).max(2.0)
}

/// The alternative constant max{1/(q′−1), 2}, kept for comparison.
pub fn naive_min_estimate_constant(q_prime: f64) -> f64 {
    (1.0 / (q_prime - 1.0)).max(2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinEstimate {
    pub integral: f64,
    pub error_estimate: f64,
    pub majorant: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// ∫_a^b e^{−ρq′x²}(|x|+λ)^{−q′} dx, split at the kink x = 0.
pub fn min_estimate_integral(rho: f64, lambda: f64, a: f64, b: f64, q_prime: f64) -> Result<(f64, f64)> {
    if !(rho >= 0.0 && lambda > 0.0 && q_prime > 1.0) {
        return Err(LabError::Domain(format!("need rho >= 0, lambda > 0, q' > 1; got {rho}, {lambda}, {q_prime}")));
    }
    if b <= a {
        return Ok((0.0, 0.0));
    }
    let f = |x: f64| (-rho * q_prime * x * x).exp() * (x.abs() + lambda).powf(-q_prime);
    // the integrand is even; integrate |x| from the nearer end on each side
    let half = |lo: f64, hi: f64| -> (f64, f64) {
        if hi <= lo {
            return (0.0, 0.0);
        }
        // geometric panels resolve the λ-scale peak at 0
        let mut edges = vec![lo];
        let mut x = lo.max(lambda);
        while x < hi {
            if x > lo {
                edges.push(x);
            }
            x *= 4.0;
        }
        edges.push(hi);
        let mut v = 0.0;
        let mut e = 0.0;
        for w in edges.windows(2) {
            let (pv, pe) = adaptive_gk(&f, w[0], w[1], 0.1 * MIN_ESTIMATE_RTOL, MAX_INTERVALS);
            v += pv;
            e += pe;
        }
        (v, e)
    };
    let (v, e) = if a >= 0.0 {
        half(a, b)
    } else if b <= 0.0 {
        half(-b, -a)
    } else {
        let (v1, e1) = half(0.0, -a);
        let (v2, e2) = half(0.0, b);
        (v1 + v2, e1 + e2)
    };
    if e > MIN_ESTIMATE_RTOL * v.abs() && v > 0.0 {
        return Err(LabError::QuadratureBudget { what: "min-estimate integral".into(), partial: v });
    }
    Ok((v, e))
}

fn majorant_with(c: f64, rho: f64, lambda: f64, len: f64, q_prime: f64) -> f64 {
    let gauss = if rho > 0.0 { rho.powf(-0.5) } else { f64::INFINITY };
    c.powf(q_prime) * lambda.powf(-q_prime) * lambda.min(len).min(gauss)
}

/// Integral over γ = [a, b] against the majorant with C = [`min_estimate_constant`].
pub fn min_estimate_check(rho: f64, lambda: f64, gamma: (f64, f64), q_prime: f64) -> Result<MinEstimate> {
    min_estimate_check_with(rho, lambda, gamma, q_prime, min_estimate_constant(q_prime))
}

/// As [`min_estimate_check`] with an explicit constant C.
pub fn min_estimate_check_with(rho: f64, lambda: f64, gamma: (f64, f64), q_prime: f64, c: f64) -> Result<MinEstimate> {
    let (a, b) = gamma;
    let (integral, error_estimate) = min_estimate_integral(rho, lambda, a, b, q_prime)?;
    let majorant = majorant_with(c, rho, lambda, (b - a).max(0.0), q_prime);
    let ratio = if majorant > 0.0 { integral / majorant } else { 0.0 };
    Ok(MinEstimate { integral, error_estimate, majorant, ratio, pass: integral <= majorant })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinEstimateSweep {
    pub samples: usize,
    pub violations: usize,
    pub max_ratio: f64,
    /// (ρ, λ, a, b, q′) at the largest ratio.
    pub worst: (f64, f64, f64, f64, f64),
    pub pass: bool,
}

/// Random sweep: ρ = 0 with probability 1/10, otherwise log-uniform in
/// [1e−6, 1e6]; λ, |γ| log-uniform in [1e−4, 10]; the left end of γ uniform
/// in [−|γ| − 1, 1]; q′ uniform in [1.05, 4].
pub fn min_estimate_sweep(samples: usize, seed: u64) -> Result<MinEstimateSweep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (rng.gen_range(lo.ln()..hi.ln())).exp();
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    let mut worst = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..samples {
        let rho = if rng.gen_bool(0.1) { 0.0 } else { log_uniform(&mut rng, 1e-6, 1e6) };
        let lambda = log_uniform(&mut rng, 1e-4, 10.0);
        let len = log_uniform(&mut rng, 1e-4, 10.0);
        let a = rng.gen_range(-len - 1.0..1.0);
        let q_prime = rng.gen_range(1.05..4.0);
        let r = min_estimate_check(rho, lambda, (a, a + len), q_prime)?;
        if !r.pass {
            violations += 1;
        }
        if r.ratio > max_ratio {
            max_ratio = r.ratio;
            worst = (rho, lambda, a, a + len, q_prime);
        }
    }
    Ok(MinEstimateSweep { samples, violations, max_ratio, worst, pass: violations == 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_half() {
        let r = min_estimate_check(0.0, 1.0, (0.0, 1.0), 2.0).unwrap();
        // ∫_0^1 (x+1)^{−2} dx = 1 − 1/2
        assert!((r.integral - 0.5).abs() < 1e-10);
        assert!(r.pass);
    }

    #[test]
    fn empty_interval_is_zero() {
        let r = min_estimate_check(1.0, 0.1, (0.3, 0.3), 2.0).unwrap();
        assert_eq!(r.integral, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn gaussian_scale_dominates() {
        let r = min_estimate_check(1e4, 1.0, (-1.0, 1.0), 2.0).unwrap();
        assert!(r.ratio <= 1.0);
        // here min{λ, |γ|, ρ^{−1/2}} = 0.01
        assert!((r.majorant - 4.0 * 0.01).abs() < 1e-15);
    }

    #[test]
    fn naive_constant_fails_near_one() {
        let (q, l) = (1.5, 1e-4);
        let bad = min_estimate_check_with(0.0, l, (-5.0, 5.0), q, naive_min_estimate_constant(q)).unwrap();
        assert!(!bad.pass, "{bad:?}");
        assert!(min_estimate_check(0.0, l, (-5.0, 5.0), q).unwrap().pass);
    }

    #[test]
    fn whole_line_value() {
        // ∫_R (|x|+λ)^{−q′} = 2λ^{1−q′}/(q′−1)
        let (q, l) = (3.0, 0.01);
        let r = min_estimate_integral(0.0, l, -1e6, 1e6, q).unwrap().0;
        let exact = 2.0 * l.powf(1.0 - q) / (q - 1.0) - 2.0 * (1e6 + l).powf(1.0 - q) / (q - 1.0);
        assert!((r - exact).abs() < 1e-9 * exact);
    }
}
