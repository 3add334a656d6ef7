//! The family u = e^{−|x|^{−ε}} with potential V = |∂̄u|/|u| = (ε/2)|x|^{−ε−1}:
//! u vanishes to infinite order at 0 while V ∈ L^q exactly when
//! q(1 + ε) < 2n.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{LabError, Result};
use crate::geometry::ComplexPoint;
use crate::quadrature::{adaptive_gk, gauss_legendre};
use crate::verification::fit_exponent;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleParams {
    pub epsilon: f64,
    pub q: f64,
    pub n: usize,
}

impl CounterexampleParams {
    pub fn new(epsilon: f64, q: f64, n: usize) -> Result<Self> {
        if !(epsilon > 0.0 && q >= 1.0 && n >= 1) {
            return Err(LabError::Domain(format!("need ε > 0, q >= 1, n >= 1; got {epsilon}, {q}, {n}")));
        }
        Ok(Self { epsilon, q, n })
    }

    /// V ∈ L^q(B₁) iff q(1+ε) < 2n.
    pub fn integrable(&self) -> bool {
        self.q * (1.0 + self.epsilon) < 2.0 * self.n as f64
    }

    /// Radial exponent a with V^q s^{2n−1} = (ε/2)^q s^a.
    fn radial_exponent(&self) -> f64 {
        2.0 * self.n as f64 - 1.0 - self.q * (1.0 + self.epsilon)
    }

    /// q(1+ε) − 2n, the rate at which the cutoff integrals blow up.
    pub fn divergence_exponent(&self) -> f64 {
        -(self.radial_exponent() + 1.0)
    }

    /// ∫_{B₁} V^q = (ε/2)^q |S^{2n−1}| / (2n − q(1+ε)), or +∞.
    pub fn closed_form_integral(&self) -> f64 {
        if !self.integrable() {
            return f64::INFINITY;
        }
        (0.5 * self.epsilon).powf(self.q) * sphere_area(self.n) / (self.radial_exponent() + 1.0)
    }
}

/// |S^{2n−1}| = 2π^n/(n−1)!.
pub fn sphere_area(n: usize) -> f64 {
    (2f64.ln() + n as f64 * std::f64::consts::PI.ln() - ln_gamma(n as f64)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSample {
    pub u: f64,
    pub v: f64,
    /// The sample sits at the origin: u = 0, V = +∞, excluded from integrals.
    pub at_origin: bool,
}

pub fn counterexample_u(epsilon: f64, s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-s.powf(-epsilon)).exp()
    }
}

/// V = (ε/2) s^{−ε−1}: for radial real u, |∂̄u| = |u′|/2.
pub fn counterexample_v(epsilon: f64, s: f64) -> f64 {
    if s <= 0.0 {
        f64::INFINITY
    } else {
        0.5 * epsilon * s.powf(-epsilon - 1.0)
    }
}

pub fn counterexample_field(params: &CounterexampleParams, points: &[ComplexPoint]) -> Vec<CounterexampleSample> {
    points
        .iter()
        .map(|z| {
            let s = z.norm();
            CounterexampleSample {
                u: counterexample_u(params.epsilon, s),
                v: counterexample_v(params.epsilon, s),
                at_origin: s == 0.0,
            }
        })
        .collect()
}

/// ∫_{δ < |x| < 1} V^q by adaptive quadrature in t = ln s.
pub fn cutoff_integral(params: &CounterexampleParams, delta: f64) -> f64 {
    let a = params.radial_exponent();
    let c = (0.5 * params.epsilon).powf(params.q) * sphere_area(params.n);
    // s^a ds = e^{(a+1)t} dt
    let f = |t: f64| ((a + 1.0) * t).exp();
    let (v, _) = adaptive_gk(&f, delta.ln(), 0.0, 1e-12, 10_000);
    c * v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    pub params: CounterexampleParams,
    pub predicted_integrable: bool,
    /// From the cutoff sweep: successive shell increments shrink geometrically.
    pub numerically_integrable: bool,
    /// Last increment ratio of the sweep δ_j = 10^{−j}.
    pub increment_ratio: f64,
    pub closed_form: f64,
    /// ∫ at the smallest cutoff (convergent side only).
    pub numerical: Option<f64>,
    pub relative_error: Option<f64>,
    /// −(fitted slope of ln ∫_δ vs ln δ) on the divergent side.
    pub fitted_divergence_exponent: Option<f64>,
    pub agrees: bool,
}

/// Cutoff sweep δ = 10^{−j}, j = 1..=cutoffs, classification and, on the
/// convergent side, the comparison with the closed form at δ = 10^{−300}.
pub fn integrability_check(params: &CounterexampleParams, cutoffs: usize) -> IntegrabilityReport {
    let deltas: Vec<f64> = (1..=cutoffs.max(3)).map(|j| 10f64.powi(-(j as i32))).collect();
    let values: Vec<f64> = deltas.iter().map(|&d| cutoff_integral(params, d)).collect();
    let inc: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let increment_ratio = inc[inc.len() - 1] / inc[inc.len() - 2];
    let numerically_integrable = increment_ratio < 1.0 - 1e-9;
    let predicted = params.integrable();
    let closed_form = params.closed_form_integral();
    let (numerical, relative_error, fitted) = if predicted {
        let v = cutoff_integral(params, 1e-300);
        (Some(v), Some(((v - closed_form) / closed_form).abs()), None)
    } else {
        let pts: Vec<(f64, f64)> = deltas.iter().zip(&values).skip(cutoffs / 2).map(|(&d, &v)| (d, v)).collect();
        (None, None, fit_exponent(&pts).ok().map(|f| -f.slope))
    };
    IntegrabilityReport {
        params: *params,
        predicted_integrable: predicted,
        numerically_integrable,
        increment_ratio,
        closed_form,
        numerical,
        relative_error,
        fitted_divergence_exponent: fitted,
        agrees: predicted == numerically_integrable,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VanishingScan {
    /// (N, r, ln(r^{−N} ∫_{B_r} |u|^{p′})).
    pub rows: Vec<(usize, f64, f64)>,
    /// Every column decreases strictly as r ↓ and ends below e^{−50}.
    pub infinite_order: bool,
    /// Columns (by N) that fail the decrease.
    pub failing_orders: Vec<usize>,
}

/// r^{−N} ∫_{B_r} |u|^{p′} for radial u given by ln|u(s)|, in log space.
/// `r_values` should be sorted decreasing.
pub fn vanishing_order_scan(
    ln_u: &dyn Fn(f64) -> f64,
    n: usize,
    p_prime: f64,
    orders: &[usize],
    r_values: &[f64],
) -> VanishingScan {
    let (gx, gw) = gauss_legendre(16);
    let dim = 2.0 * n as f64;
    let ln_area = sphere_area(n).ln();
    let ln_ball = |r: f64| -> f64 {
        // ∫_0^r |u|^{p′} s^{2n−1} ds = ∫_{−∞}^{ln r} e^{p′ ln|u(e^t)| + 2n t} dt;
        // the window adapts to the local decay rate at the upper end
        let lr = r.ln();
        let f = |t: f64| p_prime * ln_u(t.exp()) + dim * t;
        let h = 1e-6 * lr.abs().max(1.0);
        let rate = ((f(lr) - f(lr - h)) / h).abs().max(dim);
        let width = 60.0 / rate;
        let panels = 64;
        let mut terms = Vec::with_capacity(panels * 16);
        for p in 0..panels {
            let a = lr - width * (p + 1) as f64 / panels as f64;
            let hh = width / panels as f64;
            for (x, w) in gx.iter().zip(&gw) {
                let t = a + 0.5 * hh * (x + 1.0);
                terms.push(f(t) + (0.5 * hh * w).ln());
            }
        }
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return m;
        }
        m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
    };
    let balls: Vec<f64> = r_values.iter().map(|&r| ln_area + ln_ball(r)).collect();
    let mut rows = Vec::new();
    let mut failing = Vec::new();
    for &order in orders {
        let col: Vec<f64> = r_values.iter().zip(&balls).map(|(&r, &b)| b - order as f64 * r.ln()).collect();
        let ok = col.windows(2).all(|w| w[1] < w[0]) && col.last().map_or(false, |&v| v < -50.0);
        if !ok {
            failing.push(order);
        }
        rows.extend(r_values.iter().zip(&col).map(|(&r, &v)| (order, r, v)));
    }
    VanishingScan { rows, infinite_order: failing.is_empty(), failing_orders: failing }
}

/// r-values 10^{−40}, …, 10^{−300} used for ε = 0.1: at r ≥ 10^{−3} the
/// factor e^{−r^{−ε}} is still of order 0.1 and the volume term dominates.
pub fn default_scan_radii() -> Vec<f64> {
    (0..=13).map(|j| 10f64.powi(-40 - 20 * j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointwise_values() {
        let z = ComplexPoint::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let o = ComplexPoint::from_real(&[0.0; 4]).unwrap();
        let p = CounterexampleParams::new(0.1, 3.0, 2).unwrap();
        let f = counterexample_field(&p, &[z, o]);
        assert!((f[0].u - (-1f64).exp()).abs() < 1e-15);
        assert!((f[0].v - 0.05).abs() < 1e-15);
        assert!(f[1].at_origin && f[1].u == 0.0 && f[1].v.is_infinite());
    }

    #[test]
    fn v_is_half_the_radial_derivative_ratio() {
        let e = 0.3;
        for s in [0.2, 0.5, 0.9] {
            let h = 1e-6;
            let du = (counterexample_u(e, s + h) - counterexample_u(e, s - h)) / (2.0 * h);
            assert!((0.5 * du / counterexample_u(e, s) - counterexample_v(e, s)).abs() < 1e-7);
        }
    }

    #[test]
    fn convergent_case_matches_closed_form() {
        let p = CounterexampleParams::new(0.1, 3.0, 2).unwrap();
        let r = integrability_check(&p, 12);
        assert!(r.predicted_integrable && r.numerically_integrable);
        // (0.05)^3 · 2π² / 0.7
        let exact = 0.05f64.powi(3) * 2.0 * std::f64::consts::PI.powi(2) / 0.7;
        assert!((r.closed_form - exact).abs() < 1e-15);
        assert!(r.relative_error.unwrap() < 0.01);
    }

    #[test]
    fn divergent_case_exponent() {
        let p = CounterexampleParams::new(0.1, 4.0, 2).unwrap();
        let r = integrability_check(&p, 12);
        assert!(!r.predicted_integrable && !r.numerically_integrable);
        assert!((r.fitted_divergence_exponent.unwrap() - 0.4).abs() < 0.05);
    }

    #[test]
    fn constant_function_is_not_infinitely_flat() {
        let radii: Vec<f64> = (1..=10).map(|j| 10f64.powf(-1.0 - 0.2 * j as f64)).collect();
        let s = vanishing_order_scan(&|_| 0.0, 2, 2.0, &[2, 6], &radii);
        // r^{−N} vol(B_r) ∝ r^{4−N}
        assert_eq!(s.failing_orders, vec![2, 6]);
        let col6: Vec<f64> = s.rows.iter().filter(|r| r.0 == 6).map(|r| r.2).collect();
        assert!(col6.windows(2).all(|w| w[1] > w[0]));
        // vol(B_r) = π²r⁴/2
        let (_, r, v) = *s.rows.iter().find(|r| r.0 == 2).unwrap();
        assert!((v - ((std::f64::consts::PI.powi(2) / 2.0).ln() + 2.0 * r.ln())).abs() < 1e-8);
    }

    #[test]
    fn counterexample_vanishes_to_infinite_order() {
        let e = 0.1;
        let orders: Vec<usize> = (1..=20).collect();
        let s = vanishing_order_scan(&|x: f64| -x.powf(-e), 2, 62.0 / 30.0, &orders, &default_scan_radii());
        assert!(s.infinite_order, "{:?}", s.failing_orders);
    }
}
