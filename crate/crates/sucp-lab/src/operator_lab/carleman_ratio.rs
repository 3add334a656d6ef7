//! Carleman ratio R = ‖e^{νψ(σ)}u‖_{L^{p′}(A(ψ⁻¹γ))} / ‖e^{νψ(σ)}∂̄u‖_{L^p(B(0,1))}
//! with σ = log 1/|z|, for u = c z^α χ(|z|).
//!
//! Both norms factor into an angular integral over the sphere and a radial
//! integral in σ, which is evaluated in log space. |∂̄u| = |c||z^α||χ′|/2.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{LabError, Result};
use crate::kernels::carleman::CarlemanWeight;
use crate::quadrature::gauss_legendre;
use crate::test_function::{HolomorphicPolynomial, RadialProfile, TestFunction};
use crate::verification::fit_exponent;

/// Lebesgue exponent q = 2d² − 1 at d = 4.
pub const CARLEMAN_Q: f64 = 31.0;
/// p = 2q/(q+1).
pub const CARLEMAN_P: f64 = 62.0 / 32.0;
/// p′ = 2q/(q−1).
pub const CARLEMAN_P_PRIME: f64 = 62.0 / 30.0;

/// ln ∫_{S^{2n−1}} Π|ξ_i|^{α_i e} dσ = ln(2π^n ΠΓ(α_i e/2 + 1)/Γ(|α|e/2 + n)).
pub fn ln_sphere_monomial_integral(alpha: &[u32], n: usize, e: f64) -> f64 {
    let mut total = 0.0;
    let mut acc = 0.0;
    for i in 0..n {
        let a = alpha.get(i).copied().unwrap_or(0) as f64 * e / 2.0;
        acc += ln_gamma(a + 1.0);
        total += a;
    }
    (2.0f64).ln() + n as f64 * PI.ln() + acc - ln_gamma(total + n as f64)
}

fn monomial(poly: &HolomorphicPolynomial) -> Result<(f64, Vec<u32>)> {
    match poly.terms.as_slice() {
        [(c, alpha)] if c.norm() > 0.0 => Ok((c.norm(), alpha.clone())),
        _ => Err(LabError::Domain("Carleman ratio needs a single nonzero monomial times a radial profile".into())),
    }
}

/// ln ∫_{σ_lo}^{σ_hi} e^{f(σ)} dσ by composite Gauss–Legendre in log space.
fn ln_integral<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, panels: usize) -> f64 {
    if !(hi > lo) {
        return f64::NEG_INFINITY;
    }
    let (x, w) = gauss_legendre(16);
    let h = (hi - lo) / panels as f64;
    let mut terms = Vec::with_capacity(panels * 16);
    for p in 0..panels {
        let a = lo + h * p as f64;
        for (xi, wi) in x.iter().zip(&w) {
            let v = f(a + 0.5 * h * (xi + 1.0));
            if v > f64::NEG_INFINITY {
                terms.push(v + (0.5 * h * wi).ln());
            }
        }
    }
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

struct RadialData<'a> {
    profile: &'a RadialProfile,
    coeff: f64,
    alpha: Vec<u32>,
    degree: f64,
    n: usize,
}

impl<'a> RadialData<'a> {
    fn new(u: &'a TestFunction) -> Result<Self> {
        let (coeff, alpha) = monomial(&u.descriptor.polynomial)?;
        let degree = alpha.iter().sum::<u32>() as f64;
        Ok(Self { profile: u.profile(), coeff, alpha, degree, n: u.n() })
    }

    /// σ-range of the support.
    fn sigma_support(&self) -> (f64, f64) {
        let (inner, outer) = self.profile.support();
        (-outer.ln(), if inner > 0.0 { -inner.ln() } else { 700.0 })
    }
}

fn panels_for(len: f64, nu: f64) -> usize {
    ((len * nu.sqrt() * 40.0).ceil() as usize).clamp(64, 200_000)
}

/// ln ‖e^{νψ(σ)}u‖_{L^e} over σ ∈ [lo, hi].
fn ln_weighted_norm(rd: &RadialData, w: &CarlemanWeight, nu: f64, e: f64, lo: f64, hi: f64, derivative: bool) -> f64 {
    let d = 2.0 * rd.n as f64;
    let f = |sigma: f64| {
        let s = (-sigma).exp();
        let radial = if derivative { 0.5 * rd.profile.derivative(s).abs() } else { rd.profile.value(s).abs() };
        if radial == 0.0 {
            return f64::NEG_INFINITY;
        }
        e * (nu * w.psi(sigma) - rd.degree * sigma + radial.ln()) - d * sigma
    };
    let ln_rad = ln_integral(f, lo, hi, panels_for(hi - lo, nu));
    let ln_ang = ln_sphere_monomial_integral(&rd.alpha, rd.n, e);
    (e * rd.coeff.ln() + ln_ang + ln_rad) / e
}

/// σ maximizing e^{νψ(σ)}|u| on the support.
pub fn weighted_peak(u: &TestFunction, w: &CarlemanWeight, nu: f64) -> Result<f64> {
    let rd = RadialData::new(u)?;
    let (lo, hi) = rd.sigma_support();
    let hi = hi.min(lo + 50.0);
    let f = |sigma: f64| {
        let v = rd.profile.value((-sigma).exp()).abs();
        if v == 0.0 {
            f64::NEG_INFINITY
        } else {
            nu * w.psi(sigma) - rd.degree * sigma + v.ln()
        }
    };
    let m = 8000;
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 1..m {
        let x = lo + (hi - lo) * i as f64 / m as f64;
        let v = f(x);
        if v > best.0 {
            best = (v, x);
        }
    }
    // golden-section refinement within one grid cell on either side
    let h = (hi - lo) / m as f64;
    let (mut a, mut b) = (best.1 - h, best.1 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let dd = a + g * (b - a);
        if f(c) > f(dd) {
            b = dd;
        } else {
            a = c;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlemanSample {
    pub test_function: usize,
    pub nu: f64,
    /// γ as an interval of ψ-values.
    pub gamma: (f64, f64),
    /// |γ| ν^{1/2}.
    pub regime: f64,
    pub ln_numerator: f64,
    pub ln_denominator: f64,
    pub ratio: f64,
    /// R/(ν min{|γ|, ν^{−1/2}}).
    pub normalized: f64,
}

/// R for one (ν, γ).
pub fn carleman_ratio(u: &TestFunction, w: &CarlemanWeight, nu: f64, gamma: (f64, f64)) -> Result<CarlemanSample> {
    if !u.support_avoids_origin() {
        return Err(LabError::Domain("test function support must avoid the origin".into()));
    }
    if !(gamma.1 > gamma.0) {
        return Err(LabError::Domain(format!("empty interval {gamma:?}")));
    }
    let rd = RadialData::new(u)?;
    let (slo, shi) = rd.sigma_support();
    let (glo, ghi) = (w.psi_inverse(gamma.0)?, w.psi_inverse(gamma.1)?);
    let ln_num = ln_weighted_norm(&rd, w, nu, CARLEMAN_P_PRIME, glo.max(slo), ghi.min(shi), false);
    let mut den_terms = Vec::new();
    for (a, b) in rd.profile.transition_shells() {
        // shells inside the unit ball, in σ
        let (lo, hi) = (-(b.min(1.0)).ln(), if a > 0.0 { -a.ln() } else { 700.0 });
        if hi > lo {
            den_terms.push(CARLEMAN_P * ln_weighted_norm(&rd, w, nu, CARLEMAN_P, lo, hi, true));
        }
    }
    let m = den_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Err(LabError::Domain("dbar u vanishes on the unit ball".into()));
    }
    let ln_den = (m + den_terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()) / CARLEMAN_P;
    let ratio = (ln_num - ln_den).exp();
    let len = gamma.1 - gamma.0;
    let normalized = ratio / (nu * len.min(nu.powf(-0.5)));
    Ok(CarlemanSample {
        test_function: 0,
        nu,
        gamma,
        regime: len * nu.sqrt(),
        ln_numerator: ln_num,
        ln_denominator: ln_den,
        ratio,
        normalized,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlemanReport {
    pub samples: Vec<CarlemanSample>,
    pub spread: f64,
    /// Fitted ν-slope of the normalized ratio per (test function, regime).
    pub nu_slopes: BTreeMap<String, f64>,
    pub max_nu_slope: f64,
    pub pass: bool,
}

/// ν-sweep with γ centred at the weighted peak of u and |γ| = m ν^{−1/2}
/// for each multiplier m.
pub fn carleman_ratio_experiment(
    functions: &[TestFunction],
    w: &CarlemanWeight,
    nus: &[f64],
    multipliers: &[f64],
) -> Result<CarlemanReport> {
    let mut samples = Vec::new();
    for (fi, u) in functions.iter().enumerate() {
        for &nu in nus {
            let centre = w.psi(weighted_peak(u, w, nu)?);
            for &m in multipliers {
                let half = 0.5 * m * nu.powf(-0.5);
                let mut s = carleman_ratio(u, w, nu, (centre - half, centre + half))?;
                s.test_function = fi;
                samples.push(s);
            }
        }
    }
    let sup = samples.iter().map(|s| s.normalized).fold(0.0, f64::max);
    let inf = samples.iter().map(|s| s.normalized).fold(f64::INFINITY, f64::min);
    let spread = if inf > 0.0 { sup / inf } else { f64::INFINITY };
    let mut nu_slopes = BTreeMap::new();
    for fi in 0..functions.len() {
        for &m in multipliers {
            let pts: Vec<(f64, f64)> = samples
                .iter()
                .filter(|s| s.test_function == fi && (s.regime - m).abs() < 1e-9 * m)
                .map(|s| (s.nu, s.normalized))
                .collect();
            if let Ok(fit) = fit_exponent(&pts) {
                nu_slopes.insert(format!("u{fi}/m{m}"), fit.slope);
            }
        }
    }
    let max_nu_slope = nu_slopes.values().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pass = spread <= 10.0 && max_nu_slope <= 0.1;
    Ok(CarlemanReport { samples, spread, nu_slopes, max_nu_slope, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_function::{make_test_function, TestFunctionDescriptor};
    use num_complex::Complex64;

    fn plateau() -> TestFunction {
        make_test_function(TestFunctionDescriptor {
            n: 2,
            profile: RadialProfile::Plateau { a: 0.2, b: 0.4, c: 0.6, e: 0.8 },
            polynomial: HolomorphicPolynomial::one(),
        })
        .unwrap()
    }

    #[test]
    fn sphere_volume_and_monomial_moment() {
        // |S³| = 2π², ∫|ξ_1|² = π²
        assert!((ln_sphere_monomial_integral(&[], 2, 2.0) - (2.0 * PI * PI).ln()).abs() < 1e-13);
        assert!((ln_sphere_monomial_integral(&[1], 2, 2.0) - (PI * PI).ln()).abs() < 1e-13);
    }

    #[test]
    fn disjoint_annulus_gives_zero_numerator() {
        let w = CarlemanWeight::default_weight();
        // σ < −ln 0.8: outside the support
        let s = carleman_ratio(&plateau(), &w, 16.0, (0.9, w.psi(0.1))).unwrap();
        assert_eq!(s.ratio, 0.0);
        assert!(s.ln_denominator.is_finite());
    }

    #[test]
    fn radial_integral_matches_plain_quadrature() {
        let w = CarlemanWeight::default_weight();
        let u = make_test_function(TestFunctionDescriptor {
            n: 2,
            profile: RadialProfile::AnnularBump { a: 0.3, b: 0.7 },
            polynomial: HolomorphicPolynomial { terms: vec![(Complex64::new(0.0, 2.0), vec![2, 0])] },
        })
        .unwrap();
        let nu = 4.0;
        let (lo, hi) = (w.psi(-(0.6f64).ln()), w.psi(-(0.4f64).ln()));
        let got = carleman_ratio(&u, &w, nu, (lo, hi)).unwrap().ln_numerator;
        // oracle: radial integral in s with a midpoint rule, angular factor 2π²/(p′+1)
        let e = CARLEMAN_P_PRIME;
        let m = 200_000;
        let mut acc = 0.0;
        for i in 0..m {
            let s = 0.4 + 0.2 * (i as f64 + 0.5) / m as f64;
            let sigma = -s.ln();
            let v = 2.0 * s * s * u.profile().value(s) * (nu * w.psi(sigma)).exp();
            acc += v.powf(e) * s.powi(3) * 0.2 / m as f64;
        }
        let oracle = ((acc * 2.0 * PI * PI / (e + 1.0)).ln()) / e;
        assert!((got - oracle).abs() < 1e-6, "{got} {oracle}");
    }
}
