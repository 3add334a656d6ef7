//! Quadrature checks of the reproducing identity
//! |z|^{−N} u(z) = c Σ_j ∫ I_j^N(z, ζ) |ζ|^{−(N+d−1)} ∂u/∂ζ̄_j dV(ζ)
//! and of its osculated form with the kernel P_ν.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::carleman::CarlemanWeight;
use super::{p_nu_kernel, truncated_kernel};
use crate::error::{LabError, Result};
use crate::geometry::{radial_grid, sphere_grid, ComplexPoint, RadialSpacing};
use crate::quadrature::neumaier_sum;
use crate::test_function::TestFunction;

/// Product grid over the transition shells of a test function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproducingGrid {
    pub sphere_resolution: usize,
    pub radial_nodes: usize,
    /// Upper limit on kernel evaluations per integral.
    pub max_nodes: usize,
}

impl Default for ReproducingGrid {
    fn default() -> Self {
        Self { sphere_resolution: 32, radial_nodes: 12, max_nodes: 4_000_000 }
    }
}

impl ReproducingGrid {
    pub fn refined(&self) -> Self {
        Self {
            sphere_resolution: self.sphere_resolution * 3 / 2,
            radial_nodes: self.radial_nodes * 3 / 2,
            max_nodes: self.max_nodes,
        }
    }
}

/// Power of |ζ| multiplying I^N under the integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZetaExponent {
    /// −(N + d − 1)
    Subtracted,
    /// −N + d − 1
    Added,
}

impl ZetaExponent {
    pub fn value(&self, n: usize, d: usize) -> f64 {
        match self {
            ZetaExponent::Subtracted => -((n + d - 1) as f64),
            ZetaExponent::Added => -(n as f64) + (d - 1) as f64,
        }
    }
}

/// −(n−1)!/π^n, the constant of the classical Bochner–Martinelli formula
/// u(z) = c Σ_j ∫ B_j ∂u/∂ζ̄_j dV for u compactly supported.
pub fn classical_constant(n: usize) -> f64 {
    let fact: f64 = (1..n).map(|k| k as f64).product();
    -fact / std::f64::consts::PI.powi(n as i32)
}

/// Σ_j ∫ K_j(ζ) ∂u/∂ζ̄_j(ζ) dV(ζ) over the transition shells of `u`.
pub fn integrate_against_dbar<K>(u: &TestFunction, grid: &ReproducingGrid, kernel: K) -> Result<Complex64>
where
    K: Fn(&ComplexPoint) -> Result<Vec<Complex64>> + Sync,
{
    let d = 2 * u.n();
    let sphere = sphere_grid(d, grid.sphere_resolution)?;
    let shells = u.profile().transition_shells();
    let total = shells.len() * grid.radial_nodes * sphere.len();
    if total > grid.max_nodes {
        return Err(LabError::QuadratureBudget {
            what: format!("{total} kernel evaluations requested, budget {}", grid.max_nodes),
            partial: f64::NAN,
        });
    }
    let mut radial = Vec::new();
    for (a, b) in shells {
        let rg = radial_grid((a, b), grid.radial_nodes, RadialSpacing::GaussLegendreInS)?;
        radial.extend(rg.nodes.iter().copied().zip(rg.volume_weights(d)));
    }
    let terms: Vec<Complex64> = radial
        .par_iter()
        .map(|&(t, wt)| -> Result<Complex64> {
            let mut acc = Vec::with_capacity(sphere.len());
            for (x, ws) in sphere.nodes.iter().zip(&sphere.weights) {
                let pt: Vec<f64> = x.iter().map(|c| c * t).collect();
                let zeta = ComplexPoint::from_real(&pt)?;
                let du = u.dbar(&zeta);
                if du.iter().all(|c| c.norm_sqr() == 0.0) {
                    continue;
                }
                let k = kernel(&zeta)?;
                let s: Complex64 = k.iter().zip(&du).map(|(a, b)| a * b).sum();
                acc.push(s * (ws * wt));
            }
            Ok(Complex64::new(neumaier_sum(acc.iter().map(|c| c.re)), neumaier_sum(acc.iter().map(|c| c.im))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Complex64::new(neumaier_sum(terms.iter().map(|c| c.re)), neumaier_sum(terms.iter().map(|c| c.im))))
}

/// Σ_j ∫ I_j^N(z, ζ) |ζ|^e ∂u/∂ζ̄_j dV without the overall constant.
pub fn truncated_integral(
    u: &TestFunction,
    z: &ComplexPoint,
    n_trunc: usize,
    exponent: ZetaExponent,
    grid: &ReproducingGrid,
) -> Result<Complex64> {
    let d = 2 * u.n();
    let e = exponent.value(n_trunc, d);
    integrate_against_dbar(u, grid, |zeta| {
        let k = truncated_kernel(z, zeta, n_trunc)?;
        let f = zeta.norm().powf(e);
        Ok(k.components.iter().map(|c| c * f).collect())
    })
}

/// c fixed by the N = 0 identity u(z) = c Σ_j ∫ I_j^0 |ζ|^{−(d−1)} ∂̄_j u dV.
pub fn calibrate_constant(u: &TestFunction, z: &ComplexPoint, grid: &ReproducingGrid) -> Result<Complex64> {
    let integral = truncated_integral(u, z, 0, ZetaExponent::Subtracted, grid)?;
    if integral.norm() == 0.0 {
        return Err(LabError::Domain("calibration integral vanishes; choose z where u(z) != 0".into()));
    }
    Ok(u.value(z) / integral)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproducingResult {
    pub n_trunc: usize,
    pub grid: ReproducingGrid,
    pub exponent: ZetaExponent,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub relative_error: f64,
}

/// Compares |z|^{−N} u(z) with c times the truncated-kernel integral.
pub fn reproducing_check(
    u: &TestFunction,
    z: &ComplexPoint,
    n_trunc: usize,
    exponent: ZetaExponent,
    constant: Complex64,
    grid: &ReproducingGrid,
) -> Result<ReproducingResult> {
    if !u.support_avoids_origin() {
        return Err(LabError::Domain("reproducing check needs a test function supported away from 0".into()));
    }
    let lhs = z.norm().powi(-(n_trunc as i32)) * u.value(z);
    let rhs = constant * truncated_integral(u, z, n_trunc, exponent, grid)?;
    let relative_error = (lhs - rhs).norm() / lhs.norm();
    Ok(ReproducingResult { n_trunc, grid: *grid, exponent, lhs, rhs, relative_error })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OsculationResult {
    pub nu: f64,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub relative_error: f64,
}

/// e^{νψ(σ)} u(z) against c ∫ P_ν(z, ζ) e^{νψ(τ)} ∂̄u(ζ).
pub fn osculation_check(
    u: &TestFunction,
    z: &ComplexPoint,
    nu: f64,
    w: &CarlemanWeight,
    constant: Complex64,
    grid: &ReproducingGrid,
) -> Result<OsculationResult> {
    let sigma = -z.norm().ln();
    let lhs = (nu * w.psi(sigma)).exp() * u.value(z);
    let integral = integrate_against_dbar(u, grid, |zeta| {
        let k = p_nu_kernel(z, zeta, nu, w)?;
        let f = (nu * w.psi(-zeta.norm().ln())).exp();
        Ok(k.components.iter().map(|c| c * f).collect())
    })?;
    let rhs = constant * integral;
    Ok(OsculationResult { nu, lhs, rhs, relative_error: (lhs - rhs).norm() / lhs.norm() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_function::default_bump;

    #[test]
    fn classical_constants() {
        assert!((classical_constant(1) + 1.0 / std::f64::consts::PI).abs() < 1e-16);
        assert!((classical_constant(2) + 1.0 / std::f64::consts::PI.powi(2)).abs() < 1e-16);
    }

    #[test]
    fn budget_is_enforced() {
        let u = default_bump();
        let z = ComplexPoint::from_real(&[0.3, 0.2, 0.3, -0.2]).unwrap();
        let g = ReproducingGrid { sphere_resolution: 40, radial_nodes: 12, max_nodes: 10 };
        assert!(matches!(calibrate_constant(&u, &z, &g), Err(LabError::QuadratureBudget { .. })));
    }
}
