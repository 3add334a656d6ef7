//! Bochner–Martinelli kernel, its Taylor truncation, the truncated kernel
//! I^N in defining and closed form, and the Carleman kernels L_ν, M_ν, N_ν, P_ν.
//!
//! Closed form used throughout (derived from ∂_{z_j} of the zonal tail of
//! |ζ − z|^{2−d} and checked against the defining form):
//! I_j^N = −2 [h_{j1} r^{−N}(g − T^{N−1}g) + h_{j2} r^{−(N−1)}(g − T^{N−2}g)],
//! h_{j1} = −conj(ζ_j)/(2|ζ|) after simplification, h_{j2} = conj(z_j)/(2|z|).

pub mod carleman;
pub(crate) mod direct;
pub mod reproducing;
pub mod residue;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::gegenbauer::{g_function, g_series_tail};
use crate::geometry::{polar_data, ComplexPoint};
use carleman::{CarlemanWeight, OsculationData, SmoothCutoff};
pub use residue::{residue_amplitude, residue_tail};

/// Overall constant of the closed form, independent of d.
pub const CLOSED_FORM_SCALE: f64 = -2.0;

/// Largest r for which g-tails are summed as a series.
pub const SERIES_RADIUS: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelPath {
    Direct,
    ClosedForm,
    Residue,
}

/// The n coefficient functions of an (n, n−1) form at a point pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub components: Vec<Complex64>,
    pub path: KernelPath,
    /// Set when the direct path runs in its cancellation-prone regime.
    pub precision_warning: bool,
}

impl KernelValue {
    fn new(components: Vec<Complex64>, path: KernelPath) -> Self {
        Self { components, path, precision_warning: false }
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { components: self.components.iter().map(|c| c * s).collect(), ..self.clone() }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// ‖self − other‖ / ‖other‖ over the component vector.
    pub fn relative_error(&self, other: &Self) -> f64 {
        let diff: f64 = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        diff / other.norm()
    }
}

fn check_pair(z: &ComplexPoint, zeta: &ComplexPoint) -> Result<()> {
    if z.n() != zeta.n() {
        return Err(LabError::Shape("z and zeta have different dimensions".into()));
    }
    Ok(())
}

/// B_j(z, ζ) = conj(ζ_j − z_j) / |ζ − z|^{2n}.
pub fn bm_kernel(z: &ComplexPoint, zeta: &ComplexPoint) -> Result<KernelValue> {
    check_pair(z, zeta)?;
    let diff = zeta.sub(z);
    let dist_sq = diff.norm_sqr();
    if dist_sq == 0.0 {
        return Err(LabError::Singularity("bm_kernel evaluated at z = zeta".into()));
    }
    let denom = dist_sq.powi(z.n() as i32);
    Ok(KernelValue::new(diff.coords.iter().map(|c| c.conj() / denom).collect(), KernelPath::Direct))
}

/// Degree-(N−1) Taylor polynomial of B_j(·, ζ) at z = 0 via the zonal route.
pub fn taylor_kernel(z: &ComplexPoint, zeta: &ComplexPoint, n: usize) -> Result<KernelValue> {
    check_pair(z, zeta)?;
    if zeta.is_zero() {
        return Err(LabError::Domain("taylor_kernel: zeta is the zero point".into()));
    }
    if n == 0 {
        return Err(LabError::Domain("taylor_kernel needs N >= 1".into()));
    }
    Ok(KernelValue::new(
        direct::taylor_components(&z.to_real(), &zeta.to_real(), n),
        KernelPath::Direct,
    ))
}

/// I_j^N from its definition (|ζ|/|z|)^N |ζ|^{d−1}(B_j − P_j^{N−1}),
/// evaluated in double-double arithmetic.
pub fn truncated_kernel_direct(z: &ComplexPoint, zeta: &ComplexPoint, n: usize) -> Result<KernelValue> {
    check_pair(z, zeta)?;
    if z.is_zero() || zeta.is_zero() {
        return Err(LabError::Domain("truncated kernel needs z != 0 and zeta != 0".into()));
    }
    if z == zeta {
        return Err(LabError::Singularity("truncated kernel evaluated at z = zeta".into()));
    }
    let comps = direct::truncated_direct_components(&z.to_real(), &zeta.to_real(), n);
    let mut v = KernelValue::new(comps, KernelPath::Direct);
    v.precision_warning = z.norm() / zeta.norm() > SERIES_RADIUS && n > 12;
    Ok(v)
}

/// h_{j1}(z, ζ), literal form
/// −(2|ζ|)^{−1}(conj ζ_j − ½ conj(z_j)|z|^{−2}(z·ζ̄ + z̄·ζ)) − ((z·ζ̄ + ζ·z̄)/(2|z||ζ|)) conj(z_j)/(2|z|).
pub fn h_j1(z: &ComplexPoint, zeta: &ComplexPoint) -> Vec<Complex64> {
    let s = z.norm();
    let t = zeta.norm();
    let two_re = 2.0 * z.real_inner(zeta);
    z.coords
        .iter()
        .zip(&zeta.coords)
        .map(|(zj, wj)| {
            let first = (wj.conj() - zj.conj() * (0.5 * two_re / (s * s))) * (-0.5 / t);
            let second = zj.conj() * (two_re / (2.0 * s * t)) / (2.0 * s);
            first - second
        })
        .collect()
}

/// h_{j2}(z) = conj(z_j)/(2|z|).
pub fn h_j2(z: &ComplexPoint) -> Vec<Complex64> {
    let s = z.norm();
    z.coords.iter().map(|c| c.conj() / (2.0 * s)).collect()
}

/// Which route produced a g-tail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailPath {
    Closed,
    Series,
    Residue,
    Direct,
}

/// r^{−M}(g − T^{M−1}g) for integer M (M ≤ 0 means no subtraction).
/// `n_rule` is the N governing the |sin θ| ≥ 1/(2N) restriction of the
/// residue path. With `allow_direct` the double-double Taylor subtraction
/// covers the remaining region.
pub fn g_tail(d: usize, r: f64, theta: f64, m: i64, n_rule: usize, allow_direct: bool) -> Result<(f64, TailPath)> {
    if m <= 0 {
        return Ok((r.powi(-m as i32) * g_function(d, r, theta), TailPath::Closed));
    }
    let mu = m as usize;
    if r <= SERIES_RADIUS {
        return Ok((g_series_tail(d, r, theta, mu, None)?.0, TailPath::Series));
    }
    if theta.sin().abs() >= 0.5 / n_rule.max(1) as f64 {
        return Ok((residue_tail(d, r, theta, mu)?, TailPath::Residue));
    }
    if allow_direct {
        return Ok((direct::g_tail_direct(d, r, theta, mu), TailPath::Direct));
    }
    Err(LabError::Uncomputable(format!(
        "r = {r} > {SERIES_RADIUS} and |sin θ| = {} < 1/(2N) with N = {n_rule}",
        theta.sin().abs()
    )))
}

fn closed_components(z: &ComplexPoint, zeta: &ComplexPoint, n: usize, allow_direct: bool) -> Result<(Vec<Complex64>, KernelPath)> {
    check_pair(z, zeta)?;
    if z.is_zero() || zeta.is_zero() {
        return Err(LabError::Domain("truncated kernel needs z != 0 and zeta != 0".into()));
    }
    if z == zeta {
        return Err(LabError::Singularity("truncated kernel evaluated at z = zeta".into()));
    }
    let p = polar_data(z, zeta)?;
    let d = z.d();
    let (t1, p1) = g_tail(d, p.r, p.theta, n as i64, n, allow_direct)?;
    let (t2, p2) = g_tail(d, p.r, p.theta, n as i64 - 1, n, allow_direct)?;
    let h1 = h_j1(z, zeta);
    let h2 = h_j2(z);
    let comps = h1
        .iter()
        .zip(&h2)
        .map(|(a, b)| (a * t1 + b * t2) * CLOSED_FORM_SCALE)
        .collect();
    let path = if p1 == TailPath::Residue || p2 == TailPath::Residue {
        KernelPath::Residue
    } else if p1 == TailPath::Direct || p2 == TailPath::Direct {
        KernelPath::Direct
    } else {
        KernelPath::ClosedForm
    };
    Ok((comps, path))
}

/// Closed form of I_j^N with series tails (r ≤ 0.95) or residue tails
/// (|sin θ| ≥ 1/(2N)).
pub fn truncated_kernel_closed(z: &ComplexPoint, zeta: &ComplexPoint, n: usize) -> Result<KernelValue> {
    let (c, p) = closed_components(z, zeta, n, false)?;
    Ok(KernelValue::new(c, p))
}

/// I_j^N by the closed form where available, otherwise with tails from
/// double-double Taylor subtraction.
pub fn truncated_kernel(z: &ComplexPoint, zeta: &ComplexPoint, n: usize) -> Result<KernelValue> {
    let (c, p) = closed_components(z, zeta, n, true)?;
    Ok(KernelValue::new(c, p))
}

/// L_ν = |z|^{−(d−1)/2+ρ} |ζ|^{−(d−1)/2−ρ} I^N.
pub fn l_nu_kernel(z: &ComplexPoint, zeta: &ComplexPoint, osc: &OsculationData) -> Result<KernelValue> {
    let d = z.d() as f64;
    let i = truncated_kernel(z, zeta, osc.n)?;
    let pref = z.norm().powf(-(d - 1.0) / 2.0 + osc.rho) * zeta.norm().powf(-(d - 1.0) / 2.0 - osc.rho);
    Ok(i.scale(pref))
}

/// (M_ν, N_ν) = ((1 − χ) L_ν, χ L_ν) with χ the near/far cutoff.
pub fn split_m_n(
    z: &ComplexPoint,
    zeta: &ComplexPoint,
    osc: &OsculationData,
    cutoff: &SmoothCutoff,
) -> Result<(KernelValue, KernelValue)> {
    let l = l_nu_kernel(z, zeta, osc)?;
    let chi = cutoff.value(z.distance(zeta) / zeta.norm());
    Ok((l.scale(1.0 - chi), l.scale(chi)))
}

/// P_ν = e^{−νΔ₂ψ(σ,τ)} L_{νψ′(σ)}.
pub fn p_nu_kernel(z: &ComplexPoint, zeta: &ComplexPoint, nu: f64, w: &CarlemanWeight) -> Result<KernelValue> {
    let sigma = -z.norm().ln();
    let tau = -zeta.norm().ln();
    let osc = OsculationData::new(nu * w.dpsi(sigma), z.d())?;
    let l = l_nu_kernel(z, zeta, &osc)?;
    Ok(l.scale((-nu * w.delta2(sigma, tau)).exp()))
}

#[cfg(test)]
mod tests;
