//! The amplitude a(r, θ) with r^{−N}(g − T^{N−1}g) = Re[a e^{iNθ}],
//! obtained from the residues of ζ^{−N}(ζ − r)^{−1} g(ζ) at e^{±iθ}.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{LabError, Result};

const BASE_NODES: usize = 64;
const MAX_NODES: usize = 4096;
const AGREEMENT: f64 = 1e-11;

/// Trapezoid estimate of a = −2 e^{−iNθ} Res_{e^{−iθ}} with `k` nodes.
fn contour_amplitude(d: usize, r: f64, theta: f64, n: usize, rho: f64, k: usize) -> Complex64 {
    let p = Complex64::from_polar(1.0, -theta);
    let q = Complex64::from_polar(1.0, theta);
    let rot = Complex64::from_polar(1.0, theta);
    let half_d = (d / 2) as i32;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..k {
        let w = Complex64::from_polar(rho, 2.0 * PI * i as f64 / k as f64);
        let zeta = p + w;
        // e^{−iNθ} ζ^{−N} = (ζ e^{iθ})^{−N}; ζ − e^{−iθ} = w exactly
        let phase = (zeta * rot).powi(-(n as i32));
        let f = phase / (zeta - r) * ((zeta - q) * w).powi(-half_d);
        acc += f * w;
    }
    acc * (-2.0 / k as f64)
}

/// Contour radius around e^{−iθ}: a quarter of the distance to the nearest
/// other singularity, and at most 1/(N+1) so the ζ^{−N} factor stays resolved.
pub fn contour_radius(r: f64, theta: f64, n: usize) -> f64 {
    let p = Complex64::from_polar(1.0, -theta);
    (theta.sin().abs() / 4.0).min((r - p).norm() / 4.0).min(1.0 / (n as f64 + 1.0))
}

/// Amplitude a(r, θ) for even d. Requires |sin θ| ≥ 1/(2N) when N ≥ 1.
pub fn residue_amplitude(d: usize, r: f64, theta: f64, n: usize) -> Result<Complex64> {
    if n >= 1 && theta.sin().abs() < 0.5 / n as f64 {
        return Err(LabError::Domain(format!(
            "residue path needs |sin θ| >= 1/(2N); sin θ = {}, N = {n}",
            theta.sin()
        )));
    }
    residue_amplitude_unchecked(d, r, theta, n)
}

/// As [`residue_amplitude`] without the |sin θ| ≥ 1/(2N) restriction.
pub fn residue_amplitude_unchecked(d: usize, r: f64, theta: f64, n: usize) -> Result<Complex64> {
    if d % 2 != 0 || d < 4 {
        return Err(LabError::Domain(format!("residue path needs even d >= 4, got {d}")));
    }
    let rho = contour_radius(r, theta, n);
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(LabError::Geometry(format!(
            "pole circle degenerates at r = {r}, θ = {theta}: poles or the point r coincide"
        )));
    }
    let mut k = BASE_NODES;
    let mut prev = contour_amplitude(d, r, theta, n, rho, k / 2);
    loop {
        let cur = contour_amplitude(d, r, theta, n, rho, k);
        if (cur - prev).norm() <= AGREEMENT * cur.norm().max(1e-300) {
            return Ok(cur);
        }
        if k >= MAX_NODES {
            return Err(LabError::QuadratureBudget {
                what: format!("residue contour did not settle at r = {r}, θ = {theta}, N = {n}"),
                partial: cur.norm(),
            });
        }
        prev = cur;
        k *= 2;
    }
}

/// r^{−N}(g − T^{N−1}g) = Re[a e^{iNθ}].
pub fn residue_tail(d: usize, r: f64, theta: f64, n: usize) -> Result<f64> {
    let a = residue_amplitude_unchecked(d, r, theta, n)?;
    Ok((a * Complex64::from_polar(1.0, n as f64 * theta)).re)
}
