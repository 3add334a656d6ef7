//! Carleman weight ψ, osculation data (ν, ρ, N) and the near/far cutoff.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightProfile {
    /// ψ(σ) = σ; not strictly convex.
    Identity,
    /// ψ(σ) = σ + e^{−δσ}.
    ExpCorrected { delta: f64 },
}

/// Weight ψ in the log-radial variable σ = log 1/|z|.
///
/// For the exp-corrected profile on σ > 0: 1 − δ < ψ′ < 1, so C = (1 − δ)^{−1},
/// and ψ″ = δ² e^{−δσ}, so C_δ = δ².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlemanWeight {
    pub profile: WeightProfile,
}

impl CarlemanWeight {
    pub fn identity() -> Self {
        Self { profile: WeightProfile::Identity }
    }

    pub fn exp_corrected(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(LabError::Domain(format!("delta must lie in (0,1), got {delta}")));
        }
        Ok(Self { profile: WeightProfile::ExpCorrected { delta } })
    }

    /// Default weight, δ = 1/2.
    pub fn default_weight() -> Self {
        Self { profile: WeightProfile::ExpCorrected { delta: 0.5 } }
    }

    pub fn delta(&self) -> f64 {
        match self.profile {
            WeightProfile::Identity => 0.0,
            WeightProfile::ExpCorrected { delta } => delta,
        }
    }

    pub fn psi(&self, sigma: f64) -> f64 {
        match self.profile {
            WeightProfile::Identity => sigma,
            WeightProfile::ExpCorrected { delta } => sigma + (-delta * sigma).exp(),
        }
    }

    pub fn dpsi(&self, sigma: f64) -> f64 {
        match self.profile {
            WeightProfile::Identity => 1.0,
            WeightProfile::ExpCorrected { delta } => 1.0 - delta * (-delta * sigma).exp(),
        }
    }

    pub fn ddpsi(&self, sigma: f64) -> f64 {
        match self.profile {
            WeightProfile::Identity => 0.0,
            WeightProfile::ExpCorrected { delta } => delta * delta * (-delta * sigma).exp(),
        }
    }

    /// C with C⁻¹ < ψ′ < C on σ > 0.
    pub fn c_bound(&self) -> f64 {
        1.0 / (1.0 - self.delta())
    }

    /// C_δ with ψ″(σ) ≥ C_δ e^{−δσ}.
    pub fn c_delta(&self) -> f64 {
        self.delta() * self.delta()
    }

    /// Constant k with Δ₂ψ(σ,τ) ≥ k e^{−δσ} min{1, (τ−σ)²}: half the
    /// minimum of ψ″ e^{δσ} over (σ−1, σ+1), i.e. C_δ e^{−δ}/2.
    pub fn delta2_constant(&self) -> f64 {
        0.5 * self.c_delta() * (-self.delta()).exp()
    }

    /// Δ₂ψ(σ, τ) = ψ(τ) − ψ(σ) − ψ′(σ)(τ − σ), evaluated without cancellation.
    pub fn delta2(&self, sigma: f64, tau: f64) -> f64 {
        match self.profile {
            WeightProfile::Identity => 0.0,
            WeightProfile::ExpCorrected { delta } => {
                let h = tau - sigma;
                // e^{−δσ}(e^{−δh} − 1 + δh)
                (-delta * sigma).exp() * ((-delta * h).exp_m1() + delta * h)
            }
        }
    }

    /// ψ⁻¹(x) by bisection; ψ is increasing on the bracketing range.
    pub fn psi_inverse(&self, x: f64) -> Result<f64> {
        match self.profile {
            WeightProfile::Identity => Ok(x),
            WeightProfile::ExpCorrected { delta } => {
                // ψ′ > 0 for σ > ln(δ)/δ
                let floor = delta.ln() / delta + 1e-9;
                let (mut lo, mut hi) = (floor, x.max(floor) + 2.0);
                if self.psi(lo) > x {
                    return Err(LabError::Domain(format!("{x} below the monotone range of psi")));
                }
                while self.psi(hi) < x {
                    hi = 2.0 * hi + 1.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.psi(mid) < x {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }
}

/// ν = N + (d−1)/2 − ρ with N an integer and ρ ∈ [0, 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OsculationData {
    pub nu: f64,
    pub rho: f64,
    pub n: usize,
}

impl OsculationData {
    pub fn new(nu: f64, d: usize) -> Result<Self> {
        let shifted = nu - (d as f64 - 1.0) / 2.0;
        let n = shifted.ceil();
        if !(n >= 1.0) {
            return Err(LabError::Domain(format!("nu = {nu} too small: N = {n} < 1")));
        }
        let rho = n - shifted;
        Ok(Self { nu, rho, n: n as usize })
    }
}

/// C^∞ transition: 0 for t ≤ 0, 1 for t ≥ 1, built from e^{−1/t}.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Derivative of [`smoothstep`].
pub fn smoothstep_derivative(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        let da = a / (t * t);
        let db = b / ((1.0 - t) * (1.0 - t));
        (da * b + a * db) / ((a + b) * (a + b))
    }
}

/// Splitting function of the near/far decomposition: 1 when
/// |z−ζ| > |ζ|/N, 0 when |z−ζ| < |ζ|/(2N).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothCutoff {
    pub n: usize,
}

impl SmoothCutoff {
    pub fn new(n: usize) -> Self {
        Self { n: n.max(1) }
    }

    /// Value at relative distance ρ = |z−ζ|/|ζ|.
    pub fn value(&self, rel_dist: f64) -> f64 {
        let nf = self.n as f64;
        smoothstep((rel_dist - 0.5 / nf) * 2.0 * nf)
    }

    /// Sampled sup of |dχ/dρ| divided by N, the recorded constant C_1.
    pub fn derivative_constant(&self) -> f64 {
        let samples = 4000;
        let mut best: f64 = 0.0;
        for i in 0..=samples {
            best = best.max(smoothstep_derivative(i as f64 / samples as f64));
        }
        2.0 * best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_conditions() {
        let w = CarlemanWeight::default_weight();
        let c = w.c_bound();
        for i in 1..2000 {
            let s = i as f64 * 0.01;
            assert!(1.0 / c < w.dpsi(s) && w.dpsi(s) < c);
            assert!(w.ddpsi(s) >= w.c_delta() * (-0.5 * s).exp() * (1.0 - 1e-15));
            assert!(w.ddpsi(s) > 0.0);
        }
    }

    #[test]
    fn delta2_lower_bound_on_grid() {
        let w = CarlemanWeight::default_weight();
        let k = w.delta2_constant();
        for i in 0..200 {
            for j in 0..200 {
                let (s, t) = (i as f64 * 0.05, j as f64 * 0.05);
                let lhs = w.delta2(s, t);
                let rhs = k * (-0.5 * s).exp() * (t - s).powi(2).min(1.0);
                assert!(lhs >= rhs * (1.0 - 1e-12), "s={s} t={t}");
            }
        }
        assert_eq!(w.delta2(0.7, 0.7), 0.0);
    }

    #[test]
    fn osculation_decomposition() {
        for nu in [2.0, 4.0, 7.3, 16.0, 100.25] {
            let o = OsculationData::new(nu, 4).unwrap();
            assert!((0.0..1.0).contains(&o.rho));
            assert!((o.n as f64 + 1.5 - o.rho - nu).abs() < 1e-12);
        }
        assert!(OsculationData::new(1.0, 4).is_err());
    }

    #[test]
    fn psi_inverse_roundtrip() {
        let w = CarlemanWeight::default_weight();
        for x in [0.7, 1.0, 3.0, 10.0] {
            let s = w.psi_inverse(x).unwrap();
            assert!((w.psi(s) - x).abs() < 1e-12);
        }
        // min ψ = 2 − 2 ln 2 ≈ 0.614 at σ = −2 ln 2
        assert!(w.psi_inverse(0.5).is_err());
    }

    #[test]
    fn cutoff_support_and_smoothness() {
        let c = SmoothCutoff::new(8);
        assert_eq!(c.value(1.0 / 8.0 + 1e-12), 1.0);
        assert_eq!(c.value(1.0 / 16.0 - 1e-12), 0.0);
        for i in 0..=100 {
            let v = c.value(i as f64 / 800.0);
            assert!((0.0..=1.0).contains(&v));
        }
        let h = 1e-6;
        for t in [0.2, 0.5, 0.8] {
            let fd = (smoothstep(t + h) - smoothstep(t - h)) / (2.0 * h);
            assert!((fd - smoothstep_derivative(t)).abs() < 1e-7);
        }
        assert!(c.derivative_constant().is_finite());
    }
}
