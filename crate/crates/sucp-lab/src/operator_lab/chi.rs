//! Angular cutoffs χ_λ (band) and χ^λ (cap), assembly of χ·ψ·I^N on sphere
//! grids, and the exact p = 2 norm of the zonal operators via their
//! harmonic decomposition.
//!
//! With |z| = s, |ζ| = t and the closed form, the kernel on S³ × S³ is
//! K_j(ξ, η) = A(θ) conj(η_j) + B(θ) conj(ξ_j),
//! A = χ ψ r^{−N}(g − T^{N−1}g), B = −χ ψ r^{−(N−1)}(g − T^{N−2}g).
//! On the bidegree-(p, q) harmonics (k = p + q) the operator TT* acts by
//! (1 − q/(k+1)) |α_k + β_{k+1}|² + q/(k+1) |α_k + β_{k−1}|²,
//! where α_k, β_k are the Funk–Hecke multipliers of A and B:
//! α_k = 4π/(k+1) ∫_0^π A(θ) sin((k+1)θ) sin θ dθ.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{spectral_norm, DiscretizedOperator};
use crate::error::{LabError, Result};
use crate::geometry::SphereGrid;
use crate::kernels::carleman::{smoothstep, SmoothCutoff};
use crate::kernels::{g_tail, truncated_kernel};
use crate::quadrature::gauss_legendre;
use crate::verification::{fit_exponent, ExponentFit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChiKind {
    /// Dyadic bump in |sin θ|: rises on [λ/2, λ], falls on [λ, 2λ].
    Band,
    /// 1 for |sin θ| ≤ λ, 0 for |sin θ| ≥ 2λ.
    Cap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiCutoff {
    pub kind: ChiKind,
    pub lambda: f64,
}

impl ChiCutoff {
    pub fn new(kind: ChiKind, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(LabError::Domain(format!("cutoff scale must be positive, got {lambda}")));
        }
        Ok(Self { kind, lambda })
    }

    /// Value at x = |sin θ|.
    pub fn value_sin(&self, x: f64) -> f64 {
        let l = self.lambda;
        match self.kind {
            ChiKind::Band => smoothstep((x - 0.5 * l) / (0.5 * l)) * smoothstep((2.0 * l - x) / l),
            ChiKind::Cap => smoothstep((2.0 * l - x) / l),
        }
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.value_sin(theta.sin().abs())
    }

    /// Closed θ-intervals in [0, π] outside which χ vanishes.
    pub fn theta_support(&self) -> Vec<(f64, f64)> {
        let l = self.lambda;
        let hi = (2.0 * l).min(1.0).asin();
        match self.kind {
            ChiKind::Band => {
                let lo = (0.5 * l).min(1.0).asin();
                if lo >= hi {
                    return vec![];
                }
                if 2.0 * l >= 1.0 {
                    vec![(lo, PI - lo)]
                } else {
                    vec![(lo, hi), (PI - hi, PI - lo)]
                }
            }
            ChiKind::Cap => {
                if 2.0 * l >= 1.0 {
                    vec![(0.0, PI)]
                } else {
                    vec![(0.0, hi), (PI - hi, PI)]
                }
            }
        }
    }
}

/// Entries χ(ξ_i, η_j) ψ(sξ_i, tη_j) I_c^N(sξ_i, tη_j) on the given grids.
pub fn assemble_chi_kernel(
    n: usize,
    s: f64,
    t: f64,
    chi: &ChiCutoff,
    source: &SphereGrid,
    target: &SphereGrid,
) -> Result<DiscretizedOperator> {
    let mut op = assemble_cutoff_kernel(n, s, t, &|x| chi.value_sin(x), source, target)?;
    op.labels.insert("lambda".into(), chi.lambda);
    Ok(op)
}

/// As [`assemble_chi_kernel`] with an arbitrary angular cutoff given as a
/// function of |sin θ|.
pub fn assemble_cutoff_kernel(
    n: usize,
    s: f64,
    t: f64,
    chi: &(dyn Fn(f64) -> f64 + Sync),
    source: &SphereGrid,
    target: &SphereGrid,
) -> Result<DiscretizedOperator> {
    let cut = SmoothCutoff::new(n);
    let comps = 2;
    let rows: Vec<Vec<Complex64>> = target
        .nodes
        .par_iter()
        .map(|xi| -> Result<Vec<Complex64>> {
            let mut row = vec![Complex64::new(0.0, 0.0); source.len() * comps];
            let z: Vec<f64> = xi.iter().map(|c| c * s).collect();
            let zp = crate::geometry::ComplexPoint::from_real(&z)?;
            for (j, eta) in source.nodes.iter().enumerate() {
                let cos_t: f64 = xi.iter().zip(eta).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0);
                let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
                let c = chi(sin_t);
                if c == 0.0 {
                    continue;
                }
                let zeta: Vec<f64> = eta.iter().map(|v| v * t).collect();
                let dist = z.iter().zip(&zeta).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let w = cut.value(dist / t);
                if w == 0.0 {
                    continue;
                }
                let zq = crate::geometry::ComplexPoint::from_real(&zeta)?;
                let k = truncated_kernel(&zp, &zq, n).map_err(|e| match e {
                    LabError::Uncomputable(m) => LabError::Uncomputable(format!("{m} at target {xi:?}, source {eta:?}")),
                    other => other,
                })?;
                for (cidx, kc) in k.components.iter().enumerate() {
                    row[j * comps + cidx] = kc * (c * w);
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let matrix: Vec<Complex64> = rows.into_iter().flatten().collect();
    let mut op = DiscretizedOperator::new(matrix, target.weights.clone(), source.weights.clone(), comps)?;
    op.labels.insert("N".into(), n as f64);
    op.labels.insert("s".into(), s);
    op.labels.insert("t".into(), t);
    Ok(op)
}

/// Quadrature and truncation controls of the harmonic norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZonalResolution {
    /// Multiplier on the default panel count and harmonic cutoff.
    pub refinement: f64,
}

impl Default for ZonalResolution {
    fn default() -> Self {
        Self { refinement: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZonalNorm {
    pub norm: f64,
    /// Degree k of the maximizing harmonic block.
    pub k_star: usize,
    pub k_max: usize,
    pub nodes: usize,
}

/// A(θ), B(θ) of the zonal kernel at one angle.
pub fn zonal_profiles(n: usize, r: f64, theta: f64, chi: &ChiCutoff) -> Result<(f64, f64)> {
    let c = chi.value(theta);
    if c == 0.0 {
        return Ok((0.0, 0.0));
    }
    let rel = (r * r - 2.0 * r * theta.cos() + 1.0).max(0.0).sqrt();
    let w = SmoothCutoff::new(n).value(rel);
    if w == 0.0 {
        return Ok((0.0, 0.0));
    }
    let (t1, _) = g_tail(4, r, theta, n as i64, n, true)?;
    let (t2, _) = g_tail(4, r, theta, n as i64 - 1, n, true)?;
    Ok((c * w * t1, -c * w * t2))
}

/// Exact p = 2 norm of χ ψ I^N from S³ to S³ at radii (s, t), via the
/// harmonic decomposition described in the module header.
pub fn zonal_norm(n: usize, s: f64, t: f64, chi: &ChiCutoff, res: &ZonalResolution) -> Result<ZonalNorm> {
    let r = s / t;
    let support = chi.theta_support();
    let nf = n.max(1) as f64;
    let scale = match chi.kind {
        ChiKind::Band => 0.5 * chi.lambda,
        ChiKind::Cap => chi.lambda,
    }
    .min(1.0);
    let k_max = ((res.refinement * (8.0 / scale + 4.0 * nf)).ceil() as usize).max(16);
    let panel = (0.125 * scale).min(0.5 / nf).min(2.0 / k_max as f64) / res.refinement;
    let (gx, gw) = gauss_legendre(16);
    let mut nodes = Vec::new();
    for (a, b) in support {
        let panels = ((b - a) / panel).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + h * p as f64;
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
            }
        }
    }
    let prof: Vec<(f64, f64, f64, f64)> = nodes
        .par_iter()
        .map(|&(th, w)| -> Result<_> {
            let (a, b) = zonal_profiles(n, r, th, chi)?;
            Ok((th, w, a, b))
        })
        .collect::<Result<_>>()?;
    // α_k, β_k for k = 0..=k_max+1
    let kk = k_max + 2;
    // chunk partials are collected in order and summed sequentially so the
    // result does not depend on the thread count
    let partials: Vec<(Vec<f64>, Vec<f64>)> = prof
        .par_chunks(64)
        .map(|chunk| {
            let mut al = vec![0.0; kk];
            let mut be = vec![0.0; kk];
            for &(th, w, a, b) in chunk {
                if a == 0.0 && b == 0.0 {
                    continue;
                }
                let (st, ct) = th.sin_cos();
                let ca = w * a * st;
                let cb = w * b * st;
                // sin((k+1)θ) by the Chebyshev recurrence
                let mut s_prev = 0.0;
                let mut s_cur = st;
                for k in 0..kk {
                    al[k] += ca * s_cur;
                    be[k] += cb * s_cur;
                    let next = 2.0 * ct * s_cur - s_prev;
                    s_prev = s_cur;
                    s_cur = next;
                }
            }
            (al, be)
        })
        .collect();
    let mut alpha = vec![0.0; kk];
    let mut beta = vec![0.0; kk];
    for (al, be) in &partials {
        for k in 0..kk {
            alpha[k] += al[k];
            beta[k] += be[k];
        }
    }
    let fh = |v: &[f64], k: usize| 4.0 * PI / (k as f64 + 1.0) * v[k];
    let mut best = (0.0f64, 0usize);
    for k in 0..=k_max {
        let a = fh(&alpha, k) + fh(&beta, k + 1);
        let mut val = a * a;
        if k >= 1 {
            let b = fh(&alpha, k) + fh(&beta, k - 1);
            val = val.max((a * a + k as f64 * b * b) / (k as f64 + 1.0));
        }
        if val > best.0 {
            best = (val, k);
        }
    }
    Ok(ZonalNorm { norm: best.0.sqrt(), k_star: best.1, k_max, nodes: prof.len() })
}

/// Zonal norm with the refinement gate: doubling quadrature and the
/// harmonic cutoff must change the norm by less than 5%.
pub fn gated_zonal_norm(n: usize, s: f64, t: f64, chi: &ChiCutoff) -> Result<(ZonalNorm, f64)> {
    let base = zonal_norm(n, s, t, chi, &ZonalResolution::default())?;
    let fine = zonal_norm(n, s, t, chi, &ZonalResolution { refinement: 2.0 })?;
    let change = if fine.norm == 0.0 { 0.0 } else { (fine.norm - base.norm).abs() / fine.norm };
    Ok((fine, change))
}

/// One row of the band-norm table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormScalingRow {
    pub n: usize,
    pub lambda: f64,
    pub s_over_t: f64,
    pub norm: f64,
    /// norm · (|1 − s/t| + λ)
    pub ratio: f64,
    pub refinement_change: f64,
    pub k_star: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapRow {
    pub n: usize,
    pub lambda: f64,
    pub s_over_t: f64,
    pub norm: f64,
    /// norm / (λ^{d−1−μ(d−2)} (|1 − s/t| + λ^μ)^{−1})
    pub ratio_mu: f64,
    /// norm / (λ^{d−1−μ(d−2)} (|1 − s/t| + λ)^{−1})
    pub ratio_lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormScalingReport {
    pub rows: Vec<NormScalingRow>,
    pub sup_ratio: f64,
    pub inf_ratio: f64,
    /// sup/inf over the whole sweep; the uniformity criterion is ≤ 10.
    pub spread: f64,
    /// The same spread restricted to λ ≥ 1/N.
    pub spread_lambda_ge_inv_n: f64,
    /// The spread over operators with nonzero norm.
    pub spread_nonzero: f64,
    pub zero_operators: usize,
    pub refinement_gate_passed: bool,
    /// Per N, fitted λ-slope of norm·(|1−s/t|+λ) at s/t = 0.6.
    pub lambda_slopes: BTreeMap<usize, ExponentFit>,
    /// Per N, fitted λ-slope of the norm at s/t = 1 (prediction −1).
    pub diagonal_slopes: BTreeMap<usize, ExponentFit>,
    pub cap_rows: Vec<CapRow>,
    pub cap_spread_mu: f64,
    pub cap_spread_lambda: f64,
    /// Normalization with the smaller cap spread: "lambda^mu" or "lambda".
    pub cap_better_normalization: String,
    pub pass: bool,
}

/// Dyadic λ = 2^j/(100N) up to 1/4.
pub fn dyadic_lambdas(n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut l = 1.0 / (100.0 * n as f64);
    while l <= 0.25 * (1.0 + 1e-12) {
        out.push(l);
        l *= 2.0;
    }
    out
}

/// Cap-kernel exponent μ with 1 < μ < d/(d−1).
pub const CAP_MU: f64 = 1.25;

fn spread_of(vals: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = vals.collect();
    let sup = v.iter().cloned().fold(0.0, f64::max);
    let inf = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if inf > 0.0 {
        sup / inf
    } else {
        f64::INFINITY
    }
}

/// Band-operator norms over N × λ × s/t at t = 1 and p = 2, with the cap
/// table at μ = 1.25.
pub fn norm_scaling_experiment(n_values: &[usize], s_over_t: &[f64]) -> Result<NormScalingReport> {
    let mut plan = Vec::new();
    for &n in n_values {
        for l in dyadic_lambdas(n) {
            for &q in s_over_t {
                plan.push((n, l, q));
            }
        }
    }
    let rows: Vec<NormScalingRow> = plan
        .iter()
        .map(|&(n, lambda, q)| -> Result<_> {
            let chi = ChiCutoff::new(ChiKind::Band, lambda)?;
            let (zn, change) = gated_zonal_norm(n, q, 1.0, &chi)?;
            Ok(NormScalingRow {
                n,
                lambda,
                s_over_t: q,
                norm: zn.norm,
                ratio: zn.norm * ((1.0 - q).abs() + lambda),
                refinement_change: change,
                k_star: zn.k_star,
            })
        })
        .collect::<Result<_>>()?;
    let sup_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let inf_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let spread = if inf_ratio > 0.0 { sup_ratio / inf_ratio } else { f64::INFINITY };
    let spread_lambda_ge_inv_n = spread_of(rows.iter().filter(|r| r.lambda * r.n as f64 >= 1.0).map(|r| r.ratio));
    let spread_nonzero = spread_of(rows.iter().filter(|r| r.norm > 0.0).map(|r| r.ratio));
    let zero_operators = rows.iter().filter(|r| r.norm == 0.0).count();
    let refinement_gate_passed = rows.iter().all(|r| r.refinement_change < 0.05);
    let mut lambda_slopes = BTreeMap::new();
    let mut diagonal_slopes = BTreeMap::new();
    for &n in n_values {
        let pick = |q: f64, f: &dyn Fn(&NormScalingRow) -> f64| -> Vec<(f64, f64)> {
            rows.iter()
                .filter(|r| r.n == n && r.s_over_t == q && r.norm > 0.0)
                .map(|r| (r.lambda, f(r)))
                .collect()
        };
        if let Ok(fit) = fit_exponent(&pick(0.6, &|r| r.ratio)) {
            lambda_slopes.insert(n, fit);
        }
        if let Ok(fit) = fit_exponent(&pick(1.0, &|r| r.norm)) {
            diagonal_slopes.insert(n, fit);
        }
    }
    // cap table: λ ≈ N^{−1/(1+μ)} times 2^j, inside the admissible window
    let mut cap_plan = Vec::new();
    for &n in n_values {
        let center = (n as f64).powf(-1.0 / (1.0 + CAP_MU));
        for j in -2..=1 {
            let l = center * 2f64.powi(j);
            if l <= 0.5 {
                for &q in s_over_t {
                    cap_plan.push((n, l, q));
                }
            }
        }
    }
    let d = 4.0;
    let cap_rows: Vec<CapRow> = cap_plan
        .iter()
        .map(|&(n, lambda, q)| -> Result<_> {
            let chi = ChiCutoff::new(ChiKind::Cap, lambda)?;
            let zn = zonal_norm(n, q, 1.0, &chi, &ZonalResolution::default())?;
            let pre = lambda.powf(d - 1.0 - CAP_MU * (d - 2.0));
            Ok(CapRow {
                n,
                lambda,
                s_over_t: q,
                norm: zn.norm,
                ratio_mu: zn.norm / (pre / ((1.0 - q).abs() + lambda.powf(CAP_MU))),
                ratio_lambda: zn.norm / (pre / ((1.0 - q).abs() + lambda)),
            })
        })
        .collect::<Result<_>>()?;
    let cap_spread_mu = spread_of(cap_rows.iter().map(|r| r.ratio_mu));
    let cap_spread_lambda = spread_of(cap_rows.iter().map(|r| r.ratio_lambda));
    let cap_better_normalization = if cap_spread_mu <= cap_spread_lambda { "lambda^mu" } else { "lambda" }.to_string();
    let pass = spread <= 10.0 && refinement_gate_passed;
    Ok(NormScalingReport {
        rows,
        sup_ratio,
        inf_ratio,
        spread,
        spread_lambda_ge_inv_n,
        spread_nonzero,
        zero_operators,
        refinement_gate_passed,
        lambda_slopes,
        diagonal_slopes,
        cap_rows,
        cap_spread_mu,
        cap_spread_lambda,
        cap_better_normalization,
        pass,
    })
}

/// Brute-force p = 2 norm on a sphere grid, for validating [`zonal_norm`].
pub fn brute_force_norm(n: usize, s: f64, t: f64, chi: &ChiCutoff, grid: &SphereGrid) -> Result<f64> {
    spectral_norm(&assemble_chi_kernel(n, s, t, chi, grid, grid)?)
}
