//! Exponential tilting of atomic measures on the line, half-mass
//! intervals, and the greedy disjoint-interval selection
//! (k_j ∈ [N, 2N], μ_{k_j}(I_j) ≥ ½‖μ_{k_j}‖).
//!
//! Tilted weights are kept as logarithms k x_i + ln w_i; every mass
//! comparison is done relative to the per-measure maximum.

use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{LabError, Result};
use crate::geometry::LogInterval;
use crate::kernels::carleman::CarlemanWeight;
use crate::quadrature::neumaier_sum;

/// Finite positive combination of point masses, sorted by position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    /// (x_i, ln w_i), sorted by x_i.
    atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    /// Atoms as (position, weight); weights must be positive.
    pub fn new(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(LabError::Domain("measure has no atoms".into()));
        }
        let mut out = Vec::with_capacity(atoms.len());
        for &(x, w) in atoms {
            if !x.is_finite() || !(w > 0.0) || !w.is_finite() {
                return Err(LabError::Domain(format!("invalid atom ({x}, {w})")));
            }
            out.push((x, w.ln()));
        }
        Ok(Self::from_log(out))
    }

    /// Atoms as (position, ln weight).
    pub fn from_log_weights(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() || atoms.iter().any(|(x, l)| !x.is_finite() || !l.is_finite()) {
            return Err(LabError::Domain("invalid log-weight atoms".into()));
        }
        Ok(Self::from_log(atoms.to_vec()))
    }

    fn from_log(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { atoms }
    }

    /// Reads (x, w) rows from CSV with a header line.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(reader);
        let mut atoms = Vec::new();
        for rec in rd.deserialize::<(f64, f64)>() {
            atoms.push(rec.map_err(|e| LabError::Config(format!("measure CSV: {e}")))?);
        }
        Self::new(&atoms)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.0)
    }

    pub fn log_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.1)
    }

    /// max |x_i|.
    pub fn span(&self) -> f64 {
        self.atoms.iter().map(|a| a.0.abs()).fold(0.0, f64::max)
    }

    pub fn ln_total_mass(&self) -> f64 {
        log_sum_exp(self.atoms.iter().map(|a| a.1))
    }

    /// (T, (1/T) ln μ{|x| > T}) for each T; −∞ when the tail is empty.
    pub fn decay_diagnostic(&self, ts: &[f64]) -> DecayDiagnostic {
        let rows: Vec<(f64, f64)> = ts
            .iter()
            .map(|&t| (t, log_sum_exp(self.atoms.iter().filter(|a| a.0.abs() > t).map(|a| a.1)) / t))
            .collect();
        let finite: Vec<f64> = rows.iter().map(|r| r.1).filter(|v| v.is_finite()).collect();
        let decreasing = rows.windows(2).all(|w| w[1].1 < w[0].1 || w[1].1 == f64::NEG_INFINITY);
        let fast = match (finite.first(), finite.last()) {
            (Some(&a), Some(&b)) if finite.len() == rows.len() => decreasing && b <= 2.0 * a,
            _ => decreasing,
        };
        DecayDiagnostic { rows, faster_than_exponential: fast }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayDiagnostic {
    pub rows: Vec<(f64, f64)>,
    /// The functional keeps decreasing and at least doubles in magnitude
    /// over the sampled range (or the tail empties).
    pub faster_than_exponential: bool,
}

fn log_sum_exp(it: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = it.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + neumaier_sum(v.iter().map(|x| (x - m).exp())).ln()
}

/// dμ_k = e^{kx} dμ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiltedMeasure {
    pub base: DiscreteMeasure,
    pub k: f64,
    /// max_i (k x_i + ln w_i).
    pub offset: f64,
}

pub fn tilt(mu: &DiscreteMeasure, k: f64) -> TiltedMeasure {
    let offset = mu.atoms.iter().map(|a| k * a.0 + a.1).fold(f64::NEG_INFINITY, f64::max);
    TiltedMeasure { base: mu.clone(), k, offset }
}

impl TiltedMeasure {
    /// tilt(tilt(μ, k₁), k₂) = tilt(μ, k₁ + k₂).
    pub fn tilt(&self, k: f64) -> TiltedMeasure {
        tilt(&self.base, self.k + k)
    }

    /// Weights e^{k x_i + ln w_i − offset}, each in (0, 1].
    pub fn relative_weights(&self) -> Vec<f64> {
        self.base.atoms.iter().map(|a| (self.k * a.0 + a.1 - self.offset).exp()).collect()
    }

    pub fn ln_total_mass(&self) -> f64 {
        self.offset + neumaier_sum(self.relative_weights()).ln()
    }

    /// ln μ_k(I) for a closed interval.
    pub fn ln_mass(&self, iv: &LogInterval) -> f64 {
        log_sum_exp(self.base.atoms.iter().filter(|a| iv.contains(a.0)).map(|a| self.k * a.0 + a.1))
    }

    /// μ_k(I)/‖μ_k‖.
    pub fn mass_fraction(&self, iv: &LogInterval) -> f64 {
        (self.ln_mass(iv) - self.ln_total_mass()).exp()
    }

    /// μ_k(I) ≥ ½‖μ_k‖, decided by comparing the inside and outside sums.
    pub fn holds_half_mass(&self, iv: &LogInterval) -> bool {
        let rel = self.relative_weights();
        let inside = neumaier_sum(self.base.atoms.iter().zip(&rel).filter(|(a, _)| iv.contains(a.0)).map(|(_, w)| *w));
        let outside = neumaier_sum(self.base.atoms.iter().zip(&rel).filter(|(a, _)| !iv.contains(a.0)).map(|(_, w)| *w));
        inside >= outside
    }
}

/// Shortest atom-delimited interval carrying at least half the tilted
/// mass; ties go to the leftmost.
pub fn half_mass_interval(mk: &TiltedMeasure) -> LogInterval {
    let atoms = &mk.base.atoms;
    let w = mk.relative_weights();
    // compensated prefix sums
    let mut prefix = Vec::with_capacity(w.len() + 1);
    prefix.push(0.0);
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &x in &w {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
        prefix.push(s + c);
    }
    let total = prefix[w.len()];
    let mass = |i: usize, j: usize| prefix[j + 1] - prefix[i];
    let mut best: Option<(f64, usize, usize)> = None;
    let mut j = 0;
    for i in 0..atoms.len() {
        if j < i {
            j = i;
        }
        while j < atoms.len() && 2.0 * mass(i, j) < total {
            j += 1;
        }
        if j == atoms.len() {
            break;
        }
        let len = atoms[j].0 - atoms[i].0;
        if best.map_or(true, |b| len < b.0) {
            best = Some((len, i, j));
        }
    }
    let (_, i, j) = best.unwrap_or((0.0, 0, atoms.len() - 1));
    LogInterval { lo: atoms[i].0, hi: atoms[j].0 }
}

/// Exhaustive minimum over all atom-delimited intervals; the oracle for
/// [`half_mass_interval`].
pub fn half_mass_interval_exhaustive(mk: &TiltedMeasure) -> LogInterval {
    let atoms = &mk.base.atoms;
    let mut best: Option<(f64, LogInterval)> = None;
    for i in 0..atoms.len() {
        for j in i..atoms.len() {
            let iv = LogInterval { lo: atoms[i].0, hi: atoms[j].0 };
            if mk.holds_half_mass(&iv) && best.map_or(true, |b| iv.length() < b.0) {
                best = Some((iv.length(), iv));
            }
        }
    }
    best.expect("the full hull carries all mass").1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedInterval {
    pub interval: LogInterval,
    pub k: f64,
    /// μ_k(I)/‖μ_k‖, recomputed after selection.
    pub mass_fraction: f64,
    pub half_mass_verified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalSelection {
    pub n: f64,
    pub intervals: Vec<SelectedInterval>,
    pub k_step: f64,
    pub k_grid_size: usize,
    /// Σ|I_j|⁻¹ / N.
    pub empirical_c: f64,
    pub pairwise_disjoint: bool,
    pub all_verified: bool,
}

impl IntervalSelection {
    pub fn reciprocal_length_sum(&self) -> f64 {
        self.intervals.iter().map(|s| 1.0 / s.interval.length()).sum()
    }
}

/// Greedy selection over the k-grid N, N + Δk, …, 2N with Δk = 1/(2 span).
pub fn select_intervals(mu: &DiscreteMeasure, n: f64) -> Result<IntervalSelection> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(LabError::Domain(format!("N must be positive, got {n}")));
    }
    let span = mu.span();
    let k_step = if span > 0.0 { (0.5 / span).min(n) } else { n };
    let steps = (n / k_step).ceil() as usize;
    let ks: Vec<f64> = (0..=steps).map(|i| (n + i as f64 * k_step).min(2.0 * n)).collect();
    let min_len = 1.0 / n;
    let candidates: Vec<(f64, LogInterval)> = ks
        .par_iter()
        .map(|&k| {
            let iv = half_mass_interval(&tilt(mu, k));
            let iv = if iv.length() < min_len {
                let m = iv.midpoint();
                LogInterval { lo: m - 0.5 * min_len, hi: m + 0.5 * min_len }
            } else {
                iv
            };
            (k, iv)
        })
        .collect();
    let mut accepted: Vec<(f64, LogInterval)> = Vec::new();
    for (k, iv) in candidates {
        if accepted.iter().all(|(_, a)| a.disjoint(&iv)) {
            accepted.push((k, iv));
        }
    }
    if accepted.is_empty() {
        return Err(LabError::Domain("empty interval selection".into()));
    }
    let intervals: Vec<SelectedInterval> = accepted
        .into_iter()
        .map(|(k, interval)| {
            let mk = tilt(mu, k);
            SelectedInterval { interval, k, mass_fraction: mk.mass_fraction(&interval), half_mass_verified: mk.holds_half_mass(&interval) }
        })
        .collect();
    let pairwise_disjoint =
        intervals.iter().enumerate().all(|(i, a)| intervals[i + 1..].iter().all(|b| a.interval.disjoint(&b.interval)));
    let all_verified = intervals.iter().all(|s| s.half_mass_verified && s.k >= n && s.k <= 2.0 * n);
    let mut sel = IntervalSelection { n, intervals, k_step, k_grid_size: ks.len(), empirical_c: 0.0, pairwise_disjoint, all_verified };
    sel.empirical_c = sel.reciprocal_length_sum() / n;
    Ok(sel)
}

/// One cell of a radial field sample: σ = log 1/|z|, the value V|f| and the
/// cell volume.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldCell {
    pub sigma: f64,
    pub v_abs_f: f64,
    pub volume: f64,
}

/// μ(γ) = ∫_{A(ψ⁻¹γ)} (V|f|)^p: an atom at ψ(σ) per cell carrying its share.
pub fn sucp_measure(cells: &[FieldCell], w: &CarlemanWeight, p: f64) -> Result<DiscreteMeasure> {
    let atoms: Vec<(f64, f64)> = cells
        .iter()
        .filter(|c| c.v_abs_f > 0.0 && c.volume > 0.0)
        .map(|c| (w.psi(c.sigma), p * c.v_abs_f.ln() + c.volume.ln()))
        .collect();
    if atoms.is_empty() {
        return Err(LabError::Domain("field has zero total mass".into()));
    }
    DiscreteMeasure::from_log_weights(&atoms)
}

/// ln ∫_{A(ψ⁻¹γ)} (e^{νψ(σ)} V|f|)^p summed cell by cell.
pub fn ln_weighted_field_mass(cells: &[FieldCell], w: &CarlemanWeight, p: f64, nu: f64, gamma: &LogInterval) -> f64 {
    log_sum_exp(
        cells
            .iter()
            .filter(|c| c.v_abs_f > 0.0 && c.volume > 0.0 && gamma.contains(w.psi(c.sigma)))
            .map(|c| p * (nu * w.psi(c.sigma) + c.v_abs_f.ln()) + c.volume.ln()),
    )
}

/// Test-measure families.
pub fn point_mass(x: f64) -> DiscreteMeasure {
    DiscreteMeasure::from_log(vec![(x, 0.0)])
}

/// Two clusters of 20 atoms at ±`separation`/2 with masses (share, 1 − share).
pub fn two_cluster(separation: f64, share: f64) -> DiscreteMeasure {
    let mut atoms = Vec::new();
    for i in 0..20 {
        let off = 0.01 * (i as f64 - 9.5);
        atoms.push((-0.5 * separation + off, (share / 20.0).ln()));
        atoms.push((0.5 * separation + off, ((1.0 - share) / 20.0).ln()));
    }
    DiscreteMeasure::from_log(atoms)
}

/// e^{−x²} dx discretized by the midpoint rule with `cells` cells on [−L, L].
pub fn discretized_gaussian(half_width: f64, cells: usize) -> DiscreteMeasure {
    let h = 2.0 * half_width / cells as f64;
    DiscreteMeasure::from_log(
        (0..cells)
            .map(|i| {
                let x = -half_width + h * (i as f64 + 0.5);
                (x, -x * x + h.ln())
            })
            .collect(),
    )
}

/// e^{−|x|} dx discretized the same way; tails decay only exponentially.
pub fn discretized_laplace(half_width: f64, cells: usize) -> DiscreteMeasure {
    let h = 2.0 * half_width / cells as f64;
    DiscreteMeasure::from_log(
        (0..cells)
            .map(|i| {
                let x = -half_width + h * (i as f64 + 0.5);
                (x, -x.abs() + h.ln())
            })
            .collect(),
    )
}

/// (1/T) ln(√π erfc T), the continuum value of the Gaussian functional.
pub fn gaussian_decay_functional(t: f64) -> f64 {
    (std::f64::consts::PI.sqrt() * erfc(t)).ln() / t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tilt_basics() {
        let mu = DiscreteMeasure::new(&[(-1.0, 1.0), (1.0, 1.0)]).unwrap();
        let t = tilt(&mu, 5.0);
        let f = t.mass_fraction(&LogInterval { lo: 0.5, hi: 1.5 });
        let exact = 5f64.exp() / (5f64.exp() + (-5f64).exp());
        assert!((f - exact).abs() < 1e-15);
        let t0 = tilt(&mu, 0.0);
        assert_eq!(t0.relative_weights(), vec![1.0, 1.0]);
        let one = tilt(&point_mass(3.0), 40.0);
        assert_eq!(one.relative_weights(), vec![1.0]);
    }

    #[test]
    fn tilt_is_a_semigroup() {
        let mu = discretized_gaussian(20.0, 400);
        let a = tilt(&mu, 7.0).tilt(11.0);
        let b = tilt(&mu, 18.0);
        assert_eq!(a.relative_weights(), b.relative_weights());
        assert_eq!(a.offset, b.offset);
    }

    #[test]
    fn large_tilts_stay_finite() {
        let mu = discretized_gaussian(20.0, 400);
        let t = tilt(&mu, 2000.0);
        assert!(t.ln_total_mass().is_finite());
        assert!(t.relative_weights().iter().all(|w| w.is_finite()));
    }

    #[test]
    fn half_mass_examples() {
        let single = tilt(&point_mass(2.0), 3.0);
        assert_eq!(half_mass_interval(&single), LogInterval { lo: 2.0, hi: 2.0 });
        let uniform: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, 1.0)).collect();
        let u = tilt(&DiscreteMeasure::new(&uniform).unwrap(), 0.0);
        assert_eq!(half_mass_interval(&u), LogInterval { lo: 1.0, hi: 5.0 });
        let c = tilt(&two_cluster(10.0, 0.6), 0.0);
        let iv = half_mass_interval(&c);
        assert!(iv.hi < 0.0 && iv.length() < 0.2, "{iv:?}");
    }

    #[test]
    fn decay_diagnostics() {
        let compact = point_mass(1.0).decay_diagnostic(&[2.0, 3.0]);
        assert!(compact.rows.iter().all(|r| r.1 == f64::NEG_INFINITY));
        let g = discretized_gaussian(20.0, 40_000);
        let ts: Vec<f64> = (5..=15).map(|t| t as f64).collect();
        let d = g.decay_diagnostic(&ts);
        for &(t, v) in &d.rows {
            assert!((v - gaussian_decay_functional(t)).abs() < 0.02, "T={t} {v}");
        }
        assert!(d.faster_than_exponential);
        let l = discretized_laplace(40.0, 40_000).decay_diagnostic(&ts);
        assert!(!l.faster_than_exponential);
        // (1/T) ln(2e^{−T}) → −1
        assert!(l.rows.iter().all(|&(t, v)| (v - (-1.0 + 2f64.ln() / t)).abs() < 0.01));
    }

    #[test]
    fn selection_examples() {
        let s = select_intervals(&point_mass(0.0), 10.0).unwrap();
        assert_eq!(s.intervals.len(), 1);
        assert!((s.empirical_c - 1.0).abs() < 1e-12);
        let two = DiscreteMeasure::new(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let s = select_intervals(&two, 10.0).unwrap();
        assert_eq!(s.intervals.len(), 1);
        assert!(s.intervals[0].interval.contains(1.0));
        assert!((s.empirical_c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sucp_measure_tilt_identity() {
        let w = CarlemanWeight::default_weight();
        let cells: Vec<FieldCell> = (0..500)
            .map(|i| {
                let sigma = 0.05 + 0.01 * i as f64;
                FieldCell { sigma, v_abs_f: (-(sigma - 2.0).powi(2)).exp(), volume: (-4.0 * sigma).exp() * 0.01 }
            })
            .collect();
        let p = 62.0 / 32.0;
        let mu = sucp_measure(&cells, &w, p).unwrap();
        let gamma = LogInterval { lo: 1.5, hi: 3.0 };
        for k in [0.0, 10.0, 100.0] {
            let a = tilt(&mu, k).ln_mass(&gamma);
            let b = ln_weighted_field_mass(&cells, &w, p, k / p, &gamma);
            assert!(((a - b) / b).abs() < 1e-10 || (a - b).abs() < 1e-10, "k={k}");
        }
        let zero = vec![FieldCell { sigma: 1.0, v_abs_f: 0.0, volume: 1.0 }];
        assert!(sucp_measure(&zero, &w, p).is_err());
    }
}
