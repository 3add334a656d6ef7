//! Executable sweeps for the kernel inequalities: empirical constants,
//! log-log exponent fits and pass/fail reports.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::ComplexPoint;
use crate::kernels::{bm_kernel, residue_amplitude, taylor_kernel, truncated_kernel};

/// Least-squares fit of log y against log x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

pub fn fit_exponent(samples: &[(f64, f64)]) -> Result<ExponentFit> {
    if samples.len() < 3 {
        return Err(LabError::Domain(format!("fit needs >= 3 samples, got {}", samples.len())));
    }
    if samples.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(LabError::Domain("fit needs positive data".into()));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::Domain("fit needs at least two distinct x values".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(ExponentFit { slope, intercept, stderr })
}

/// A fitted exponent checked against an expected value or ceiling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentCheck {
    pub name: String,
    pub fit: ExponentFit,
    pub expected: f64,
    pub tolerance: f64,
    /// When true the check is slope ≤ expected + tolerance.
    pub upper_only: bool,
    pub within: bool,
}

impl ExponentCheck {
    pub fn new(name: &str, fit: ExponentFit, expected: f64, tolerance: f64, upper_only: bool) -> Self {
        let within = if upper_only {
            fit.slope <= expected + tolerance
        } else {
            (fit.slope - expected).abs() <= tolerance
        };
        Self { name: name.into(), fit, expected, tolerance, upper_only, within }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound: String,
    pub sweep: String,
    /// sup of actual/majorant (inf of the ratio for lower bounds).
    pub empirical_constant: f64,
    pub worst_input: Vec<f64>,
    pub exponents: Vec<ExponentCheck>,
    /// Named sub-constants, e.g. per region.
    pub details: BTreeMap<String, f64>,
    pub samples: usize,
    pub excluded: usize,
    pub inconclusive: bool,
    pub pass: bool,
}

impl BoundReport {
    fn finish(mut self, extra_ok: bool) -> Self {
        self.pass = self.empirical_constant.is_finite() && self.exponents.iter().all(|e| e.within) && extra_ok;
        self
    }
}

/// Sampling plan for the kernel sweeps (d = 4, |ζ| = 1 after scaling).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub n_values: Vec<usize>,
    pub r_range: (f64, f64),
    pub samples_per_n: usize,
    pub seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { n_values: vec![4, 8, 16, 32], r_range: (0.2, 2.0), samples_per_n: 400, seed: 7 }
    }
}

/// Unit ζ ∈ R^4 and a unit vector orthogonal to it, from `rng`.
pub fn random_frame<R: Rng>(rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    loop {
        let a: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na < 0.1 {
            continue;
        }
        let e: Vec<f64> = a.iter().map(|x| x / na).collect();
        let dot: f64 = b.iter().zip(&e).map(|(x, y)| x * y).sum();
        let v: Vec<f64> = b.iter().zip(&e).map(|(x, y)| x - dot * y).collect();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv < 0.1 {
            continue;
        }
        return (e, v.iter().map(|x| x / nv).collect());
    }
}

/// (z, ζ) with |ζ| = t, |z| = r t and angle θ, in the plane of a frame.
pub fn pair_from_polar(frame: &(Vec<f64>, Vec<f64>), r: f64, theta: f64, t: f64) -> (ComplexPoint, ComplexPoint) {
    let (e, v) = frame;
    let z: Vec<f64> = e.iter().zip(v).map(|(a, b)| t * r * (theta.cos() * a + theta.sin() * b)).collect();
    let zeta: Vec<f64> = e.iter().map(|a| t * a).collect();
    (ComplexPoint::from_real(&z).expect("n = 2"), ComplexPoint::from_real(&zeta).expect("n = 2"))
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// |a − e^{iθ}| / (|a − 1| + |sin θ|).
pub fn triangle_ratio(a: f64, theta: f64) -> Option<f64> {
    let den = (a - 1.0).abs() + theta.sin().abs();
    if den == 0.0 {
        return None;
    }
    let num = Complex64::new(a - theta.cos(), -theta.sin()).norm();
    Some(num / den)
}

/// Frozen infimum of the triangle ratio over a ∈ [0, 3], θ ∈ [0, 2π]
/// from a fine-grid oracle.
pub const TRIANGLE_INFIMUM: f64 = 0.5;

/// Lower bound |a − e^{iθ}| ≥ c₀(|a − 1| + |sin θ|) on an (a, θ) grid.
/// Points with zero denominator are excluded and counted.
pub fn check_triangle_bound(a_range: (f64, f64), a_count: usize, theta_count: usize, floor: f64) -> BoundReport {
    let rows: Vec<(f64, f64, f64, usize)> = (0..a_count)
        .into_par_iter()
        .map(|i| {
            let a = a_range.0 + (a_range.1 - a_range.0) * i as f64 / (a_count - 1) as f64;
            let mut best = (f64::INFINITY, 0.0);
            let mut excluded = 0;
            for k in 0..theta_count {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / (theta_count - 1) as f64;
                match triangle_ratio(a, theta) {
                    Some(q) if q < best.0 => best = (q, theta),
                    Some(_) => {}
                    None => excluded += 1,
                }
            }
            (best.0, a, best.1, excluded)
        })
        .collect();
    let mut inf = (f64::INFINITY, 0.0, 0.0);
    let mut excluded = 0;
    for (q, a, th, ex) in rows {
        excluded += ex;
        if q < inf.0 {
            inf = (q, a, th);
        }
    }
    let mut details = BTreeMap::new();
    details.insert("floor".into(), floor);
    BoundReport {
        bound: "triangle".into(),
        sweep: format!("a in [{}, {}] x {a_count}, theta in [0, 2pi] x {theta_count}", a_range.0, a_range.1),
        empirical_constant: inf.0,
        worst_input: vec![inf.1, inf.2],
        exponents: vec![],
        details,
        samples: a_count * theta_count,
        excluded,
        inconclusive: false,
        pass: false,
    }
    .finish(inf.0 >= floor)
}

/// Near-diagonal sweep: |I^N − |ζ|^{d−1}(|ζ|/|z|)^N B| / N^{d−1} for
/// |z − ζ| < |ζ|/(2N). The difference equals the scaled Taylor part, which
/// is evaluated directly so that no cancellation against B occurs.
pub fn check_near_bound(sweep: &SweepSpec) -> Result<BoundReport> {
    let d = 4usize;
    let mut rng = ChaCha8Rng::seed_from_u64(sweep.seed);
    let mut plan = Vec::new();
    for &n in &sweep.n_values {
        for _ in 0..sweep.samples_per_n {
            let frame = random_frame(&mut rng);
            let rho = rng.gen_range(0.02..0.999) * 0.5 / n as f64;
            let phi = rng.gen_range(0.0..std::f64::consts::PI);
            // z = ζ + ρ(cos φ e + sin φ v)
            let x = 1.0 + rho * phi.cos();
            let y = rho * phi.sin();
            plan.push((n, frame, x.hypot(y), y.atan2(x)));
        }
    }
    let vals: Vec<(usize, f64, f64, f64, f64)> = plan
        .par_iter()
        .map(|(n, frame, r, theta)| -> Result<_> {
            let (z, zeta) = pair_from_polar(frame, *r, *theta, 1.0);
            let p = taylor_kernel(&z, &zeta, *n)?;
            let diff = vec_norm(&p.components) * r.powi(-(*n as i32));
            let b = vec_norm(&bm_kernel(&z, &zeta)?.components);
            Ok((*n, *r, *theta, diff / (*n as f64).powi(d as i32 - 1), b))
        })
        .collect::<Result<_>>()?;
    let mut sup = (0.0f64, vec![]);
    let mut per_n: BTreeMap<usize, f64> = BTreeMap::new();
    let mut bm_sup: f64 = 0.0;
    for (n, r, th, q, b) in &vals {
        if *q > sup.0 {
            sup = (*q, vec![*n as f64, *r, *th]);
        }
        let e = per_n.entry(*n).or_insert(0.0);
        *e = e.max(q * (*n as f64).powi(d as i32 - 1));
        bm_sup = bm_sup.max(*b);
    }
    let fit = fit_exponent(&per_n.iter().map(|(n, v)| (*n as f64, *v)).collect::<Vec<_>>())?;
    let mut details = BTreeMap::new();
    details.insert("sup_bm_norm".into(), bm_sup);
    for (n, v) in &per_n {
        details.insert(format!("sup_difference_n{n}"), *v);
    }
    // scaling reduction: the difference is homogeneous of degree 0
    let mut srng = ChaCha8Rng::seed_from_u64(sweep.seed ^ 0xabc);
    let frame = random_frame(&mut srng);
    let n0 = sweep.n_values[0];
    let diff_at = |t: f64| -> Result<f64> {
        let (z, zeta) = pair_from_polar(&frame, 1.0 + 0.2 / n0 as f64, 0.1 / n0 as f64, t);
        let p = taylor_kernel(&z, &zeta, n0)?;
        Ok(vec_norm(&p.components) * t.powi(d as i32 - 1) * (1.0 + 0.2 / n0 as f64).powi(-(n0 as i32)))
    };
    details.insert("scaling_ratio_lambda_2_5".into(), diff_at(2.5)? / diff_at(1.0)?);
    Ok(BoundReport {
        bound: "near".into(),
        sweep: format!("{sweep:?}"),
        empirical_constant: sup.0,
        worst_input: sup.1,
        exponents: vec![ExponentCheck::new("N", fit, (d - 1) as f64, 0.2, true)],
        details,
        samples: vals.len(),
        excluded: 0,
        inconclusive: false,
        pass: false,
    }
    .finish(true))
}

/// Which side of r = 1 a far sample lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FarRegion {
    Inside,
    Boundary,
    Outside,
}

/// Regions r < 1 − 1/N, |r − 1| ≤ 1/N, r > 1 + 1/N; they tile r > 0.
pub fn far_region(r: f64, n: usize) -> FarRegion {
    let h = 1.0 / n as f64;
    if r < 1.0 - h {
        FarRegion::Inside
    } else if r > 1.0 + h {
        FarRegion::Outside
    } else {
        FarRegion::Boundary
    }
}

/// N^{d−2} min{N, |1 − r|^{−1}}.
pub fn far_majorant(d: usize, n: usize, r: f64) -> f64 {
    let nf = n as f64;
    let m = if r == 1.0 { nf } else { nf.min(1.0 / (1.0 - r).abs()) };
    nf.powi(d as i32 - 2) * m
}

/// Far sweep: |I^N| / (N^{d−2} min{N, |1−r|^{−1}}) for |z − ζ| ≥ |ζ|/(2N),
/// with constants per region and an (r − 1)^{−1} fit along the axis
/// in the outside region.
pub fn check_far_bound(sweep: &SweepSpec) -> Result<BoundReport> {
    let d = 4usize;
    let mut rng = ChaCha8Rng::seed_from_u64(sweep.seed);
    let mut plan = Vec::new();
    for &n in &sweep.n_values {
        let mut k = 0;
        while k < sweep.samples_per_n {
            let frame = random_frame(&mut rng);
            let r = rng.gen_range(sweep.r_range.0..sweep.r_range.1);
            let theta = rng.gen_range(0.0..std::f64::consts::PI);
            if (r * r - 2.0 * r * theta.cos() + 1.0).sqrt() < 0.5 / n as f64 {
                continue;
            }
            plan.push((n, frame, r, theta));
            k += 1;
        }
    }
    let vals: Vec<(usize, f64, f64, f64)> = plan
        .par_iter()
        .map(|(n, frame, r, theta)| -> Result<_> {
            let (z, zeta) = pair_from_polar(frame, *r, *theta, 1.0);
            let i = truncated_kernel(&z, &zeta, *n)?;
            Ok((*n, *r, *theta, i.norm() / far_majorant(d, *n, *r)))
        })
        .collect::<Result<_>>()?;
    let mut details = BTreeMap::new();
    let mut sup = (0.0f64, vec![]);
    let mut counts: BTreeMap<FarRegion, usize> = BTreeMap::new();
    for (n, r, th, q) in &vals {
        let reg = far_region(*r, *n);
        *counts.entry(reg).or_insert(0) += 1;
        let key = format!("sup_{:?}", reg).to_lowercase();
        let e = details.entry(key).or_insert(0.0f64);
        *e = e.max(*q);
        if *q > sup.0 {
            sup = (*q, vec![*n as f64, *r, *th]);
        }
    }
    for (reg, c) in &counts {
        details.insert(format!("count_{:?}", reg).to_lowercase(), *c as f64);
    }
    let tiled = counts.values().sum::<usize>() == vals.len();
    // geometric-sum region: θ = 0, r − 1 from 8/N to 1
    let n = *sweep.n_values.last().expect("nonempty N list");
    let mut frng = ChaCha8Rng::seed_from_u64(sweep.seed ^ 0xf00);
    let frame = random_frame(&mut frng);
    let mut samples = Vec::new();
    for k in 0..12 {
        let x = (8.0 / n as f64) * (n as f64 / 8.0).powf(k as f64 / 11.0);
        let (z, zeta) = pair_from_polar(&frame, 1.0 + x, 0.0, 1.0);
        samples.push((x, truncated_kernel(&z, &zeta, n)?.norm()));
    }
    let fit = fit_exponent(&samples)?;
    Ok(BoundReport {
        bound: "far".into(),
        sweep: format!("{sweep:?}"),
        empirical_constant: sup.0,
        worst_input: sup.1,
        exponents: vec![ExponentCheck::new("r-1 (outside region, N fixed)", fit, -1.0, 0.2, false)],
        details,
        samples: vals.len(),
        excluded: 0,
        inconclusive: false,
        pass: false,
    }
    .finish(tiled))
}

/// N^{d/2−1} |sin θ|^{−d/2−k} (|sin θ| + |1 − r|)^{−1−i}.
pub fn amplitude_majorant(d: usize, n: usize, r: f64, theta: f64, i: u32, k: u32) -> f64 {
    let s = theta.sin().abs();
    (n as f64).powf(d as f64 / 2.0 - 1.0) * s.powf(-(d as f64) / 2.0 - k as f64) * (s + (1.0 - r).abs()).powi(-1 - i as i32)
}

fn amplitude_derivative(d: usize, r: f64, theta: f64, n: usize, i: u32, k: u32, h: f64) -> Result<Complex64> {
    let f = |r: f64, t: f64| residue_amplitude(d, r, t, n);
    Ok(match (i, k) {
        (0, 0) => f(r, theta)?,
        (1, 0) => (f(r + h, theta)? - f(r - h, theta)?) / (2.0 * h),
        (0, 1) => (f(r, theta + h)? - f(r, theta - h)?) / (2.0 * h),
        _ => {
            (f(r + h, theta + h)? - f(r + h, theta - h)? - f(r - h, theta + h)? + f(r - h, theta - h)?)
                / (4.0 * h * h)
        }
    })
}

/// Amplitude derivative bound over a sweep of (r, θ, N) with
/// |sin θ| ≥ 1/(2N), i, k ∈ {0, 1}. Derivatives by central differences with
/// h = 1e−4, validated by step halving.
pub fn check_amplitude_bound(sweep: &SweepSpec, i: u32, k: u32) -> Result<BoundReport> {
    if i > 1 || k > 1 {
        return Err(LabError::Domain("derivative orders are limited to 0 and 1".into()));
    }
    let d = 4usize;
    let h = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(sweep.seed);
    let mut plan = Vec::new();
    for &n in &sweep.n_values {
        let mut c = 0;
        while c < sweep.samples_per_n {
            let r = rng.gen_range(sweep.r_range.0..sweep.r_range.1);
            let theta = rng.gen_range(0.0..std::f64::consts::PI);
            if theta.sin().abs() < 0.5 / n as f64 + 2.0 * h {
                continue;
            }
            plan.push((n, r, theta));
            c += 1;
        }
    }
    let vals: Vec<(usize, f64, f64, f64, bool, f64)> = plan
        .par_iter()
        .map(|&(n, r, theta)| -> Result<_> {
            let v = amplitude_derivative(d, r, theta, n, i, k, h)?;
            let mut noisy = false;
            if i + k > 0 {
                let v2 = amplitude_derivative(d, r, theta, n, i, k, h / 2.0)?;
                noisy = (v - v2).norm() > 1e-3 * v.norm().max(1e-300);
            }
            Ok((n, r, theta, v.norm() / amplitude_majorant(d, n, r, theta, i, k), noisy, v.norm()))
        })
        .collect::<Result<_>>()?;
    let mut sup = (0.0f64, vec![]);
    let mut per_n: BTreeMap<usize, f64> = BTreeMap::new();
    let mut noisy = 0;
    for (n, r, th, q, nz, raw) in &vals {
        if *nz {
            noisy += 1;
        }
        if *q > sup.0 {
            sup = (*q, vec![*n as f64, *r, *th]);
        }
        let e = per_n.entry(*n).or_insert(0.0);
        *e = e.max(*q * (*n as f64).powf(d as f64 / 2.0 - 1.0)).max(0.0);
        let _ = raw;
    }
    let mut details = BTreeMap::new();
    details.insert("fd_step_halving_failures".into(), noisy as f64);
    let mut exponents = vec![];
    if per_n.len() >= 3 {
        let fit = fit_exponent(&per_n.iter().map(|(n, v)| (*n as f64, *v)).collect::<Vec<_>>())?;
        exponents.push(ExponentCheck::new("N", fit, d as f64 / 2.0 - 1.0, 0.2, true));
    }
    Ok(BoundReport {
        bound: format!("amplitude(i={i},k={k})"),
        sweep: format!("{sweep:?}"),
        empirical_constant: sup.0,
        worst_input: sup.1,
        exponents,
        details,
        samples: vals.len(),
        excluded: 0,
        inconclusive: noisy > 0,
        pass: false,
    }
    .finish(true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_examples() {
        let sq: Vec<_> = (1..8).map(|x| (x as f64, (x * x) as f64)).collect();
        assert!((fit_exponent(&sq).unwrap().slope - 2.0).abs() < 1e-12);
        let flat: Vec<_> = (1..8).map(|x| (x as f64, 5.0)).collect();
        assert!(fit_exponent(&flat).unwrap().slope.abs() < 1e-12);
        assert!(fit_exponent(&[(1.0, 1.0), (2.0, -1.0), (3.0, 1.0)]).is_err());
        assert!(fit_exponent(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn fit_noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<_> = (0..40)
            .map(|k| {
                let x = 1.0 + k as f64;
                (x, x * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            })
            .collect();
        assert!((fit_exponent(&pts).unwrap().slope - 1.0).abs() < 0.05);
    }

    #[test]
    fn triangle_examples() {
        assert!((triangle_ratio(1.0, std::f64::consts::FRAC_PI_2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((triangle_ratio(0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(triangle_ratio(1.0, 0.0).is_none());
        assert!(triangle_ratio(-1.0, std::f64::consts::PI).unwrap() < 1e-15);
    }

    #[test]
    fn far_regions_tile() {
        for n in [4usize, 10] {
            for k in 0..1000 {
                let r = 0.01 + 2.0 * k as f64 / 1000.0;
                let h = 1.0 / n as f64;
                // rounding decides membership within an ulp of the edges
                if (r - (1.0 - h)).abs() < 1e-12 || (r - (1.0 + h)).abs() < 1e-12 {
                    continue;
                }
                let expected = if (r - 1.0).abs() <= h {
                    FarRegion::Boundary
                } else if r < 1.0 {
                    FarRegion::Inside
                } else {
                    FarRegion::Outside
                };
                assert_eq!(far_region(r, n), expected);
            }
        }
        assert_eq!(far_majorant(4, 8, 1.0), 8.0f64.powi(3));
    }

    #[test]
    fn amplitude_majorant_at_unit_point() {
        assert!((amplitude_majorant(4, 16, 1.0, std::f64::consts::FRAC_PI_2, 0, 0) - 16.0).abs() < 1e-12);
    }
}
