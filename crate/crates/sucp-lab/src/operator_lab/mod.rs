//! Discretized sphere-to-sphere operators, their norms, and the
//! norm-scaling, min-estimate and Carleman-ratio experiments.

pub mod carleman_ratio;
pub mod chi;
pub mod min_estimate;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Kernel samples K(ξ_i, η_j)_c with quadrature weights. Rows are target
/// nodes; columns are (source node, component) pairs, component fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedOperator {
    pub rows: usize,
    pub sources: usize,
    pub components: usize,
    pub matrix: Vec<Complex64>,
    pub target_weights: Vec<f64>,
    pub source_weights: Vec<f64>,
    pub labels: BTreeMap<String, f64>,
}

impl DiscretizedOperator {
    pub fn new(
        matrix: Vec<Complex64>,
        target_weights: Vec<f64>,
        source_weights: Vec<f64>,
        components: usize,
    ) -> Result<Self> {
        let rows = target_weights.len();
        let sources = source_weights.len();
        if components == 0 || matrix.len() != rows * sources * components {
            return Err(LabError::Shape(format!(
                "matrix has {} entries, grids need {rows} x {sources} x {components}",
                matrix.len()
            )));
        }
        if matrix.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(LabError::Domain("operator has non-finite entries".into()));
        }
        Ok(Self { rows, sources, components, matrix, target_weights, source_weights, labels: BTreeMap::new() })
    }

    /// Real matrix with unit weights.
    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::new(
            values.iter().map(|v| Complex64::new(*v, 0.0)).collect(),
            vec![1.0; rows],
            vec![1.0; cols],
            1,
        )
    }

    pub fn cols(&self) -> usize {
        self.sources * self.components
    }

    pub fn entry(&self, i: usize, col: usize) -> Complex64 {
        self.matrix[i * self.cols() + col]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { matrix: self.matrix.iter().map(|x| x * c).collect(), ..self.clone() }
    }

    fn col_weight(&self, col: usize) -> f64 {
        self.source_weights[col / self.components]
    }

    /// y = W_t^{1/2} K W_s^{1/2} x
    fn apply_weighted(&self, x: &[Complex64]) -> Vec<Complex64> {
        let cols = self.cols();
        let sx: Vec<Complex64> = x.iter().enumerate().map(|(c, v)| v * self.col_weight(c).sqrt()).collect();
        (0..self.rows)
            .map(|i| {
                let row = &self.matrix[i * cols..(i + 1) * cols];
                let s: Complex64 = row.iter().zip(&sx).map(|(a, b)| a * b).sum();
                s * self.target_weights[i].sqrt()
            })
            .collect()
    }

    /// x = W_s^{1/2} K^* W_t^{1/2} y
    fn apply_weighted_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let cols = self.cols();
        let mut out = vec![Complex64::new(0.0, 0.0); cols];
        for i in 0..self.rows {
            let yi = y[i] * self.target_weights[i].sqrt();
            let row = &self.matrix[i * cols..(i + 1) * cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * yi;
            }
        }
        for (c, o) in out.iter_mut().enumerate() {
            *o *= self.col_weight(c).sqrt();
        }
        out
    }

    /// (Kf)(ξ_i) = Σ_{j,c} K_{ij,c} f_{j,c} ν_j
    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        let cols = self.cols();
        (0..self.rows)
            .map(|i| {
                self.matrix[i * cols..(i + 1) * cols]
                    .iter()
                    .zip(f)
                    .enumerate()
                    .map(|(c, (a, b))| a * b * self.col_weight(c))
                    .sum()
            })
            .collect()
    }
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Lower and upper bounds for an operator norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub lower: f64,
    pub upper: f64,
    pub lower_method: String,
    pub upper_method: String,
}

impl NormEstimate {
    pub fn consistent(&self) -> bool {
        self.lower <= self.upper * (1.0 + 1e-9)
    }
}

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;

/// Largest singular value of W_t^{1/2} K W_s^{1/2} by power iteration on
/// M*M, stopped when the eigen-residual ‖M*Mv − σ²v‖ falls below 1e−10 σ².
pub fn spectral_norm(k: &DiscretizedOperator) -> Result<f64> {
    spectral_norm_with(k, POWER_TOL, POWER_MAX_ITER).map(|(s, _)| s)
}

/// As [`spectral_norm`], also returning the right singular vector in
/// weighted coordinates.
pub fn spectral_norm_with(k: &DiscretizedOperator, tol: f64, max_iter: usize) -> Result<(f64, Vec<Complex64>)> {
    let cols = k.cols();
    if cols == 0 || k.rows == 0 {
        return Ok((0.0, vec![]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<Complex64> = (0..cols).map(|_| Complex64::new(1.0 + 0.1 * rng.gen::<f64>(), 0.1 * rng.gen::<f64>())).collect();
    let nv = l2(&v);
    v.iter_mut().for_each(|c| *c /= nv);
    let mut sigma2 = 0.0;
    for it in 0..max_iter {
        let w = k.apply_weighted_adjoint(&k.apply_weighted(&v));
        let rayleigh: f64 = v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        sigma2 = rayleigh;
        let nw = l2(&w);
        if nw == 0.0 {
            return Ok((0.0, v));
        }
        let resid = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (b - a * rayleigh).norm_sqr())
            .sum::<f64>()
            .sqrt();
        v = w.iter().map(|c| c / nw).collect();
        if resid <= tol * rayleigh.abs() && it > 0 {
            return Ok((rayleigh.max(0.0).sqrt(), v));
        }
    }
    Err(LabError::IterationLimit { iterations: max_iter, last: sigma2.max(0.0).sqrt() })
}

/// Exponents of the Schur test: 1/p − 1/p′ = 1/q with p′ the Hölder
/// conjugate of p; returns (p′, q′).
pub fn schur_exponents(p: f64) -> Result<(f64, f64)> {
    if !(1.0..=2.0).contains(&p) {
        return Err(LabError::Domain(format!("Schur test needs 1 <= p <= 2, got {p}")));
    }
    let p_dual = if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
    let inv_q = 1.0 / p - 1.0 / p_dual;
    let q_dual = if inv_q == 0.0 { 1.0 } else { 1.0 / (1.0 - inv_q) };
    Ok((p_dual, q_dual))
}

/// Schur-type bound (AB)^{1/2} for the L^p → L^{p′} norm with positive
/// weights u (targets) and v (sources):
/// A = sup_x ‖(u(x)v(y))^{−1/p′} K(x, ·)‖_{L^{q′}(v ν)},
/// B = sup_y ‖(u(x)v(y))^{−1/p′} K(·, y)‖_{L^{q′}(u μ)}.
pub fn schur_bound(k: &DiscretizedOperator, u: &[f64], v: &[f64], p: f64) -> Result<NormEstimate> {
    if u.len() != k.rows || v.len() != k.sources {
        return Err(LabError::Shape("Schur weights do not match the grids".into()));
    }
    if u.iter().chain(v).any(|w| !(*w > 0.0)) {
        return Err(LabError::Domain("Schur weights must be strictly positive".into()));
    }
    let (p_dual, q_dual) = schur_exponents(p)?;
    let inv_pd = if p_dual.is_infinite() { 0.0 } else { 1.0 / p_dual };
    let cols = k.cols();
    let factor = |i: usize, c: usize| (u[i] * v[c / k.components]).powf(-inv_pd);
    let mut a: f64 = 0.0;
    for i in 0..k.rows {
        let s: f64 = (0..cols)
            .map(|c| (factor(i, c) * k.entry(i, c).norm()).powf(q_dual) * v[c / k.components] * k.col_weight(c))
            .sum();
        a = a.max(s.powf(1.0 / q_dual));
    }
    let mut b: f64 = 0.0;
    for c in 0..cols {
        let s: f64 = (0..k.rows)
            .map(|i| (factor(i, c) * k.entry(i, c).norm()).powf(q_dual) * u[i] * k.target_weights[i])
            .sum();
        b = b.max(s.powf(1.0 / q_dual));
    }
    let upper = (a * b).sqrt();
    Ok(NormEstimate { lower: 0.0, upper, lower_method: "none".into(), upper_method: format!("schur(p={p})") })
}

fn weighted_lp(f: &[Complex64], w: &dyn Fn(usize) -> f64, p: f64) -> f64 {
    f.iter().enumerate().map(|(i, c)| c.norm().powf(p) * w(i)).sum::<f64>().powf(1.0 / p)
}

/// Lower bound for the L^p → L^{p′} norm by a nonlinear power
/// iteration; every iterate's quotient ‖Kf‖_{p′}/‖f‖_p is a valid bound and
/// the best one is returned.
pub fn lp_lower_bound(k: &DiscretizedOperator, p: f64, iterations: usize, seed: u64) -> Result<f64> {
    let (p_dual, _) = schur_exponents(p)?;
    let cols = k.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f: Vec<Complex64> = (0..cols).map(|_| Complex64::new(rng.gen_range(0.5..1.5), 0.0)).collect();
    let sw = |c: usize| k.col_weight(c);
    let tw = |i: usize| k.target_weights[i];
    let mut best: f64 = 0.0;
    // duality map exponents: target L^{p′} → L^p, source L^{p′} → L^p
    for _ in 0..iterations.max(1) {
        let nf = weighted_lp(&f, &sw, p);
        if nf == 0.0 || !nf.is_finite() {
            break;
        }
        f.iter_mut().for_each(|c| *c /= nf);
        let g = k.apply(&f);
        best = best.max(weighted_lp(&g, &tw, p_dual));
        // h = K^*(|g|^{p′−2} g) with target weights, then f = |h|^{p−2}... in dual form
        let dual: Vec<Complex64> = g
            .iter()
            .enumerate()
            .map(|(i, c)| if c.norm() == 0.0 { *c } else { c * c.norm().powf(p_dual - 2.0) * tw(i) })
            .collect();
        let mut h = vec![Complex64::new(0.0, 0.0); cols];
        for (i, di) in dual.iter().enumerate() {
            for (c, hc) in h.iter_mut().enumerate() {
                *hc += k.entry(i, c).conj() * di;
            }
        }
        // f ∝ |h|^{p′−2} h maximizes Re⟨f, h⟩ over the L^p sphere
        f = h
            .iter()
            .map(|c| if c.norm() == 0.0 { *c } else { c * c.norm().powf(p_dual - 2.0) })
            .collect();
    }
    Ok(best)
}

/// Lemma-3.1 contract at p = 2: the full product-space operator with
/// blocks T_{wy} is bounded by the norm of the radial kernel
/// n(w, y) = ‖T_{wy}‖ on the radial grids.
pub fn product_assemble(radial: &DiscretizedOperator) -> Result<NormEstimate> {
    let schur = schur_bound(radial, &vec![1.0; radial.rows], &vec![1.0; radial.sources], 2.0)?;
    let exact = spectral_norm(radial)?;
    Ok(NormEstimate {
        lower: 0.0,
        upper: exact.min(schur.upper),
        lower_method: "none".into(),
        upper_method: "radial-kernel spectral norm".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_rank_one() {
        let id = DiscretizedOperator::from_real(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((spectral_norm(&id).unwrap() - 1.0).abs() < 1e-12);
        let u = [1.0, 2.0, -1.0];
        let v = [0.5, 3.0];
        let m: Vec<f64> = u.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        let mut k = DiscretizedOperator::from_real(3, 2, &m).unwrap();
        k.target_weights = vec![0.5, 1.0, 2.0];
        k.source_weights = vec![1.5, 0.25];
        let nu: f64 = u.iter().zip(&k.target_weights).map(|(a, w)| a * a * w).sum::<f64>().sqrt();
        let nv: f64 = v.iter().zip(&k.source_weights).map(|(a, w)| a * a * w).sum::<f64>().sqrt();
        assert!((spectral_norm(&k).unwrap() - nu * nv).abs() < 1e-10 * nu * nv);
    }

    #[test]
    fn averaging_operator_is_tight() {
        let n = 40;
        let mut k = DiscretizedOperator::from_real(n, n, &vec![1.0; n * n]).unwrap();
        k.target_weights = vec![1.0 / n as f64; n];
        k.source_weights = vec![1.0 / n as f64; n];
        let s = schur_bound(&k, &vec![1.0; n], &vec![1.0; n], 2.0).unwrap();
        let e = spectral_norm(&k).unwrap();
        assert!((s.upper - 1.0).abs() < 1e-12);
        assert!((e / s.upper - 1.0).abs() < 1e-9);
    }

    #[test]
    fn schur_exponent_pairs() {
        let (pd, qd) = schur_exponents(2.0).unwrap();
        assert_eq!((pd, qd), (2.0, 1.0));
        let (pd, qd) = schur_exponents(62.0 / 32.0).unwrap();
        assert!((pd - 62.0 / 30.0).abs() < 1e-12);
        assert!((qd - 31.0 / 30.0).abs() < 1e-12);
        assert!(schur_exponents(2.5).is_err());
    }

    #[test]
    fn shape_and_weight_errors() {
        let k = DiscretizedOperator::from_real(2, 2, &[1.0; 4]).unwrap();
        assert!(matches!(schur_bound(&k, &[1.0], &[1.0, 1.0], 2.0), Err(LabError::Shape(_))));
        assert!(schur_bound(&k, &[1.0, 0.0], &[1.0, 1.0], 2.0).is_err());
        assert!(DiscretizedOperator::from_real(2, 3, &[1.0; 4]).is_err());
    }

    #[test]
    fn lower_bound_below_upper() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vals: Vec<f64> = (0..30 * 20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let k = DiscretizedOperator::from_real(30, 20, &vals).unwrap();
        let s2 = spectral_norm(&k).unwrap();
        let lb2 = lp_lower_bound(&k, 2.0, 200, 1).unwrap();
        assert!(lb2 <= s2 * (1.0 + 1e-9) && lb2 > 0.99 * s2, "{lb2} {s2}");
        let p = 62.0 / 32.0;
        let lb = lp_lower_bound(&k, p, 50, 1).unwrap();
        let ub = schur_bound(&k, &vec![1.0; 30], &vec![1.0; 20], p).unwrap();
        assert!(NormEstimate { lower: lb, ..ub }.consistent());
    }
}
