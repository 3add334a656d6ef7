//! Points of C^n, polar data of point pairs, logarithmic intervals and
//! quadrature grids on S^3 and on radial intervals.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{LabError, Result};
use crate::kernels::carleman::CarlemanWeight;
use crate::quadrature::gauss_legendre_on;

/// A point of C^n; the real geometry is that of R^{2n}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoint {
    pub coords: Vec<Complex64>,
}

impl ComplexPoint {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(LabError::Domain(format!("need n >= 2 coordinates, got {}", coords.len())));
        }
        Ok(Self { coords })
    }

    /// Builds a point from 2n real coordinates (x1, y1, x2, y2, ...).
    pub fn from_real(x: &[f64]) -> Result<Self> {
        if x.len() % 2 != 0 {
            return Err(LabError::Domain("odd number of real coordinates".into()));
        }
        Self::new(x.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
    }

    pub fn to_real(&self) -> Vec<f64> {
        self.coords.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn d(&self) -> usize {
        2 * self.coords.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coords.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Real Euclidean inner product Re Σ z_j conj(w_j).
    pub fn real_inner(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// Hermitian product Σ z_j conj(w_j).
    pub fn hermitian(&self, other: &Self) -> Complex64 {
        self.coords.iter().zip(&other.coords).map(|(a, b)| a * b.conj()).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { coords: self.coords.iter().map(|c| c * s).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect() }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).norm()
    }
}

fn check_same_dim(z: &ComplexPoint, w: &ComplexPoint) -> Result<()> {
    if z.n() != w.n() {
        return Err(LabError::Shape(format!("mixed dimensions n={} and n={}", z.n(), w.n())));
    }
    Ok(())
}

/// Angle θ ∈ [0, π] between z and ζ seen from the origin.
pub fn angle_between(z: &ComplexPoint, zeta: &ComplexPoint) -> Result<f64> {
    check_same_dim(z, zeta)?;
    if z.is_zero() {
        return Err(LabError::Domain("angle_between: z is the zero point".into()));
    }
    if zeta.is_zero() {
        return Err(LabError::Domain("angle_between: zeta is the zero point".into()));
    }
    let c = z.real_inner(zeta) / (z.norm() * zeta.norm());
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Polar description of a point pair (z, ζ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarData {
    pub s: f64,
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub sigma: f64,
    pub tau: f64,
}

impl PolarData {
    /// cos θ from the clamped real inner product.
    pub fn cos_theta(&self) -> f64 {
        self.theta.cos()
    }
}

pub fn polar_data(z: &ComplexPoint, zeta: &ComplexPoint) -> Result<PolarData> {
    let theta = angle_between(z, zeta)?;
    let s = z.norm();
    let t = zeta.norm();
    Ok(PolarData { s, t, r: s / t, theta, sigma: -s.ln(), tau: -t.ln() })
}

/// An interval γ in the ψ(σ) variable. `hi` may be +∞.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogInterval {
    pub lo: f64,
    pub hi: f64,
}

impl LogInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(LabError::Domain(format!("interval [{lo}, {hi}] has lo > hi")));
        }
        Ok(Self { lo, hi })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// |γ|' = min{|γ|, ν^{-1/2}}.
    pub fn localized_length(&self, nu: f64) -> f64 {
        self.length().min(nu.powf(-0.5))
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Strict disjointness of closed intervals.
    pub fn disjoint(&self, other: &Self) -> bool {
        self.hi < other.lo || other.hi < self.lo
    }
}

/// Membership of z in the annulus A(ψ⁻¹γ): ψ(log 1/|z|) ∈ γ. Endpoint
/// comparisons carry a relative slack of 1e-12.
pub fn annulus_contains(gamma: &LogInterval, w: &CarlemanWeight, z: &ComplexPoint) -> Result<bool> {
    let s = z.norm();
    if !(s > 0.0) {
        return Err(LabError::Domain("annulus_contains: |z| must be positive".into()));
    }
    let x = w.psi(-s.ln());
    let slack = 1e-12 * x.abs().max(1.0);
    Ok(gamma.lo - slack <= x && x <= gamma.hi + slack)
}

/// Quadrature on the unit sphere S^{d-1} ⊂ R^d.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereGrid {
    pub d: usize,
    /// Real coordinates (x1, y1, x2, y2) of each node.
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub scheme: String,
}

impl SphereGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn point(&self, i: usize) -> ComplexPoint {
        ComplexPoint::from_real(&self.nodes[i]).expect("grid nodes have even length")
    }

    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.d).map(|i| format!("x{i}")).collect();
        header.push("weight".into());
        wr.write_record(&header)?;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let mut row: Vec<String> = x.iter().map(|v| format!("{v:.17e}")).collect();
            row.push(format!("{w:.17e}"));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Product rule on S^3 in Hopf coordinates
/// x = (cos η e^{iξ1}, sin η e^{iξ2}): trapezoid rule in ξ1, ξ2 and
/// Gauss–Legendre in u = sin²η, where dS = ½ du dξ1 dξ2.
/// Exact for polynomials of degree ≤ `resolution`.
pub fn sphere_grid(d: usize, resolution: usize) -> Result<SphereGrid> {
    if d != 4 {
        return Err(LabError::UnsupportedDimension(d));
    }
    let res = resolution.max(1);
    let k = res + 1;
    let m = (res + 2).div_ceil(4).max(1);
    let (u, wu) = gauss_legendre_on(0.0, 1.0, m);
    let dxi = 2.0 * PI / k as f64;
    let mut nodes = Vec::with_capacity(m * k * k);
    let mut weights = Vec::with_capacity(m * k * k);
    for (ui, wi) in u.iter().zip(&wu) {
        let (c, s) = ((1.0 - ui).sqrt(), ui.sqrt());
        for a in 0..k {
            let xi1 = dxi * a as f64;
            for b in 0..k {
                let xi2 = dxi * b as f64;
                nodes.push(vec![c * xi1.cos(), c * xi1.sin(), s * xi2.cos(), s * xi2.sin()]);
                weights.push(0.5 * wi * dxi * dxi);
            }
        }
    }
    Ok(SphereGrid { d, nodes, weights, scheme: format!("hopf-product(res={res},trap={k},gl={m})") })
}

/// Radial node placement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialSpacing {
    UniformInSigma,
    GaussLegendreInS,
}

/// Radial nodes in s with plain weights for ∫ f(s) ds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub spacing: RadialSpacing,
}

impl RadialGrid {
    /// Weights for ∫ f(s) s^{d-1} ds.
    pub fn volume_weights(&self, d: usize) -> Vec<f64> {
        self.nodes.iter().zip(&self.weights).map(|(s, w)| w * s.powi(d as i32 - 1)).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["s", "weight"])?;
        for (s, w) in self.nodes.iter().zip(&self.weights) {
            wr.write_record([format!("{s:.17e}"), format!("{w:.17e}")])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Radial grid on [a, b] ⊂ [0, ∞). The uniform-in-σ option uses the
/// midpoint rule in σ = log 1/s, so it requires a > 0.
pub fn radial_grid(interval: (f64, f64), count: usize, spacing: RadialSpacing) -> Result<RadialGrid> {
    let (a, b) = interval;
    if !(b > a) || a < 0.0 {
        return Err(LabError::Domain(format!("empty or invalid radial interval [{a}, {b}]")));
    }
    if count < 2 {
        return Err(LabError::Domain("radial grid needs at least 2 nodes".into()));
    }
    match spacing {
        RadialSpacing::GaussLegendreInS => {
            let (nodes, weights) = gauss_legendre_on(a, b, count);
            Ok(RadialGrid { nodes, weights, spacing })
        }
        RadialSpacing::UniformInSigma => {
            if a <= 0.0 {
                return Err(LabError::Domain("uniform-in-sigma grid needs a > 0".into()));
            }
            let (slo, shi) = (-b.ln(), -a.ln());
            let h = (shi - slo) / count as f64;
            let mut nodes = Vec::with_capacity(count);
            let mut weights = Vec::with_capacity(count);
            for i in (0..count).rev() {
                let sigma = slo + h * (i as f64 + 0.5);
                let s = (-sigma).exp();
                nodes.push(s);
                weights.push(h * s);
            }
            Ok(RadialGrid { nodes, weights, spacing })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: &[f64]) -> ComplexPoint {
        ComplexPoint::from_real(x).unwrap()
    }

    #[test]
    fn angle_examples() {
        let z = pt(&[0.3, -0.2, 0.5, 0.1]);
        assert!(angle_between(&z, &z).unwrap().abs() < 1e-7);
        let e1 = pt(&[1.0, 0.0, 0.0, 0.0]);
        let e2 = pt(&[0.0, 0.0, 1.0, 0.0]);
        assert!((angle_between(&e1, &e2).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((angle_between(&z, &z.scale(-1.0)).unwrap() - PI).abs() < 1e-7);
        let zero = pt(&[0.0; 4]);
        match angle_between(&zero, &z) {
            Err(LabError::Domain(m)) => assert!(m.contains("z is")),
            other => panic!("{other:?}"),
        }
        match angle_between(&z, &zero) {
            Err(LabError::Domain(m)) => assert!(m.contains("zeta")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn polar_examples() {
        let z = pt(&[(-1.0f64).exp(), 0.0, 0.0, 0.0]);
        let zeta = pt(&[1.0, 0.0, 0.0, 0.0]);
        let p = polar_data(&z, &zeta).unwrap();
        assert!((p.sigma - 1.0).abs() < 1e-15 && p.tau == 0.0);
        assert!((p.r - (-1.0f64).exp()).abs() < 1e-16);
        let q = polar_data(&zeta, &zeta).unwrap();
        assert_eq!(q.r, 1.0);
        assert_eq!(q.theta, 0.0);
    }

    #[test]
    fn annulus_examples() {
        let id = CarlemanWeight::identity();
        let half = pt(&[0.5, 0.0, 0.0, 0.0]);
        assert!(annulus_contains(&LogInterval::new(0.0, f64::INFINITY).unwrap(), &id, &half).unwrap());
        let one = pt(&[1.0, 0.0, 0.0, 0.0]);
        assert!(!annulus_contains(&LogInterval::new(1.0, 2.0).unwrap(), &id, &one).unwrap());
        // ψ(σ) = σ + e^{-σ/2} has ψ' > 0, so ψ(σ) = 1 has a simple root; bisect for it.
        let w = CarlemanWeight::exp_corrected(0.5).unwrap();
        let (mut lo, mut hi) = (-0.5f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if w.psi(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = (-0.5 * (lo + hi)).exp();
        let z = pt(&[s, 0.0, 0.0, 0.0]);
        assert!(annulus_contains(&LogInterval::new(1.0, 1.0).unwrap(), &w, &z).unwrap());
    }

    fn monomial(x: &[f64], e: [i32; 4]) -> f64 {
        x.iter().zip(e).map(|(v, k)| v.powi(k)).product()
    }

    #[test]
    fn sphere_grid_examples() {
        let g = sphere_grid(4, 8).unwrap();
        assert!((g.integrate(|_| 1.0) - 2.0 * PI * PI).abs() < 1e-10);
        assert!((g.integrate(|x| x[0] * x[0]) - PI * PI / 2.0).abs() < 1e-10);
        assert!(g.integrate(|x| monomial(x, [3, 0, 1, 2])).abs() < 1e-12);
        for x in &g.nodes {
            let n: f64 = x.iter().map(|v| v * v).sum();
            assert!((n.sqrt() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(sphere_grid(6, 4), Err(LabError::UnsupportedDimension(6))));
    }

    #[test]
    fn sphere_grid_exact_to_resolution_degree() {
        // ∫_{S^3} x1^{2a} x3^{2b} = 2 Γ(a+½)Γ(b+½)Γ(½)² / Γ(a+b+2).
        use statrs::function::gamma::gamma;
        for res in [4usize, 8, 12] {
            let g = sphere_grid(4, res).unwrap();
            for a in 0..=res / 2 {
                for b in 0..=(res / 2 - a) {
                    let num = g.integrate(|x| monomial(x, [2 * a as i32, 0, 2 * b as i32, 0]));
                    let exact = 2.0 * gamma(a as f64 + 0.5) * gamma(b as f64 + 0.5) * PI
                        / gamma((a + b) as f64 + 2.0);
                    assert!((num - exact).abs() < 1e-10 * exact.max(1.0), "res={res} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn sphere_grid_convergence_on_smooth_integrand() {
        let exact = sphere_grid(4, 64).unwrap().integrate(|x| x[0].exp());
        let mut prev = f64::INFINITY;
        for res in [2usize, 4, 8] {
            let err = (sphere_grid(4, res).unwrap().integrate(|x| x[0].exp()) - exact).abs();
            if err > 1e-13 {
                assert!(err * 10.0 <= prev, "res={res} err={err} prev={prev}");
            }
            prev = err;
        }
    }

    #[test]
    fn radial_grid_examples() {
        let g = radial_grid((0.0, 1.0), 4, RadialSpacing::GaussLegendreInS).unwrap();
        let vw = g.volume_weights(4);
        assert!((vw.iter().sum::<f64>() - 0.25).abs() < 1e-15);
        for k in 0..4 {
            let num: f64 = g.nodes.iter().zip(&vw).map(|(s, w)| w * s.powi(k)).sum();
            assert!((num - 1.0 / (4.0 + k as f64)).abs() < 1e-14);
        }
        let h = radial_grid((0.5, 1.0), 3, RadialSpacing::GaussLegendreInS).unwrap();
        assert!((h.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        let u = radial_grid((0.1, 1.0), 2000, RadialSpacing::UniformInSigma).unwrap();
        assert!(u.nodes.windows(2).all(|p| p[0] < p[1]));
        assert!((u.weights.iter().sum::<f64>() - 0.9).abs() < 1e-6);
        assert!(radial_grid((1.0, 1.0), 4, RadialSpacing::GaussLegendreInS).is_err());
    }

    #[test]
    fn grids_export_csv() {
        let g = sphere_grid(4, 2).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), g.len() + 1);
        assert!(text.starts_with("x1,x2,x3,x4,weight"));
    }
}
