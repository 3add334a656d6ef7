//! Test functions u with closed-form ∂̄u: a radial profile times a
//! holomorphic polynomial.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::ComplexPoint;
use crate::kernels::carleman::{smoothstep, smoothstep_derivative};

/// Radial factor χ(|z|).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RadialProfile {
    /// 0 below `a`, rises to 1 on [a, b], 1 on [b, c], falls to 0 on [c, e].
    Plateau { a: f64, b: f64, c: f64, e: f64 },
    /// exp(1 − h²/((s − a)(b − s))), h = (b − a)/2, supported in (a, b), 1 at the midpoint.
    AnnularBump { a: f64, b: f64 },
    /// e^{−s^{−ε}}, cut off smoothly: 1 for s ≤ R/2, 0 for s ≥ R.
    Counterexample { epsilon: f64, radius: f64 },
}

impl RadialProfile {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RadialProfile::Plateau { a, b, c, e } => 0.0 <= a && a < b && b <= c && c < e,
            RadialProfile::AnnularBump { a, b } => 0.0 <= a && a < b,
            RadialProfile::Counterexample { epsilon, radius } => epsilon > 0.0 && radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(LabError::Config(format!("invalid radial profile {self:?}")))
        }
    }

    /// (inner, outer) radii of the support.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            RadialProfile::Plateau { a, e, .. } => (a, e),
            RadialProfile::AnnularBump { a, b } => (a, b),
            RadialProfile::Counterexample { radius, .. } => (0.0, radius),
        }
    }

    /// Radii where χ′ may be nonzero, as a list of shells.
    pub fn transition_shells(&self) -> Vec<(f64, f64)> {
        match *self {
            RadialProfile::Plateau { a, b, c, e } => vec![(a, b), (c, e)],
            RadialProfile::AnnularBump { a, b } => vec![(a, b)],
            RadialProfile::Counterexample { radius, .. } => vec![(0.0, radius)],
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match *self {
            RadialProfile::Plateau { a, b, c, e } => smoothstep((s - a) / (b - a)) * smoothstep((e - s) / (e - c)),
            RadialProfile::AnnularBump { a, b } => {
                if s <= a || s >= b {
                    return 0.0;
                }
                let h = 0.5 * (b - a);
                (1.0 - h * h / ((s - a) * (b - s))).exp()
            }
            RadialProfile::Counterexample { epsilon, radius } => {
                if s <= 0.0 {
                    return 0.0;
                }
                (-s.powf(-epsilon)).exp() * smoothstep((radius - s) / (0.5 * radius))
            }
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            RadialProfile::Plateau { a, b, c, e } => {
                let up = smoothstep((s - a) / (b - a));
                let down = smoothstep((e - s) / (e - c));
                smoothstep_derivative((s - a) / (b - a)) / (b - a) * down
                    - up * smoothstep_derivative((e - s) / (e - c)) / (e - c)
            }
            RadialProfile::AnnularBump { a, b } => {
                if s <= a || s >= b {
                    return 0.0;
                }
                let h = 0.5 * (b - a);
                let p = (s - a) * (b - s);
                self.value(s) * h * h * ((b - s) - (s - a)) / (p * p)
            }
            RadialProfile::Counterexample { epsilon, radius } => {
                if s <= 0.0 {
                    return 0.0;
                }
                let core = (-s.powf(-epsilon)).exp();
                let dcore = epsilon * s.powf(-epsilon - 1.0) * core;
                let t = (radius - s) / (0.5 * radius);
                dcore * smoothstep(t) - core * smoothstep_derivative(t) / (0.5 * radius)
            }
        }
    }
}

/// Σ_k c_k z^{α_k}, a holomorphic polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolomorphicPolynomial {
    pub terms: Vec<(Complex64, Vec<u32>)>,
}

impl HolomorphicPolynomial {
    pub fn one() -> Self {
        Self { terms: vec![(Complex64::new(1.0, 0.0), vec![])] }
    }

    pub fn eval(&self, z: &ComplexPoint) -> Complex64 {
        self.terms
            .iter()
            .map(|(c, alpha)| {
                alpha
                    .iter()
                    .zip(&z.coords)
                    .fold(*c, |acc, (&k, zj)| acc * zj.powu(k))
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionDescriptor {
    pub n: usize,
    pub profile: RadialProfile,
    #[serde(default = "HolomorphicPolynomial::one")]
    pub polynomial: HolomorphicPolynomial,
}

/// u(z) = h(z) χ(|z|) with ∂u/∂z̄_j = h(z) χ′(|z|) z_j / (2|z|).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub descriptor: TestFunctionDescriptor,
    /// Largest finite-difference discrepancy seen by the construction self-check.
    pub self_check_error: f64,
}

/// Tolerance of the construction self-check.
pub const SELF_CHECK_TOL: f64 = 1e-6;

impl TestFunction {
    pub fn n(&self) -> usize {
        self.descriptor.n
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.descriptor.profile
    }

    pub fn value(&self, z: &ComplexPoint) -> Complex64 {
        self.descriptor.polynomial.eval(z) * self.descriptor.profile.value(z.norm())
    }

    pub fn dbar(&self, z: &ComplexPoint) -> Vec<Complex64> {
        let s = z.norm();
        let dchi = self.descriptor.profile.derivative(s);
        if dchi == 0.0 || s == 0.0 {
            return vec![Complex64::new(0.0, 0.0); z.n()];
        }
        let h = self.descriptor.polynomial.eval(z);
        z.coords.iter().map(|zj| h * dchi * zj / (2.0 * s)).collect()
    }

    /// |∂̄u| as the Euclidean norm over components.
    pub fn dbar_norm(&self, z: &ComplexPoint) -> f64 {
        self.dbar(z).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn support_avoids_origin(&self) -> bool {
        self.descriptor.profile.support().0 > 0.0
    }

    /// Max over `count` seeded random points of the discrepancy between the
    /// closed-form ∂̄u and central differences of u, relative to 1 + |∂̄u|.
    pub fn finite_difference_error(&self, count: usize, seed: u64) -> f64 {
        let n = self.n();
        let (lo, hi) = self.descriptor.profile.support();
        let lo = lo.max(0.02 * hi);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for _ in 0..count {
            let dir: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nd = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
            let s = rng.gen_range(lo..hi);
            let x: Vec<f64> = dir.iter().map(|v| v / nd * s).collect();
            let z = ComplexPoint::from_real(&x).expect("n >= 2");
            let exact = self.dbar(&z);
            for (j, ex) in exact.iter().enumerate() {
                let mut fd = Complex64::new(0.0, 0.0);
                for (k, fac) in [(2 * j, Complex64::new(0.5, 0.0)), (2 * j + 1, Complex64::new(0.0, 0.5))] {
                    let mut p = x.clone();
                    p[k] += h;
                    let mut m = x.clone();
                    m[k] -= h;
                    let up = self.value(&ComplexPoint::from_real(&p).expect("n >= 2"));
                    let um = self.value(&ComplexPoint::from_real(&m).expect("n >= 2"));
                    fd += fac * (up - um) / (2.0 * h);
                }
                worst = worst.max((fd - ex).norm() / (1.0 + ex.norm()));
            }
        }
        worst
    }
}

/// Builds a test function and runs the ∂̄ self-check at 100 random points.
pub fn make_test_function(descriptor: TestFunctionDescriptor) -> Result<TestFunction> {
    if descriptor.n < 2 {
        return Err(LabError::Config(format!("test function needs n >= 2, got {}", descriptor.n)));
    }
    descriptor.profile.validate()?;
    if descriptor.polynomial.terms.iter().any(|(_, a)| a.len() > descriptor.n) {
        return Err(LabError::Config("polynomial exponent vector longer than n".into()));
    }
    let mut tf = TestFunction { descriptor, self_check_error: 0.0 };
    tf.self_check_error = tf.finite_difference_error(100, 0x5eed);
    if tf.self_check_error > SELF_CHECK_TOL {
        return Err(LabError::Config(format!(
            "dbar self-check failed: discrepancy {:.3e} > {SELF_CHECK_TOL:e}",
            tf.self_check_error
        )));
    }
    Ok(tf)
}

/// Plateau bump on [a, e] with unit plateau on [b, c] times h ≡ 1, n = 2.
pub fn default_bump() -> TestFunction {
    make_test_function(TestFunctionDescriptor {
        n: 2,
        profile: RadialProfile::Plateau { a: 0.2, b: 0.4, c: 0.7, e: 0.95 },
        polynomial: HolomorphicPolynomial::one(),
    })
    .expect("default bump passes its self-check")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly() -> HolomorphicPolynomial {
        HolomorphicPolynomial {
            terms: vec![
                (Complex64::new(1.0, 0.0), vec![1, 0]),
                (Complex64::new(0.5, -0.25), vec![0, 2]),
                (Complex64::new(0.3, 0.0), vec![]),
            ],
        }
    }

    #[test]
    fn plateau_region_is_holomorphic() {
        let tf = make_test_function(TestFunctionDescriptor {
            n: 2,
            profile: RadialProfile::Plateau { a: 0.2, b: 0.4, c: 0.7, e: 0.95 },
            polynomial: HolomorphicPolynomial::one(),
        })
        .unwrap();
        let z = ComplexPoint::from_real(&[0.3, 0.2, -0.1, 0.25]).unwrap();
        assert!(tf.dbar(&z).iter().all(|c| c.norm() == 0.0));
        assert_eq!(tf.value(&z), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn self_check_passes_for_every_kind() {
        for profile in [
            RadialProfile::Plateau { a: 0.2, b: 0.4, c: 0.7, e: 0.95 },
            RadialProfile::AnnularBump { a: 0.3, b: 0.8 },
            RadialProfile::Counterexample { epsilon: 0.5, radius: 0.9 },
        ] {
            let tf = make_test_function(TestFunctionDescriptor { n: 2, profile, polynomial: poly() }).unwrap();
            assert!(tf.self_check_error < SELF_CHECK_TOL, "{:?}", tf.descriptor.profile);
        }
    }

    #[test]
    fn modulus_derivative_matches() {
        // ∂|z|/∂z̄_j = z_j/(2|z|): a profile with χ(s) = s on its support slope
        let z = ComplexPoint::from_real(&[0.3, -0.4, 0.1, 0.6]).unwrap();
        let h = 1e-6;
        let x = z.to_real();
        for j in 0..2 {
            let mut fd = Complex64::new(0.0, 0.0);
            for (k, fac) in [(2 * j, Complex64::new(0.5, 0.0)), (2 * j + 1, Complex64::new(0.0, 0.5))] {
                let mut p = x.clone();
                p[k] += h;
                let mut m = x.clone();
                m[k] -= h;
                let np = ComplexPoint::from_real(&p).unwrap().norm();
                let nm = ComplexPoint::from_real(&m).unwrap().norm();
                fd += fac * (np - nm) / (2.0 * h);
            }
            let exact = z.coords[j] / (2.0 * z.norm());
            assert!((fd - exact).norm() < 1e-9);
        }
    }

    #[test]
    fn invalid_profile_is_rejected() {
        assert!(make_test_function(TestFunctionDescriptor {
            n: 2,
            profile: RadialProfile::Plateau { a: 0.5, b: 0.4, c: 0.7, e: 0.95 },
            polynomial: HolomorphicPolynomial::one(),
        })
        .is_err());
    }
}
