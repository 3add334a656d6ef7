//! Ultraspherical polynomials P_m^{(λ)}, the binomial coefficients of their
//! trigonometric form, generating-function partial sums and tails.

use statrs::function::gamma::ln_gamma;

use crate::error::{LabError, Result};
use crate::geometry::{polar_data, ComplexPoint};

/// Hard cap on polynomial degree.
pub const DEGREE_CAP: usize = 2000;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) {
        return Err(LabError::Domain(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

fn check_degree(m: usize) -> Result<()> {
    if m > DEGREE_CAP {
        return Err(LabError::DegreeCap { requested: m, cap: DEGREE_CAP });
    }
    Ok(())
}

/// P_0..P_M at x by forward recurrence; no domain checks.
pub(crate) fn table_unchecked(lambda: f64, max_degree: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(max_degree + 1);
    p.push(1.0);
    if max_degree == 0 {
        return p;
    }
    p.push(2.0 * lambda * x);
    for m in 1..max_degree {
        let mf = m as f64;
        let next = (2.0 * (mf + lambda) * x * p[m] - (mf + 2.0 * lambda - 1.0) * p[m - 1]) / (mf + 1.0);
        p.push(next);
    }
    p
}

/// Values P_0^{(λ)}(x), ..., P_M^{(λ)}(x) at one point.
#[derive(Clone, Debug)]
pub struct GegenbauerFamily {
    pub lambda: f64,
    pub x: f64,
    pub values: Vec<f64>,
}

impl GegenbauerFamily {
    pub fn build(lambda: f64, max_degree: usize, x: f64) -> Result<Self> {
        check_lambda(lambda)?;
        check_degree(max_degree)?;
        if x.abs() > 1.0 {
            return Err(LabError::Domain(format!("|x| = {} > 1", x.abs())));
        }
        Ok(Self { lambda, x, values: table_unchecked(lambda, max_degree, x) })
    }

    pub fn get(&self, m: usize) -> f64 {
        self.values[m]
    }
}

/// P_m^{(λ)}(x) by forward recurrence.
pub fn gegenbauer_eval(lambda: f64, m: usize, x: f64) -> Result<f64> {
    Ok(GegenbauerFamily::build(lambda, m, x)?.values[m])
}

/// P_k^{(λ)}(1) = binom(k+2λ−1, k): running product up to k = 170, log-gamma above.
pub fn gegenbauer_at_one(lambda: f64, k: usize) -> Result<f64> {
    check_lambda(lambda)?;
    if k <= 170 {
        let mut v = 1.0;
        for i in 1..=k {
            v *= (i as f64 + 2.0 * lambda - 1.0) / i as f64;
        }
        Ok(v)
    } else {
        let kf = k as f64;
        Ok((ln_gamma(kf + 2.0 * lambda) - ln_gamma(kf + 1.0) - ln_gamma(2.0 * lambda)).exp())
    }
}

/// α_k^{(λ)} = binom(k+λ−1, k), the coefficients of (1 − r e^{iθ})^{−λ}.
#[derive(Clone, Debug)]
pub struct BinomialAlpha {
    pub lambda: f64,
    pub values: Vec<f64>,
}

impl BinomialAlpha {
    pub fn build(lambda: f64, max_k: usize) -> Result<Self> {
        check_lambda(lambda)?;
        let mut values = Vec::with_capacity(max_k + 1);
        values.push(1.0);
        for k in 1..=max_k {
            let prev = values[k - 1];
            values.push(prev * (k as f64 + lambda - 1.0) / k as f64);
        }
        Ok(Self { lambda, values })
    }
}

/// P_k^{(λ)}(cos θ) = Σ_{i=0}^{k} α_i α_{k−i} cos((k−2i)θ).
pub fn gegenbauer_trig_form(lambda: f64, k: usize, theta: f64) -> Result<f64> {
    let a = BinomialAlpha::build(lambda, k)?;
    Ok((0..=k)
        .map(|i| a.values[i] * a.values[k - i] * ((k as f64 - 2.0 * i as f64) * theta).cos())
        .sum())
}

/// Σ_{m=0}^{M} P_m^{(λ)}(cos θ) r^m.
pub fn generating_partial_sum(lambda: f64, r: f64, theta: f64, max_degree: usize) -> Result<f64> {
    let fam = GegenbauerFamily::build(lambda, max_degree, theta.cos().clamp(-1.0, 1.0))?;
    let mut rp = 1.0;
    let mut s = 0.0;
    for v in &fam.values {
        s += v * rp;
        rp *= r;
    }
    Ok(s)
}

/// (1 − 2r cos θ + r²)^{−λ}.
pub fn generating_function(lambda: f64, r: f64, theta: f64) -> f64 {
    (1.0 - 2.0 * r * theta.cos() + r * r).powf(-lambda)
}

/// Σ_{m>M} P_m^{(λ)}(1) r^m for 0 ≤ r < 1, summed until the geometric
/// remainder estimate falls below 1e-17 of the partial value.
pub fn tail_majorant(lambda: f64, r: f64, max_degree: usize) -> Result<f64> {
    check_lambda(lambda)?;
    if !(0.0..1.0).contains(&r) {
        return Err(LabError::ConvergenceDomain(format!("majorant needs 0 <= r < 1, got {r}")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let mut m = max_degree + 1;
    let mut log_term = (gegenbauer_at_one(lambda, m)?).ln() + m as f64 * r.ln();
    let mut s = 0.0;
    loop {
        let term = log_term.exp();
        s += term;
        let ratio = r * (m as f64 + 2.0 * lambda) / (m as f64 + 1.0);
        if ratio < 1.0 && term * ratio / (1.0 - ratio) <= 1e-17 * s {
            return Ok(s);
        }
        if term == 0.0 && ratio < 1.0 {
            return Ok(s);
        }
        log_term += ratio.ln();
        m += 1;
        if m > 100 * DEGREE_CAP {
            return Ok(s);
        }
    }
}

/// |ζ|^{−(d−2)} Σ_{m=0}^{M} P_m^{((d−2)/2)}(cos θ) r^m, the truncated zonal
/// expansion of |z − ζ|^{−(d−2)}.
pub fn newtonian_expansion(z: &ComplexPoint, zeta: &ComplexPoint, max_degree: usize) -> Result<f64> {
    let d = z.d();
    let t = zeta.norm();
    if z.is_zero() {
        return Ok(t.powi(2 - d as i32));
    }
    let p = polar_data(z, zeta)?;
    if p.r >= 1.0 {
        return Err(LabError::ConvergenceDomain(format!("newtonian expansion needs |z| < |zeta|, r = {}", p.r)));
    }
    let lambda = (d as f64 - 2.0) / 2.0;
    Ok(t.powi(2 - d as i32) * generating_partial_sum(lambda, p.r, p.theta, max_degree)?)
}

/// g(r, θ) = (1 − 2r cos θ + r²)^{−d/2}.
pub fn g_function(d: usize, r: f64, theta: f64) -> f64 {
    generating_function(d as f64 / 2.0, r, theta)
}

/// Σ_{m=N}^{N+M_extra} P_m^{(d/2)}(cos θ) r^{m−N} = r^{−N}(g − T^{N−1} g).
/// With `m_extra = None` the series is cut once the majorant of the dropped
/// remainder is below 1e-13 of the returned value. Returns the value and
/// the number of extra terms used.
pub fn g_series_tail(d: usize, r: f64, theta: f64, n: usize, m_extra: Option<usize>) -> Result<(f64, usize)> {
    if !(0.0..1.0).contains(&r) {
        return Err(LabError::ConvergenceDomain(format!("g-series needs 0 <= r < 1, got {r}")));
    }
    let lambda = d as f64 / 2.0;
    let x = theta.cos().clamp(-1.0, 1.0);
    let mut p_prev = 0.0;
    let mut p_cur = 1.0;
    // advance to degree n
    for m in 0..n {
        let mf = m as f64;
        let next = if m == 0 {
            2.0 * lambda * x
        } else {
            (2.0 * (mf + lambda) * x * p_cur - (mf + 2.0 * lambda - 1.0) * p_prev) / (mf + 1.0)
        };
        p_prev = p_cur;
        p_cur = next;
    }
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut rp = 1.0;
    let mut at_one = gegenbauer_at_one(lambda, n)?;
    let mut m = n;
    loop {
        let term = p_cur * rp;
        let t = sum + term;
        comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
        let used = m - n;
        if let Some(extra) = m_extra {
            if used >= extra {
                return Ok((sum + comp, used));
            }
        } else {
            let q = r * (m as f64 + 2.0 * lambda) / (m as f64 + 1.0);
            let bound_next = at_one * rp * q;
            if q < 1.0 && bound_next / (1.0 - q) <= 1e-13 * (sum + comp).abs() {
                return Ok((sum + comp, used));
            }
            if q < 1.0 && bound_next / (1.0 - q) < 1e-300 {
                return Ok((sum + comp, used));
            }
        }
        if m + 1 > DEGREE_CAP {
            return Err(LabError::DegreeCap { requested: m + 1, cap: DEGREE_CAP });
        }
        let mf = m as f64;
        let next = if m == 0 {
            2.0 * lambda * x
        } else {
            (2.0 * (mf + lambda) * x * p_cur - (mf + 2.0 * lambda - 1.0) * p_prev) / (mf + 1.0)
        };
        p_prev = p_cur;
        p_cur = next;
        at_one *= (mf + 2.0 * lambda) / (mf + 1.0);
        rp *= r;
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ComplexPoint;
    use num_complex::Complex64;

    #[test]
    fn constant_and_linear_terms() {
        assert_eq!(gegenbauer_eval(1.7, 0, 0.3).unwrap(), 1.0);
        assert!((gegenbauer_eval(1.7, 1, 0.3).unwrap() - 2.0 * 1.7 * 0.3).abs() < 1e-15);
        assert!(matches!(gegenbauer_eval(1.0, 3, 1.5), Err(LabError::Domain(_))));
    }

    /// Coefficient extraction from the power series of (1 − 2r c + r²)^{−1}
    /// by repeated multiplication with the geometric series of 2rc − r².
    fn series_coefficients_lambda_one(c: f64, m: usize) -> Vec<f64> {
        // 1/(1 − u) with u = 2c r − r²: coefficients b satisfy b_k = 2c b_{k−1} − b_{k−2}.
        let mut b = vec![0.0; m + 1];
        b[0] = 1.0;
        for k in 1..=m {
            b[k] = 2.0 * c * b[k - 1] - if k >= 2 { b[k - 2] } else { 0.0 };
        }
        b
    }

    #[test]
    fn lambda_one_is_chebyshev_second_kind() {
        let theta: f64 = 0.7;
        let v = gegenbauer_eval(1.0, 5, theta.cos()).unwrap();
        let oracle = series_coefficients_lambda_one(theta.cos(), 5)[5];
        assert!((v - oracle).abs() < 1e-13);
        assert!((v - (6.0 * theta).sin() / theta.sin()).abs() < 1e-13);
    }

    #[test]
    fn value_at_one_is_binomial() {
        for lam in [0.5, 1.0, 1.5, 2.0, 3.0] {
            for k in [0usize, 1, 5, 40, 200, 500] {
                let a = gegenbauer_at_one(lam, k).unwrap();
                let b = gegenbauer_eval(lam, k, 1.0).unwrap();
                assert!(((a - b) / a).abs() < 1e-10, "lam={lam} k={k}");
            }
        }
        for k in 0..50 {
            assert!((gegenbauer_at_one(1.0, k).unwrap() - (k + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn trig_form_matches_recurrence() {
        for lam in [1.0, 2.0, 0.5, 2.5] {
            for k in 0..=50 {
                for th in [0.1, 0.9, 1.7, 2.9] {
                    let a = gegenbauer_eval(lam, k, f64::cos(th)).unwrap();
                    let b = gegenbauer_trig_form(lam, k, th).unwrap();
                    assert!((a - b).abs() < 1e-9 * gegenbauer_at_one(lam, k).unwrap().max(1.0));
                }
            }
        }
    }

    #[test]
    fn alpha_positive_and_recursive() {
        let a = BinomialAlpha::build(1.5, 60).unwrap();
        assert_eq!(a.values[0], 1.0);
        assert!(a.values.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn partial_sum_examples() {
        assert_eq!(generating_partial_sum(1.0, 0.4, 1.0, 0).unwrap(), 1.0);
        let v = generating_partial_sum(1.0, 0.5, std::f64::consts::FRAC_PI_2, 60).unwrap();
        assert!((v - 1.0 / 1.25).abs() < 1e-10);
    }

    #[test]
    fn newtonian_examples() {
        let zeta = ComplexPoint::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        let zero = zeta.scale(0.0);
        assert!((newtonian_expansion(&zero, &zeta.scale(2.0), 5).unwrap() - 0.25).abs() < 1e-15);
        let z = zeta.scale(0.3);
        let v = newtonian_expansion(&z, &zeta, 80).unwrap();
        assert!((v - 1.0 / z.sub(&zeta).norm_sqr()).abs() < 1e-10);
        assert!(newtonian_expansion(&zeta.scale(1.5), &zeta, 3).is_err());
    }

    #[test]
    fn g_tail_examples() {
        let th = std::f64::consts::FRAC_PI_2;
        let (full, _) = g_series_tail(4, 0.5, th, 0, None).unwrap();
        assert!((full - g_function(4, 0.5, th)).abs() < 1e-13);
        // explicit Taylor subtraction with P_0, P_1, P_2 of λ = 2 at c = 0: 1, 0, −2
        let g = g_function(4, 0.5, th);
        let t2 = 1.0 + 0.0 * 0.5 - 2.0 * 0.25;
        let (tail, _) = g_series_tail(4, 0.5, th, 3, None).unwrap();
        assert!((tail - (g - t2) / 0.125).abs() < 1e-12);
        assert!(g_series_tail(4, 1.2, th, 3, None).is_err());
    }
}
