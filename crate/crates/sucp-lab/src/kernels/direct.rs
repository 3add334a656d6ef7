//! Double-double evaluation of the Bochner–Martinelli kernel, its Taylor
//! polynomial at z = 0 (zonal route) and the defining form of I^N.

use num_complex::Complex64;
use twofloat::TwoFloat;

type Dd = TwoFloat;

fn dot(a: &[f64], b: &[f64]) -> Dd {
    a.iter().zip(b).fold(Dd::from(0.0), |acc, (x, y)| acc + Dd::new_mul(*x, *y))
}

/// Real coefficients (A, B) with
/// |ζ|^{d−2} P_j^{N−1}(z, ζ) · (d−2)/2 = A conj(z_j) + B conj(ζ_j),
/// together with the dd moduli needed by callers.
pub(crate) struct TaylorCoefficients {
    pub a_z: Dd,
    pub a_zeta: Dd,
    pub zeta_norm_sq: Dd,
    pub z_norm_sq: Dd,
    pub inner: Dd,
}

/// Zonal-route Taylor data. `z` and `zeta` are real coordinate vectors.
///
/// With λ = (d−2)/2, c = cos θ, r = |z|/|ζ| and P′_m = 2λ P^{(λ+1)}_{m−1}:
/// A = (2|ζ|²)^{−1} Σ_{m=2}^{N} r^{m−2}(m P_m(c) − c P′_m(c)),
/// B = (2|ζ|²)^{−1} Σ_{m=1}^{N} r^{m−1} P′_m(c).
pub(crate) fn taylor_coefficients(z: &[f64], zeta: &[f64], n_trunc: usize) -> TaylorCoefficients {
    let d = z.len();
    let lambda = (d as f64 - 2.0) / 2.0;
    let zz = dot(z, z);
    let ww = dot(zeta, zeta);
    let zw = dot(z, zeta);
    let z_zero = zz.hi() == 0.0;
    let (r, c) = if z_zero {
        (Dd::from(0.0), Dd::from(0.0))
    } else {
        let zn = zz.sqrt();
        let wn = ww.sqrt();
        (zn / wn, zw / (zn * wn))
    };
    // P^{(λ)}_m(c) for m = 0..N and P^{(λ+1)}_{m}(c) for m = 0..N−1
    let mut p = Vec::with_capacity(n_trunc + 1);
    let mut q = Vec::with_capacity(n_trunc + 1);
    p.push(Dd::from(1.0));
    q.push(Dd::from(1.0));
    if n_trunc >= 1 {
        p.push(c * (2.0 * lambda));
        q.push(c * (2.0 * (lambda + 1.0)));
    }
    for m in 1..n_trunc {
        let mf = m as f64;
        let pn = (c * p[m] * (2.0 * (mf + lambda)) - p[m - 1] * (mf + 2.0 * lambda - 1.0)) / (mf + 1.0);
        p.push(pn);
        let l1 = lambda + 1.0;
        let qn = (c * q[m] * (2.0 * (mf + l1)) - q[m - 1] * (mf + 2.0 * l1 - 1.0)) / (mf + 1.0);
        q.push(qn);
    }
    let mut sum_a = Dd::from(0.0);
    let mut sum_b = Dd::from(0.0);
    let mut rp = Dd::from(1.0); // r^{m−1}
    for m in 1..=n_trunc {
        let dp = q[m - 1] * (2.0 * lambda);
        sum_b += rp * dp;
        rp *= r;
    }
    let mut rq = Dd::from(1.0); // r^{m−2}
    for m in 2..=n_trunc {
        let dp = q[m - 1] * (2.0 * lambda);
        sum_a += rq * (p[m] * m as f64 - c * dp);
        rq *= r;
    }
    let denom = ww * 2.0;
    TaylorCoefficients { a_z: sum_a / denom, a_zeta: sum_b / denom, zeta_norm_sq: ww, z_norm_sq: zz, inner: zw }
}

fn dd_pow(x: Dd, e: i32) -> Dd {
    if e == 0 {
        Dd::from(1.0)
    } else {
        x.powi(e)
    }
}

/// Components of P_j^{N−1}(z, ζ) as f64.
pub(crate) fn taylor_components(z: &[f64], zeta: &[f64], n_trunc: usize) -> Vec<Complex64> {
    let d = z.len();
    let tc = taylor_coefficients(z, zeta, n_trunc);
    let kappa = 2.0 / (d as f64 - 2.0);
    // |ζ|^{2−d} = (|ζ|²)^{(2−d)/2}
    let scale = dd_pow(tc.zeta_norm_sq, -(d as i32 - 2) / 2) * kappa;
    let az = tc.a_z * scale;
    let aw = tc.a_zeta * scale;
    (0..d / 2)
        .map(|j| {
            let (zr, zi) = (z[2 * j], z[2 * j + 1]);
            let (wr, wi) = (zeta[2 * j], zeta[2 * j + 1]);
            let re = az * zr + aw * wr;
            let im = -(az * zi + aw * wi);
            Complex64::new(re.hi() + re.lo(), im.hi() + im.lo())
        })
        .collect()
}

/// I_j^N(z, ζ) = (|ζ|/|z|)^N |ζ|^{d−1}(B_j − P_j^{N−1}) in double-double.
pub(crate) fn truncated_direct_components(z: &[f64], zeta: &[f64], n_trunc: usize) -> Vec<Complex64> {
    let d = z.len();
    let tc = taylor_coefficients(z, zeta, n_trunc);
    let dist_sq = tc.zeta_norm_sq + tc.z_norm_sq - tc.inner * 2.0;
    // γ = |ζ − z|^{−d}
    let gamma = dd_pow(dist_sq, -(d as i32) / 2);
    let (cz, cw) = if n_trunc == 0 {
        (-gamma, gamma)
    } else {
        let kappa = 2.0 / (d as f64 - 2.0);
        let scale = dd_pow(tc.zeta_norm_sq, -(d as i32 - 2) / 2) * kappa;
        (-gamma - tc.a_z * scale, gamma - tc.a_zeta * scale)
    };
    // (|ζ|/|z|)^N |ζ|^{d−1} = |ζ|^{N+d−1} / |z|^N
    let wn = tc.zeta_norm_sq.sqrt();
    let zn = tc.z_norm_sq.sqrt();
    let pref = dd_pow(wn, (n_trunc + d - 1) as i32) / dd_pow(zn, n_trunc as i32);
    let cz = cz * pref;
    let cw = cw * pref;
    (0..d / 2)
        .map(|j| {
            let (zr, zi) = (z[2 * j], z[2 * j + 1]);
            let (wr, wi) = (zeta[2 * j], zeta[2 * j + 1]);
            let re = cz * zr + cw * wr;
            let im = -(cz * zi + cw * wi);
            Complex64::new(re.hi() + re.lo(), im.hi() + im.lo())
        })
        .collect()
}

/// r^{−M}(g − T^{M−1}g) by explicit Taylor subtraction in double-double.
pub(crate) fn g_tail_direct(d: usize, r: f64, theta: f64, m_trunc: usize) -> f64 {
    let lambda = d as f64 / 2.0;
    let c = Dd::from(theta.cos());
    let r_dd = Dd::from(r);
    let base = Dd::from(1.0) - r_dd * c * 2.0 + r_dd * r_dd;
    let g = dd_pow(base, -(d as i32) / 2);
    let mut t = Dd::from(0.0);
    let (mut p_prev, mut p_cur) = (Dd::from(0.0), Dd::from(1.0));
    let mut rp = Dd::from(1.0);
    for m in 0..m_trunc {
        t += p_cur * rp;
        let mf = m as f64;
        let next = if m == 0 {
            c * (2.0 * lambda)
        } else {
            (c * p_cur * (2.0 * (mf + lambda)) - p_prev * (mf + 2.0 * lambda - 1.0)) / (mf + 1.0)
        };
        p_prev = p_cur;
        p_cur = next;
        rp *= r_dd;
    }
    let v = (g - t) / dd_pow(r_dd, m_trunc as i32);
    v.hi() + v.lo()
}
