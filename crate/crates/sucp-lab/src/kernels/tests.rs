use super::*;

fn pt(x: &[f64]) -> ComplexPoint {
    ComplexPoint::from_real(x).unwrap()
}

fn pair_at(r: f64, theta: f64) -> (ComplexPoint, ComplexPoint) {
    let zeta = pt(&[0.3, -0.5, 0.7, 0.2]).scale(1.0 / 0.87f64.sqrt());
    let e = zeta.to_real();
    // unit vector orthogonal to zeta in R^4
    let mut v = vec![0.4, 0.6, 0.1, -0.3];
    let dot: f64 = v.iter().zip(&e).map(|(a, b)| a * b).sum();
    for (vi, ei) in v.iter_mut().zip(&e) {
        *vi -= dot * ei;
    }
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let z: Vec<f64> = e.iter().zip(&v).map(|(a, b)| r * (theta.cos() * a + theta.sin() * b / nv)).collect();
    (pt(&z), pt(&e))
}

#[test]
fn bm_kernel_example() {
    let z = pt(&[0.0, 0.0, 0.0, 0.0]);
    let zeta = pt(&[1.0, 0.0, 0.0, 0.0]);
    let b = bm_kernel(&z, &zeta).unwrap();
    assert!((b.components[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    assert!(b.components[1].norm() < 1e-15);
    assert!(matches!(bm_kernel(&zeta, &zeta), Err(LabError::Singularity(_))));
}

#[test]
fn taylor_kernel_matches_finite_difference_oracle() {
    // degree-1 Taylor polynomial: B(0) + linear part from central differences
    let zeta = pt(&[0.9, -0.3, 0.4, 0.5]);
    let z = pt(&[0.02, 0.01, -0.015, 0.005]);
    let b0 = bm_kernel(&pt(&[0.0; 4]), &zeta).unwrap();
    let h = 1e-5;
    let zr = z.to_real();
    let mut lin = vec![Complex64::new(0.0, 0.0); 2];
    for k in 0..4 {
        let mut e = vec![0.0; 4];
        e[k] = h;
        let p = bm_kernel(&pt(&e), &zeta).unwrap();
        e[k] = -h;
        let m = bm_kernel(&pt(&e), &zeta).unwrap();
        for j in 0..2 {
            lin[j] += (p.components[j] - m.components[j]) / (2.0 * h) * zr[k];
        }
    }
    let t2 = taylor_kernel(&z, &zeta, 2).unwrap();
    for j in 0..2 {
        let want = b0.components[j] + lin[j];
        assert!((t2.components[j] - want).norm() < 1e-8, "{j}: {} vs {}", t2.components[j], want);
    }
    let t1 = taylor_kernel(&z, &zeta, 1).unwrap();
    for j in 0..2 {
        assert!((t1.components[j] - b0.components[j]).norm() < 1e-14);
    }
}

#[test]
fn taylor_kernel_converges_to_bm() {
    let (z, zeta) = pair_at(0.3, 1.0);
    let b = bm_kernel(&z, &zeta).unwrap();
    let t = taylor_kernel(&z, &zeta, 40).unwrap();
    assert!(t.relative_error(&b) < 1e-13);
}

#[test]
fn h_j1_simplifies() {
    let z = pt(&[0.3, -0.1, 0.2, 0.4]);
    let zeta = pt(&[-0.5, 0.6, 0.1, 0.9]);
    let h = h_j1(&z, &zeta);
    let t = zeta.norm();
    for (hj, wj) in h.iter().zip(&zeta.coords) {
        assert!((hj + wj.conj() / (2.0 * t)).norm() < 1e-15);
    }
    let s: f64 = h_j2(&z).iter().map(|c| c.norm_sqr()).sum();
    assert!((s - 0.25).abs() < 1e-15);
}

#[test]
fn closed_form_agrees_with_definition_series_region() {
    for &(r, th, n) in &[(0.5, 0.7, 1usize), (0.5, 0.7, 3), (0.8, 2.0, 6), (0.9, 0.2, 10), (0.3, 3.0, 2)] {
        let (z, zeta) = pair_at(r, th);
        let a = truncated_kernel_direct(&z, &zeta, n).unwrap();
        let c = truncated_kernel_closed(&z, &zeta, n).unwrap();
        assert_eq!(c.path, KernelPath::ClosedForm);
        let e = c.relative_error(&a);
        assert!(e < 1e-10, "r={r} θ={th} N={n}: {e}");
    }
}

#[test]
fn closed_form_agrees_with_definition_residue_region() {
    for &(r, th, n) in &[(0.98, 1.0, 8usize), (1.0, 0.5, 12), (1.2, 2.0, 20), (1.05, 1.5, 30)] {
        let (z, zeta) = pair_at(r, th);
        let a = truncated_kernel_direct(&z, &zeta, n).unwrap();
        let c = truncated_kernel_closed(&z, &zeta, n).unwrap();
        assert_eq!(c.path, KernelPath::Residue);
        let e = c.relative_error(&a);
        assert!(e < 1e-8, "r={r} θ={th} N={n}: {e}");
    }
}

#[test]
fn closed_form_refuses_near_axis_at_large_r() {
    let (z, zeta) = pair_at(1.1, 0.01);
    assert!(matches!(truncated_kernel_closed(&z, &zeta, 10), Err(LabError::Uncomputable(_))));
    let auto = truncated_kernel(&z, &zeta, 10).unwrap();
    assert_eq!(auto.path, KernelPath::Direct);
}

#[test]
fn taylor_kernel_is_dbar_closed_in_zeta() {
    // Σ_j ∂/∂ζ̄_j of the coefficients vanishes: each Taylor coefficient in z
    // of a ∂̄_ζ-closed form is ∂̄_ζ-closed.
    let (z, zeta) = pair_at(0.6, 1.2);
    let h = 1e-5;
    let wr = zeta.to_real();
    for n in [1usize, 3, 5] {
        let mut div = Complex64::new(0.0, 0.0);
        for j in 0..2 {
            for (k, fac) in [(2 * j, Complex64::new(0.5, 0.0)), (2 * j + 1, Complex64::new(0.0, 0.5))] {
                let mut p = wr.clone();
                p[k] += h;
                let mut m = wr.clone();
                m[k] -= h;
                let kp = taylor_kernel(&z, &pt(&p), n).unwrap().components[j];
                let km = taylor_kernel(&z, &pt(&m), n).unwrap().components[j];
                div += fac * (kp - km) / (2.0 * h);
            }
        }
        let scale = taylor_kernel(&z, &zeta, n).unwrap().norm();
        assert!(div.norm() < 1e-7 * scale, "N={n}: divergence {}", div.norm());
    }
}

#[test]
fn direct_path_flags_precision_regime() {
    let (z, zeta) = pair_at(0.97, 1.0);
    assert!(truncated_kernel_direct(&z, &zeta, 13).unwrap().precision_warning);
    assert!(!truncated_kernel_direct(&z, &zeta, 12).unwrap().precision_warning);
}

#[test]
fn split_sums_to_l_nu() {
    let (z, zeta) = pair_at(0.7, 1.0);
    let osc = OsculationData::new(5.0, 4).unwrap();
    let cut = SmoothCutoff::new(osc.n);
    let l = l_nu_kernel(&z, &zeta, &osc).unwrap();
    let (m, nn) = split_m_n(&z, &zeta, &osc, &cut).unwrap();
    for j in 0..2 {
        assert!((m.components[j] + nn.components[j] - l.components[j]).norm() < 1e-14 * l.norm());
    }
}
