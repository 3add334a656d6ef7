use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sucp_lab::geometry::{sphere_grid, ComplexPoint};
use sucp_lab::kernels::carleman::SmoothCutoff;
use sucp_lab::kernels::truncated_kernel;
use sucp_lab::operator_lab::chi::{
    assemble_chi_kernel, assemble_cutoff_kernel, brute_force_norm, zonal_norm, ChiCutoff, ChiKind, ZonalResolution,
};
use sucp_lab::operator_lab::{product_assemble, schur_bound, spectral_norm, DiscretizedOperator};
use sucp_lab::suites::{product_space_trials, rank_one_tightness};

#[test]
fn spectral_norm_matches_dense_svd_at_fifty() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 50;
    let vals: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let k = DiscretizedOperator::from_real(n, n, &vals).unwrap();
    let svd = DMatrix::from_row_slice(n, n, &vals).singular_values().max();
    let s = spectral_norm(&k).unwrap();
    assert!((s - svd).abs() < 1e-9 * svd, "{s} vs {svd}");
}

#[test]
fn schur_bound_scales_linearly() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let vals: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let k = DiscretizedOperator::from_real(5, 6, &vals).unwrap();
    let (u, v) = (vec![1.0; 5], vec![1.0; 6]);
    let a = schur_bound(&k, &u, &v, 2.0).unwrap().upper;
    let b = schur_bound(&k.scaled(3.5), &u, &v, 2.0).unwrap().upper;
    assert!((b - 3.5 * a).abs() < 1e-12 * b);
}

#[test]
fn identity_like_kernel_is_bounded_by_schur() {
    let n: usize = 12;
    let vals: Vec<f64> = (0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.05 / (1 + (i / n).abs_diff(i % n)) as f64 }).collect();
    let k = DiscretizedOperator::from_real(n, n, &vals).unwrap();
    assert!(spectral_norm(&k).unwrap() <= schur_bound(&k, &vec![1.0; n], &vec![1.0; n], 2.0).unwrap().upper);
}

#[test]
fn rank_one_averaging_is_tight() {
    assert!((rank_one_tightness(32).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn product_assembly_cases() {
    // single shell: the radial kernel is the 1x1 block norm
    let block = DiscretizedOperator::from_real(2, 2, &[1.0, 2.0, 0.5, -1.0]).unwrap();
    let a = spectral_norm(&block).unwrap();
    let radial = DiscretizedOperator::new(vec![Complex64::new(a, 0.0)], vec![1.0], vec![1.0], 1).unwrap();
    assert!((product_assemble(&radial).unwrap().upper - a).abs() < 1e-12);

    // two shells, block diagonal with norms a, b
    let b = 0.7;
    let diag = DiscretizedOperator::from_real(2, 2, &[a, 0.0, 0.0, b]).unwrap();
    let mut full = vec![0.0; 16];
    let blk2 = [b, 0.0, 0.0, 0.3];
    for i in 0..2 {
        for j in 0..2 {
            full[i * 4 + j] = [1.0, 2.0, 0.5, -1.0][i * 2 + j];
            full[(i + 2) * 4 + j + 2] = blk2[i * 2 + j];
        }
    }
    let full = DiscretizedOperator::from_real(4, 4, &full).unwrap();
    let svd = spectral_norm(&full).unwrap();
    let est = product_assemble(&diag).unwrap().upper;
    assert!((est - a.max(b)).abs() < 1e-12);
    assert!((svd - est).abs() < 1e-9);

    let (violations, _) = product_space_trials(100, 5).unwrap();
    assert_eq!(violations, 0);
}

#[test]
fn disjoint_bands_have_disjoint_supports_and_add_linearly() {
    let g = sphere_grid(4, 6).unwrap();
    let (n, s, t) = (3, 0.8, 1.0);
    let b1 = ChiCutoff::new(ChiKind::Band, 0.1).unwrap();
    let b2 = ChiCutoff::new(ChiKind::Band, 0.4).unwrap();
    let k1 = assemble_chi_kernel(n, s, t, &b1, &g, &g).unwrap();
    let k2 = assemble_chi_kernel(n, s, t, &b2, &g, &g).unwrap();
    let sum = assemble_cutoff_kernel(n, s, t, &|x| b1.value_sin(x) + b2.value_sin(x), &g, &g).unwrap();
    let mut nonzero = 0;
    for ((a, b), c) in k1.matrix.iter().zip(&k2.matrix).zip(&sum.matrix) {
        assert!(a.norm() == 0.0 || b.norm() == 0.0);
        assert!((a + b - c).norm() <= 1e-12 * c.norm());
        nonzero += usize::from(c.norm() > 0.0);
    }
    assert!(nonzero > 0);
}

#[test]
fn equal_radii_kernel_moduli_are_symmetric() {
    let g = sphere_grid(4, 5).unwrap();
    let chi = ChiCutoff::new(ChiKind::Band, 0.3).unwrap();
    let k = assemble_chi_kernel(4, 1.0, 1.0, &chi, &g, &g).unwrap();
    let modulus = |i: usize, j: usize| (k.entry(i, 2 * j).norm_sqr() + k.entry(i, 2 * j + 1).norm_sqr()).sqrt();
    for i in 0..g.len() {
        for j in 0..i {
            let (a, b) = (modulus(i, j), modulus(j, i));
            assert!((a - b).abs() <= 1e-10 * a.max(b).max(1e-300), "({i},{j}): {a} vs {b}");
        }
    }
}

#[test]
fn entries_match_the_kernel_module() {
    let g = sphere_grid(4, 5).unwrap();
    let chi = ChiCutoff::new(ChiKind::Cap, 0.6).unwrap();
    let (n, s, t) = (3, 0.7, 1.0);
    let k = assemble_chi_kernel(n, s, t, &chi, &g, &g).unwrap();
    let cut = SmoothCutoff::new(n);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let (i, j) = (rng.gen_range(0..g.len()), rng.gen_range(0..g.len()));
        let z: Vec<f64> = g.nodes[i].iter().map(|x| x * s).collect();
        let w: Vec<f64> = g.nodes[j].iter().map(|x| x * t).collect();
        let cos: f64 = g.nodes[i].iter().zip(&g.nodes[j]).map(|(a, b)| a * b).sum();
        let dist = z.iter().zip(&w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let factor = chi.value_sin((1.0 - cos * cos).max(0.0).sqrt()) * cut.value(dist / t);
        let want = truncated_kernel(&ComplexPoint::from_real(&z).unwrap(), &ComplexPoint::from_real(&w).unwrap(), n).unwrap();
        for c in 0..2 {
            let expect = want.components[c] * factor;
            assert!((k.entry(i, 2 * j + c) - expect).norm() <= 1e-13 * (1.0 + expect.norm()));
        }
    }
}

#[test]
fn zonal_norm_matches_brute_force_assembly() {
    let g = sphere_grid(4, 18).unwrap();
    for (n, l, q, kind) in [(2usize, 0.5, 0.6, ChiKind::Band), (2, 0.3, 0.6, ChiKind::Cap), (3, 0.4, 1.0, ChiKind::Band)] {
        let chi = ChiCutoff::new(kind, l).unwrap();
        let z = zonal_norm(n, q, 1.0, &chi, &ZonalResolution::default()).unwrap().norm;
        let b = brute_force_norm(n, q, 1.0, &chi, &g).unwrap();
        assert!(z >= 0.0 && (z - b).abs() < 0.03 * z, "N={n} λ={l} {kind:?}: zonal {z} vs brute force {b}");
    }
}
