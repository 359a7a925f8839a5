mod common;

use common::*;
use mfd_glht::dataset::{load_csv, write_csv, LoadOptions};
use mfd_glht::glht::{e_matrix, hn_matrix, ContrastSpec, GlhtMatrices};
use mfd_glht::moments::{inv_sqrt_spd, omega_hat, sigma_hat, IntegratedCov, PD_REL_TOL};
use nalgebra::DMatrix;
use rand::Rng;

fn max_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / a.amax().max(b.amax()).max(1e-300)
}

#[test]
fn one_way_hn_has_closed_form() {
    let n = [7usize, 9, 12, 5];
    let total: usize = n.iter().sum();
    let hn = hn_matrix(ContrastSpec::one_way(4).unwrap().c(), &n).unwrap();
    for a in 0..4 {
        for b in 0..4 {
            let want = if a == b {
                (n[a] * (total - n[a])) as f64 / total as f64
            } else {
                -((n[a] * n[b]) as f64) / total as f64
            };
            assert!((hn[(a, b)] - want).abs() < 1e-12 * want.abs().max(1.0));
        }
    }
}

#[test]
fn one_way_b_and_e_match_grand_mean_forms() {
    let mut r = rng(3);
    let sizes = [5, 8, 6];
    let ds = random_dataset(&mut r, &sizes, 3, 7);
    let w = ds.grid().weights();
    let mats = GlhtMatrices::compute(&ds, &ContrastSpec::one_way(3).unwrap(), &w).unwrap();
    let (p, m) = (3, 7);
    let total: usize = sizes.iter().sum();

    let mut b_direct = DMatrix::zeros(p, p);
    let mut e_direct = DMatrix::zeros(p, p);
    for t in 0..m {
        let grand: Vec<f64> = (0..p)
            .map(|l| ds.groups().iter().map(|g| (0..g.n()).map(|j| g.value(j, l, t)).sum::<f64>()).sum::<f64>() / total as f64)
            .collect();
        for g in ds.groups() {
            let ni = g.n() as f64;
            let gm: Vec<f64> = (0..p).map(|l| (0..g.n()).map(|j| g.value(j, l, t)).sum::<f64>() / ni).collect();
            let factor = (total - g.n()) as f64 / (total as f64 * (ni - 1.0));
            for a in 0..p {
                for b in 0..p {
                    b_direct[(a, b)] += w[t] * ni * (gm[a] - grand[a]) * (gm[b] - grand[b]);
                    for j in 0..g.n() {
                        e_direct[(a, b)] += w[t] * factor * (g.value(j, a, t) - gm[a]) * (g.value(j, b, t) - gm[b]);
                    }
                }
            }
        }
    }
    assert!(max_rel(&mats.bn, &b_direct) < 1e-11, "B: {}", max_rel(&mats.bn, &b_direct));
    assert!(max_rel(&mats.en, &e_direct) < 1e-11, "E: {}", max_rel(&mats.en, &e_direct));
    assert!(max_rel(&mats.en, &mats.omega.omega) < 1e-14);
}

#[test]
fn contrast_transformation_leaves_matrices_unchanged() {
    let mut r = rng(8);
    for _ in 0..20 {
        let ds = random_dataset(&mut r, &[5, 6, 4, 7], 2, 5);
        let w = ds.grid().weights();
        let c0: Vec<f64> = (0..3 * 2 * 5).map(|_| r.random_range(-1.0..1.0)).collect();
        let base = ContrastSpec::new(ContrastSpec::one_way(4).unwrap().c().clone(), Some(c0)).unwrap();
        let moved = base.transformed(&random_nonsingular(&mut r, 3)).unwrap();
        let a = GlhtMatrices::compute(&ds, &base, &w).unwrap();
        let b = GlhtMatrices::compute(&ds, &moved, &w).unwrap();
        assert!(max_rel(&a.hn, &b.hn) < 1e-9);
        assert!(max_rel(&a.bn, &b.bn) < 1e-9);
        assert!(max_rel(&a.en, &b.en) < 1e-9);
    }
}

#[test]
fn affine_maps_act_by_congruence() {
    let mut r = rng(12);
    let ds = random_dataset(&mut r, &[5, 6, 7], 3, 6);
    let w = ds.grid().weights();
    let spec = ContrastSpec::one_way(3).unwrap();
    let a = random_nonsingular(&mut r, 3);
    let b: Vec<f64> = (0..3 * 6).map(|_| r.random_range(-5.0..5.0)).collect();
    let base = GlhtMatrices::compute(&ds, &spec, &w).unwrap();
    let moved = GlhtMatrices::compute(&ds.affine(&a, &b).unwrap(), &spec, &w).unwrap();
    let at = a.transpose();
    assert!(max_rel(&(&a * &base.bn * &at), &moved.bn) < 1e-10);
    assert!(max_rel(&(&a * &base.en * &at), &moved.en) < 1e-10);
    assert!(max_rel(&(&a * &base.omega.omega * &at), &moved.omega.omega) < 1e-10);
}

#[test]
fn e_matrix_for_single_group_is_scaled_sigma() {
    let mut r = rng(13);
    let ds = random_dataset(&mut r, &[6], 2, 4);
    let w = ds.grid().weights();
    let spec = ContrastSpec::new(DMatrix::from_element(1, 1, 1.0), None).unwrap();
    let mats = GlhtMatrices::compute(&ds, &spec, &w).unwrap();
    let s = sigma_hat(&ds, 0, &w).unwrap();
    // C = (1) gives h₁₁ = n₁, so E_n = Σ̂₁.
    assert!((mats.hn[(0, 0)] - 6.0).abs() < 1e-12);
    assert!(max_rel(&mats.en, &s.sigma) < 1e-14);
    let en = e_matrix(std::slice::from_ref(&s), &DMatrix::from_element(1, 1, 1.0), &[6]).unwrap();
    assert!(max_rel(&en, &(&s.sigma / 6.0)) < 1e-14);
}

#[test]
fn omega_scales_by_congruence_and_inv_sqrt_commutes() {
    let mut r = rng(14);
    let sig: Vec<IntegratedCov> = (0..3).map(|_| IntegratedCov { sigma: random_spd(&mut r, 3) }).collect();
    let (h, n) = ([0.6, 1.2, 0.9], [5usize, 7, 9]);
    let base = omega_hat(&sig, &h, &n).unwrap();
    let a = random_nonsingular(&mut r, 3);
    let moved: Vec<IntegratedCov> = sig.iter().map(|s| IntegratedCov { sigma: &a * &s.sigma * a.transpose() }).collect();
    let om = omega_hat(&moved, &h, &n).unwrap();
    assert!(max_rel(&(&a * &base.omega * a.transpose()), &om.omega) < 1e-12);

    let x = random_spd(&mut r, 4);
    let y = inv_sqrt_spd(&x, PD_REL_TOL).unwrap();
    assert!((&y * &x - &x * &y).amax() <= 1e-9 * x.amax());
    assert!(max_rel(&(&y * &x * &y), &DMatrix::identity(4, 4)) < 1e-10);
}

#[test]
fn csv_round_trip_preserves_values() {
    let mut r = rng(15);
    let ds = random_dataset(&mut r, &[4, 5], 2, 3);
    let mut buf = Vec::new();
    write_csv(&ds, &mut buf).unwrap();
    let back = load_csv(buf.as_slice(), &LoadOptions::default()).unwrap();
    assert_eq!(back.sizes(), ds.sizes());
    assert_eq!(back.grid().points(), ds.grid().points());
    for (g, h) in ds.groups().iter().zip(back.groups()) {
        assert_eq!(g.values(), h.values());
    }
}
