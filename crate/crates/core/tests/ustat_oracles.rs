mod common;

use common::*;
use mfd_glht::dataset::{FunctionalDataset, GroupSample};
use mfd_glht::dof::{self, cross_terms, k4_hat, ustat_within_fast, ustat_within_naive, DeltaKernels};
use mfd_glht::glht::{hn_matrix, ContrastSpec, GlhtMatrices};
use mfd_glht::grid::Grid;
use mfd_glht::moments::OmegaHat;
use mfd_glht::GlhtError;
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::time::Instant;

fn small_integer_dataset() -> FunctionalDataset {
    // n = 4, p = 1, M = 2.
    let vals = vec![1.0, 2.0, 3.0, 1.0, 0.0, 4.0, 2.0, 2.0];
    let g = GroupSample::new(4, 1, 2, vals).unwrap();
    FunctionalDataset::new(Grid::uniform(2, 0.0, 1.0).unwrap(), vec![g]).unwrap()
}

#[test]
fn hand_sized_example_matches_kernel_average() {
    let ds = small_integer_dataset();
    let w = ds.grid().weights();
    let om = OmegaHat::from_matrix(DMatrix::from_element(1, 1, 1.0)).unwrap();
    let (i, t, r) = kernel_ustats(ds.group(0), &om.inv, &w);
    let naive = ustat_within_naive(&ds, 0, &om, &w).unwrap();
    let fast = ustat_within_fast(&ds, 0, &om, &w).unwrap();
    for (got, want) in [(naive.i_hat, i), (naive.t_hat, t), (naive.tr_sigma2_hat, r), (fast.i_hat, i), (fast.t_hat, t), (fast.tr_sigma2_hat, r)] {
        assert!(rel_close(got, want, 1e-12), "{got} vs {want}");
    }
    // Scalar curves: tr(x)² = tr(x²).
    assert!(rel_close(naive.i_hat, naive.t_hat, 1e-12));
}

#[test]
fn naive_matches_kernel_average_on_random_data() {
    let mut r = rng(11);
    for &(n, p, m) in &[(4, 2, 3), (5, 3, 4), (6, 1, 5), (7, 2, 3)] {
        let ds = random_dataset(&mut r, &[n], p, m);
        let w = ds.grid().weights();
        let om = OmegaHat::from_matrix(random_spd(&mut r, p)).unwrap();
        let (i, t, tr) = kernel_ustats(ds.group(0), &om.inv, &w);
        let naive = ustat_within_naive(&ds, 0, &om, &w).unwrap();
        assert!(rel_close(naive.i_hat, i, 1e-10), "I: {} vs {i}", naive.i_hat);
        assert!(rel_close(naive.t_hat, t, 1e-10), "T: {} vs {t}", naive.t_hat);
        assert!(rel_close(naive.tr_sigma2_hat, tr, 1e-10), "tr: {} vs {tr}", naive.tr_sigma2_hat);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn fast_equals_naive(seed in any::<u64>(), n in 4usize..9, p in 1usize..4, m in 2usize..6) {
        let mut r = rng(seed);
        let ds = random_dataset(&mut r, &[n], p, m);
        let w = ds.grid().weights();
        let om = OmegaHat::from_matrix(random_spd(&mut r, p)).unwrap();
        let a = ustat_within_naive(&ds, 0, &om, &w).unwrap();
        let b = ustat_within_fast(&ds, 0, &om, &w).unwrap();
        let scale = a.tr_sigma2_hat.abs().max(a.i_hat.abs()).max(a.t_hat.abs());
        prop_assert!((a.i_hat - b.i_hat).abs() <= 1e-10 * scale, "I {} vs {}", a.i_hat, b.i_hat);
        prop_assert!((a.t_hat - b.t_hat).abs() <= 1e-10 * scale, "T {} vs {}", a.t_hat, b.t_hat);
        prop_assert!((a.tr_sigma2_hat - b.tr_sigma2_hat).abs() <= 1e-10 * scale);
    }

    #[test]
    fn estimates_are_location_invariant(seed in any::<u64>(), shift in -1e3f64..1e3) {
        let mut r = rng(seed);
        let ds = random_dataset(&mut r, &[6], 2, 4);
        let w = ds.grid().weights();
        let om = OmegaHat::from_matrix(random_spd(&mut r, 2)).unwrap();
        let b: Vec<f64> = (0..2 * 4).map(|j| shift * (1.0 + j as f64)).collect();
        let moved = ds.affine(&DMatrix::identity(2, 2), &b).unwrap();
        let a = ustat_within_fast(&ds, 0, &om, &w).unwrap();
        let c = ustat_within_fast(&moved, 0, &om, &w).unwrap();
        let scale = a.tr_sigma2_hat.abs();
        prop_assert!((a.i_hat - c.i_hat).abs() <= 1e-8 * scale);
        prop_assert!((a.t_hat - c.t_hat).abs() <= 1e-8 * scale);
        prop_assert!((a.tr_sigma2_hat - c.tr_sigma2_hat).abs() <= 1e-8 * scale);
    }
}

#[test]
fn identical_curves_give_zero() {
    let g = GroupSample::from_fn(5, 2, 3, |_, l, t| (l + 2 * t) as f64);
    let ds = FunctionalDataset::new(Grid::uniform(3, 0.0, 1.0).unwrap(), vec![g]).unwrap();
    let w = ds.grid().weights();
    let om = OmegaHat::from_matrix(DMatrix::identity(2, 2)).unwrap();
    for u in [ustat_within_naive(&ds, 0, &om, &w).unwrap(), ustat_within_fast(&ds, 0, &om, &w).unwrap()] {
        assert_eq!((u.i_hat, u.t_hat, u.tr_sigma2_hat), (0.0, 0.0, 0.0));
    }
}

#[test]
fn scaling_data_by_c_scales_by_c4() {
    let mut r = rng(5);
    let ds = random_dataset(&mut r, &[6], 2, 3);
    let w = ds.grid().weights();
    let om = OmegaHat::from_matrix(random_spd(&mut r, 2)).unwrap();
    let c = 1.7;
    let scaled = ds.affine(&(DMatrix::identity(2, 2) * c), &[0.0; 6]).unwrap();
    let a = ustat_within_fast(&ds, 0, &om, &w).unwrap();
    let b = ustat_within_fast(&scaled, 0, &om, &w).unwrap();
    let c4 = c.powi(4);
    assert!(rel_close(b.i_hat, c4 * a.i_hat, 1e-12));
    assert!(rel_close(b.t_hat, c4 * a.t_hat, 1e-12));
    assert!(rel_close(b.tr_sigma2_hat, c4 * a.tr_sigma2_hat, 1e-12));
}

#[test]
fn too_few_observations_is_rejected() {
    let mut r = rng(1);
    let ds = random_dataset(&mut r, &[3], 2, 3);
    let w = ds.grid().weights();
    let om = OmegaHat::from_matrix(DMatrix::identity(2, 2)).unwrap();
    for res in [ustat_within_naive(&ds, 0, &om, &w), ustat_within_fast(&ds, 0, &om, &w)] {
        assert!(matches!(res, Err(GlhtError::InsufficientReplication { n: 3, required: 4, .. })));
    }
}

#[test]
fn delta_table_and_on_demand_agree() {
    let mut r = rng(9);
    let ds = random_dataset(&mut r, &[5], 2, 4);
    let winv = random_spd(&mut r, 2);
    let full = DeltaKernels::new(ds.group(0), &winv).unwrap();
    let lazy = DeltaKernels::with_cap(ds.group(0), &winv, 0).unwrap();
    assert!(full.is_materialized() && !lazy.is_materialized());
    let g = ds.group(0);
    for (a, b, s, t) in [(0, 1, 2, 3), (4, 2, 0, 0), (3, 3, 1, 2)] {
        let mut want = 0.0;
        for l in 0..2 {
            for m in 0..2 {
                want += g.value(a, l, s) * winv[(l, m)] * g.value(b, m, t);
            }
        }
        assert!(rel_close(full.delta(a, b, s, t), want, 1e-13));
        assert_eq!(full.delta(a, b, s, t), lazy.delta(a, b, s, t));
    }
}

#[test]
fn k4_matches_direct_evaluation() {
    let mut r = rng(21);
    let ds = random_dataset(&mut r, &[7], 3, 5);
    let w = ds.grid().weights();
    let om = OmegaHat::from_matrix(random_spd(&mut r, 3)).unwrap();
    let tri = ustat_within_naive(&ds, 0, &om, &w).unwrap();
    let got = k4_hat(&ds, 0, &om, &w, &tri).unwrap();
    let want = k4_first_term(ds.group(0), &om.inv, &w) - tri.tr_sigma2_hat - tri.i_hat - tri.t_hat;
    assert!((got - want).abs() <= 1e-10 * k4_first_term(ds.group(0), &om.inv, &w));
}

#[test]
fn cross_terms_match_dense_covariances() {
    let mut r = rng(33);
    let ds = random_dataset(&mut r, &[5, 8], 3, 4);
    let w = ds.grid().weights();
    let om = OmegaHat::from_matrix(random_spd(&mut r, 3)).unwrap();
    let (i12, t12) = cross_terms(&ds, 0, 1, &om, &w).unwrap();
    let (i_want, t_want) = dense_cross(ds.group(0), ds.group(1), &om.inv, &w);
    assert!(rel_close(i12, i_want, 1e-11), "{i12} vs {i_want}");
    assert!(rel_close(t12, t_want, 1e-11), "{t12} vs {t_want}");
    let (i21, t21) = cross_terms(&ds, 1, 0, &om, &w).unwrap();
    assert!(rel_close(i12, i21, 1e-13) && rel_close(t12, t21, 1e-13));
    assert!(cross_terms(&ds, 1, 1, &om, &w).is_err());
}

#[test]
fn cross_terms_vanish_for_constant_group() {
    let mut r = rng(4);
    let mut ds = random_dataset(&mut r, &[5, 5], 2, 3);
    let flat = GroupSample::from_fn(5, 2, 3, |_, _, _| 2.5);
    ds = FunctionalDataset::new(ds.grid().clone(), vec![ds.group(0).clone(), flat]).unwrap();
    let w = ds.grid().weights();
    let om = OmegaHat::from_matrix(DMatrix::identity(2, 2)).unwrap();
    assert_eq!(cross_terms(&ds, 0, 1, &om, &w).unwrap(), (0.0, 0.0));
}

#[test]
fn dof_pipeline_matches_oracle_assembly() {
    let mut r = rng(77);
    let sizes = [5, 6, 7];
    let ds = random_dataset(&mut r, &sizes, 2, 4);
    let w = ds.grid().weights();
    let spec = ContrastSpec::one_way(3).unwrap();
    let mats = GlhtMatrices::compute(&ds, &spec, &w).unwrap();
    let est = dof::dof_estimates(&ds, &spec, &w).unwrap();
    let hn = hn_matrix(spec.c(), &sizes).unwrap();

    let (mut den_b, mut den_e) = (0.0, 0.0);
    for i in 0..3 {
        let (ih, th, trh) = kernel_ustats(ds.group(i), &mats.omega.inv, &w);
        let k4 = k4_first_term(ds.group(i), &mats.omega.inv, &w) - trh - ih - th;
        let n = sizes[i] as f64;
        let h2 = hn[(i, i)].powi(2);
        den_b += (h2 * (k4 / n.powi(3) + (ih + th) / n.powi(2))).max(0.0);
        den_e += (h2 * (k4 / n.powi(3) + (ih + th) / (n * n * (n - 1.0)))).max(0.0);
        let within = est.within[i].unwrap();
        assert!(rel_close(within.k4_hat, k4, 1e-9) || (within.k4_hat - k4).abs() < 1e-9 * trh);
        for j in 0..3 {
            if j != i {
                let (ic, tc) = dense_cross(ds.group(i), ds.group(j), &mats.omega.inv, &w);
                den_b += hn[(i, j)].powi(2) * (ic + tc) / (n * sizes[j] as f64);
            }
        }
    }
    assert!(rel_close(est.d_b, 6.0 / den_b, 1e-9), "{} vs {}", est.d_b, 6.0 / den_b);
    assert!(rel_close(est.d_e, 6.0 / den_e, 1e-9), "{} vs {}", est.d_e, 6.0 / den_e);
    assert_eq!(est.cross.len(), 3);
}

#[test]
fn fast_path_handles_benchmark_sized_groups_quickly() {
    let mut r = rng(2);
    let ds = random_dataset(&mut r, &[30, 30, 30], 6, 80);
    let w = ds.grid().weights();
    let spec = ContrastSpec::one_way(3).unwrap();
    let start = Instant::now();
    let est = dof::dof_estimates(&ds, &spec, &w).unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert!(est.d_b > 0.0 && est.d_e > 0.0);
    assert!(secs < 1.0, "took {secs:.3}s");
}
