//! Label-permutation p-values, used to cross-check the F-approximations.

use crate::dataset::FunctionalDataset;
use crate::dof::dof_from_matrices;
use crate::error::{GlhtError, Result};
use crate::glht::{ContrastSpec, GlhtMatrices};
use crate::stats::statistics;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    Mfw,
    Mflh,
    Mfp,
}

/// The chosen statistic oriented so that larger means more evidence.
fn evidence(ds: &FunctionalDataset, spec: &ContrastSpec, d_b: f64, d_e: f64, which: Statistic) -> Result<f64> {
    let w = ds.grid().weights();
    let m = GlhtMatrices::compute(ds, spec, &w)?;
    let s = statistics(&(&m.bn * d_b), &(&m.en * d_e))?;
    Ok(match which {
        Statistic::Mfw => 1.0 - s.mfw,
        Statistic::Mflh => s.mflh,
        Statistic::Mfp => s.mfp,
    })
}

/// p = (1 + #{permuted ≥ observed}) / (B + 1), permuting group labels with
/// the degrees of freedom fixed at their observed-data estimates.
pub fn permutation_pvalue(ds: &FunctionalDataset, spec: &ContrastSpec, which: Statistic, b: usize, seed: u64) -> Result<f64> {
    if b < 99 {
        return Err(GlhtError::InvalidArgument(format!("need at least 99 permutations, got {b}")));
    }
    if !spec.is_pure_contrast() {
        return Err(GlhtError::InvalidArgument("permutation oracle needs a pure contrast (C 1 = 0)".into()));
    }
    let w = ds.grid().weights();
    let mats = GlhtMatrices::compute(ds, spec, &w)?;
    let dof = dof_from_matrices(ds, &mats, &w)?;
    let observed = evidence(ds, spec, dof.d_b, dof.d_e, which)?;
    let sizes = ds.sizes();
    let mut order: Vec<usize> = (0..ds.total_n()).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut count = 0usize;
    for _ in 0..b {
        order.shuffle(&mut rng);
        let perm = ds.regroup(&order, &sizes)?;
        // A degenerate relabelling counts as not exceeding the observed value.
        if let Ok(v) = evidence(&perm, spec, dof.d_b, dof.d_e, which) {
            if v >= observed {
                count += 1;
            }
        }
    }
    Ok((1 + count) as f64 / (b + 1) as f64)
}
