//! Degrees-of-freedom estimation for the Wishart approximations of B_n and
//! E_n.
//!
//! Within-group trace functionals are estimated by three-term U-statistics.
//! [`ustat_within_naive`] enumerates distinct index tuples literally;
//! [`ustat_within_fast`] computes the same numbers in quadratic time (see
//! [`fast`]). Between-group terms are plug-in products of independent sample
//! covariances.

mod fast;
mod kernels;
mod naive;
mod truth;

pub use kernels::{DeltaKernels, DEFAULT_KERNEL_CAP_BYTES};
pub use naive::ustat_within_naive;
pub use truth::{true_dof, true_moments, CovarianceModel, DenseCov, SeparableCov, TrueDof, TrueMoments};

use crate::dataset::FunctionalDataset;
use crate::error::{GlhtError, Result};
use crate::glht::{ContrastSpec, GlhtMatrices};
use crate::grid::QuadWeights;
use crate::moments::OmegaHat;
use kernels::Standardized;
use serde::Serialize;

/// Î*, T̂* and the estimate of tr(Σ*²) for one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UStatTriple {
    pub i_hat: f64,
    pub t_hat: f64,
    pub tr_sigma2_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WithinGroupUStats {
    pub i_hat: f64,
    pub t_hat: f64,
    pub tr_sigma2_hat: f64,
    pub k4_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossTerm {
    pub i1: usize,
    pub i2: usize,
    pub i_hat: f64,
    pub t_hat: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DofDiagnostics {
    /// Groups (1-based) whose d_B summand was negative and clamped to 0.
    pub clamped_b: Vec<usize>,
    /// Groups (1-based) whose d_E summand was negative and clamped to 0.
    pub clamped_e: Vec<usize>,
    /// Groups (1-based) with h_ii = 0; they do not enter the hypothesis.
    pub inactive_groups: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DofEstimate {
    pub d_b: f64,
    pub d_e: f64,
    /// Per-group statistics; `None` for inactive groups.
    pub within: Vec<Option<WithinGroupUStats>>,
    pub cross: Vec<CrossTerm>,
    pub diagnostics: DofDiagnostics,
}

fn require(ds: &FunctionalDataset, i: usize, min: usize) -> Result<()> {
    if i >= ds.k() {
        return Err(GlhtError::InvalidArgument(format!("group index {} out of range (k = {})", i + 1, ds.k())));
    }
    let n = ds.group(i).n();
    if n < min {
        return Err(GlhtError::InsufficientReplication { group: i + 1, n, required: min });
    }
    Ok(())
}

fn check_omega(ds: &FunctionalDataset, omega: &OmegaHat) -> Result<()> {
    if omega.p() != ds.p() {
        return Err(GlhtError::InvalidArgument(format!("omega is {0}x{0} but p = {1}", omega.p(), ds.p())));
    }
    Ok(())
}

pub fn ustat_within_fast(ds: &FunctionalDataset, i: usize, omega: &OmegaHat, w: &QuadWeights) -> Result<UStatTriple> {
    require(ds, i, 4)?;
    check_omega(ds, omega)?;
    let z = Standardized::new(ds.group(i), &omega.inv_sqrt);
    let (sums, _) = fast::sweep(&[&z], w, false);
    Ok(sums[0].triple(z.n))
}

/// (n−1)⁻¹ Σ_j ∫∫ {x̂_j(s)ᵀ Ω̂⁻¹ x̂_j(t)}² ds dt minus the three U-statistics.
pub fn k4_hat(ds: &FunctionalDataset, i: usize, omega: &OmegaHat, w: &QuadWeights, within: &UStatTriple) -> Result<f64> {
    require(ds, i, 4)?;
    check_omega(ds, omega)?;
    let z = Standardized::new(ds.group(i), &omega.inv_sqrt);
    let (n, p, m) = (z.n, z.p, z.m);
    let mut first = 0.0;
    for j in 0..n {
        for s in 0..m {
            let zs = &z.z[(s * n + j) * p..(s * n + j + 1) * p];
            for t in 0..m {
                let zt = &z.z[(t * n + j) * p..(t * n + j + 1) * p];
                let d: f64 = zs.iter().zip(zt).map(|(a, b)| a * b).sum();
                first += w[s] * w[t] * d * d;
            }
        }
    }
    first /= (n - 1) as f64;
    Ok(first - within.tr_sigma2_hat - within.i_hat - within.t_hat)
}

/// (Î*_{i1 i2}, T̂*_{i1 i2}) = (∫∫ tr(WΓ̂₁) tr(WΓ̂₂), ∫∫ tr(WΓ̂₁WΓ̂₂)).
pub fn cross_terms(ds: &FunctionalDataset, i1: usize, i2: usize, omega: &OmegaHat, w: &QuadWeights) -> Result<(f64, f64)> {
    if i1 == i2 {
        return Err(GlhtError::InvalidArgument("cross_terms needs two different groups; use the within-group estimators".into()));
    }
    require(ds, i1, 2)?;
    require(ds, i2, 2)?;
    check_omega(ds, omega)?;
    let a = Standardized::new(ds.group(i1), &omega.inv_sqrt);
    let b = Standardized::new(ds.group(i2), &omega.inv_sqrt);
    let (_, xs) = fast::sweep(&[&a, &b], w, true);
    let scale = ((a.n - 1) * (b.n - 1)) as f64;
    Ok((xs[0].tau_tau / scale, xs[0].tr_hh / scale))
}

pub fn dof_estimates(ds: &FunctionalDataset, spec: &ContrastSpec, w: &QuadWeights) -> Result<DofEstimate> {
    let mats = GlhtMatrices::compute(ds, spec, w)?;
    dof_from_matrices(ds, &mats, w)
}

/// As [`dof_estimates`], reusing already computed H_n and Ω̂.
pub fn dof_from_matrices(ds: &FunctionalDataset, mats: &GlhtMatrices, w: &QuadWeights) -> Result<DofEstimate> {
    check_omega(ds, &mats.omega)?;
    let k = ds.k();
    let hn = &mats.hn;
    let active: Vec<usize> = (0..k).filter(|&i| hn[(i, i)] != 0.0).collect();
    for &i in &active {
        require(ds, i, 4)?;
    }
    let zs: Vec<Standardized> = active.iter().map(|&i| Standardized::new(ds.group(i), &mats.omega.inv_sqrt)).collect();
    let refs: Vec<&Standardized> = zs.iter().collect();
    let (sums, xs) = fast::sweep(&refs, w, true);

    let p = ds.p() as f64;
    let mut within = vec![None; k];
    let mut diag = DofDiagnostics {
        inactive_groups: (0..k).filter(|i| !active.contains(i)).map(|i| i + 1).collect(),
        ..Default::default()
    };
    let (mut den_b, mut den_e) = (0.0, 0.0);
    for (a, &i) in active.iter().enumerate() {
        let n = zs[a].n;
        let tri = sums[a].triple(n);
        let k4 = sums[a].sigma2 / (n - 1) as f64 - tri.tr_sigma2_hat - tri.i_hat - tri.t_hat;
        within[i] = Some(WithinGroupUStats { i_hat: tri.i_hat, t_hat: tri.t_hat, tr_sigma2_hat: tri.tr_sigma2_hat, k4_hat: k4 });
        let nf = n as f64;
        let h2 = hn[(i, i)].powi(2);
        let it = tri.i_hat + tri.t_hat;
        let sb = h2 * (k4 / nf.powi(3) + it / nf.powi(2));
        let se = h2 * (k4 / nf.powi(3) + it / (nf * nf * (nf - 1.0)));
        if sb < 0.0 {
            diag.clamped_b.push(i + 1);
        }
        if se < 0.0 {
            diag.clamped_e.push(i + 1);
        }
        den_b += sb.max(0.0);
        den_e += se.max(0.0);
    }

    let mut cross = Vec::new();
    let mut idx = 0;
    for a in 0..active.len() {
        for b in a + 1..active.len() {
            let (i1, i2) = (active[a], active[b]);
            let (n1, n2) = (zs[a].n, zs[b].n);
            let scale = ((n1 - 1) * (n2 - 1)) as f64;
            let (ih, th) = (xs[idx].tau_tau / scale, xs[idx].tr_hh / scale);
            idx += 1;
            // Both orders (i1,i2) and (i2,i1) appear in the double sum.
            den_b += 2.0 * hn[(i1, i2)].powi(2) * (ih + th) / (n1 * n2) as f64;
            cross.push(CrossTerm { i1: i1 + 1, i2: i2 + 1, i_hat: ih, t_hat: th });
        }
    }

    let num = p * (p + 1.0);
    if !(den_b > 0.0 && den_b.is_finite()) {
        return Err(GlhtError::DegenerateDof(format!("d_B denominator is {den_b:e} after clamping")));
    }
    if !(den_e > 0.0 && den_e.is_finite()) {
        return Err(GlhtError::DegenerateDof(format!("d_E denominator is {den_e:e} after clamping")));
    }
    Ok(DofEstimate { d_b: num / den_b, d_e: num / den_e, within, cross, diagnostics: diag })
}
