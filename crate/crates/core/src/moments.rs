//! Sample means, integrated covariances Σ̂_i and the pooled matrix Ω̂_n.

use crate::dataset::{FunctionalDataset, GroupSample};
use crate::error::{GlhtError, Result};
use crate::grid::QuadWeights;
use nalgebra::{DMatrix, SymmetricEigen};

/// Tolerance for positive definiteness: smallest / largest eigenvalue.
pub const PD_REL_TOL: f64 = 1e-10;

/// Group mean curves ȳ_i(t), stored as `means[(i * p + l) * M + t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFunctions {
    k: usize,
    p: usize,
    m: usize,
    means: Vec<f64>,
}

impl MeanFunctions {
    pub fn from_vec(k: usize, p: usize, m: usize, means: Vec<f64>) -> Result<Self> {
        if means.len() != k * p * m {
            return Err(GlhtError::InvalidArgument("mean array has the wrong length".into()));
        }
        Ok(MeanFunctions { k, p, m, means })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, l: usize, t: usize) -> f64 {
        self.means[(i * self.p + l) * self.m + t]
    }

    pub fn curve(&self, i: usize, l: usize) -> &[f64] {
        let start = (i * self.p + l) * self.m;
        &self.means[start..start + self.m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.means
    }
}

fn mean_of(g: &GroupSample) -> Vec<f64> {
    let (p, m) = (g.p(), g.m());
    let mut acc = vec![0.0; p * m];
    for j in 0..g.n() {
        for (a, v) in acc.iter_mut().zip(&g.values()[j * p * m..(j + 1) * p * m]) {
            *a += v;
        }
    }
    let inv = 1.0 / g.n() as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    acc
}

pub fn group_means(ds: &FunctionalDataset) -> MeanFunctions {
    let means = ds.groups().iter().flat_map(mean_of).collect();
    MeanFunctions { k: ds.k(), p: ds.p(), m: ds.m(), means }
}

/// Σ̂_i = ∫ Γ̂_i(t,t) dt.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedCov {
    pub sigma: DMatrix<f64>,
}

/// Curves of group `i` minus the group mean, same layout as [`GroupSample`].
pub(crate) fn centered(g: &GroupSample) -> Vec<f64> {
    let (p, m) = (g.p(), g.m());
    let mean = mean_of(g);
    let mut out = g.values().to_vec();
    for chunk in out.chunks_mut(p * m) {
        for (x, mu) in chunk.iter_mut().zip(&mean) {
            *x -= mu;
        }
    }
    out
}

pub fn sigma_hat(ds: &FunctionalDataset, i: usize, w: &QuadWeights) -> Result<IntegratedCov> {
    let g = ds.group(i);
    if g.n() < 2 {
        return Err(GlhtError::InsufficientReplication { group: i + 1, n: g.n(), required: 2 });
    }
    let (p, m) = (g.p(), g.m());
    let x = centered(g);
    let mut sigma = DMatrix::<f64>::zeros(p, p);
    for obs in x.chunks(p * m) {
        for a in 0..p {
            let xa = &obs[a * m..(a + 1) * m];
            for b in a..p {
                let xb = &obs[b * m..(b + 1) * m];
                let v: f64 = (0..m).map(|t| w[t] * xa[t] * xb[t]).sum();
                sigma[(a, b)] += v;
            }
        }
    }
    sigma /= (g.n() - 1) as f64;
    for a in 0..p {
        for b in 0..a {
            sigma[(a, b)] = sigma[(b, a)];
        }
    }
    Ok(IntegratedCov { sigma })
}

/// Ω̂ with its inverse and symmetric inverse square root.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaHat {
    pub omega: DMatrix<f64>,
    pub inv: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
}

impl OmegaHat {
    pub fn from_matrix(omega: DMatrix<f64>) -> Result<Self> {
        let (vals, vecs) = spd_eigen(&omega).map_err(|ratio| GlhtError::SingularOmega { ratio })?;
        let inv = spectral(&vecs, vals.iter().map(|v| 1.0 / v));
        let inv_sqrt = spectral(&vecs, vals.iter().map(|v| 1.0 / v.sqrt()));
        Ok(OmegaHat { omega: symmetrize(&omega), inv, inv_sqrt })
    }

    pub fn p(&self) -> usize {
        self.omega.nrows()
    }
}

/// Ω̂_n = Σ_i h_ii Σ̂_i / n_i. Groups with h_ii = 0 do not enter the
/// hypothesis and contribute nothing.
pub fn omega_hat(sigmas: &[IntegratedCov], h_diag: &[f64], n: &[usize]) -> Result<OmegaHat> {
    if sigmas.is_empty() || sigmas.len() != h_diag.len() || sigmas.len() != n.len() {
        return Err(GlhtError::InvalidArgument("omega_hat needs one sigma, h_ii and n_i per group".into()));
    }
    let p = sigmas[0].sigma.nrows();
    let mut omega = DMatrix::<f64>::zeros(p, p);
    for (i, ((s, &h), &ni)) in sigmas.iter().zip(h_diag).zip(n).enumerate() {
        if h < 0.0 {
            return Err(GlhtError::InvalidArgument(format!("h_{0}{0} = {h} is negative", i + 1)));
        }
        if h == 0.0 {
            continue;
        }
        if ni < 2 {
            return Err(GlhtError::InsufficientReplication { group: i + 1, n: ni, required: 2 });
        }
        omega += &s.sigma * (h / ni as f64);
    }
    OmegaHat::from_matrix(omega)
}

pub fn inv_sqrt_spd(a: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = eigen_checked(a, rel_tol).map_err(|ratio| GlhtError::NotPositiveDefinite { ratio })?;
    Ok(spectral(&vecs, vals.iter().map(|v| 1.0 / v.sqrt())))
}

pub(crate) fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

fn spd_eigen(a: &DMatrix<f64>) -> std::result::Result<(Vec<f64>, DMatrix<f64>), f64> {
    eigen_checked(a, PD_REL_TOL)
}

/// Eigen-decomposition of the symmetrized matrix; `Err(ratio)` when the
/// smallest eigenvalue is at or below `rel_tol` times the largest.
fn eigen_checked(a: &DMatrix<f64>, rel_tol: f64) -> std::result::Result<(Vec<f64>, DMatrix<f64>), f64> {
    let eig = SymmetricEigen::new(symmetrize(a));
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || !max.is_finite() || min <= rel_tol * max {
        let ratio = if max > 0.0 { min / max } else { 0.0 };
        return Err(ratio);
    }
    Ok((vals, eig.eigenvectors))
}

fn spectral(vecs: &DMatrix<f64>, f: impl Iterator<Item = f64>) -> DMatrix<f64> {
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(vecs.ncols(), f));
    symmetrize(&(vecs * d * vecs.transpose()))
}
