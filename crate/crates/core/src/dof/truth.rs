//! Degrees of freedom from known covariance functions, for validating the
//! estimators against Monte Carlo.

use crate::error::{GlhtError, Result};
use crate::grid::QuadWeights;
use crate::moments::OmegaHat;
use nalgebra::DMatrix;

/// Γ_i(s,t) = Σ_r λ_ir ψ_r(s) ψ_r(t) · D with a shared p × p matrix D.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableCov {
    /// k × q eigenvalues.
    pub lambdas: Vec<Vec<f64>>,
    /// q × M basis functions on the grid.
    pub psi: Vec<Vec<f64>>,
    /// p × p component covariance D.
    pub component: DMatrix<f64>,
}

/// Γ_i on the grid, one buffer per group indexed `[((s * M + t) * p + a) * p + b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCov {
    pub p: usize,
    pub m: usize,
    pub kernels: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceModel {
    Separable(SeparableCov),
    Dense(DenseCov),
}

/// Population quantities entering the degrees of freedom. Starred values are
/// standardized by Ω_n^{-1/2}.
#[derive(Debug, Clone)]
pub struct TrueMoments {
    pub omega: OmegaHat,
    /// Σ_i = ∫ Γ_i(t,t) dt (unstandardized).
    pub sigma: Vec<DMatrix<f64>>,
    pub i_star: DMatrix<f64>,
    pub t_star: DMatrix<f64>,
    pub tr_sigma2_star: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrueDof {
    pub d_b: f64,
    pub d_e: f64,
    pub moments: TrueMoments,
}

impl CovarianceModel {
    pub fn k(&self) -> usize {
        match self {
            CovarianceModel::Separable(c) => c.lambdas.len(),
            CovarianceModel::Dense(c) => c.kernels.len(),
        }
    }

    pub fn p(&self) -> usize {
        match self {
            CovarianceModel::Separable(c) => c.component.nrows(),
            CovarianceModel::Dense(c) => c.p,
        }
    }

    /// Σ_i for every group.
    pub fn sigma(&self, w: &QuadWeights) -> Vec<DMatrix<f64>> {
        match self {
            CovarianceModel::Separable(c) => {
                let gram = c.psi_gram(w);
                c.lambdas
                    .iter()
                    .map(|lam| &c.component * lam.iter().enumerate().map(|(r, l)| l * gram[(r, r)]).sum::<f64>())
                    .collect()
            }
            CovarianceModel::Dense(c) => c
                .kernels
                .iter()
                .map(|ker| {
                    let mut s = DMatrix::zeros(c.p, c.p);
                    for t in 0..c.m {
                        s += c.at(ker, t, t) * w[t];
                    }
                    s
                })
                .collect(),
        }
    }
}

impl SeparableCov {
    /// ∫ ψ_r ψ_r' dt under the grid quadrature.
    pub fn psi_gram(&self, w: &QuadWeights) -> DMatrix<f64> {
        let q = self.psi.len();
        DMatrix::from_fn(q, q, |a, b| (0..w.len()).map(|t| w[t] * self.psi[a][t] * self.psi[b][t]).sum())
    }

    /// Fourth-cumulant functional K₄(x*) of group `i` when x(t) = Σ_r √λ_r ψ_r(t) D^{1/2} ε_r,
    /// D diagonal and ε_r with independent entries of excess kurtosis `kappa`.
    pub fn k4(&self, i: usize, w: &QuadWeights, omega_inv: &DMatrix<f64>, kappa: f64) -> Result<f64> {
        let p = self.component.nrows();
        if (0..p).any(|a| (0..p).any(|b| a != b && self.component[(a, b)] != 0.0)) {
            return Err(GlhtError::InvalidArgument("kurtosis term needs a diagonal component matrix".into()));
        }
        let gram = self.psi_gram(w);
        let spatial: f64 = (0..p).map(|l| (self.component[(l, l)] * omega_inv[(l, l)]).powi(2)).sum();
        let temporal: f64 = self.lambdas[i].iter().enumerate().map(|(r, l)| l * l * gram[(r, r)].powi(2)).sum();
        Ok(kappa * spatial * temporal)
    }
}

impl DenseCov {
    fn at(&self, ker: &[f64], s: usize, t: usize) -> DMatrix<f64> {
        let pp = self.p * self.p;
        let base = (s * self.m + t) * pp;
        DMatrix::from_row_slice(self.p, self.p, &ker[base..base + pp])
    }
}

fn omega_from(sigma: &[DMatrix<f64>], n: &[usize], hn: &DMatrix<f64>) -> Result<OmegaHat> {
    let p = sigma[0].nrows();
    let mut omega = DMatrix::zeros(p, p);
    for (i, s) in sigma.iter().enumerate() {
        omega += s * (hn[(i, i)] / n[i] as f64);
    }
    OmegaHat::from_matrix(omega)
}

pub fn true_moments(model: &CovarianceModel, w: &QuadWeights, n: &[usize], hn: &DMatrix<f64>) -> Result<TrueMoments> {
    let k = model.k();
    if n.len() != k || hn.nrows() != k || hn.ncols() != k {
        return Err(GlhtError::InvalidArgument("need one n_i and one H_n row per group".into()));
    }
    let sigma = model.sigma(w);
    let omega = omega_from(&sigma, n, hn)?;
    let winv = &omega.inv;
    let (i_star, t_star, tr_sigma2_star) = match model {
        CovarianceModel::Separable(c) => {
            let gram = c.psi_gram(w);
            let wd = winv * &c.component;
            let (tr1, tr2) = (wd.trace(), (&wd * &wd).trace());
            let g2 = |a: usize, b: usize| -> f64 {
                let (la, lb) = (&c.lambdas[a], &c.lambdas[b]);
                let mut acc = 0.0;
                for (r, x) in la.iter().enumerate() {
                    for (s, y) in lb.iter().enumerate() {
                        acc += x * y * gram[(r, s)].powi(2);
                    }
                }
                acc
            };
            let i_star = DMatrix::from_fn(k, k, |a, b| g2(a, b) * tr1 * tr1);
            let t_star = DMatrix::from_fn(k, k, |a, b| g2(a, b) * tr2);
            let trs = sigma.iter().map(|s| (winv * s * winv * s).trace()).collect();
            (i_star, t_star, trs)
        }
        CovarianceModel::Dense(c) => {
            let m = c.m;
            let mut i_star = DMatrix::zeros(k, k);
            let mut t_star = DMatrix::zeros(k, k);
            for s in 0..m {
                for t in 0..m {
                    let wg: Vec<DMatrix<f64>> = c.kernels.iter().map(|ker| winv * c.at(ker, s, t)).collect();
                    let tr: Vec<f64> = wg.iter().map(|x| x.trace()).collect();
                    let ww = w[s] * w[t];
                    for a in 0..k {
                        for b in 0..k {
                            i_star[(a, b)] += ww * tr[a] * tr[b];
                            t_star[(a, b)] += ww * (&wg[a] * &wg[b]).trace();
                        }
                    }
                }
            }
            let trs = sigma.iter().map(|s| (winv * s * winv * s).trace()).collect();
            (i_star, t_star, trs)
        }
    };
    Ok(TrueMoments { omega, sigma, i_star, t_star, tr_sigma2_star })
}

/// d_B and d_E from known covariances, per-group K₄ values (0 for Gaussian).
pub fn true_dof(model: &CovarianceModel, w: &QuadWeights, n: &[usize], hn: &DMatrix<f64>, k4: &[f64]) -> Result<TrueDof> {
    let mom = true_moments(model, w, n, hn)?;
    let k = model.k();
    if k4.len() != k {
        return Err(GlhtError::InvalidArgument("need one K4 value per group".into()));
    }
    let p = model.p() as f64;
    let (mut den_b, mut den_e) = (0.0, 0.0);
    for i in 0..k {
        let ni = n[i] as f64;
        let h2 = hn[(i, i)].powi(2);
        den_b += h2 * k4[i] / ni.powi(3);
        den_e += h2 * (k4[i] / ni.powi(3) + (mom.i_star[(i, i)] + mom.t_star[(i, i)]) / (ni * ni * (ni - 1.0)));
        for j in 0..k {
            den_b += hn[(i, j)].powi(2) * (mom.i_star[(i, j)] + mom.t_star[(i, j)]) / (ni * n[j] as f64);
        }
    }
    if !(den_b > 0.0 && den_e > 0.0) {
        return Err(GlhtError::DegenerateDof(format!("true denominators are ({den_b:e}, {den_e:e})")));
    }
    Ok(TrueDof { d_b: p * (p + 1.0) / den_b, d_e: p * (p + 1.0) / den_e, moments: mom })
}
