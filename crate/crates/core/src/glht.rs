//! The linear hypothesis C M(t) = C₀(t): contrast specification, H_n, and
//! the hypothesis/error variation matrices B_n and E_n.

use crate::dataset::FunctionalDataset;
use crate::error::{GlhtError, Result};
use crate::grid::QuadWeights;
use crate::moments::{group_means, omega_hat, sigma_hat, symmetrize, IntegratedCov, MeanFunctions, OmegaHat};
use nalgebra::DMatrix;
use std::io::Read;

pub const RANK_REL_TOL: f64 = 1e-10;

/// Coefficient matrix `c` (q × k) and right-hand side C₀(t), stored as
/// `c0[(r * p + l) * M + t]`; `None` means the zero function.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastSpec {
    c: DMatrix<f64>,
    c0: Option<Vec<f64>>,
}

impl ContrastSpec {
    pub fn new(c: DMatrix<f64>, c0: Option<Vec<f64>>) -> Result<Self> {
        if c.nrows() == 0 || c.nrows() > c.ncols() {
            return Err(GlhtError::InvalidArgument(format!(
                "contrast matrix must be q x k with 1 <= q <= k, got {} x {}",
                c.nrows(),
                c.ncols()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(GlhtError::InvalidArgument("contrast matrix has non-finite entries".into()));
        }
        let sv = c.clone().svd(false, false).singular_values;
        let max = sv.max();
        let min = sv.min();
        if !(max > 0.0) || min <= RANK_REL_TOL * max {
            return Err(GlhtError::ContrastRank { ratio: if max > 0.0 { min / max } else { 0.0 } });
        }
        if let Some(v) = &c0 {
            if v.len() % c.nrows() != 0 || v.iter().any(|x| !x.is_finite()) {
                return Err(GlhtError::InvalidArgument("C0 must hold q*p*M finite values".into()));
            }
        }
        Ok(ContrastSpec { c, c0 })
    }

    /// C = (I_{k-1}, -1_{k-1}): equality of all k mean functions.
    pub fn one_way(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(GlhtError::InvalidArgument("one-way contrast needs k >= 2".into()));
        }
        let c = DMatrix::from_fn(k - 1, k, |r, col| {
            if col == k - 1 {
                -1.0
            } else if r == col {
                1.0
            } else {
                0.0
            }
        });
        ContrastSpec::new(c, None)
    }

    /// A single-row contrast with the given coefficients.
    pub fn row(coefs: &[f64]) -> Result<Self> {
        ContrastSpec::new(DMatrix::from_row_slice(1, coefs.len(), coefs), None)
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn c0(&self) -> Option<&[f64]> {
        self.c0.as_deref()
    }

    pub fn q(&self) -> usize {
        self.c.nrows()
    }

    pub fn k(&self) -> usize {
        self.c.ncols()
    }

    /// True when every row sums to zero (C 1_k = 0).
    pub fn is_pure_contrast(&self) -> bool {
        let scale = self.c.amax().max(1.0);
        self.c.row_iter().all(|r| r.sum().abs() <= 1e-12 * scale * self.k() as f64)
    }

    /// (P C, P C₀) for a nonsingular q × q matrix P.
    pub fn transformed(&self, pm: &DMatrix<f64>) -> Result<Self> {
        let q = self.q();
        if pm.nrows() != q || pm.ncols() != q {
            return Err(GlhtError::InvalidArgument("P must be q x q".into()));
        }
        let c0 = self.c0.as_ref().map(|v| {
            let len = v.len() / q;
            let mut out = vec![0.0; v.len()];
            for r in 0..q {
                for s in 0..q {
                    let f = pm[(r, s)];
                    for x in 0..len {
                        out[r * len + x] += f * v[s * len + x];
                    }
                }
            }
            out
        });
        ContrastSpec::new(pm * &self.c, c0)
    }

    fn check_against(&self, ds: &FunctionalDataset) -> Result<()> {
        if self.k() != ds.k() {
            return Err(GlhtError::InvalidArgument(format!(
                "contrast has {} columns but the dataset has k = {} groups",
                self.k(),
                ds.k()
            )));
        }
        if let Some(v) = &self.c0 {
            if v.len() != self.q() * ds.p() * ds.m() {
                return Err(GlhtError::InvalidArgument(format!(
                    "C0 holds {} values, expected q*p*M = {}",
                    v.len(),
                    self.q() * ds.p() * ds.m()
                )));
            }
        }
        Ok(())
    }
}

fn gram_inverse(c: &DMatrix<f64>, n: &[usize]) -> Result<DMatrix<f64>> {
    if n.len() != c.ncols() {
        return Err(GlhtError::InvalidArgument("need one sample size per contrast column".into()));
    }
    if let Some(i) = n.iter().position(|&v| v == 0) {
        return Err(GlhtError::InsufficientReplication { group: i + 1, n: 0, required: 1 });
    }
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n.len(), n.iter().map(|&v| 1.0 / v as f64)));
    let g = symmetrize(&(c * d * c.transpose()));
    let chol = g.cholesky().ok_or(GlhtError::ContrastRank { ratio: 0.0 })?;
    Ok(symmetrize(&chol.inverse()))
}

/// H_n = Cᵀ (C D_n Cᵀ)⁻¹ C with D_n = diag(1/n_i).
pub fn hn_matrix(c: &DMatrix<f64>, n: &[usize]) -> Result<DMatrix<f64>> {
    ContrastSpec::new(c.clone(), None)?;
    let ginv = gram_inverse(c, n)?;
    Ok(symmetrize(&(c.transpose() * ginv * c)))
}

/// B_n = ∫ [C M̂(t) − C₀(t)]ᵀ (C D_n Cᵀ)⁻¹ [C M̂(t) − C₀(t)] dt.
pub fn b_matrix(ds: &FunctionalDataset, means: &MeanFunctions, spec: &ContrastSpec, w: &QuadWeights) -> Result<DMatrix<f64>> {
    spec.check_against(ds)?;
    let (q, k, p, m) = (spec.q(), ds.k(), ds.p(), ds.m());
    let ginv = gram_inverse(spec.c(), &ds.sizes())?;
    let mut bn = DMatrix::<f64>::zeros(p, p);
    let mut resid = DMatrix::<f64>::zeros(q, p);
    for t in 0..m {
        for r in 0..q {
            for l in 0..p {
                let mut v: f64 = (0..k).map(|i| spec.c[(r, i)] * means.get(i, l, t)).sum();
                if let Some(c0) = &spec.c0 {
                    v -= c0[(r * p + l) * m + t];
                }
                resid[(r, l)] = v;
            }
        }
        bn += resid.transpose() * &ginv * &resid * w[t];
    }
    Ok(symmetrize(&bn))
}

/// E_n = Σ_i h_ii Σ̂_i / n_i.
pub fn e_matrix(sigmas: &[IntegratedCov], hn: &DMatrix<f64>, n: &[usize]) -> Result<DMatrix<f64>> {
    if sigmas.is_empty() || sigmas.len() != n.len() || hn.nrows() != n.len() {
        return Err(GlhtError::InvalidArgument("e_matrix needs one sigma and n_i per group".into()));
    }
    let p = sigmas[0].sigma.nrows();
    let mut en = DMatrix::<f64>::zeros(p, p);
    for (i, s) in sigmas.iter().enumerate() {
        let h = hn[(i, i)];
        if h == 0.0 {
            continue;
        }
        if n[i] < 2 {
            return Err(GlhtError::InsufficientReplication { group: i + 1, n: n[i], required: 2 });
        }
        en += &s.sigma * (h / n[i] as f64);
    }
    Ok(symmetrize(&en))
}

#[derive(Debug, Clone)]
pub struct GlhtMatrices {
    pub hn: DMatrix<f64>,
    pub bn: DMatrix<f64>,
    pub en: DMatrix<f64>,
    pub omega: OmegaHat,
    pub dn: Vec<f64>,
    pub sigmas: Vec<IntegratedCov>,
    pub means: MeanFunctions,
}

impl GlhtMatrices {
    pub fn compute(ds: &FunctionalDataset, spec: &ContrastSpec, w: &QuadWeights) -> Result<Self> {
        spec.check_against(ds)?;
        let n = ds.sizes();
        let hn = hn_matrix(spec.c(), &n)?;
        let means = group_means(ds);
        let bn = b_matrix(ds, &means, spec, w)?;
        let sigmas = (0..ds.k()).map(|i| sigma_hat(ds, i, w)).collect::<Result<Vec<_>>>()?;
        let en = e_matrix(&sigmas, &hn, &n)?;
        let h_diag: Vec<f64> = (0..ds.k()).map(|i| hn[(i, i)]).collect();
        let omega = omega_hat(&sigmas, &h_diag, &n)?;
        let dn = n.iter().map(|&v| 1.0 / v as f64).collect();
        Ok(GlhtMatrices { hn, bn, en, omega, dn, sigmas, means })
    }
}

/// Reads C from `row,col,value` rows (1-based). Absent entries are zero;
/// `k` fixes the column count when given, else the largest `col` does.
pub fn load_contrast_csv<R: Read>(source: R, k: Option<usize>) -> Result<DMatrix<f64>> {
    let entries = read_indexed(source, &["row", "col"])?;
    let q = entries.iter().map(|(ix, _)| ix[0]).max().map_or(0, |v| v + 1);
    let kk = entries.iter().map(|(ix, _)| ix[1]).max().map_or(0, |v| v + 1);
    let k = k.unwrap_or(kk);
    if q == 0 {
        return Err(GlhtError::Ingestion("contrast file has no entries".into()));
    }
    if kk > k {
        return Err(GlhtError::Ingestion(format!("contrast references column {kk} but k = {k}")));
    }
    let mut c = DMatrix::zeros(q, k);
    for (ix, v) in entries {
        c[(ix[0], ix[1])] = v;
    }
    Ok(c)
}

/// Reads C₀ from `row,component,time_index,value` rows; every cell must be present.
pub fn load_c0_csv<R: Read>(source: R, q: usize, p: usize, m: usize) -> Result<Vec<f64>> {
    let entries = read_indexed(source, &["row", "component", "time_index"])?;
    let mut out = vec![f64::NAN; q * p * m];
    for (ix, v) in entries {
        if ix[0] >= q || ix[1] >= p || ix[2] >= m {
            return Err(GlhtError::Ingestion(format!(
                "C0 cell (row {}, component {}, time_index {}) is outside q={q}, p={p}, M={m}",
                ix[0] + 1,
                ix[1] + 1,
                ix[2] + 1
            )));
        }
        out[(ix[0] * p + ix[1]) * m + ix[2]] = v;
    }
    if let Some(pos) = out.iter().position(|v| v.is_nan()) {
        return Err(GlhtError::Ingestion(format!(
            "C0 missing cell (row {}, component {}, time_index {})",
            pos / (p * m) + 1,
            (pos / m) % p + 1,
            pos % m + 1
        )));
    }
    Ok(out)
}

fn read_indexed<R: Read>(source: R, names: &[&str]) -> Result<Vec<(Vec<usize>, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers().map_err(|e| GlhtError::Ingestion(e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| GlhtError::Ingestion(format!("header lacks a `{name}` column")))
    };
    let cols = names.iter().map(|n| find(n)).collect::<Result<Vec<_>>>()?;
    let vcol = find("value")?;
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| GlhtError::Ingestion(format!("malformed CSV: {e}")))?;
        let mut ix = Vec::with_capacity(cols.len());
        for (&c, name) in cols.iter().zip(names) {
            let f = rec.get(c).unwrap_or("");
            match f.parse::<usize>() {
                Ok(v) if v >= 1 => ix.push(v - 1),
                _ => return Err(GlhtError::Ingestion(format!("{name} must be a positive integer, got {f:?}"))),
            }
        }
        let f = rec.get(vcol).unwrap_or("");
        let v: f64 = f.parse().map_err(|_| GlhtError::Ingestion(format!("cannot parse value {f:?}")))?;
        if !v.is_finite() {
            return Err(GlhtError::Ingestion(format!("non-finite value at {:?}", ix.iter().map(|i| i + 1).collect::<Vec<_>>())));
        }
        if !seen.insert(ix.clone()) {
            return Err(GlhtError::Ingestion(format!("duplicate cell {:?}", ix.iter().map(|i| i + 1).collect::<Vec<_>>())));
        }
        out.push((ix, v));
    }
    Ok(out)
}
