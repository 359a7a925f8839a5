//! The MFW, MFLH and MFP statistics, their F-approximations, and the
//! end-to-end test.

mod fdist;

pub use fdist::{beta_inc, beta_inc_pair, f_cdf, f_cdf_pair, f_sf, ln_gamma};

use crate::dataset::FunctionalDataset;
use crate::dof::{dof_from_matrices, DofEstimate};
use crate::error::{GlhtError, Result};
use crate::glht::{ContrastSpec, GlhtMatrices};
use crate::grid::QuadWeights;
use crate::moments::PD_REL_TOL;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Serialize, Serializer};

fn rows<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let v: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    v.serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestStatistics {
    pub mfw: f64,
    pub mflh: f64,
    pub mfp: f64,
    #[serde(serialize_with = "rows")]
    pub m1: DMatrix<f64>,
    #[serde(serialize_with = "rows")]
    pub m2: DMatrix<f64>,
}

fn spd_cholesky(a: &DMatrix<f64>, what: &str) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let sym = (a + a.transpose()) * 0.5;
    let ev = SymmetricEigen::new(sym.clone()).eigenvalues;
    let (min, max) = (ev.min(), ev.max());
    if !(max > 0.0) || min <= PD_REL_TOL * max {
        return Err(GlhtError::SingularErrorMatrix(format!(
            "{what} is not positive definite (eigenvalue ratio {:.3e})",
            if max > 0.0 { min / max } else { 0.0 }
        )));
    }
    sym.cholesky().ok_or_else(|| GlhtError::SingularErrorMatrix(format!("{what} Cholesky failed")))
}

fn log_det(ch: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// T_MFW = det M₂ / det(M₁+M₂), T_MFLH = tr(M₁M₂⁻¹), T_MFP = tr(M₁(M₁+M₂)⁻¹).
pub fn statistics(m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> Result<TestStatistics> {
    if m1.shape() != m2.shape() || !m1.is_square() {
        return Err(GlhtError::InvalidArgument("M1 and M2 must be square and the same size".into()));
    }
    let c2 = spd_cholesky(m2, "M2 (scaled error matrix)")?;
    let sum = m1 + m2;
    let cs = spd_cholesky(&sum, "M1 + M2")?;
    let mfw = (log_det(&c2) - log_det(&cs)).exp();
    let mflh = c2.solve(m1).trace();
    let mfp = cs.solve(m1).trace();
    Ok(TestStatistics { mfw, mflh, mfp, m1: m1.clone(), m2: m2.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    #[serde(rename = "MFW")]
    Mfw,
    #[serde(rename = "MFLH-neg-nu2")]
    MflhNegNu2,
    #[serde(rename = "MFLH-pos-nu2")]
    MflhPosNu2,
    #[serde(rename = "MFP")]
    Mfp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FApprox {
    pub f_stat: f64,
    pub df1: f64,
    pub df2: f64,
    pub branch: Branch,
    pub nu1: f64,
    pub nu2: f64,
    pub s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<[f64; 2]>,
    /// MFLH only: ν₂ > 0 but φ₂ sat at its pole, so the ν₂ ≤ 0 form was used.
    pub pole_fallback: bool,
}

impl FApprox {
    pub fn p_value(&self) -> Result<f64> {
        f_sf(self.f_stat, self.df1, self.df2)
    }
}

fn nus(p: f64, d_b: f64, d_e: f64) -> (f64, f64, f64) {
    ((((d_b - p).abs()) - 1.0) / 2.0, (d_e - p - 1.0) / 2.0, p.min(d_b))
}

fn check_dof(p: usize, d_b: f64, d_e: f64) -> Result<f64> {
    if p == 0 || !(d_b > 0.0 && d_e > 0.0 && d_b.is_finite() && d_e.is_finite()) {
        return Err(GlhtError::InvalidArgument(format!("need p >= 1 and positive finite d_B, d_E; got p={p}, d_B={d_b}, d_E={d_e}")));
    }
    Ok(p as f64)
}

fn undefined(statistic: &'static str, detail: String) -> GlhtError {
    GlhtError::ApproximationUndefined { statistic, detail }
}

pub fn f_approx_mfw(t: f64, p: usize, d_b: f64, d_e: f64) -> Result<FApprox> {
    let pf = check_dof(p, d_b, d_e)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(undefined("MFW", format!("statistic {t} is outside (0, 1]")));
    }
    let (nu1, nu2, s) = nus(pf, d_b, d_e);
    let den = pf * pf + d_b * d_b - 5.0;
    let theta1 = if den > 0.0 {
        let sq = (pf * pf * d_b * d_b - 4.0) / den;
        if sq <= 0.0 {
            return Err(undefined("MFW", format!("theta1^2 = {sq} is not positive")));
        }
        sq.sqrt()
    } else {
        1.0
    };
    let theta2 = d_e - (pf - d_b + 1.0) / 2.0;
    let theta3 = pf * d_b / 2.0 - 1.0;
    let df1 = pf * d_b;
    let df2 = theta1 * theta2 - theta3;
    if !(df2 > 0.0) {
        return Err(undefined("MFW", format!("denominator df theta1*theta2 - theta3 = {df2} is not positive")));
    }
    let root = t.min(1.0).powf(1.0 / theta1);
    let f_stat = (df2 / df1) * (1.0 - root) / root;
    Ok(FApprox { f_stat, df1, df2, branch: Branch::Mfw, nu1, nu2, s, theta: Some([theta1, theta2, theta3]), phi: None, pole_fallback: false })
}

pub fn f_approx_mflh(t: f64, p: usize, d_b: f64, d_e: f64) -> Result<FApprox> {
    let pf = check_dof(p, d_b, d_e)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(undefined("MFLH", format!("statistic {t} is negative or not finite")));
    }
    let (nu1, nu2, s) = nus(pf, d_b, d_e);
    let neg_branch = |pole_fallback: bool| -> Result<FApprox> {
        let df1 = s * (2.0 * nu1 + s + 1.0);
        let df2 = 2.0 * (s * nu2 + 1.0);
        if !(df2 > 0.0 && df1 > 0.0) {
            return Err(undefined("MFLH", format!("degrees of freedom ({df1}, {df2}) are not positive")));
        }
        Ok(FApprox { f_stat: df2 / (s * df1) * t, df1, df2, branch: Branch::MflhNegNu2, nu1, nu2, s, theta: None, phi: None, pole_fallback })
    };
    if nu2 <= 0.0 {
        return neg_branch(false);
    }
    if (nu2 - 1.0).abs() < 1e-9 {
        return neg_branch(true);
    }
    let phi2 = (pf + 2.0 * nu2) * (d_b + 2.0 * nu2) / (2.0 * (2.0 * nu2 + 1.0) * (nu2 - 1.0));
    if phi2 <= 1.0 + 1e-9 {
        return neg_branch(true);
    }
    let df1 = pf * d_b;
    let df2 = 4.0 + (df1 + 2.0) / (phi2 - 1.0);
    let phi1 = (2.0 + (df1 + 2.0) / (phi2 - 1.0)) / (2.0 * nu2);
    if !(df2 > 0.0) {
        return Err(undefined("MFLH", format!("denominator df {df2} is not positive")));
    }
    Ok(FApprox {
        f_stat: df2 * t / (df1 * phi1),
        df1,
        df2,
        branch: Branch::MflhPosNu2,
        nu1,
        nu2,
        s,
        theta: None,
        phi: Some([phi1, phi2]),
        pole_fallback: false,
    })
}

pub fn f_approx_mfp(t: f64, p: usize, d_b: f64, d_e: f64) -> Result<FApprox> {
    let pf = check_dof(p, d_b, d_e)?;
    let (nu1, nu2, s) = nus(pf, d_b, d_e);
    if !(t >= 0.0) {
        return Err(undefined("MFP", format!("statistic {t} is negative or NaN")));
    }
    if t >= s {
        return Err(undefined("MFP", format!("statistic {t} is at or beyond its bound s = {s}")));
    }
    let df1 = s * (2.0 * nu1 + s + 1.0);
    let df2 = s * (2.0 * nu2 + s + 1.0);
    if !(df1 > 0.0 && df2 > 0.0) {
        return Err(undefined("MFP", format!("degrees of freedom ({df1}, {df2}) are not positive")));
    }
    let f_stat = (2.0 * nu2 + s + 1.0) / (2.0 * nu1 + s + 1.0) * t / (s - t);
    Ok(FApprox { f_stat, df1, df2, branch: Branch::Mfp, nu1, nu2, s, theta: None, phi: None, pole_fallback: false })
}

/// One value per statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Triple<T> {
    pub mfw: T,
    pub mflh: T,
    pub mfp: T,
}

impl<T: Copy> Triple<T> {
    pub fn as_array(&self) -> [T; 3] {
        [self.mfw, self.mflh, self.mfp]
    }
}

pub const STATISTIC_NAMES: [&str; 3] = ["MFW", "MFLH", "MFP"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Approximations {
    pub mfw: FApprox,
    pub mflh: FApprox,
    pub mfp: FApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub k: usize,
    pub p: usize,
    pub n: Vec<usize>,
    pub statistics: TestStatistics,
    pub approx: Approximations,
    pub p_values: Triple<f64>,
    pub dof: DofEstimate,
    pub alpha: f64,
    pub decisions: Triple<bool>,
    pub diagnostics: Vec<String>,
}

/// Statistics and F-approximations for given B_n, E_n and degrees of freedom.
pub fn evaluate(bn: &DMatrix<f64>, en: &DMatrix<f64>, d_b: f64, d_e: f64) -> Result<(TestStatistics, Approximations)> {
    let p = bn.nrows();
    let stats = statistics(&(bn * d_b), &(en * d_e))?;
    let approx = Approximations {
        mfw: f_approx_mfw(stats.mfw, p, d_b, d_e)?,
        mflh: f_approx_mflh(stats.mflh, p, d_b, d_e)?,
        mfp: f_approx_mfp(stats.mfp, p, d_b, d_e)?,
    };
    Ok((stats, approx))
}

pub fn run_glht(ds: &FunctionalDataset, spec: &ContrastSpec, alpha: f64) -> Result<TestReport> {
    run_glht_with_weights(ds, spec, alpha, &ds.grid().weights())
}

pub fn run_glht_with_weights(ds: &FunctionalDataset, spec: &ContrastSpec, alpha: f64, w: &QuadWeights) -> Result<TestReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(GlhtError::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    ds.validate()?;
    let mats = GlhtMatrices::compute(ds, spec, w)?;
    let dof = dof_from_matrices(ds, &mats, w)?;
    let (statistics, approx) = evaluate(&mats.bn, &mats.en, dof.d_b, dof.d_e)?;
    let p_values = Triple { mfw: approx.mfw.p_value()?, mflh: approx.mflh.p_value()?, mfp: approx.mfp.p_value()? };
    let decisions = Triple { mfw: p_values.mfw < alpha, mflh: p_values.mflh < alpha, mfp: p_values.mfp < alpha };

    let mut diagnostics = Vec::new();
    let d = &dof.diagnostics;
    if !d.clamped_b.is_empty() {
        diagnostics.push(format!("d_B summand clamped at 0 for groups {:?}", d.clamped_b));
    }
    if !d.clamped_e.is_empty() {
        diagnostics.push(format!("d_E summand clamped at 0 for groups {:?}", d.clamped_e));
    }
    if !d.inactive_groups.is_empty() {
        diagnostics.push(format!("groups {:?} have zero weight in the hypothesis", d.inactive_groups));
    }
    if approx.mflh.pole_fallback {
        diagnostics.push("MFLH: phi2 at its pole; used the nu2 <= 0 approximation".into());
    }
    Ok(TestReport { k: ds.k(), p: ds.p(), n: ds.sizes(), statistics, approx, p_values, dof, alpha, decisions, diagnostics })
}
