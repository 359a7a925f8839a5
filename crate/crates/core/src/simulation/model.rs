//! Synthetic multivariate functional data.
//!
//! Curves follow y_ij(t) = η_i(t) + Σ_r √λ_ir ψ_r(t) (c ⊙ ε_ijr), where each
//! ε_ijr ∈ R^p has independent standardized entries. Then
//! Γ_i(s,t) = Σ_r λ_ir ψ_r(s) ψ_r(t) · diag(c²).

use crate::dataset::{FunctionalDataset, GroupSample};
use crate::dof::{CovarianceModel, SeparableCov};
use crate::error::{GlhtError, Result};
use crate::glht::ContrastSpec;
use crate::grid::Grid;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

pub const BENCH_P: usize = 6;

/// Innovation law, each standardized to mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Innovation {
    /// N(0, 1).
    Normal,
    /// t₈ / √(4/3); excess kurtosis 1.5.
    StudentT8,
    /// (χ²₄ − 4) / (2√2); excess kurtosis 3.
    ChiSquared4,
}

impl Innovation {
    pub fn from_model(model: u8) -> Result<Self> {
        match model {
            1 => Ok(Innovation::Normal),
            2 => Ok(Innovation::StudentT8),
            3 => Ok(Innovation::ChiSquared4),
            _ => Err(GlhtError::InvalidArgument(format!("model must be 1, 2 or 3, got {model}"))),
        }
    }

    pub fn excess_kurtosis(self) -> f64 {
        match self {
            Innovation::Normal => 0.0,
            Innovation::StudentT8 => 1.5,
            Innovation::ChiSquared4 => 3.0,
        }
    }

    /// Fills `out` with independent draws.
    pub fn fill<R: Rng + ?Sized>(self, rng: &mut R, out: &mut [f64]) {
        match self {
            Innovation::Normal => out.iter_mut().for_each(|x| *x = StandardNormal.sample(rng)),
            Innovation::StudentT8 => {
                let d = StudentT::new(8.0).expect("valid df");
                let scale = (3.0f64 / 4.0).sqrt();
                out.iter_mut().for_each(|x| *x = d.sample(rng) * scale);
            }
            Innovation::ChiSquared4 => {
                let d = ChiSquared::new(4.0).expect("valid df");
                let scale = 1.0 / (2.0 * 2f64.sqrt());
                out.iter_mut().for_each(|x| *x = (d.sample(rng) - 4.0) * scale);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleSizes {
    Preset(String),
    Explicit(Vec<usize>),
}

impl SampleSizes {
    pub fn resolve(&self) -> Result<Vec<usize>> {
        match self {
            SampleSizes::Explicit(v) => Ok(v.clone()),
            SampleSizes::Preset(name) => match name.as_str() {
                "n1" => Ok(vec![10, 10, 10, 10]),
                "n2" => Ok(vec![10, 12, 12, 15]),
                "n3" => Ok(vec![15, 15, 25, 25]),
                other => Err(GlhtError::InvalidArgument(format!("unknown sample size preset {other:?} (use n1, n2, n3 or a list)"))),
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            SampleSizes::Preset(s) => s.clone(),
            SampleSizes::Explicit(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("-"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Equal covariance: ν = (1.5, 1.5, 1.5, 1.5).
    S1,
    /// Unequal covariance: ν = (1.5, 2, 2.5, 3).
    S2,
}

impl Scenario {
    pub fn nu(self) -> Vec<f64> {
        match self {
            Scenario::S1 => vec![1.5; 4],
            Scenario::S2 => vec![1.5, 2.0, 2.5, 3.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ContrastChoice {
    Named(String),
    Matrix { matrix: Vec<Vec<f64>> },
}

impl ContrastChoice {
    /// `one-way` (I₃, −1₃); `two-sample` (1,0,0,−1); `linear` (1,−3,0,2).
    pub fn build(&self, k: usize) -> Result<ContrastSpec> {
        match self {
            ContrastChoice::Named(name) => match name.as_str() {
                "one-way" => ContrastSpec::one_way(k),
                "two-sample" if k == 4 => ContrastSpec::row(&[1.0, 0.0, 0.0, -1.0]),
                "linear" if k == 4 => ContrastSpec::row(&[1.0, -3.0, 0.0, 2.0]),
                other => Err(GlhtError::InvalidArgument(format!("unknown contrast preset {other:?} for k = {k}"))),
            },
            ContrastChoice::Matrix { matrix } => {
                let q = matrix.len();
                if q == 0 || matrix.iter().any(|r| r.len() != k) {
                    return Err(GlhtError::InvalidArgument(format!("contrast matrix rows must each have k = {k} entries")));
                }
                ContrastSpec::new(DMatrix::from_fn(q, k, |r, c| matrix[r][c]), None)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            ContrastChoice::Named(s) => s.clone(),
            ContrastChoice::Matrix { matrix } => format!("{matrix:?}").replace(' ', ""),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanPreset {
    /// The six reference mean curves (requires p = 6).
    Benchmark,
    /// η_i ≡ 0 for every group, any p.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub name: Option<String>,
    pub n: SampleSizes,
    pub p: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub q: usize,
    pub rho: f64,
    pub scenario: Scenario,
    /// Overrides the scenario's ν vector; its length sets k.
    pub nu: Option<Vec<f64>>,
    pub model: u8,
    pub delta: f64,
    pub means: MeanPreset,
    pub contrast: ContrastChoice,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            name: None,
            n: SampleSizes::Preset("n3".into()),
            p: BENCH_P,
            m: 80,
            q: 7,
            rho: 0.5,
            scenario: Scenario::S1,
            nu: None,
            model: 1,
            delta: 0.0,
            means: MeanPreset::Benchmark,
            contrast: ContrastChoice::Named("one-way".into()),
            alpha: 0.05,
            reps: 1000,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn nu_vec(&self) -> Vec<f64> {
        self.nu.clone().unwrap_or_else(|| self.scenario.nu())
    }

    pub fn sizes(&self) -> Result<Vec<usize>> {
        self.n.resolve()
    }

    pub fn k(&self) -> usize {
        self.nu_vec().len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GlhtError::InvalidArgument(m));
        let k = self.k();
        let n = self.sizes()?;
        if n.len() != k {
            return bad(format!("{} sample sizes given for k = {k} groups", n.len()));
        }
        if self.p == 0 || self.m < 2 || self.q == 0 {
            return bad(format!("need p >= 1, M >= 2, q >= 1 (got p={}, M={}, q={})", self.p, self.m, self.q));
        }
        if self.q % 2 == 0 {
            return bad(format!("q must be odd for the paired sin/cos basis, got {}", self.q));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad(format!("rho must lie in (0, 1), got {}", self.rho));
        }
        if self.nu_vec().iter().any(|v| !(*v > 0.0)) {
            return bad("nu entries must be positive".into());
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be >= 0, got {}", self.delta));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.reps == 0 {
            return bad("reps must be >= 1".into());
        }
        if n.iter().any(|&v| v < 4) {
            return bad(format!("every group needs n_i >= 4, got {n:?}"));
        }
        if self.means == MeanPreset::Benchmark && (self.p != BENCH_P || k != 4) {
            return bad(format!("the benchmark mean curves need p = {BENCH_P} and k = 4; use \"means\": \"zero\" otherwise"));
        }
        Innovation::from_model(self.model)?;
        self.contrast.build(k)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::uniform(self.m, 0.0, 1.0)
    }

    pub fn contrast_spec(&self) -> Result<ContrastSpec> {
        self.contrast.build(self.k())
    }

    /// λ_ir = ν_i ρ^r, r = 1..q.
    pub fn lambdas(&self) -> Vec<Vec<f64>> {
        self.nu_vec().iter().map(|nu| (1..=self.q).map(|r| nu * self.rho.powi(r as i32)).collect()).collect()
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            format!(
                "model{}-{:?}-rho{}-{}-delta{}-{}",
                self.model,
                self.scenario,
                self.rho,
                self.n.label(),
                self.delta,
                self.contrast.label()
            )
        })
    }
}

/// The six reference mean curves for group `i` (0-based) at time `t`.
pub fn benchmark_mean(i: usize, l: usize, t: f64, delta: f64) -> f64 {
    use std::f64::consts::PI;
    let shift = if i >= 2 { delta / 30f64.sqrt() } else { 0.0 };
    match l {
        0 => (2.0 * PI * t * t).sin().powi(5),
        1 => (2.0 * PI * t * t).cos().powi(5),
        2 => t.cbrt() * (1.0 - t) - 5.0,
        3 => 5f64.sqrt() * t.powf(2.0 / 3.0) * (-7.0 * t).exp(),
        4 => (13.0 * t).sqrt() * (-13.0 * t / 2.0).exp(),
        5 => (1.0 + shift) + (2.3 + 2.0 * shift) * t + (3.4 + 3.0 * shift) * t * t + (1.5 + 4.0 * shift) * t.powi(3),
        _ => unreachable!("benchmark means have six components"),
    }
}

/// η_i(t) on the grid, stored `[(i * p + l) * M + t]`.
pub fn mean_functions(cfg: &SimConfig) -> Result<Vec<f64>> {
    let (k, p, m) = (cfg.k(), cfg.p, cfg.m);
    match cfg.means {
        MeanPreset::Zero => Ok(vec![0.0; k * p * m]),
        MeanPreset::Benchmark => {
            if p != BENCH_P || k != 4 {
                return Err(GlhtError::InvalidArgument(format!("benchmark mean curves exist only for p = {BENCH_P}, k = 4")));
            }
            let grid = cfg.grid()?;
            let mut out = Vec::with_capacity(k * p * m);
            for i in 0..k {
                for l in 0..p {
                    out.extend(grid.points().iter().map(|&t| benchmark_mean(i, l, t, cfg.delta)));
                }
            }
            Ok(out)
        }
    }
}

/// ψ₁ = 1, ψ_{2r} = √2 sin(2πrt), ψ_{2r+1} = √2 cos(2πrt).
pub fn psi(q: usize, grid: &Grid) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    (1..=q)
        .map(|r| {
            grid.points()
                .iter()
                .map(|&t| {
                    if r == 1 {
                        1.0
                    } else {
                        let f = 2.0 * PI * (r / 2) as f64 * t;
                        if r % 2 == 0 {
                            2f64.sqrt() * f.sin()
                        } else {
                            2f64.sqrt() * f.cos()
                        }
                    }
                })
                .collect()
        })
        .collect()
}

/// c_ℓ = ℓ / (1² + … + p²)^{1/2}.
pub fn component_weights(p: usize) -> Vec<f64> {
    let norm = ((1..=p).map(|l| (l * l) as f64).sum::<f64>()).sqrt();
    (1..=p).map(|l| l as f64 / norm).collect()
}

/// φ_r(t) = c ψ_r(t), stored `[(r * p + l) * M + t]`.
pub fn basis_functions(cfg: &SimConfig) -> Result<Vec<f64>> {
    if cfg.q % 2 == 0 {
        return Err(GlhtError::InvalidArgument(format!("q must be odd, got {}", cfg.q)));
    }
    let grid = cfg.grid()?;
    let c = component_weights(cfg.p);
    let ps = psi(cfg.q, &grid);
    let mut out = Vec::with_capacity(cfg.q * cfg.p * cfg.m);
    for row in &ps {
        for cl in &c {
            out.extend(row.iter().map(|v| cl * v));
        }
    }
    Ok(out)
}

/// Everything needed to draw datasets: grid, means, covariance and noise law.
#[derive(Debug, Clone)]
pub struct DataModel {
    pub grid: Grid,
    pub sizes: Vec<usize>,
    pub means: Vec<f64>,
    pub cov: SeparableCov,
    pub innovation: Innovation,
    scales: Vec<f64>,
}

impl DataModel {
    pub fn new(grid: Grid, sizes: Vec<usize>, means: Vec<f64>, cov: SeparableCov, innovation: Innovation) -> Result<Self> {
        let (k, p, m) = (cov.lambdas.len(), cov.component.nrows(), grid.len());
        if sizes.len() != k || means.len() != k * p * m || cov.psi.iter().any(|r| r.len() != m) {
            return Err(GlhtError::InvalidArgument("data model shapes disagree".into()));
        }
        let mut scales = Vec::with_capacity(p);
        for a in 0..p {
            for b in 0..p {
                if a != b && cov.component[(a, b)] != 0.0 {
                    return Err(GlhtError::InvalidArgument("component covariance must be diagonal".into()));
                }
            }
            if cov.component[(a, a)] < 0.0 {
                return Err(GlhtError::InvalidArgument("component variances must be nonnegative".into()));
            }
            scales.push(cov.component[(a, a)].sqrt());
        }
        Ok(DataModel { grid, sizes, means, cov, innovation, scales })
    }

    pub fn from_config(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid()?;
        let c = component_weights(cfg.p);
        let cov = SeparableCov {
            lambdas: cfg.lambdas(),
            psi: psi(cfg.q, &grid),
            component: DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(cfg.p, c.iter().map(|v| v * v))),
        };
        DataModel::new(grid, cfg.sizes()?, mean_functions(cfg)?, cov, Innovation::from_model(cfg.model)?)
    }

    pub fn covariance(&self) -> CovarianceModel {
        CovarianceModel::Separable(self.cov.clone())
    }

    pub fn p(&self) -> usize {
        self.scales.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FunctionalDataset {
        let (p, m) = (self.p(), self.grid.len());
        let q = self.cov.psi.len();
        let mut eps = vec![0.0; q * p];
        let groups = self
            .sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let root: Vec<f64> = self.cov.lambdas[i].iter().map(|l| l.sqrt()).collect();
                let mut values = Vec::with_capacity(n * p * m);
                for _ in 0..n {
                    self.innovation.fill(rng, &mut eps);
                    for l in 0..p {
                        let mu = &self.means[(i * p + l) * m..(i * p + l + 1) * m];
                        let start = values.len();
                        values.extend_from_slice(mu);
                        let curve = &mut values[start..];
                        for r in 0..q {
                            let a = root[r] * self.scales[l] * eps[r * p + l];
                            for (y, ps) in curve.iter_mut().zip(&self.cov.psi[r]) {
                                *y += a * ps;
                            }
                        }
                    }
                }
                GroupSample::new(n, p, m, values).expect("consistent shape")
            })
            .collect();
        FunctionalDataset::new(self.grid.clone(), groups).expect("generated data is valid")
    }
}

/// Master-seeded generator; replication `rep` reads ChaCha12 stream `rep`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

pub fn gen_sample(cfg: &SimConfig, seed: u64) -> Result<FunctionalDataset> {
    let model = DataModel::from_config(cfg)?;
    Ok(model.sample(&mut ChaCha12Rng::seed_from_u64(seed)))
}
