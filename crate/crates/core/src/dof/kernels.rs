use crate::dataset::GroupSample;
use crate::error::{GlhtError, Result};
use nalgebra::DMatrix;

/// Default ceiling for a materialized δ table.
pub const DEFAULT_KERNEL_CAP_BYTES: usize = 2 << 30;

/// δ_{j1 j2}(s,t) = y_{j1}(s)ᵀ W y_{j2}(t) for one group, with W = Ω̂⁻¹.
///
/// The full n × n × M × M table is stored when it fits under the cap;
/// otherwise entries are evaluated on demand from W y.
#[derive(Debug, Clone)]
pub struct DeltaKernels {
    n: usize,
    m: usize,
    p: usize,
    raw: Vec<f64>,
    wy: Vec<f64>,
    table: Option<Vec<f64>>,
}

impl DeltaKernels {
    pub fn new(g: &GroupSample, w_inv: &DMatrix<f64>) -> Result<Self> {
        Self::with_cap(g, w_inv, DEFAULT_KERNEL_CAP_BYTES)
    }

    pub fn with_cap(g: &GroupSample, w_inv: &DMatrix<f64>, cap_bytes: usize) -> Result<Self> {
        let (n, p, m) = (g.n(), g.p(), g.m());
        if w_inv.nrows() != p || w_inv.ncols() != p {
            return Err(GlhtError::InvalidArgument("weight matrix must be p x p".into()));
        }
        let raw = g.values().to_vec();
        let mut wy = vec![0.0; raw.len()];
        for j in 0..n {
            for l in 0..p {
                for r in 0..p {
                    let c = w_inv[(l, r)];
                    for t in 0..m {
                        wy[(j * p + l) * m + t] += c * raw[(j * p + r) * m + t];
                    }
                }
            }
        }
        let mut k = DeltaKernels { n, m, p, raw, wy, table: None };
        let cells = n * n * m * m;
        if cells.saturating_mul(8) <= cap_bytes {
            let mut table = vec![0.0; cells];
            for a in 0..n {
                for b in 0..n {
                    for s in 0..m {
                        for t in 0..m {
                            table[((a * n + b) * m + s) * m + t] = k.compute(a, b, s, t);
                        }
                    }
                }
            }
            k.table = Some(table);
        }
        Ok(k)
    }

    fn compute(&self, a: usize, b: usize, s: usize, t: usize) -> f64 {
        (0..self.p)
            .map(|l| self.raw[(a * self.p + l) * self.m + s] * self.wy[(b * self.p + l) * self.m + t])
            .sum()
    }

    #[inline]
    pub fn delta(&self, a: usize, b: usize, s: usize, t: usize) -> f64 {
        match &self.table {
            Some(tab) => tab[((a * self.n + b) * self.m + s) * self.m + t],
            None => self.compute(a, b, s, t),
        }
    }

    pub fn is_materialized(&self) -> bool {
        self.table.is_some()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

/// Group-centered curves multiplied by Ω̂^{-1/2}, stored time-major as
/// `z[(t * n + j) * p + l]` so each time point is a contiguous n × p block.
#[derive(Debug, Clone)]
pub(crate) struct Standardized {
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub z: Vec<f64>,
}

impl Standardized {
    pub fn new(g: &GroupSample, inv_sqrt: &DMatrix<f64>) -> Self {
        let (n, p, m) = (g.n(), g.p(), g.m());
        let x = crate::moments::centered(g);
        let mut z = vec![0.0; n * p * m];
        for j in 0..n {
            for t in 0..m {
                let out = &mut z[(t * n + j) * p..(t * n + j + 1) * p];
                for (l, o) in out.iter_mut().enumerate() {
                    *o = (0..p).map(|r| inv_sqrt[(l, r)] * x[(j * p + r) * m + t]).sum();
                }
            }
        }
        Standardized { n, p, m, z }
    }

    #[inline]
    pub fn block(&self, t: usize) -> &[f64] {
        &self.z[t * self.n * self.p..(t + 1) * self.n * self.p]
    }
}
