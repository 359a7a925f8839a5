//! k independent samples of p-variate curves on one shared grid.
//!
//! Files use a long format, one value per row:
//!
//! ```text
//! group,obs,component,time_index,value[,time]
//! ```
//!
//! Indices are 1-based in files and 0-based in memory. The optional `time`
//! column defines the grid; otherwise the grid is uniform on the bounds in
//! [`LoadOptions`] with M equal to the largest time index.

use crate::error::{GlhtError, Result};
use crate::grid::Grid;
use std::collections::HashMap;
use std::io::{Read, Write};

/// Curves of one group, stored observation-major: `values[(j * p + l) * m + t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSample {
    n: usize,
    p: usize,
    m: usize,
    values: Vec<f64>,
}

impl GroupSample {
    pub fn new(n: usize, p: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * p * m {
            return Err(GlhtError::Validation(format!(
                "group buffer has {} values, expected n*p*M = {}",
                values.len(),
                n * p * m
            )));
        }
        Ok(GroupSample { n, p, m, values })
    }

    /// Builds a group from a closure `f(obs, component, time_index)`.
    pub fn from_fn(n: usize, p: usize, m: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n * p * m);
        for j in 0..n {
            for l in 0..p {
                for t in 0..m {
                    values.push(f(j, l, t));
                }
            }
        }
        GroupSample { n, p, m, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn value(&self, j: usize, l: usize, t: usize) -> f64 {
        self.values[(j * self.p + l) * self.m + t]
    }

    /// Component `l` of observation `j` across the grid.
    pub fn curve(&self, j: usize, l: usize) -> &[f64] {
        let start = (j * self.p + l) * self.m;
        &self.values[start..start + self.m]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    grid: Grid,
    p: usize,
    groups: Vec<GroupSample>,
}

impl FunctionalDataset {
    pub fn new(grid: Grid, groups: Vec<GroupSample>) -> Result<Self> {
        let p = groups.first().map_or(0, |g| g.p);
        let ds = FunctionalDataset { grid, p, groups };
        ds.validate()?;
        Ok(ds)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.grid.len()
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[GroupSample] {
        &self.groups
    }

    pub fn group(&self, i: usize) -> &GroupSample {
        &self.groups[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.n).collect()
    }

    pub fn total_n(&self) -> usize {
        self.groups.iter().map(|g| g.n).sum()
    }

    pub fn validate(&self) -> Result<()> {
        validate(self)
    }

    /// Applies `y(t) -> A y(t) + b(t)` to every curve; `b` is `p × M`,
    /// row-major (`b[l * M + t]`).
    pub fn affine(&self, a: &nalgebra::DMatrix<f64>, b: &[f64]) -> Result<Self> {
        let (p, m) = (self.p, self.m());
        if a.nrows() != p || a.ncols() != p || b.len() != p * m {
            return Err(GlhtError::InvalidArgument("affine map has wrong shape".into()));
        }
        let groups = self
            .groups
            .iter()
            .map(|g| {
                GroupSample::from_fn(g.n, p, m, |j, l, t| {
                    b[l * m + t] + (0..p).map(|r| a[(l, r)] * g.value(j, r, t)).sum::<f64>()
                })
            })
            .collect();
        FunctionalDataset::new(self.grid.clone(), groups)
    }

    /// Pools all observations and redistributes them into groups of the
    /// given sizes following `order` (a permutation of `0..total_n`).
    pub fn regroup(&self, order: &[usize], sizes: &[usize]) -> Result<Self> {
        let total = self.total_n();
        if order.len() != total || sizes.iter().sum::<usize>() != total {
            return Err(GlhtError::InvalidArgument("regroup sizes do not match the data".into()));
        }
        let pooled: Vec<&[f64]> = self
            .groups
            .iter()
            .flat_map(|g| g.values.chunks(g.p * g.m))
            .collect();
        let mut next = order.iter();
        let groups = sizes
            .iter()
            .map(|&n| {
                let mut values = Vec::with_capacity(n * self.p * self.m());
                for _ in 0..n {
                    values.extend_from_slice(pooled[*next.next().unwrap()]);
                }
                GroupSample { n, p: self.p, m: self.m(), values }
            })
            .collect();
        FunctionalDataset::new(self.grid.clone(), groups)
    }
}

pub fn validate(ds: &FunctionalDataset) -> Result<()> {
    if ds.groups.is_empty() {
        return Err(GlhtError::Validation("dataset has zero groups".into()));
    }
    if ds.p == 0 {
        return Err(GlhtError::Validation("curves must have at least one component".into()));
    }
    let m = ds.grid.len();
    for (i, g) in ds.groups.iter().enumerate() {
        if g.n == 0 {
            return Err(GlhtError::Validation(format!("group {} has no observations", i + 1)));
        }
        if g.p != ds.p {
            return Err(GlhtError::Validation(format!(
                "component count mismatch: group {} has p = {}, group 1 has p = {}",
                i + 1,
                g.p,
                ds.p
            )));
        }
        if g.m != m {
            return Err(GlhtError::Validation(format!(
                "group {} has {} time points but the grid has {m}",
                i + 1,
                g.m
            )));
        }
        if g.values.len() != g.n * g.p * g.m {
            return Err(GlhtError::Validation(format!("group {} buffer has the wrong length", i + 1)));
        }
        if let Some(pos) = g.values.iter().position(|v| !v.is_finite()) {
            let (j, l, t) = (pos / (g.p * m), (pos / m) % g.p, pos % m);
            return Err(GlhtError::Validation(format!(
                "non-finite value at (group {}, obs {}, component {}, time_index {})",
                i + 1,
                j + 1,
                l + 1,
                t + 1
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Domain used when the file carries no `time` column.
    pub domain: (f64, f64),
    /// Explicit grid; overrides both `domain` and any `time` column.
    pub grid: Option<Grid>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { domain: (0.0, 1.0), grid: None }
    }
}

type Cell = (usize, usize, usize, usize);

fn ingest(msg: impl Into<String>) -> GlhtError {
    GlhtError::Ingestion(msg.into())
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name))
}

fn parse_index(field: &str, name: &str, line: u64) -> Result<usize> {
    match field.trim().parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v - 1),
        _ => Err(ingest(format!("line {line}: {name} must be a positive integer, got {field:?}"))),
    }
}

fn parse_value(field: &str, name: &str, line: u64) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| ingest(format!("line {line}: cannot parse {name} {field:?} as a number")))
}

pub fn load_csv<R: Read>(source: R, options: &LoadOptions) -> Result<FunctionalDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers().map_err(|e| ingest(format!("cannot read header: {e}")))?.clone();
    let need = ["group", "obs", "component", "time_index", "value"];
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(need) {
        *slot = column(&headers, name).ok_or_else(|| ingest(format!("header lacks a `{name}` column")))?;
    }
    let time_col = column(&headers, "time").or_else(|| column(&headers, "grid"));

    let mut cells: HashMap<Cell, f64> = HashMap::new();
    let mut times: HashMap<usize, f64> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| ingest(format!("malformed CSV: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |c: usize| record.get(c).unwrap_or("");
        let cell = (
            parse_index(field(idx[0]), "group", line)?,
            parse_index(field(idx[1]), "obs", line)?,
            parse_index(field(idx[2]), "component", line)?,
            parse_index(field(idx[3]), "time_index", line)?,
        );
        let value = parse_value(field(idx[4]), "value", line)?;
        if !value.is_finite() {
            return Err(ingest(format!(
                "non-finite value at (group {}, obs {}, component {}, time_index {})",
                cell.0 + 1,
                cell.1 + 1,
                cell.2 + 1,
                cell.3 + 1
            )));
        }
        if let Some(c) = time_col {
            let tv = parse_value(field(c), "time", line)?;
            if let Some(old) = times.insert(cell.3, tv) {
                if old != tv {
                    return Err(ingest(format!("line {line}: time_index {} has conflicting times", cell.3 + 1)));
                }
            }
        }
        if cells.insert(cell, value).is_some() {
            return Err(ingest(format!(
                "duplicate cell (group {}, obs {}, component {}, time_index {})",
                cell.0 + 1,
                cell.1 + 1,
                cell.2 + 1,
                cell.3 + 1
            )));
        }
    }
    if cells.is_empty() {
        return Err(ingest("no data rows"));
    }

    let k = cells.keys().map(|c| c.0).max().unwrap() + 1;
    let mut n = vec![0usize; k];
    let mut p = vec![0usize; k];
    let mut m = vec![0usize; k];
    for &(g, j, l, t) in cells.keys() {
        n[g] = n[g].max(j + 1);
        p[g] = p[g].max(l + 1);
        m[g] = m[g].max(t + 1);
    }
    for g in 0..k {
        if n[g] == 0 {
            return Err(ingest(format!("group {} has no rows", g + 1)));
        }
        if p[g] != p[0] {
            return Err(ingest(format!(
                "component count mismatch: group {} has p = {}, group 1 has p = {}",
                g + 1,
                p[g],
                p[0]
            )));
        }
        if m[g] != m[0] {
            return Err(ingest(format!(
                "time point count mismatch: group {} has M = {}, group 1 has M = {}",
                g + 1,
                m[g],
                m[0]
            )));
        }
    }
    let (p, m) = (p[0], m[0]);

    let grid = match (&options.grid, time_col) {
        (Some(grid), _) => {
            if grid.len() != m {
                return Err(ingest(format!("supplied grid has {} points but the data has M = {m}", grid.len())));
            }
            grid.clone()
        }
        (None, Some(_)) => {
            let pts = (0..m)
                .map(|t| times.get(&t).copied().ok_or_else(|| ingest(format!("no time for time_index {}", t + 1))))
                .collect::<Result<Vec<_>>>()?;
            Grid::from_points(pts).map_err(|e| ingest(format!("bad time column: {e}")))?
        }
        (None, None) => Grid::uniform(m, options.domain.0, options.domain.1)?,
    };

    let mut groups = Vec::with_capacity(k);
    for g in 0..k {
        let mut values = Vec::with_capacity(n[g] * p * m);
        for j in 0..n[g] {
            for l in 0..p {
                for t in 0..m {
                    let v = cells.get(&(g, j, l, t)).ok_or_else(|| {
                        ingest(format!(
                            "missing cell (group {}, obs {}, component {}, time_index {})",
                            g + 1,
                            j + 1,
                            l + 1,
                            t + 1
                        ))
                    })?;
                    values.push(*v);
                }
            }
        }
        groups.push(GroupSample { n: n[g], p, m, values });
    }
    FunctionalDataset::new(grid, groups)
}

/// Writes the long format with a `time` column. Values use 17 significant
/// digits, so reading the file back reproduces every double exactly.
pub fn write_csv<W: Write>(ds: &FunctionalDataset, sink: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(sink);
    let io = |e: std::io::Error| GlhtError::InvalidArgument(format!("write failed: {e}"));
    writeln!(out, "group,obs,component,time_index,value,time").map_err(io)?;
    let pts = ds.grid.points();
    for (i, g) in ds.groups.iter().enumerate() {
        for j in 0..g.n {
            for l in 0..g.p {
                for (t, x) in g.curve(j, l).iter().enumerate() {
                    writeln!(out, "{},{},{},{},{:.16e},{:.16e}", i + 1, j + 1, l + 1, t + 1, x, pts[t]).map_err(io)?;
                }
            }
        }
    }
    out.flush().map_err(io)
}
