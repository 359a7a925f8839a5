//! Time grids and trapezoidal quadrature.
//!
//! Every integral over the time domain in this crate is a weighted sum over
//! the grid; double integrals use the tensor product of the same weights.

use crate::error::{GlhtError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
    lower: f64,
    upper: f64,
}

impl Grid {
    /// `m` equally spaced points on `[a, b]`, both endpoints included.
    pub fn uniform(m: usize, a: f64, b: f64) -> Result<Self> {
        if m < 2 {
            return Err(GlhtError::InvalidArgument(format!("grid needs M >= 2 points, got {m}")));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(GlhtError::InvalidArgument(format!("grid bounds must satisfy a < b, got [{a}, {b}]")));
        }
        let h = (b - a) / (m - 1) as f64;
        let mut points: Vec<f64> = (0..m).map(|j| a + h * j as f64).collect();
        points[m - 1] = b;
        Ok(Grid { points, lower: a, upper: b })
    }

    /// Arbitrary increasing points; the domain is `[first, last]`.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(GlhtError::InvalidArgument(format!("grid needs M >= 2 points, got {}", points.len())));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(GlhtError::InvalidArgument("grid points must be finite".into()));
        }
        if let Some(j) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(GlhtError::InvalidArgument(format!(
                "grid points must be strictly increasing (index {} -> {})",
                j + 1,
                j + 2
            )));
        }
        let lower = points[0];
        let upper = *points.last().unwrap();
        Ok(Grid { points, lower, upper })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn weights(&self) -> QuadWeights {
        quad_weights(self)
    }
}

pub fn make_uniform_grid(m: usize, a: f64, b: f64) -> Result<Grid> {
    Grid::uniform(m, a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadWeights(Vec<f64>);

impl QuadWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// ∫ f dt for f sampled on the grid.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.0.len());
        self.0.iter().zip(f).map(|(w, x)| w * x).sum()
    }

    /// ∫∫ f(s,t) ds dt for f stored row-major as `f[s * M + t]`.
    pub fn integrate2(&self, f: &[f64]) -> f64 {
        let m = self.0.len();
        debug_assert_eq!(f.len(), m * m);
        self.0
            .iter()
            .enumerate()
            .map(|(s, ws)| ws * self.integrate(&f[s * m..(s + 1) * m]))
            .sum()
    }
}

impl std::ops::Index<usize> for QuadWeights {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Trapezoid weights: half-intervals at the ends, `(x[j+1] - x[j-1]) / 2` inside.
pub fn quad_weights(grid: &Grid) -> QuadWeights {
    let x = grid.points();
    let m = x.len();
    let mut w = vec![0.0; m];
    for j in 0..m - 1 {
        let half = 0.5 * (x[j + 1] - x[j]);
        w[j] += half;
        w[j + 1] += half;
    }
    QuadWeights(w)
}
