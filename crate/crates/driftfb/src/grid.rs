//! Uniform grids on the truncation box `[-R, R]^n` and fields of node values.
//!
//! The continuum problem lives on all of `R^n` with `u -> 0` at infinity; the
//! grid imposes a zero exterior condition on the box. Nodes are spaced `h`
//! apart with the origin a node, so each axis carries `N = 2R/h + 1` nodes.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub dimension: usize,
    /// Node spacing `h`.
    pub spacing: f64,
    /// Half-extent `R` of the box; `R/h` is an integer.
    pub half_extent: f64,
    /// Nodes per axis, `2R/h + 1` (odd).
    pub nodes_per_axis: usize,
}

impl Grid {
    pub fn new(dimension: usize, spacing: f64, half_extent: f64) -> Result<Self> {
        if dimension != 1 && dimension != 2 {
            return Err(Error::UnsupportedDimension(dimension));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidInput(format!(
                "spacing must be > 0, got {spacing}"
            )));
        }
        if half_extent < 4.0 {
            return Err(Error::InvalidInput(format!(
                "half-extent R must be >= 4 (box much larger than unit-scale obstacles), got {half_extent}"
            )));
        }
        let ratio = half_extent / spacing;
        let m = ratio.round();
        if (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "R/h must be an integer, got {half_extent}/{spacing} = {ratio}"
            )));
        }
        let nodes_per_axis = 2 * (m as usize) + 1;
        Ok(Self {
            dimension,
            spacing,
            half_extent,
            nodes_per_axis,
        })
    }

    pub fn node_count(&self) -> usize {
        match self.dimension {
            1 => self.nodes_per_axis,
            _ => self.nodes_per_axis * self.nodes_per_axis,
        }
    }

    /// Axis coordinate of axis-index `i`.
    #[inline]
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.half_extent + self.spacing * i as f64
    }

    /// Node position; 2-D nodes are indexed lexicographically,
    /// `idx = iy * N + ix`.
    pub fn position(&self, idx: usize) -> Vec<f64> {
        match self.dimension {
            1 => vec![self.axis_coord(idx)],
            _ => {
                let n = self.nodes_per_axis;
                vec![self.axis_coord(idx % n), self.axis_coord(idx / n)]
            }
        }
    }

    /// Index of the node nearest to `x`, or `None` outside the box.
    pub fn nearest_node(&self, x: &[f64]) -> Option<usize> {
        let n = self.nodes_per_axis;
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &c in x {
            let i = ((c + self.half_extent) / self.spacing).round();
            if i < 0.0 || i > (n - 1) as f64 {
                return None;
            }
            idx += stride * i as usize;
            stride *= n;
        }
        Some(idx)
    }

    /// Refined grid with spacing `h/2` on the same box.
    pub fn refine(&self) -> Result<Grid> {
        Grid::new(self.dimension, self.spacing / 2.0, self.half_extent)
    }
}

/// Grid samples of a scalar function.
#[derive(Debug, Clone, Serialize)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![0.0; grid.node_count()],
            grid,
        }
    }

    pub fn from_fn<F: FnMut(&[f64]) -> f64>(grid: Grid, mut f: F) -> Self {
        let values = (0..grid.node_count())
            .map(|i| f(&grid.position(i)))
            .collect();
        Self { grid, values }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "field has {} values, grid has {} nodes",
                self.values.len(),
                self.grid.node_count()
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "field value at node {i} is not finite"
            )));
        }
        Ok(())
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Bilinear (linear in 1-D) interpolation at `x`; zero outside the box.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let g = &self.grid;
        let n = g.nodes_per_axis;
        match g.dimension {
            1 => {
                let t = (x[0] + g.half_extent) / g.spacing;
                if t < 0.0 || t > (n - 1) as f64 {
                    return 0.0;
                }
                let i = (t.floor() as usize).min(n - 2);
                let frac = t - i as f64;
                self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
            }
            _ => {
                let tx = (x[0] + g.half_extent) / g.spacing;
                let ty = (x[1] + g.half_extent) / g.spacing;
                if tx < 0.0 || tx > (n - 1) as f64 || ty < 0.0 || ty > (n - 1) as f64 {
                    return 0.0;
                }
                let ix = (tx.floor() as usize).min(n - 2);
                let iy = (ty.floor() as usize).min(n - 2);
                let fx = tx - ix as f64;
                let fy = ty - iy as f64;
                let v = |a: usize, b: usize| self.values[b * n + a];
                v(ix, iy) * (1.0 - fx) * (1.0 - fy)
                    + v(ix + 1, iy) * fx * (1.0 - fy)
                    + v(ix, iy + 1) * (1.0 - fx) * fy
                    + v(ix + 1, iy + 1) * fx * fy
            }
        }
    }

    /// Prolongation to the once-refined grid by linear/bilinear interpolation.
    pub fn prolong(&self) -> Result<Field> {
        let fine = self.grid.refine()?;
        Ok(Field::from_fn(fine, |x| self.interpolate(x)))
    }
}
