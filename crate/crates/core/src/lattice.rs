//! Integer lattice points and the cell grid on the fundamental domain.
//!
//! The fundamental domain `[-1/2, 1/2)^d` is split into `G^d` congruent cells.
//! Cell `c = (c_1, .., c_d)` covers `[-1/2 + c_t/G, -1/2 + (c_t+1)/G)` along
//! each axis and is represented by its center. Cells are linearised row-major,
//! first coordinate most significant.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `Z^d`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(pub Vec<i64>);

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        Self(coords)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn sup_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// `<self, x>` for a real point `x`.
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&l, &x)| l as f64 * x).sum()
    }

    pub fn add(&self, other: &LatticePoint) -> LatticePoint {
        LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &LatticePoint) -> LatticePoint {
        LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// Ordering used when new offsets are added during multi-tile completion:
    /// sup-norm first, then coordinate-wise with `0 < 1 < -1 < 2 < -2 < ..`.
    pub fn completion_cmp(&self, other: &LatticePoint) -> Ordering {
        fn zigzag(c: i64) -> (u64, bool) {
            (c.unsigned_abs(), c < 0)
        }
        self.sup_norm().cmp(&other.sup_norm()).then_with(|| {
            self.0
                .iter()
                .map(|&c| zigzag(c))
                .cmp(other.0.iter().map(|&c| zigzag(c)))
        })
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(v: Vec<i64>) -> Self {
        Self(v)
    }
}

/// Lattice points with `|ℓ|_∞ = radius`, in [`LatticePoint::completion_cmp`] order.
pub fn shell(dim: usize, radius: i64) -> Vec<LatticePoint> {
    let side = (2 * radius + 1) as usize;
    let total = side.pow(dim as u32);
    let mut out: Vec<LatticePoint> = (0..total)
        .map(|mut idx| {
            let mut coords = vec![0i64; dim];
            for t in (0..dim).rev() {
                coords[t] = (idx % side) as i64 - radius;
                idx /= side;
            }
            LatticePoint(coords)
        })
        .filter(|p| p.sup_norm() == radius)
        .collect();
    out.sort_by(|a, b| a.completion_cmp(b));
    out
}

/// Uniform partition of the fundamental domain into `size^dim` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    pub dim: usize,
    pub size: usize,
}

impl Grid {
    pub fn new(dim: usize, size: usize) -> Result<Self> {
        if dim == 0 {
            return Err(crate::error::invalid("dim", "ambient dimension must be at least 1"));
        }
        if size == 0 {
            return Err(crate::error::invalid("grid", "need at least one cell per dimension"));
        }
        Ok(Self { dim, size })
    }

    pub fn cell_count(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    pub fn ravel(&self, index: &[usize]) -> usize {
        index.iter().fold(0, |acc, &c| acc * self.size + c)
    }

    pub fn unravel(&self, mut linear: usize) -> Vec<usize> {
        let mut index = vec![0; self.dim];
        for t in (0..self.dim).rev() {
            index[t] = linear % self.size;
            linear /= self.size;
        }
        index
    }

    /// Center of a cell, `-1/2 + (c + 1/2)/G` per axis.
    pub fn center(&self, index: &[usize]) -> Vec<f64> {
        index
            .iter()
            .map(|&c| -0.5 + (c as f64 + 0.5) / self.size as f64)
            .collect()
    }

    /// Cell containing `point`; points on the upper boundary go to the last cell.
    pub fn containing(&self, point: &[f64]) -> Vec<usize> {
        point
            .iter()
            .map(|&w| {
                let c = ((w + 0.5) * self.size as f64).floor();
                c.clamp(0.0, (self.size - 1) as f64) as usize
            })
            .collect()
    }

    pub fn check_index(&self, index: &[usize]) -> Result<()> {
        if index.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: index.len(),
            });
        }
        if let Some(&c) = index.iter().find(|&&c| c >= self.size) {
            return Err(crate::error::invalid(
                "cell index",
                format!("coordinate {c} outside grid of size {}", self.size),
            ));
        }
        Ok(())
    }

    pub fn fibers(&self) -> impl Iterator<Item = FiberPoint> + '_ {
        (0..self.cell_count()).map(|i| FiberPoint {
            grid: self.size,
            cell: self.unravel(i),
        })
    }
}

/// A frequency `ω` given as the center of a grid cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiberPoint {
    pub grid: usize,
    pub cell: Vec<usize>,
}

impl FiberPoint {
    pub fn new(grid: usize, cell: Vec<usize>) -> Self {
        Self { grid, cell }
    }

    /// The single fiber of the one-cell grid, `ω = 0`.
    pub fn origin(dim: usize) -> Self {
        Self {
            grid: 1,
            cell: vec![0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.cell.len()
    }

    pub fn coords(&self) -> Vec<f64> {
        Grid {
            dim: self.cell.len(),
            size: self.grid,
        }
        .center(&self.cell)
    }

    /// Index of the cell of a coarser grid of size `coarse` containing this
    /// point. Requires `coarse` to divide `self.grid`.
    pub fn coarsen(&self, coarse: usize) -> Result<Vec<usize>> {
        if coarse == 0 || !self.grid.is_multiple_of(coarse) {
            return Err(Error::OffGrid {
                expected: coarse,
                found: self.grid,
            });
        }
        let factor = self.grid / coarse;
        Ok(self.cell.iter().map(|&c| c / factor).collect())
    }
}

/// Sup-norm distance between two real points.
pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
