//! Uniform Cartesian grids and their frequency duals.
//!
//! A grid covers the cube `[-L, L)^m` with `N` nodes per axis. Space nodes
//! sit at `x_j = -L + j·h` with `h = 2L/N`; the dual nodes sit at
//! `ξ_k = -π/h + k·Δξ` with `Δξ = π/L`, so `h·Δξ·N = 2π` exactly and the
//! discrete transforms in [`crate::transform`] compose to the identity.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    m: usize,
    extent: f64,
    points: usize,
}

impl Grid {
    /// A grid of dimension `m` on `[-extent, extent)^m` with `points` nodes per axis.
    ///
    /// `points` must be even and at least 8. Powers of two transform fastest
    /// but any even count is accepted.
    pub fn new(m: usize, extent: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&m) {
            return Err(Error::Parameter(format!("grid dimension {m} not in 1..=3")));
        }
        if !extent.is_finite() || extent <= 0.0 {
            return Err(Error::Parameter(format!("grid extent {extent} must be positive")));
        }
        if points < 8 || points % 2 != 0 {
            return Err(Error::Parameter(format!(
                "grid points {points} must be even and >= 8"
            )));
        }
        Ok(Grid { m, extent, points })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Space step `h = 2L/N`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.points as f64
    }

    /// Dual step `Δξ = π/L`.
    pub fn dual_spacing(&self) -> f64 {
        std::f64::consts::PI / self.extent
    }

    /// Largest resolved frequency `π/h = N·Δξ/2`.
    pub fn max_frequency(&self) -> f64 {
        std::f64::consts::PI / self.spacing()
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.points; self.m]
    }

    pub fn node_count(&self) -> usize {
        self.points.pow(self.m as u32)
    }

    /// `x_j = -L + j·h` along one axis.
    pub fn space_coord(&self, j: usize) -> f64 {
        -self.extent + j as f64 * self.spacing()
    }

    /// `ξ_k = -π/h + k·Δξ` along one axis.
    pub fn freq_coord(&self, k: usize) -> f64 {
        (k as f64 - self.points as f64 / 2.0) * self.dual_spacing()
    }

    pub fn space_point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&j| self.space_coord(j)).collect()
    }

    pub fn freq_point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&k| self.freq_coord(k)).collect()
    }

    /// The `(m-1)`-dimensional grid of the first axes, used for boundary data.
    pub fn boundary(&self) -> Result<Grid> {
        if self.m < 2 {
            return Err(Error::Parameter(
                "a 1-d grid has no boundary grid".to_string(),
            ));
        }
        Grid::new(self.m - 1, self.extent, self.points)
    }

    /// Index of the node at the coordinate origin (both representations).
    pub fn origin_index(&self) -> usize {
        self.points / 2
    }

    pub fn same_layout(&self, other: &Grid) -> bool {
        self == other
    }
}
