//! Complex fields sampled on a [`Grid`], in space or frequency representation.

use crate::error::{Error, Result};
use crate::grid::Grid;
use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;

/// Which representation an axis currently carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisDomain {
    Space,
    Frequency,
}

/// A complex-valued function sampled on a grid.
///
/// Every axis tracks its own representation so that partial transforms
/// (the mixed `(x′, ξ_m)` representation the cone transform works in) are
/// first-class. `smoothness` records the intended Sobolev membership of the
/// sampled function; it is bookkeeping only and never branches the numerics.
#[derive(Debug, Clone)]
pub struct SampledField {
    grid: Grid,
    values: ArrayD<Complex64>,
    domains: Vec<AxisDomain>,
    smoothness: Option<f64>,
}

impl SampledField {
    pub fn new(grid: Grid, values: ArrayD<Complex64>, domains: Vec<AxisDomain>) -> Result<Self> {
        if values.shape() != grid.shape().as_slice() {
            return Err(Error::GridMismatch(format!(
                "value shape {:?} does not match grid shape {:?}",
                values.shape(),
                grid.shape()
            )));
        }
        if domains.len() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "{} axis domains for a {}-d grid",
                domains.len(),
                grid.dim()
            )));
        }
        Ok(SampledField { grid, values, domains, smoothness: None })
    }

    pub fn zeros(grid: Grid, domain: AxisDomain) -> Self {
        let shape = IxDyn(&grid.shape());
        let domains = vec![domain; grid.dim()];
        SampledField {
            grid,
            values: ArrayD::zeros(shape),
            domains,
            smoothness: None,
        }
    }

    /// Sample `f` at the space nodes.
    pub fn from_space_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut field = SampledField::zeros(grid, AxisDomain::Space);
        let mut coords = vec![0.0; grid.dim()];
        for (idx, v) in field.values.indexed_iter_mut() {
            for (ax, c) in coords.iter_mut().enumerate() {
                *c = grid.space_coord(idx[ax]);
            }
            *v = f(&coords);
        }
        field
    }

    /// Sample `f` at the frequency nodes.
    pub fn from_freq_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut field = SampledField::zeros(grid, AxisDomain::Frequency);
        let mut coords = vec![0.0; grid.dim()];
        for (idx, v) in field.values.indexed_iter_mut() {
            for (ax, c) in coords.iter_mut().enumerate() {
                *c = grid.freq_coord(idx[ax]);
            }
            *v = f(&coords);
        }
        field
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &ArrayD<Complex64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut ArrayD<Complex64> {
        &mut self.values
    }

    pub fn into_values(self) -> ArrayD<Complex64> {
        self.values
    }

    pub fn domains(&self) -> &[AxisDomain] {
        &self.domains
    }

    pub(crate) fn set_domain(&mut self, axis: usize, d: AxisDomain) {
        self.domains[axis] = d;
    }

    pub fn smoothness(&self) -> Option<f64> {
        self.smoothness
    }

    pub fn with_smoothness(mut self, s: f64) -> Self {
        self.smoothness = Some(s);
        self
    }

    pub fn set_smoothness(&mut self, s: Option<f64>) {
        self.smoothness = s;
    }

    pub fn is_space(&self) -> bool {
        self.domains.iter().all(|d| *d == AxisDomain::Space)
    }

    pub fn is_frequency(&self) -> bool {
        self.domains.iter().all(|d| *d == AxisDomain::Frequency)
    }

    pub fn require_space(&self) -> Result<()> {
        if self.is_space() {
            Ok(())
        } else {
            Err(Error::RepMismatch(format!(
                "expected space representation, axes are {:?}",
                self.domains
            )))
        }
    }

    pub fn require_frequency(&self) -> Result<()> {
        if self.is_frequency() {
            Ok(())
        } else {
            Err(Error::RepMismatch(format!(
                "expected frequency representation, axes are {:?}",
                self.domains
            )))
        }
    }

    pub fn require_same_layout(&self, other: &SampledField) -> Result<()> {
        if !self.grid.same_layout(&other.grid) {
            return Err(Error::GridMismatch(
                "fields live on different grids".to_string(),
            ));
        }
        if self.domains != other.domains {
            return Err(Error::RepMismatch(
                "fields carry different axis representations".to_string(),
            ));
        }
        Ok(())
    }

    /// Discrete l² norm weighted by the cell volume of the active representation:
    /// `(Σ |v|² · w^m)^{1/2}` with `w = h` on space axes and `Δξ` on frequency axes.
    pub fn l2_norm(&self) -> f64 {
        let w: f64 = self
            .domains
            .iter()
            .map(|d| match d {
                AxisDomain::Space => self.grid.spacing(),
                AxisDomain::Frequency => self.grid.dual_spacing(),
            })
            .product();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    pub fn add(&self, other: &SampledField) -> Result<SampledField> {
        self.require_same_layout(other)?;
        let mut out = self.clone();
        out.values += &other.values;
        Ok(out)
    }

    pub fn sub(&self, other: &SampledField) -> Result<SampledField> {
        self.require_same_layout(other)?;
        let mut out = self.clone();
        out.values -= &other.values;
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> SampledField {
        let mut out = self.clone();
        out.values.mapv_inplace(|v| v * c);
        out
    }

    /// Relative l² distance `‖self − other‖ / max(‖other‖, floor)`.
    pub fn rel_l2_distance(&self, other: &SampledField) -> Result<f64> {
        let diff = self.sub(other)?;
        let denom = other.l2_norm().max(f64::MIN_POSITIVE);
        Ok(diff.l2_norm() / denom)
    }
}
