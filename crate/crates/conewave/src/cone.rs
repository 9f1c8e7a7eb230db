//! Cone geometry, the exact cone-flattening transform and its Fourier
//! conjugate, boundary traces, and boundary-layer spectra.

use crate::error::{Error, Result};
use crate::field::{AxisDomain, SampledField};
use crate::grid::Grid;
use crate::quad::inverse_square_tail;
use crate::transform::{dft_axes, Direction};
use ndarray::{ArrayD, Axis, Dimension, IxDyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Opening parameter and dimension of the cone `C^a_+ = {x_m > a|x′|}`.
///
/// `a = 0` degenerates to the half-space `{x_m > 0}`, used for baseline
/// cross-checks; its conjugate cone collapses to the ray `{τ′ = 0, τ_m > 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    pub a: f64,
    pub m: usize,
}

impl ConeParams {
    pub fn new(a: f64, m: usize) -> Result<Self> {
        if !a.is_finite() || a < 0.0 {
            return Err(Error::Parameter(format!("cone opening a = {a} must be >= 0")));
        }
        if !(2..=3).contains(&m) {
            return Err(Error::Parameter(format!("cone dimension m = {m} not in 2..=3")));
        }
        Ok(ConeParams { a, m })
    }

    fn split(x: &[f64]) -> (f64, f64) {
        let m = x.len();
        let lateral = x[..m - 1].iter().map(|c| c * c).sum::<f64>().sqrt();
        (lateral, x[m - 1])
    }

    /// Strict membership `x_m > a|x′|`.
    pub fn contains(&self, x: &[f64]) -> bool {
        let (lat, last) = Self::split(x);
        last > self.a * lat
    }

    /// Closure membership `x_m ≥ a|x′|` (interface nodes belong to the cone).
    pub fn contains_closed(&self, x: &[f64]) -> bool {
        let (lat, last) = Self::split(x);
        last >= self.a * lat
    }

    /// Strict membership of the conjugate cone `a·τ_m > |τ′|`
    /// (for `a = 0`: the ray `τ′ = 0, τ_m > 0`).
    pub fn conjugate_contains(&self, tau: &[f64]) -> bool {
        let (lat, last) = Self::split(tau);
        if self.a == 0.0 {
            lat == 0.0 && last > 0.0
        } else {
            self.a * last > lat
        }
    }

    /// Signed interface offset `x_m − a|x′|`.
    pub fn offset(&self, x: &[f64]) -> f64 {
        let (lat, last) = Self::split(x);
        last - self.a * lat
    }
}

/// Shift orientation of [`t_transform`]: `(T u)(x) = u(x′, x_m − sign·a|x′|)`.
///
/// `Plus` carries plane-supported layers onto `∂C^a_+`; `Minus` flattens
/// cone-boundary-supported fields onto `{x_m = 0}`. The two compose to the
/// identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftSign {
    Plus,
    Minus,
}

impl ShiftSign {
    pub fn value(self) -> f64 {
        match self {
            ShiftSign::Plus => 1.0,
            ShiftSign::Minus => -1.0,
        }
    }

    pub fn opposite(self) -> ShiftSign {
        match self {
            ShiftSign::Plus => ShiftSign::Minus,
            ShiftSign::Minus => ShiftSign::Plus,
        }
    }
}

/// Apply the per-column interface phase `e^{+i·sign·a|x′|·ξ_m}` to a field in
/// the mixed `(x′, ξ_m)` representation. Under the `e^{+ixξ}` forward
/// convention this realizes the exact column shift `x_m → x_m − sign·a|x′|`.
fn apply_interface_phase(field: &mut SampledField, a: f64, sign: ShiftSign) {
    let grid = *field.grid();
    let m = grid.dim();
    let s = sign.value();
    let last = Axis(m - 1);
    for (lane_idx, mut lane) in field.values_mut().lanes_mut(last).into_iter().enumerate() {
        // lane_idx enumerates the leading (m-1) space indices in row-major order
        let mut rem = lane_idx;
        let mut lat2 = 0.0;
        let mut dims = vec![0usize; m - 1];
        for ax in (0..m - 1).rev() {
            dims[ax] = rem % grid.points();
            rem /= grid.points();
        }
        for &j in &dims {
            let x = grid.space_coord(j);
            lat2 += x * x;
        }
        let shift = s * a * lat2.sqrt();
        for (k, v) in lane.iter_mut().enumerate() {
            let xi = grid.freq_coord(k);
            *v *= Complex64::from_polar(1.0, shift * xi);
        }
    }
}

/// Exact spectral realization of the cone-flattening coordinate change:
/// `(T u)(x) = u(x′, x_m − sign·a|x′|)`, computed as a phase multiplication
/// in the mixed `(x′, ξ_m)` representation — no interpolation error.
///
/// `a = 0` returns the input unchanged (the phase is identically 1).
pub fn t_transform(u: &SampledField, cone: &ConeParams, sign: ShiftSign) -> Result<SampledField> {
    u.require_space()?;
    if u.grid().dim() != cone.m {
        return Err(Error::GridMismatch(format!(
            "field dimension {} vs cone dimension {}",
            u.grid().dim(),
            cone.m
        )));
    }
    if cone.a == 0.0 {
        return Ok(u.clone());
    }
    let m = cone.m;
    let mut mixed = dft_axes(u, &[m - 1], Direction::Forward)?;
    apply_interface_phase(&mut mixed, cone.a, sign);
    dft_axes(&mixed, &[m - 1], Direction::Inverse)
}

/// Fourier conjugate of [`t_transform`]: acts on full frequency spectra as
/// `F ∘ T ∘ F^{-1}`, realized without leaving the mixed representation.
pub fn v_operator(spec: &SampledField, cone: &ConeParams, sign: ShiftSign) -> Result<SampledField> {
    spec.require_frequency()?;
    if spec.grid().dim() != cone.m {
        return Err(Error::GridMismatch(format!(
            "field dimension {} vs cone dimension {}",
            spec.grid().dim(),
            cone.m
        )));
    }
    if cone.a == 0.0 {
        return Ok(spec.clone());
    }
    let m = cone.m;
    let lateral: Vec<usize> = (0..m - 1).collect();
    let mut mixed = dft_axes(spec, &lateral, Direction::Inverse)?;
    apply_interface_phase(&mut mixed, cone.a, sign);
    dft_axes(&mixed, &lateral, Direction::Forward)
}

/// Closed form (m = 2) of the lateral Fourier transform of the interface
/// phase `e^{-ia|y′|ξ_m}`, regularized by `ξ_m → ξ_m − iε/a`:
///
/// ```text
///   E_a(ξ′, ξ_m; ε) = -i [ (aξ_m + ξ′ - iε)^{-1} + (aξ_m - ξ′ - iε)^{-1} ].
/// ```
///
/// The ε → 0⁺ limit is the distributional kernel; the sign of the
/// regularization is fixed by the decay `e^{-a|y|ε}` of the defining integral.
pub fn e_kernel(xi_lat: f64, xi_m: f64, a: f64, eps: f64) -> Result<Complex64> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("e_kernel regularization ε = {eps} must be > 0")));
    }
    let i = Complex64::new(0.0, 1.0);
    let d1 = Complex64::new(a * xi_m + xi_lat, -eps);
    let d2 = Complex64::new(a * xi_m - xi_lat, -eps);
    Ok(-i * (d1.inv() + d2.inv()))
}

/// Dirichlet data on the boundary grid (the first `m-1` axes of the solution grid).
#[derive(Debug, Clone)]
pub struct DirichletData {
    pub field: SampledField,
}

impl DirichletData {
    pub fn new(field: SampledField) -> Result<Self> {
        if field.grid().dim() < 1 {
            return Err(Error::GridMismatch("boundary data needs at least one axis".into()));
        }
        Ok(DirichletData { field })
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }
}

/// One boundary density `c_k(x′)` of the general solution, with its
/// smoothness tag `s_k = s - κ + k - 1/2`.
#[derive(Debug, Clone)]
pub struct BoundaryDensity {
    pub k_index: usize,
    pub values: SampledField,
    pub smoothness_tag: f64,
}

impl BoundaryDensity {
    pub fn new(k_index: usize, values: SampledField, s: f64, kappa: f64) -> Result<Self> {
        if k_index == 0 {
            return Err(Error::Parameter("density index k starts at 1".into()));
        }
        let smoothness_tag = s - kappa + k_index as f64 - 0.5;
        Ok(BoundaryDensity { k_index, values, smoothness_tag })
    }
}

/// Options for the ξ_m trace integral.
#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    /// Append the α/ξ² tail fitted on the outer band of the paired integrand.
    pub tail_correction: bool,
    /// Fraction of the band (from the edge inward) used for the tail fit.
    pub fit_band: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { tail_correction: true, fit_band: 0.25 }
    }
}

/// Restriction to the hyperplane `x_m = 0` in Fourier image:
/// `(2π)^{-1} ∫ ũ(ξ′, ξ_m) dξ_m`, trapezoid over the ξ_m grid.
///
/// The integral is accumulated in symmetric pairs `ũ(ξ′, ξ) + ũ(ξ′, -ξ)` so
/// that odd O(1/ξ_m) parts cancel exactly (principal value on the grid), and
/// the even O(1/ξ_m²) remainder can be completed by the fitted analytic tail.
pub fn boundary_trace(spec: &SampledField, opts: TraceOptions) -> Result<DirichletData> {
    spec.require_frequency()?;
    let grid = spec.grid();
    let m = grid.dim();
    if m < 2 {
        return Err(Error::GridMismatch("trace needs m >= 2".into()));
    }
    let n = grid.points();
    let dxi = grid.dual_spacing();
    let bgrid = grid.boundary()?;
    let mut out = SampledField::zeros(bgrid, AxisDomain::Frequency);
    let half = n / 2;
    let fit_lo = ((1.0 - opts.fit_band) * (half as f64 - 1.0)) as usize;

    let values = spec.values();
    for (bidx, acc) in out.values_mut().indexed_iter_mut() {
        let mut idx: Vec<usize> = bidx.slice().to_vec();
        idx.push(half);
        let at = |idx: &mut Vec<usize>, k: usize| -> Complex64 {
            idx[m - 1] = k;
            values[IxDyn(idx)]
        };
        // center node ξ_m = 0, then symmetric pairs; the unpaired node at
        // -ξ_max is dropped — the trace is the symmetric truncation over
        // (-ξ_max, ξ_max) and the tail picks up from the covered band edge
        let mut sum = at(&mut idx, half);
        let mut fit_samples: Vec<(f64, Complex64)> = Vec::new();
        for p in 1..half {
            let w = at(&mut idx, half + p) + at(&mut idx, half - p);
            sum += w;
            if p >= fit_lo {
                fit_samples.push((p as f64 * dxi, w));
            }
        }
        let mut total = sum * dxi;
        if opts.tail_correction {
            total += inverse_square_tail(&fit_samples, grid.max_frequency() - 0.5 * dxi);
        }
        *acc = total / (2.0 * std::f64::consts::PI);
    }
    Ok(DirichletData::new(out)?)
}

/// Spectrum of the boundary layer `Σ_k c_k(x′) δ^{(k-1)}(x_m)`:
/// `Σ_k c̃_k(ξ′) · (-iξ_m)^{k-1}` under the `e^{+ixξ}` forward convention.
///
/// Densities must carry distinct indices `k = 1..n`; boundary values may be
/// given in space (they are transformed) or frequency representation.
pub fn delta_layer(densities: &[BoundaryDensity], grid: &Grid) -> Result<SampledField> {
    let mut seen = std::collections::BTreeSet::new();
    for d in densities {
        if !seen.insert(d.k_index) {
            return Err(Error::Parameter(format!("duplicate density index k = {}", d.k_index)));
        }
        if d.k_index > densities.len() {
            return Err(Error::Parameter(format!(
                "density index k = {} exceeds n = {}",
                d.k_index,
                densities.len()
            )));
        }
    }
    let bgrid = grid.boundary()?;
    let mut out = SampledField::zeros(*grid, AxisDomain::Frequency);
    let m = grid.dim();
    for d in densities {
        if !d.values.grid().same_layout(&bgrid) {
            return Err(Error::GridMismatch(
                "density grid does not match the boundary grid".into(),
            ));
        }
        let spec = if d.values.is_space() {
            crate::transform::dft_forward(&d.values)?
        } else {
            d.values.require_frequency()?;
            d.values.clone()
        };
        let pw = d.k_index as u32 - 1;
        for (idx, v) in out.values_mut().indexed_iter_mut() {
            let bidx: Vec<usize> = idx.slice()[..m - 1].to_vec();
            let xi_m = grid.freq_coord(idx[m - 1]);
            let factor = Complex64::new(0.0, -xi_m).powu(pw);
            *v += spec.values()[IxDyn(&bidx)] * factor;
        }
    }
    Ok(out)
}

/// Indicator of the closed cone sampled on the space grid.
pub fn cone_indicator(grid: &Grid, cone: &ConeParams) -> ArrayD<f64> {
    let mut chi = ArrayD::zeros(IxDyn(&grid.shape()));
    let mut coords = vec![0.0; grid.dim()];
    for (idx, v) in chi.indexed_iter_mut() {
        for (ax, c) in coords.iter_mut().enumerate() {
            *c = grid.space_coord(idx[ax]);
        }
        if cone.contains_closed(&coords) {
            *v = 1.0;
        }
    }
    chi
}
