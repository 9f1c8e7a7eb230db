//! Fourier multipliers and the weighted Sobolev norm.

use crate::error::{Error, Result};
use crate::field::SampledField;
use ndarray::Dimension;
use num_complex::Complex64;
use std::sync::Arc;

/// A function of the frequency variable applied pointwise in Fourier image,
/// together with its growth order.
#[derive(Clone)]
pub struct Multiplier {
    order: f64,
    eval: Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>,
}

impl Multiplier {
    pub fn new(order: f64, eval: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static) -> Self {
        Multiplier { order, eval: Arc::new(eval) }
    }

    pub fn constant(c: Complex64) -> Self {
        Multiplier::new(0.0, move |_| c)
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        (self.eval)(xi)
    }
}

impl std::fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Multiplier").field("order", &self.order).finish()
    }
}

/// Pointwise product `values[k] ← mult(ξ_k)·values[k]`.
///
/// The smoothness tag drops by the multiplier order. A non-finite evaluator
/// value at any grid node aborts with the offending nodes listed.
pub fn apply_multiplier(spec: &SampledField, mult: &Multiplier) -> Result<SampledField> {
    spec.require_frequency()?;
    let grid = *spec.grid();
    let mut out = spec.clone();
    let mut bad: Vec<Vec<usize>> = Vec::new();
    let mut coords = vec![0.0; grid.dim()];
    for (idx, v) in out.values_mut().indexed_iter_mut() {
        for (ax, c) in coords.iter_mut().enumerate() {
            *c = grid.freq_coord(idx[ax]);
        }
        let m = mult.eval(&coords);
        if !m.re.is_finite() || !m.im.is_finite() {
            if bad.len() < 8 {
                bad.push(idx.slice().to_vec());
            } else {
                bad.push(idx.slice().to_vec());
                break;
            }
        }
        *v *= m;
    }
    if !bad.is_empty() {
        let count = bad.len();
        bad.truncate(4);
        return Err(Error::SingularNodes { count, first: bad });
    }
    out.set_smoothness(spec.smoothness().map(|s| s - mult.order()));
    Ok(out)
}

/// Discrete H^s norm: `((2π)^{-m} Σ (1+|ξ_k|²)^s |v_k|² Δξ^m)^{1/2}`.
///
/// At `s = 0` this is the Parseval partner of the space-side l² norm.
pub fn sobolev_norm(spec: &SampledField, s: f64) -> Result<f64> {
    spec.require_frequency()?;
    let grid = spec.grid();
    let m = grid.dim();
    let cell = grid.dual_spacing().powi(m as i32);
    let two_pi_pow = (2.0 * std::f64::consts::PI).powi(m as i32);
    let mut acc = 0.0;
    for (idx, v) in spec.values().indexed_iter() {
        let mut xi2 = 0.0;
        for ax in 0..m {
            let c = grid.freq_coord(idx[ax]);
            xi2 += c * c;
        }
        acc += (1.0 + xi2).powf(s) * v.norm_sqr();
    }
    Ok((acc * cell / two_pi_pow).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AxisDomain;
    use crate::grid::Grid;
    use crate::transform::{dft_forward, dft_inverse};
    use ndarray::IxDyn;

    fn gaussian_field(grid: Grid) -> SampledField {
        SampledField::from_space_fn(grid, |x| {
            Complex64::new((-0.5 * x.iter().map(|c| c * c).sum::<f64>()).exp(), 0.0)
        })
    }

    #[test]
    fn unit_multiplier_is_identity() {
        let grid = Grid::new(2, 10.0, 64).unwrap();
        let spec = dft_forward(&gaussian_field(grid)).unwrap();
        let out = apply_multiplier(&spec, &Multiplier::constant(Complex64::new(1.0, 0.0))).unwrap();
        assert!(out.rel_l2_distance(&spec).unwrap() < 1e-15);
    }

    #[test]
    fn laplacian_of_gaussian_at_origin() {
        // |ξ|²-multiplier on e^{-|x|²/2}: the space-side result at x = 0 is
        // (m - |x|²) e^{-|x|²/2} |₀ = 2 for m = 2.
        let grid = Grid::new(2, 10.0, 256).unwrap();
        let spec = dft_forward(&gaussian_field(grid)).unwrap();
        let mult = Multiplier::new(2.0, |xi| {
            Complex64::new(xi.iter().map(|c| c * c).sum::<f64>(), 0.0)
        });
        let out = dft_inverse(&apply_multiplier(&spec, &mult).unwrap()).unwrap();
        let c = grid.origin_index();
        let v = out.values()[IxDyn(&[c, c])];
        assert!((v.re - 2.0).abs() < 1e-8 * 2.0, "got {v}");
        assert!(v.im.abs() < 1e-10);
    }

    #[test]
    fn i_xi_multiplier_is_minus_ddxm() {
        // Under the e^{+ixξ} forward convention, F[∂u/∂x_m] = -i ξ_m ũ, so the
        // multiplier iξ_m inverts to -∂u/∂x_m. Oracle: fourth-order central
        // finite differences (truncation ~h⁴·u⁽⁵⁾/30 ≈ 2e-7 at N = 512).
        let grid = Grid::new(2, 10.0, 512).unwrap();
        let u = gaussian_field(grid);
        let spec = dft_forward(&u).unwrap();
        let mult = Multiplier::new(1.0, |xi| Complex64::new(0.0, 1.0) * xi[1]);
        let out = dft_inverse(&apply_multiplier(&spec, &mult).unwrap()).unwrap();
        let h = grid.spacing();
        let n = grid.points();
        let mut worst = 0.0f64;
        for j1 in (80..n - 80).step_by(37) {
            for j2 in (80..n - 80).step_by(29) {
                let s = |dj: i64| u.values()[IxDyn(&[j1, (j2 as i64 + dj) as usize])].re;
                let fd = (-s(2) + 8.0 * s(1) - 8.0 * s(-1) + s(-2)) / (12.0 * h);
                let got = out.values()[IxDyn(&[j1, j2])].re;
                worst = worst.max((got + fd).abs());
            }
        }
        // max |∂_m u| = e^{-1/2} ≈ 0.61; demand 1e-6 relative to that scale
        assert!(worst < 1e-6, "worst |iξ_m·u + ∂_m u| = {worst:e}");
    }

    #[test]
    fn singular_multiplier_reports_nodes() {
        let grid = Grid::new(2, 10.0, 32).unwrap();
        let spec = dft_forward(&gaussian_field(grid)).unwrap();
        let mult = Multiplier::new(-1.0, |xi| {
            Complex64::new(1.0 / (xi[0] * xi[0] + xi[1] * xi[1]), 0.0)
        });
        match apply_multiplier(&spec, &mult) {
            Err(Error::SingularNodes { count, .. }) => assert!(count >= 1),
            other => panic!("expected singular-node error, got {other:?}"),
        }
    }

    #[test]
    fn sobolev_norm_gaussian_against_quadrature() {
        // s = 1 norm of the Gaussian spectrum vs direct quadrature of
        // (2π)^{-2} (1+|ξ|²) |2π e^{-|ξ|²/2}|² over a fine independent grid.
        let grid = Grid::new(2, 10.0, 128).unwrap();
        let spec = dft_forward(&gaussian_field(grid)).unwrap();
        let got = sobolev_norm(&spec, 1.0).unwrap();

        let k = 4000usize;
        let lim = 12.0;
        let step = 2.0 * lim / k as f64;
        let mut acc = 0.0;
        for i in 0..k {
            let x = -lim + (i as f64 + 0.5) * step;
            for j in 0..k {
                let y = -lim + (j as f64 + 0.5) * step;
                let r2 = x * x + y * y;
                acc += (1.0 + r2) * (-r2).exp() * step * step;
            }
        }
        let want = acc.sqrt();
        assert!(
            (got - want).abs() <= 1e-8 * want,
            "sobolev {got} vs quadrature {want}"
        );
    }

    #[test]
    fn zero_norm() {
        let grid = Grid::new(2, 10.0, 32).unwrap();
        let z = SampledField::zeros(grid, AxisDomain::Frequency);
        assert_eq!(sobolev_norm(&z, 1.5).unwrap(), 0.0);
    }
}
