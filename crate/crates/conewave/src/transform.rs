//! Discrete Fourier transforms matching the continuum convention
//!
//! ```text
//!   ũ(ξ) = ∫ e^{+i x·ξ} u(x) dx,      u(x) = (2π)^{-m} ∫ e^{-i x·ξ} ũ(ξ) dξ,
//! ```
//!
//! discretized by the trapezoid rule on the symmetric grid. With
//! `x_j = (j - N/2) h` and `ξ_k = (k - N/2) Δξ`, the phase factors split as
//! `e^{± i x_j ξ_k} = (±i)^N (-1)^{j+k} ω^{± jk}`, so each 1-d pass is an FFT
//! with `(-1)^j` twiddles and a global unit factor. `h·Δξ·N = 2π` makes the
//! round trip exact up to FFT rounding.

use crate::error::{Error, Result};
use crate::field::{AxisDomain, SampledField};
use ndarray::Axis;
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// i^N as a unit complex number.
fn i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn plan(n: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    // A process-wide planner so repeated transforms reuse twiddle tables.
    static PLANNER: Mutex<Option<FftPlanner<f64>>> = Mutex::new(None);
    let mut guard = PLANNER.lock().unwrap();
    let planner = guard.get_or_insert_with(FftPlanner::new);
    planner.plan_fft(n, dir)
}

/// One 1-d pass along `axis`. `scale` is `h` (forward) or `1/(N h)` (inverse);
/// `global` is `i^N` or `(-i)^N`.
fn transform_axis(field: &mut SampledField, axis: usize, dir: Direction) {
    let n = field.grid().points();
    let (scale, global, fft_dir) = match dir {
        // Σ_j ω^{+jk} is rustfft's inverse direction.
        Direction::Forward => (field.grid().spacing(), i_pow(n), FftDirection::Inverse),
        Direction::Inverse => (
            1.0 / (n as f64 * field.grid().spacing()),
            i_pow(n).conj(),
            FftDirection::Forward,
        ),
    };
    let fft = plan(n, fft_dir);
    let prefactor = global * scale;
    let mut scratch = vec![Complex64::default(); n];
    for mut lane in field.values_mut().lanes_mut(Axis(axis)) {
        for (p, (s, v)) in scratch.iter_mut().zip(lane.iter()).enumerate() {
            *s = if p % 2 == 0 { *v } else { -*v };
        }
        fft.process(&mut scratch);
        for (p, (v, s)) in lane.iter_mut().zip(scratch.iter()).enumerate() {
            *v = prefactor * if p % 2 == 0 { *s } else { -*s };
        }
    }
}

/// Transform the listed axes (1-based would be ambiguous: axes are 0-based here).
///
/// Each requested axis must currently be in the representation the direction
/// departs from; composing per-axis passes over all axes equals the full
/// transform.
pub fn dft_axes(field: &SampledField, axes: &[usize], dir: Direction) -> Result<SampledField> {
    let m = field.grid().dim();
    let mut seen = vec![false; m];
    for &ax in axes {
        if ax >= m {
            return Err(Error::Parameter(format!("axis {ax} out of range for m={m}")));
        }
        if seen[ax] {
            return Err(Error::Parameter(format!("axis {ax} listed twice")));
        }
        seen[ax] = true;
        let expected = match dir {
            Direction::Forward => AxisDomain::Space,
            Direction::Inverse => AxisDomain::Frequency,
        };
        if field.domains()[ax] != expected {
            return Err(Error::RepMismatch(format!(
                "axis {ax} is {:?}, cannot apply {dir:?} transform",
                field.domains()[ax]
            )));
        }
    }
    let mut out = field.clone();
    for &ax in axes {
        transform_axis(&mut out, ax, dir);
        out.set_domain(
            ax,
            match dir {
                Direction::Forward => AxisDomain::Frequency,
                Direction::Inverse => AxisDomain::Space,
            },
        );
    }
    Ok(out)
}

/// Full forward transform: space → frequency.
pub fn dft_forward(field: &SampledField) -> Result<SampledField> {
    field.require_space()?;
    let axes: Vec<usize> = (0..field.grid().dim()).collect();
    dft_axes(field, &axes, Direction::Forward)
}

/// Full inverse transform: frequency → space.
pub fn dft_inverse(field: &SampledField) -> Result<SampledField> {
    field.require_frequency()?;
    let axes: Vec<usize> = (0..field.grid().dim()).collect();
    dft_axes(field, &axes, Direction::Inverse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use ndarray::IxDyn;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid, seed: u64) -> SampledField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SampledField::zeros(grid, AxisDomain::Space);
        for v in f.values_mut().iter_mut() {
            *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        f
    }

    #[test]
    fn point_mass_transforms_to_constant() {
        let grid = Grid::new(2, 10.0, 64).unwrap();
        let h = grid.spacing();
        let mut u = SampledField::zeros(grid, AxisDomain::Space);
        let c = grid.origin_index();
        u.values_mut()[IxDyn(&[c, c])] = Complex64::new(1.0 / (h * h), 0.0);
        let spec = dft_forward(&u).unwrap();
        for v in spec.values().iter() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn gaussian_pair_m2() {
        // u(x) = e^{-|x|²/2}  ⇒  ũ(ξ) = 2π e^{-|ξ|²/2} for m = 2.
        let grid = Grid::new(2, 10.0, 256).unwrap();
        let u = SampledField::from_space_fn(grid, |x| {
            Complex64::new((-0.5 * (x[0] * x[0] + x[1] * x[1])).exp(), 0.0)
        });
        let spec = dft_forward(&u).unwrap();
        let expected = SampledField::from_freq_fn(grid, |xi| {
            Complex64::new(
                2.0 * std::f64::consts::PI * (-0.5 * (xi[0] * xi[0] + xi[1] * xi[1])).exp(),
                0.0,
            )
        });
        // Relative error at interior nodes (|ξ| ≲ 4.3, where the analytic value
        // clears the FFT roundoff floor ~‖û‖·1e-15; truncation/aliasing of the
        // Gaussian itself is e^{-2L²} ≈ 1e-87, far below either).
        let mut worst = 0.0f64;
        for (a, b) in spec.values().iter().zip(expected.values().iter()) {
            if b.re > 1e-4 {
                worst = worst.max((a - b).norm() / b.norm());
            }
        }
        assert!(worst < 1e-10, "worst rel err {worst:e}");

        let back = dft_inverse(&expected).unwrap();
        let rel = back.rel_l2_distance(&u).unwrap();
        assert!(rel < 1e-10, "inverse Gaussian rel err {rel:e}");
    }

    #[test]
    fn round_trip_identity() {
        let grid = Grid::new(2, 10.0, 128).unwrap();
        let u = random_field(grid, 7);
        let back = dft_inverse(&dft_forward(&u).unwrap()).unwrap();
        assert!(back.rel_l2_distance(&u).unwrap() < 1e-12);

        let grid3 = Grid::new(3, 6.0, 16).unwrap();
        let u3 = random_field(grid3, 9);
        let back3 = dft_inverse(&dft_forward(&u3).unwrap()).unwrap();
        assert!(back3.rel_l2_distance(&u3).unwrap() < 1e-12);
    }

    #[test]
    fn constant_spectrum_is_point_mass() {
        let grid = Grid::new(2, 10.0, 64).unwrap();
        let ones = SampledField::from_freq_fn(grid, |_| Complex64::new(1.0, 0.0));
        let u = dft_inverse(&ones).unwrap();
        let h = grid.spacing();
        let c = grid.origin_index();
        for (idx, v) in u.values().indexed_iter() {
            let expected = if idx[0] == c && idx[1] == c { 1.0 / (h * h) } else { 0.0 };
            assert!((v.re - expected).abs() < 1e-9 && v.im.abs() < 1e-9);
        }
    }

    #[test]
    fn zero_field_stays_zero() {
        let grid = Grid::new(2, 10.0, 32).unwrap();
        let z = SampledField::zeros(grid, AxisDomain::Space);
        let spec = dft_forward(&z).unwrap();
        assert_eq!(spec.l2_norm(), 0.0);
    }

    #[test]
    fn axis_composition_equals_full_transform() {
        let grid = Grid::new(2, 10.0, 64).unwrap();
        let u = random_field(grid, 21);
        let last_then_rest = dft_axes(
            &dft_axes(&u, &[1], Direction::Forward).unwrap(),
            &[0],
            Direction::Forward,
        )
        .unwrap();
        let full = dft_forward(&u).unwrap();
        assert!(last_then_rest.rel_l2_distance(&full).unwrap() < 1e-12);
    }

    #[test]
    fn separable_partial_transform_matches_quadrature() {
        // u(x₁, x₂) = a(x₁) b(x₂); transforming only the last axis gives
        // a(x₁)·b̃(ξ₂), checked against direct trapezoid quadrature of b̃.
        let grid = Grid::new(2, 10.0, 128).unwrap();
        let a = |x: f64| (-0.7 * x * x).exp();
        let b = |x: f64| (-x * x) .exp() * (1.3 * x).cos();
        let u = SampledField::from_space_fn(grid, |x| Complex64::new(a(x[0]) * b(x[1]), 0.0));
        let mixed = dft_axes(&u, &[1], Direction::Forward).unwrap();
        let h = grid.spacing();
        let n = grid.points();
        for &k in &[10usize, 64, 100] {
            let xi = grid.freq_coord(k);
            // independent quadrature oracle for b̃(ξ)
            let mut bt = Complex64::default();
            for j in 0..n {
                let x = grid.space_coord(j);
                bt += Complex64::from_polar(1.0, x * xi) * b(x) * h;
            }
            for &j1 in &[32usize, 64, 90] {
                let got = mixed.values()[IxDyn(&[j1, k])];
                let want = bt * a(grid.space_coord(j1));
                assert!((got - want).norm() <= 1e-8 * (1.0 + want.norm()));
            }
        }
    }

    #[test]
    fn repeated_axis_rejected() {
        let grid = Grid::new(2, 10.0, 32).unwrap();
        let u = SampledField::zeros(grid, AxisDomain::Space);
        assert!(dft_axes(&u, &[1, 1], Direction::Forward).is_err());
    }

    #[test]
    fn wrong_representation_rejected() {
        let grid = Grid::new(2, 10.0, 32).unwrap();
        let u = SampledField::zeros(grid, AxisDomain::Space);
        assert!(dft_inverse(&u).is_err());
        let s = dft_forward(&u).unwrap();
        assert!(dft_forward(&s).is_err());
    }

    #[test]
    fn parseval_identity() {
        let grid = Grid::new(2, 10.0, 64).unwrap();
        let u = random_field(grid, 3);
        let spec = dft_forward(&u).unwrap();
        let space_norm = u.l2_norm();
        let freq_norm = crate::multiplier::sobolev_norm(&spec, 0.0).unwrap();
        assert!((space_norm - freq_norm).abs() <= 1e-10 * space_norm);
    }
}
