//! Small quadrature helpers: adaptive Simpson on a panel list and the
//! paired symmetric-truncation rules the trace integrals use.

use num_complex::Complex64;

/// Adaptive Simpson for complex integrands on [a, b].
fn simpson_step(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

pub fn adaptive_simpson(f: impl Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
    let fa = f(a);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Integrate a decaying integrand over [-R, R] as ∫₀^R [f(ξ) + f(-ξ)] dξ,
/// splitting [0, R] into geometrically growing panels so the adaptive rule
/// resolves both a near-origin scale and the far tail.
pub fn paired_quadrature(
    f: impl Fn(f64) -> Complex64,
    inner_scale: f64,
    r: f64,
    tol: f64,
) -> Complex64 {
    let paired = |x: f64| f(x) + f(-x);
    let mut acc = Complex64::default();
    let mut left = 0.0f64;
    let mut right = inner_scale.min(r);
    loop {
        acc += adaptive_simpson(&paired, left, right, tol);
        if right >= r {
            break;
        }
        left = right;
        right = (right * 4.0).min(r);
    }
    acc
}

/// Least-squares fit of `w(ξ) ≈ α/ξ²` over samples `(ξ_i, w_i)` and the
/// implied analytic tail `∫_R^∞ α/ξ² dξ = α/R`.
pub fn inverse_square_tail(samples: &[(f64, Complex64)], r: f64) -> Complex64 {
    if samples.is_empty() {
        return Complex64::default();
    }
    // minimize Σ |w_i - α/ξ_i²|² ⇒ α = Σ w_i/ξ_i² / Σ 1/ξ_i⁴
    let mut num = Complex64::default();
    let mut den = 0.0;
    for &(xi, w) in samples {
        let g = 1.0 / (xi * xi);
        num += w * g;
        den += g * g;
    }
    let alpha = num / den;
    alpha / r
}
