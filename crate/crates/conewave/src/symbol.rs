//! Elliptic symbols, wave-factorization pairs, a verified catalog, and
//! numerical probes for the factorization definition (product identity,
//! tube-domain analyticity, growth estimates).

use crate::cone::ConeParams;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::multiplier::Multiplier;
use ndarray::{ArrayD, Dimension, IxDyn};
use num_complex::Complex64;
use std::sync::Arc;

/// Singular set excluded from ellipticity scans and factor inversions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingularSet {
    Empty,
    /// The single point ξ = 0.
    Origin,
    /// The light cone { |ξ′| = a·|ξ_m| }.
    LightCone { a: f64 },
}

impl SingularSet {
    /// Euclidean distance from ξ to the set (∞ for the empty set).
    pub fn distance(&self, xi: &[f64]) -> f64 {
        let m = xi.len();
        let lat = xi[..m - 1].iter().map(|c| c * c).sum::<f64>().sqrt();
        let last = xi[m - 1];
        match self {
            SingularSet::Empty => f64::INFINITY,
            SingularSet::Origin => (lat * lat + last * last).sqrt(),
            SingularSet::LightCone { a } => (lat - a * last.abs()).abs() / (1.0 + a * a).sqrt(),
        }
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        self.distance(xi) == 0.0
    }
}

/// A symbol `A(ξ)` with `c₁ ≤ |A(ξ)|(1+|ξ|)^{-α} ≤ c₂` away from its
/// singular set.
#[derive(Clone)]
pub struct EllipticSymbol {
    order: f64,
    singular: SingularSet,
    eval: Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>,
}

impl EllipticSymbol {
    pub fn new(
        order: f64,
        singular: SingularSet,
        eval: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        EllipticSymbol { order, singular, eval: Arc::new(eval) }
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn singular_set(&self) -> SingularSet {
        self.singular
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        (self.eval)(xi)
    }

    pub fn as_multiplier(&self) -> Multiplier {
        let eval = self.eval.clone();
        Multiplier::new(self.order, move |xi| eval(xi))
    }

    /// Mask of grid frequency nodes within `radius` of the singular set.
    pub fn mask_on(&self, grid: &Grid, radius: f64) -> ArrayD<bool> {
        mask_from_set(self.singular, grid, radius)
    }
}

impl std::fmt::Debug for EllipticSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EllipticSymbol")
            .field("order", &self.order)
            .field("singular", &self.singular)
            .finish()
    }
}

pub fn mask_from_set(set: SingularSet, grid: &Grid, radius: f64) -> ArrayD<bool> {
    let mut mask = ArrayD::from_elem(IxDyn(&grid.shape()), false);
    let mut coords = vec![0.0; grid.dim()];
    for (idx, v) in mask.indexed_iter_mut() {
        for (ax, c) in coords.iter_mut().enumerate() {
            *c = grid.freq_coord(idx[ax]);
        }
        if set.distance(&coords) < radius {
            *v = true;
        }
    }
    mask
}

/// One factor of a wave factorization, evaluable at real frequencies and —
/// for analytic catalog factors — at points of the radial tube domain.
#[derive(Clone)]
pub enum Factor {
    Analytic {
        /// Declared growth exponent (κ for the plus factor, α−κ for the minus).
        growth: f64,
        eval: Arc<dyn Fn(&[Complex64]) -> Complex64 + Send + Sync>,
    },
    /// Factor given as samples on a frequency grid (loadable from disk);
    /// defined at grid nodes only, no analytic continuation.
    Sampled { growth: f64, grid: Grid, values: ArrayD<Complex64> },
}

impl Factor {
    pub fn analytic(
        growth: f64,
        eval: impl Fn(&[Complex64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Factor::Analytic { growth, eval: Arc::new(eval) }
    }

    pub fn growth(&self) -> f64 {
        match self {
            Factor::Analytic { growth, .. } | Factor::Sampled { growth, .. } => *growth,
        }
    }

    pub fn eval_complex(&self, zeta: &[Complex64]) -> Result<Complex64> {
        match self {
            Factor::Analytic { eval, .. } => Ok(eval(zeta)),
            Factor::Sampled { .. } => Err(Error::Domain(
                "sampled factors are defined at real grid nodes only".into(),
            )),
        }
    }

    pub fn eval_real(&self, xi: &[f64]) -> Result<Complex64> {
        match self {
            Factor::Analytic { eval, .. } => {
                let z: Vec<Complex64> = xi.iter().map(|&c| Complex64::new(c, 0.0)).collect();
                Ok(eval(&z))
            }
            Factor::Sampled { grid, values, .. } => {
                let mut idx = Vec::with_capacity(xi.len());
                for &c in xi {
                    let k = c / grid.dual_spacing() + grid.points() as f64 / 2.0;
                    let kr = k.round();
                    if (k - kr).abs() > 1e-9 || kr < 0.0 || kr >= grid.points() as f64 {
                        return Err(Error::GridMismatch(format!(
                            "frequency {c} is not a node of the factor table grid"
                        )));
                    }
                    idx.push(kr as usize);
                }
                Ok(values[IxDyn(&idx)])
            }
        }
    }

    /// Evaluate at every frequency node of `grid`.
    pub fn on_grid(&self, grid: &Grid) -> Result<ArrayD<Complex64>> {
        let mut out = ArrayD::zeros(IxDyn(&grid.shape()));
        let mut coords = vec![0.0; grid.dim()];
        for (idx, v) in out.indexed_iter_mut() {
            for (ax, c) in coords.iter_mut().enumerate() {
                *c = grid.freq_coord(idx[ax]);
            }
            *v = self.eval_real(&coords)?;
        }
        Ok(out)
    }
}

impl std::fmt::Debug for Factor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factor").field("growth", &self.growth()).finish()
    }
}

/// A wave factorization `A = A_≠ · A_=` with index κ: the plus factor
/// continues analytically into R^m + i·*C^a_+, the minus factor into the
/// reflected tube.
#[derive(Debug, Clone)]
pub struct WaveFactorizationPair {
    pub plus: Factor,
    pub minus: Factor,
    pub kappa: f64,
    pub alpha: f64,
    pub cone: ConeParams,
}

impl WaveFactorizationPair {
    /// Product of the factors at a real frequency.
    pub fn product(&self, xi: &[f64]) -> Result<Complex64> {
        Ok(self.plus.eval_real(xi)? * self.minus.eval_real(xi)?)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EllipticityReport {
    pub c1: f64,
    pub c2: f64,
    pub masked_fraction: f64,
}

/// Scan `|A(ξ)|(1+|ξ|)^{-α}` over unmasked nodes.
pub fn ellipticity_check(sym: &EllipticSymbol, grid: &Grid, mask_radius: f64) -> Result<EllipticityReport> {
    let mask = sym.mask_on(grid, mask_radius);
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    let mut witness: Vec<usize> = Vec::new();
    let mut masked = 0usize;
    let mut coords = vec![0.0; grid.dim()];
    for (idx, &is_masked) in mask.indexed_iter() {
        if is_masked {
            masked += 1;
            continue;
        }
        for (ax, c) in coords.iter_mut().enumerate() {
            *c = grid.freq_coord(idx[ax]);
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        let ratio = sym.eval(&coords).norm() * (1.0 + norm).powf(-sym.order());
        if ratio < c1 {
            c1 = ratio;
            witness = idx.slice().to_vec();
        }
        c2 = c2.max(ratio);
    }
    if c1 == 0.0 {
        return Err(Error::Degenerate { min: c1, witness });
    }
    Ok(EllipticityReport {
        c1,
        c2,
        masked_fraction: masked as f64 / grid.node_count() as f64,
    })
}

/// Max relative defect of the product identity `A_≠·A_= = A` over unmasked nodes.
pub fn factorization_residual(
    pair: &WaveFactorizationPair,
    sym: &EllipticSymbol,
    grid: &Grid,
    mask_radius: f64,
) -> Result<f64> {
    if (pair.alpha - sym.order()).abs() > 1e-12 {
        return Err(Error::Parameter(format!(
            "pair order {} does not match symbol order {}",
            pair.alpha,
            sym.order()
        )));
    }
    let mask = sym.mask_on(grid, mask_radius);
    let mut worst = 0.0f64;
    let mut coords = vec![0.0; grid.dim()];
    for (idx, &is_masked) in mask.indexed_iter() {
        if is_masked {
            continue;
        }
        for (ax, c) in coords.iter_mut().enumerate() {
            *c = grid.freq_coord(idx[ax]);
        }
        let a = sym.eval(&coords);
        let p = pair.product(&coords)?;
        worst = worst.max((p - a).norm() / a.norm().max(1e-30));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorSide {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy)]
pub struct TubeProbeReport {
    /// Max central-difference Cauchy–Riemann defect over samples and active axes.
    pub cr_residual: f64,
    /// Least-squares slope of log|f(ξ+iτ)| against log(1+|ξ|+|τ|).
    pub growth_exponent: f64,
}

/// Probe analyticity and growth of a factor in its radial tube domain.
///
/// Each sample is a pair (ξ, τ) with τ strictly inside the conjugate cone
/// (reflected for the minus side). The Cauchy–Riemann defect compares the
/// real- and imaginary-direction central differences along every axis the
/// sample continues in (τ_j ≠ 0); factors like ζ_m + i|ξ′| that only extend
/// in the last variable are probed with τ′ = 0.
pub fn tube_analyticity_probe(
    factor: &Factor,
    cone: &ConeParams,
    side: FactorSide,
    samples: &[(Vec<f64>, Vec<f64>)],
    step: f64,
) -> Result<TubeProbeReport> {
    if !(step > 0.0) {
        return Err(Error::Parameter("probe step must be positive".into()));
    }
    let mut cr = 0.0f64;
    let mut fit: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
    for (xi, tau) in samples {
        if xi.len() != cone.m || tau.len() != cone.m {
            return Err(Error::Parameter("sample dimension mismatch".into()));
        }
        let inside = match side {
            FactorSide::Plus => cone.conjugate_contains(tau),
            FactorSide::Minus => {
                let neg: Vec<f64> = tau.iter().map(|t| -t).collect();
                cone.conjugate_contains(&neg)
            }
        };
        if !inside {
            return Err(Error::Domain(format!(
                "τ = {tau:?} is not strictly inside the conjugate cone (side {side:?})"
            )));
        }
        let zeta: Vec<Complex64> = xi
            .iter()
            .zip(tau.iter())
            .map(|(&x, &t)| Complex64::new(x, t))
            .collect();
        let f0 = factor.eval_complex(&zeta)?;
        for ax in 0..cone.m {
            if tau[ax] == 0.0 {
                continue;
            }
            let mut zp = zeta.clone();
            let mut zn = zeta.clone();
            zp[ax] += step;
            zn[ax] -= step;
            let ddx = (factor.eval_complex(&zp)? - factor.eval_complex(&zn)?) / (2.0 * step);
            zp = zeta.clone();
            zn = zeta.clone();
            zp[ax] += Complex64::new(0.0, step);
            zn[ax] -= Complex64::new(0.0, step);
            let ddy = (factor.eval_complex(&zp)? - factor.eval_complex(&zn)?)
                / Complex64::new(0.0, 2.0 * step);
            cr = cr.max((ddx - ddy).norm());
        }
        let radius = 1.0
            + xi.iter().map(|c| c * c).sum::<f64>().sqrt()
            + tau.iter().map(|c| c * c).sum::<f64>().sqrt();
        if f0.norm() > 0.0 {
            fit.push((radius.ln(), f0.norm().ln()));
        }
    }
    // least-squares slope
    let n = fit.len() as f64;
    let (sx, sy): (f64, f64) = fit.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (sxx, sxy): (f64, f64) = fit
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + x * y));
    let denom = n * sxx - sx * sx;
    let growth_exponent = if denom.abs() > 1e-14 {
        (n * sxy - sx * sy) / denom
    } else {
        0.0
    };
    Ok(TubeProbeReport { cr_residual: cr, growth_exponent })
}

/// Complex square root of a sum of squares, `√(Σ ζ_j²)`, reducing to |ξ′| on
/// real arguments.
fn complex_lateral_norm(zeta: &[Complex64]) -> Complex64 {
    let s: Complex64 = zeta.iter().map(|z| z * z).sum();
    s.sqrt()
}

/// Half-space Laplacian entry: `A = |ξ|²`, `A_≠ = ξ_m + i|ξ′|`,
/// `A_= = ξ_m − i|ξ′|`, α = 2, κ = 1, cone opening a = 0.
pub fn catalog_halfspace_laplacian(m: usize) -> Result<(EllipticSymbol, WaveFactorizationPair)> {
    let cone = ConeParams::new(0.0, m)?;
    let sym = EllipticSymbol::new(2.0, SingularSet::Origin, |xi| {
        Complex64::new(xi.iter().map(|c| c * c).sum::<f64>(), 0.0)
    });
    let plus = Factor::analytic(1.0, |z| {
        let m = z.len();
        z[m - 1] + Complex64::new(0.0, 1.0) * complex_lateral_norm(&z[..m - 1])
    });
    let minus = Factor::analytic(1.0, |z| {
        let m = z.len();
        z[m - 1] - Complex64::new(0.0, 1.0) * complex_lateral_norm(&z[..m - 1])
    });
    Ok((
        sym,
        WaveFactorizationPair { plus, minus, kappa: 1.0, alpha: 2.0, cone },
    ))
}

/// Synthetic pair built from the shifted Lorentz form
/// `L(ζ) = a²ζ_m² − ζ′·ζ′`: `A_≠(ξ) = L(ξ + iθe_m)`, `A_=(ξ) = L(ξ − iθe_m)`,
/// `A = A_≠·A_=`, α = 4, κ = 2. The factors are zero-free on real
/// frequencies for θ > 0; the product degenerates (relative to order 4)
/// along the light cone, which is the masked set.
pub fn catalog_synthetic_lorentz(
    a: f64,
    theta: f64,
    m: usize,
) -> Result<(EllipticSymbol, WaveFactorizationPair)> {
    if !(a > 0.0) || !(theta > 0.0) {
        return Err(Error::Parameter(format!(
            "synthetic Lorentz pair needs a > 0 and θ > 0 (got a = {a}, θ = {theta})"
        )));
    }
    let cone = ConeParams::new(a, m)?;
    let lorentz = move |z: &[Complex64], shift: f64| -> Complex64 {
        let m = z.len();
        let zm = z[m - 1] + Complex64::new(0.0, shift);
        let lat: Complex64 = z[..m - 1].iter().map(|c| c * c).sum();
        Complex64::new(a * a, 0.0) * zm * zm - lat
    };
    let plus = Factor::analytic(2.0, move |z| lorentz(z, theta));
    let minus = Factor::analytic(2.0, move |z| lorentz(z, -theta));
    let plus_for_sym = plus.clone();
    let minus_for_sym = minus.clone();
    let sym = EllipticSymbol::new(4.0, SingularSet::LightCone { a }, move |xi| {
        let z: Vec<Complex64> = xi.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        plus_for_sym.eval_complex(&z).unwrap() * minus_for_sym.eval_complex(&z).unwrap()
    });
    Ok((
        sym,
        WaveFactorizationPair { plus, minus, kappa: 2.0, alpha: 4.0, cone },
    ))
}

/// The weight `Q(ξ) = (ξ_m + i√(1+|ξ′|²))^n`: zero-free on real frequencies
/// with `|Q(ξ)| = (1+|ξ|²)^{n/2}` exactly.
pub fn q_weight(n: usize) -> Result<Multiplier> {
    if n == 0 {
        return Err(Error::Parameter("q_weight needs n >= 1".into()));
    }
    Ok(Multiplier::new(n as f64, move |xi| {
        let m = xi.len();
        let lat = 1.0 + xi[..m - 1].iter().map(|c| c * c).sum::<f64>();
        Complex64::new(xi[m - 1], lat.sqrt()).powu(n as u32)
    }))
}

/// Order bookkeeping `κ − s = n + δ` with `|δ| < 1/2`, `n = round(κ − s) ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemOrder {
    pub s: f64,
    pub kappa: f64,
    pub n: usize,
    pub delta: f64,
}

impl ProblemOrder {
    pub fn new(s: f64, kappa: f64) -> Result<Self> {
        let gap = kappa - s;
        let n = gap.round();
        let delta = gap - n;
        if delta.abs() >= 0.5 {
            return Err(Error::Parameter(format!(
                "κ − s = {gap} leaves |δ| = {} ≥ 1/2",
                delta.abs()
            )));
        }
        if n < 0.0 {
            return Err(Error::Parameter(format!(
                "κ − s = {gap} gives negative boundary-condition count n = {n}"
            )));
        }
        Ok(ProblemOrder { s, kappa, n: n as usize, delta })
    }
}
