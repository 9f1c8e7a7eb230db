//! Spectral solvers for elliptic pseudodifferential equations in a cone,
//! built on wave factorization of the symbol.
//!
//! The pipeline: sample fields on a uniform grid ([`grid`], [`field`]),
//! move between space and frequency with exactly-inverting transforms
//! ([`transform`]), split Fourier images into cone-supported parts
//! ([`projection`]), flatten the cone by an exact per-column phase
//! ([`cone`]), and close boundary value problems with conical layer
//! potentials and the half-space Poisson baseline ([`solver`]).
//!
//! Conventions (also recorded in every run manifest): forward transform
//! `ũ(ξ) = ∫ e^{+i x·ξ} u(x) dx`, inverse `(2π)^{-m} ∫ e^{-i x·ξ} ũ(ξ) dξ`;
//! boundary trace `(2π)^{-1} ∫ ũ dξ_m`; the cone `C^a_+ = {x_m > a|x′|}`.

pub mod acceptance;
pub mod cone;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod multiplier;
pub mod projection;
pub mod quad;
pub mod solver;
pub mod symbol;
pub mod transform;

pub use error::{Error, Result};
pub use field::{AxisDomain, SampledField};
pub use grid::Grid;
