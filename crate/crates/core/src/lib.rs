//! Numerical tools for the conformally invariant integral equation
//! `K v^{n/(n-2)} = ∫_{B₁} P(η, ξ) (Pv)^{(n+2)/(n-2)} dξ` on the unit ball.
//!
//! The crate is organised by subsystem: quadrature grids and conformal maps
//! ([`geometry`]), the Poisson extension operator ([`kernel`]), the
//! variational functionals ([`functional`]), closed-form bubbles and trial
//! energies ([`bubble`]), the subcritical ascent solver ([`solver`]) and the
//! Kazdan–Warner pairing ([`obstruction`]).

pub mod error;
pub mod bubble;
pub mod field;
pub mod geometry;
pub mod functional;
pub mod kernel;
pub mod obstruction;
pub mod solver;

pub use error::{Error, Result};
pub use field::{BoundaryField, InteriorField, SphereFunction};
