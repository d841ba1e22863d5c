//! Pseudo-spectral toolkit for the Bridges Hamiltonian formulation of
//! two-dimensional field theory on the torus.
//!
//! The crate provides:
//!
//! * Fourier-grid fields on T² with exact spectral derivatives
//!   ([`field`], [`ops`]);
//! * Hamiltonians H = ½pp̄ + F with momentum cutoff, their gradients,
//!   equation residuals in Bridges / complex Hamilton / Laplace form,
//!   the action functional and a Hofer-type norm ([`hamiltonian`]);
//! * the Lagrangian side: actions, Euler-Lagrange residuals and the
//!   Legendre transform with its fiber-map condition ([`legendre`]);
//! * gradient-flow integration of the Floer equations with an
//!   exponential integrator, energy and maximum-principle diagnostics
//!   ([`floer`]);
//! * closed-form Fourier symbol analysis of the linearized flow
//!   operator ([`symbol`]);
//! * a self-describing dump format for fields and trajectory logs
//!   ([`io`]).
//!
//! Conventions fixed throughout: both torus periods are 2π, Fourier
//! coefficients carry the 1/(n1·n2) forward normalization, the volume
//! form is dt₁dt₂ with total volume (2π)², and q-fields are stored as
//! periodic lifts into ℝ^{2d}.

pub mod error;
pub mod hamiltonian;
pub mod io;
pub mod legendre;
pub mod floer;
pub mod symbol;
pub mod field;
pub mod grid;
pub mod ops;
pub mod phase;

pub use error::{CoreError, Result};
pub use field::SpectralField;
pub use grid::{TorusGrid, TAU};
pub use phase::{PhaseField, RealPhase};
