//! Spectral calculus for the fractional Dirichlet Laplacian on intervals and
//! rectangles, numerical probes of its pointwise inequalities and commutator
//! estimates, and Galerkin solvers for nonlocal drift-diffusion and critical SQG.

// `!(x > 0.0)` deliberately rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod domain;
pub mod error;
pub mod evolution;
pub mod extension;
pub mod field;
pub mod harness;
pub mod inequality;
pub mod manifest;
pub mod quadrature;
pub mod random;
pub mod trig;

pub use calculus::{FracOrder, HeatQuadratureSpec};
pub use domain::DomainSpec;
pub use error::{Error, Result};
pub use field::{GridField, SpectralField};
