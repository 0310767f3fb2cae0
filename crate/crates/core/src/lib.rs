//! Pseudo-spectral simulation and decay diagnostics for the generalized
//! surface quasi-geostrophic equation and the Boussinesq vorticity system
//! with fractional dissipation `|∇|^α`.
//!
//! Fields live on a square periodic box centred at the origin. The rescaled
//! dynamics are advanced with the exact self-similar semigroup as an
//! integrating factor, so the drift `ξ·∇` never appears on the grid.

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod harness;
pub mod initial;
pub mod kernels;
pub mod quadrature;
pub mod semigroup;
pub mod spectral;

pub use error::{Error, Result};
