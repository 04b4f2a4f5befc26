//! Weighted Besov and Triebel–Lizorkin spaces associated with a nonnegative
//! self-adjoint operator on a finite metric measure space.
//!
//! Everything is computed through the eigendecomposition of the operator:
//! spectral profiles `F(t√L)`, Littlewood–Paley pieces, the norm functionals,
//! the constructive atomic decomposition, fractional powers and Laplace-type
//! multipliers.

pub mod error;
pub mod space;
pub mod weights;
pub mod operator;
pub mod calculus;
pub mod spaces;
pub mod apps;
pub mod atoms;

pub use error::{FslError, Result};
