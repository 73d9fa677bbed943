//! Symbolic and numerical workbench for the Sturm–Liouville hierarchy.
//!
//! The crate derives hierarchy equations exactly from the zero-curvature
//! relation for the operator `(1/y)(-D² + q)` and checks their spectral
//! consequences on grids: Weyl m-functions, isospectral time evolution,
//! finite-gap pole dynamics and scattering data.

pub mod acceptance;
pub mod algebro;
pub mod diffpoly;
pub mod error;
pub mod evolve;
pub mod expansion;
pub mod grid;
pub mod hierarchy;
pub mod jet;
pub mod ode;
pub mod pair;
pub mod scattering;
pub mod weyl;

pub use diffpoly::{DiffPoly, Factor, Generator, LambdaMatrix, LambdaPoly, Monomial, Rational};
pub use error::{Error, ErrorClass, Result};
