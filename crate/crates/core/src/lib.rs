//! Numerical toolkit for ultradifferentiable function spaces defined by
//! Carleman sequences, convex weights on the line and the Fourier–Laplace
//! transforms of their dual functionals.

pub mod approx;
pub mod carleman;
pub mod cli;
pub mod convexweights;
pub mod error;
pub mod fixtures;
pub mod functionals;
pub mod jet;
pub mod lagrange;
pub mod optim;
pub mod quad;
pub mod report;
pub mod spaces;

pub use error::{Error, Result};
