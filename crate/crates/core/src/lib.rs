//! Perfect wave transfer analysis for inhomogeneous 1+1D bosonic channels.

pub mod cli;
pub mod correlations;
pub mod error;
pub mod interp;
pub mod inverse;
pub mod ode;
pub mod profiles;
pub mod pwt;
pub mod quadrature;
pub mod roots;
pub mod semiclassics;
pub mod sl;
pub mod tridiag;

pub use error::{Error, Result};
