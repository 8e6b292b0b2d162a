//! Construction of skew-evolution semiflows on finite-dimensional normed
//! spaces and numerical tests of their exponential stability.

pub mod axioms;
pub mod basefn;
pub mod classify;
pub mod cocycle;
pub mod config;
pub mod custom;
pub mod error;
pub mod gallery;
pub mod gauge;
pub mod growth;
pub mod integrals;
pub mod linalg;
pub mod nonuniform;
pub mod probe;
pub mod quadrature;
pub mod report;
pub mod semiflow;
pub mod sweep;
pub mod system;
pub mod uniform;

pub use error::{Error, Result};
