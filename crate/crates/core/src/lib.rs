//! Spin-boson simulation of a point defect coupled to the flexural modes of a
//! suspended circular membrane.

pub mod critical;
pub mod dephasing;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod grid;
pub mod membrane;
pub mod quadrature;
pub mod special_functions;
pub mod spectral;

pub use error::{Error, Result};
