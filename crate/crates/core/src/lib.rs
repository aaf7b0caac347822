//! Numerical laboratory for the zero-dispersion limit of the Benjamin-Ono
//! equation on the torus.

pub mod acceptance;
pub mod burgers;
pub mod eig;
pub mod error;
pub mod evans;
pub mod evolve;
pub mod landscape;
pub mod laxspec;
pub mod potential;
pub mod quantize;
pub mod quad;
pub mod roots;

pub use error::{Error, Result};
pub use potential::TrigPotential;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
