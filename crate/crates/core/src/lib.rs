pub mod colouring;
pub mod density;
pub mod error;
pub mod ksets;
pub mod montecarlo;
pub mod linalg3;
pub mod povm;
pub mod rational_witness;
pub mod quadrature;
pub mod spin;

pub use error::{Error, Result};
