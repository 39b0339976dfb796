pub mod coefficient_ops;
pub mod dispersive;
pub mod distorted;
pub mod error;
pub mod evolution;
pub mod fit;
pub mod grid;
pub mod hardy;
pub mod jost;
pub mod matrix_distorted;
pub mod potentials;
pub mod registry;
pub mod spectrum;

pub use error::{CtmError, Result};
pub use grid::{Field, Grid};
pub use num_complex::Complex64 as C64;
