pub mod basis;
pub mod closure;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
