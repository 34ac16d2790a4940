pub mod error;
pub mod estimators;
pub mod experiments;
pub mod fem;
pub mod precision;
pub mod reduced;

pub use error::{Error, Result};
