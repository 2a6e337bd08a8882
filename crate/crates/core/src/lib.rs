//! Causal-inferential process diagrams with exact classical semantics.

pub mod diagrams;
pub mod error;
pub mod format;
pub mod fstheory;
pub mod funcdyn;
pub mod nogo;
pub mod optheory;
pub mod random;
pub mod rational;
pub mod substoch;
pub mod tensor;
pub mod types;

pub use error::{Error, Result};
