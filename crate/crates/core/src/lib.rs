pub mod analysis;
pub mod consensus;
pub mod error;
pub mod harness;
pub mod learning;
pub mod signal;
pub mod streams;
pub mod topology;

pub use error::{Error, Result};
