pub mod align;
pub mod baselines;
pub mod bench;
pub mod compression;
pub mod datasets;
pub mod eigen;
pub mod embedding;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod partition;
pub mod pipeline;

pub use error::{Error, Result};
