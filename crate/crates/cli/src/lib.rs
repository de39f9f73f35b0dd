//! File formats, batch decoding and a synthetic benchmark task built on
//! [`jointbpe_core`].

pub mod am;
pub mod batch;
mod error;
pub mod files;
pub mod settings;
pub mod synth;
pub mod system;

pub use error::{Error, Result};
