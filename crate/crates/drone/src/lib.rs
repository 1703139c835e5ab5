//! File formats, parallel drivers, timing harness and reproducible
//! experiment recipes on top of `drone-core`.

pub mod bench;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod repro;

pub use error::{Error, Result};
