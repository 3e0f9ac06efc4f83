//! Dataset generation, on-disk format, validation and export for
//! high-contrast diffusion problems. The numerics live in `condiff-core`.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod export;
pub mod format;
pub mod manifest;
pub mod validate;

pub use config::ConfigFile;
pub use dataset::{generate_dataset, Dataset, GenerateOptions};
pub use error::{Error, Result};
pub use manifest::Manifest;
pub use validate::{validate_dataset, ValidationReport, Violation};
