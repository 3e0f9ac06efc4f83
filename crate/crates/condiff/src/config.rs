//! JSON form of [`DatasetConfig`], shared by config files and manifests.

use std::path::Path;

use condiff_core::fields::ContrastBounds;
use condiff_core::fvm::DEFAULT_SOLVER_TOL;
use condiff_core::grf::DEFAULT_CORRELATION_LENGTH;
use condiff_core::pipeline::{DEFAULT_MAX_REJECTION_ATTEMPTS, DEFAULT_TEST, DEFAULT_TRAIN};
use condiff_core::{CovarianceFamily, DatasetConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub family: String,
    pub variance: f64,
    #[serde(default = "default_correlation_length")]
    pub correlation_length: f64,
    pub grid_n: usize,
    #[serde(default = "default_train")]
    pub n_train: usize,
    #[serde(default = "default_test")]
    pub n_test: usize,
    /// Omitted bounds are filled in for canonical variances.
    #[serde(default)]
    pub contrast_min: Option<f64>,
    #[serde(default)]
    pub contrast_max: Option<f64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_max_attempts")]
    pub max_rejection_attempts: u64,
}

fn default_correlation_length() -> f64 {
    DEFAULT_CORRELATION_LENGTH
}
fn default_train() -> usize {
    DEFAULT_TRAIN
}
fn default_test() -> usize {
    DEFAULT_TEST
}
fn default_solver_tol() -> f64 {
    DEFAULT_SOLVER_TOL
}
fn default_max_attempts() -> u64 {
    DEFAULT_MAX_REJECTION_ATTEMPTS
}

impl ConfigFile {
    /// Defaults for everything but the three required fields.
    pub fn new(family: CovarianceFamily, variance: f64, grid_n: usize) -> Self {
        Self {
            family: family.name().to_owned(),
            variance,
            correlation_length: DEFAULT_CORRELATION_LENGTH,
            grid_n,
            n_train: DEFAULT_TRAIN,
            n_test: DEFAULT_TEST,
            contrast_min: None,
            contrast_max: None,
            master_seed: 0,
            solver_tol: DEFAULT_SOLVER_TOL,
            max_rejection_attempts: DEFAULT_MAX_REJECTION_ATTEMPTS,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })
    }

    pub fn to_config(&self) -> Result<DatasetConfig> {
        let family: CovarianceFamily = self.family.parse()?;
        let bounds = match (self.contrast_min, self.contrast_max) {
            (Some(lo), Some(hi)) => ContrastBounds::new(lo, hi)?,
            (None, None) => ContrastBounds::canonical(self.variance).ok_or_else(|| {
                Error::Config(format!(
                    "variance {} is not one of the canonical values {{0.1, 0.4, 1.0, 2.0}}; \
                     contrast bounds must be given explicitly",
                    self.variance
                ))
            })?,
            _ => {
                return Err(Error::Config(
                    "contrast_min and contrast_max must be given together".into(),
                ))
            }
        };
        let config = DatasetConfig {
            family,
            variance: self.variance,
            correlation_length: self.correlation_length,
            grid_n: self.grid_n,
            n_train: self.n_train,
            n_test: self.n_test,
            bounds,
            master_seed: self.master_seed,
            solver_tol: self.solver_tol,
            max_rejection_attempts: self.max_rejection_attempts,
        };
        config.validate()?;
        Ok(config)
    }
}

impl From<&DatasetConfig> for ConfigFile {
    fn from(c: &DatasetConfig) -> Self {
        Self {
            family: c.family.name().to_owned(),
            variance: c.variance,
            correlation_length: c.correlation_length,
            grid_n: c.grid_n,
            n_train: c.n_train,
            n_test: c.n_test,
            contrast_min: Some(c.bounds.lower()),
            contrast_max: Some(c.bounds.upper()),
            master_seed: c.master_seed,
            solver_tol: c.solver_tol,
            max_rejection_attempts: c.max_rejection_attempts,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_fills_canonical_defaults() {
        let cfg: ConfigFile =
            serde_json::from_str(r#"{"family":"gauss","variance":2.0,"grid_n":64}"#).unwrap();
        let c = cfg.to_config().unwrap();
        assert_eq!(c.family, CovarianceFamily::Gaussian);
        assert_eq!((c.bounds.lower(), c.bounds.upper()), (8e4, 1e5));
        assert_eq!((c.n_train, c.n_test), (1000, 200));
        assert_eq!(ConfigFile::from(&c).to_config().unwrap(), c);
    }

    #[test]
    fn non_canonical_variance_needs_bounds() {
        let cfg: ConfigFile =
            serde_json::from_str(r#"{"family":"cubic","variance":0.3,"grid_n":16}"#).unwrap();
        assert!(matches!(cfg.to_config(), Err(Error::Config(_))));
        let cfg: ConfigFile = serde_json::from_str(
            r#"{"family":"cubic","variance":0.3,"grid_n":16,"contrast_min":2,"contrast_max":40}"#,
        )
        .unwrap();
        assert_eq!(cfg.to_config().unwrap().bounds.upper(), 40.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(
            r#"{"family":"cubic","variance":0.1,"grid_n":16,"sigma":1}"#
        )
        .is_err());
    }
}
