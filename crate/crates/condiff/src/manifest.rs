//! The JSON manifest written next to every array file.

use std::path::Path;

use condiff_core::pipeline::{summarize, ContrastSummary};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ConfigFile;
use crate::error::{Error, Result};

pub const MANIFEST_SCHEMA: &str = "condiff-manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_FILE: &str = "data.bin";
pub const DATA_FILE_F32: &str = "data.f32.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub schema_version: u32,
    /// Version of the array file format.
    pub format_version: u32,
    pub rng: String,
    pub config: ConfigFile,
    pub data_file: String,
    /// Single-precision copy, present when requested at generation time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub export_f32: Option<ExportFile>,
    pub grid_n: u32,
    pub sample_count: u32,
    pub sample_bytes: u64,
    pub embedding: EmbeddingInfo,
    pub split: Split,
    pub samples: Vec<SampleRecord>,
    pub stats: Stats,
    pub created: Created,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingInfo {
    pub torus_size: usize,
    pub clipped_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<u64>,
    pub test: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: u64,
    pub split: SplitName,
    /// Byte range of the sample in the array file.
    pub offset: u64,
    pub length: u64,
    pub sha256: String,
    pub contrast: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub seed_stream: u64,
    pub rejection_attempts: u64,
    pub solver_iterations: usize,
    pub solver_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryJson {
    pub count: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl From<ContrastSummary> for SummaryJson {
    fn from(s: ContrastSummary) -> Self {
        Self {
            count: s.count,
            min: s.min,
            mean: s.mean,
            max: s.max,
        }
    }
}

/// Contrast statistics over the whole dataset and per split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub all: SummaryJson,
    pub train: SummaryJson,
    pub test: SummaryJson,
}

impl Stats {
    pub fn from_records(records: &[SampleRecord]) -> Option<Self> {
        let pick = |want: Option<SplitName>| -> Option<SummaryJson> {
            let c: Vec<f64> = records
                .iter()
                .filter(|r| want.is_none_or(|w| r.split == w))
                .map(|r| r.contrast)
                .collect();
            summarize(&c).map(Into::into)
        };
        Some(Self {
            all: pick(None)?,
            train: pick(Some(SplitName::Train))?,
            test: pick(Some(SplitName::Test))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Created {
    pub tool: String,
    pub tool_version: String,
    /// Seconds since the Unix epoch; the only field that differs between
    /// otherwise identical runs. Honours `SOURCE_DATE_EPOCH`.
    pub timestamp_unix: u64,
}

impl Created {
    pub fn now() -> Self {
        let timestamp_unix = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or_else(|| {
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
        Self {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            timestamp_unix,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        let manifest: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })?;
        if manifest.schema != MANIFEST_SCHEMA || manifest.schema_version != MANIFEST_VERSION {
            return Err(Error::Corrupt(format!(
                "unsupported manifest schema {} v{}",
                manifest.schema, manifest.schema_version
            )));
        }
        Ok(manifest)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialises");
        s.push('\n');
        s
    }

    /// The manifest with its creation timestamp zeroed, for comparisons.
    pub fn without_timestamp(&self) -> Self {
        let mut m = self.clone();
        m.created.timestamp_unix = 0;
        m
    }
}
