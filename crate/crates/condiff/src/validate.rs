//! Re-verification of a dataset directory against its manifest.

use std::fmt;
use std::path::Path;

use condiff_core::fields::compute_contrast;
use condiff_core::fvm::assemble_with_values;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::Result;
use crate::format::{decode_sample, sample_len, Precision, HEADER_LEN};
use crate::manifest::{sha256_hex, SampleRecord, SplitName, Stats};

/// Relative agreement required between a recorded contrast and the one
/// recomputed from the stored `k`.
pub const CONTRAST_RTOL: f64 = 1e-9;
/// Stored solutions may exceed the solver tolerance by this factor.
pub const RESIDUAL_SLACK: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Structure(String),
    Split(String),
    Record {
        index: u64,
        reason: String,
    },
    ChecksumMismatch {
        index: u64,
    },
    Undecodable {
        index: u64,
        reason: String,
    },
    OutOfBounds {
        index: u64,
        contrast: f64,
    },
    ContrastMismatch {
        index: u64,
        recorded: f64,
        recomputed: f64,
    },
    Residual {
        index: u64,
        residual: f64,
        limit: f64,
    },
    Stats(String),
    Export(String),
}

impl Violation {
    pub fn index(&self) -> Option<u64> {
        match self {
            Self::Record { index, .. }
            | Self::ChecksumMismatch { index }
            | Self::Undecodable { index, .. }
            | Self::OutOfBounds { index, .. }
            | Self::ContrastMismatch { index, .. }
            | Self::Residual { index, .. } => Some(*index),
            _ => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Structure(s) => write!(f, "structure: {s}"),
            Self::Split(s) => write!(f, "split: {s}"),
            Self::Record { index, reason } => write!(f, "sample {index}: bad record: {reason}"),
            Self::ChecksumMismatch { index } => write!(f, "sample {index}: checksum-mismatch"),
            Self::Undecodable { index, reason } => {
                write!(f, "sample {index}: corrupt arrays: {reason}")
            }
            Self::OutOfBounds { index, contrast } => {
                write!(f, "sample {index}: contrast {contrast} outside bounds")
            }
            Self::ContrastMismatch {
                index,
                recorded,
                recomputed,
            } => write!(
                f,
                "sample {index}: recorded contrast {recorded} but stored k gives {recomputed}"
            ),
            Self::Residual {
                index,
                residual,
                limit,
            } => {
                write!(
                    f,
                    "sample {index}: residual-violation {residual:.3e} > {limit:.3e}"
                )
            }
            Self::Stats(s) => write!(f, "stats: {s}"),
            Self::Export(s) => write!(f, "f32 export: {s}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub samples_checked: u64,
    pub max_residual: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Sorted, deduplicated indices of samples with at least one violation.
    pub fn offending_indices(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self
            .violations
            .iter()
            .filter_map(Violation::index)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

fn close(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= rtol * a.abs().max(b.abs())
}

fn check_sample(
    bytes: &[u8],
    record: &SampleRecord,
    ds: &Dataset,
    out: &mut Vec<Violation>,
) -> f64 {
    let index = record.index;
    let config = &ds.manifest().config;
    if sha256_hex(bytes) != record.sha256 {
        out.push(Violation::ChecksumMismatch { index });
    }
    if let (Some(lo), Some(hi)) = (config.contrast_min, config.contrast_max) {
        if !(lo <= record.contrast && record.contrast <= hi) {
            out.push(Violation::OutOfBounds {
                index,
                contrast: record.contrast,
            });
        }
    }
    let grid = match ds.grid() {
        Ok(g) => g,
        Err(_) => return f64::NAN,
    };
    let triplet = match decode_sample(bytes, grid) {
        Ok(t) => t,
        Err(e) => {
            out.push(Violation::Undecodable {
                index,
                reason: e.to_string(),
            });
            return f64::NAN;
        }
    };
    if triplet.k.values().iter().any(|&k| k <= 0.0) {
        out.push(Violation::Undecodable {
            index,
            reason: "nonpositive k".into(),
        });
        return f64::NAN;
    }
    let recomputed = triplet
        .k
        .map(f64::ln)
        .map(|phi| compute_contrast(&phi).contrast)
        .unwrap_or(f64::NAN);
    if !close(recomputed, record.contrast, CONTRAST_RTOL) {
        out.push(Violation::ContrastMismatch {
            index,
            recorded: record.contrast,
            recomputed,
        });
    }
    let limit = config.solver_tol * RESIDUAL_SLACK;
    let residual =
        assemble_with_values(&triplet.k, &triplet.f).and_then(|p| p.relative_residual(&triplet.u));
    match residual {
        Ok(r) if r <= limit => r,
        Ok(r) => {
            out.push(Violation::Residual {
                index,
                residual: r,
                limit,
            });
            r
        }
        Err(e) => {
            out.push(Violation::Undecodable {
                index,
                reason: e.to_string(),
            });
            f64::NAN
        }
    }
}

fn check_manifest(ds: &Dataset, out: &mut Vec<Violation>) {
    let m = ds.manifest();
    let c = &m.config;
    if m.grid_n as usize != c.grid_n {
        out.push(Violation::Structure(format!(
            "grid_n {} disagrees with config {}",
            m.grid_n, c.grid_n
        )));
    }
    if m.sample_bytes != sample_len(m.grid_n as usize, Precision::F64) {
        out.push(Violation::Structure(format!(
            "sample_bytes {} does not match grid_n {}",
            m.sample_bytes, m.grid_n
        )));
    }
    if m.sample_count as usize != c.n_train + c.n_test {
        out.push(Violation::Split(format!(
            "sample_count {} != n_train + n_test = {}",
            m.sample_count,
            c.n_train + c.n_test
        )));
    }
    let train: Vec<u64> = (0..c.n_train as u64).collect();
    let test: Vec<u64> = (c.n_train as u64..(c.n_train + c.n_test) as u64).collect();
    if m.split.train != train {
        out.push(Violation::Split(format!(
            "train list has {} entries, expected indices 0..{}",
            m.split.train.len(),
            c.n_train
        )));
    }
    if m.split.test != test {
        out.push(Violation::Split(format!(
            "test list has {} entries, expected indices {}..{}",
            m.split.test.len(),
            c.n_train,
            c.n_train + c.n_test
        )));
    }
    if m.samples.len() != m.sample_count as usize {
        out.push(Violation::Structure(format!(
            "{} sample records for {} samples",
            m.samples.len(),
            m.sample_count
        )));
    }
    if let Err(e) = c.to_config() {
        out.push(Violation::Structure(format!("embedded config: {e}")));
    }
    for (i, r) in m.samples.iter().enumerate() {
        let i = i as u64;
        let expected_split = if i < c.n_train as u64 {
            SplitName::Train
        } else {
            SplitName::Test
        };
        let reason = if r.index != i {
            Some(format!("index field is {}", r.index))
        } else if r.offset != HEADER_LEN + i * m.sample_bytes || r.length != m.sample_bytes {
            Some(format!(
                "byte range {}+{} is not the sample's slot",
                r.offset, r.length
            ))
        } else if r.split != expected_split {
            Some(format!("labelled {:?}", r.split))
        } else {
            None
        };
        if let Some(reason) = reason {
            out.push(Violation::Record { index: i, reason });
        }
    }
    match Stats::from_records(&m.samples) {
        Some(s) if s == m.stats => {}
        Some(_) => out.push(Violation::Stats(
            "aggregate stats disagree with the records".into(),
        )),
        None => out.push(Violation::Stats("a split is empty".into())),
    }
}

fn check_export(ds: &Dataset, out: &mut Vec<Violation>) {
    let Some(export) = &ds.manifest().export_f32 else {
        return;
    };
    match std::fs::read(ds.dir().join(&export.file)) {
        Ok(bytes) if sha256_hex(&bytes) == export.sha256 => {}
        Ok(_) => out.push(Violation::Export(format!(
            "{}: checksum-mismatch",
            export.file
        ))),
        Err(e) => out.push(Violation::Export(format!("{}: {e}", export.file))),
    }
}

/// Re-checks checksums, bounds, recorded contrasts and residuals of every
/// sample in `dir`. Errors are returned only when the dataset cannot be opened
/// at all; everything else is reported as a [`Violation`].
pub fn validate_dataset(dir: &Path) -> Result<ValidationReport> {
    let mut ds = Dataset::open(dir)?;
    let mut report = ValidationReport::default();
    check_manifest(&ds, &mut report.violations);
    check_export(&ds, &mut report.violations);

    let records: Vec<SampleRecord> = ds
        .manifest()
        .samples
        .iter()
        .take(ds.len() as usize)
        .cloned()
        .collect();
    const CHUNK: usize = 64;
    for (c, chunk) in records.chunks(CHUNK).enumerate() {
        let start = (c * CHUNK) as u64;
        let bytes: Vec<Vec<u8>> = (start..start + chunk.len() as u64)
            .map(|i| ds.read_bytes(i))
            .collect::<Result<_>>()?;
        let checked: Vec<(f64, Vec<Violation>)> = chunk
            .par_iter()
            .zip(&bytes)
            .map(|(r, b)| {
                let mut v = Vec::new();
                let res = check_sample(b, r, &ds, &mut v);
                (res, v)
            })
            .collect();
        for (res, v) in checked {
            report.samples_checked += 1;
            if res.is_finite() {
                report.max_residual = report.max_residual.max(res);
            }
            report.violations.extend(v);
        }
    }
    Ok(report)
}
