//! Plot-ready exports: 16-bit binary PGM images and CSV grids.
//!
//! Both formats are written in image orientation: the first row is the
//! highest `y`, columns run in increasing `x`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use condiff_core::ScalarField;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const PGM_MAXVAL: u16 = u16::MAX;

fn rows_top_down(field: &ScalarField) -> impl Iterator<Item = &[f64]> {
    let n = field.grid().n();
    field.values().chunks_exact(n).rev()
}

/// Encodes `field` as a 16-bit binary PGM, mapping `[min, max]` linearly onto
/// `[0, 65535]`. The range is recorded in a header comment so the image can be
/// mapped back to values.
pub fn encode_pgm(field: &ScalarField) -> Vec<u8> {
    let n = field.grid().n();
    let (lo, hi) = field.range();
    let span = hi - lo;
    let mut out = format!("P5\n# min {lo:e} max {hi:e}\n{n} {n}\n{PGM_MAXVAL}\n").into_bytes();
    out.reserve(2 * n * n);
    for row in rows_top_down(field) {
        for &v in row {
            let level = if span > 0.0 {
                ((v - lo) / span * f64::from(PGM_MAXVAL)).round() as u16
            } else {
                0
            };
            out.extend_from_slice(&level.to_be_bytes());
        }
    }
    out
}

/// Reads back a PGM written by [`encode_pgm`]: `(n, levels, (min, max))`.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, Vec<u16>, (f64, f64))> {
    let bad = |what: &str| Error::Corrupt(format!("pgm: {what}"));
    let mut lines = Vec::new();
    let mut pos = 0;
    while lines.len() < 4 {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("short header"))?;
        lines.push(std::str::from_utf8(&bytes[pos..pos + end]).map_err(|_| bad("header"))?);
        pos += end + 1;
    }
    if lines[0] != "P5" {
        return Err(bad("not P5"));
    }
    let range: Vec<f64> = lines[1]
        .split_whitespace()
        .filter_map(|t| t.parse().ok())
        .collect();
    let n: usize = lines[2]
        .split_whitespace()
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad("size"))?;
    if range.len() != 2 || lines[3] != PGM_MAXVAL.to_string() {
        return Err(bad("header"));
    }
    let levels: Vec<u16> = bytes[pos..]
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    if levels.len() != n * n {
        return Err(bad("pixel count"));
    }
    Ok((n, levels, (range[0], range[1])))
}

/// Full-precision CSV, one grid row per line.
pub fn encode_csv(field: &ScalarField) -> String {
    let mut out = String::new();
    for row in rows_top_down(field) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v:e}").unwrap();
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct ExportedField {
    pub name: &'static str,
    /// The image holds `log10` of the values.
    pub log_scaled: bool,
    pub pgm: PathBuf,
    pub csv: PathBuf,
    pub min: f64,
    pub max: f64,
}

/// Writes `phi = ln k`, `k` and `u` of one sample as `sample<I>_<name>.pgm`
/// and `.csv` into `out_dir`. With `log_k` the `k` image is scaled in
/// `log10 k`; its CSV always holds `k` itself.
pub fn export_sample(
    dataset: &mut Dataset,
    index: u64,
    out_dir: &Path,
    log_k: bool,
) -> Result<Vec<ExportedField>> {
    let t = dataset.read_verified(index)?;
    let phi = t.k.map(f64::ln)?;
    let k_image = if log_k {
        t.k.map(f64::log10)?
    } else {
        t.k.clone()
    };
    fs::create_dir_all(out_dir).map_err(Error::io(out_dir))?;
    let mut written = Vec::new();
    for (name, image, data) in [
        ("phi", &phi, &phi),
        ("k", &k_image, &t.k),
        ("u", &t.u, &t.u),
    ] {
        let stem = format!("sample{index}_{name}");
        let pgm = out_dir.join(format!("{stem}.pgm"));
        let csv = out_dir.join(format!("{stem}.csv"));
        fs::write(&pgm, encode_pgm(image)).map_err(Error::io(&pgm))?;
        fs::write(&csv, encode_csv(data)).map_err(Error::io(&csv))?;
        let (min, max) = image.range();
        written.push(ExportedField {
            name,
            log_scaled: log_k && name == "k",
            pgm,
            csv,
            min,
            max,
        });
    }
    Ok(written)
}
