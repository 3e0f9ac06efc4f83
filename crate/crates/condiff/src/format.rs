//! The `CNDF` array file.
//!
//! Little-endian throughout:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "CNDF"
//! 4       4     format_version (u32) = 1
//! 8       4     grid_n (u32)
//! 12      4     sample_count (u32)
//! 16      ...   per sample, in index order: k, f, u, each grid_n^2 f64, row-major
//! ```
//!
//! The optional single-precision export uses magic `"CN32"` and the same
//! layout with `f32` values.

use std::fs::File;
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;

use condiff_core::{GridSpec, ScalarField};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"CNDF";
pub const MAGIC_F32: [u8; 4] = *b"CN32";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F64,
    F32,
}

impl Precision {
    pub fn magic(self) -> [u8; 4] {
        match self {
            Self::F64 => MAGIC,
            Self::F32 => MAGIC_F32,
        }
    }

    pub fn width(self) -> u64 {
        match self {
            Self::F64 => 8,
            Self::F32 => 4,
        }
    }
}

/// Bytes per sample: three `n x n` arrays.
pub fn sample_len(grid_n: usize, precision: Precision) -> u64 {
    3 * (grid_n * grid_n) as u64 * precision.width()
}

pub fn encode_header(
    grid_n: u32,
    sample_count: u32,
    precision: Precision,
) -> [u8; HEADER_LEN as usize] {
    let mut h = [0u8; HEADER_LEN as usize];
    h[0..4].copy_from_slice(&precision.magic());
    h[4..8].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
    h[8..12].copy_from_slice(&grid_n.to_le_bytes());
    h[12..16].copy_from_slice(&sample_count.to_le_bytes());
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub precision: Precision,
    pub format_version: u32,
    pub grid_n: u32,
    pub sample_count: u32,
}

pub fn decode_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < HEADER_LEN as usize {
        return Err(Error::Corrupt(
            "file shorter than the 16-byte header".into(),
        ));
    }
    let precision = match &bytes[0..4] {
        m if m == MAGIC => Precision::F64,
        m if m == MAGIC_F32 => Precision::F32,
        m => return Err(Error::Corrupt(format!("bad magic {m:?}"))),
    };
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let format_version = word(4);
    if format_version != FORMAT_VERSION {
        return Err(Error::Corrupt(format!(
            "unsupported format version {format_version}"
        )));
    }
    Ok(Header {
        precision,
        format_version,
        grid_n: word(8),
        sample_count: word(12),
    })
}

/// Serialises one `(k, f, u)` triplet.
pub fn encode_sample(k: &[f64], f: &[f64], u: &[f64], precision: Precision) -> Vec<u8> {
    let mut out = Vec::with_capacity((k.len() + f.len() + u.len()) * precision.width() as usize);
    for v in k.iter().chain(f).chain(u) {
        match precision {
            Precision::F64 => out.extend_from_slice(&v.to_le_bytes()),
            Precision::F32 => out.extend_from_slice(&(*v as f32).to_le_bytes()),
        }
    }
    out
}

/// A decoded `(k, f, u)` triplet.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplet {
    pub k: ScalarField,
    pub f: ScalarField,
    pub u: ScalarField,
}

pub fn decode_sample(bytes: &[u8], grid: GridSpec) -> Result<Triplet> {
    let cells = grid.cells();
    if bytes.len() != 3 * cells * 8 {
        return Err(Error::Corrupt(format!(
            "sample has {} bytes, expected {}",
            bytes.len(),
            3 * cells * 8
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field = |part: usize| {
        ScalarField::new(grid, values[part * cells..(part + 1) * cells].to_vec())
            .map_err(|e| Error::Corrupt(format!("array {part}: {e}")))
    };
    Ok(Triplet {
        k: field(0)?,
        f: field(1)?,
        u: field(2)?,
    })
}

/// Random access to the samples of an f64 array file.
#[derive(Debug)]
pub struct ArrayFile {
    file: File,
    header: Header,
}

impl ArrayFile {
    pub fn open(path: &Path) -> Result<Self> {
        let mut file = File::open(path).map_err(Error::io(path))?;
        let mut raw = [0u8; HEADER_LEN as usize];
        file.read_exact(&mut raw)
            .map_err(|_| Error::Corrupt(format!("{}: truncated header", path.display())))?;
        let header = decode_header(&raw)?;
        if header.precision != Precision::F64 {
            return Err(Error::Corrupt("expected a CNDF (f64) file".into()));
        }
        let len = file.metadata().map_err(Error::io(path))?.len();
        let expected = HEADER_LEN
            + header.sample_count as u64 * sample_len(header.grid_n as usize, Precision::F64);
        if len != expected {
            return Err(Error::Corrupt(format!(
                "{}: {len} bytes, header implies {expected}",
                path.display()
            )));
        }
        Ok(Self { file, header })
    }

    pub fn header(&self) -> Header {
        self.header
    }

    pub fn sample_offset(&self, index: u64) -> u64 {
        HEADER_LEN + index * sample_len(self.header.grid_n as usize, Precision::F64)
    }

    pub fn read_sample_bytes(&mut self, index: u64) -> Result<Vec<u8>> {
        if index >= self.header.sample_count as u64 {
            return Err(Error::IndexOutOfRange {
                index,
                count: self.header.sample_count as u64,
            });
        }
        let mut buf = vec![0u8; sample_len(self.header.grid_n as usize, Precision::F64) as usize];
        self.file
            .seek(SeekFrom::Start(self.sample_offset(index)))
            .and_then(|_| self.file.read_exact(&mut buf))
            .map_err(|e| Error::Corrupt(format!("reading sample {index}: {e}")))?;
        Ok(buf)
    }

    pub fn read_sample(&mut self, index: u64) -> Result<Triplet> {
        let grid = GridSpec::new(self.header.grid_n as usize)?;
        decode_sample(&self.read_sample_bytes(index)?, grid)
    }
}

/// Streams samples into a new array file.
pub struct ArrayWriter<W: Write> {
    out: W,
    precision: Precision,
}

impl<W: Write> ArrayWriter<W> {
    pub fn new(
        mut out: W,
        grid_n: u32,
        sample_count: u32,
        precision: Precision,
    ) -> std::io::Result<Self> {
        out.write_all(&encode_header(grid_n, sample_count, precision))?;
        Ok(Self { out, precision })
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) -> std::io::Result<()> {
        self.out.write_all(bytes)
    }

    pub fn write_sample(&mut self, k: &[f64], f: &[f64], u: &[f64]) -> std::io::Result<()> {
        self.out.write_all(&encode_sample(k, f, u, self.precision))
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_fixed() {
        let h = encode_header(64, 1200, Precision::F64);
        assert_eq!(&h[..4], b"CNDF");
        assert_eq!(h[4..8], [1, 0, 0, 0]);
        assert_eq!(h[8..12], [64, 0, 0, 0]);
        assert_eq!(h[12..16], [0xB0, 0x04, 0, 0]);
        let d = decode_header(&h).unwrap();
        assert_eq!(
            (d.grid_n, d.sample_count, d.precision),
            (64, 1200, Precision::F64)
        );
    }

    #[test]
    fn header_rejects_garbage() {
        assert!(decode_header(b"CNDF").is_err());
        let mut h = encode_header(4, 1, Precision::F64);
        h[0] = b'X';
        assert!(decode_header(&h).is_err());
        let mut h = encode_header(4, 1, Precision::F64);
        h[4] = 2;
        assert!(decode_header(&h).is_err());
    }

    #[test]
    fn sample_length() {
        assert_eq!(sample_len(64, Precision::F64), 3 * 4096 * 8);
        assert_eq!(sample_len(16, Precision::F32), 3 * 256 * 4);
    }

    proptest! {
        #[test]
        fn sample_bytes_round_trip(values in proptest::collection::vec(-1e6f64..1e6, 12)) {
            let grid = GridSpec::new(2).unwrap();
            let bytes = encode_sample(&values[0..4], &values[4..8], &values[8..12], Precision::F64);
            let t = decode_sample(&bytes, grid).unwrap();
            prop_assert_eq!(t.k.values(), &values[0..4]);
            prop_assert_eq!(t.f.values(), &values[4..8]);
            prop_assert_eq!(t.u.values(), &values[8..12]);
        }
    }
}
