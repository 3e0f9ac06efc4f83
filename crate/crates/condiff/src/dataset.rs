//! Writing and reading a dataset directory (`data.bin` + `manifest.json`).

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use condiff_core::pipeline::Sample;
use condiff_core::{DatasetConfig, GridSpec, SampleGenerator};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::ConfigFile;
use crate::error::{Error, Result};
use crate::format::{
    encode_sample, sample_len, ArrayFile, ArrayWriter, Precision, Triplet, HEADER_LEN,
};
use crate::manifest::{
    sha256_hex, Created, EmbeddingInfo, ExportFile, Manifest, SampleRecord, Split, SplitName,
    Stats, DATA_FILE, DATA_FILE_F32, MANIFEST_FILE, MANIFEST_SCHEMA, MANIFEST_VERSION,
};

pub const RNG_DESCRIPTION: &str = condiff_core::rng::RNG_ALGORITHM;

#[derive(Debug, Clone, Default)]
pub struct GenerateOptions {
    /// Worker count; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// Also write a single-precision copy of the arrays.
    pub export_f32: bool,
}

/// Called after each chunk with `(samples_done, total)`.
pub type Progress<'a> = &'a (dyn Fn(usize, usize) + Sync);

struct Encoded {
    record: SampleRecord,
    bytes: Vec<u8>,
    bytes_f32: Option<Vec<u8>>,
}

fn encode(sample: &Sample, config: &DatasetConfig, export_f32: bool) -> Encoded {
    let len = sample_len(config.grid_n, Precision::F64);
    let bytes = encode_sample(
        sample.k.values(),
        sample.f.values(),
        sample.u.values(),
        Precision::F64,
    );
    let (k_min, k_max) = sample.k.as_field().range();
    let (u_min, u_max) = sample.u.range();
    let record = SampleRecord {
        index: sample.index,
        split: if sample.index < config.n_train as u64 {
            SplitName::Train
        } else {
            SplitName::Test
        },
        offset: HEADER_LEN + sample.index * len,
        length: len,
        sha256: sha256_hex(&bytes),
        contrast: sample.contrast.contrast,
        phi_min: sample.contrast.phi_min,
        phi_max: sample.contrast.phi_max,
        k_min,
        k_max,
        u_min,
        u_max,
        seed_stream: sample.seed_stream,
        rejection_attempts: sample.rejection_attempts,
        solver_iterations: sample.solver_iterations,
        solver_residual: sample.solver_residual,
    };
    let bytes_f32 = export_f32.then(|| {
        encode_sample(
            sample.k.values(),
            sample.f.values(),
            sample.u.values(),
            Precision::F32,
        )
    });
    Encoded {
        record,
        bytes,
        bytes_f32,
    }
}

fn partial(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Generates every sample of `config` into `out_dir`.
///
/// Samples are computed in parallel and written strictly in index order, so
/// the output bytes do not depend on the worker count. Files are written under
/// a `.partial` suffix and renamed at the end; on failure they are removed.
pub fn generate_dataset(
    config: &DatasetConfig,
    out_dir: &Path,
    options: &GenerateOptions,
    progress: Option<Progress<'_>>,
) -> Result<Manifest> {
    let generator = SampleGenerator::new(config.clone())?;
    let count = u32::try_from(config.sample_count())
        .map_err(|_| Error::Config("sample count exceeds u32".into()))?;
    let grid_n =
        u32::try_from(config.grid_n).map_err(|_| Error::Config("grid size exceeds u32".into()))?;
    fs::create_dir_all(out_dir).map_err(Error::io(out_dir))?;

    let data_path = out_dir.join(DATA_FILE);
    let f32_path = out_dir.join(DATA_FILE_F32);
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let mut pending = vec![partial(&data_path), partial(&manifest_path)];
    if options.export_f32 {
        pending.push(partial(&f32_path));
    }

    let result = (|| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.threads.unwrap_or(0))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

        let open = |path: &Path, precision| -> Result<ArrayWriter<BufWriter<File>>> {
            let file = File::create(path).map_err(Error::io(path))?;
            ArrayWriter::new(BufWriter::new(file), grid_n, count, precision)
                .map_err(Error::io(path))
        };
        let mut data = open(&pending[0], Precision::F64)?;
        let mut data_f32 = match options.export_f32 {
            true => Some((open(&pending[2], Precision::F32)?, Sha256::new())),
            false => None,
        };
        if let Some((_, hasher)) = data_f32.as_mut() {
            hasher.update(crate::format::encode_header(grid_n, count, Precision::F32));
        }

        let chunk = (pool.current_num_threads() * 4).max(8);
        let total = count as usize;
        let mut records = Vec::with_capacity(total);
        for start in (0..total).step_by(chunk) {
            let end = (start + chunk).min(total);
            let encoded: Vec<Encoded> = pool.install(|| {
                (start..end)
                    .into_par_iter()
                    .map(|i| {
                        let index = i as u64;
                        generator
                            .generate(index)
                            .map(|s| encode(&s, config, options.export_f32))
                            .map_err(|source| Error::Sample { index, source })
                    })
                    .collect::<Result<_>>()
            })?;
            for e in encoded {
                data.write_bytes(&e.bytes).map_err(Error::io(&pending[0]))?;
                if let (Some((w, hasher)), Some(b)) = (data_f32.as_mut(), e.bytes_f32.as_ref()) {
                    w.write_bytes(b).map_err(Error::io(&pending[2]))?;
                    hasher.update(b);
                }
                records.push(e.record);
            }
            if let Some(p) = progress {
                p(end, total);
            }
        }
        data.finish().map_err(Error::io(&pending[0]))?;
        let export_f32 = match data_f32 {
            Some((w, hasher)) => {
                w.finish().map_err(Error::io(&pending[2]))?;
                Some(ExportFile {
                    file: DATA_FILE_F32.to_owned(),
                    sha256: hex::encode(hasher.finalize()),
                })
            }
            None => None,
        };

        let stats = Stats::from_records(&records).expect("both splits are nonempty");
        let manifest = Manifest {
            schema: MANIFEST_SCHEMA.to_owned(),
            schema_version: MANIFEST_VERSION,
            format_version: crate::format::FORMAT_VERSION,
            rng: RNG_DESCRIPTION.to_owned(),
            config: ConfigFile::from(config),
            data_file: DATA_FILE.to_owned(),
            export_f32,
            grid_n,
            sample_count: count,
            sample_bytes: sample_len(config.grid_n, Precision::F64),
            embedding: EmbeddingInfo {
                torus_size: generator.embedding().torus_size(),
                clipped_fraction: generator.embedding().clipped_fraction(),
            },
            split: Split {
                train: config.train_indices().collect(),
                test: config.test_indices().collect(),
            },
            samples: records,
            stats,
            created: Created::now(),
        };
        fs::write(&pending[1], manifest.to_json()).map_err(Error::io(&pending[1]))?;
        Ok(manifest)
    })();

    match result {
        Ok(manifest) => {
            let mut renames = vec![(&pending[0], data_path)];
            if options.export_f32 {
                renames.push((&pending[2], f32_path));
            }
            // Manifest last: a complete manifest implies complete data.
            renames.push((&pending[1], manifest_path));
            for (from, to) in renames {
                fs::rename(from, &to).map_err(Error::io(to))?;
            }
            Ok(manifest)
        }
        Err(e) => {
            for p in &pending {
                let _ = fs::remove_file(p);
            }
            Err(e)
        }
    }
}

/// An opened dataset directory.
#[derive(Debug)]
pub struct Dataset {
    dir: PathBuf,
    manifest: Manifest,
    data: ArrayFile,
}

impl Dataset {
    pub fn open(dir: &Path) -> Result<Self> {
        let manifest = Manifest::read(&dir.join(MANIFEST_FILE))?;
        let data = ArrayFile::open(&dir.join(&manifest.data_file))?;
        let h = data.header();
        if h.grid_n != manifest.grid_n || h.sample_count != manifest.sample_count {
            return Err(Error::Corrupt(format!(
                "array header (n={}, count={}) disagrees with manifest (n={}, count={})",
                h.grid_n, h.sample_count, manifest.grid_n, manifest.sample_count
            )));
        }
        Ok(Self {
            dir: dir.to_owned(),
            manifest,
            data,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn grid(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.manifest.grid_n as usize)?)
    }

    pub fn len(&self) -> u64 {
        self.manifest.sample_count as u64
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn read_bytes(&mut self, index: u64) -> Result<Vec<u8>> {
        self.data.read_sample_bytes(index)
    }

    pub fn read(&mut self, index: u64) -> Result<Triplet> {
        self.data.read_sample(index)
    }

    /// Reads a sample and checks it against its recorded checksum.
    pub fn read_verified(&mut self, index: u64) -> Result<Triplet> {
        let bytes = self.read_bytes(index)?;
        let record = self
            .manifest
            .samples
            .get(index as usize)
            .ok_or(Error::IndexOutOfRange {
                index,
                count: self.len(),
            })?;
        if sha256_hex(&bytes) != record.sha256 {
            return Err(Error::Corrupt(format!("sample {index}: checksum mismatch")));
        }
        crate::format::decode_sample(&bytes, self.grid()?)
    }
}
