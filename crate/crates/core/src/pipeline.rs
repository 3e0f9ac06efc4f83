//! Per-sample generation, dataset statistics and the relative L2 metric.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fields::{
    check_bounds, compute_contrast, exponentiate, sample_forcing, CoefficientField, ContrastBounds,
    ContrastReport,
};
use crate::fvm::{self, DEFAULT_SOLVER_TOL};
use crate::grf::{
    CovarianceFamily, CovarianceModel, SpectralEmbedding, DEFAULT_CORRELATION_LENGTH,
};
use crate::grid::{GridSpec, ScalarField};
use crate::rng::{RngSeed, StreamPurpose};

pub const DEFAULT_TRAIN: usize = 1000;
pub const DEFAULT_TEST: usize = 200;
pub const DEFAULT_MAX_REJECTION_ATTEMPTS: u64 = 10_000;

/// Everything needed to regenerate a dataset bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub family: CovarianceFamily,
    pub variance: f64,
    pub correlation_length: f64,
    pub grid_n: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub bounds: ContrastBounds,
    pub master_seed: u64,
    pub solver_tol: f64,
    pub max_rejection_attempts: u64,
}

impl DatasetConfig {
    /// Canonical split sizes and defaults for one of the four canonical
    /// variances; the contrast bounds follow from the variance.
    pub fn canonical(family: CovarianceFamily, variance: f64, grid_n: usize) -> Result<Self> {
        let bounds = ContrastBounds::canonical(variance).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "variance {variance} is not canonical; contrast bounds must be given explicitly"
            ))
        })?;
        Ok(Self::with_bounds(family, variance, grid_n, bounds))
    }

    pub fn with_bounds(
        family: CovarianceFamily,
        variance: f64,
        grid_n: usize,
        bounds: ContrastBounds,
    ) -> Self {
        Self {
            family,
            variance,
            correlation_length: DEFAULT_CORRELATION_LENGTH,
            grid_n,
            n_train: DEFAULT_TRAIN,
            n_test: DEFAULT_TEST,
            bounds,
            master_seed: 0,
            solver_tol: DEFAULT_SOLVER_TOL,
            max_rejection_attempts: DEFAULT_MAX_REJECTION_ATTEMPTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.model()?;
        ContrastBounds::new(self.bounds.lower(), self.bounds.upper())?;
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::InvalidConfig(
                "train and test splits must be nonempty".into(),
            ));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "solver tolerance must lie in (0, 1), got {}",
                self.solver_tol
            )));
        }
        if self.max_rejection_attempts == 0 {
            return Err(Error::InvalidConfig(
                "max_rejection_attempts must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid_n)
    }

    pub fn model(&self) -> Result<CovarianceModel> {
        CovarianceModel::new(self.family, self.variance, self.correlation_length)
    }

    pub fn sample_count(&self) -> usize {
        self.n_train + self.n_test
    }

    pub fn train_indices(&self) -> core::ops::Range<u64> {
        0..self.n_train as u64
    }

    pub fn test_indices(&self) -> core::ops::Range<u64> {
        self.n_train as u64..self.sample_count() as u64
    }
}

/// One `(k, f, u)` triplet with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub index: u64,
    pub k: CoefficientField,
    pub f: ScalarField,
    pub u: ScalarField,
    pub contrast: ContrastReport,
    /// Stream index of the accepted `phi` draw.
    pub seed_stream: u64,
    /// Number of `phi` draws made, including the accepted one.
    pub rejection_attempts: u64,
    pub solver_residual: f64,
    pub solver_iterations: usize,
}

/// Draws samples for one configuration. Holds the spectral embedding so it is
/// built once and shared (read-only) between workers.
#[derive(Debug, Clone)]
pub struct SampleGenerator {
    config: DatasetConfig,
    embedding: SpectralEmbedding,
}

impl SampleGenerator {
    pub fn new(config: DatasetConfig) -> Result<Self> {
        config.validate()?;
        let embedding = SpectralEmbedding::build(config.model()?, config.grid()?)?;
        Ok(Self { config, embedding })
    }

    pub fn config(&self) -> &DatasetConfig {
        &self.config
    }

    pub fn embedding(&self) -> &SpectralEmbedding {
        &self.embedding
    }

    /// Redraws `phi` on stream `(master, "phi", index, attempt)` until its
    /// contrast is within bounds, then solves with forcing drawn on stream
    /// `(master, "f", index)`. A pure function of `(config, index)`.
    pub fn generate(&self, index: u64) -> Result<Sample> {
        let cfg = &self.config;
        let (phi, contrast, seed, attempts) = self.draw_phi(index)?;
        let k = exponentiate(&phi)?;
        let f = sample_forcing(
            self.embedding.grid(),
            RngSeed::derive(cfg.master_seed, StreamPurpose::Forcing, index, 0),
        );
        let problem = fvm::assemble(&k, &f)?;
        let solution = fvm::solve(&problem, cfg.solver_tol)?;
        Ok(Sample {
            index,
            k,
            f,
            u: solution.u,
            contrast,
            seed_stream: seed.stream_index,
            rejection_attempts: attempts,
            solver_residual: solution.residual,
            solver_iterations: solution.iterations,
        })
    }

    fn draw_phi(&self, index: u64) -> Result<(ScalarField, ContrastReport, RngSeed, u64)> {
        let cfg = &self.config;
        for attempt in 0..cfg.max_rejection_attempts {
            let seed = RngSeed::derive(cfg.master_seed, StreamPurpose::Phi, index, attempt);
            let phi = self.embedding.sample(seed);
            let report = compute_contrast(&phi);
            if check_bounds(&report, &cfg.bounds) {
                return Ok((phi, report, seed, attempt + 1));
            }
        }
        Err(Error::RejectionExhausted {
            index,
            attempts: cfg.max_rejection_attempts,
        })
    }
}

pub fn generate_sample(config: &DatasetConfig, index: u64) -> Result<Sample> {
    SampleGenerator::new(config.clone())?.generate(index)
}

/// Mean over the batch of `||prediction_i - truth_i|| / ||truth_i||`.
pub fn relative_l2(prediction: &[ScalarField], truth: &[ScalarField]) -> Result<f64> {
    if prediction.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: prediction.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    let mut total = 0.0;
    for (index, (p, t)) in prediction.iter().zip(truth).enumerate() {
        if p.grid() != t.grid() {
            return Err(Error::GridMismatch {
                left: p.grid().n(),
                right: t.grid().n(),
            });
        }
        let (diff, norm) = p
            .values()
            .iter()
            .zip(t.values())
            .fold((0.0, 0.0), |(d, n), (p, t)| {
                (d + (p - t) * (p - t), n + t * t)
            });
        if norm == 0.0 {
            return Err(Error::DegenerateTruth { index });
        }
        total += libm::sqrt(diff) / libm::sqrt(norm);
    }
    Ok(total / truth.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastSummary {
    pub count: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

pub fn summarize(contrasts: &[f64]) -> Option<ContrastSummary> {
    if contrasts.is_empty() {
        return None;
    }
    let (min, max, sum) = contrasts.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, 0.0),
        |(lo, hi, s), &c| (lo.min(c), hi.max(c), s + c),
    );
    Some(ContrastSummary {
        count: contrasts.len(),
        min,
        mean: sum / contrasts.len() as f64,
        max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BinScale {
    #[default]
    Linear,
    /// Geometrically spaced edges; requires positive values.
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Histogram over `[lo, hi]` (the data range when `range` is `None`).
/// Bins are half-open except the last, which includes `hi`. Values outside
/// the range are dropped.
pub fn histogram(
    values: &[f64],
    bins: usize,
    scale: BinScale,
    range: Option<(f64, f64)>,
) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidConfig(
            "histogram needs at least one bin".into(),
        ));
    }
    let (lo, hi) = match range {
        Some(r) => r,
        None => {
            let s =
                summarize(values).ok_or_else(|| Error::InvalidConfig("no values to bin".into()))?;
            (s.min, s.max)
        }
    };
    if scale == BinScale::Log && !(lo > 0.0) {
        return Err(Error::InvalidConfig(
            "logarithmic bins need positive values".into(),
        ));
    }
    let (a, b) = match scale {
        BinScale::Linear => (lo, hi),
        BinScale::Log => (libm::log(lo), libm::log(hi)),
    };
    // A degenerate range still yields one bin of zero width holding everything.
    let width = (b - a) / bins as f64;
    let edge = |i: usize| {
        let t = if i == bins { b } else { a + width * i as f64 };
        match scale {
            BinScale::Linear => t,
            BinScale::Log => libm::exp(t),
        }
    };
    let mut edges: Vec<f64> = (0..=bins).map(edge).collect();
    edges[0] = lo;
    edges[bins] = hi;

    let mut counts = vec![0; bins];
    for &v in values {
        if !(v >= lo && v <= hi) {
            continue;
        }
        let t = match scale {
            BinScale::Linear => v,
            BinScale::Log => libm::log(v),
        };
        let slot = if width > 0.0 {
            (((t - a) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[slot] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    #[test]
    fn relative_l2_unit_cases() {
        let g = grid(4);
        let y = ScalarField::from_fn(g, |x, y| libm::sin(7.0 * x) + y).unwrap();
        let truth = [y.clone(), y.map(|v| -3.0 * v + 1.0).unwrap()];
        assert_eq!(relative_l2(&truth, &truth).unwrap(), 0.0);
        let zeros = [
            ScalarField::constant(g, 0.0).unwrap(),
            ScalarField::constant(g, 0.0).unwrap(),
        ];
        assert!((relative_l2(&zeros, &truth).unwrap() - 1.0).abs() < 1e-12);
        let doubled: Vec<_> = truth.iter().map(|t| t.map(|v| 2.0 * v).unwrap()).collect();
        assert!((relative_l2(&doubled, &truth).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relative_l2_errors() {
        let g = grid(2);
        let z = ScalarField::constant(g, 0.0).unwrap();
        let one = ScalarField::constant(g, 1.0).unwrap();
        assert!(matches!(
            relative_l2(&[one.clone(), z.clone()], &[one.clone(), z.clone()]),
            Err(Error::DegenerateTruth { index: 1 })
        ));
        assert!(relative_l2(std::slice::from_ref(&one), &[one.clone(), one.clone()]).is_err());
        let other = ScalarField::constant(grid(3), 1.0).unwrap();
        assert!(matches!(
            relative_l2(&[other], &[one]),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn summary_statistics() {
        let s = summarize(&[7.0, 10.0, 15.0]).unwrap();
        assert_eq!((s.min, s.max, s.count), (7.0, 15.0, 3));
        assert!((s.mean - 32.0 / 3.0).abs() < 1e-12);
        let one = summarize(&[4.2]).unwrap();
        assert_eq!((one.min, one.mean, one.max), (4.2, 4.2, 4.2));
        assert!(summarize(&[]).is_none());
    }

    #[test]
    fn histogram_bins() {
        let h = histogram(&[1.0, 2.0, 2.5, 4.0, 5.0], 4, BinScale::Linear, None).unwrap();
        assert_eq!(h.edges, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(h.counts, vec![1, 2, 0, 2]);

        let h = histogram(&[1.0, 10.0, 100.0, 1000.0], 3, BinScale::Log, None).unwrap();
        assert_eq!(h.counts, vec![1, 1, 2]);
        assert!((h.edges[1] - 10.0).abs() < 1e-9);

        let h = histogram(&[3.0, 3.0], 2, BinScale::Linear, None).unwrap();
        assert_eq!(h.counts, vec![2, 0]);
        assert!(histogram(&[1.0], 0, BinScale::Linear, None).is_err());
        assert!(histogram(&[-1.0, 1.0], 2, BinScale::Log, None).is_err());
    }

    #[test]
    fn canonical_config_requires_canonical_variance() {
        assert!(DatasetConfig::canonical(CovarianceFamily::Cubic, 0.3, 64).is_err());
        let c = DatasetConfig::canonical(CovarianceFamily::Cubic, 0.4, 64).unwrap();
        assert_eq!(c.bounds, ContrastBounds::canonical(0.4).unwrap());
        assert_eq!(c.sample_count(), 1200);
        assert_eq!(c.test_indices(), 1000..1200);
        c.validate().unwrap();
        let mut bad = c.clone();
        bad.n_test = 0;
        assert!(bad.validate().is_err());
        bad = c;
        bad.solver_tol = 1.5;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn small_sample_is_in_bounds_and_deterministic() {
        let mut cfg = DatasetConfig::canonical(CovarianceFamily::Cubic, 0.1, 16).unwrap();
        cfg.master_seed = 5;
        let generator = SampleGenerator::new(cfg.clone()).unwrap();
        let a = generator.generate(3).unwrap();
        assert!(cfg.bounds.contains(a.contrast.contrast));
        assert!(a.solver_residual <= cfg.solver_tol);
        assert!(a.rejection_attempts >= 1);
        assert_eq!(a, generate_sample(&cfg, 3).unwrap());
    }

    #[test]
    fn near_zero_variance_is_almost_constant() {
        let bounds = ContrastBounds::new(1.0, 1.0 + 1e-3).unwrap();
        let mut cfg = DatasetConfig::with_bounds(CovarianceFamily::Gaussian, 1e-12, 8, bounds);
        cfg.max_rejection_attempts = 1;
        let s = generate_sample(&cfg, 0).unwrap();
        assert_eq!(s.rejection_attempts, 1);
        assert!(s.contrast.contrast - 1.0 < 1e-4);
    }
}
