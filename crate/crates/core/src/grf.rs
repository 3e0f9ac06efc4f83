//! Stationary isotropic Gaussian random fields by circulant embedding.
//!
//! The covariance matrix of a stationary field on a regular grid is block
//! Toeplitz. Placed on a periodic `M x M` torus with `M >= 2n` it becomes block
//! circulant, is diagonalised by the 2D DFT, and a field with exactly that
//! covariance is `Re(F(sqrt(lambda / M^2) * xi))` restricted to the original
//! `n x n` window, where `xi` is complex white noise with unit-variance real
//! and imaginary parts.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::fft::{Complex, Fft};
use crate::grid::{GridSpec, ScalarField};
use crate::rng::{self, RngSeed};

/// Default correlation length of the canonical datasets.
pub const DEFAULT_CORRELATION_LENGTH: f64 = 0.05;

/// Stop padding once the negative spectral mass is below this fraction.
pub const PAD_TOLERANCE: f64 = 1e-6;

/// Largest negative spectral mass fraction that may be clipped at the padding cap.
pub const MAX_CLIPPED_FRACTION: f64 = 1e-3;

/// The torus never grows beyond this many times the grid size.
pub const MAX_PADDING_FACTOR: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovarianceFamily {
    Cubic,
    Exponential,
    Gaussian,
}

impl CovarianceFamily {
    pub const ALL: [Self; 3] = [Self::Cubic, Self::Exponential, Self::Gaussian];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cubic => "cubic",
            Self::Exponential => "exponential",
            Self::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for CovarianceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CovarianceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cubic" => Ok(Self::Cubic),
            "exponential" | "exp" => Ok(Self::Exponential),
            "gaussian" | "gauss" => Ok(Self::Gaussian),
            other => Err(Error::InvalidModel(format!(
                "unknown covariance family `{other}`"
            ))),
        }
    }
}

/// A covariance kernel `Cov(d)` with variance `sigma^2` and correlation length `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceModel {
    family: CovarianceFamily,
    variance: f64,
    correlation_length: f64,
}

impl CovarianceModel {
    pub fn new(family: CovarianceFamily, variance: f64, correlation_length: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "variance must be positive, got {variance}"
            )));
        }
        if !(correlation_length > 0.0 && correlation_length.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "correlation length must be positive, got {correlation_length}"
            )));
        }
        Ok(Self {
            family,
            variance,
            correlation_length,
        })
    }

    pub fn family(&self) -> CovarianceFamily {
        self.family
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn correlation_length(&self) -> f64 {
        self.correlation_length
    }

    /// `Cov(d)` for a nonnegative distance `d`.
    pub fn covariance(&self, d: f64) -> f64 {
        let r = d / self.correlation_length;
        match self.family {
            CovarianceFamily::Cubic => {
                if r >= 1.0 {
                    return 0.0;
                }
                let r2 = r * r;
                let r3 = r2 * r;
                let r5 = r3 * r2;
                let r7 = r5 * r2;
                self.variance * (1.0 - 7.0 * r2 + 8.75 * r3 - 3.5 * r5 + 0.75 * r7)
            }
            CovarianceFamily::Exponential => self.variance * libm::exp(-r),
            CovarianceFamily::Gaussian => self.variance * libm::exp(-r * r),
        }
    }
}

/// Spectrum of the block-circulant extension of a covariance matrix, ready
/// for sampling. Immutable once built; sampling only reads it.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    model: CovarianceModel,
    grid: GridSpec,
    torus_size: usize,
    eigenvalues: Vec<f64>,
    amplitudes: Vec<f64>,
    clipped_fraction: f64,
    fft: Fft,
}

/// Eigenvalues (unclipped) of the circulant embedding on an `m x m` torus,
/// together with the negative mass fraction.
fn circulant_spectrum(
    model: &CovarianceModel,
    grid: GridSpec,
    m: usize,
    fft: &Fft,
) -> (Vec<f64>, f64) {
    let h = grid.h();
    let lag = |k: usize| k.min(m - k) as f64 * h;
    let mut data: Vec<Complex> = (0..m)
        .flat_map(|r| (0..m).map(move |c| (r, c)))
        .map(|(r, c)| {
            let (dx, dy) = (lag(c), lag(r));
            Complex::new(model.covariance(libm::sqrt(dx * dx + dy * dy)), 0.0)
        })
        .collect();
    fft.process_2d(&mut data);
    let eigenvalues: Vec<f64> = data.iter().map(|c| c.re).collect();
    let (negative, total) = eigenvalues.iter().fold((0.0, 0.0), |(neg, tot), &l| {
        (if l < 0.0 { neg - l } else { neg }, tot + l.abs())
    });
    let fraction = if total > 0.0 { negative / total } else { 0.0 };
    (eigenvalues, fraction)
}

impl SpectralEmbedding {
    /// Builds the embedding on the smallest power-of-two torus `M >= 2n`,
    /// doubling until the negative spectral mass drops below
    /// [`PAD_TOLERANCE`] or `M` would exceed `8n`. Negative eigenvalues are
    /// clipped to zero; more than [`MAX_CLIPPED_FRACTION`] clipped mass at the
    /// final size is an error.
    pub fn build(model: CovarianceModel, grid: GridSpec) -> Result<Self> {
        let cap = MAX_PADDING_FACTOR * grid.n();
        let mut m = (2 * grid.n()).next_power_of_two();
        loop {
            let fft = Fft::new(m);
            let (eigenvalues, clipped_fraction) = circulant_spectrum(&model, grid, m, &fft);
            let last = 2 * m > cap;
            if clipped_fraction <= PAD_TOLERANCE || last {
                if clipped_fraction > MAX_CLIPPED_FRACTION {
                    return Err(Error::EmbeddingNotPd {
                        clipped_fraction,
                        torus_size: m,
                    });
                }
                let eigenvalues: Vec<f64> = eigenvalues.into_iter().map(|l| l.max(0.0)).collect();
                let norm = (m * m) as f64;
                let amplitudes = eigenvalues.iter().map(|&l| libm::sqrt(l / norm)).collect();
                return Ok(Self {
                    model,
                    grid,
                    torus_size: m,
                    eigenvalues,
                    amplitudes,
                    clipped_fraction,
                    fft,
                });
            }
            m *= 2;
        }
    }

    pub fn model(&self) -> &CovarianceModel {
        &self.model
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Side length `M` of the periodic torus.
    pub fn torus_size(&self) -> usize {
        self.torus_size
    }

    /// Clipped eigenvalues, row-major over the `M x M` torus frequencies.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Negative spectral mass divided by total absolute mass, before clipping.
    pub fn clipped_fraction(&self) -> f64 {
        self.clipped_fraction
    }

    /// Draws one zero-mean field. The stream consumes two standard normals per
    /// torus mode (real then imaginary part) in row-major mode order.
    pub fn sample(&self, seed: RngSeed) -> ScalarField {
        let m = self.torus_size;
        let n = self.grid.n();
        let mut rng = seed.rng();
        let mut data: Vec<Complex> = self
            .amplitudes
            .iter()
            .map(|&a| {
                let re = rng::standard_normal(&mut rng);
                let im = rng::standard_normal(&mut rng);
                Complex::new(re, im).scale(a)
            })
            .collect();
        self.fft.process_2d(&mut data);
        let values = (0..n)
            .flat_map(|j| (0..n).map(move |i| j * m + i))
            .map(|p| data[p].re)
            .collect();
        ScalarField::new(self.grid, values).expect("embedding produces finite values")
    }
}

/// Convenience wrapper building a fresh embedding per call.
pub fn sample_grf(model: CovarianceModel, grid: GridSpec, seed: RngSeed) -> Result<ScalarField> {
    Ok(SpectralEmbedding::build(model, grid)?.sample(seed))
}
