//! Coefficients, the contrast metric and forcing terms.

use alloc::format;
use alloc::vec;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::rng::{self, RngSeed};

/// Diffusion coefficient `k = exp(phi)` together with the field it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    k: ScalarField,
    source_phi: ScalarField,
}

impl CoefficientField {
    pub fn grid(&self) -> GridSpec {
        self.k.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.k.values()
    }

    pub fn as_field(&self) -> &ScalarField {
        &self.k
    }

    pub fn source_phi(&self) -> &ScalarField {
        &self.source_phi
    }

    pub fn contrast(&self) -> ContrastReport {
        compute_contrast(&self.source_phi)
    }
}

/// Elementwise `exp`. Fails if any value overflows.
pub fn exponentiate(phi: &ScalarField) -> Result<CoefficientField> {
    let values: alloc::vec::Vec<f64> = phi.values().iter().map(|&p| libm::exp(p)).collect();
    if let Some(index) = values.iter().position(|k| !k.is_finite() || *k <= 0.0) {
        return Err(Error::Overflow {
            index,
            phi: phi.values()[index],
        });
    }
    Ok(CoefficientField {
        k: ScalarField::new(phi.grid(), values)?,
        source_phi: phi.clone(),
    })
}

/// `contrast = exp(max phi - min phi)` over the cell centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastReport {
    pub contrast: f64,
    pub phi_min: f64,
    pub phi_max: f64,
}

pub fn compute_contrast(phi: &ScalarField) -> ContrastReport {
    let (phi_min, phi_max) = phi.range();
    ContrastReport {
        contrast: libm::exp(phi_max - phi_min),
        phi_min,
        phi_max,
    }
}

/// Inclusive contrast interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastBounds {
    lower: f64,
    upper: f64,
}

/// The four canonical variance classes and their contrast intervals.
pub const CANONICAL_CLASSES: [(f64, ContrastBounds); 4] = [
    (
        0.1,
        ContrastBounds {
            lower: 5.0,
            upper: 15.0,
        },
    ),
    (
        0.4,
        ContrastBounds {
            lower: 50.0,
            upper: 250.0,
        },
    ),
    (
        1.0,
        ContrastBounds {
            lower: 6e2,
            upper: 1e3,
        },
    ),
    (
        2.0,
        ContrastBounds {
            lower: 8e4,
            upper: 1e5,
        },
    ),
];

impl ContrastBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower >= 1.0 && upper > lower && upper.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "contrast bounds must satisfy 1 <= lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// Bounds for one of the canonical variances `{0.1, 0.4, 1.0, 2.0}`.
    pub fn canonical(variance: f64) -> Option<Self> {
        CANONICAL_CLASSES
            .iter()
            .find(|(v, _)| *v == variance)
            .map(|(_, b)| *b)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains(&self, contrast: f64) -> bool {
        self.lower <= contrast && contrast <= self.upper
    }
}

pub fn check_bounds(report: &ContrastReport, bounds: &ContrastBounds) -> bool {
    bounds.contains(report.contrast)
}

/// White-noise forcing: one standard normal per cell, in row-major order.
pub fn sample_forcing(grid: GridSpec, seed: RngSeed) -> ScalarField {
    let mut values = vec![0.0; grid.cells()];
    rng::fill_standard_normal(&mut seed.rng(), &mut values);
    ScalarField::new(grid, values).expect("normal draws are finite")
}
