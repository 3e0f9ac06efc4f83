//! Monte Carlo checks of the sampled fields' first and second moments.

use condiff_core::grf::{CovarianceFamily, CovarianceModel, SpectralEmbedding};
use condiff_core::{GridSpec, RngSeed, ScalarField};
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn draw(emb: &SpectralEmbedding, count: u64, master: u64) -> Vec<ScalarField> {
    (0..count)
        .into_par_iter()
        .map(|i| emb.sample(RngSeed::new(master, i)))
        .collect()
}

fn embedding(family: CovarianceFamily, variance: f64, n: usize) -> SpectralEmbedding {
    let model = CovarianceModel::new(family, variance, 0.05).unwrap();
    SpectralEmbedding::build(model, GridSpec::new(n).unwrap()).unwrap()
}

/// Mean and standard error of per-sample statistics.
fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-sample average of `phi(c) * phi(c + lag)` over every valid cell `c`.
fn lag_product(field: &ScalarField, di: usize, dj: usize) -> f64 {
    let n = field.grid().n();
    let mut sum = 0.0;
    let mut count = 0usize;
    for j in 0..n - dj {
        for i in 0..n - di {
            sum += field.get(i, j) * field.get(i + di, j + dj);
            count += 1;
        }
    }
    sum / count as f64
}

#[test]
fn per_cell_mean_and_variance() {
    for family in CovarianceFamily::ALL {
        let emb = embedding(family, 1.0, 32);
        let fields = draw(&emb, 10_000, 17);
        let cells = emb.grid().cells();
        let count = fields.len() as f64;
        let mut mean = vec![0.0; cells];
        let mut second = vec![0.0; cells];
        for f in &fields {
            for (c, v) in f.values().iter().enumerate() {
                mean[c] += v;
                second[c] += v * v;
            }
        }
        for c in 0..cells {
            let m = mean[c] / count;
            let var = second[c] / count - m * m;
            assert!(m.abs() <= 0.05, "{family}: cell {c} mean {m}");
            assert!(
                (var - 1.0).abs() <= 0.1,
                "{family}: cell {c} variance {var}"
            );
        }
    }
}

#[test]
fn exponential_covariance_at_correlation_length() {
    // n = 40 puts horizontally adjacent-by-two cells exactly 0.05 apart.
    let emb = embedding(CovarianceFamily::Exponential, 1.0, 40);
    let fields = draw(&emb, 10_000, 3);
    let products: Vec<f64> = fields.iter().map(|f| lag_product(f, 2, 0)).collect();
    let (cov, se) = mean_and_se(&products);
    let expected = (-1.0f64).exp();
    assert!((cov - expected).abs() <= 0.05, "cov {cov}");
    assert!((cov - expected).abs() <= 4.0 * se, "cov {cov} se {se}");
}

#[test]
fn covariance_matches_kernel_at_several_lags() {
    for family in CovarianceFamily::ALL {
        let emb = embedding(family, 2.0, 64);
        let model = *emb.model();
        let fields = draw(&emb, 2_000, 99);
        for lag in [1usize, 2, 3, 5] {
            let products: Vec<f64> = fields.iter().map(|f| lag_product(f, lag, 0)).collect();
            let (cov, se) = mean_and_se(&products);
            let expected = model.covariance(lag as f64 / 64.0);
            assert!(
                (cov - expected).abs() <= 4.0 * se + 1e-3,
                "{family} lag {lag}: {cov} vs {expected} (se {se})"
            );
        }
    }
}

#[test]
fn stationarity_chi_square() {
    let emb = embedding(CovarianceFamily::Exponential, 1.0, 32);
    let fields = draw(&emb, 2_000, 5);
    let positions = [
        (2, 2),
        (15, 2),
        (28, 2),
        (2, 15),
        (15, 15),
        (28, 15),
        (2, 28),
        (15, 28),
        (28, 28),
    ];
    let stats: Vec<(f64, f64)> = positions
        .iter()
        .map(|&(i, j)| {
            let xs: Vec<f64> = fields
                .iter()
                .map(|f| f.get(i, j) * f.get(i + 1, j))
                .collect();
            mean_and_se(&xs)
        })
        .collect();
    let weights: Vec<f64> = stats.iter().map(|(_, se)| 1.0 / (se * se)).collect();
    let pooled = stats
        .iter()
        .zip(&weights)
        .map(|((m, _), w)| m * w)
        .sum::<f64>()
        / weights.iter().sum::<f64>();
    let chi2: f64 = stats
        .iter()
        .map(|(m, se)| ((m - pooled) / se).powi(2))
        .sum();
    let critical = ChiSquared::new((positions.len() - 1) as f64)
        .unwrap()
        .inverse_cdf(0.99);
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
}

#[test]
fn isotropy_of_axis_lags() {
    for family in CovarianceFamily::ALL {
        let emb = embedding(family, 1.0, 32);
        let fields = draw(&emb, 2_000, 11);
        for lag in [1, 3] {
            let diffs: Vec<f64> = fields
                .iter()
                .map(|f| lag_product(f, lag, 0) - lag_product(f, 0, lag))
                .collect();
            let (d, se) = mean_and_se(&diffs);
            assert!(d.abs() <= 4.0 * se, "{family} lag {lag}: {d} (se {se})");
        }
    }
}

#[test]
fn gaussian_embedding_clipped_mass_oracle() {
    // Independent spectrum: direct O(M^4) DFT of the circulant's first row.
    let n = 16;
    let m = 32;
    let model = CovarianceModel::new(CovarianceFamily::Gaussian, 1.0, 0.05).unwrap();
    let h = 1.0 / n as f64;
    let lag = |k: usize| (k.min(m - k) as f64) * h;
    let mut negative = 0.0;
    let mut total = 0.0;
    for p in 0..m {
        for q in 0..m {
            let mut lambda = 0.0;
            for r in 0..m {
                for c in 0..m {
                    let d = (lag(r).powi(2) + lag(c).powi(2)).sqrt();
                    let phase =
                        -2.0 * std::f64::consts::PI * ((p * r + q * c) % m) as f64 / m as f64;
                    lambda += model.covariance(d) * phase.cos();
                }
            }
            total += lambda.abs();
            if lambda < 0.0 {
                negative -= lambda;
            }
        }
    }
    let oracle_fraction = negative / total;
    assert!(oracle_fraction < 1e-6);
    let emb = SpectralEmbedding::build(model, GridSpec::new(n).unwrap()).unwrap();
    assert_eq!(emb.torus_size(), m);
    assert!((emb.clipped_fraction() - oracle_fraction).abs() < 1e-9);
}
