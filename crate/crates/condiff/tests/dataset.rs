use condiff::dataset::{generate_dataset, Dataset, GenerateOptions};
use condiff::format::{decode_header, Precision};
use condiff::manifest::{SampleRecord, SplitName, Stats};
use condiff::{validate_dataset, ConfigFile};
use condiff_core::fields::ContrastBounds;
use condiff_core::fvm::assemble_with_values;
use condiff_core::{CovarianceFamily, DatasetConfig, Error as CoreError, SampleGenerator};
use proptest::prelude::*;

fn tiny() -> DatasetConfig {
    let mut c = DatasetConfig::canonical(CovarianceFamily::Cubic, 0.1, 16).unwrap();
    c.n_train = 5;
    c.n_test = 2;
    c.master_seed = 11;
    c
}

#[test]
fn tiny_run_is_reverifiable_from_disk() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tiny();
    let manifest =
        generate_dataset(&config, tmp.path(), &GenerateOptions::default(), None).unwrap();
    assert_eq!(manifest.samples.len(), 7);
    assert_eq!(manifest.split.train, vec![0, 1, 2, 3, 4]);
    assert_eq!(manifest.split.test, vec![5, 6]);
    assert!(manifest
        .samples
        .iter()
        .all(|r| (5.0..=15.0).contains(&r.contrast)));

    // Independent re-verification: re-assemble from the stored arrays.
    let mut ds = Dataset::open(tmp.path()).unwrap();
    for r in &manifest.samples {
        let t = ds.read_verified(r.index).unwrap();
        let p = assemble_with_values(&t.k, &t.f).unwrap();
        let res = p.relative_residual(&t.u).unwrap();
        assert!(res <= config.solver_tol, "sample {}: {res}", r.index);
        assert_eq!(
            r.split,
            if r.index < 5 {
                SplitName::Train
            } else {
                SplitName::Test
            }
        );
    }
    assert!(validate_dataset(tmp.path()).unwrap().is_ok());
}

#[test]
fn stored_arrays_equal_the_generator_output() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tiny();
    generate_dataset(&config, tmp.path(), &GenerateOptions::default(), None).unwrap();
    let gen = SampleGenerator::new(config).unwrap();
    let mut ds = Dataset::open(tmp.path()).unwrap();
    for i in [0u64, 6] {
        let s = gen.generate(i).unwrap();
        let t = ds.read(i).unwrap();
        assert_eq!(t.k.values(), s.k.values());
        assert_eq!(t.f.values(), s.f.values());
        assert_eq!(t.u.values(), s.u.values());
    }
    assert!(matches!(
        ds.read(7),
        Err(condiff::Error::IndexOutOfRange { index: 7, count: 7 })
    ));
}

#[test]
fn f32_export_mirrors_the_f64_arrays() {
    let tmp = tempfile::tempdir().unwrap();
    let options = GenerateOptions {
        threads: Some(2),
        export_f32: true,
    };
    let m = generate_dataset(&tiny(), tmp.path(), &options, None).unwrap();
    let bytes32 = std::fs::read(tmp.path().join(&m.export_f32.as_ref().unwrap().file)).unwrap();
    let header = decode_header(&bytes32).unwrap();
    assert_eq!(
        (header.precision, header.grid_n, header.sample_count),
        (Precision::F32, 16, 7)
    );
    let mut ds = Dataset::open(tmp.path()).unwrap();
    let t = ds.read(3).unwrap();
    let per_sample = 3 * 256 * 4;
    let start = 16 + 3 * per_sample;
    let k0 = f32::from_le_bytes(bytes32[start..start + 4].try_into().unwrap());
    assert_eq!(k0, t.k.values()[0] as f32);
    assert_eq!(bytes32.len(), 16 + 7 * per_sample);
    assert!(validate_dataset(tmp.path()).unwrap().is_ok());

    let mut corrupted = bytes32.clone();
    corrupted[100] ^= 1;
    std::fs::write(tmp.path().join("data.f32.bin"), corrupted).unwrap();
    assert!(!validate_dataset(tmp.path()).unwrap().is_ok());
}

#[test]
fn mismatched_bounds_exhaust_rejection() {
    // 1e4 draws at variance 0.1 on the canonical n = 64 grid never reach contrast 8e4.
    let config = DatasetConfig::with_bounds(
        CovarianceFamily::Cubic,
        0.1,
        64,
        ContrastBounds::new(8e4, 1e5).unwrap(),
    );
    let gen = SampleGenerator::new(config).unwrap();
    match gen.generate(0) {
        Err(CoreError::RejectionExhausted { index: 0, attempts }) => assert_eq!(attempts, 10_000),
        other => panic!("expected rejection exhaustion, got {other:?}"),
    }
}

#[test]
fn failure_removes_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = tiny();
    config.bounds = ContrastBounds::new(8e4, 1e5).unwrap();
    config.max_rejection_attempts = 20;
    let err = generate_dataset(&config, tmp.path(), &GenerateOptions::default(), None).unwrap_err();
    assert!(
        matches!(err, condiff::Error::Sample { index: 0, .. }),
        "{err}"
    );
    assert_eq!(std::fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn cubic_low_variance_stats_sit_in_the_class() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = DatasetConfig::canonical(CovarianceFamily::Cubic, 0.1, 64).unwrap();
    config.n_train = 100;
    config.n_test = 20;
    let m = generate_dataset(&config, tmp.path(), &GenerateOptions::default(), None).unwrap();
    let s = m.stats.all;
    assert_eq!(s.count, 120);
    assert!(s.min >= 5.0 && s.max <= 15.0, "{s:?}");
    assert!((7.0..=13.0).contains(&s.mean), "{s:?}");
}

#[test]
fn gaussian_high_variance_slice_mean_in_class() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = DatasetConfig::canonical(CovarianceFamily::Gaussian, 2.0, 64).unwrap();
    config.n_train = 16;
    config.n_test = 4;
    let m = generate_dataset(&config, tmp.path(), &GenerateOptions::default(), None).unwrap();
    assert!((8e4..=1e5).contains(&m.stats.all.mean), "{:?}", m.stats.all);
}

#[test]
fn vanishing_variance_gives_unit_contrast() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = DatasetConfig::with_bounds(
        CovarianceFamily::Exponential,
        1e-12,
        16,
        ContrastBounds::new(1.0, 1.0 + 1e-3).unwrap(),
    );
    config.n_train = 3;
    config.n_test = 1;
    let m = generate_dataset(&config, tmp.path(), &GenerateOptions::default(), None).unwrap();
    for r in &m.samples {
        assert_eq!(r.rejection_attempts, 1);
        assert!((r.contrast - 1.0).abs() < 1e-4, "{}", r.contrast);
    }
}

fn record(index: u64, split: SplitName, contrast: f64) -> SampleRecord {
    SampleRecord {
        index,
        split,
        offset: 0,
        length: 0,
        sha256: String::new(),
        contrast,
        phi_min: 0.0,
        phi_max: contrast.ln(),
        k_min: 1.0,
        k_max: contrast,
        u_min: 0.0,
        u_max: 0.0,
        seed_stream: 0,
        rejection_attempts: 1,
        solver_iterations: 0,
        solver_residual: 0.0,
    }
}

#[test]
fn stats_are_exact_scans() {
    let records = vec![
        record(0, SplitName::Train, 7.0),
        record(1, SplitName::Train, 10.0),
        record(2, SplitName::Test, 15.0),
    ];
    let s = Stats::from_records(&records).unwrap();
    assert_eq!((s.all.min, s.all.max, s.all.count), (7.0, 15.0, 3));
    assert!((s.all.mean - 32.0 / 3.0).abs() < 1e-12);
    assert_eq!((s.train.min, s.train.mean, s.train.max), (7.0, 8.5, 10.0));
    assert_eq!((s.test.min, s.test.mean, s.test.max), (15.0, 15.0, 15.0));
}

#[test]
fn manifest_config_round_trips() {
    let c = tiny();
    let file = ConfigFile::from(&c);
    let json = serde_json::to_string(&file).unwrap();
    let back: ConfigFile = serde_json::from_str(&json).unwrap();
    assert_eq!(back.to_config().unwrap(), c);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn random_small_configs_validate(
        family in prop::sample::select(CovarianceFamily::ALL.to_vec()),
        n in 4usize..20,
        train in 1usize..4,
        test in 1usize..3,
        seed in any::<u64>(),
        variance in 0.05f64..1.5,
        threads in 1usize..4,
    ) {
        let tmp = tempfile::tempdir().unwrap();
        let mut config = DatasetConfig::with_bounds(family, variance, n, ContrastBounds::new(1.0, 1e8).unwrap());
        config.n_train = train;
        config.n_test = test;
        config.master_seed = seed;
        let options = GenerateOptions { threads: Some(threads), export_f32: false };
        generate_dataset(&config, tmp.path(), &options, None).unwrap();
        let report = validate_dataset(tmp.path()).unwrap();
        prop_assert!(report.is_ok(), "{:?}", report.violations);
        prop_assert_eq!(report.samples_checked, (train + test) as u64);
    }
}
