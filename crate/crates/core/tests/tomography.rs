use natherm::linalg::random::random_density;
use natherm::metrics::{fidelity, relative_entropy, trace_distance};
use natherm::tomography::{
    bias_study, bootstrap, born_probabilities, mle_reconstruct, sample_counts, FrequencyTable, MeasurementRecord, MleOptions, BASES,
};
use natherm::DensityMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn state(seed: u64) -> DensityMatrix {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let rank = r.random_range(1..=4);
    random_density(2, rank, &mut r)
}

fn zz_up_frequency(records: &[MeasurementRecord]) -> Result<f64, natherm::Error> {
    Ok(records[8].frequencies()[0])
}

/// Pearson statistic of `rho`'s predictions against the counts.
fn chi_squared(rho: &DensityMatrix, records: &[MeasurementRecord]) -> f64 {
    records
        .iter()
        .map(|r| {
            let p = born_probabilities(rho, r.basis).unwrap();
            (0..4).map(|o| (r.counts[o] as f64 - r.shots as f64 * p[o]).powi(2) / (r.shots as f64 * p[o]).max(1e-9)).sum::<f64>()
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn likelihood_never_decreases(seed in any::<u64>(), shots in 20u64..400) {
        let rho = state(seed);
        let records = sample_counts(&rho, shots, seed).unwrap();
        let opts = MleOptions { max_iter: 300, tol: 1e-9 };
        let fit = mle_reconstruct(&FrequencyTable::from_records(&records), &opts).unwrap();
        for w in fit.log_likelihood.windows(2) {
            prop_assert!(w[1] >= w[0], "{} -> {}", w[0], w[1]);
        }
        let min = fit.state.eigenvalues().unwrap()[0];
        prop_assert!(min >= -1e-12);
        prop_assert!((fit.state.trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bootstrap_is_reproducible(seed in any::<u64>(), boot_seed in any::<u64>()) {
        let records = sample_counts(&state(seed), 50, seed).unwrap();
        let a = bootstrap(&records, 4, boot_seed, zz_up_frequency).unwrap();
        let b = bootstrap(&records, 4, boot_seed, zz_up_frequency).unwrap();
        prop_assert_eq!(a.samples.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.samples.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        prop_assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn counts_are_complete_and_seeded(seed in any::<u64>(), shots in 1u64..200) {
        let rho = state(seed);
        let records = sample_counts(&rho, shots, seed).unwrap();
        prop_assert_eq!(records.len(), 9);
        for (r, b) in records.iter().zip(BASES) {
            prop_assert_eq!(r.basis, b);
            prop_assert_eq!(r.counts.iter().sum::<u64>(), shots);
            prop_assert_eq!(r.shots, shots);
        }
        prop_assert_eq!(sample_counts(&rho, shots, seed).unwrap(), records);
    }
}

#[test]
fn frequencies_converge_to_born_rule() {
    let rho = state(4);
    let records = sample_counts(&rho, 1_000_000, 9).unwrap();
    for r in &records {
        let p = born_probabilities(&rho, r.basis).unwrap();
        let f = r.frequencies();
        for o in 0..4 {
            assert!((f[o] - p[o]).abs() < 5e-3, "{:?} outcome {o}: {} vs {}", r.basis, f[o], p[o]);
        }
    }
}

#[test]
fn exact_probabilities_reconstruct_the_state() {
    for seed in 0..5 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(2, 4, &mut r);
        let fit = mle_reconstruct(&FrequencyTable::ideal(&rho).unwrap(), &MleOptions::default()).unwrap();
        let f = fidelity(&rho, &fit.state).unwrap();
        assert!(f > 0.9999, "seed {seed}: fidelity {f}");
    }
}

#[test]
fn maximally_mixed_state_is_recovered() {
    let mixed = DensityMatrix::maximally_mixed(2);
    for seed in 0..10 {
        let records = sample_counts(&mixed, 10_000, seed).unwrap();
        let fit = mle_reconstruct(&FrequencyTable::from_records(&records), &MleOptions::default()).unwrap();
        assert!(trace_distance(&fit.state, &mixed).unwrap() < 0.05);
    }
}

#[test]
fn reconstruction_fits_the_data_at_least_as_well_as_the_truth() {
    for seed in 0..10 {
        let mut r = ChaCha8Rng::seed_from_u64(100 + seed);
        let rho = random_density(2, 4, &mut r);
        let records = sample_counts(&rho, 500, seed).unwrap();
        let fit = mle_reconstruct(&FrequencyTable::from_records(&records), &MleOptions::default()).unwrap();
        assert!(chi_squared(&fit.state, &records) <= 2.0 * chi_squared(&rho, &records) + 1.0);
    }
}

#[test]
fn constant_statistic_has_no_spread() {
    let records = sample_counts(&state(2), 100, 2).unwrap();
    let s = bootstrap(&records, 20, 1, |_| Ok(0.7)).unwrap();
    assert_eq!(s.stderr, 0.0);
    assert!((s.mean - 0.7).abs() < 1e-15);
    assert!(bootstrap(&records, 1, 1, |_| Ok(0.0)).is_err());
}

#[test]
fn bootstrap_error_shrinks_with_shots() {
    let mut r = ChaCha8Rng::seed_from_u64(21);
    let truth = random_density(2, 4, &mut r);
    let reference = random_density(2, 4, &mut r);
    let opts = MleOptions { max_iter: 2000, tol: 1e-9 };
    let stderr = |shots| {
        let records = sample_counts(&truth, shots, 5).unwrap();
        let stat = |rs: &[MeasurementRecord]| {
            let fit = mle_reconstruct(&FrequencyTable::from_records(rs), &opts)?;
            Ok(relative_entropy(&fit.state, &reference)?.value())
        };
        bootstrap(&records, 200, 6, stat).unwrap().stderr
    };
    let (s250, s1000, s4000) = (stderr(250), stderr(1000), stderr(4000));
    for ratio in [s250 / s1000, s1000 / s4000] {
        assert!((ratio / 2.0 - 1.0).abs() < 0.3, "ratio {ratio} ({s250}, {s1000}, {s4000})");
    }
}

#[test]
fn bias_shrinks_with_shots() {
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let truth = random_density(2, 4, &mut r);
    let reference = DensityMatrix::maximally_mixed(2).mix(&random_density(2, 4, &mut r), 0.5).unwrap();
    let opts = MleOptions::default();
    let bias = |shots| bias_study(&truth, &reference, shots, 40, 17, &opts).unwrap().bias;
    let (b250, b4000) = (bias(250), bias(4000));
    assert!(b250 > 0.0);
    assert!(b4000 < b250, "{b4000} >= {b250}");
}
