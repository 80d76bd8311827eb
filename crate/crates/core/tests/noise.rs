use natherm::evolution::{evolve, trotter_sequence, Dynamics, ErrorModel, TrotterPlan, TrotterVariant};
use natherm::linalg::random::random_density;
use natherm::linalg::{embed, pauli, StateVector};
use natherm::metrics::relative_entropy;
use natherm::models::{tiled_state, DEFAULT_BLOCK};
use natherm::noise::{dephase, depolarize, surviving_weight, NoiseChannel, NoiseSchedule};
use natherm::{Axis, ChainSpec, CouplingLaw, DensityMatrix, Model, QuantumState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(seed: u64, n: usize) -> DensityMatrix {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let rank = r.random_range(1..=1usize << n);
    random_density(n, rank, &mut r)
}

fn max_diff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    (a.matrix() - b.matrix()).iter().fold(0.0, |m, z| m.max(z.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn channels_preserve_trace_and_positivity(seed in any::<u64>(), n in 1usize..=3, p in 0.0f64..=1.0) {
        let rho = random_state(seed, n);
        for out in [depolarize(&rho, p).unwrap(), dephase(&rho, p).unwrap()] {
            prop_assert!(out.validate().is_ok());
            prop_assert!((out.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn depolarizing_contracts_towards_the_fixed_point(seed in any::<u64>(), n in 1usize..=3, p in 0.01f64..=1.0) {
        let rho = random_state(seed, n);
        let mixed = DensityMatrix::maximally_mixed(n);
        let before = relative_entropy(&rho, &mixed).unwrap().value();
        let after = relative_entropy(&depolarize(&rho, p).unwrap(), &mixed).unwrap().value();
        prop_assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn depolarizing_composes(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let rho = random_state(seed, 2);
        let twice = depolarize(&depolarize(&rho, p).unwrap(), p).unwrap();
        let once = depolarize(&rho, 1.0 - (1.0 - p).powi(2)).unwrap();
        prop_assert!(max_diff(&twice, &once) < 1e-12);
    }

    #[test]
    fn dephasing_keeps_populations(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let n = 3;
        let rho = random_state(seed, n);
        let out = dephase(&rho, p).unwrap();
        for site in 1..=n {
            let z = embed(&pauli(Axis::Z), site, n).unwrap();
            prop_assert!((out.expectation(&z) - rho.expectation(&z)).abs() < 1e-12);
        }
    }
}

#[test]
fn channel_limits() {
    let rho = random_state(1, 2);
    assert_eq!(depolarize(&rho, 0.0).unwrap(), rho);
    assert!(max_diff(&depolarize(&rho, 1.0).unwrap(), &DensityMatrix::maximally_mixed(2)) < 1e-15);
    assert!(max_diff(&dephase(&rho, 0.0).unwrap(), &rho) < 1e-15);
    let half = dephase(&rho, 0.5).unwrap();
    for site in 1..=2 {
        for axis in [Axis::X, Axis::Y] {
            let local = embed(&pauli(axis), site, 2).unwrap();
            assert!(half.expectation(&local).abs() < 1e-12);
        }
    }
    assert!(depolarize(&rho, 1.5).is_err());
    assert!(dephase(&rho, -0.1).is_err());
    assert!(NoiseSchedule::new(NoiseChannel::Depolarize(0.1), 0.0).is_err());
}

#[test]
fn schedule_counts_applications() {
    let s = NoiseSchedule::new(NoiseChannel::Depolarize(0.06), 1.5e-3).unwrap();
    assert_eq!(s.applications_by(0.0), 0);
    assert_eq!(s.applications_by(1.5e-3), 1);
    assert_eq!(s.applications_by(45e-3), 30);
    assert_eq!(s.times_until(4.5e-3).len(), 3);
}

// Global depolarization commutes with every unitary, so a noisy trajectory is
// the noiseless one mixed with the identity.
#[test]
fn depolarized_trotter_run_is_a_mixture_of_the_unitary_run() {
    let n = 4;
    let spec = ChainSpec::new(n, CouplingLaw::new(356.0, 0.7).unwrap(), Model::Heisenberg).unwrap();
    let dt = 15e-3 / 36.0;
    let mut plan = TrotterPlan::new(24, dt, TrotterVariant::Alternating).unwrap();
    plan.substep_duration = Some(dt / 3.0);
    let seq = trotter_sequence(&spec, &plan, &ErrorModel::none()).unwrap();
    let psi: QuantumState = tiled_state(n, DEFAULT_BLOCK).into();
    let times: Vec<f64> = seq.checkpoints().iter().map(|c| c.wall_time).collect();
    let schedule = NoiseSchedule::new(NoiseChannel::Depolarize(0.06), 1.5e-3).unwrap();
    let noisy = evolve(&psi, Dynamics::Gates(&seq), &[schedule], &times).unwrap();
    let clean = evolve(&psi, Dynamics::Gates(&seq), &[], &times).unwrap();
    let mixed = DensityMatrix::maximally_mixed(n);
    for ((a, b), &t) in noisy.iter().zip(&clean).zip(&times) {
        let w = surviving_weight(0.06, schedule.applications_by(t));
        let expected = b.to_density().mix(&mixed, 1.0 - w).unwrap();
        assert!(max_diff(&a.to_density(), &expected) < 1e-12, "t = {t}");
    }
}

#[test]
fn zero_probability_noise_reproduces_unitary_run() {
    let n = 3;
    let spec = ChainSpec::new(n, CouplingLaw::new(1.0, 0.7).unwrap(), Model::Heisenberg).unwrap();
    let plan = TrotterPlan::covering(1.0, 8, TrotterVariant::Alternating).unwrap();
    let seq = trotter_sequence(&spec, &plan, &ErrorModel::none()).unwrap();
    let psi: QuantumState = StateVector::basis(n, 0b011).unwrap().into();
    let schedule = NoiseSchedule::new(NoiseChannel::Depolarize(0.0), 0.1).unwrap();
    let times = [0.0, 0.5, 1.0];
    let noisy = evolve(&psi, Dynamics::Gates(&seq), &[schedule], &times).unwrap();
    let clean = evolve(&psi, Dynamics::Gates(&seq), &[], &times).unwrap();
    for (a, b) in noisy.iter().zip(&clean) {
        assert!(max_diff(&a.to_density(), &b.to_density()) < 1e-12);
    }
}
