//! Simulated two-qubit tomography: Pauli-basis sampling, maximum-likelihood
//! reconstruction and resampling statistics.

use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::local::eigenbasis;
use crate::linalg::{Axis, DensityMatrix, C64};
use crate::metrics::relative_entropy;

/// The nine local Pauli product bases.
pub const BASES: [[Axis; 2]; 9] = {
    use Axis::*;
    [[X, X], [X, Y], [X, Z], [Y, X], [Y, Y], [Y, Z], [Z, X], [Z, Y], [Z, Z]]
};

/// Counts in one product basis. Outcome `2a + b` means qubit 1 gave `a` and
/// qubit 2 gave `b`, with 0 for the `+1` eigenvalue.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub basis: [Axis; 2],
    pub counts: [u64; 4],
    pub shots: u64,
}

impl MeasurementRecord {
    pub fn new(basis: [Axis; 2], counts: [u64; 4]) -> Self {
        Self { basis, counts, shots: counts.iter().sum() }
    }

    pub fn frequencies(&self) -> [f64; 4] {
        self.counts.map(|c| c as f64 / self.shots.max(1) as f64)
    }
}

/// Rank-one projector onto outcome `outcome` of `basis`.
pub fn outcome_projector(basis: [Axis; 2], outcome: usize) -> Array2<C64> {
    let vec = |axis: Axis, bit: usize| {
        let b = eigenbasis(axis);
        [b[0][bit], b[1][bit]]
    };
    let u = vec(basis[0], outcome >> 1);
    let v = vec(basis[1], outcome & 1);
    let psi = [u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]];
    Array2::from_shape_fn((4, 4), |(i, j)| psi[i] * psi[j].conj())
}

fn born(rho: &Array2<C64>, proj: &Array2<C64>) -> f64 {
    // Tr(P rho) for Hermitian P
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += (proj[[j, i]] * rho[[i, j]]).re;
        }
    }
    acc
}

pub fn born_probabilities(rho: &DensityMatrix, basis: [Axis; 2]) -> Result<[f64; 4]> {
    check_two_qubit(rho)?;
    Ok(std::array::from_fn(|o| born(rho.matrix(), &outcome_projector(basis, o)).max(0.0)))
}

fn check_two_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    Ok(())
}

fn multinomial(probs: &[f64; 4], shots: u64, rng: &mut ChaCha8Rng) -> Result<[u64; 4]> {
    let dist = WeightedIndex::new(probs.iter().map(|p| p.max(0.0))).map_err(|e| invalid("probabilities", e.to_string()))?;
    let mut counts = [0u64; 4];
    for _ in 0..shots {
        counts[dist.sample(rng)] += 1;
    }
    Ok(counts)
}

/// `shots` Born-rule samples in each of the nine bases.
pub fn sample_counts(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<Vec<MeasurementRecord>> {
    check_two_qubit(rho)?;
    if shots == 0 {
        return Err(invalid("shots", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BASES.iter().map(|&b| Ok(MeasurementRecord::new(b, multinomial(&born_probabilities(rho, b)?, shots, &mut rng)?))).collect()
}

/// Per-basis outcome weights, the input of the likelihood.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyTable {
    pub rows: Vec<([Axis; 2], [f64; 4])>,
}

impl FrequencyTable {
    pub fn from_records(records: &[MeasurementRecord]) -> Self {
        Self { rows: records.iter().map(|r| (r.basis, r.counts.map(|c| c as f64))).collect() }
    }

    /// Exact Born probabilities, the infinite-shot limit.
    pub fn ideal(rho: &DensityMatrix) -> Result<Self> {
        Ok(Self { rows: BASES.iter().map(|&b| born_probabilities(rho, b).map(|p| (b, p))).collect::<Result<_>>()? })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleOptions {
    pub max_iter: usize,
    /// Stop when the log-likelihood gains less than this in one iteration.
    pub tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { max_iter: 5000, tol: 1e-10 }
    }
}

#[derive(Clone, Debug)]
pub struct MleResult {
    pub state: DensityMatrix,
    /// Log-likelihood after each accepted iteration, starting from `1/4`.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    /// Set when `max_iter` was reached before the tolerance.
    pub hit_iteration_limit: bool,
}

const PROB_FLOOR: f64 = 1e-300;

/// Maximum-likelihood state by the diluted `R rho R` iteration, which raises
/// the likelihood at every step.
pub fn mle_reconstruct(data: &FrequencyTable, opts: &MleOptions) -> Result<MleResult> {
    if data.rows.is_empty() {
        return Err(invalid("records", "no measurement data"));
    }
    let proj: Vec<(Array2<C64>, f64)> = data
        .rows
        .iter()
        .flat_map(|(b, w)| (0..4).map(move |o| (outcome_projector(*b, o), w[o])))
        .collect();
    let total: f64 = proj.iter().map(|(_, w)| w).sum();
    if !(total > 0.0) {
        return Err(invalid("records", "all counts are zero"));
    }
    let log_l = |rho: &Array2<C64>| -> f64 { proj.iter().filter(|(_, w)| *w > 0.0).map(|(p, w)| w * born(rho, p).max(PROB_FLOOR).ln()).sum() };
    let r_op = |rho: &Array2<C64>| -> Array2<C64> {
        let mut r = Array2::<C64>::zeros((4, 4));
        for (p, w) in &proj {
            if *w > 0.0 {
                // Every basis resolves the identity, so R = 1 at an interior maximum.
                let weight = w / total / born(rho, p).max(PROB_FLOOR);
                r.scaled_add(C64::new(weight, 0.0), p);
            }
        }
        r
    };
    let mut rho = DensityMatrix::maximally_mixed(2).into_matrix();
    let mut current = log_l(&rho);
    let mut history = vec![current];
    let mut eps: f64 = 1e3;
    let identity = Array2::<C64>::eye(4);
    for iter in 0..opts.max_iter {
        let r = r_op(&rho);
        let mut accepted = None;
        for _ in 0..60 {
            let m = (&identity + &(&r * C64::new(eps, 0.0))) / C64::new(1.0 + eps, 0.0);
            let next = m.dot(&rho).dot(&m);
            let tr = (0..4).map(|i| next[[i, i]].re).sum::<f64>();
            let next = next / C64::new(tr, 0.0);
            let l = log_l(&next);
            if l >= current {
                accepted = Some((next, l));
                break;
            }
            eps *= 0.5;
        }
        let Some((next, l)) = accepted else {
            return Ok(MleResult { state: DensityMatrix::from_unnormalized(rho)?, log_likelihood: history, iterations: iter, hit_iteration_limit: false });
        };
        let gain = l - current;
        rho = next;
        current = l;
        history.push(l);
        eps = (eps * 2.0).min(1e3);
        if gain < opts.tol * total.max(1.0) {
            return Ok(MleResult { state: DensityMatrix::from_unnormalized(rho)?, log_likelihood: history, iterations: iter + 1, hit_iteration_limit: false });
        }
    }
    Ok(MleResult { state: DensityMatrix::from_unnormalized(rho)?, log_likelihood: history, iterations: opts.max_iter, hit_iteration_limit: true })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapSummary {
    pub mean: f64,
    pub stderr: f64,
    pub samples: Vec<f64>,
}

/// Multinomial resampling of every basis from its empirical frequencies.
pub fn resample(records: &[MeasurementRecord], rng: &mut ChaCha8Rng) -> Result<Vec<MeasurementRecord>> {
    records.iter().map(|r| Ok(MeasurementRecord::new(r.basis, multinomial(&r.frequencies(), r.shots, rng)?))).collect()
}

pub fn bootstrap(records: &[MeasurementRecord], n_resamples: usize, seed: u64, statistic: impl Fn(&[MeasurementRecord]) -> Result<f64>) -> Result<BootstrapSummary> {
    if n_resamples < 2 {
        return Err(invalid("n_resamples", "need at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n_resamples);
    for _ in 0..n_resamples {
        samples.push(statistic(&resample(records, &mut rng)?)?);
    }
    let (mean, stderr) = mean_and_spread(&samples);
    Ok(BootstrapSummary { mean, stderr, samples })
}

/// Sample mean and sample standard deviation.
fn mean_and_spread(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    // Shifted by the first sample so that constant data give exactly zero spread.
    let shift = xs.first().copied().unwrap_or(0.0);
    let offset = xs.iter().map(|x| x - shift).sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - shift - offset).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (shift + offset, var.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasReport {
    pub shots: u64,
    pub n_seeds: usize,
    /// `D(truth || reference)`.
    pub true_distance: f64,
    /// Mean of `D(estimate || reference)` over seeds.
    pub mean_estimate: f64,
    pub bias: f64,
    /// Standard error of the bias.
    pub stderr: f64,
    /// Runs that stopped at the iteration limit.
    pub unconverged: usize,
}

/// Reconstructs `truth` from `shots` samples per basis for `n_seeds` seeds and
/// reports how far the plug-in distance to `reference` is pushed up.
pub fn bias_study(truth: &DensityMatrix, reference: &DensityMatrix, shots: u64, n_seeds: usize, base_seed: u64, opts: &MleOptions) -> Result<BiasReport> {
    if n_seeds < 2 {
        return Err(invalid("n_seeds", "need at least 2"));
    }
    let true_distance = relative_entropy(truth, reference)?.value();
    let mut estimates = Vec::with_capacity(n_seeds);
    let mut unconverged = 0;
    for k in 0..n_seeds {
        let records = sample_counts(truth, shots, base_seed.wrapping_add(k as u64))?;
        let fit = mle_reconstruct(&FrequencyTable::from_records(&records), opts)?;
        unconverged += fit.hit_iteration_limit as usize;
        estimates.push(relative_entropy(&fit.state, reference)?.value());
    }
    let (mean, spread) = mean_and_spread(&estimates);
    Ok(BiasReport { shots, n_seeds, true_distance, mean_estimate: mean, bias: mean - true_distance, stderr: spread / (n_seeds as f64).sqrt(), unconverged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{axis_eigenstate, StateVector};

    #[test]
    fn projectors_resolve_identity() {
        for b in BASES {
            let sum = (0..4).map(|o| outcome_projector(b, o)).fold(Array2::<C64>::zeros((4, 4)), |a, p| a + p);
            assert!((sum - Array2::<C64>::eye(4)).iter().all(|z| z.norm() < 1e-14));
        }
    }

    #[test]
    fn up_up_lands_in_first_outcome() {
        let up = axis_eigenstate(Axis::Z, true);
        let rho = StateVector::product(&[up, up]).unwrap().to_density();
        let recs = sample_counts(&rho, 100, 1).unwrap();
        let zz = recs.iter().find(|r| r.basis == [Axis::Z, Axis::Z]).unwrap();
        assert_eq!(zz.counts, [100, 0, 0, 0]);
        assert_eq!(sample_counts(&rho, 100, 1).unwrap(), recs);
    }
}
