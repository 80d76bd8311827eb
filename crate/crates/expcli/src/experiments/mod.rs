//! One module per subcommand, plus the pieces they share: ensemble
//! predictions for a set of neighbouring pairs and pair distances along a
//! trajectory.

pub mod bound;
pub mod dd;
pub mod depol;
pub mod dynamics;
pub mod hopping;
pub mod size_scan;
pub mod tomography_bias;

use natherm::evolution::{evolve, trotter_sequence, Dynamics};
use natherm::metrics::relative_entropy;
use natherm::models::initial_state;
use natherm::thermal::{Construction, EnsembleKind, ThermalModel, ThermalParams};
use natherm::{ChainSpec, DensityMatrix, QuantumState};
use serde_json::{json, Value};

use crate::config::{EvolutionMode, ExperimentTag, Settings};
use crate::error::CliResult;
use crate::output::{num, Outcome};

/// Ensembles in column order.
pub const ENSEMBLES: [EnsembleKind; 3] = EnsembleKind::ALL;

pub fn run(settings: &Settings) -> CliResult<Outcome> {
    match settings.experiment {
        ExperimentTag::Dynamics => dynamics::run(settings),
        ExperimentTag::SizeScan => size_scan::run(settings),
        ExperimentTag::Depol => depol::run(settings),
        ExperimentTag::DdRobustness => dd::run(settings),
        ExperimentTag::Hopping => hopping::run(settings),
        ExperimentTag::BoundCheck => bound::run(settings),
        ExperimentTag::TomographyBias => tomography_bias::run(settings),
    }
}

/// Thermal predictions for pairs `(j, j+1)`, indexed `[ensemble][pair]`.
#[derive(Clone, Debug)]
pub struct Predictions {
    pub pairs: Vec<usize>,
    pub params: Vec<ThermalParams>,
    pub states: Vec<Vec<DensityMatrix>>,
}

impl Predictions {
    pub fn new(model: &ThermalModel, psi: &QuantumState, pairs: &[usize], construction: Construction, stochastic: Option<(usize, u64)>) -> CliResult<Self> {
        let targets = model.targets(psi);
        let mut params = Vec::new();
        let mut states = Vec::new();
        for kind in ENSEMBLES {
            let p = model.solve(kind, &targets)?;
            let per_pair = pairs
                .iter()
                .map(|&j| match stochastic {
                    Some((samples, seed)) => model.stochastic_prediction(&p, &[j, j + 1], samples, seed.wrapping_add(j as u64)),
                    None => model.prediction(&p, &[j, j + 1], construction),
                })
                .collect::<natherm::Result<Vec<_>>>()?;
            params.push(p);
            states.push(per_pair);
        }
        Ok(Self { pairs: pairs.to_vec(), params, states })
    }

    /// β, μ and solver diagnostics per ensemble.
    pub fn derived(&self) -> Value {
        let mut map = serde_json::Map::new();
        for p in &self.params {
            map.insert(
                p.kind.label().to_string(),
                json!({
                    "beta_s_per_rad": num(p.beta),
                    "mu_rad_per_s": if p.mu_defined { json!(p.mu.map(num)) } else { Value::Null },
                    "natural": p.natural.map(num),
                    "residual": num(p.residual),
                    "iterations": p.iterations,
                }),
            );
        }
        Value::Object(map)
    }
}

/// Pair distances along a trajectory, indexed `[ensemble][time][pair]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceSeries {
    pub times: Vec<f64>,
    pub pairs: Vec<usize>,
    pub values: Vec<Vec<Vec<f64>>>,
}

impl DistanceSeries {
    pub fn mean(&self, ensemble: usize, k: usize) -> f64 {
        let row = &self.values[ensemble][k];
        row.iter().sum::<f64>() / row.len() as f64
    }

    pub fn means(&self, ensemble: usize) -> Vec<f64> {
        (0..self.times.len()).map(|k| self.mean(ensemble, k)).collect()
    }

    /// Mean over the final three sample times.
    pub fn late(&self, ensemble: usize) -> f64 {
        let m = self.means(ensemble);
        let tail = &m[m.len().saturating_sub(3)..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

/// Two-site reduced states `[time][pair]`.
pub fn pair_states(states: &[QuantumState], pairs: &[usize]) -> CliResult<Vec<Vec<DensityMatrix>>> {
    Ok(states.iter().map(|s| pairs.iter().map(|&j| s.reduced(&[j, j + 1])).collect::<natherm::Result<Vec<_>>>()).collect::<natherm::Result<Vec<_>>>()?)
}

/// `D(rho_pair || prediction)` after mixing each pair state with `1/4` so that
/// weight `weights[k]` of it survives at sample `k`.
pub fn distances(times: &[f64], reduced: &[Vec<DensityMatrix>], preds: &Predictions, weights: &[f64]) -> CliResult<DistanceSeries> {
    let mixed = DensityMatrix::maximally_mixed(2);
    let mut values = vec![Vec::with_capacity(times.len()); ENSEMBLES.len()];
    for (row, &w) in reduced.iter().zip(weights) {
        let states = row.iter().map(|r| if w == 1.0 { Ok(r.clone()) } else { r.mix(&mixed, 1.0 - w) }).collect::<natherm::Result<Vec<_>>>()?;
        for (e, per_pair) in preds.states.iter().enumerate() {
            let d = states.iter().zip(per_pair).map(|(s, p)| Ok(relative_entropy(s, p)?.value())).collect::<natherm::Result<Vec<_>>>()?;
            values[e].push(d);
        }
    }
    Ok(DistanceSeries { times: times.to_vec(), pairs: preds.pairs.clone(), values })
}

/// Sampled trajectory of `psi`: spectral evolution at `settings.times`, or
/// the Trotter sequence sampled at every step boundary.
pub fn trajectory(settings: &Settings, spec: &ChainSpec, model: &ThermalModel, psi: &QuantumState, with_noise: bool) -> CliResult<(Vec<f64>, Vec<QuantumState>)> {
    let noise = if with_noise { settings.noise.as_slice() } else { &[] };
    match settings.evolution {
        EvolutionMode::Exact => {
            let states = evolve(psi, Dynamics::Spectral(model.spectrum()), noise, &settings.times)?;
            Ok((settings.times.clone(), states))
        }
        EvolutionMode::Trotter => {
            let seq = trotter_sequence(spec, &settings.plan, &settings.errors)?;
            let times: Vec<f64> = seq.checkpoints().iter().map(|c| c.wall_time).collect();
            let states = evolve(psi, Dynamics::Gates(&seq), noise, &times)?;
            Ok((times, states))
        }
    }
}

pub fn psi0(n: usize) -> CliResult<QuantumState> {
    Ok(initial_state(n, natherm::models::DEFAULT_BLOCK)?.into())
}

pub fn stochastic(settings: &Settings) -> Option<(usize, u64)> {
    settings.stochastic_samples.map(|s| (s, settings.seed))
}

pub fn chain_derived(spec: &ChainSpec) -> Value {
    json!({ "n": spec.n(), "j0_effective_rad_per_s": spec.law().j0(), "alpha": spec.law().alpha() })
}
