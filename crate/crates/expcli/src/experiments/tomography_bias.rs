use natherm::evolution::{evolve, Dynamics};
use natherm::thermal::{EnsembleKind, ThermalModel};
use natherm::tomography::{bias_study, BiasReport};
use natherm::DensityMatrix;
use serde_json::{json, Value};

use super::{psi0, stochastic, Predictions};
use crate::config::Settings;
use crate::error::CliResult;
use crate::output::{num, Outcome, Table};

/// Late-time pair state and its NATS prediction for the first configured pair.
pub fn truth_and_reference(settings: &Settings) -> CliResult<(DensityMatrix, DensityMatrix, Value)> {
    let model = ThermalModel::new(&settings.spec)?;
    let psi = psi0(settings.n())?;
    let j = settings.pairs[0];
    let preds = Predictions::new(&model, &psi, &[j], settings.construction, stochastic(settings))?;
    let states = evolve(&psi, Dynamics::Spectral(model.spectrum()), &[], &[settings.t_final])?;
    let nats = super::ENSEMBLES.iter().position(|k| *k == EnsembleKind::Nats).expect("NATS is an ensemble");
    Ok((states[0].reduced(&[j, j + 1])?, preds.states[nats][0].clone(), preds.derived()))
}

pub fn studies(settings: &Settings, truth: &DensityMatrix, reference: &DensityMatrix) -> CliResult<Vec<BiasReport>> {
    Ok(settings.shots.iter().map(|&s| bias_study(truth, reference, s, settings.n_seeds, settings.seed, &settings.mle)).collect::<natherm::Result<_>>()?)
}

pub fn run(settings: &Settings) -> CliResult<Outcome> {
    let (truth, reference, derived) = truth_and_reference(settings)?;
    let all = studies(settings, &truth, &reference)?;
    let columns = ["shots", "true_distance", "mean_estimate", "bias", "stderr", "unconverged"].map(String::from).to_vec();
    let mut t = Table::new("tomography_bias.csv", columns);
    for r in &all {
        t.push(vec![r.shots as f64, r.true_distance, r.mean_estimate, r.bias, r.stderr, r.unconverged as f64]);
    }
    let doc: Vec<Value> = all
        .iter()
        .map(|r| json!({ "shots": r.shots, "n_seeds": r.n_seeds, "bias_mean": num(r.bias), "stderr": num(r.stderr), "true_distance": num(r.true_distance), "unconverged": r.unconverged }))
        .collect();
    Ok(Outcome {
        tables: vec![t],
        reports: vec![("tomography_bias.json".to_string(), Value::Array(doc))],
        derived: json!({ "chain": super::chain_derived(&settings.spec), "pair": [settings.pairs[0], settings.pairs[0] + 1], "ensembles": derived }),
        summary: json!({ "bias_by_shots": all.iter().map(|r| json!([r.shots, num(r.bias)])).collect::<Vec<_>>() }),
    })
}
