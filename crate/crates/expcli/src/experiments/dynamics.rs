use natherm::thermal::ThermalModel;
use serde_json::json;

use super::{chain_derived, distances, pair_states, psi0, stochastic, trajectory, DistanceSeries, Predictions, ENSEMBLES};
use crate::config::Settings;
use crate::error::CliResult;
use crate::output::{num, Outcome, Table};

#[derive(Clone, Debug)]
pub struct DynamicsRun {
    pub predictions: Predictions,
    pub series: DistanceSeries,
}

pub fn compute(settings: &Settings) -> CliResult<DynamicsRun> {
    let spec = settings.spec;
    let model = ThermalModel::new(&spec)?;
    let psi = psi0(spec.n())?;
    let predictions = Predictions::new(&model, &psi, &settings.pairs, settings.construction, stochastic(settings))?;
    let (times, states) = trajectory(settings, &spec, &model, &psi, true)?;
    let reduced = pair_states(&states, &settings.pairs)?;
    let series = distances(&times, &reduced, &predictions, &vec![1.0; times.len()])?;
    Ok(DynamicsRun { predictions, series })
}

/// Columns `time_s, mean_d_<e>...` followed by `d_<e>_pair<j>` blocks.
pub fn table(file: &str, series: &DistanceSeries) -> Table {
    let mut columns = vec!["time_s".to_string()];
    columns.extend(ENSEMBLES.iter().map(|e| format!("mean_d_{}", e.label())));
    for e in ENSEMBLES {
        columns.extend(series.pairs.iter().map(|j| format!("d_{}_pair{j}", e.label())));
    }
    let mut t = Table::new(file, columns);
    for (k, &time) in series.times.iter().enumerate() {
        let mut row = vec![time];
        row.extend((0..ENSEMBLES.len()).map(|e| series.mean(e, k)));
        for e in 0..ENSEMBLES.len() {
            row.extend_from_slice(&series.values[e][k]);
        }
        t.push(row);
    }
    t
}

pub fn run(settings: &Settings) -> CliResult<Outcome> {
    let r = compute(settings)?;
    let late: serde_json::Map<_, _> = ENSEMBLES.iter().enumerate().map(|(e, k)| (k.label().to_string(), num(r.series.late(e)))).collect();
    let initial: serde_json::Map<_, _> = ENSEMBLES.iter().enumerate().map(|(e, k)| (k.label().to_string(), num(r.series.mean(e, 0)))).collect();
    Ok(Outcome {
        tables: vec![table("dynamics.csv", &r.series)],
        reports: Vec::new(),
        derived: json!({ "chain": chain_derived(&settings.spec), "ensembles": r.predictions.derived() }),
        summary: json!({ "late_time_mean_d": late, "initial_mean_d": initial }),
    })
}
