use natherm::noise::{surviving_weight, NoiseChannel};
use natherm::thermal::ThermalModel;
use serde_json::{json, Value};

use super::{chain_derived, distances, pair_states, psi0, stochastic, trajectory, DistanceSeries, Predictions, ENSEMBLES};
use crate::config::Settings;
use crate::error::CliResult;
use crate::output::{num, Outcome, Table};

#[derive(Clone, Debug)]
pub struct DepolRun {
    pub predictions: Predictions,
    pub unitary: DistanceSeries,
    pub noisy: DistanceSeries,
    /// Surviving weight of the unitary state under depolarization alone.
    pub weights: Vec<f64>,
}

/// Depolarization is global and commutes with every gate, so the noisy state
/// is `w rho + (1 - w) 1/2^n` and its pair states mix with `1/4`. Dephasing
/// does not commute and forces a density-matrix run.
pub fn compute(settings: &Settings) -> CliResult<DepolRun> {
    let spec = settings.spec;
    let model = ThermalModel::new(&spec)?;
    let psi = psi0(spec.n())?;
    let predictions = Predictions::new(&model, &psi, &settings.pairs, settings.construction, stochastic(settings))?;
    let (times, states) = trajectory(settings, &spec, &model, &psi, false)?;
    let reduced = pair_states(&states, &settings.pairs)?;
    let ones = vec![1.0; times.len()];
    let unitary = distances(&times, &reduced, &predictions, &ones)?;
    let depol = settings.noise.iter().find(|s| matches!(s.channel(), NoiseChannel::Depolarize(_)));
    let weights: Vec<f64> = times.iter().map(|&t| depol.map_or(1.0, |s| surviving_weight(settings.depolarizing_p, s.applications_by(t)))).collect();
    let noisy = if settings.dephasing_p > 0.0 {
        let (_, noisy_states) = trajectory(settings, &spec, &model, &psi, true)?;
        distances(&times, &pair_states(&noisy_states, &settings.pairs)?, &predictions, &ones)?
    } else {
        distances(&times, &reduced, &predictions, &weights)?
    };
    Ok(DepolRun { predictions, unitary, noisy, weights })
}

/// First sample at which `noisy` leaves `unitary` by more than `threshold` in
/// the direction of the late-time difference (mean of the final three).
pub fn departure_time(times: &[f64], unitary: &[f64], noisy: &[f64], threshold: f64) -> Option<f64> {
    let diff: Vec<f64> = noisy.iter().zip(unitary).map(|(a, b)| a - b).collect();
    let tail = &diff[diff.len().saturating_sub(3)..];
    let direction = tail.iter().sum::<f64>().signum();
    times.iter().zip(&diff).find(|(_, d)| direction * **d > threshold).map(|(t, _)| *t)
}

impl DepolRun {
    pub fn departure(&self, ensemble: usize, threshold: f64) -> Option<f64> {
        departure_time(&self.unitary.times, &self.unitary.means(ensemble), &self.noisy.means(ensemble), threshold)
    }
}

pub fn run(settings: &Settings) -> CliResult<Outcome> {
    let r = compute(settings)?;
    let mut columns = vec!["time_s".to_string(), "weight".to_string()];
    for e in ENSEMBLES {
        columns.push(format!("mean_d_{}_unitary", e.label()));
        columns.push(format!("mean_d_{}_noisy", e.label()));
    }
    let mut t = Table::new("depol.csv", columns);
    for (k, &time) in r.unitary.times.iter().enumerate() {
        let mut row = vec![time, r.weights[k]];
        for e in 0..ENSEMBLES.len() {
            row.push(r.unitary.mean(e, k));
            row.push(r.noisy.mean(e, k));
        }
        t.push(row);
    }
    let mut summary = serde_json::Map::new();
    for (e, kind) in ENSEMBLES.iter().enumerate() {
        summary.insert(
            kind.label().to_string(),
            json!({
                "late_unitary": num(r.unitary.late(e)),
                "late_noisy": num(r.noisy.late(e)),
                "departure_time_s": r.departure(e, settings.departure_threshold).map_or(Value::Null, num),
            }),
        );
    }
    summary.insert("departure_threshold_nats".into(), num(settings.departure_threshold));
    Ok(Outcome {
        tables: vec![t],
        reports: Vec::new(),
        derived: json!({ "chain": chain_derived(&settings.spec), "ensembles": r.predictions.derived() }),
        summary: Value::Object(summary),
    })
}
