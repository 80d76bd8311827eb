use natherm::evolution::{evolve, Dynamics};
use natherm::linalg::{embed, pauli, Spectrum};
use natherm::models::{initial_state, tiled_state, DEFAULT_BLOCK};
use natherm::{Axis, QuantumState, StateVector};
use serde_json::json;

use crate::config::Settings;
use crate::error::CliResult;
use crate::output::{num, Outcome, Table};

/// Two-site hopping period `3 pi / (4 J0)`.
pub fn hopping_time(j0: f64) -> f64 {
    3.0 * std::f64::consts::PI / (4.0 * j0)
}

/// Return probability of `|up down>` under the two-qubit Heisenberg model.
pub fn analytic_up_down(j0: f64, t: f64) -> f64 {
    0.5 + 0.5 * (4.0 * j0 * t / 3.0).cos()
}

/// `|up down>` for two sites, otherwise the tiled product state.
pub fn hopping_state(n: usize) -> CliResult<StateVector> {
    Ok(match n {
        2 => StateVector::basis(2, 0b01)?,
        _ if n.is_multiple_of(3) => initial_state(n, DEFAULT_BLOCK)?,
        _ => tiled_state(n, DEFAULT_BLOCK),
    })
}

/// Columns `time_s, mz_site<j>..., p_up_down, p_up_down_analytic`, where
/// `p_up_down` is the population of `|up down>` on sites 1 and 2.
pub fn table(settings: &Settings) -> CliResult<Table> {
    let spec = settings.spec;
    let n = spec.n();
    let spectrum = Spectrum::new(&spec.hamiltonian())?;
    let psi: QuantumState = hopping_state(n)?.into();
    let states = evolve(&psi, Dynamics::Spectral(&spectrum), &[], &settings.times)?;
    let z: Vec<_> = (1..=n).map(|j| embed(&pauli(Axis::Z), j, n)).collect::<natherm::Result<_>>()?;
    let mut columns = vec!["time_s".to_string()];
    columns.extend((1..=n).map(|j| format!("mz_site{j}")));
    columns.extend(["p_up_down".to_string(), "p_up_down_analytic".to_string()]);
    let mut t = Table::new("hopping.csv", columns);
    for (&time, s) in settings.times.iter().zip(&states) {
        let pure = s.as_pure().expect("noiseless evolution stays pure");
        let mut row = vec![time];
        row.extend(z.iter().map(|op| pure.expectation(op)));
        row.push(s.reduced(&[1, 2])?.matrix()[[1, 1]].re);
        row.push(analytic_up_down(spec.law().j0(), time));
        t.push(row);
    }
    Ok(t)
}

pub fn run(settings: &Settings) -> CliResult<Outcome> {
    let j0 = settings.spec.law().j0();
    let n = settings.spec.n();
    Ok(Outcome {
        tables: vec![table(settings)?],
        reports: Vec::new(),
        derived: json!({ "chain": super::chain_derived(&settings.spec) }),
        summary: json!({
            "two_site_hopping_time_s": num(hopping_time(j0)),
            "chain_hopping_time_estimate_s": num((n - 1) as f64 * hopping_time(j0)),
        }),
    })
}
