use natherm::metrics::{theorem_bound_check, BoundReport, ChargeChoice};
use natherm::models::{initial_state, DEFAULT_BLOCK};
use serde_json::{json, Value};

use crate::config::Settings;
use crate::error::CliResult;
use crate::output::{num, Outcome};

pub fn reports(settings: &Settings) -> CliResult<Vec<BoundReport>> {
    let psi = initial_state(settings.n(), DEFAULT_BLOCK)?;
    Ok([ChargeChoice::SigmaX, ChargeChoice::Optimal].into_iter().map(|c| theorem_bound_check(&settings.spec, &psi, settings.tau, c)).collect::<natherm::Result<_>>()?)
}

pub fn to_json(r: &BoundReport) -> Value {
    json!({
        "charge": r.choice.label(),
        "n": r.n,
        "tau": r.tau,
        "q": num(r.q),
        "q_nats_average": num(r.q_nats),
        "q_canonical_average": num(r.q_canonical),
        "q_grand_canonical_average": num(r.q_grand_canonical),
        "charge_operator_norm": num(r.charge_norm),
        "relative_entropy": num(r.relative_entropy),
        "trace_distance": num(r.trace_distance),
        "bound_unhalved": num(r.bound),
        "bound_halved": num(r.half_bound),
        "holds_unhalved": r.holds_bound,
        "holds_halved": r.holds_half_bound,
        "gc_parity_commutator_norm": num(r.gc_commutator_norm),
        "canonical_parity_commutator_norm": num(r.canonical_commutator_norm),
        "solver_residual": num(r.solver_residual),
        "pinsker_standard_holds": r.pinsker_standard,
        "pinsker_as_stated_holds": r.pinsker_as_stated,
    })
}

pub fn run(settings: &Settings) -> CliResult<Outcome> {
    let all = reports(settings)?;
    let docs: Vec<Value> = all.iter().map(to_json).collect();
    let summary = all.iter().map(|r| (r.choice.label().to_string(), json!({ "holds_halved": r.holds_half_bound, "holds_unhalved": r.holds_bound }))).collect();
    Ok(Outcome {
        tables: Vec::new(),
        reports: vec![("report.json".to_string(), Value::Array(docs))],
        derived: json!({ "chain": super::chain_derived(&settings.spec), "solver_residual": num(all.iter().map(|r| r.solver_residual).fold(0.0, f64::max)) }),
        summary: Value::Object(summary),
    })
}
