use natherm::evolution::{trotter_sequence, ErrorModel, OscillatingField, TrotterPlan, TrotterVariant};
use natherm::linalg::local::apply_layer_vec;
use natherm::linalg::Spectrum;
use natherm::models::{tiled_state, DEFAULT_BLOCK};
use natherm::{ChainSpec, CouplingLaw, StateVector};
use serde_json::json;

use crate::config::{Settings, SweepAxis};
use crate::error::CliResult;
use crate::output::{num, Outcome, Table};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Fidelity sweep for one chain, indexed `[variant][sweep point]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub values: Vec<f64>,
    pub variants: Vec<TrotterVariant>,
    pub clean: Vec<f64>,
    pub fidelity: Vec<Vec<f64>>,
}

impl Sweep {
    /// `1 - F / F_clean`.
    pub fn drop(&self, variant: usize, point: usize) -> f64 {
        1.0 - self.fidelity[variant][point] / self.clean[variant]
    }
}

/// Ideal and sequence states for one chain and timing.
struct Bench {
    spec: ChainSpec,
    psi: StateVector,
    exact: StateVector,
}

impl Bench {
    fn new(spec: ChainSpec, t: f64) -> CliResult<Self> {
        let psi = tiled_state(spec.n(), DEFAULT_BLOCK);
        let spectrum = Spectrum::new(&spec.hamiltonian())?;
        let exact = StateVector::normalized(spectrum.evolve(psi.amplitudes(), t)?)?;
        Ok(Self { spec, psi, exact })
    }

    /// `|<exact|psi_seq>|^2` after undoing the sequence's frame rotation.
    fn fidelity(&self, plan: &TrotterPlan, errors: &ErrorModel) -> CliResult<f64> {
        let seq = trotter_sequence(&self.spec, plan, errors)?;
        let out = seq.apply(&self.psi);
        let frame = &seq.checkpoints().last().expect("sequence has a final checkpoint").correction;
        Ok(StateVector::normalized(apply_layer_vec(out.amplitudes(), frame))?.overlap(&self.exact))
    }
}

pub fn with_sweep(base: &ErrorModel, axis: SweepAxis, value: f64, osc_amplitude: f64) -> ErrorModel {
    let mut e = base.clone();
    match axis {
        SweepAxis::Detuning => e.detuning = TWO_PI * value,
        SweepAxis::Rotation => e.rotation_error = value,
        SweepAxis::Oscillation => e.osc_field = Some(OscillatingField { amplitude: osc_amplitude, frequency: value }),
    }
    e
}

pub fn sweep(settings: &Settings, spec: ChainSpec) -> CliResult<Sweep> {
    let bench = Bench::new(spec, settings.plan.total_time())?;
    let mut clean = Vec::new();
    let mut fidelity = Vec::new();
    for &v in &settings.variants {
        let plan = TrotterPlan { variant: v, ..settings.plan };
        clean.push(bench.fidelity(&plan, &ErrorModel::none())?);
        let row = settings
            .sweep_values
            .iter()
            .map(|&x| bench.fidelity(&plan, &with_sweep(&settings.errors, settings.sweep, x, settings.osc_amplitude)))
            .collect::<CliResult<Vec<_>>>()?;
        fidelity.push(row);
    }
    Ok(Sweep { values: settings.sweep_values.clone(), variants: settings.variants.clone(), clean, fidelity })
}

/// Local minima of `f` below `threshold`; plateaus count once, at their first point.
pub fn dips(values: &[f64], f: &[f64], threshold: f64) -> Vec<f64> {
    let m = f.len();
    (0..m)
        .filter(|&i| {
            let left = if i == 0 { f64::INFINITY } else { f[i - 1] };
            let right = f[i + 1..].iter().copied().find(|&r| r != f[i]).unwrap_or(f64::INFINITY);
            f[i] < threshold && f[i] < left && f[i] < right
        })
        .map(|i| values[i])
        .collect()
}

/// Fundamental of the sequence's filter response, `N_T / (8 t_f)`.
pub fn fundamental(settings: &Settings) -> f64 {
    1.0 / (8.0 * settings.plan.step_wall())
}

pub fn run(settings: &Settings) -> CliResult<Outcome> {
    let main = sweep(settings, settings.spec)?;
    let reference = if settings.sweep == SweepAxis::Oscillation {
        Some(sweep(settings, settings.spec.with_law(CouplingLaw::new(0.0, settings.spec.law().alpha())?))?)
    } else {
        None
    };
    let mut columns = vec!["sweep_value".to_string()];
    for v in &main.variants {
        columns.push(format!("fidelity_{}", v.label()));
        columns.push(format!("drop_{}", v.label()));
    }
    if let Some(r) = &reference {
        columns.extend(r.variants.iter().map(|v| format!("fidelity_{}_j0_zero", v.label())));
    }
    let mut t = Table::new("dd_robustness.csv", columns);
    for (i, &x) in main.values.iter().enumerate() {
        let mut row = vec![x];
        for v in 0..main.variants.len() {
            row.push(main.fidelity[v][i]);
            row.push(main.drop(v, i));
        }
        if let Some(r) = &reference {
            row.extend((0..r.variants.len()).map(|v| r.fidelity[v][i]));
        }
        t.push(row);
    }
    let mut summary = serde_json::Map::new();
    for (v, variant) in main.variants.iter().enumerate() {
        let mut entry = json!({ "clean_fidelity": num(main.clean[v]) });
        if settings.sweep == SweepAxis::Oscillation {
            entry["dips_hz"] = json!(dips(&main.values, &main.fidelity[v], 0.5 * main.clean[v]));
        }
        summary.insert(variant.label().to_string(), entry);
    }
    summary.insert("fundamental_hz".into(), num(fundamental(settings)));
    Ok(Outcome {
        tables: vec![t],
        reports: Vec::new(),
        derived: json!({
            "chain": super::chain_derived(&settings.spec),
            "n_steps": settings.plan.n_steps,
            "substep_wall_s": num(settings.plan.substep_wall()),
            "osc_amplitude_rad_per_s": num(settings.osc_amplitude),
        }),
        summary: serde_json::Value::Object(summary),
    })
}
