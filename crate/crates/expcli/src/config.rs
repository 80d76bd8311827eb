//! Run configuration: a flat TOML table, CLI overrides, per-experiment
//! defaults and validation into typed [`Settings`].

use std::path::{Path, PathBuf};

use natherm::evolution::{ErrorModel, OscillatingField, TrotterPlan, TrotterVariant};
use natherm::noise::{NoiseChannel, NoiseSchedule};
use natherm::thermal::Construction;
use natherm::tomography::MleOptions;
use natherm::{ChainSpec, CouplingLaw, Model};
use serde::{Deserialize, Serialize};

use crate::error::{as_config, CliError, CliResult};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentTag {
    Dynamics,
    SizeScan,
    Depol,
    DdRobustness,
    Hopping,
    BoundCheck,
    TomographyBias,
}

impl ExperimentTag {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentTag::Dynamics => "dynamics",
            ExperimentTag::SizeScan => "size-scan",
            ExperimentTag::Depol => "depol",
            ExperimentTag::DdRobustness => "dd-robustness",
            ExperimentTag::Hopping => "hopping",
            ExperimentTag::BoundCheck => "bound-check",
            ExperimentTag::TomographyBias => "tomography-bias",
        }
    }

    /// Chain length of the original experiment; smaller runs are labeled scaled.
    fn reference_n(&self) -> usize {
        match self {
            ExperimentTag::Dynamics | ExperimentTag::SizeScan | ExperimentTag::TomographyBias => 21,
            ExperimentTag::Depol | ExperimentTag::DdRobustness | ExperimentTag::Hopping => 12,
            ExperimentTag::BoundCheck => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Heisenberg,
    Xy,
}

impl ModelName {
    pub fn model(&self) -> Model {
        match self {
            ModelName::Heisenberg => Model::Heisenberg,
            ModelName::Xy => Model::XY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolutionMode {
    /// Spectral evolution under the target Hamiltonian.
    Exact,
    Trotter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Constant detuning, values in Hz.
    Detuning,
    /// Relative over-rotation.
    Rotation,
    /// Oscillating-field frequency in Hz.
    Oscillation,
}

/// Raw configuration as read from the file. Every field is optional; missing
/// values are filled per experiment by [`RunConfig::resolve`].
///
/// Units: seconds, rad/s for couplings, Hz for field rates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentTag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xy_n_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interaction_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_times: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolution: Option<EvolutionMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub substep_duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotation_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub osc_amplitude_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub osc_frequency_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depolarizing_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dephasing_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_interval: Option<f64>,
    /// Left sites `j` of the pairs `(j, j+1)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub construction: Option<String>,
    /// Random vectors per stochastic prediction; 0 reduces exactly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stochastic_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepAxis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variants: Option<Vec<String>>,
    /// Signed distance change (nats) that counts as leaving the unitary curve.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub departure_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_seeds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mle_max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mle_tol: Option<f64>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub experiment: Option<ExperimentTag>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Validated run parameters.
#[derive(Clone, Debug)]
pub struct Settings {
    pub experiment: ExperimentTag,
    /// The configuration with every default filled in.
    pub resolved: RunConfig,
    pub spec: ChainSpec,
    pub n_list: Vec<usize>,
    pub xy_n_list: Vec<usize>,
    pub t_final: f64,
    /// Exact-evolution sample times.
    pub times: Vec<f64>,
    pub evolution: EvolutionMode,
    pub plan: TrotterPlan,
    pub errors: ErrorModel,
    pub noise: Vec<NoiseSchedule>,
    pub depolarizing_p: f64,
    pub dephasing_p: f64,
    pub pairs: Vec<usize>,
    pub construction: Construction,
    pub stochastic_samples: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub sweep: SweepAxis,
    pub sweep_values: Vec<f64>,
    /// Oscillating-field amplitude, rad/s.
    pub osc_amplitude: f64,
    pub variants: Vec<TrotterVariant>,
    pub departure_threshold: f64,
    pub shots: Vec<u64>,
    pub n_seeds: usize,
    pub tau: usize,
    pub mle: MleOptions,
    pub scaled: bool,
}

fn fill<T: Clone>(slot: &mut Option<T>, value: T) -> T {
    slot.get_or_insert(value).clone()
}

fn require(cond: bool, field: &str, reason: impl Into<String>) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::config(field, reason))
    }
}

fn finite(x: f64, field: &str) -> CliResult<f64> {
    require(x.is_finite(), field, "must be finite")?;
    Ok(x)
}

fn probability(x: f64, field: &str) -> CliResult<f64> {
    require((0.0..=1.0).contains(&x), field, format!("probability {x} outside [0, 1]"))?;
    Ok(x)
}

fn parse_variant(s: &str, field: &str) -> CliResult<TrotterVariant> {
    s.parse().map_err(as_config(field))
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::ConfigSyntax { path: path.to_path_buf(), reason: e.to_string() })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text, path)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.experiment.is_some() {
            self.experiment = o.experiment;
        }
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.out.is_some() {
            self.out.clone_from(&o.out);
        }
    }

    /// Fills experiment defaults and checks every field before any computation.
    pub fn resolve(&self) -> CliResult<Settings> {
        let mut r = self.clone();
        let experiment = r.experiment.ok_or_else(|| CliError::config("experiment", "missing"))?;
        use ExperimentTag as E;

        let dd = experiment == E::DdRobustness;
        let n = fill(
            &mut r.n,
            match experiment {
                E::DdRobustness => 8,
                E::Hopping => 2,
                E::BoundCheck => 6,
                _ => 9,
            },
        );
        let model = fill(&mut r.model, ModelName::Heisenberg);
        let native_j0 = finite(fill(&mut r.j0, if dd { 510.0 } else { 356.0 }), "j0")?;
        let alpha = finite(fill(&mut r.alpha, if dd { 1.02 } else { 0.70 }), "alpha")?;
        let fraction = finite(fill(&mut r.interaction_fraction, 1.0), "interaction_fraction")?;
        require(fraction > 0.0 && fraction <= 1.0, "interaction_fraction", "must lie in (0, 1]")?;
        let j0 = natherm::models::effective_j0(native_j0, fraction);
        let law = CouplingLaw::new(j0, alpha).map_err(as_config("j0"))?;
        let spec = ChainSpec::new(n, law, model.model()).map_err(as_config("n"))?;

        let sweep = fill(&mut r.sweep, SweepAxis::Rotation);
        let osc_sweep = dd && sweep == SweepAxis::Oscillation;
        let default_t = match experiment {
            E::Depol => 45e-3,
            E::DdRobustness if !osc_sweep => 10e-3,
            E::Hopping => 2.0 * 3.0 * std::f64::consts::PI / (4.0 * j0.max(f64::MIN_POSITIVE)),
            _ => 15e-3,
        };
        let t_final = finite(fill(&mut r.t_final, default_t), "t_final")?;
        require(t_final > 0.0, "t_final", "must be positive")?;
        let n_times = fill(&mut r.n_times, if experiment == E::Hopping { 200 } else { 30 });
        require(n_times >= 3, "n_times", "need at least three samples for the late-time average")?;
        let times = (0..=n_times).map(|k| t_final * k as f64 / n_times as f64).collect();

        let evolution = fill(&mut r.evolution, if experiment == E::Depol { EvolutionMode::Trotter } else { EvolutionMode::Exact });
        let default_variant = if model == ModelName::Xy { "xy" } else { "alternating" };
        let variant = parse_variant(&fill(&mut r.variant, default_variant.to_string()), "variant")?;
        let default_steps = match experiment {
            E::Depol => 108,
            E::DdRobustness if !osc_sweep => 24,
            _ => 36,
        };
        let n_steps = fill(&mut r.n_steps, default_steps);
        if let Some(d) = r.substep_duration {
            require(d.is_finite() && d > 0.0, "substep_duration", "must be positive")?;
        }
        require(n_steps > 0, "n_steps", "must be at least 1")?;
        let plan = TrotterPlan { n_steps, dt: t_final / n_steps as f64, variant, substep_duration: r.substep_duration };
        if evolution == EvolutionMode::Trotter || dd {
            plan.validate().map_err(as_config("n_steps"))?;
            require(
                (variant == TrotterVariant::Xy) == (model == ModelName::Xy),
                "variant",
                format!("`{}` sequence does not simulate the {model:?} model", variant.label()),
            )?;
        }

        let detuning = finite(fill(&mut r.detuning_hz, 0.0), "detuning_hz")? * TWO_PI;
        let rotation_error = finite(fill(&mut r.rotation_error, 0.0), "rotation_error")?;
        require(rotation_error > -1.0, "rotation_error", "must exceed -1")?;
        let osc_amplitude = finite(fill(&mut r.osc_amplitude_hz, if osc_sweep { 100.0 } else { 0.0 }), "osc_amplitude_hz")? * TWO_PI;
        let osc_frequency = finite(fill(&mut r.osc_frequency_hz, 0.0), "osc_frequency_hz")?;
        let osc_field = (osc_amplitude != 0.0 && !osc_sweep).then_some(OscillatingField { amplitude: osc_amplitude, frequency: osc_frequency });
        let errors = ErrorModel { detuning, osc_field, rotation_error, rabi_profile: None };
        errors.validate(n).map_err(as_config("detuning_hz"))?;

        let depolarizing_p = probability(fill(&mut r.depolarizing_p, if experiment == E::Depol { 0.06 } else { 0.0 }), "depolarizing_p")?;
        let dephasing_p = probability(fill(&mut r.dephasing_p, 0.0), "dephasing_p")?;
        let interval = finite(fill(&mut r.noise_interval, 1.5e-3), "noise_interval")?;
        let mut noise = Vec::new();
        for (p, channel) in [(depolarizing_p, NoiseChannel::Depolarize(depolarizing_p)), (dephasing_p, NoiseChannel::Dephase(dephasing_p))] {
            if p > 0.0 {
                noise.push(NoiseSchedule::new(channel, interval).map_err(as_config("noise_interval"))?);
            }
        }

        let needs_psi0 = matches!(experiment, E::Dynamics | E::Depol | E::BoundCheck | E::TomographyBias);
        if needs_psi0 {
            require(n % 3 == 0, "n", format!("initial state tiles three-site blocks; {n} is not a multiple of 3"))?;
        }
        let pure_exact = evolution == EvolutionMode::Exact && noise.is_empty();
        let n_max = if pure_exact { 14 } else { 12 };
        require(n <= n_max, "n", format!("at most {n_max} qubits for this evolution"))?;
        if !noise.is_empty() {
            require(matches!(experiment, E::Dynamics | E::Depol), "depolarizing_p", "noise applies only to dynamics and depol runs")?;
        }

        let default_pairs: Vec<usize> = if experiment == E::TomographyBias { vec![n / 2] } else { (1..n).collect() };
        let pairs = fill(&mut r.pairs, default_pairs);
        require(!pairs.is_empty(), "pairs", "empty pair set")?;
        for &j in &pairs {
            require(j >= 1 && j < n, "pairs", format!("pair ({j}, {}) outside a chain of {n}", j + 1))?;
        }
        let construction: Construction = fill(&mut r.construction, "reduced_global".into()).parse().map_err(as_config("construction"))?;
        let stochastic = fill(&mut r.stochastic_samples, 0);
        let stochastic_samples = (stochastic > 0).then_some(stochastic);
        if stochastic_samples.is_some() {
            require(construction == Construction::ReducedGlobal, "stochastic_samples", "stochastic traces estimate the reduced global state only")?;
        }

        let seed = fill(&mut r.seed, 0);
        let out = fill(&mut r.out, PathBuf::from("out"));

        let n_list = fill(&mut r.n_list, vec![6, 9, 12]);
        let xy_n_list = fill(&mut r.xy_n_list, vec![6, 9]);
        if experiment == E::SizeScan {
            for (field, list, max) in [("n_list", &n_list, 12), ("xy_n_list", &xy_n_list, 12)] {
                require(!list.is_empty() || field == "xy_n_list", field, "empty size list")?;
                for &m in list.iter() {
                    require(m % 3 == 0 && (3..=max).contains(&m), field, format!("size {m} must be a multiple of 3 in [3, {max}]"))?;
                }
            }
        }

        let default_sweep: Vec<f64> = match sweep {
            SweepAxis::Detuning => vec![0.0, 100.0, 250.0, 500.0],
            SweepAxis::Rotation => vec![-0.1, -0.05, 0.0, 0.05, 0.1],
            SweepAxis::Oscillation => (0..=40).map(|k| 50.0 * k as f64).collect(),
        };
        let sweep_values = fill(&mut r.sweep_values, default_sweep);
        if dd {
            require(!sweep_values.is_empty(), "sweep_values", "empty sweep")?;
            for &v in &sweep_values {
                finite(v, "sweep_values")?;
                if sweep == SweepAxis::Rotation {
                    require(v > -1.0, "sweep_values", "rotation errors must exceed -1")?;
                }
            }
        }
        let default_variants = if model == ModelName::Xy { vec!["xy".to_string()] } else { ["naive", "plain", "alternating"].map(String::from).to_vec() };
        let variants = fill(&mut r.variants, default_variants).iter().map(|s| parse_variant(s, "variants")).collect::<CliResult<Vec<_>>>()?;
        if dd {
            require(!variants.is_empty(), "variants", "no sequence variants")?;
            for v in &variants {
                require((*v == TrotterVariant::Xy) == (model == ModelName::Xy), "variants", format!("`{}` does not simulate the {model:?} model", v.label()))?;
                TrotterPlan { variant: *v, ..plan }.validate().map_err(as_config("n_steps"))?;
            }
        }

        let departure_threshold = finite(fill(&mut r.departure_threshold, 0.01), "departure_threshold")?;
        require(departure_threshold > 0.0, "departure_threshold", "must be positive")?;
        let shots = fill(&mut r.shots, vec![250, 1000, 4000]);
        let n_seeds = fill(&mut r.n_seeds, 50);
        if experiment == E::TomographyBias {
            require(!shots.is_empty() && shots.iter().all(|&s| s > 0), "shots", "need positive shot counts")?;
            require(n_seeds >= 2, "n_seeds", "need at least two seeds for an error bar")?;
        }
        let tau = fill(&mut r.tau, 3);
        if experiment == E::BoundCheck {
            require(n == 6 || n == 9, "n", "bound check runs at 6 or 9 qubits")?;
            require(tau >= 1 && tau <= n, "tau", format!("clump size must lie in [1, {n}]"))?;
            require(model == ModelName::Heisenberg, "model", "bound check needs all three charges conserved")?;
        }
        let mle = MleOptions { max_iter: fill(&mut r.mle_max_iter, 5000), tol: finite(fill(&mut r.mle_tol, 1e-10), "mle_tol")? };
        require(mle.max_iter > 0 && mle.tol > 0.0, "mle_tol", "iteration cap and tolerance must be positive")?;

        let largest = if experiment == E::SizeScan { n_list.iter().chain(&xy_n_list).copied().max().unwrap_or(0) } else { n };
        let scaled = largest < experiment.reference_n();

        Ok(Settings {
            experiment,
            resolved: r,
            spec,
            n_list,
            xy_n_list,
            t_final,
            times,
            evolution,
            plan,
            errors,
            noise,
            depolarizing_p,
            dephasing_p,
            pairs,
            construction,
            stochastic_samples,
            seed,
            out,
            sweep,
            sweep_values,
            osc_amplitude,
            variants,
            departure_threshold,
            shots,
            n_seeds,
            tau,
            mle,
            scaled,
        })
    }
}

impl Settings {
    pub fn n(&self) -> usize {
        self.spec.n()
    }
}
