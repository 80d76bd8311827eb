use std::sync::Arc;

use super::gates::{ideal_rotation_layer, rotation_layer, Checkpoint, ErrorModel, Gate, GateSequence, TimedGate};
use crate::error::{invalid, Result};
use crate::linalg::local::{mat2_adjoint, mat2_mul, Mat2, IDENTITY2};
use crate::linalg::{Axis, Operator, PauliSum};
use crate::models::{single_axis_hamiltonian, ChainSpec, Model};

/// Trotter sequence flavour.
///
/// In operator notation (rightmost acts first), with `R_a = exp(-i pi/4 sigma_a^tot)`
/// and `E+- = U_yy U_xx R_x^(+-1) U_yy`:
///
/// * `Naive`: `(U_yy U_zz U_xx)^N`, `U_zz = R_y† U_xx R_y`.
/// * `Plain`: `(R_z†)^N (R_y† R_x) (E+)^N (R_x† R_y)`.
/// * `Alternating`: `R_y† R_x [(E-)^4 (E+)^4]^(N/8) R_x† R_y`.
/// * `Xy`: `[(F-)^2 (F+)^2]^(N/4)` with `F+- = R_x^(+-2) U_yy U_xx`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TrotterVariant {
    Naive,
    Plain,
    Alternating,
    Xy,
}

impl TrotterVariant {
    pub fn label(&self) -> &'static str {
        match self {
            TrotterVariant::Naive => "naive",
            TrotterVariant::Plain => "plain",
            TrotterVariant::Alternating => "alternating",
            TrotterVariant::Xy => "xy",
        }
    }

    /// Interaction substeps per Trotter step.
    pub fn substeps(&self) -> usize {
        match self {
            TrotterVariant::Xy => 2,
            _ => 3,
        }
    }
}

impl std::str::FromStr for TrotterVariant {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" => Ok(TrotterVariant::Naive),
            "plain" => Ok(TrotterVariant::Plain),
            "alternating" => Ok(TrotterVariant::Alternating),
            "xy" => Ok(TrotterVariant::Xy),
            other => Err(invalid("variant", format!("unknown Trotter variant `{other}`"))),
        }
    }
}

/// Step count and timing of a Trotter sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrotterPlan {
    pub n_steps: usize,
    /// Hamiltonian time per Trotter step, seconds.
    pub dt: f64,
    pub variant: TrotterVariant,
    /// Wall-clock duration of one interaction substep. Defaults to the
    /// substep's Hamiltonian time (`dt/3`, or `dt/2` for `Xy`).
    pub substep_duration: Option<f64>,
}

impl TrotterPlan {
    pub fn new(n_steps: usize, dt: f64, variant: TrotterVariant) -> Result<Self> {
        let plan = Self { n_steps, dt, variant, substep_duration: None };
        plan.validate()?;
        Ok(plan)
    }

    /// Plan covering Hamiltonian time `t_final` in `n_steps` steps.
    pub fn covering(t_final: f64, n_steps: usize, variant: TrotterVariant) -> Result<Self> {
        if n_steps == 0 {
            return Err(invalid("n_steps", "must be at least 1"));
        }
        Self::new(n_steps, t_final / n_steps as f64, variant)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(invalid("n_steps", "must be at least 1"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("{} must be positive", self.dt)));
        }
        if let Some(d) = self.substep_duration {
            if !(d.is_finite() && d > 0.0) {
                return Err(invalid("substep_duration", format!("{d} must be positive")));
            }
        }
        let needs_four = matches!(self.variant, TrotterVariant::Alternating | TrotterVariant::Xy);
        if needs_four && !self.n_steps.is_multiple_of(4) {
            return Err(invalid("n_steps", format!("{} variant needs a multiple of 4 steps, got {}", self.variant.label(), self.n_steps)));
        }
        Ok(())
    }

    pub fn substep_time(&self) -> f64 {
        self.dt / self.variant.substeps() as f64
    }

    pub fn substep_wall(&self) -> f64 {
        self.substep_duration.unwrap_or_else(|| self.substep_time())
    }

    pub fn step_wall(&self) -> f64 {
        self.substep_wall() * self.variant.substeps() as f64
    }

    pub fn total_time(&self) -> f64 {
        self.dt * self.n_steps as f64
    }
}

struct Builder<'a> {
    n: usize,
    error: &'a ErrorModel,
    gates: Vec<TimedGate>,
    wall: f64,
    effective: f64,
    frame: Vec<Mat2>,
    checkpoints: Vec<Checkpoint>,
    substep_time: f64,
    substep_wall: f64,
}

impl<'a> Builder<'a> {
    fn new(n: usize, error: &'a ErrorModel, plan: &TrotterPlan) -> Self {
        let mut b = Self {
            n,
            error,
            gates: Vec::new(),
            wall: 0.0,
            effective: 0.0,
            frame: vec![IDENTITY2; n],
            checkpoints: Vec::new(),
            substep_time: plan.substep_time(),
            substep_wall: plan.substep_wall(),
        };
        b.checkpoint();
        b
    }

    /// `R_axis^power` as applied by the hardware (with rotation errors).
    fn rotate(&mut self, axis: Axis, power: i32) {
        let angle = power as f64 * std::f64::consts::FRAC_PI_2;
        self.gates.push(TimedGate { gate: Gate::Local(rotation_layer(axis, angle, self.n, self.error)), wall: 0.0 });
        self.track(axis, angle);
    }

    /// Error-free bookkeeping rotation.
    fn virtual_rotate(&mut self, axis: Axis, power: i32) {
        let angle = power as f64 * std::f64::consts::FRAC_PI_2;
        self.gates.push(TimedGate { gate: Gate::Local(ideal_rotation_layer(axis, angle, self.n)), wall: 0.0 });
        self.track(axis, angle);
    }

    fn track(&mut self, axis: Axis, angle: f64) {
        let ideal = ideal_rotation_layer(axis, angle, self.n);
        for (f, u) in self.frame.iter_mut().zip(&ideal) {
            *f = mat2_mul(u, f);
        }
    }

    fn interact(&mut self, h: &Arc<PauliSum>) {
        let t_mid = self.wall + 0.5 * self.substep_wall;
        // The field acts for the wall-clock duration, the Hamiltonian for the
        // substep's Hamiltonian time; both are folded into one generator.
        let field = self.error.field_at(t_mid) * self.substep_wall / self.substep_time;
        self.gates.push(TimedGate { gate: Gate::Evolve { generator: Arc::clone(h), field, time: self.substep_time }, wall: self.substep_wall });
        self.wall += self.substep_wall;
        self.effective += self.substep_time;
    }

    fn checkpoint(&mut self) {
        let correction = self.frame.iter().map(mat2_adjoint).collect();
        self.checkpoints.push(Checkpoint { after_gates: self.gates.len(), wall_time: self.wall, effective_time: self.effective, correction });
    }

    fn finish(self) -> GateSequence {
        GateSequence { n: self.n, gates: self.gates, checkpoints: self.checkpoints }
    }
}

/// Builds the gate list of one full sequence (first gate acts first).
pub fn trotter_sequence(spec: &ChainSpec, plan: &TrotterPlan, error: &ErrorModel) -> Result<GateSequence> {
    plan.validate()?;
    let n = spec.n();
    error.validate(n)?;
    let needs = match plan.variant {
        TrotterVariant::Xy => Model::XY,
        _ => Model::Heisenberg,
    };
    if spec.model() != needs {
        return Err(invalid("variant", format!("{} sequence does not simulate the {:?} model", plan.variant.label(), spec.model())));
    }
    let hxx = Arc::new(single_axis_hamiltonian(n, spec.law(), Axis::X));
    let hyy = Arc::new(single_axis_hamiltonian(n, spec.law(), Axis::Y));
    let mut b = Builder::new(n, error, plan);
    let steps = plan.n_steps;

    match plan.variant {
        TrotterVariant::Naive => {
            for _ in 0..steps {
                b.interact(&hxx);
                b.rotate(Axis::Y, 1);
                b.interact(&hxx);
                b.rotate(Axis::Y, -1);
                b.interact(&hyy);
                b.checkpoint();
            }
        }
        TrotterVariant::Plain | TrotterVariant::Alternating => {
            b.rotate(Axis::Y, 1);
            b.rotate(Axis::X, -1);
            for k in 0..steps {
                let sign = if plan.variant == TrotterVariant::Alternating && (k / 4) % 2 == 1 { -1 } else { 1 };
                // E = U_yy U_xx R_x^sign U_yy
                b.interact(&hyy);
                b.rotate(Axis::X, sign);
                b.interact(&hxx);
                b.interact(&hyy);
                if k + 1 < steps {
                    b.checkpoint();
                }
            }
            b.rotate(Axis::X, 1);
            b.rotate(Axis::Y, -1);
            if plan.variant == TrotterVariant::Plain {
                for _ in 0..steps % 8 {
                    b.virtual_rotate(Axis::Z, -1);
                }
            }
            b.checkpoint();
        }
        TrotterVariant::Xy => {
            for k in 0..steps {
                let sign = if (k / 2) % 2 == 1 { -1 } else { 1 };
                b.interact(&hxx);
                b.interact(&hyy);
                b.rotate(Axis::X, sign);
                b.rotate(Axis::X, sign);
                b.checkpoint();
            }
        }
    }
    Ok(b.finish())
}

/// Dense gate matrices of the sequence in application order.
pub fn trotter_step_operators(spec: &ChainSpec, plan: &TrotterPlan, error: &ErrorModel) -> Result<Vec<Operator>> {
    trotter_sequence(spec, plan, error)?.operators()
}
