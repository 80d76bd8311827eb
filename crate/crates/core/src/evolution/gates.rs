use std::collections::HashMap;
use std::sync::Arc;

use ndarray::Array1;

use crate::error::{invalid, Result};
use crate::linalg::local::{apply_layer, conjugate_by_layer, layer_operator, spin_rotation, Mat2};
use crate::linalg::{Axis, DensityMatrix, Operator, PauliSum, StateVector, C64};

/// Time-dependent field `amplitude * cos(2 pi frequency t)` along z.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatingField {
    /// Precession rate at the field maximum, rad/s.
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
}

/// Coherent control errors injected into a gate sequence.
///
/// Both field terms enter as `rate * S_z^tot`, so a rate of `2 pi * 500`
/// rad/s precesses every spin at 500 Hz.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorModel {
    /// Constant precession rate, rad/s.
    pub detuning: f64,
    pub osc_field: Option<OscillatingField>,
    /// Relative over-rotation of every sequence rotation.
    pub rotation_error: f64,
    /// Per-site Rabi-frequency scale factors (all 1 when absent).
    pub rabi_profile: Option<Vec<f64>>,
}

impl ErrorModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !self.detuning.is_finite() {
            return Err(invalid("detuning", "must be finite"));
        }
        if !self.rotation_error.is_finite() {
            return Err(invalid("rotation_error", "must be finite"));
        }
        if let Some(f) = &self.osc_field {
            if !(f.amplitude.is_finite() && f.frequency.is_finite()) {
                return Err(invalid("osc_field", "amplitude and frequency must be finite"));
            }
        }
        if let Some(p) = &self.rabi_profile {
            if p.len() != n {
                return Err(invalid("rabi_profile", format!("has {} entries for {n} sites", p.len())));
            }
            if p.iter().any(|s| !s.is_finite()) {
                return Err(invalid("rabi_profile", "entries must be finite"));
            }
        }
        Ok(())
    }

    /// Field precession rate (rad/s) at wall-clock time `t`.
    pub fn field_at(&self, t: f64) -> f64 {
        let osc = self.osc_field.map_or(0.0, |f| f.amplitude * (2.0 * std::f64::consts::PI * f.frequency * t).cos());
        self.detuning + osc
    }

    fn site_scale(&self, site: usize) -> f64 {
        let s = self.rabi_profile.as_ref().map_or(1.0, |p| p[site]);
        s * (1.0 + self.rotation_error)
    }

    pub fn has_field(&self) -> bool {
        self.detuning != 0.0 || self.osc_field.is_some_and(|f| f.amplitude != 0.0)
    }
}

/// Per-site factors of `exp(-i (angle/2) sigma_axis^tot)` including rotation errors.
pub fn rotation_layer(axis: Axis, angle: f64, n: usize, error: &ErrorModel) -> Vec<Mat2> {
    let dir = unit(axis);
    (0..n).map(|j| spin_rotation(dir, angle * error.site_scale(j))).collect()
}

pub fn ideal_rotation_layer(axis: Axis, angle: f64, n: usize) -> Vec<Mat2> {
    vec![spin_rotation(unit(axis), angle); n]
}

fn unit(axis: Axis) -> [f64; 3] {
    match axis {
        Axis::X => [1.0, 0.0, 0.0],
        Axis::Y => [0.0, 1.0, 0.0],
        Axis::Z => [0.0, 0.0, 1.0],
    }
}

/// Dense global rotation `⊗_j exp(-i angle s_j (1 + eps) sigma_axis / 2)`.
pub fn global_rotation(axis: Axis, angle: f64, n: usize, error: &ErrorModel) -> Result<Operator> {
    error.validate(n)?;
    Ok(layer_operator(&rotation_layer(axis, angle, n, error)))
}

/// One element of a gate sequence.
#[derive(Clone, Debug)]
pub enum Gate {
    /// Product of single-qubit unitaries, site 1 first.
    Local(Vec<Mat2>),
    /// `exp(-i time (generator + field S_z^tot))`.
    Evolve { generator: Arc<PauliSum>, field: f64, time: f64 },
}

impl Gate {
    fn full_generator(generator: &PauliSum, field: f64) -> PauliSum {
        if field == 0.0 {
            return generator.clone();
        }
        let n = generator.n_qubits();
        generator.add_scaled(&PauliSum::total(Axis::Z, n), field / 2.0).expect("same chain")
    }

    pub fn to_operator(&self, n: usize) -> Result<Operator> {
        match self {
            Gate::Local(layer) => Ok(layer_operator(layer)),
            Gate::Evolve { generator, field, time } => {
                if generator.is_empty() && *field == 0.0 {
                    return Ok(Operator::identity(n));
                }
                Gate::full_generator(generator, *field).to_operator().exp_i(*time)
            }
        }
    }

    pub fn apply_vec(&self, psi: &mut Array1<C64>) {
        match self {
            Gate::Local(layer) => apply_layer(psi.as_slice_mut().expect("contiguous"), layer),
            Gate::Evolve { generator, field, time } => {
                if *field == 0.0 {
                    *psi = generator.exp_apply(psi, *time);
                } else {
                    *psi = Gate::full_generator(generator, *field).exp_apply(psi, *time);
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct TimedGate {
    pub gate: Gate,
    /// Wall-clock duration in seconds (zero for rotations).
    pub wall: f64,
}

/// Step boundary inside a sequence where the state, after undoing the
/// accumulated frame rotation, approximates the ideal evolution.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    /// Number of gates applied before this point.
    pub after_gates: usize,
    pub wall_time: f64,
    pub effective_time: f64,
    /// Product unitary that maps the sequence frame back to the lab frame.
    pub correction: Vec<Mat2>,
}

/// Ordered gate list (first element acts first).
#[derive(Clone, Debug)]
pub struct GateSequence {
    pub(crate) n: usize,
    pub(crate) gates: Vec<TimedGate>,
    pub(crate) checkpoints: Vec<Checkpoint>,
}

impl GateSequence {
    pub fn empty(n: usize) -> Self {
        let id = vec![crate::linalg::local::IDENTITY2; n];
        Self { n, gates: Vec::new(), checkpoints: vec![Checkpoint { after_gates: 0, wall_time: 0.0, effective_time: 0.0, correction: id }] }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[TimedGate] {
        &self.gates
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    pub fn total_wall(&self) -> f64 {
        self.gates.iter().map(|g| g.wall).sum()
    }

    pub fn total_effective(&self) -> f64 {
        self.checkpoints.last().map_or(0.0, |c| c.effective_time)
    }

    /// Dense gate matrices in application order.
    pub fn operators(&self) -> Result<Vec<Operator>> {
        self.gates.iter().map(|g| g.gate.to_operator(self.n)).collect()
    }

    /// Product of all gates (last gate leftmost).
    pub fn compose(&self) -> Result<Operator> {
        let mut cache = PropagatorCache::default();
        let mut acc = Operator::identity(self.n);
        for g in &self.gates {
            acc = cache.get(&g.gate, self.n)?.dot(&acc);
        }
        Ok(acc)
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        let mut v = psi.amplitudes().clone();
        for g in &self.gates {
            g.gate.apply_vec(&mut v);
        }
        StateVector::from_unitary_image(v)
    }
}

/// Memoized dense propagators for density-matrix evolution.
#[derive(Default)]
pub(crate) struct PropagatorCache {
    map: HashMap<(usize, u64, u64), Operator>,
}

impl PropagatorCache {
    pub(crate) fn get(&mut self, gate: &Gate, n: usize) -> Result<Operator> {
        match gate {
            Gate::Local(_) => gate.to_operator(n),
            Gate::Evolve { generator, field, time } => {
                let key = (Arc::as_ptr(generator) as usize, field.to_bits(), time.to_bits());
                if let Some(u) = self.map.get(&key) {
                    return Ok(u.clone());
                }
                let u = gate.to_operator(n)?;
                self.map.insert(key, u.clone());
                Ok(u)
            }
        }
    }

    pub(crate) fn apply_density(&mut self, gate: &Gate, rho: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
        match gate {
            Gate::Local(layer) => Ok(DensityMatrix::from_trusted(conjugate_by_layer(rho.matrix(), layer))),
            Gate::Evolve { .. } => Ok(rho.evolve(&self.get(gate, n)?)),
        }
    }
}
