//! Exact propagation, error-robust Trotter sequences and trajectory sampling.

mod gates;
mod trotter;

pub use gates::{global_rotation, ideal_rotation_layer, rotation_layer, Checkpoint, ErrorModel, Gate, GateSequence, OscillatingField, TimedGate};
pub use trotter::{trotter_sequence, trotter_step_operators, TrotterPlan, TrotterVariant};

use gates::PropagatorCache;

use crate::error::{invalid, Error, Result};
use crate::linalg::local::{apply_layer_vec, conjugate_by_layer};
use crate::linalg::{DensityMatrix, Operator, QuantumState, Spectrum, StateVector};
use crate::noise::NoiseSchedule;

/// Times closer than this (seconds) are treated as simultaneous.
const TIME_TOL: f64 = 1e-12;

/// `exp(-i H t)` by eigendecomposition.
pub fn exact_propagator(h: &Operator, t: f64) -> Result<Operator> {
    h.exp_i(t)
}

/// Source of the unitary part of a trajectory.
#[derive(Clone, Copy, Debug)]
pub enum Dynamics<'a> {
    /// Gate sequence; samples are taken at step boundaries, mapped back to
    /// the lab frame.
    Gates(&'a GateSequence),
    /// Exact evolution under a diagonalized Hamiltonian.
    Spectral(&'a Spectrum),
}

/// Evolves `initial` and returns the state at each of `sample_times`
/// (wall-clock seconds, any order).
///
/// Noise channels fire at multiples of their interval. With a gate sequence
/// they are applied at the first gate boundary at or after their scheduled
/// time; a sample taken at the same time sees the noise. Any noise promotes a
/// pure state to a density matrix.
pub fn evolve(initial: &QuantumState, dynamics: Dynamics<'_>, noise: &[NoiseSchedule], sample_times: &[f64]) -> Result<Vec<QuantumState>> {
    let n = initial.n_qubits();
    for &t in sample_times {
        if !(t.is_finite() && t >= -TIME_TOL) {
            return Err(invalid("sample_times", format!("{t} is not a valid time")));
        }
    }
    match dynamics {
        Dynamics::Gates(seq) => {
            if seq.n_qubits() != n {
                return Err(Error::DimensionMismatch { expected: seq.n_qubits(), found: n });
            }
            evolve_gates(initial, seq, noise, sample_times)
        }
        Dynamics::Spectral(spec) => {
            if spec.n_qubits() != n {
                return Err(Error::DimensionMismatch { expected: spec.n_qubits(), found: n });
            }
            evolve_spectral(initial, spec, noise, sample_times)
        }
    }
}

fn noise_events(noise: &[NoiseSchedule], t_end: f64) -> Vec<(f64, usize)> {
    let mut events: Vec<(f64, usize)> = noise.iter().enumerate().flat_map(|(i, s)| s.times_until(t_end + TIME_TOL).into_iter().map(move |t| (t, i))).collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    events
}

enum Working {
    Pure(ndarray::Array1<crate::linalg::C64>),
    Mixed(DensityMatrix),
}

fn evolve_gates(initial: &QuantumState, seq: &GateSequence, noise: &[NoiseSchedule], sample_times: &[f64]) -> Result<Vec<QuantumState>> {
    let n = seq.n_qubits();
    let t_end = seq.total_wall();
    let checkpoints = seq.checkpoints();
    // Each sample maps to the last checkpoint not later than it.
    let mut targets = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        if t > t_end + TIME_TOL {
            return Err(invalid("sample_times", format!("{t} s exceeds the sequence length {t_end} s")));
        }
        let idx = checkpoints.iter().rposition(|c| c.wall_time <= t + TIME_TOL).expect("checkpoint at time zero");
        targets.push(idx);
    }
    let events = noise_events(noise, t_end);
    let mut next_event = 0;
    let mut cache = PropagatorCache::default();
    let mut state = match (initial, noise.is_empty()) {
        (QuantumState::Pure(s), true) => Working::Pure(s.amplitudes().clone()),
        (other, _) => Working::Mixed(other.to_density()),
    };
    let mut out: Vec<Option<QuantumState>> = vec![None; sample_times.len()];
    let mut wall = 0.0;
    let mut gate_index = 0;
    for (ci, cp) in checkpoints.iter().enumerate() {
        while gate_index < cp.after_gates {
            let g = &seq.gates()[gate_index];
            state = match state {
                Working::Pure(mut v) => {
                    g.gate.apply_vec(&mut v);
                    Working::Pure(v)
                }
                Working::Mixed(rho) => Working::Mixed(cache.apply_density(&g.gate, &rho, n)?),
            };
            wall += g.wall;
            gate_index += 1;
            while next_event < events.len() && events[next_event].0 <= wall + TIME_TOL {
                let channel = noise[events[next_event].1].channel();
                state = match state {
                    Working::Mixed(rho) => Working::Mixed(channel.apply(&rho)?),
                    Working::Pure(_) => unreachable!("noisy runs use density matrices"),
                };
                next_event += 1;
            }
        }
        for (slot, _) in targets.iter().enumerate().filter(|(_, &t)| t == ci) {
            out[slot] = Some(match &state {
                Working::Pure(v) => QuantumState::Pure(StateVector::from_unitary_image(apply_layer_vec(v, &cp.correction))),
                Working::Mixed(rho) => QuantumState::Mixed(DensityMatrix::from_trusted(conjugate_by_layer(rho.matrix(), &cp.correction))),
            });
        }
    }
    Ok(out.into_iter().map(|s| s.expect("every sample assigned")).collect())
}

fn evolve_spectral(initial: &QuantumState, spec: &Spectrum, noise: &[NoiseSchedule], sample_times: &[f64]) -> Result<Vec<QuantumState>> {
    let t_max = sample_times.iter().cloned().fold(0.0, f64::max);
    let events = noise_events(noise, t_max);
    // Merge samples and noise events into one timeline; noise first on ties.
    let mut timeline: Vec<(f64, u8, usize)> = events.iter().map(|&(t, i)| (t, 0u8, i)).collect();
    timeline.extend(sample_times.iter().enumerate().map(|(i, &t)| (t.max(0.0), 1u8, i)));
    // Quantized keys so that roundoff cannot reorder simultaneous events.
    timeline.sort_by_key(|&(t, kind, i)| ((t / TIME_TOL).round() as i64, kind, i));

    let mut out: Vec<Option<QuantumState>> = vec![None; sample_times.len()];
    let mut now = 0.0;
    if noise.is_empty() {
        let psi0 = match initial {
            QuantumState::Pure(s) => Some(s.amplitudes().clone()),
            QuantumState::Mixed(_) => None,
        };
        if let Some(psi0) = psi0 {
            for &(t, _, i) in &timeline {
                let v = spec.evolve(&psi0, t)?;
                out[i] = Some(QuantumState::Pure(StateVector::from_unitary_image(v)));
            }
            return Ok(out.into_iter().map(|s| s.expect("assigned")).collect());
        }
    }
    let mut rho = initial.to_density();
    let mut step_cache: Option<(f64, Operator)> = None;
    for &(t, kind, i) in &timeline {
        let dt = t - now;
        if dt > TIME_TOL {
            let u = match &step_cache {
                Some((cached_dt, u)) if (cached_dt - dt).abs() <= TIME_TOL => u.clone(),
                _ => {
                    let u = spectral_propagator(spec, dt)?;
                    step_cache = Some((dt, u.clone()));
                    u
                }
            };
            rho = rho.evolve(&u);
            now = t;
        }
        if kind == 0 {
            rho = noise[i].channel().apply(&rho)?;
        } else {
            out[i] = Some(QuantumState::Mixed(rho.clone()));
        }
    }
    Ok(out.into_iter().map(|s| s.expect("assigned")).collect())
}

/// Dense `exp(-i H t)` assembled from the spectral blocks.
pub fn spectral_propagator(spec: &Spectrum, t: f64) -> Result<Operator> {
    let dim = spec.dim();
    let mut m = ndarray::Array2::zeros((dim, dim));
    for sector in spec.sectors() {
        let (v, e) = (&sector.eigen.vectors, &sector.eigen.values);
        let phased = ndarray::Array2::from_shape_fn(v.dim(), |(i, k)| v[[i, k]] * crate::linalg::C64::from_polar(1.0, -e[k] * t));
        let block = phased.dot(&v.t().mapv(|z| z.conj()));
        for (i, &bi) in sector.basis.iter().enumerate() {
            for (j, &bj) in sector.basis.iter().enumerate() {
                m[[bi, bj]] = block[[i, j]];
            }
        }
    }
    Operator::new(m)
}
