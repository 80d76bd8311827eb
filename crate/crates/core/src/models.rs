//! Long-range spin-chain Hamiltonians, charges and product initial states.

use ndarray::Array2;

use crate::error::{invalid, Error, Result};
use crate::linalg::{axis_eigenstate, Axis, Operator, PauliString, PauliSum, Spectrum, StateVector, C64};
use crate::thermal::ThermalParams;

/// Power-law coupling `J(j, k) = j0 / |j - k|^alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingLaw {
    j0: f64,
    alpha: f64,
}

impl CouplingLaw {
    /// `j0` in rad/s. Zero is accepted for non-interacting reference runs.
    pub fn new(j0: f64, alpha: f64) -> Result<Self> {
        if !(j0.is_finite() && j0 >= 0.0) {
            return Err(invalid("j0", format!("{j0} must be finite and non-negative")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(invalid("alpha", format!("{alpha} must be finite and non-negative")));
        }
        Ok(Self { j0, alpha })
    }

    pub fn j0(&self) -> f64 {
        self.j0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coupling(&self, j: usize, k: usize) -> f64 {
        if j == k {
            return 0.0;
        }
        self.j0 / (j.abs_diff(k) as f64).powf(self.alpha)
    }
}

/// Symmetric `n x n` coupling matrix with zero diagonal (0-based indices).
pub fn coupling_matrix(n: usize, law: &CouplingLaw) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(j, k)| law.coupling(j + 1, k + 1))
}

/// Interaction type of the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    /// Native `sum J sigma_x sigma_x` interaction.
    IsingXX,
    /// `sum J sigma_a sigma_a` along one axis.
    SingleAxis(Axis),
    /// Isotropic: weight `J/3` on each of the three axes.
    Heisenberg,
    /// Weight `J/2` on the x and y axes.
    XY,
}

impl Model {
    /// Per-axis weight multiplying `J(j, k)`.
    pub fn axis_weights(&self) -> [(Axis, f64); 3] {
        match *self {
            Model::IsingXX => [(Axis::X, 1.0), (Axis::Y, 0.0), (Axis::Z, 0.0)],
            Model::SingleAxis(a) => Axis::ALL.map(|b| (b, if a == b { 1.0 } else { 0.0 })),
            Model::Heisenberg => Axis::ALL.map(|b| (b, 1.0 / 3.0)),
            Model::XY => [(Axis::X, 0.5), (Axis::Y, 0.5), (Axis::Z, 0.0)],
        }
    }

    /// Charges (total spin components) that commute with the Hamiltonian.
    pub fn conserved_axes(&self) -> Vec<Axis> {
        match *self {
            Model::IsingXX => vec![Axis::X],
            Model::SingleAxis(a) => vec![a],
            Model::Heisenberg => Axis::ALL.to_vec(),
            Model::XY => vec![Axis::Z],
        }
    }
}

/// Chain size, coupling law and interaction type.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainSpec {
    n: usize,
    law: CouplingLaw,
    model: Model,
}

impl ChainSpec {
    pub fn new(n: usize, law: CouplingLaw, model: Model) -> Result<Self> {
        if n < 2 {
            return Err(invalid("n", format!("chain needs at least 2 qubits, got {n}")));
        }
        Ok(Self { n, law, model })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn law(&self) -> &CouplingLaw {
        &self.law
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn with_model(&self, model: Model) -> Self {
        Self { model, ..*self }
    }

    pub fn with_law(&self, law: CouplingLaw) -> Self {
        Self { law, ..*self }
    }

    /// Hamiltonian as a sparse Pauli sum (rad/s).
    pub fn hamiltonian(&self) -> PauliSum {
        let mut h = PauliSum::new(self.n);
        for j in 1..=self.n {
            for k in j + 1..=self.n {
                let jk = self.law.coupling(j, k);
                for (axis, w) in self.model.axis_weights() {
                    if w != 0.0 && jk != 0.0 {
                        h.push(w * jk, pair_string(axis, j, k, self.n));
                    }
                }
            }
        }
        h
    }

    /// Terms of the Hamiltonian acting only on sites `j` and `k`, as a
    /// two-qubit operator with `j` as the leading qubit.
    pub fn pair_hamiltonian(&self, j: usize, k: usize) -> Result<PauliSum> {
        for site in [j, k] {
            if site == 0 || site > self.n {
                return Err(Error::SiteOutOfRange { site, n: self.n });
            }
        }
        if j == k {
            return Err(Error::InvalidSites("pair needs two distinct sites".into()));
        }
        let jk = self.law.coupling(j, k);
        let mut h = PauliSum::new(2);
        for (axis, w) in self.model.axis_weights() {
            if w != 0.0 {
                h.push(w * jk, pair_string(axis, 1, 2, 2));
            }
        }
        Ok(h)
    }
}

impl ChainSpec {
    /// Terms of the Hamiltonian acting only within `sites`, as an operator on
    /// `sites.len()` qubits ordered like `sites`.
    pub fn cluster_hamiltonian(&self, sites: &[usize]) -> Result<PauliSum> {
        crate::linalg::SiteSplit::new(self.n, sites)?;
        let m = sites.len();
        let mut h = PauliSum::new(m);
        for a in 0..m {
            for b in a + 1..m {
                let jab = self.law.coupling(sites[a], sites[b]);
                for (axis, w) in self.model.axis_weights() {
                    if w != 0.0 {
                        h.push(w * jab, pair_string(axis, a + 1, b + 1, m));
                    }
                }
            }
        }
        Ok(h)
    }
}

fn pair_string(axis: Axis, j: usize, k: usize, n: usize) -> PauliString {
    PauliString::from_sites(&[(j, axis), (k, axis)], n).expect("distinct sites in range")
}

/// `H_aa = sum_{j<k} J(j,k) sigma_a^(j) sigma_a^(k)` with full weight.
pub fn single_axis_hamiltonian(n: usize, law: &CouplingLaw, axis: Axis) -> PauliSum {
    ChainSpec { n, law: *law, model: Model::SingleAxis(axis) }.hamiltonian()
}

pub fn build_hamiltonian(spec: &ChainSpec) -> Operator {
    spec.hamiltonian().to_operator()
}

/// `sigma_a^tot`.
pub fn charge(axis: Axis, n: usize) -> PauliSum {
    PauliSum::total(axis, n)
}

/// Three-site block `|y+, x+, z+>` of the initial state.
pub const DEFAULT_BLOCK: [Axis; 3] = [Axis::Y, Axis::X, Axis::Z];

/// Product state repeating the block `|a+, b+, c+>` `n/3` times.
pub fn initial_state(n: usize, block: [Axis; 3]) -> Result<StateVector> {
    if n == 0 || !n.is_multiple_of(3) {
        return Err(invalid("n", format!("{n} is not a positive multiple of 3")));
    }
    check_block(block)?;
    Ok(tiled_state(n, block))
}

/// The block pattern repeated and cut to `n` sites (any `n`).
pub fn tiled_state(n: usize, block: [Axis; 3]) -> StateVector {
    let factors: Vec<[C64; 2]> = (0..n).map(|j| axis_eigenstate(block[j % 3], true)).collect();
    StateVector::product(&factors).expect("product of unit vectors")
}

fn check_block(block: [Axis; 3]) -> Result<()> {
    let mut seen = [false; 3];
    for a in block {
        seen[a.index()] = true;
    }
    if seen.iter().all(|s| *s) {
        Ok(())
    } else {
        Err(invalid("block_order", format!("{block:?} is not a permutation of (x, y, z)")))
    }
}

/// `<sigma_a^tot>` for a = x, y, z.
pub fn charge_expectations(state: &StateVector) -> [f64; 3] {
    let n = state.n_qubits();
    Axis::ALL.map(|a| state.expectation_pauli(&charge(a, n)))
}

/// Variances of `sigma_a^tot` for a = x, y, z.
pub fn amc_variance_check(state: &StateVector) -> [f64; 3] {
    let n = state.n_qubits();
    Axis::ALL.map(|a| {
        let q = charge(a, n);
        let v = q.apply(state.amplitudes());
        let second: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let first = state.expectation_pauli(&q);
        second - first * first
    })
}

/// Effective coupling scale: 336 rad/s at 6 qubits, 398 rad/s at 21 qubits,
/// linear in between and clamped outside.
pub fn default_j0(n: usize) -> f64 {
    let t = ((n as f64 - 6.0) / 15.0).clamp(0.0, 1.0);
    336.0 + t * (398.0 - 336.0)
}

/// Scale a native coupling by the fraction of each substep spent interacting.
pub fn effective_j0(native_j0: f64, interaction_fraction: f64) -> f64 {
    native_j0 * interaction_fraction
}

/// Dimensionless temperature and chemical-potential scales of a solved state.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub bandwidth: f64,
    /// `bandwidth / (dim - 1)`.
    pub mean_gap: f64,
    pub beta_times_bandwidth: f64,
    pub beta_times_mean_gap: f64,
    /// `beta mu_z` times the unit gap of `S_z^tot = sigma_z^tot / 2`.
    pub beta_mu_z_spin_gap: f64,
    /// `beta mu_z` times the gap 2 of `sigma_z^tot`.
    pub beta_mu_z_pauli_gap: f64,
}

pub fn diagnostics_from_spectrum(spectrum: &Spectrum, params: &ThermalParams) -> Diagnostics {
    let bandwidth = spectrum.bandwidth();
    let mean_gap = bandwidth / (spectrum.dim() as f64 - 1.0);
    let beta_mu_z = params.natural[3];
    Diagnostics {
        bandwidth,
        mean_gap,
        beta_times_bandwidth: params.beta * bandwidth,
        beta_times_mean_gap: params.beta * mean_gap,
        beta_mu_z_spin_gap: beta_mu_z,
        beta_mu_z_pauli_gap: 2.0 * beta_mu_z,
    }
}

pub fn initial_state_diagnostics(spec: &ChainSpec, params: &ThermalParams) -> Result<Diagnostics> {
    Ok(diagnostics_from_spectrum(&Spectrum::new(&spec.hamiltonian())?, params))
}
