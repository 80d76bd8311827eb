//! Maximum-entropy calibration of Gibbs ensembles and their local predictions.
//!
//! Every ensemble has the form `rho = exp(-beta H + sum_a lambda_a S_a^tot) / Z`
//! with natural parameters `lambda_a = beta mu_a`. Only the multipliers of the
//! ensemble's constrained charges are nonzero.

mod family;
mod solver;

pub use family::{DenseFamily, GibbsFamily, IsotropicFamily, SectorFamily};
pub use solver::{solve_dual, DualSolution, SolverOptions};

use ndarray::Array1;

use crate::error::{invalid, Error, Result};
use crate::linalg::local::{apply_layer_vec, conjugate_by_layer, mat2_adjoint, mat2_mul, spin_rotation, Mat2};
use crate::linalg::{stochastic_reduced_state, Axis, DensityMatrix, HermitianEigen, Operator, PauliSum, QuantumState, Spectrum, C64};
use crate::models::{ChainSpec, Model};
use family::{normalize_exponents, sector_exponents};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnsembleKind {
    /// Energy only.
    Canonical,
    /// Energy and `sigma_z^tot`.
    GrandCanonical,
    /// Energy and all three spin components.
    Nats,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 3] = [EnsembleKind::Nats, EnsembleKind::GrandCanonical, EnsembleKind::Canonical];

    pub fn label(&self) -> &'static str {
        match self {
            EnsembleKind::Canonical => "can",
            EnsembleKind::GrandCanonical => "gc",
            EnsembleKind::Nats => "nats",
        }
    }

    pub fn constrained_axes(&self) -> &'static [Axis] {
        match self {
            EnsembleKind::Canonical => &[],
            EnsembleKind::GrandCanonical => &[Axis::Z],
            EnsembleKind::Nats => &Axis::ALL,
        }
    }
}

impl std::str::FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "can" | "canonical" => Ok(EnsembleKind::Canonical),
            "gc" | "grand_canonical" | "grandcanonical" => Ok(EnsembleKind::GrandCanonical),
            "nats" => Ok(EnsembleKind::Nats),
            other => Err(invalid("ensemble", format!("unknown ensemble `{other}`"))),
        }
    }
}

/// How a few-site prediction is obtained from the parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Construction {
    /// Partial trace of the global Gibbs state.
    #[default]
    ReducedGlobal,
    /// Gibbs state of the Hamiltonian and charges restricted to the sites.
    LocalExponential,
}

impl std::str::FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "reduced_global" | "reducedglobal" | "global" => Ok(Construction::ReducedGlobal),
            "local_exponential" | "localexponential" | "local" => Ok(Construction::LocalExponential),
            other => Err(invalid("construction", format!("unknown construction `{other}`"))),
        }
    }
}

/// Expectation values the ensemble must reproduce.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Targets {
    /// `<H>`, rad/s.
    pub energy: f64,
    /// `<sigma_a^tot>` for a = x, y, z.
    pub charges: [f64; 3],
}

impl Targets {
    pub fn from_state(h: &PauliSum, state: &QuantumState) -> Self {
        let n = h.n_qubits();
        let charges = Axis::ALL.map(|a| state.expectation_pauli(&PauliSum::total(a, n)));
        Self { energy: state.expectation_pauli(h), charges }
    }

    /// Expectations in the maximally mixed state.
    pub fn infinite_temperature(h: &PauliSum) -> Self {
        let energy = h.terms().iter().filter(|(_, p)| p.x_mask == 0 && p.z_mask == 0).map(|(c, _)| c).sum();
        Self { energy, charges: [0.0; 3] }
    }

    /// Per-site charge densities `<sigma_a^tot> / n`.
    pub fn charge_densities(&self, n: usize) -> [f64; 3] {
        self.charges.map(|c| c / n as f64)
    }
}

/// Solved ensemble parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalParams {
    pub kind: EnsembleKind,
    /// s/rad.
    pub beta: f64,
    /// Chemical potentials, rad/s; zero for unconstrained axes.
    pub mu: [f64; 3],
    /// False at `beta = 0`, where `mu = lambda / beta` has no meaning.
    pub mu_defined: bool,
    /// `(beta, beta mu_x, beta mu_y, beta mu_z)`.
    pub natural: [f64; 4],
    pub targets: Targets,
    pub residual: f64,
    pub iterations: usize,
    pub objective_history: Vec<f64>,
}

impl ThermalParams {
    /// Parameters given directly in natural form, with no solve attached.
    pub fn from_natural(kind: EnsembleKind, natural: [f64; 4], targets: Targets) -> Self {
        let beta = natural[0];
        let mu_defined = beta != 0.0;
        let mu = if mu_defined { [natural[1] / beta, natural[2] / beta, natural[3] / beta] } else { [0.0; 3] };
        Self { kind, beta, mu, mu_defined, natural, targets, residual: 0.0, iterations: 0, objective_history: Vec::new() }
    }

    pub fn lambda(&self) -> [f64; 3] {
        [self.natural[1], self.natural[2], self.natural[3]]
    }
}

/// Result of a generic dense maximum-entropy solve.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxEntSolution {
    pub beta: f64,
    /// Multipliers `lambda_i` of the charges in `exp(-beta H + sum_i lambda_i Q_i)`.
    pub multipliers: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

/// Finds `rho = exp(-beta H + sum_i lambda_i Q_i) / Z` with `<H> = energy`
/// and `<Q_i> = charge_targets[i]`, using dense diagonalization.
pub fn solve_max_entropy(h: &Operator, charges: &[Operator], energy: f64, charge_targets: &[f64], opts: &SolverOptions) -> Result<MaxEntSolution> {
    if charges.len() != charge_targets.len() {
        return Err(Error::DimensionMismatch { expected: charges.len(), found: charge_targets.len() });
    }
    let mut ops = vec![-h];
    ops.extend(charges.iter().cloned());
    let family = DenseFamily::new(ops)?;
    let mut targets = vec![-energy];
    targets.extend_from_slice(charge_targets);
    let sol = solve_dual(&family, &targets, opts)?;
    Ok(MaxEntSolution { beta: sol.theta[0], multipliers: sol.theta[1..].to_vec(), residual: sol.residual, iterations: sol.iterations, history: sol.history })
}

/// Spin-1/2 total spin `S_a^tot = sigma_a^tot / 2` as a Pauli sum.
fn total_spin(axis: Axis, n: usize) -> PauliSum {
    PauliSum::total(axis, n).scaled(0.5)
}

/// Single-site unitary with `u sigma_z u† = n . sigma`.
fn frame_towards(dir: [f64; 3]) -> Mat2 {
    let theta = dir[2].clamp(-1.0, 1.0).acos();
    let phi = dir[1].atan2(dir[0]);
    mat2_mul(&spin_rotation([0.0, 0.0, 1.0], phi), &spin_rotation([0.0, 1.0, 0.0], theta))
}

/// A chain's Hamiltonian together with its spectrum, reused across solves.
#[derive(Clone, Debug)]
pub struct ThermalModel {
    spec: ChainSpec,
    hamiltonian: PauliSum,
    spectrum: Spectrum,
    options: SolverOptions,
}

impl ThermalModel {
    pub fn new(spec: &ChainSpec) -> Result<Self> {
        let hamiltonian = spec.hamiltonian();
        let spectrum = Spectrum::new(&hamiltonian)?;
        Ok(Self { spec: *spec, hamiltonian, spectrum, options: SolverOptions::default() })
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    pub fn hamiltonian(&self) -> &PauliSum {
        &self.hamiltonian
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn targets(&self, state: &QuantumState) -> Targets {
        Targets::from_state(&self.hamiltonian, state)
    }

    fn isotropic(&self) -> bool {
        self.spec.model() == Model::Heisenberg && self.spectrum.conserves_magnetization()
    }

    fn dense_family(&self, axes: &[Axis]) -> Result<DenseFamily> {
        let n = self.spec.n();
        let mut ops = vec![-&self.hamiltonian.to_operator()];
        ops.extend(axes.iter().map(|&a| total_spin(a, n).to_operator()));
        DenseFamily::new(ops)
    }

    /// Solves the maximum-entropy problem of `kind` for `targets`.
    pub fn solve(&self, kind: EnsembleKind, targets: &Targets) -> Result<ThermalParams> {
        let axes = kind.constrained_axes();
        let mut t = vec![-targets.energy];
        t.extend(axes.iter().map(|a| targets.charges[a.index()] / 2.0));
        let sol = match kind {
            EnsembleKind::Canonical => solve_dual(&SectorFamily::new(&self.spectrum, false)?, &t, &self.options)?,
            EnsembleKind::GrandCanonical if self.spectrum.conserves_magnetization() => {
                solve_dual(&SectorFamily::new(&self.spectrum, true)?, &t, &self.options)?
            }
            EnsembleKind::Nats if self.isotropic() => solve_dual(&IsotropicFamily::new(&self.spectrum)?, &t, &self.options)?,
            _ => solve_dual(&self.dense_family(axes)?, &t, &self.options)?,
        };
        let mut natural = [sol.theta[0], 0.0, 0.0, 0.0];
        for (a, &l) in axes.iter().zip(&sol.theta[1..]) {
            natural[1 + a.index()] = l;
        }
        let mut params = ThermalParams::from_natural(kind, natural, *targets);
        params.residual = sol.residual;
        params.iterations = sol.iterations;
        params.objective_history = sol.history;
        Ok(params)
    }

    /// Global Gibbs state for `params`.
    pub fn state(&self, params: &ThermalParams) -> Result<GibbsState<'_>> {
        let [beta, lx, ly, lz] = params.natural;
        if self.spectrum.conserves_magnetization() && lx == 0.0 && ly == 0.0 {
            return Ok(self.sector_state(beta, lz, None));
        }
        let r = (lx * lx + ly * ly + lz * lz).sqrt();
        if self.isotropic() {
            return Ok(self.sector_state(beta, r, Some(frame_towards([lx / r, ly / r, lz / r]))));
        }
        if lx == 0.0 && ly == 0.0 && lz == 0.0 {
            return Ok(self.sector_state(beta, 0.0, None));
        }
        let family = self.dense_family(&Axis::ALL)?;
        let (eigen, probs, _) = family.decompose(&params.natural)?;
        Ok(GibbsState { n: self.spec.n(), repr: Repr::Dense { eigen, probs } })
    }

    fn sector_state(&self, beta: f64, field: f64, frame: Option<Mat2>) -> GibbsState<'_> {
        let exps = sector_exponents(&self.spectrum, beta, field);
        let (log_z, probs) = normalize_exponents(&exps);
        GibbsState { n: self.spec.n(), repr: Repr::Sectors { spectrum: &self.spectrum, probs, beta, field, log_z, frame } }
    }

    /// Prediction for the reduced state on `sites`.
    pub fn prediction(&self, params: &ThermalParams, sites: &[usize], construction: Construction) -> Result<DensityMatrix> {
        match construction {
            Construction::ReducedGlobal => self.state(params)?.reduced(sites),
            Construction::LocalExponential => local_exponential(&self.spec, params, sites),
        }
    }

    /// Reduced global prediction estimated from `n_samples` random vectors.
    pub fn stochastic_prediction(&self, params: &ThermalParams, sites: &[usize], n_samples: usize, seed: u64) -> Result<DensityMatrix> {
        let state = self.state(params)?;
        stochastic_reduced_state(|v| state.apply_sqrt(v), self.spec.n(), sites, n_samples, seed)
    }
}

enum Repr<'a> {
    /// Weights over the sector eigenbasis, optionally in a globally rotated frame.
    Sectors { spectrum: &'a Spectrum, probs: Vec<Array1<f64>>, beta: f64, field: f64, log_z: f64, frame: Option<Mat2> },
    Dense { eigen: HermitianEigen, probs: Array1<f64> },
}

/// A global Gibbs state kept in factored form.
pub struct GibbsState<'a> {
    n: usize,
    repr: Repr<'a>,
}

impl GibbsState<'_> {
    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        let mat = match &self.repr {
            Repr::Sectors { spectrum, probs, frame, .. } => {
                let m = spectrum.dense_mixture(probs)?;
                match frame {
                    Some(u) => conjugate_by_layer(&m, &vec![*u; self.n]),
                    None => m,
                }
            }
            Repr::Dense { eigen, probs } => {
                let weights = probs.mapv(|p| C64::new(p, 0.0));
                let scaled = &eigen.vectors * &weights.view().insert_axis(ndarray::Axis(0));
                scaled.dot(&eigen.vectors.t().mapv(|z| z.conj()))
            }
        };
        DensityMatrix::from_unnormalized(mat)
    }

    /// Exact reduced state on `keep`.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        match &self.repr {
            Repr::Sectors { spectrum, probs, frame, .. } => {
                let m = spectrum.reduced_mixture(probs, keep)?;
                let m = match frame {
                    Some(u) => conjugate_by_layer(&m, &vec![*u; keep.len()]),
                    None => m,
                };
                DensityMatrix::from_unnormalized(m)
            }
            Repr::Dense { .. } => self.to_density()?.reduced(keep),
        }
    }

    /// `rho^(1/2) v`.
    pub fn apply_sqrt(&self, v: &Array1<C64>) -> Array1<C64> {
        match &self.repr {
            Repr::Sectors { spectrum, beta, field, log_z, frame, .. } => {
                let n = self.n;
                let weight = |e: f64, k: Option<usize>| {
                    let m = k.map_or(0.0, |k| (n as f64 - 2.0 * k as f64) / 2.0);
                    C64::new((0.5 * (-beta * e + field * m - log_z)).exp(), 0.0)
                };
                match frame {
                    Some(u) => {
                        let inv = vec![mat2_adjoint(u); n];
                        let w = spectrum.apply_function(&apply_layer_vec(v, &inv), weight).expect("dimension checked by caller");
                        apply_layer_vec(&w, &vec![*u; n])
                    }
                    None => spectrum.apply_function(v, weight).expect("dimension checked by caller"),
                }
            }
            Repr::Dense { eigen, probs } => {
                let coeffs = eigen.vectors.t().mapv(|z| z.conj()).dot(v);
                let scaled = Array1::from_shape_fn(coeffs.len(), |k| coeffs[k] * probs[k].sqrt());
                eigen.vectors.dot(&scaled)
            }
        }
    }
}

/// Gibbs state of the cluster Hamiltonian and cluster charges on `sites`.
pub fn local_exponential(spec: &ChainSpec, params: &ThermalParams, sites: &[usize]) -> Result<DensityMatrix> {
    let h = spec.cluster_hamiltonian(sites)?;
    let m = sites.len();
    let mut k = h.scaled(-params.natural[0]);
    for axis in Axis::ALL {
        let l = params.natural[1 + axis.index()];
        if l != 0.0 {
            k = k.add_scaled(&total_spin(axis, m), l)?;
        }
    }
    let kop = k.to_operator();
    let eig = kop.eigh()?;
    let max = eig.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    DensityMatrix::from_unnormalized(eig.reconstruct(|e| C64::new((e - max).exp(), 0.0)))
}

/// Dense global Gibbs state.
pub fn build_global_thermal(spec: &ChainSpec, params: &ThermalParams) -> Result<DensityMatrix> {
    ThermalModel::new(spec)?.state(params)?.to_density()
}

/// Prediction for the pair `(j, j + 1)`; stochastic when `n_samples` is given.
pub fn thermal_prediction(spec: &ChainSpec, params: &ThermalParams, j: usize, construction: Construction, n_samples: Option<(usize, u64)>) -> Result<DensityMatrix> {
    if j == 0 || j >= spec.n() {
        return Err(Error::SiteOutOfRange { site: j, n: spec.n() });
    }
    let pair = [j, j + 1];
    match (construction, n_samples) {
        (Construction::ReducedGlobal, Some((samples, seed))) => ThermalModel::new(spec)?.stochastic_prediction(params, &pair, samples, seed),
        _ => ThermalModel::new(spec)?.prediction(params, &pair, construction),
    }
}
