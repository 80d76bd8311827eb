//! Distances between states, clump averages and the distinguishability bound.

use ndarray::Array2;

use crate::error::{invalid, Error, Result};
use crate::linalg::{pauli, Axis, DensityMatrix, Operator, QuantumState, StateVector, C64};
use crate::models::ChainSpec;
use crate::thermal::{EnsembleKind, ThermalModel, ThermalParams, Targets};

/// Eigenvalues of the second argument below this are raised to it before the log.
pub const SUPPORT_CLIP: f64 = 1e-12;
/// Eigenvalues at or below this count as exact zeros.
const NUMERICAL_ZERO: f64 = 1e-15;
/// Weight of the first argument on a direction that counts as support there.
const SUPPORT_WEIGHT: f64 = 1e-12;

/// Relative entropy in nats, or a flag when the first state has support
/// outside the second's.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RelativeEntropy {
    Finite(f64),
    Infinite,
}

impl RelativeEntropy {
    /// `f64::INFINITY` for the flagged case.
    pub fn value(&self) -> f64 {
        match *self {
            RelativeEntropy::Finite(v) => v,
            RelativeEntropy::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, RelativeEntropy::Finite(_))
    }
}

fn same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

/// `D(chi || xi) = Tr chi (log chi - log xi)`.
pub fn relative_entropy(chi: &DensityMatrix, xi: &DensityMatrix) -> Result<RelativeEntropy> {
    same_dim(chi, xi)?;
    let ec = chi.to_operator().eigh()?;
    let ex = xi.to_operator().eigh()?;
    let entropy_term: f64 = ec.values.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum();
    // w_j = <v_j| chi |v_j>
    let cv = chi.matrix().dot(&ex.vectors);
    let mut cross = 0.0;
    for (j, &q) in ex.values.iter().enumerate() {
        let w: f64 = ex.vectors.column(j).iter().zip(cv.column(j).iter()).map(|(a, b)| (a.conj() * b).re).sum();
        if q <= NUMERICAL_ZERO {
            if w > SUPPORT_WEIGHT {
                return Ok(RelativeEntropy::Infinite);
            }
            continue;
        }
        cross += w * q.max(SUPPORT_CLIP).ln();
    }
    Ok(RelativeEntropy::Finite((entropy_term - cross).max(0.0)))
}

fn singular_values(a: &Operator) -> Result<Vec<f64>> {
    let gram = a.adjoint().dot(a).hermitian_part();
    Ok(gram.eigh()?.values.iter().map(|&v| v.max(0.0).sqrt()).collect())
}

/// `||A||_p = (Tr |A|^p)^(1/p)`; `p = f64::INFINITY` gives the operator norm.
pub fn schatten_norm(a: &Operator, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid("p", format!("{p} is below 1")));
    }
    if a.is_hermitian() {
        let ev = a.hermitian_part().eigh()?.values;
        let abs = ev.iter().map(|v| v.abs());
        return Ok(if p.is_infinite() { abs.fold(0.0, f64::max) } else { abs.map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p) });
    }
    let sv = singular_values(a)?;
    Ok(if p.is_infinite() { sv.iter().cloned().fold(0.0, f64::max) } else { sv.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p) })
}

pub fn operator_norm(a: &Operator) -> Result<f64> {
    schatten_norm(a, f64::INFINITY)
}

/// `(1/2) ||rho - sigma||_1`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    let diff = Operator::new(rho.matrix() - sigma.matrix())?;
    Ok((0.5 * schatten_norm(&diff.hermitian_part(), 1.0)?).min(1.0))
}

fn psd_sqrt(rho: &DensityMatrix) -> Result<Array2<C64>> {
    Ok(rho.to_operator().eigh()?.reconstruct(|v| C64::new(v.max(0.0).sqrt(), 0.0)))
}

/// `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    let s = psd_sqrt(rho)?;
    let m = Operator::new(s.dot(sigma.matrix()).dot(&s))?.hermitian_part();
    let root: f64 = m.eigh()?.values.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok((root * root).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceReport {
    pub relative_entropy: RelativeEntropy,
    pub trace_distance: f64,
    pub fidelity: f64,
}

impl DistanceReport {
    pub fn between(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Self> {
        Ok(Self { relative_entropy: relative_entropy(rho, sigma)?, trace_distance: trace_distance(rho, sigma)?, fidelity: fidelity(rho, sigma)? })
    }

    /// `D >= 2 D_tr^2`, the standard Pinsker inequality in nats.
    pub fn pinsker_holds(&self, slack: f64) -> bool {
        self.relative_entropy.value() >= 2.0 * self.trace_distance.powi(2) - slack
    }
}

/// Mean relative entropy over matched lists of pair states and predictions.
pub fn pair_average_distance(states: &[DensityMatrix], predictions: &[DensityMatrix]) -> Result<RelativeEntropy> {
    if states.len() != predictions.len() {
        return Err(Error::DimensionMismatch { expected: states.len(), found: predictions.len() });
    }
    if states.is_empty() {
        return Err(invalid("states", "no pairs to average"));
    }
    let mut sum = 0.0;
    for (s, p) in states.iter().zip(predictions) {
        match relative_entropy(s, p)? {
            RelativeEntropy::Finite(v) => sum += v,
            RelativeEntropy::Infinite => return Ok(RelativeEntropy::Infinite),
        }
    }
    Ok(RelativeEntropy::Finite(sum / states.len() as f64))
}

/// Sites `j, j+1, ..., j+tau-1` with indices taken cyclically in `1..=n`.
pub fn cyclic_clump(n: usize, tau: usize, j: usize) -> Vec<usize> {
    (0..tau).map(|k| (j - 1 + k) % n + 1).collect()
}

/// `(1/n) sum_j rho^(j, ..., j+tau-1)` over all cyclic shifts, where `reduce`
/// returns the reduced state on an ordered site list.
pub fn clump_average_with(n: usize, tau: usize, reduce: impl Fn(&[usize]) -> Result<DensityMatrix>) -> Result<DensityMatrix> {
    if tau == 0 || tau > n {
        return Err(invalid("tau", format!("{tau} outside 1..={n}")));
    }
    let mut acc: Option<Array2<C64>> = None;
    for j in 1..=n {
        let r = reduce(&cyclic_clump(n, tau, j))?;
        acc = Some(match acc {
            Some(a) => a + r.matrix(),
            None => r.into_matrix(),
        });
    }
    let avg = acc.expect("n >= 1") / C64::new(n as f64, 0.0);
    DensityMatrix::from_unnormalized(avg)
}

pub fn clump_average(state: &QuantumState, tau: usize) -> Result<DensityMatrix> {
    clump_average_with(state.n_qubits(), tau, |sites| state.reduced(sites))
}

/// Single-site charge used in the distinguishability bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChargeChoice {
    SigmaX,
    /// `(sigma_x + sigma_y + sigma_z) / sqrt(3)`.
    Optimal,
}

impl ChargeChoice {
    pub fn label(&self) -> &'static str {
        match self {
            ChargeChoice::SigmaX => "sigma_x",
            ChargeChoice::Optimal => "optimal",
        }
    }

    pub fn single_site(&self) -> Operator {
        match self {
            ChargeChoice::SigmaX => pauli(Axis::X),
            ChargeChoice::Optimal => {
                let sum = &(&pauli(Axis::X) + &pauli(Axis::Y)) + &pauli(Axis::Z);
                &sum * (1.0 / 3f64.sqrt())
            }
        }
    }
}

/// Quantities entering the lower bound on how far the averaged NATS clump is
/// from the averaged canonical clump.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub tau: usize,
    pub choice: ChargeChoice,
    /// `<Q^tot> / n` in the initial state.
    pub q: f64,
    pub q_nats: f64,
    pub q_canonical: f64,
    pub q_grand_canonical: f64,
    pub charge_norm: f64,
    pub relative_entropy: f64,
    pub trace_distance: f64,
    /// `|q| / ||Q||_op` as stated.
    pub bound: f64,
    /// `|q| / (2 ||Q||_op)`, which Hölder's inequality guarantees.
    pub half_bound: f64,
    pub holds_bound: bool,
    pub holds_half_bound: bool,
    /// `|| [rho_GC, V] ||_op` with `V = sigma_z^{⊗n}`.
    pub gc_commutator_norm: f64,
    /// `|| [rho_can, V] ||_op`.
    pub canonical_commutator_norm: f64,
    /// Largest solver residual among the three ensembles.
    pub solver_residual: f64,
    pub pinsker_standard: bool,
    pub pinsker_as_stated: bool,
}

fn single_site_expectation(rho: &DensityMatrix, q: &Operator) -> Result<f64> {
    let first = rho.reduced(&[1])?;
    Ok(first.expectation(q))
}

fn parity_commutator(rho: &DensityMatrix) -> Result<f64> {
    // sigma_z^{⊗n} is diagonal with entries (-1)^popcount(b)
    let sign = |b: usize| if b.count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
    let c = Array2::from_shape_fn(rho.matrix().dim(), |(a, b)| rho.matrix()[[a, b]] * (sign(a) - sign(b)));
    operator_norm(&Operator::new(c)?)
}

/// Builds the clump-averaged NATS, grand canonical and canonical states for
/// the initial state `psi0` and evaluates the bound for `choice`.
pub fn theorem_bound_check(spec: &ChainSpec, psi0: &StateVector, tau: usize, choice: ChargeChoice) -> Result<BoundReport> {
    let n = spec.n();
    if psi0.n_qubits() != n {
        return Err(Error::DimensionMismatch { expected: n, found: psi0.n_qubits() });
    }
    let model = ThermalModel::new(spec)?;
    let targets: Targets = model.targets(&QuantumState::Pure(psi0.clone()));
    let solve = |kind| model.solve(kind, &targets);
    let (nats, gc, can): (ThermalParams, ThermalParams, ThermalParams) =
        (solve(EnsembleKind::Nats)?, solve(EnsembleKind::GrandCanonical)?, solve(EnsembleKind::Canonical)?);
    let averaged = |p: &ThermalParams| -> Result<DensityMatrix> {
        let state = model.state(p)?;
        clump_average_with(n, tau, |sites| state.reduced(sites))
    };
    let nats_avg = averaged(&nats)?;
    let can_avg = averaged(&can)?;
    let gc_avg = averaged(&gc)?;

    let q_site = choice.single_site();
    let q_total = crate::linalg::total_operator(&q_site, n)?;
    let q = psi0.expectation(&q_total) / n as f64;
    let charge_norm = operator_norm(&q_site)?;
    let report = DistanceReport::between(&nats_avg, &can_avg)?;
    let bound = q.abs() / charge_norm;
    let half_bound = bound / 2.0;
    let gc_global = model.state(&gc)?.to_density()?;
    let can_global = model.state(&can)?.to_density()?;
    Ok(BoundReport {
        n,
        tau,
        choice,
        q,
        q_nats: single_site_expectation(&nats_avg, &q_site)?,
        q_canonical: single_site_expectation(&can_avg, &q_site)?,
        q_grand_canonical: single_site_expectation(&gc_avg, &q_site)?,
        charge_norm,
        relative_entropy: report.relative_entropy.value(),
        trace_distance: report.trace_distance,
        bound,
        half_bound,
        holds_bound: report.trace_distance >= bound,
        holds_half_bound: report.trace_distance >= half_bound,
        gc_commutator_norm: parity_commutator(&gc_global)?,
        canonical_commutator_norm: parity_commutator(&can_global)?,
        solver_residual: nats.residual.max(gc.residual).max(can.residual),
        pinsker_standard: report.pinsker_holds(1e-9),
        pinsker_as_stated: report.relative_entropy.value() >= report.trace_distance,
    })
}
