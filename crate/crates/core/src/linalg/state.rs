use ndarray::{Array1, Array2};

use super::operator::{eigh_matrix, qubits_for_dim, Axis, Operator, C64, ONE, ZERO};
use super::pauli::{norm2, PauliSum};
use super::trace::{partial_trace_matrix, pure_reduced_matrix, SiteSplit};
use crate::error::{Error, Result};

pub const NORM_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Array1<C64>,
}

impl StateVector {
    pub fn new(amps: Array1<C64>) -> Result<Self> {
        qubits_for_dim(amps.len())?;
        let norm = norm2(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self { amps })
    }

    pub fn normalized(amps: Array1<C64>) -> Result<Self> {
        qubits_for_dim(amps.len())?;
        let norm = norm2(&amps);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self { amps: amps / C64::new(norm, 0.0) })
    }

    /// For vectors produced by norm-preserving maps; renormalizes away roundoff.
    pub(crate) fn from_unitary_image(amps: Array1<C64>) -> Self {
        let norm = norm2(&amps);
        Self { amps: amps / C64::new(norm, 0.0) }
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: index });
        }
        let mut amps = Array1::zeros(dim);
        amps[index] = ONE;
        Ok(Self { amps })
    }

    /// Product of single-qubit states, site 1 first.
    pub fn product(factors: &[[C64; 2]]) -> Result<Self> {
        let mut amps = Array1::from_elem(1, ONE);
        for f in factors {
            let next: Array1<C64> = amps.iter().flat_map(|&a| [a * f[0], a * f[1]]).collect();
            amps = next;
        }
        Self::normalized(amps)
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Array1<C64> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(other.amps.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn expectation(&self, op: &Operator) -> f64 {
        let v = op.apply(&self.amps);
        self.amps.iter().zip(v.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn expectation_pauli(&self, op: &PauliSum) -> f64 {
        op.expectation(&self.amps)
    }

    pub fn to_density(&self) -> DensityMatrix {
        let d = self.dim();
        let mat = Array2::from_shape_fn((d, d), |(i, j)| self.amps[i] * self.amps[j].conj());
        DensityMatrix { mat }
    }

    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let split = SiteSplit::new(self.n_qubits(), keep)?;
        Ok(DensityMatrix { mat: pure_reduced_matrix(self.amps.as_slice().expect("contiguous"), &split) })
    }
}

/// `|axis, +>` or `|axis, ->` as a single-qubit vector.
pub fn axis_eigenstate(axis: Axis, plus: bool) -> [C64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = if plus { 1.0 } else { -1.0 };
    match axis {
        Axis::Z if plus => [ONE, ZERO],
        Axis::Z => [ZERO, ONE],
        Axis::X => [C64::new(h, 0.0), C64::new(s * h, 0.0)],
        Axis::Y => [C64::new(h, 0.0), C64::new(0.0, s * h)],
    }
}

/// Density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: Array2<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity.
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        let rho = Self { mat };
        rho.validate()?;
        Ok(rho)
    }

    /// Hermitizes and rescales to unit trace, then validates positivity.
    pub fn from_unnormalized(mat: Array2<C64>) -> Result<Self> {
        let op = Operator::new(mat)?.hermitian_part();
        let tr = op.trace().re;
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(Error::InvalidState(format!("trace {tr} is not positive")));
        }
        Self::new(op.into_matrix() / C64::new(tr, 0.0))
    }

    /// For matrices produced by trace- and positivity-preserving maps.
    pub(crate) fn from_trusted(mat: Array2<C64>) -> Self {
        Self { mat }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self { mat: Array2::eye(d) / C64::new(d as f64, 0.0) }
    }

    pub fn validate(&self) -> Result<()> {
        let op = Operator::new(self.mat.clone())?;
        if !op.is_hermitian() {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {:e})", op.hermiticity_error())));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = self.eigenvalues()?.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min:e} is negative")));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    pub fn to_operator(&self) -> Operator {
        Operator::from_matrix_unchecked(self.mat.clone())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn trace(&self) -> C64 {
        self.mat.diag().sum()
    }

    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Result<Array1<f64>> {
        let herm = Operator::from_matrix_unchecked(self.mat.clone()).hermitian_part();
        Ok(eigh_matrix(herm.matrix())?.values)
    }

    pub fn expectation(&self, op: &Operator) -> f64 {
        // Tr(A rho) = sum_ij A_ij rho_ji
        let a = op.matrix();
        let mut acc = ZERO;
        for ((i, j), v) in a.indexed_iter() {
            acc += v * self.mat[[j, i]];
        }
        acc.re
    }

    pub fn expectation_pauli(&self, op: &PauliSum) -> f64 {
        op.expectation_density(&self.mat)
    }

    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let split = SiteSplit::new(self.n_qubits(), keep)?;
        Ok(DensityMatrix { mat: partial_trace_matrix(&self.mat, &split) })
    }

    /// `(1 - w) self + w other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(crate::error::invalid("weight", format!("{w} outside [0, 1]")));
        }
        Ok(DensityMatrix { mat: &self.mat * C64::new(1.0 - w, 0.0) + &other.mat * C64::new(w, 0.0) })
    }

    /// `U rho U†`.
    pub fn evolve(&self, u: &Operator) -> DensityMatrix {
        let m = u.matrix().dot(&self.mat).dot(&u.adjoint().into_matrix());
        DensityMatrix { mat: m }
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix { mat: ndarray::linalg::kron(&self.mat, &other.mat) }
    }
}

/// Either representation of a chain state.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn n_qubits(&self) -> usize {
        match self {
            QuantumState::Pure(s) => s.n_qubits(),
            QuantumState::Mixed(r) => r.n_qubits(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            QuantumState::Pure(s) => s.to_density(),
            QuantumState::Mixed(r) => r.clone(),
        }
    }

    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        match self {
            QuantumState::Pure(s) => s.reduced(keep),
            QuantumState::Mixed(r) => r.reduced(keep),
        }
    }

    pub fn expectation_pauli(&self, op: &PauliSum) -> f64 {
        match self {
            QuantumState::Pure(s) => s.expectation_pauli(op),
            QuantumState::Mixed(r) => r.expectation_pauli(op),
        }
    }

    pub fn as_pure(&self) -> Option<&StateVector> {
        match self {
            QuantumState::Pure(s) => Some(s),
            QuantumState::Mixed(_) => None,
        }
    }
}

impl From<StateVector> for QuantumState {
    fn from(s: StateVector) -> Self {
        QuantumState::Pure(s)
    }
}

impl From<DensityMatrix> for QuantumState {
    fn from(r: DensityMatrix) -> Self {
        QuantumState::Mixed(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(StateVector::new(Array1::from(vec![ONE, ONE])).is_err());
        assert!(StateVector::normalized(Array1::from(vec![ONE, ONE])).is_ok());
        let bad = Array2::from_shape_vec((2, 2), vec![C64::new(1.5, 0.0), ZERO, ZERO, C64::new(-0.5, 0.0)]).unwrap();
        assert!(DensityMatrix::new(bad).is_err());
        let not_h = Array2::from_shape_vec((2, 2), vec![C64::new(0.5, 0.0), ONE, ZERO, C64::new(0.5, 0.0)]).unwrap();
        assert!(DensityMatrix::new(not_h).is_err());
        assert!(DensityMatrix::maximally_mixed(3).validate().is_ok());
    }

    #[test]
    fn product_states() {
        let s = StateVector::product(&[axis_eigenstate(Axis::Z, false), axis_eigenstate(Axis::Z, true)]).unwrap();
        assert_eq!(s.amplitudes()[0b10], ONE);
        let x = StateVector::product(&[axis_eigenstate(Axis::X, true)]).unwrap();
        assert!((x.expectation(&crate::linalg::pauli(Axis::X)) - 1.0).abs() < 1e-15);
        let y = StateVector::product(&[axis_eigenstate(Axis::Y, false)]).unwrap();
        assert!((y.expectation(&crate::linalg::pauli(Axis::Y)) + 1.0).abs() < 1e-15);
    }
}
