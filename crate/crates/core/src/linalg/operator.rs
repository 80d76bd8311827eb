use std::ops::{Add, Mul, Neg, Sub};

use ndarray::{Array1, Array2, Axis as NdAxis, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Hermiticity tolerance, relative to the largest entry (absolute below 1).
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;

/// Spin axis. Also used to label Pauli matrices and measurement bases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    /// 2x2 Pauli matrix as a plain array.
    pub fn matrix(self) -> [[C64; 2]; 2] {
        match self {
            Axis::X => [[ZERO, ONE], [ONE, ZERO]],
            Axis::Y => [[ZERO, -I], [I, ZERO]],
            Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(crate::error::invalid("axis", format!("unknown axis `{other}`"))),
        }
    }
}

/// Dense square matrix acting on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: Array2<C64>,
}

pub(crate) fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

impl Operator {
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        let (r, c) = mat.dim();
        if r != c {
            return Err(Error::DimensionMismatch { expected: r, found: c });
        }
        qubits_for_dim(r)?;
        Ok(Self { mat })
    }

    pub(crate) fn from_matrix_unchecked(mat: Array2<C64>) -> Self {
        debug_assert!(mat.is_square() && mat.nrows().is_power_of_two());
        Self { mat }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { mat: Array2::eye(1 << n_qubits) }
    }

    pub fn zeros(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        Self { mat: Array2::zeros((d, d)) }
    }

    /// Diagonal operator with the given (real) diagonal.
    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        qubits_for_dim(diag.len())?;
        let mut mat = Array2::zeros((diag.len(), diag.len()));
        for (i, &v) in diag.iter().enumerate() {
            mat[[i, i]] = C64::new(v, 0.0);
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.t().mapv(|z| z.conj()) }
    }

    pub fn dot(&self, other: &Operator) -> Self {
        Self { mat: self.mat.dot(&other.mat) }
    }

    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        self.mat.dot(v)
    }

    pub fn kron(&self, other: &Operator) -> Self {
        Self { mat: ndarray::linalg::kron(&self.mat, &other.mat) }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { mat: &self.mat * c }
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        Self { mat: self.mat.dot(&other.mat) - other.mat.dot(&self.mat) }
    }

    /// `U A U†`.
    pub fn conjugate_by(&self, u: &Operator) -> Self {
        Self { mat: u.mat.dot(&self.mat).dot(&u.mat.t().mapv(|z| z.conj())) }
    }

    pub fn trace(&self) -> C64 {
        self.mat.diag().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut err = 0.0f64;
        for i in 0..d {
            for j in i..d {
                err = err.max((self.mat[[i, j]] - self.mat[[j, i]].conj()).norm());
            }
        }
        err
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() < HERMITIAN_TOL * self.max_abs().max(1.0)
    }

    pub fn is_unitary(&self) -> bool {
        let prod = self.adjoint().dot(self);
        prod.mat
            .indexed_iter()
            .all(|((i, j), z)| (z - if i == j { ONE } else { ZERO }).norm() < UNITARY_TOL)
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.mat.t().mapv(|z| z.conj());
        Self { mat: (&self.mat + &adj) * C64::new(0.5, 0.0) }
    }

    /// Eigendecomposition of a Hermitian operator. Uses the real symmetric
    /// solver when every entry is real.
    pub fn eigh(&self) -> Result<HermitianEigen> {
        if !self.is_hermitian() {
            return Err(Error::NotHermitian(self.hermiticity_error()));
        }
        eigh_matrix(&self.mat)
    }

    /// `f(A)` through the spectral decomposition.
    pub fn function(&self, f: impl Fn(f64) -> C64) -> Result<Operator> {
        Ok(Operator { mat: self.eigh()?.reconstruct(f) })
    }

    /// `exp(-i t A)`.
    pub fn exp_i(&self, t: f64) -> Result<Operator> {
        self.function(|e| C64::from_polar(1.0, -e * t))
    }
}

pub(crate) fn eigh_matrix(mat: &Array2<C64>) -> Result<HermitianEigen> {
    let real = mat.iter().all(|z| z.im == 0.0);
    if real {
        let re = mat.mapv(|z| z.re);
        let (values, vectors) = re.eigh(UPLO::Lower)?;
        Ok(HermitianEigen { values, vectors: vectors.mapv(|x| C64::new(x, 0.0)) })
    } else {
        // LAPACK sees a row-major complex matrix as its conjugate, so hand it
        // a column-major copy.
        let mut col_major = Array2::zeros(mat.raw_dim().f());
        col_major.assign(mat);
        let (values, vectors) = col_major.eigh(UPLO::Lower)?;
        Ok(HermitianEigen { values, vectors })
    }
}

/// Eigenvalues in ascending order with eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<C64>,
}

impl HermitianEigen {
    /// `V diag(f(lambda)) V†`.
    pub fn reconstruct(&self, f: impl Fn(f64) -> C64) -> Array2<C64> {
        let weights: Array1<C64> = self.values.mapv(f);
        let scaled = &self.vectors * &weights.view().insert_axis(NdAxis(0));
        scaled.dot(&self.vectors.t().mapv(|z| z.conj()))
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator { mat: &self.mat + &rhs.mat }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator { mat: &self.mat - &rhs.mat }
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        self.dot(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        Operator { mat: &self.mat * C64::new(rhs, 0.0) }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { mat: self.mat.mapv(|z| -z) }
    }
}

pub fn pauli(axis: Axis) -> Operator {
    let m = axis.matrix();
    Operator { mat: Array2::from_shape_fn((2, 2), |(i, j)| m[i][j]) }
}

/// `1^(j-1) ⊗ op ⊗ 1^(n-j)` for a single-qubit `op`.
pub fn embed(op: &Operator, site: usize, n: usize) -> Result<Operator> {
    if op.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: op.dim() });
    }
    if site == 0 || site > n {
        return Err(Error::SiteOutOfRange { site, n });
    }
    let left = Operator::identity(site - 1);
    let right = Operator::identity(n - site);
    Ok(left.kron(op).kron(&right))
}

/// `sum_j embed(op, j, n)`.
pub fn total_operator(op: &Operator, n: usize) -> Result<Operator> {
    let mut acc = Operator::zeros(n);
    for j in 1..=n {
        acc = &acc + &embed(op, j, n)?;
    }
    Ok(acc)
}

/// `f(A)` for Hermitian `A`.
pub fn hermitian_function(a: &Operator, f: impl Fn(f64) -> C64) -> Result<Operator> {
    a.function(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let xy = pauli(Axis::X).dot(&pauli(Axis::Y));
        assert_eq!(xy, pauli(Axis::Z).scale(I));
        let ev = pauli(Axis::Z).eigh().unwrap().values;
        assert_eq!(ev.to_vec(), vec![-1.0, 1.0]);
        for a in Axis::ALL {
            let p = pauli(a);
            assert!(p.is_hermitian() && p.is_unitary());
            assert_eq!(p.trace(), ZERO);
        }
    }

    #[test]
    fn embed_and_total() {
        let x1 = embed(&pauli(Axis::X), 1, 2).unwrap();
        let up_up = Array1::from(vec![ONE, ZERO, ZERO, ZERO]);
        // |z-, z+> is index 0b10.
        assert_eq!(x1.apply(&up_up)[2], ONE);
        let a = embed(&pauli(Axis::X), 1, 3).unwrap();
        let b = embed(&pauli(Axis::Y), 2, 3).unwrap();
        assert!(a.commutator(&b).max_abs() < 1e-15);
        assert_eq!(embed(&pauli(Axis::Z), 2, 3).unwrap().trace(), ZERO);
        assert!(matches!(embed(&pauli(Axis::Z), 4, 3), Err(Error::SiteOutOfRange { .. })));
        assert!(embed(&pauli(Axis::Z), 0, 3).is_err());

        let sz = total_operator(&pauli(Axis::Z), 2).unwrap();
        let ev = sz.eigh().unwrap().values.to_vec();
        assert_eq!(ev, vec![-2.0, 0.0, 0.0, 2.0]);
        let id = total_operator(&Operator::identity(1), 4).unwrap();
        assert_eq!(id, Operator::identity(4).scale(C64::new(4.0, 0.0)));
    }

    #[test]
    fn hermitian_functions() {
        let zero = Operator::zeros(2);
        let e = hermitian_function(&zero, |x| C64::new(x.exp(), 0.0)).unwrap();
        assert!((&e - &Operator::identity(2)).max_abs() < 1e-15);

        // exp(-i (pi/4) sigma_x) is the quarter-turn about x.
        let rx = (&pauli(Axis::X) * (std::f64::consts::PI / 4.0)).exp_i(1.0).unwrap();
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let expected = Array2::from_shape_vec((2, 2), vec![C64::new(c, 0.0), C64::new(0.0, -c), C64::new(0.0, -c), C64::new(c, 0.0)]).unwrap();
        assert!((rx.matrix() - &expected).iter().all(|z| z.norm() < 1e-12));

        let not_h = Operator::new(Array2::from_shape_vec((2, 2), vec![ZERO, ONE, ZERO, ZERO]).unwrap()).unwrap();
        assert!(matches!(not_h.eigh(), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(Operator::new(Array2::zeros((3, 3))), Err(Error::NotPowerOfTwo(3))));
        assert!(Operator::new(Array2::zeros((2, 4))).is_err());
    }
}
