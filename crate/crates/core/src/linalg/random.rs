//! Random vectors, states and operators for estimators and tests.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::operator::{Operator, C64};
use super::pauli::norm2;
use super::state::{DensityMatrix, StateVector};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unit vector: normalized standard complex Gaussian.
pub fn haar_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Array1<C64> {
    let v: Array1<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = norm2(&v);
    v / C64::new(norm, 0.0)
}

pub fn random_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> StateVector {
    StateVector::from_unitary_image(haar_vector(1 << n_qubits, rng))
}

/// `G G† / Tr(G G†)` with `G` a `dim x rank` Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(n_qubits: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let d = 1usize << n_qubits;
    let g = Array2::from_shape_fn((d, rank.max(1)), |_| gaussian(rng));
    let m = g.dot(&g.t().mapv(|z| z.conj()));
    let tr: f64 = m.diag().iter().map(|z| z.re).sum();
    let mut m = m / C64::new(tr, 0.0);
    // Exact Hermiticity despite roundoff in the product.
    for i in 0..d {
        m[[i, i]].im = 0.0;
        for j in 0..i {
            m[[i, j]] = m[[j, i]].conj();
        }
    }
    DensityMatrix::from_trusted(m)
}

/// Hermitian matrix with independent Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Operator {
    let d = 1usize << n_qubits;
    let g = Array2::from_shape_fn((d, d), |_| gaussian(rng));
    Operator::from_matrix_unchecked(g).hermitian_part()
}
