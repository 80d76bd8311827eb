//! Single-qubit unitaries applied site by site without building 2^n matrices.

use ndarray::{Array1, Array2};

use super::operator::{Operator, C64, I, ONE, ZERO};

/// A 2x2 complex matrix, row-major.
pub type Mat2 = [[C64; 2]; 2];

pub const IDENTITY2: Mat2 = [[ONE, ZERO], [ZERO, ONE]];

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat2_adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// `exp(-i (angle/2) sigma)` for a unit Bloch direction `(nx, ny, nz)`.
pub fn spin_rotation(direction: [f64; 3], angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    let [nx, ny, nz] = direction;
    [
        [C64::new(c, -s * nz), C64::new(-s * ny, -s * nx)],
        [C64::new(s * ny, -s * nx), C64::new(c, s * nz)],
    ]
}

/// Columns are the `+1` and `-1` eigenvectors of the Pauli matrix along `axis`,
/// so that `sigma_axis = B sigma_z B†`.
pub fn eigenbasis(axis: super::Axis) -> Mat2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = C64::new(h, 0.0);
    match axis {
        super::Axis::X => [[r, r], [r, -r]],
        super::Axis::Y => [[r, r], [I * h, -I * h]],
        super::Axis::Z => IDENTITY2,
    }
}

#[inline]
pub(crate) fn site_bit(n: usize, site: usize) -> usize {
    1 << (n - site)
}

/// Applies `u` to `site` (1-based) of a state vector in place.
pub fn apply_site(psi: &mut [C64], n: usize, site: usize, u: &Mat2) {
    let bit = site_bit(n, site);
    let dim = psi.len();
    let mut b = 0;
    while b < dim {
        if b & bit != 0 {
            b += bit;
            continue;
        }
        let a0 = psi[b];
        let a1 = psi[b | bit];
        psi[b] = u[0][0] * a0 + u[0][1] * a1;
        psi[b | bit] = u[1][0] * a0 + u[1][1] * a1;
        b += 1;
    }
}

/// Applies `u_1 ⊗ ... ⊗ u_n` to a state vector in place.
pub fn apply_layer(psi: &mut [C64], layer: &[Mat2]) {
    let n = layer.len();
    for (j, u) in layer.iter().enumerate() {
        if *u != IDENTITY2 {
            apply_site(psi, n, j + 1, u);
        }
    }
}

pub fn apply_layer_vec(psi: &Array1<C64>, layer: &[Mat2]) -> Array1<C64> {
    let mut out = psi.clone();
    apply_layer(out.as_slice_mut().expect("contiguous"), layer);
    out
}

/// `U rho U†` for a product unitary `U`.
pub fn conjugate_by_layer(rho: &Array2<C64>, layer: &[Mat2]) -> Array2<C64> {
    let n = layer.len();
    let dim = rho.nrows();
    let mut out = rho.as_standard_layout().into_owned();
    let data = out.as_slice_mut().expect("standard layout");
    for (j, u) in layer.iter().enumerate() {
        if *u == IDENTITY2 {
            continue;
        }
        let bit = site_bit(n, j + 1);
        // Left action mixes row pairs.
        for r in 0..dim {
            if r & bit != 0 {
                continue;
            }
            let (r0, r1) = (r * dim, (r | bit) * dim);
            for c in 0..dim {
                let a0 = data[r0 + c];
                let a1 = data[r1 + c];
                data[r0 + c] = u[0][0] * a0 + u[0][1] * a1;
                data[r1 + c] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
        // Right action by u† mixes column pairs.
        let v = mat2_adjoint(u);
        for r in 0..dim {
            let row = r * dim;
            for c in 0..dim {
                if c & bit != 0 {
                    continue;
                }
                let a0 = data[row + c];
                let a1 = data[row + (c | bit)];
                data[row + c] = a0 * v[0][0] + a1 * v[1][0];
                data[row + (c | bit)] = a0 * v[0][1] + a1 * v[1][1];
            }
        }
    }
    out
}

/// Dense matrix of a product unitary.
pub fn layer_operator(layer: &[Mat2]) -> Operator {
    let mut acc = Array2::from_elem((1, 1), ONE);
    for u in layer {
        let m = Array2::from_shape_fn((2, 2), |(i, j)| u[i][j]);
        acc = ndarray::linalg::kron(&acc, &m);
    }
    Operator::from_matrix_unchecked(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{embed, pauli, Axis};

    #[test]
    fn eigenbases_diagonalize_paulis() {
        let z = Axis::Z.matrix();
        for axis in Axis::ALL {
            let b = eigenbasis(axis);
            let back = mat2_mul(&mat2_mul(&b, &z), &mat2_adjoint(&b));
            let want = axis.matrix();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((back[i][j] - want[i][j]).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn site_application_matches_embedding() {
        let n = 3;
        let psi: Array1<C64> = (0..8).map(|k| C64::new(k as f64, 1.0 - k as f64)).collect();
        for site in 1..=n {
            let dense = embed(&pauli(Axis::Y), site, n).unwrap().apply(&psi);
            let mut fast = psi.clone();
            apply_site(fast.as_slice_mut().unwrap(), n, site, &Axis::Y.matrix());
            assert!((&dense - &fast).iter().all(|z| z.norm() < 1e-14));
        }
    }

    #[test]
    fn layer_conjugation_matches_dense() {
        let layer = vec![spin_rotation([1.0, 0.0, 0.0], 0.3), eigenbasis(Axis::Y), spin_rotation([0.0, 0.6, 0.8], 1.1)];
        let u = layer_operator(&layer);
        let rho = Array2::from_shape_fn((8, 8), |(i, j)| C64::new((i * j) as f64, i as f64 - j as f64));
        let dense = u.matrix().dot(&rho).dot(&u.adjoint().into_matrix());
        let fast = conjugate_by_layer(&rho, &layer);
        assert!((&dense - &fast).iter().all(|z| z.norm() < 1e-12));
    }
}
