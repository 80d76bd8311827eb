use ndarray::{s, Array1, Array2};

use super::operator::{eigh_matrix, HermitianEigen, Operator, C64, ZERO};
use super::pauli::PauliSum;
use super::trace::SiteSplit;
use crate::error::{Error, Result};

/// One diagonal block of a Hamiltonian: the basis states it spans and its
/// eigendecomposition within that span.
#[derive(Clone, Debug)]
pub struct Sector {
    /// Number of down spins shared by the block, when blocks follow magnetization.
    pub down_spins: Option<usize>,
    pub basis: Vec<usize>,
    pub eigen: HermitianEigen,
}

impl Sector {
    /// `sigma_z^tot` eigenvalue of the block.
    pub fn magnetization(&self, n: usize) -> Option<f64> {
        self.down_spins.map(|k| n as f64 - 2.0 * k as f64)
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
}

/// Full spectral decomposition of a Hamiltonian, block-diagonal in the
/// magnetization sectors whenever the Hamiltonian conserves `sigma_z^tot`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    n_qubits: usize,
    sectors: Vec<Sector>,
}

impl Spectrum {
    /// Diagonalizes `h`, one magnetization block at a time when possible.
    pub fn new(h: &PauliSum) -> Result<Self> {
        let n = h.n_qubits();
        let dim = h.dim();
        let scale = h.norm_bound().max(1.0);
        let leaks = h.flip_diagonals().any(|(mask, diag)| {
            diag.iter().enumerate().any(|(b, d)| (b ^ mask).count_ones() != b.count_ones() && d.norm() > 1e-14 * scale)
        });
        if leaks {
            return Self::from_dense(&h.to_operator());
        }
        let mut position = vec![0usize; dim];
        let mut sectors = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let basis: Vec<usize> = (0..dim).filter(|b| b.count_ones() as usize == k).collect();
            for (i, &b) in basis.iter().enumerate() {
                position[b] = i;
            }
            let m = basis.len();
            let mut block = Array2::<C64>::zeros((m, m));
            for (mask, diag) in h.flip_diagonals() {
                for (j, &b) in basis.iter().enumerate() {
                    let target = b ^ mask;
                    if target.count_ones() as usize == k {
                        block[[position[target], j]] += diag[b];
                    }
                }
            }
            let eigen = eigh_matrix(&block)?;
            sectors.push(Sector { down_spins: Some(k), basis, eigen });
        }
        Ok(Self { n_qubits: n, sectors })
    }

    /// Single-block decomposition of a dense Hermitian operator.
    pub fn from_dense(h: &Operator) -> Result<Self> {
        let eigen = h.eigh()?;
        Ok(Self { n_qubits: h.n_qubits(), sectors: vec![Sector { down_spins: None, basis: (0..h.dim()).collect(), eigen }] })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn conserves_magnetization(&self) -> bool {
        self.sectors.iter().all(|s| s.down_spins.is_some())
    }

    /// All eigenvalues, ascending.
    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.sectors.iter().flat_map(|s| s.eigen.values.iter().cloned()).collect();
        e.sort_by(|a, b| a.total_cmp(b));
        e
    }

    pub fn bandwidth(&self) -> f64 {
        let e = self.energies();
        e[e.len() - 1] - e[0]
    }

    /// `f(H) psi`, where `f` may also depend on the block's down-spin count.
    pub fn apply_function(&self, psi: &Array1<C64>, f: impl Fn(f64, Option<usize>) -> C64) -> Result<Array1<C64>> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: psi.len() });
        }
        let mut out = Array1::zeros(psi.len());
        for sector in &self.sectors {
            let v = &sector.eigen.vectors;
            let local: Array1<C64> = sector.basis.iter().map(|&b| psi[b]).collect();
            let mut coeffs = v.t().mapv(|z| z.conj()).dot(&local);
            for (c, &e) in coeffs.iter_mut().zip(sector.eigen.values.iter()) {
                *c *= f(e, sector.down_spins);
            }
            let back = v.dot(&coeffs);
            for (&b, a) in sector.basis.iter().zip(back.iter()) {
                out[b] = *a;
            }
        }
        Ok(out)
    }

    /// `exp(-i H t) psi`.
    pub fn evolve(&self, psi: &Array1<C64>, t: f64) -> Result<Array1<C64>> {
        self.apply_function(psi, |e, _| C64::from_polar(1.0, -e * t))
    }

    /// `Tr_rest(sum_k w_k |v_k><v_k|)` with weights indexed like the sector
    /// eigenvalues; the result is not normalized.
    pub fn reduced_mixture(&self, weights: &[Array1<f64>], keep: &[usize]) -> Result<Array2<C64>> {
        if weights.len() != self.sectors.len() {
            return Err(Error::DimensionMismatch { expected: self.sectors.len(), found: weights.len() });
        }
        let split = SiteSplit::new(self.n_qubits, keep)?;
        let (kd, rd) = (split.kept_dim(), split.rest_dim());
        // Map every basis index to its (kept, rest) coordinates.
        let mut coords = vec![(0usize, 0usize); self.dim()];
        for a in 0..kd {
            for r in 0..rd {
                coords[split.index(a, r)] = (a, r);
            }
        }
        let mut out = Array2::<C64>::zeros((kd, kd));
        for (sector, w) in self.sectors.iter().zip(weights) {
            if w.len() != sector.len() {
                return Err(Error::DimensionMismatch { expected: sector.len(), found: w.len() });
            }
            let v = &sector.eigen.vectors;
            let mut m = Array2::<C64>::zeros((kd, rd * sector.len()));
            let mut any = false;
            for (k, &wk) in w.iter().enumerate() {
                if wk == 0.0 {
                    continue;
                }
                any = true;
                let sw = wk.sqrt();
                let mut block = m.slice_mut(s![.., k * rd..(k + 1) * rd]);
                for (i, &b) in sector.basis.iter().enumerate() {
                    let (a, r) = coords[b];
                    block[[a, r]] = v[[i, k]] * sw;
                }
            }
            if any {
                out += &m.dot(&m.t().mapv(|z| z.conj()));
            }
        }
        Ok(out)
    }

    /// Dense `sum_k w_k |v_k><v_k|`.
    pub fn dense_mixture(&self, weights: &[Array1<f64>]) -> Result<Array2<C64>> {
        if weights.len() != self.sectors.len() {
            return Err(Error::DimensionMismatch { expected: self.sectors.len(), found: weights.len() });
        }
        let dim = self.dim();
        let mut out = Array2::<C64>::from_elem((dim, dim), ZERO);
        for (sector, w) in self.sectors.iter().zip(weights) {
            let v = &sector.eigen.vectors;
            let scaled = Array2::from_shape_fn(v.dim(), |(i, k)| v[[i, k]] * w[k]);
            let block = scaled.dot(&v.t().mapv(|z| z.conj()));
            for (i, &bi) in sector.basis.iter().enumerate() {
                for (j, &bj) in sector.basis.iter().enumerate() {
                    out[[bi, bj]] = block[[i, j]];
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Axis, PauliString};

    fn xy_chain(n: usize) -> PauliSum {
        let mut h = PauliSum::new(n);
        for j in 1..n {
            for axis in [Axis::X, Axis::Y] {
                h.push(0.5 + j as f64 * 0.1, PauliString::from_sites(&[(j, axis), (j + 1, axis)], n).unwrap());
            }
            h.push(0.3, PauliString::from_sites(&[(j, Axis::Z)], n).unwrap());
        }
        h
    }

    #[test]
    fn sector_blocks_reproduce_dense_spectrum() {
        let h = xy_chain(5);
        let spec = Spectrum::new(&h).unwrap();
        assert!(spec.conserves_magnetization());
        let dense = h.to_operator().eigh().unwrap().values.to_vec();
        for (a, b) in spec.energies().iter().zip(&dense) {
            assert!((a - b).abs() < 1e-12);
        }
        let psi: Array1<C64> = (0..32).map(|k| C64::new((k as f64 * 0.7).cos(), (k as f64).sin() * 0.2)).collect();
        let fast = spec.evolve(&psi, 0.9).unwrap();
        let slow = h.to_operator().exp_i(0.9).unwrap().apply(&psi);
        assert!((&fast - &slow).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn non_conserving_falls_back_to_dense() {
        let mut h = xy_chain(3);
        h.push(0.4, PauliString::from_sites(&[(2, Axis::X)], 3).unwrap());
        let spec = Spectrum::new(&h).unwrap();
        assert!(!spec.conserves_magnetization());
        assert_eq!(spec.sectors().len(), 1);
    }

    #[test]
    fn mixtures_reduce_consistently() {
        let h = xy_chain(4);
        let spec = Spectrum::new(&h).unwrap();
        let weights: Vec<Array1<f64>> = spec.sectors().iter().map(|s| s.eigen.values.mapv(|e| (-0.7 * e).exp())).collect();
        let dense = spec.dense_mixture(&weights).unwrap();
        let reduced = spec.reduced_mixture(&weights, &[3, 1]).unwrap();
        let split = SiteSplit::new(4, &[3, 1]).unwrap();
        let direct = crate::linalg::trace::partial_trace_matrix(&dense, &split);
        assert!((&reduced - &direct).iter().all(|z| z.norm() < 1e-12));
    }
}
