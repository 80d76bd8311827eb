use std::collections::BTreeMap;
use std::sync::OnceLock;

use ndarray::{Array1, Array2};

use super::local::{apply_layer, eigenbasis, mat2_adjoint, site_bit, Mat2};
use super::operator::{Axis, Operator, C64, I, ONE, ZERO};
use crate::error::{Error, Result};

/// Tensor product of Pauli matrices, stored as X and Z bit masks
/// (`Y = i X Z` on sites present in both masks).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    pub x_mask: usize,
    pub z_mask: usize,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x_mask: 0, z_mask: 0 };

    /// Product of single-site Paulis, e.g. `[(1, X), (3, X)]`.
    pub fn from_sites(factors: &[(usize, Axis)], n: usize) -> Result<Self> {
        let mut s = PauliString::IDENTITY;
        for &(site, axis) in factors {
            if site == 0 || site > n {
                return Err(Error::SiteOutOfRange { site, n });
            }
            let bit = site_bit(n, site);
            if (s.x_mask | s.z_mask) & bit != 0 {
                return Err(Error::InvalidSites(format!("site {site} repeated in Pauli string")));
            }
            match axis {
                Axis::X => s.x_mask |= bit,
                Axis::Z => s.z_mask |= bit,
                Axis::Y => {
                    s.x_mask |= bit;
                    s.z_mask |= bit;
                }
            }
        }
        Ok(s)
    }

    /// `P|b> = phase |target>`.
    #[inline]
    pub fn act(&self, b: usize) -> (usize, C64) {
        let ny = (self.x_mask & self.z_mask).count_ones();
        let flips = (b & self.z_mask).count_ones();
        (b ^ self.x_mask, phase_of(ny + 2 * flips))
    }

    /// The single axis the string is made of, if any.
    pub fn uniform_axis(&self) -> Option<Axis> {
        if self.x_mask == 0 {
            Some(Axis::Z)
        } else if self.z_mask == 0 {
            Some(Axis::X)
        } else if self.x_mask == self.z_mask {
            Some(Axis::Y)
        } else {
            None
        }
    }

    /// Sites touched by the string.
    pub fn support(&self) -> usize {
        self.x_mask | self.z_mask
    }
}

#[inline]
fn phase_of(power_of_i: u32) -> C64 {
    match power_of_i % 4 {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

/// Real linear combination of Pauli strings on `n` qubits.
///
/// Products are evaluated without dense matrices: terms sharing an X mask
/// are folded into one diagonal, so `G|psi>` costs one pass per distinct
/// bit-flip pattern.
#[derive(Debug, Default)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
    flips: OnceLock<Vec<(usize, Vec<C64>)>>,
}

impl Clone for PauliSum {
    fn clone(&self) -> Self {
        Self { n_qubits: self.n_qubits, terms: self.terms.clone(), flips: OnceLock::new() }
    }
}

impl PartialEq for PauliSum {
    fn eq(&self, other: &Self) -> bool {
        self.n_qubits == other.n_qubits && self.terms == other.terms
    }
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, terms: Vec::new(), flips: OnceLock::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, coefficient: f64, string: PauliString) {
        self.terms.push((coefficient, string));
        self.flips = OnceLock::new();
    }

    pub fn with_term(mut self, coefficient: f64, string: PauliString) -> Self {
        self.push(coefficient, string);
        self
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &PauliSum, c: f64) -> Result<PauliSum> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        let mut out = self.clone();
        for &(w, s) in &other.terms {
            out.terms.push((c * w, s));
        }
        Ok(out)
    }

    pub fn scaled(&self, c: f64) -> PauliSum {
        let mut out = PauliSum::new(self.n_qubits);
        out.terms = self.terms.iter().map(|&(w, s)| (c * w, s)).collect();
        out
    }

    /// `sum_j sigma_axis^(j)`.
    pub fn total(axis: Axis, n: usize) -> PauliSum {
        let mut out = PauliSum::new(n);
        for j in 1..=n {
            out.push(1.0, PauliString::from_sites(&[(j, axis)], n).expect("site in range"));
        }
        out
    }

    /// Upper bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|(w, _)| w.abs()).sum()
    }

    /// The common axis of every term, if the sum is built from a single Pauli type.
    pub fn uniform_axis(&self) -> Option<Axis> {
        [Axis::Z, Axis::X, Axis::Y].into_iter().find(|&axis| self.terms.iter().all(|(_, s)| *s == PauliString::IDENTITY || s.uniform_axis() == Some(axis)))
    }

    fn flip_groups(&self) -> &[(usize, Vec<C64>)] {
        self.flips.get_or_init(|| {
            let dim = self.dim();
            let mut groups: BTreeMap<usize, Vec<C64>> = BTreeMap::new();
            for &(w, s) in &self.terms {
                let diag = groups.entry(s.x_mask).or_insert_with(|| vec![ZERO; dim]);
                for (b, d) in diag.iter_mut().enumerate() {
                    *d += s.act(b).1 * w;
                }
            }
            groups.into_iter().filter(|(_, d)| d.iter().any(|z| *z != ZERO)).collect()
        })
    }

    /// Matrix element structure: for each X mask, `G|b> += diag[b] |b ^ mask>`.
    pub fn flip_diagonals(&self) -> impl Iterator<Item = (usize, &[C64])> {
        self.flip_groups().iter().map(|(m, d)| (*m, d.as_slice()))
    }

    pub fn apply(&self, psi: &Array1<C64>) -> Array1<C64> {
        assert_eq!(psi.len(), self.dim(), "state dimension does not match operator");
        let mut out = Array1::zeros(psi.len());
        self.apply_into(psi.as_slice().expect("contiguous"), out.as_slice_mut().expect("contiguous"));
        out
    }

    pub(crate) fn apply_into(&self, psi: &[C64], out: &mut [C64]) {
        for (mask, diag) in self.flip_groups() {
            for b in 0..psi.len() {
                out[b ^ mask] += diag[b] * psi[b];
            }
        }
    }

    pub fn expectation(&self, psi: &Array1<C64>) -> f64 {
        let g = self.apply(psi);
        psi.iter().zip(g.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// `Tr(G rho)` for a dense `rho`.
    pub fn expectation_density(&self, rho: &Array2<C64>) -> f64 {
        let mut acc = ZERO;
        for (mask, diag) in self.flip_groups() {
            for b in 0..rho.nrows() {
                // <b^m| G |b> rho[b, b^m]
                acc += diag[b] * rho[[b, b ^ mask]];
            }
        }
        acc.re
    }

    pub fn to_operator(&self) -> Operator {
        let dim = self.dim();
        let mut mat = Array2::zeros((dim, dim));
        for (mask, diag) in self.flip_groups() {
            for b in 0..dim {
                mat[[b ^ mask, b]] += diag[b];
            }
        }
        Operator::from_matrix_unchecked(mat)
    }

    /// `exp(-i t G) psi`.
    pub fn exp_apply(&self, psi: &Array1<C64>, t: f64) -> Array1<C64> {
        if t == 0.0 || self.terms.is_empty() {
            return psi.clone();
        }
        match self.uniform_axis() {
            Some(axis) => self.exp_apply_uniform(psi, t, axis),
            None => self.exp_apply_taylor(psi, t),
        }
    }

    /// Sums of a single Pauli type are diagonal after a product basis change.
    fn exp_apply_uniform(&self, psi: &Array1<C64>, t: f64, axis: Axis) -> Array1<C64> {
        let n = self.n_qubits;
        let mut phases = vec![0.0f64; self.dim()];
        for &(w, s) in &self.terms {
            let mask = s.support();
            for (b, p) in phases.iter_mut().enumerate() {
                *p += if (b & mask).count_ones() % 2 == 0 { w } else { -w };
            }
        }
        let basis = eigenbasis(axis);
        let to_z: Vec<Mat2> = vec![mat2_adjoint(&basis); n];
        let from_z: Vec<Mat2> = vec![basis; n];
        let mut out = psi.clone();
        let data = out.as_slice_mut().expect("contiguous");
        if axis != Axis::Z {
            apply_layer(data, &to_z);
        }
        for (a, p) in data.iter_mut().zip(&phases) {
            *a *= C64::from_polar(1.0, -p * t);
        }
        if axis != Axis::Z {
            apply_layer(data, &from_z);
        }
        out
    }

    /// Scaled Taylor series; each chunk keeps `|t| * bound <= 3`.
    fn exp_apply_taylor(&self, psi: &Array1<C64>, t: f64) -> Array1<C64> {
        let chunks = ((self.norm_bound() * t.abs()) / 3.0).ceil().max(1.0) as usize;
        let tau = t / chunks as f64;
        let mut v = psi.clone();
        let mut term = Array1::zeros(psi.len());
        let mut next = Array1::<C64>::zeros(psi.len());
        for _ in 0..chunks {
            term.assign(&v);
            let v_norm = norm2(&v);
            for k in 1..80 {
                next.fill(ZERO);
                self.apply_into(term.as_slice().unwrap(), next.as_slice_mut().unwrap());
                let factor = C64::new(0.0, -tau / k as f64);
                term.zip_mut_with(&next, |a, b| *a = b * factor);
                v += &term;
                if norm2(&term) < 1e-16 * v_norm {
                    break;
                }
            }
        }
        v
    }
}

pub(crate) fn norm2(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
