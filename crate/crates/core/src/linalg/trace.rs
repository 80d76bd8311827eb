use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::local::site_bit;
use super::operator::{Operator, C64, ZERO};
use super::random::haar_vector;
use super::state::DensityMatrix;
use crate::error::{invalid, Error, Result};

/// Index bookkeeping for splitting a chain into kept sites (in the caller's
/// order) and the traced-out rest (in ascending site order).
#[derive(Clone, Debug)]
pub struct SiteSplit {
    kept: Vec<usize>,
    rest: Vec<usize>,
}

impl SiteSplit {
    pub fn new(n: usize, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidSites("keep set is empty".into()));
        }
        let mut seen = 0usize;
        for &site in keep {
            if site == 0 || site > n {
                return Err(Error::SiteOutOfRange { site, n });
            }
            let bit = site_bit(n, site);
            if seen & bit != 0 {
                return Err(Error::InvalidSites(format!("site {site} listed twice")));
            }
            seen |= bit;
        }
        let rest_sites: Vec<usize> = (1..=n).filter(|&s| seen & site_bit(n, s) == 0).collect();
        let kept_masks: Vec<usize> = keep.iter().map(|&s| site_bit(n, s)).collect();
        let rest_masks: Vec<usize> = rest_sites.iter().map(|&s| site_bit(n, s)).collect();
        Ok(Self { kept: offsets(&kept_masks), rest: offsets(&rest_masks) })
    }

    pub fn kept_dim(&self) -> usize {
        self.kept.len()
    }

    pub fn rest_dim(&self) -> usize {
        self.rest.len()
    }

    /// Full basis index of kept configuration `a` and rest configuration `r`.
    #[inline]
    pub fn index(&self, a: usize, r: usize) -> usize {
        self.kept[a] | self.rest[r]
    }
}

/// Offsets of every configuration of the listed bits, first bit most significant.
fn offsets(masks: &[usize]) -> Vec<usize> {
    let k = masks.len();
    (0..1usize << k)
        .map(|a| {
            masks.iter().enumerate().fold(0, |acc, (i, m)| if a >> (k - 1 - i) & 1 == 1 { acc | m } else { acc })
        })
        .collect()
}

pub(crate) fn partial_trace_matrix(rho: &Array2<C64>, split: &SiteSplit) -> Array2<C64> {
    let kd = split.kept_dim();
    let mut out = Array2::zeros((kd, kd));
    for a in 0..kd {
        for b in 0..kd {
            let mut acc = ZERO;
            for r in 0..split.rest_dim() {
                acc += rho[[split.index(a, r), split.index(b, r)]];
            }
            out[[a, b]] = acc;
        }
    }
    out
}

pub(crate) fn pure_reduced_matrix(psi: &[C64], split: &SiteSplit) -> Array2<C64> {
    let m = Array2::from_shape_fn((split.kept_dim(), split.rest_dim()), |(a, r)| psi[split.index(a, r)]);
    m.dot(&m.t().mapv(|z| z.conj()))
}

/// Reduced state on `keep` (output ordered as `keep`).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    rho.reduced(keep)
}

/// Partial trace of an arbitrary operator.
pub fn partial_trace_operator(op: &Operator, keep: &[usize]) -> Result<Operator> {
    let split = SiteSplit::new(op.n_qubits(), keep)?;
    Operator::new(partial_trace_matrix(op.matrix(), &split))
}

/// Stochastic estimate of `Tr_rest(A A†) / Tr(A A†)` for Hermitian `A` given
/// only its action on vectors (`apply_half(v) = A v`).
///
/// Each sample draws a Haar-random vector `|r>` on the traced-out sites and
/// forms `w_a = A (|a> ⊗ |r>)` for every kept configuration `a`; the Gram
/// matrix `<w_a|w_b>` is an unbiased estimate of the reduced matrix up to
/// normalization.
pub fn stochastic_reduced_state<F>(apply_half: F, n: usize, keep: &[usize], n_samples: usize, seed: u64) -> Result<DensityMatrix>
where
    F: Fn(&Array1<C64>) -> Array1<C64>,
{
    if n_samples == 0 {
        return Err(invalid("n_samples", "at least one sample is required"));
    }
    let split = SiteSplit::new(n, keep)?;
    let (kd, rd) = (split.kept_dim(), split.rest_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Array2::<C64>::zeros((kd, kd));
    let mut w = Array2::<C64>::zeros((kd, 1 << n));
    for _ in 0..n_samples {
        let r = haar_vector(rd, &mut rng);
        for a in 0..kd {
            let mut v = Array1::zeros(1 << n);
            for (ri, amp) in r.iter().enumerate() {
                v[split.index(a, ri)] = *amp;
            }
            w.row_mut(a).assign(&apply_half(&v));
        }
        // M_ab = <w_a|w_b> = <a, r| A†A |b, r>.
        acc += &w.mapv(|z| z.conj()).dot(&w.t());
    }
    DensityMatrix::from_unnormalized(acc)
}
