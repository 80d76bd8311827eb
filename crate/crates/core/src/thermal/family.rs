use ndarray::Array1;

use crate::error::Result;
use crate::linalg::{HermitianEigen, Operator, Spectrum, C64};

/// Exponential family `rho(theta) = exp(sum_i theta_i B_i) / Z(theta)`.
pub trait GibbsFamily {
    /// Number of natural parameters.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `log Z(theta)` and the expectations `<B_i>`.
    fn moments(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)>;

    /// Smallest and largest eigenvalue of each `B_i`.
    fn ranges(&self) -> Vec<(f64, f64)>;
}

/// Stable `log sum exp` with the maximum returned for reuse.
pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.map(|v| (v - max).exp()).sum();
    (max + sum.ln(), max)
}

/// Generic family over dense operators; one eigendecomposition per evaluation.
pub struct DenseFamily {
    observables: Vec<Operator>,
    ranges: Vec<(f64, f64)>,
}

impl DenseFamily {
    pub fn new(observables: Vec<Operator>) -> Result<Self> {
        let mut ranges = Vec::with_capacity(observables.len());
        for b in &observables {
            let ev = b.eigh()?.values;
            ranges.push((ev[0], ev[ev.len() - 1]));
        }
        Ok(Self { observables, ranges })
    }

    pub fn observables(&self) -> &[Operator] {
        &self.observables
    }

    /// Eigendecomposition of `sum_i theta_i B_i` and the normalized weights.
    pub fn decompose(&self, theta: &[f64]) -> Result<(HermitianEigen, Array1<f64>, f64)> {
        let dim = self.observables[0].dim();
        let mut k = Operator::zeros(dim.trailing_zeros() as usize);
        for (b, &t) in self.observables.iter().zip(theta) {
            if t != 0.0 {
                k = &k + &(b * t);
            }
        }
        let eigen = k.hermitian_part().eigh()?;
        let (log_z, _) = log_sum_exp(eigen.values.iter().cloned());
        let probs = eigen.values.mapv(|e| (e - log_z).exp());
        Ok((eigen, probs, log_z))
    }
}

impl GibbsFamily for DenseFamily {
    fn len(&self) -> usize {
        self.observables.len()
    }

    fn moments(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (eigen, probs, log_z) = self.decompose(theta)?;
        let means = self
            .observables
            .iter()
            .map(|b| {
                // <B> = sum_k p_k <v_k|B|v_k>
                let bv = b.matrix().dot(&eigen.vectors);
                let mut acc = 0.0;
                for k in 0..probs.len() {
                    if probs[k] < 1e-300 {
                        continue;
                    }
                    let col = eigen.vectors.column(k);
                    let d: C64 = col.iter().zip(bv.column(k).iter()).map(|(a, b)| a.conj() * b).sum();
                    acc += probs[k] * d.re;
                }
                acc
            })
            .collect();
        Ok((log_z, means))
    }

    fn ranges(&self) -> Vec<(f64, f64)> {
        self.ranges.clone()
    }
}

/// `log` of the unnormalized weights `exp(-beta E + field m)` per sector,
/// where `m` is the `S_z^tot` eigenvalue.
pub(crate) fn sector_exponents(spectrum: &Spectrum, beta: f64, field: f64) -> Vec<Array1<f64>> {
    let n = spectrum.n_qubits();
    spectrum
        .sectors()
        .iter()
        .map(|s| {
            let m = s.magnetization(n).map_or(0.0, |mz| mz / 2.0);
            s.eigen.values.mapv(|e| -beta * e + field * m)
        })
        .collect()
}

pub(crate) fn normalize_exponents(exps: &[Array1<f64>]) -> (f64, Vec<Array1<f64>>) {
    let (log_z, _) = log_sum_exp(exps.iter().flat_map(|a| a.iter().cloned()));
    let probs = exps.iter().map(|a| a.mapv(|x| (x - log_z).exp())).collect();
    (log_z, probs)
}

/// Families whose observables are diagonal in the sector eigenbasis:
/// `B_0 = -H` and optionally `B_1 = S_z^tot`.
pub struct SectorFamily<'a> {
    spectrum: &'a Spectrum,
    with_sz: bool,
}

impl<'a> SectorFamily<'a> {
    /// `with_sz` requires a magnetization-resolved spectrum.
    pub fn new(spectrum: &'a Spectrum, with_sz: bool) -> Result<Self> {
        if with_sz && !spectrum.conserves_magnetization() {
            return Err(crate::error::invalid("spectrum", "S_z constraint needs magnetization sectors"));
        }
        Ok(Self { spectrum, with_sz })
    }
}

fn energy_range(spectrum: &Spectrum) -> (f64, f64) {
    let e = spectrum.energies();
    (-e[e.len() - 1], -e[0])
}

impl GibbsFamily for SectorFamily<'_> {
    fn len(&self) -> usize {
        if self.with_sz {
            2
        } else {
            1
        }
    }

    fn moments(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let field = if self.with_sz { theta[1] } else { 0.0 };
        let exps = sector_exponents(self.spectrum, theta[0], field);
        let (log_z, probs) = normalize_exponents(&exps);
        let n = self.spectrum.n_qubits();
        let (mut e_mean, mut m_mean) = (0.0, 0.0);
        for (s, p) in self.spectrum.sectors().iter().zip(&probs) {
            let m = s.magnetization(n).unwrap_or(0.0) / 2.0;
            for (pk, ek) in p.iter().zip(s.eigen.values.iter()) {
                e_mean += pk * ek;
                m_mean += pk * m;
            }
        }
        let mut means = vec![-e_mean];
        if self.with_sz {
            means.push(m_mean);
        }
        Ok((log_z, means))
    }

    fn ranges(&self) -> Vec<(f64, f64)> {
        let half = self.spectrum.n_qubits() as f64 / 2.0;
        let mut r = vec![energy_range(self.spectrum)];
        if self.with_sz {
            r.push((-half, half));
        }
        r
    }
}

/// Isotropic Hamiltonians with `B = (-H, S_x, S_y, S_z)`: the exponent
/// `-beta H + lambda . S` is a global rotation of `-beta H + |lambda| S_z`,
/// so the magnetization-sector spectrum suffices.
pub struct IsotropicFamily<'a> {
    spectrum: &'a Spectrum,
}

impl<'a> IsotropicFamily<'a> {
    pub fn new(spectrum: &'a Spectrum) -> Result<Self> {
        SectorFamily::new(spectrum, true)?;
        Ok(Self { spectrum })
    }
}

impl GibbsFamily for IsotropicFamily<'_> {
    fn len(&self) -> usize {
        4
    }

    fn moments(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let lambda = [theta[1], theta[2], theta[3]];
        let r = lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (log_z, means) = SectorFamily { spectrum: self.spectrum, with_sz: true }.moments(&[theta[0], r])?;
        let mut out = vec![means[0]];
        for l in lambda {
            out.push(if r > 0.0 { means[1] * l / r } else { 0.0 });
        }
        Ok((log_z, out))
    }

    fn ranges(&self) -> Vec<(f64, f64)> {
        let half = self.spectrum.n_qubits() as f64 / 2.0;
        vec![energy_range(self.spectrum), (-half, half), (-half, half), (-half, half)]
    }
}
