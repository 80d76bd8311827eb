//! Global depolarization, per-site dephasing and their application schedules.

use ndarray::Array2;

use crate::error::{invalid, Result};
use crate::linalg::{DensityMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseChannel {
    /// `rho -> (1 - p) rho + p 1/2^n`.
    Depolarize(f64),
    /// Per-site `rho -> (1 - p) rho + p Z rho Z`.
    Dephase(f64),
}

impl NoiseChannel {
    pub fn probability(&self) -> f64 {
        match *self {
            NoiseChannel::Depolarize(p) | NoiseChannel::Dephase(p) => p,
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        match *self {
            NoiseChannel::Depolarize(p) => depolarize(rho, p),
            NoiseChannel::Dephase(p) => dephase(rho, p),
        }
    }
}

/// A channel applied every `interval` seconds of wall-clock time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSchedule {
    channel: NoiseChannel,
    interval: f64,
}

impl NoiseSchedule {
    pub fn new(channel: NoiseChannel, interval: f64) -> Result<Self> {
        check_probability(channel.probability())?;
        if !(interval.is_finite() && interval > 0.0) {
            return Err(invalid("interval", format!("{interval} must be positive")));
        }
        Ok(Self { channel, interval })
    }

    pub fn channel(&self) -> NoiseChannel {
        self.channel
    }

    pub fn interval(&self) -> f64 {
        self.interval
    }

    /// Number of applications at wall-clock times `<= t`.
    pub fn applications_by(&self, t: f64) -> usize {
        (t / self.interval * (1.0 + 1e-12) + 1e-12).floor().max(0.0) as usize
    }

    /// Application times in `(0, t_end]`.
    pub fn times_until(&self, t_end: f64) -> Vec<f64> {
        (1..=self.applications_by(t_end)).map(|k| k as f64 * self.interval).collect()
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid("p", format!("{p} outside [0, 1]")))
    }
}

pub fn depolarize(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    check_probability(p)?;
    let d = rho.dim();
    let mut m = rho.matrix() * C64::new(1.0 - p, 0.0);
    for i in 0..d {
        m[[i, i]] += C64::new(p / d as f64, 0.0);
    }
    Ok(DensityMatrix::from_trusted(m))
}

/// Weight left on the initial state after `k` depolarizing applications.
pub fn surviving_weight(p: f64, k: usize) -> f64 {
    (1.0 - p).powi(k as i32)
}

/// Each site dephases independently, so coherences between basis states
/// differing on `m` sites shrink by `(1 - 2p)^m`.
pub fn dephase(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    check_probability(p)?;
    let shrink = 1.0 - 2.0 * p;
    let n = rho.n_qubits();
    let factors: Vec<f64> = (0..=n).map(|m| shrink.powi(m as i32)).collect();
    let m = Array2::from_shape_fn(rho.matrix().dim(), |(a, b)| rho.matrix()[[a, b]] * factors[(a ^ b).count_ones() as usize]);
    Ok(DensityMatrix::from_trusted(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{embed, pauli, random::random_density, Axis};
    use rand::SeedableRng;

    #[test]
    fn depolarizing_limits_and_composition() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(3, 2, &mut rng);
        assert_eq!(depolarize(&rho, 0.0).unwrap(), rho);
        let full = depolarize(&rho, 1.0).unwrap();
        assert!((full.matrix() - DensityMatrix::maximally_mixed(3).matrix()).iter().all(|z| z.norm() < 1e-15));
        let p = 0.2;
        let twice = depolarize(&depolarize(&rho, p).unwrap(), p).unwrap();
        let once = depolarize(&rho, 1.0 - (1.0 - p) * (1.0 - p)).unwrap();
        assert!((twice.matrix() - once.matrix()).iter().all(|z| z.norm() < 1e-15));
        assert!(depolarize(&rho, 1.5).is_err());
    }

    #[test]
    fn dephasing_matches_kraus_form() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let rho = random_density(2, 4, &mut rng);
        let p = 0.3;
        let mut expected = rho.to_operator();
        for site in 1..=2 {
            let z = embed(&pauli(Axis::Z), site, 2).unwrap();
            expected = &(&expected * (1.0 - p)) + &(&expected.conjugate_by(&z) * p);
        }
        let got = dephase(&rho, p).unwrap();
        assert!((got.matrix() - expected.matrix()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn schedules() {
        let s = NoiseSchedule::new(NoiseChannel::Depolarize(0.06), 1.5e-3).unwrap();
        assert_eq!(s.applications_by(45e-3), 30);
        assert_eq!(s.applications_by(1.4e-3), 0);
        assert_eq!(s.times_until(4.5e-3).len(), 3);
        assert!(NoiseSchedule::new(NoiseChannel::Dephase(0.1), 0.0).is_err());
        assert!(NoiseSchedule::new(NoiseChannel::Dephase(-0.1), 1.0).is_err());
    }
}
