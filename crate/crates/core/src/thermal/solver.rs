use ndarray::{Array1, Array2};

use super::family::GibbsFamily;
use crate::error::{invalid, Error, Result};

/// Relative noise floor of the dual objective.
pub const ROUNDOFF: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Largest allowed `|<B_i> - t_i|`, relative to the half-width of `B_i`'s spectrum.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 500 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub theta: Vec<f64>,
    /// Scaled constraint violation at `theta`.
    pub residual: f64,
    pub iterations: usize,
    /// Dual objective `log Z - theta . t` at every accepted iterate;
    /// non-increasing up to `ROUNDOFF` relative.
    pub history: Vec<f64>,
}

/// Strict interior of each observable's spectral range, with a relative margin.
fn check_achievable(ranges: &[(f64, f64)], targets: &[f64]) -> Result<()> {
    for (i, (&(lo, hi), &t)) in ranges.iter().zip(targets).enumerate() {
        let margin = 1e-9 * (hi - lo).max(1e-300);
        if hi - lo <= 0.0 {
            if (t - lo).abs() > 1e-12 * lo.abs().max(1.0) {
                return Err(Error::Unachievable { index: i, target: t, min: lo, max: hi });
            }
        } else if !(t > lo + margin && t < hi - margin) {
            return Err(Error::Unachievable { index: i, target: t, min: lo, max: hi });
        }
    }
    Ok(())
}

/// Minimizes the convex dual `log Z(theta) - theta . targets` with BFGS and an
/// Armijo backtracking line search, starting at `theta = 0`.
///
/// Variables are rescaled by each observable's spectral half-width so that
/// energy and spin multipliers are comparable.
pub fn solve_dual(family: &dyn GibbsFamily, targets: &[f64], opts: &SolverOptions) -> Result<DualSolution> {
    let k = family.len();
    if targets.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: targets.len() });
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(invalid("targets", "must be finite"));
    }
    let ranges = family.ranges();
    check_achievable(&ranges, targets)?;
    let scale: Vec<f64> = ranges.iter().map(|&(lo, hi)| if hi > lo { (hi - lo) / 2.0 } else { 1.0 }).collect();

    let eval = |u: &Array1<f64>| -> Result<(f64, Array1<f64>)> {
        let theta: Vec<f64> = (0..k).map(|i| u[i] / scale[i]).collect();
        let (log_z, means) = family.moments(&theta)?;
        let f = log_z - theta.iter().zip(targets).map(|(a, b)| a * b).sum::<f64>();
        let g = Array1::from_shape_fn(k, |i| (means[i] - targets[i]) / scale[i]);
        Ok((f, g))
    };
    let norm_inf = |g: &Array1<f64>| g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let finish = |u: &Array1<f64>, residual, iterations, history| DualSolution {
        theta: (0..k).map(|i| u[i] / scale[i]).collect(),
        residual,
        iterations,
        history,
    };

    let mut u = Array1::<f64>::zeros(k);
    let (mut f, mut g) = eval(&u)?;
    let mut history = vec![f];
    let mut hinv = Array2::<f64>::eye(k);
    let mut fresh = true;
    for iter in 0..opts.max_iter {
        let res = norm_inf(&g);
        if res <= opts.tol {
            return Ok(finish(&u, res, iter, history));
        }
        let mut p = -hinv.dot(&g);
        let mut slope = g.dot(&p);
        if slope >= 0.0 {
            hinv = Array2::eye(k);
            p = -g.clone();
            slope = g.dot(&p);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &u + &(&p * step);
            let (ft, gt) = eval(&trial)?;
            let armijo = ft <= f + 1e-4 * step * slope;
            // Near the optimum the decrease drops below the roundoff of f;
            // then require a flat objective and a smaller gradient instead.
            let flat = ft <= f + ROUNDOFF * f.abs().max(1.0) && norm_inf(&gt) < (1.0 - 1e-3) * res;
            if ft.is_finite() && (armijo || flat) {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((u_new, f_new, g_new)) = accepted else {
            // Converged to roundoff: accept if the gradient is already tiny.
            if res <= opts.tol * 1e3 {
                return Ok(finish(&u, res, iter, history));
            }
            return Err(Error::NoConvergence { iterations: iter, residual: res });
        };
        let s = &u_new - &u;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            if fresh {
                hinv = Array2::eye(k) * (sy / y.dot(&y));
                fresh = false;
            }
            let rho = 1.0 / sy;
            let hy = hinv.dot(&y);
            let yhy = y.dot(&hy);
            // H+ = H - rho (H y s^T + s y^T H) + (rho^2 y^T H y + rho) s s^T
            for i in 0..k {
                for j in 0..k {
                    hinv[[i, j]] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        u = u_new;
        f = f_new;
        g = g_new;
        history.push(f);
    }
    let res = norm_inf(&g);
    if res <= opts.tol {
        Ok(finish(&u, res, opts.max_iter, history))
    } else {
        Err(Error::NoConvergence { iterations: opts.max_iter, residual: res })
    }
}
