//! Damped least-squares fit of `df(P) = df0 / sqrt(1 + beta P)`.
//!
//! Both parameters are optimized as logarithms so they stay positive. The
//! damping term is Marquardt-scaled by the diagonal of the normal matrix.

use crate::error::{Error, Result};
use crate::oscillator::SoftPullModel;
use crate::signal::dbm_to_mw;

use super::track::PeakTrack;

/// `beta * P_max` below this is indistinguishable from no pulling.
const BETA_FLOOR: f64 = 1e-6;
const BETA_CEIL: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Weight each point by `1 / linewidth^2`.
    pub weighted: bool,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            weighted: false,
            max_iterations: 200,
            rel_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdlerFit {
    pub delta_f0_hat: f64,
    pub beta_hat: f64,
    /// Covariance of `(delta_f0, beta)` in Hz and 1/mW.
    pub covariance: [[f64; 2]; 2],
    pub residual_rms: f64,
    pub n_iterations: usize,
    pub converged: bool,
    /// beta was driven to the lower bound: the track shows no resolvable pulling.
    pub beta_at_lower_bound: bool,
    /// Cost after the initial guess and after every accepted step.
    pub cost_history: Vec<f64>,
}

impl AdlerFit {
    pub fn model(&self) -> Result<SoftPullModel> {
        SoftPullModel::new(self.delta_f0_hat, self.beta_hat)
    }

    pub fn predict(&self, p_dbm: f64) -> f64 {
        self.delta_f0_hat / (1.0 + self.beta_hat * dbm_to_mw(p_dbm)).sqrt()
    }
}

struct Problem {
    p_mw: Vec<f64>,
    f: Vec<f64>,
    sqrt_w: Vec<f64>,
}

impl Problem {
    /// Weighted residuals and log-parameter Jacobian rows.
    fn evaluate(&self, x: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let (d0, beta) = (x[0].exp(), x[1].exp());
        let mut r = Vec::with_capacity(self.f.len());
        let mut jac = Vec::with_capacity(self.f.len());
        for ((&p, &f), &sw) in self.p_mw.iter().zip(&self.f).zip(&self.sqrt_w) {
            let q = 1.0 + beta * p;
            let m = d0 / q.sqrt();
            r.push(sw * (m - f));
            jac.push([sw * m, sw * (-0.5 * m * beta * p / q)]);
        }
        (r, jac)
    }

    fn cost(&self, x: [f64; 2]) -> f64 {
        0.5 * self.evaluate(x).0.iter().map(|v| v * v).sum::<f64>()
    }
}

fn normal_equations(r: &[f64], jac: &[[f64; 2]]) -> ([[f64; 2]; 2], [f64; 2]) {
    let mut a = [[0.0; 2]; 2];
    let mut g = [0.0; 2];
    for (ri, ji) in r.iter().zip(jac) {
        for p in 0..2 {
            g[p] += ji[p] * ri;
            for q in 0..2 {
                a[p][q] += ji[p] * ji[q];
            }
        }
    }
    (a, g)
}

/// Moore-Penrose inverse of a symmetric 2x2 matrix.
fn sym_pinv(a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let (p, q, r) = (a[0][0], a[0][1], a[1][1]);
    let mean = 0.5 * (p + r);
    let rad = (0.25 * (p - r).powi(2) + q * q).sqrt();
    let evals = [mean + rad, mean - rad];
    let evecs = if q.abs() > 1e-300 {
        let v1 = [evals[0] - r, q];
        let v2 = [evals[1] - r, q];
        let n1 = (v1[0] * v1[0] + v1[1] * v1[1]).sqrt();
        let n2 = (v2[0] * v2[0] + v2[1] * v2[1]).sqrt();
        [[v1[0] / n1, v1[1] / n1], [v2[0] / n2, v2[1] / n2]]
    } else if p >= r {
        [[1.0, 0.0], [0.0, 1.0]]
    } else {
        [[0.0, 1.0], [1.0, 0.0]]
    };
    let tol = evals[0].abs() * 1e-12;
    let mut out = [[0.0; 2]; 2];
    for k in 0..2 {
        if evals[k].abs() > tol && evals[k] > 0.0 {
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] += evecs[k][i] * evecs[k][j] / evals[k];
                }
            }
        }
    }
    out
}

pub fn fit_adler_model(track: &PeakTrack) -> Result<AdlerFit> {
    fit_adler_model_with(track, FitOptions::default())
}

pub fn fit_adler_model_with(track: &PeakTrack, opts: FitOptions) -> Result<AdlerFit> {
    let n = track.len();
    if n < 5 {
        return Err(Error::invalid(format!(
            "fit needs at least 5 points, got {n}"
        )));
    }
    let p_mw: Vec<f64> = track.p_inj_dbm().iter().map(|&p| dbm_to_mw(p)).collect();
    let f = track.f_peak().to_vec();
    let sqrt_w: Vec<f64> = if opts.weighted {
        track.linewidth_3db().iter().map(|w| 1.0 / w).collect()
    } else {
        vec![1.0; n]
    };
    let p_max = p_mw[n - 1];
    let p_min = p_mw[0];
    let bounds = [(BETA_FLOOR / p_max).ln(), (BETA_CEIL / p_min).ln()];
    let clamp = |x: [f64; 2]| [x[0], x[1].clamp(bounds[0], bounds[1])];

    let d0_init = if f[0] > 0.0 {
        f[0]
    } else {
        f.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0)
    };
    let p_half = f
        .iter()
        .zip(&p_mw)
        .find(|(fi, _)| **fi < d0_init / 2.0)
        .map(|(_, p)| *p);
    let beta_init = 3.0 / p_half.unwrap_or(p_max);

    let problem = Problem { p_mw, f, sqrt_w };
    let mut x = clamp([d0_init.ln(), beta_init.ln()]);
    let mut cost = problem.cost(x);
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let (r, jac) = problem.evaluate(x);
        let (a, g) = normal_equations(&r, &jac);
        if cost == 0.0 {
            converged = true;
            break;
        }

        let mut accepted = false;
        while lambda < 1e16 {
            let d = [a[0][0].max(1e-300), a[1][1].max(1e-300)];
            let m = [
                [a[0][0] + lambda * d[0], a[0][1]],
                [a[1][0], a[1][1] + lambda * d[1]],
            ];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det.is_finite() && det != 0.0 {
                let step = [
                    -(m[1][1] * g[0] - m[0][1] * g[1]) / det,
                    -(m[0][0] * g[1] - m[1][0] * g[0]) / det,
                ];
                let trial = clamp([x[0] + step[0], x[1] + step[1]]);
                let trial_cost = problem.cost(trial);
                if trial_cost.is_finite() && trial_cost < cost {
                    let rel = (cost - trial_cost) / cost;
                    x = trial;
                    cost = trial_cost;
                    history.push(cost);
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if rel < opts.rel_tolerance {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !accepted {
            // No descent direction left within the bounds: stationary point.
            converged = true;
        }
        if converged {
            break;
        }
    }

    let (d0, beta) = (x[0].exp(), x[1].exp());
    let (r, _) = problem.evaluate(x);
    let dof = (n - 2) as f64;
    let sigma2 = r.iter().map(|v| v * v).sum::<f64>() / dof;
    let mut a_nat = [[0.0; 2]; 2];
    for ((&p, &sw), _) in problem.p_mw.iter().zip(&problem.sqrt_w).zip(&r) {
        let q = 1.0 + beta * p;
        let j = [sw / q.sqrt(), sw * (-0.5 * d0 * p * q.powf(-1.5))];
        for i in 0..2 {
            for k in 0..2 {
                a_nat[i][k] += j[i] * j[k];
            }
        }
    }
    let inv = sym_pinv(a_nat);
    let covariance = [
        [sigma2 * inv[0][0], sigma2 * inv[0][1]],
        [sigma2 * inv[0][1], sigma2 * inv[1][1]],
    ];
    let residual_rms = (problem
        .p_mw
        .iter()
        .zip(&problem.f)
        .map(|(&p, &fi)| (d0 / (1.0 + beta * p).sqrt() - fi).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();

    Ok(AdlerFit {
        delta_f0_hat: d0,
        beta_hat: beta,
        covariance,
        residual_rms,
        n_iterations: iterations,
        converged,
        beta_at_lower_bound: x[1] <= bounds[0] + 1e-9,
        cost_history: history,
    })
}
