use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{expansion_moment_jacobian, expansion_moments, real_roots, series_to_polynomial, Variant};
use crate::error::{PricingError, Result};

const DEGENERATE_VARIANCE: f64 = 1e-14;
const MONOTONE_RANGE: f64 = 8.0;

/// Solved Hermite expansion `J(Z) = Σ α_k H_k(Z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteExpansion {
    pub alpha: Vec<f64>,
    pub variant: Variant,
    pub m: usize,
    pub residual_norm: f64,
    pub iterations: usize,
    pub monotone: bool,
}

impl HermiteExpansion {
    pub fn polynomial(&self) -> super::Polynomial {
        series_to_polynomial(&self.alpha)
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.polynomial().eval(z)
    }

    /// True when every coefficient above `α_0` is zero.
    pub fn is_constant(&self) -> bool {
        self.alpha[1..].iter().all(|a| *a == 0.0)
    }
}

/// Knobs for the damped Newton multistart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restarts: usize,
}

impl Default for MatchSettings {
    fn default() -> Self {
        MatchSettings {
            tolerance: 1e-10,
            max_iterations: 100,
            restarts: 40,
        }
    }
}

/// Solves `E[J^k] = targets[k-1]` for `k = 1..=m`, `m = targets.len()`.
pub fn match_moments(targets: &[f64], variant: Variant) -> Result<HermiteExpansion> {
    match_moments_with(targets, variant, &MatchSettings::default())
}

pub fn match_moments_with(
    targets: &[f64],
    variant: Variant,
    settings: &MatchSettings,
) -> Result<HermiteExpansion> {
    let m = targets.len();
    if !(2..=6).contains(&m) {
        return Err(PricingError::InvalidParameter(format!(
            "expansion order must be between 2 and 6, got {m}"
        )));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(PricingError::Overflow("non-finite target moment".into()));
    }
    let mean = targets[0];
    let central = central_moments(targets);
    let variance = central[2];
    if variance <= DEGENERATE_VARIANCE {
        if variance < -DEGENERATE_VARIANCE * mean.abs().max(1.0) {
            return Err(PricingError::MatchFailure(format!(
                "targets imply negative variance {variance:e}"
            )));
        }
        let mut alpha = vec![0.0; m];
        alpha[0] = mean;
        return Ok(HermiteExpansion {
            alpha,
            variant,
            m,
            residual_norm: 0.0,
            iterations: 0,
            monotone: false,
        });
    }

    let s = variance.sqrt();
    // standardised central targets for k = 2..=m
    let std_targets: Vec<f64> = (2..=m).map(|k| central[k] / s.powi(k as i32)).collect();

    let mut start = vec![0.0; m];
    start[1] = 1.0;
    let mut iterations = 0;
    let accepted = match newton(&start, &std_targets, settings) {
        Outcome::Converged { beta, iters } => {
            iterations += iters;
            Some(beta)
        }
        Outcome::Failed { iters } => {
            iterations += iters;
            let tries: Vec<(usize, Outcome)> = (0..settings.restarts)
                .into_par_iter()
                .map(|idx| {
                    let mut rng = ChaCha8Rng::seed_from_u64(idx as u64);
                    let mut x = start.clone();
                    x[1] *= 1.0 + rng.random_range(-0.5..0.5);
                    let mut fact = 1.0;
                    for (i, xi) in x.iter_mut().enumerate().skip(2) {
                        fact *= i as f64;
                        *xi = rng.random_range(-0.5..0.5) / fact;
                    }
                    (idx, newton(&x, &std_targets, settings))
                })
                .collect();
            iterations += tries.iter().map(|(_, o)| o.iters()).sum::<usize>();
            tries
                .into_iter()
                .filter_map(|(idx, o)| match o {
                    Outcome::Converged { beta, .. } => {
                        let r = std_residual(&beta, &std_targets);
                        Some((r, idx, beta))
                    }
                    Outcome::Failed { .. } => None,
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, _, beta)| beta)
        }
    };

    let Some(mut beta) = accepted else {
        return Err(PricingError::MatchFailure(format!(
            "no solution for order {m} after {} restarts",
            settings.restarts
        )));
    };
    if beta[1] < 0.0 {
        for (i, b) in beta.iter_mut().enumerate() {
            if i % 2 == 1 {
                *b = -*b;
            }
        }
    }
    let mut alpha: Vec<f64> = beta.iter().map(|b| b * s).collect();
    alpha[0] = mean;

    let achieved = expansion_moments(&alpha, m);
    let residual_norm = achieved
        .iter()
        .zip(targets)
        .enumerate()
        .map(|(i, (e, t))| (e - t).abs() / t.abs().max(s.powi(i as i32 + 1)))
        .fold(0.0, f64::max);
    if !(residual_norm <= settings.tolerance) {
        return Err(PricingError::MatchFailure(format!(
            "residual {residual_norm:e} above tolerance after back-transform"
        )));
    }
    let monotone = is_monotone(&alpha);
    Ok(HermiteExpansion {
        alpha,
        variant,
        m,
        residual_norm,
        iterations,
        monotone,
    })
}

/// Central moments `c_0..c_m` of the distribution with raw moments `targets`.
fn central_moments(targets: &[f64]) -> Vec<f64> {
    let m = targets.len();
    let mean = targets[0];
    let raw = |j: usize| if j == 0 { 1.0 } else { targets[j - 1] };
    (0..=m)
        .map(|k| {
            let mut binom = 1.0;
            let mut acc = 0.0;
            for j in 0..=k {
                acc += binom * raw(j) * (-mean).powi((k - j) as i32);
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
            acc
        })
        .collect()
}

fn is_monotone(alpha: &[f64]) -> bool {
    let dp = series_to_polynomial(alpha).derivative();
    if dp.is_zero() || dp.eval(0.0) <= 0.0 {
        return false;
    }
    real_roots(&dp)
        .iter()
        .all(|z| z.abs() > MONOTONE_RANGE)
}

enum Outcome {
    Converged { beta: Vec<f64>, iters: usize },
    Failed { iters: usize },
}

impl Outcome {
    fn iters(&self) -> usize {
        match self {
            Outcome::Converged { iters, .. } | Outcome::Failed { iters } => *iters,
        }
    }
}

fn residual(beta: &[f64], std_targets: &[f64]) -> Vec<f64> {
    let m = beta.len();
    let e = expansion_moments(beta, m);
    (2..=m).map(|k| e[k - 1] - std_targets[k - 2]).collect()
}

fn std_residual(beta: &[f64], std_targets: &[f64]) -> f64 {
    residual(beta, std_targets)
        .iter()
        .zip(std_targets)
        .map(|(r, t)| r.abs() / t.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton in standardised coordinates with `β_0 = 0` held fixed.
fn newton(start: &[f64], std_targets: &[f64], settings: &MatchSettings) -> Outcome {
    let m = start.len();
    let n = m - 1;
    // converge well below the public tolerance so the back-transform keeps headroom
    let inner_tol = settings.tolerance * 1e-3;
    let mut beta = start.to_vec();
    let mut r = residual(&beta, std_targets);
    for iter in 0..settings.max_iterations {
        if !r.iter().all(|x| x.is_finite()) {
            return Outcome::Failed { iters: iter };
        }
        if std_residual(&beta, std_targets) <= inner_tol {
            return Outcome::Converged { beta, iters: iter };
        }
        let jac = expansion_moment_jacobian(&beta, m);
        let a = DMatrix::from_fn(n, n, |row, col| jac[row + 1][col]);
        let b = DVector::from_iterator(n, r.iter().map(|x| -x));
        let Some(step) = a.lu().solve(&b) else {
            return Outcome::Failed { iters: iter + 1 };
        };
        if !step.iter().all(|x| x.is_finite()) {
            return Outcome::Failed { iters: iter + 1 };
        }
        let base = norm(&r);
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda >= 1.0 / 1024.0 {
            let trial: Vec<f64> = beta
                .iter()
                .enumerate()
                .map(|(i, b)| if i == 0 { 0.0 } else { b + lambda * step[i - 1] })
                .collect();
            let tr = residual(&trial, std_targets);
            if norm(&tr) < base {
                beta = trial;
                r = tr;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            // already at the floating-point floor of the residual
            let ok = std_residual(&beta, std_targets) <= inner_tol;
            return if ok {
                Outcome::Converged { beta, iters: iter + 1 }
            } else {
                Outcome::Failed { iters: iter + 1 }
            };
        }
    }
    if std_residual(&beta, std_targets) <= inner_tol {
        Outcome::Converged {
            beta,
            iters: settings.max_iterations,
        }
    } else {
        Outcome::Failed {
            iters: settings.max_iterations,
        }
    }
}
