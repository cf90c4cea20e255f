//! Marquardt maximization with a diagonal-inflated Hessian.
//!
//! Sign convention: the objective `L` is maximized, and every Hessian
//! stored or returned here is the Hessian of `−L`, so the covariance of
//! the estimates is its inverse.

pub mod init;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::diff::gradient_and_hessian_with_value;
use crate::numerics::linalg::is_positive_definite;
use crate::numerics::CholeskyFactor;

pub use init::{init_default, init_from_lower, init_random};

/// Thresholds of the three stopping criteria and the iteration cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceSettings {
    /// Parameter criterion `Σ Δθ²`.
    pub eps_a: f64,
    /// Likelihood criterion `|ΔL|`.
    pub eps_b: f64,
    /// Derivative criterion `g'H⁻¹g / n`.
    pub eps_d: f64,
    pub maxiter: usize,
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        Self {
            eps_a: 1e-4,
            eps_b: 1e-4,
            eps_d: 1e-4,
            maxiter: 100,
        }
    }
}

impl ConvergenceSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_a > 0.0 && self.eps_b > 0.0 && self.eps_d > 0.0) {
            return Err(Error::InvalidArgument("convergence thresholds must be positive".into()));
        }
        Ok(())
    }
}

/// Values of the three stopping criteria.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Criteria {
    pub parameters: f64,
    pub likelihood: f64,
    pub derivatives: f64,
}

impl Criteria {
    pub fn satisfied(&self, s: &ConvergenceSettings) -> bool {
        self.parameters <= s.eps_a && self.likelihood <= s.eps_b && self.derivatives <= s.eps_d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub theta: Vec<f64>,
    pub loglik: f64,
    /// Accepted steps.
    pub iterations: usize,
    pub criteria: Criteria,
    pub converged: bool,
    /// The line search found no improving step at the last iteration.
    pub stalled: bool,
    /// Whether the derivative criterion used the inflated Hessian.
    pub inflated_for_criterion: bool,
    /// Free-parameter mask (`true` = estimated).
    pub free: Vec<bool>,
    /// Hessian of `−L` over the free parameters at the final point.
    pub hessian: DMatrix<f64>,
    /// Objective after each accepted step, starting with the initial one.
    pub trace: Vec<f64>,
}

/// State of the inflation schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inflation {
    pub lambda: f64,
    pub eta: f64,
}

impl Default for Inflation {
    fn default() -> Self {
        Self { lambda: 0.01, eta: 0.01 }
    }
}

const LAMBDA_MIN: f64 = 1e-12;
const LAMBDA_MAX: f64 = 1e12;
const ETA_MAX: f64 = 0.5;
const MAX_HALVINGS: usize = 30;

/// One application of the inflation formula.
pub fn inflate_once(h: &DMatrix<f64>, lambda: f64, eta: f64) -> DMatrix<f64> {
    let tr = h.trace().abs();
    let mut out = h.clone();
    for i in 0..h.nrows() {
        out[(i, i)] += lambda * ((1.0 - eta) * h[(i, i)].abs() + eta * tr);
    }
    out
}

/// Returns `h` when positive definite (and relaxes the schedule),
/// otherwise inflates the diagonal with an escalating schedule until it
/// is. Also reports whether inflation was applied.
pub fn inflate_hessian(h: &DMatrix<f64>, state: &mut Inflation) -> Result<(DMatrix<f64>, bool)> {
    if is_positive_definite(h) {
        state.lambda = (state.lambda / 10.0).max(LAMBDA_MIN);
        state.eta = (state.eta / 10.0).max(LAMBDA_MIN);
        return Ok((h.clone(), false));
    }
    loop {
        let t = inflate_once(h, state.lambda, state.eta);
        if is_positive_definite(&t) {
            state.lambda = (state.lambda / 10.0).max(LAMBDA_MIN);
            state.eta = (state.eta / 10.0).max(LAMBDA_MIN);
            return Ok((t, true));
        }
        if state.lambda >= LAMBDA_MAX {
            return Err(Error::HessianInversion);
        }
        state.lambda = (state.lambda * 10.0).min(LAMBDA_MAX);
        state.eta = (state.eta * 10.0).min(ETA_MAX);
    }
}

/// Inverse of the Hessian of `−L`, or `None` when it is not positive
/// definite.
pub fn mle_covariance(h: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let f = CholeskyFactor::decompose(h).ok()?;
    let mut v = f.inverse();
    let n = v.nrows();
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (v[(i, j)] + v[(j, i)]);
            v[(i, j)] = m;
            v[(j, i)] = m;
        }
    }
    Some(v)
}

fn restrict(h: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| h[(idx[i], idx[j])])
}

fn derivative_criterion(g: &DVector<f64>, h: &DMatrix<f64>, inflated: &DMatrix<f64>) -> (f64, bool) {
    let n = g.len().max(1) as f64;
    let (factor, used_inflated) = match CholeskyFactor::decompose(h) {
        Ok(f) => (Some(f), false),
        Err(_) => (CholeskyFactor::decompose(inflated).ok(), true),
    };
    match factor {
        Some(f) => (f.quad_form(g.as_slice()) / n, used_inflated),
        None => (f64::INFINITY, used_inflated),
    }
}

/// Maximizes `f` from `theta0`. `free[i] == false` keeps coordinate `i`
/// at its initial value. `f` returns `None` where it cannot be evaluated.
pub fn marquardt_maximize<F>(
    f: &F,
    theta0: &[f64],
    free: &[bool],
    settings: &ConvergenceSettings,
) -> Result<OptResult>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    settings.validate()?;
    if free.len() != theta0.len() {
        return Err(Error::LengthMismatch {
            expected: theta0.len(),
            got: free.len(),
        });
    }
    let idx: Vec<usize> = (0..free.len()).filter(|&i| free[i]).collect();
    let mut theta = theta0.to_vec();
    let mut value = f(&theta)
        .filter(|v| v.is_finite())
        .ok_or(Error::InitialEvaluation)?;
    let mut trace = vec![value];
    let mut inflation = Inflation::default();
    let mut criteria = Criteria {
        parameters: f64::INFINITY,
        likelihood: f64::INFINITY,
        derivatives: f64::INFINITY,
    };
    let mut iterations = 0;

    loop {
        let (grad, hess) = gradient_and_hessian_with_value(f, &theta, value, Some(free))
            .map_err(|_| Error::InvalidArgument("objective failed at a derivative probe".into()))?;
        let g = DVector::from_iterator(idx.len(), idx.iter().map(|&i| grad[i]));
        let h = -restrict(&hess, &idx);
        let (h_tilde, _) = if idx.is_empty() {
            (h.clone(), false)
        } else {
            inflate_hessian(&h, &mut inflation)?
        };
        let (cd, used_inflated) = derivative_criterion(&g, &h, &h_tilde);
        criteria.derivatives = cd;

        // a point where the raw Hessian is not positive definite is a
        // saddle, not a maximum, even when the criteria are small
        let at_max = idx.is_empty() || (criteria.satisfied(settings) && !used_inflated);
        if (iterations > 0 && at_max) || idx.is_empty() || iterations >= settings.maxiter {
            let converged = at_max;
            return Ok(OptResult {
                theta,
                loglik: value,
                iterations,
                criteria,
                converged,
                stalled: false,
                inflated_for_criterion: used_inflated,
                free: free.to_vec(),
                hessian: h,
                trace,
            });
        }

        let factor = CholeskyFactor::decompose(&h_tilde).map_err(|_| Error::HessianInversion)?;
        let dir = factor.solve(&g);
        let mut delta = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut cand = theta.clone();
            for (a, &i) in idx.iter().enumerate() {
                cand[i] += delta * dir[a];
            }
            if let Some(v) = f(&cand).filter(|v| v.is_finite()) {
                if v > value {
                    accepted = Some((cand, v));
                    break;
                }
            }
            delta *= 0.5;
        }
        match accepted {
            Some((cand, v)) => {
                criteria.parameters = cand.iter().zip(&theta).map(|(a, b)| (a - b) * (a - b)).sum();
                criteria.likelihood = (v - value).abs();
                theta = cand;
                value = v;
                trace.push(v);
                iterations += 1;
            }
            None => {
                // no improving step: the point is a maximum up to FD noise
                criteria.parameters = 0.0;
                criteria.likelihood = 0.0;
                return Ok(OptResult {
                    theta,
                    loglik: value,
                    iterations,
                    criteria,
                    converged: criteria.satisfied(settings) && !used_inflated,
                    stalled: true,
                    inflated_for_criterion: used_inflated,
                    free: free.to_vec(),
                    hessian: h,
                    trace,
                });
            }
        }
    }
}
