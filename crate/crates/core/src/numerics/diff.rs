//! Finite-difference derivatives of a scalar objective.
//!
//! Steps are `h_v = max(1e-7, 1e-4 |θ_v|)`. Gradients use central
//! differences with probes at `θ ± h_v`; Hessians use forward differences.
//! Probe points are evaluated concurrently and assembled by index, so the
//! result does not depend on scheduling.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// The objective was not finite at one of the probe points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("objective evaluation failed at a finite-difference probe")]
pub struct EvalFailure;

pub fn fd_step(theta: f64) -> f64 {
    (1e-4 * theta.abs()).max(1e-7)
}

fn free_indices(n: usize, mask: Option<&[bool]>) -> Vec<usize> {
    match mask {
        Some(m) => (0..n).filter(|&i| m[i]).collect(),
        None => (0..n).collect(),
    }
}

fn eval_points<F>(f: &F, points: &[Vec<f64>]) -> Result<Vec<f64>, EvalFailure>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    points
        .par_iter()
        .map(|p| f(p).filter(|v| v.is_finite()).ok_or(EvalFailure))
        .collect()
}

fn shifted(theta: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut p = theta.to_vec();
    for &(i, h) in moves {
        p[i] += h;
    }
    p
}

/// Central-difference gradient. Components outside `mask` are zero.
pub fn fd_gradient<F>(f: &F, theta: &[f64], mask: Option<&[bool]>) -> Result<DVector<f64>, EvalFailure>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let idx = free_indices(theta.len(), mask);
    let mut points = Vec::with_capacity(2 * idx.len());
    for &i in &idx {
        let h = fd_step(theta[i]);
        points.push(shifted(theta, &[(i, h)]));
        points.push(shifted(theta, &[(i, -h)]));
    }
    let values = eval_points(f, &points)?;
    let mut g = DVector::zeros(theta.len());
    for (k, &i) in idx.iter().enumerate() {
        let h = fd_step(theta[i]);
        g[i] = (values[2 * k] - values[2 * k + 1]) / (2.0 * h);
    }
    Ok(g)
}

/// Forward-difference Hessian. Rows and columns outside `mask` are zero.
pub fn fd_hessian<F>(f: &F, theta: &[f64], mask: Option<&[bool]>) -> Result<DMatrix<f64>, EvalFailure>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let f0 = f(theta).filter(|v| v.is_finite()).ok_or(EvalFailure)?;
    Ok(gradient_and_hessian_with_value(f, theta, f0, mask)?.1)
}

/// Central-difference gradient and forward-difference Hessian sharing the
/// `θ + h_u e_u` probes. `f0` is the objective at `theta`.
pub fn gradient_and_hessian_with_value<F>(
    f: &F,
    theta: &[f64],
    f0: f64,
    mask: Option<&[bool]>,
) -> Result<(DVector<f64>, DMatrix<f64>), EvalFailure>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let n = theta.len();
    let idx = free_indices(n, mask);
    let m = idx.len();
    let steps: Vec<f64> = idx.iter().map(|&i| fd_step(theta[i])).collect();
    let mut points = Vec::with_capacity(2 * m + m * (m + 1) / 2);
    for (k, &i) in idx.iter().enumerate() {
        points.push(shifted(theta, &[(i, steps[k])]));
        points.push(shifted(theta, &[(i, -steps[k])]));
    }
    for a in 0..m {
        for b in a..m {
            points.push(shifted(theta, &[(idx[a], steps[a]), (idx[b], steps[b])]));
        }
    }
    let values = eval_points(f, &points)?;
    let plus = |k: usize| values[2 * k];
    let minus = |k: usize| values[2 * k + 1];
    let mut g = DVector::zeros(n);
    for k in 0..m {
        g[idx[k]] = (plus(k) - minus(k)) / (2.0 * steps[k]);
    }
    let mut h = DMatrix::zeros(n, n);
    let mut pos = 2 * m;
    for a in 0..m {
        for b in a..m {
            let v = (values[pos] - plus(a) - plus(b) + f0) / (steps[a] * steps[b]);
            h[(idx[a], idx[b])] = v;
            h[(idx[b], idx[a])] = v;
            pos += 1;
        }
    }
    Ok((g, h))
}

/// Central-difference Hessian (four probes per off-diagonal element).
/// More accurate than [`fd_hessian`] at roughly four times the cost.
pub fn fd_hessian_central<F>(f: &F, theta: &[f64], mask: Option<&[bool]>) -> Result<DMatrix<f64>, EvalFailure>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let n = theta.len();
    let idx = free_indices(n, mask);
    let m = idx.len();
    let f0 = f(theta).filter(|v| v.is_finite()).ok_or(EvalFailure)?;
    let steps: Vec<f64> = idx.iter().map(|&i| fd_step(theta[i])).collect();
    let mut points = Vec::new();
    for a in 0..m {
        let (i, ha) = (idx[a], steps[a]);
        points.push(shifted(theta, &[(i, ha)]));
        points.push(shifted(theta, &[(i, -ha)]));
        for b in (a + 1)..m {
            let (j, hb) = (idx[b], steps[b]);
            points.push(shifted(theta, &[(i, ha), (j, hb)]));
            points.push(shifted(theta, &[(i, ha), (j, -hb)]));
            points.push(shifted(theta, &[(i, -ha), (j, hb)]));
            points.push(shifted(theta, &[(i, -ha), (j, -hb)]));
        }
    }
    let values = eval_points(f, &points)?;
    let mut h = DMatrix::zeros(n, n);
    let mut pos = 0;
    for a in 0..m {
        let ha = steps[a];
        h[(idx[a], idx[a])] = (values[pos] - 2.0 * f0 + values[pos + 1]) / (ha * ha);
        pos += 2;
        for b in (a + 1)..m {
            let hb = steps[b];
            let v = (values[pos] - values[pos + 1] - values[pos + 2] + values[pos + 3]) / (4.0 * ha * hb);
            h[(idx[a], idx[b])] = v;
            h[(idx[b], idx[a])] = v;
            pos += 4;
        }
    }
    Ok(h)
}
