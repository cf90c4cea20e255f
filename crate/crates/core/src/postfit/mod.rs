//! Quantities computed from a fitted model.

mod estimates;
mod posterior;
mod predictions;
mod survival;

use nalgebra::DVector;
use rand_distr::StandardNormal;
use rand::Rng;

pub use estimates::{estimates_table, varcov_re, wald_test, EstimateRow, VarCovRow, WaldResult};
pub use posterior::{posterior_probs, postprob_summary, PosteriorTable, PostprobSummary};
pub use predictions::{
    empirical_bayes, fit_outcome_scale, predict_link, predict_trajectory, predictions_residuals, var_explained,
    EmpiricalBayes, Integration, LinkCurveRow, LinkGrid, ObsPrediction, OutcomePrediction, Scale, TrajectoryRow,
};
pub use survival::{cumulative_incidence, dynamic_prediction, DynPredRow, IncidenceRow};

use crate::error::{Error, Result};
use crate::fit::FittedModel;
use crate::numerics::rng::stream;
use crate::numerics::{percentile_band, CholeskyFactor};

/// Default number of parameter draws for percentile bands.
pub const DEFAULT_DRAWS: usize = 2000;

/// Median and 2.5% / 97.5% percentiles over parameter draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Band {
    pub fn from_values(values: &mut [f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let (median, lower, upper) = percentile_band(values);
        Some(Self { median, lower, upper })
    }
}

/// `n` parameter vectors drawn from the asymptotic law `N(θ̂, V̂)` of
/// the estimates; fixed parameters keep their value. Draw `d` only
/// depends on `(seed, d)`.
pub fn draw_parameters(fit: &FittedModel, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let v = fit.cov_free.as_ref().ok_or(Error::NoCovariance)?;
    let idx: Vec<usize> = (0..fit.free.len()).filter(|&i| fit.free[i]).collect();
    // all-zero covariance (everything fixed) gives the estimate back
    let lower = if idx.is_empty() || v.iter().all(|x| *x == 0.0) {
        None
    } else {
        Some(CholeskyFactor::decompose(v)?.lower().clone())
    };
    Ok((0..n)
        .map(|d| {
            let mut theta = fit.theta.clone();
            if let Some(l) = &lower {
                let mut rng = stream(seed, d as u64);
                let z = DVector::from_fn(idx.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let step = l * z;
                for (a, &i) in idx.iter().enumerate() {
                    theta[i] += step[a];
                }
            }
            theta
        })
        .collect())
}

/// Percentile bands of `f` over parameter draws; draws where `f` fails
/// (parameters outside the admissible region) are skipped.
pub(crate) fn bands_over_draws<F>(fit: &FittedModel, draws: usize, seed: u64, len: usize, f: F) -> Result<Vec<Option<Band>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    use rayon::prelude::*;
    let thetas = draw_parameters(fit, draws, seed)?;
    let values: Vec<Option<Vec<f64>>> = thetas.par_iter().map(|t| f(t).ok()).collect();
    let mut out = Vec::with_capacity(len);
    for j in 0..len {
        let mut col: Vec<f64> = values
            .iter()
            .flatten()
            .map(|v| v[j])
            .filter(|x| x.is_finite())
            .collect();
        out.push(Band::from_values(&mut col));
    }
    Ok(out)
}
