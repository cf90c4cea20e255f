use nalgebra::{DMatrix, DVector};
use rand_distr::StandardNormal;
use rand::Rng;

use super::{bands_over_draws, posterior_probs, Band};
use crate::error::{Error, Result};
use crate::fit::FittedModel;
use crate::likelihood::Evaluator;
use crate::links::{thresholds_expand, Link, LinkKind};
use crate::model::{SubjectDesign, ValidatedModel};
use crate::numerics::rng::stream;
use crate::numerics::{gauss_hermite, norm_cdf, CholeskyFactor};

/// Empirical Bayes estimates of the random effects.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalBayes {
    pub ids: Vec<String>,
    /// Posterior-weighted estimates.
    pub u: Vec<DVector<f64>>,
    /// `u_class[i][g]`: estimate of subject `i` in class `g`.
    pub u_class: Vec<Vec<DVector<f64>>>,
}

fn require_continuous(model: &ValidatedModel) -> Result<()> {
    if model.layout.shape().links.iter().any(|l| !l.is_continuous()) {
        return Err(Error::Unsupported("random-effect predictions with a thresholds link".into()));
    }
    Ok(())
}

fn class_eb(ev: &Evaluator, s: &SubjectDesign, y: &[f64], g: usize) -> Result<DVector<f64>> {
    let mu = ev.class_mean(s, g);
    let r = DVector::from_iterator(y.len(), y.iter().zip(mu.iter()).map(|(a, b)| a - b));
    let f = CholeskyFactor::decompose(&ev.class_covariance(s, g))?;
    let w = ev.params.omega[g];
    Ok((ev.b() * s.z.transpose() * f.solve(&r)) * (w * w))
}

pub fn empirical_bayes(fit: &FittedModel) -> Result<EmpiricalBayes> {
    require_continuous(&fit.model)?;
    let ev = Evaluator::new(&fit.model, &fit.theta)?;
    let post = posterior_probs(fit)?;
    let ng = fit.model.layout.shape().ng;
    let q = fit.model.layout.shape().q();
    let mut u = Vec::new();
    let mut u_class = Vec::new();
    for (i, s) in fit.model.subjects.iter().enumerate() {
        let (y, _) = ev.transformed_outcomes(s)?;
        let per: Vec<DVector<f64>> = (0..ng).map(|g| class_eb(&ev, s, &y, g)).collect::<Result<_>>()?;
        let mut m = DVector::zeros(q);
        for g in 0..ng {
            m += &per[g] * post.probs[i][g];
        }
        u.push(m);
        u_class.push(per);
    }
    Ok(EmpiricalBayes {
        ids: post.ids,
        u,
        u_class,
    })
}

/// Predictions at one observation of a fitted subject.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsPrediction {
    pub id: String,
    pub marker: usize,
    pub time: f64,
    /// Observed value, transformed by the estimated link for latent
    /// process models.
    pub obs: f64,
    /// Marginal prediction weighted by the prior class probabilities.
    pub pred_m: f64,
    /// Subject-specific prediction weighted by the posterior class
    /// probabilities given the longitudinal data.
    pub pred_ss: f64,
    pub resid_m: f64,
    pub resid_ss: f64,
    pub pred_m_class: Vec<f64>,
    pub pred_ss_class: Vec<f64>,
}

pub fn predictions_residuals(fit: &FittedModel) -> Result<Vec<ObsPrediction>> {
    require_continuous(&fit.model)?;
    let ev = Evaluator::new(&fit.model, &fit.theta)?;
    let post = posterior_probs(fit)?;
    let weights_ss = post.probs_y.as_ref().unwrap_or(&post.probs);
    let ng = fit.model.layout.shape().ng;
    let mut out = Vec::new();
    for (i, s) in fit.model.subjects.iter().enumerate() {
        let (y, _) = ev.transformed_outcomes(s)?;
        let prior = ev.params.class_probs(&s.x_classmb);
        let mut m_class = Vec::with_capacity(ng);
        let mut ss_class = Vec::with_capacity(ng);
        for g in 0..ng {
            let mu = ev.class_mean(s, g);
            let u = class_eb(&ev, s, &y, g)?;
            let ss = &mu + &s.z * u;
            m_class.push(mu);
            ss_class.push(ss);
        }
        for j in 0..s.n_obs() {
            let pm: f64 = (0..ng).map(|g| prior[g] * m_class[g][j]).sum();
            let pss: f64 = (0..ng).map(|g| weights_ss[i][g] * ss_class[g][j]).sum();
            out.push(ObsPrediction {
                id: s.id.clone(),
                marker: s.marker[j],
                time: s.times[j],
                obs: y[j],
                pred_m: pm,
                pred_ss: pss,
                resid_m: y[j] - pm,
                resid_ss: y[j] - pss,
                pred_m_class: (0..ng).map(|g| m_class[g][j]).collect(),
                pred_ss_class: (0..ng).map(|g| ss_class[g][j]).collect(),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Latent,
    Outcome,
}

/// Integration of the link over the Gaussian law of the latent process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integration {
    /// Antithetic Monte Carlo with this many samples.
    MonteCarlo(usize),
    /// 30-node Gauss-Hermite rule at each time separately, which ignores
    /// the correlation between repeated measures.
    GaussHermite,
}

impl Default for Integration {
    fn default() -> Self {
        Self::MonteCarlo(2000)
    }
}

/// Integration nodes and weights for a standard normal variable.
fn standard_nodes(integration: Integration, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    match integration {
        Integration::GaussHermite => {
            let r = gauss_hermite(30)?;
            Ok((r.nodes, r.weights))
        }
        Integration::MonteCarlo(n) => {
            let half = n.div_ceil(2).max(1);
            let mut rng = stream(seed, u64::MAX);
            let mut nodes = Vec::with_capacity(2 * half);
            for _ in 0..half {
                let z: f64 = rng.sample(StandardNormal);
                nodes.push(z);
                nodes.push(-z);
            }
            let w = 1.0 / nodes.len() as f64;
            Ok((nodes.clone(), vec![w; nodes.len()]))
        }
    }
}

/// `E[H(λ)]` for `λ ~ N(mean, var)`.
fn expected_outcome(link: Option<&Link>, eta: &[f64], mean: f64, var: f64, nodes: &(Vec<f64>, Vec<f64>)) -> Result<f64> {
    let Some(link) = link else {
        return Ok(mean);
    };
    let sd = var.max(0.0).sqrt();
    match &link.kind {
        LinkKind::Thresholds { levels, min_level } => {
            let cuts = thresholds_expand(eta);
            let mut v = (*min_level + *levels as i64 - 1) as f64;
            for c in cuts {
                v -= if sd > 0.0 {
                    norm_cdf((c - mean) / sd)
                } else if c >= mean {
                    1.0
                } else {
                    0.0
                };
            }
            Ok(v)
        }
        _ => {
            if sd == 0.0 {
                return link.forward_transform(mean, eta);
            }
            let mut acc = 0.0;
            for (z, w) in nodes.0.iter().zip(&nodes.1) {
                acc += w * link.forward_transform(mean + sd * z, eta)?;
            }
            Ok(acc)
        }
    }
}

/// One predicted value of a covariate profile.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    /// Index of the profile row.
    pub row: usize,
    pub time: f64,
    pub marker: usize,
    pub class: usize,
    pub value: f64,
    pub band: Option<Band>,
}

fn single_design(model: &ValidatedModel, columns: &[String], row: &[f64], marker: usize) -> Result<SubjectDesign> {
    let b = model.design_builder(columns)?;
    let d = b.build(&[row], &[marker])?;
    let bad = d.x_common.iter().chain(d.x_class.iter()).chain(d.z.iter()).chain(d.x_contrast.iter()).any(|v| !v.is_finite());
    if bad {
        return Err(Error::Data("missing covariate in the prediction profile".into()));
    }
    Ok(d)
}

fn trajectory_values(
    model: &ValidatedModel,
    theta: &[f64],
    designs: &[SubjectDesign],
    scale: Scale,
    nodes: &(Vec<f64>, Vec<f64>),
) -> Result<Vec<f64>> {
    let ev = Evaluator::new(model, theta)?;
    let shape = model.layout.shape();
    let mut out = Vec::new();
    for d in designs {
        let k = d.marker[0];
        for g in 0..shape.ng {
            let mean = ev.class_mean(d, g)[0];
            out.push(match scale {
                Scale::Latent => mean,
                Scale::Outcome => {
                    let var = ev.class_covariance(d, g)[(0, 0)];
                    expected_outcome(shape.links.get(k), ev.params.links.get(k).map_or(&[][..], |v| v), mean, var, nodes)?
                }
            });
        }
    }
    Ok(out)
}

/// Class-specific predicted trajectories for covariate profiles (one per
/// row of `rows`), on the latent or outcome scale, with percentile bands
/// over `draws` parameter draws.
pub fn predict_trajectory(
    fit: &FittedModel,
    columns: &[String],
    rows: &[Vec<f64>],
    scale: Scale,
    integration: Integration,
    draws: Option<usize>,
    seed: u64,
) -> Result<Vec<TrajectoryRow>> {
    let model = &fit.model;
    let shape = model.layout.shape();
    let k_markers = shape.n_markers();
    let mut designs = Vec::new();
    let mut meta = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        for k in 0..k_markers {
            let d = single_design(model, columns, row, k)?;
            meta.push((r, d.times[0], k));
            designs.push(d);
        }
    }
    let nodes = standard_nodes(integration, seed)?;
    let values = trajectory_values(model, &fit.theta, &designs, scale, &nodes)?;
    let bands = match draws {
        Some(n) if n > 0 => {
            bands_over_draws(fit, n, seed, values.len(), |t| trajectory_values(model, t, &designs, scale, &nodes))?
        }
        _ => vec![None; values.len()],
    };
    let ng = shape.ng;
    let mut out = Vec::with_capacity(values.len());
    for (i, &(row, time, marker)) in meta.iter().enumerate() {
        for g in 0..ng {
            let j = i * ng + g;
            out.push(TrajectoryRow {
                row,
                time,
                marker,
                class: g,
                value: values[j],
                band: bands[j],
            });
        }
    }
    Ok(out)
}

/// Marginal prediction on the outcome scale at one fitted observation.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomePrediction {
    pub id: String,
    pub marker: usize,
    pub time: f64,
    pub obs: f64,
    /// Weighted by the prior class probabilities.
    pub pred: f64,
    pub pred_class: Vec<f64>,
}

pub fn fit_outcome_scale(fit: &FittedModel, integration: Integration, seed: u64) -> Result<Vec<OutcomePrediction>> {
    let model = &fit.model;
    let shape = model.layout.shape();
    if shape.links.is_empty() {
        return Err(Error::Unsupported("outcome-scale predictions of a model without link".into()));
    }
    let ev = Evaluator::new(model, &fit.theta)?;
    let nodes = standard_nodes(integration, seed)?;
    let mut out = Vec::new();
    for s in &model.subjects {
        let prior = ev.params.class_probs(&s.x_classmb);
        let mut per_class = vec![vec![0.0; s.n_obs()]; shape.ng];
        for g in 0..shape.ng {
            let mu = ev.class_mean(s, g);
            let v = ev.class_covariance(s, g);
            for j in 0..s.n_obs() {
                let k = s.marker[j];
                per_class[g][j] = expected_outcome(Some(&shape.links[k]), &ev.params.links[k], mu[j], v[(j, j)], &nodes)?;
            }
        }
        for j in 0..s.n_obs() {
            let pc: Vec<f64> = (0..shape.ng).map(|g| per_class[g][j]).collect();
            out.push(OutcomePrediction {
                id: s.id.clone(),
                marker: s.marker[j],
                time: s.times[j],
                obs: s.y[j],
                pred: pc.iter().zip(&prior).map(|(a, b)| a * b).sum(),
                pred_class: pc,
            });
        }
    }
    Ok(out)
}

/// Values of the outcome at which link curves are computed.
#[derive(Debug, Clone, PartialEq)]
pub enum LinkGrid {
    /// This many equidistant values over each marker's range.
    Count(usize),
    /// Explicit values per marker.
    Values(Vec<Vec<f64>>),
}

impl Default for LinkGrid {
    fn default() -> Self {
        Self::Count(100)
    }
}

/// Estimated transformation `H⁻¹(y)` at one outcome value.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkCurveRow {
    pub marker: usize,
    pub y: f64,
    pub estimate: f64,
    pub band: Option<Band>,
}

pub fn predict_link(fit: &FittedModel, grid: &LinkGrid, draws: Option<usize>, seed: u64) -> Result<Vec<LinkCurveRow>> {
    let shape = fit.model.layout.shape();
    if shape.links.is_empty() || shape.links.iter().any(|l| !l.is_continuous()) {
        return Err(Error::Unsupported("link curves need continuous link functions".into()));
    }
    let mut points = Vec::new();
    for (k, link) in shape.links.iter().enumerate() {
        let ys = match grid {
            LinkGrid::Count(n) => {
                let n = (*n).max(2);
                (0..n)
                    .map(|i| link.min + (link.max - link.min) * i as f64 / (n - 1) as f64)
                    .collect()
            }
            LinkGrid::Values(v) => v
                .get(k)
                .cloned()
                .ok_or_else(|| Error::InvalidArgument(format!("no grid values for marker {}", k + 1)))?,
        };
        for y in ys {
            if !matches!(link.kind, LinkKind::Linear) && (y < link.min || y > link.max) {
                return Err(Error::OutOfRange {
                    value: y,
                    min: link.min,
                    max: link.max,
                });
            }
            points.push((k, y));
        }
    }
    let eval = |theta: &[f64]| -> Result<Vec<f64>> {
        let p = fit.model.layout.unpack(theta)?;
        points
            .iter()
            .map(|&(k, y)| Ok(shape.links[k].inverse_transform(y, &p.links[k])?.0))
            .collect()
    };
    let est = eval(&fit.theta)?;
    let bands = match draws {
        Some(n) if n > 0 => bands_over_draws(fit, n, seed, est.len(), eval)?,
        _ => vec![None; est.len()],
    };
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, &(marker, y))| LinkCurveRow {
            marker,
            y,
            estimate: est[i],
            band: bands[i],
        })
        .collect())
}

/// Percentage of the variance of each marker explained by the latent
/// process at a covariate profile: `out[g][k]`.
pub fn var_explained(fit: &FittedModel, columns: &[String], row: &[f64]) -> Result<Vec<Vec<f64>>> {
    let model = &fit.model;
    let shape = model.layout.shape();
    if shape.q() == 0 && shape.cor == crate::layout::CorKind::None {
        return Err(Error::InvalidArgument("the model has no random effect".into()));
    }
    let ev = Evaluator::new(model, &fit.theta)?;
    let mut out = vec![vec![0.0; shape.n_markers()]; shape.ng];
    for k in 0..shape.n_markers() {
        let d = single_design(model, columns, row, k)?;
        for g in 0..shape.ng {
            let lat: DMatrix<f64> = ev.random_covariance(&d, g) + ev.process_covariance(&d.times);
            let tot = ev.class_covariance(&d, g);
            out[g][k] = 100.0 * lat[(0, 0)] / tot[(0, 0)];
        }
    }
    Ok(out)
}
