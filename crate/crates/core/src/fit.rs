//! Model fitting: starting values, optimization and the fitted result.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::LongDataset;
use crate::error::{Error, Result};
use crate::likelihood::objective;
use crate::model::{validate_and_build, ValidatedModel};
use crate::numerics::rng::stream;
use crate::optimizer::init::lower_spec;
use crate::optimizer::{
    init_default, init_from_lower, init_random, marquardt_maximize, mle_covariance, ConvergenceSettings, Criteria,
    OptResult,
};
use crate::spec::ModelSpec;

/// Where the optimization starts.
#[derive(Debug, Clone, Default)]
pub enum InitStrategy {
    /// Default values for one class; with several classes the one-class
    /// model is fitted first and spread over the classes.
    #[default]
    Default,
    /// Explicit starting vector.
    Values(Vec<f64>),
    /// Spread a one-class fit over the classes.
    FromLower(Box<FittedModel>),
    /// Random draw around a one-class fit.
    Random { lower: Box<FittedModel>, seed: u64 },
    /// `rep` short runs of `maxiter` iterations from random draws, the
    /// best one is then run to convergence. Without `lower` the one-class
    /// model is fitted first.
    GridSearch {
        rep: usize,
        maxiter: usize,
        lower: Option<Box<FittedModel>>,
        seed: u64,
    },
}

/// How the Hessian used for the covariance matrix is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceMethod {
    /// The forward-difference Hessian of the last iteration.
    #[default]
    Forward,
    /// A central-difference Hessian recomputed at the estimate.
    Central,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// `None` takes the family default number of iterations.
    pub maxiter: Option<usize>,
    pub eps_a: f64,
    pub eps_b: f64,
    pub eps_d: f64,
    /// Indices (0-based) of parameters kept at their initial values.
    pub posfix: Vec<usize>,
    pub init: InitStrategy,
    pub covariance: CovarianceMethod,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            maxiter: None,
            eps_a: 1e-4,
            eps_b: 1e-4,
            eps_d: 1e-4,
            posfix: Vec::new(),
            init: InitStrategy::Default,
            covariance: CovarianceMethod::Forward,
        }
    }
}

impl FitOptions {
    fn settings(&self, spec: &ModelSpec) -> ConvergenceSettings {
        ConvergenceSettings {
            eps_a: self.eps_a,
            eps_b: self.eps_b,
            eps_d: self.eps_d,
            maxiter: self.maxiter.unwrap_or_else(|| spec.family.default_maxiter()),
        }
    }
}

/// A fitted model with its estimates and convergence report.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub model: ValidatedModel,
    pub theta: Vec<f64>,
    pub initial: Vec<f64>,
    pub free: Vec<bool>,
    /// Covariance of the free parameters.
    pub cov_free: Option<DMatrix<f64>>,
    pub loglik: f64,
    pub iterations: usize,
    pub criteria: Criteria,
    pub converged: bool,
    pub stalled: bool,
    /// Final log-likelihoods of the short grid-search runs.
    pub grid_logliks: Vec<f64>,
    pub notes: Vec<String>,
}

impl FittedModel {
    pub fn n_params(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }

    pub fn aic(&self) -> f64 {
        -2.0 * self.loglik + 2.0 * self.n_params() as f64
    }

    pub fn bic(&self) -> f64 {
        -2.0 * self.loglik + self.n_params() as f64 * (self.model.n_subjects() as f64).ln()
    }

    /// Covariance over all parameters, zero rows and columns for fixed
    /// ones.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        let v = self.cov_free.as_ref()?;
        let idx: Vec<usize> = (0..self.free.len()).filter(|&i| self.free[i]).collect();
        let n = self.theta.len();
        let mut full = DMatrix::zeros(n, n);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                full[(i, j)] = v[(a, b)];
            }
        }
        Some(full)
    }

    /// Standard errors, 0 for fixed parameters.
    pub fn standard_errors(&self) -> Option<Vec<f64>> {
        let v = self.covariance()?;
        Some((0..self.theta.len()).map(|i| v[(i, i)].max(0.0).sqrt()).collect())
    }

    pub fn params(&self) -> crate::layout::ModelParams {
        self.model
            .layout
            .unpack(&self.theta)
            .expect("estimate has the layout length")
    }
}

fn free_mask(n: usize, posfix: &[usize]) -> Result<Vec<bool>> {
    let mut free = vec![true; n];
    for &i in posfix {
        if i >= n {
            return Err(Error::InvalidArgument(format!(
                "posfix index {} beyond the {n} parameters",
                i + 1
            )));
        }
        free[i] = false;
    }
    Ok(free)
}

fn finish(
    model: ValidatedModel,
    res: OptResult,
    initial: Vec<f64>,
    options: &FitOptions,
    mut notes: Vec<String>,
    grid_logliks: Vec<f64>,
) -> Result<FittedModel> {
    if !res.converged {
        notes.push(format!(
            "not converged after {} iterations (criteria {:.3e}, {:.3e}, {:.3e})",
            res.iterations, res.criteria.parameters, res.criteria.likelihood, res.criteria.derivatives
        ));
    }
    let hessian = match options.covariance {
        CovarianceMethod::Forward => res.hessian.clone(),
        CovarianceMethod::Central => {
            let f = |t: &[f64]| objective(&model, t);
            let h = crate::numerics::diff::fd_hessian_central(&f, &res.theta, Some(&res.free))
                .map_err(|_| Error::InvalidArgument("objective failed at a Hessian probe".into()))?;
            let idx: Vec<usize> = (0..res.free.len()).filter(|&i| res.free[i]).collect();
            DMatrix::from_fn(idx.len(), idx.len(), |a, b| -h[(idx[a], idx[b])])
        }
    };
    let cov_free = mle_covariance(&hessian);
    if cov_free.is_none() {
        notes.push("Hessian not positive definite: covariance unavailable".into());
    }
    Ok(FittedModel {
        model,
        theta: res.theta,
        initial,
        free: res.free,
        cov_free,
        loglik: res.loglik,
        iterations: res.iterations,
        criteria: res.criteria,
        converged: res.converged,
        stalled: res.stalled,
        grid_logliks,
        notes,
    })
}

/// Runs the optimizer on a validated model from `theta0`.
pub fn fit_from(model: ValidatedModel, theta0: Vec<f64>, options: &FitOptions) -> Result<FittedModel> {
    fit_from_with_notes(model, theta0, options, Vec::new(), Vec::new())
}

fn fit_from_with_notes(
    model: ValidatedModel,
    theta0: Vec<f64>,
    options: &FitOptions,
    notes: Vec<String>,
    grid: Vec<f64>,
) -> Result<FittedModel> {
    if theta0.len() != model.layout.len() {
        return Err(Error::LengthMismatch {
            expected: model.layout.len(),
            got: theta0.len(),
        });
    }
    let free = free_mask(theta0.len(), &options.posfix)?;
    let settings = options.settings(&model.spec);
    let f = |t: &[f64]| objective(&model, t);
    let res = marquardt_maximize(&f, &theta0, &free, &settings)?;
    finish(model, res, theta0, options, notes, grid)
}

fn fit_lower(spec: &ModelSpec, data: &LongDataset, options: &FitOptions) -> Result<FittedModel> {
    let lower = lower_spec(spec);
    let opts = FitOptions {
        posfix: Vec::new(),
        init: InitStrategy::Default,
        ..options.clone()
    };
    fit_model(&lower, data, &opts)
}

/// Validates `spec` against `data` and fits it.
pub fn fit_model(spec: &ModelSpec, data: &LongDataset, options: &FitOptions) -> Result<FittedModel> {
    let model = validate_and_build(spec, data)?;
    match &options.init {
        InitStrategy::Default => {
            if spec.ng == 1 {
                let (theta0, notes) = init_default(&model);
                fit_from_with_notes(model, theta0, options, notes, Vec::new())
            } else {
                let lower = fit_lower(spec, data, options)?;
                start_from_lower(model, &lower, options)
            }
        }
        InitStrategy::Values(v) => fit_from(model, v.clone(), options),
        InitStrategy::FromLower(lower) => start_from_lower(model, lower, options),
        InitStrategy::Random { lower, seed } => {
            let mut rng = stream(*seed, 0);
            let cov = lower.covariance();
            let (theta0, notes) = init_random(&lower.model.layout, &lower.theta, cov.as_ref(), &model.layout, &mut rng);
            fit_from_with_notes(model, theta0, options, notes, Vec::new())
        }
        InitStrategy::GridSearch {
            rep,
            maxiter,
            lower,
            seed,
        } => {
            let lower = match lower {
                Some(l) => (**l).clone(),
                None => fit_lower(spec, data, options)?,
            };
            grid_search(model, &lower, *rep, *maxiter, *seed, options)
        }
    }
}

fn start_from_lower(model: ValidatedModel, lower: &FittedModel, options: &FitOptions) -> Result<FittedModel> {
    let se = lower.standard_errors();
    let (theta0, mut notes) = init_from_lower(&lower.model.layout, &lower.theta, se.as_deref(), &model.layout);
    if !lower.converged {
        notes.push("the one-class fit used for starting values did not converge".into());
    }
    fit_from_with_notes(model, theta0, options, notes, Vec::new())
}

/// Short runs from `rep` random draws; the best is run to convergence.
pub fn grid_search(
    model: ValidatedModel,
    lower: &FittedModel,
    rep: usize,
    maxiter: usize,
    seed: u64,
    options: &FitOptions,
) -> Result<FittedModel> {
    if rep == 0 {
        return Err(Error::InvalidArgument("grid search needs at least one replicate".into()));
    }
    let cov = lower.covariance();
    let free = free_mask(model.layout.len(), &options.posfix)?;
    let short = ConvergenceSettings {
        maxiter,
        ..options.settings(&model.spec)
    };
    let runs: Vec<(f64, Vec<f64>, Vec<String>)> = (0..rep)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64);
            let (theta0, notes) = init_random(&lower.model.layout, &lower.theta, cov.as_ref(), &model.layout, &mut rng);
            let f = |t: &[f64]| objective(&model, t);
            match marquardt_maximize(&f, &theta0, &free, &short) {
                Ok(res) => (res.loglik, res.theta, notes),
                Err(_) => (f64::NEG_INFINITY, theta0, notes),
            }
        })
        .collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        // strict comparison keeps the lowest index among ties
        if run.0 > runs[best].0 {
            best = r;
        }
    }
    if !runs[best].0.is_finite() {
        return Err(Error::InitialEvaluation);
    }
    let logliks: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let notes = runs[best].2.clone();
    let theta0 = runs[best].1.clone();
    fit_from_with_notes(model, theta0, options, notes, logliks)
}
