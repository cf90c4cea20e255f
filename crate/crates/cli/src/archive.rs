//! Fit archives: a versioned JSON document holding the specification,
//! the estimates with their covariance, the convergence report and a
//! fingerprint of the dataset.

use std::path::Path;

use mixlong::model::validate_and_build;
use mixlong::optimizer::Criteria;
use mixlong::{FittedModel, LongDataset};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataio::Fingerprint;
use crate::error::{CliError, Result};
use crate::specfile::SpecFile;

pub const ARCHIVE_FORMAT: &str = "mixlong-fit";
pub const ARCHIVE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchivedParam {
    pub key: String,
    pub label: String,
    pub class: Option<usize>,
    pub estimate: f64,
    pub free: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchivedCriteria {
    pub parameters: f64,
    pub likelihood: f64,
    pub derivatives: f64,
}

/// Options the fit was run with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub conv_b: f64,
    pub conv_l: f64,
    pub conv_g: f64,
    pub maxiter: usize,
    /// 1-based indices of parameters held at their initial value.
    pub posfix: Vec<usize>,
    pub init: String,
    pub seed: u64,
    pub hessian: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArchive {
    pub format: String,
    pub version: u32,
    pub spec: SpecFile,
    pub settings: FitSettings,
    pub parameters: Vec<ArchivedParam>,
    /// Upper triangle (row by row) of the covariance of the free
    /// parameters, in parameter order.
    pub covariance: Option<Vec<f64>>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_params: usize,
    pub iterations: usize,
    pub criteria: ArchivedCriteria,
    pub converged: bool,
    pub stalled: bool,
    /// Final log-likelihoods of the grid-search runs, `null` for failed
    /// runs.
    pub grid_logliks: Vec<Option<f64>>,
    pub notes: Vec<String>,
    pub data: Fingerprint,
}

fn upper_triangle(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut v = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            v.push(m[(i, j)]);
        }
    }
    v
}

fn from_upper_triangle(v: &[f64], n: usize) -> Result<DMatrix<f64>> {
    if v.len() != n * (n + 1) / 2 {
        return Err(CliError::Format(format!(
            "covariance has {} entries, {} free parameters need {}",
            v.len(),
            n,
            n * (n + 1) / 2
        )));
    }
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = v[k];
            m[(j, i)] = v[k];
            k += 1;
        }
    }
    Ok(m)
}

impl FitArchive {
    pub fn new(spec: SpecFile, settings: FitSettings, fit: &FittedModel, data: &LongDataset) -> Self {
        let parameters = fit
            .model
            .layout
            .params()
            .iter()
            .zip(&fit.theta)
            .zip(&fit.free)
            .map(|((info, &estimate), &free)| ArchivedParam {
                key: info.key.clone(),
                label: info.label.clone(),
                class: info.class,
                estimate,
                free,
            })
            .collect();
        Self {
            format: ARCHIVE_FORMAT.into(),
            version: ARCHIVE_VERSION,
            spec,
            settings,
            parameters,
            covariance: fit.cov_free.as_ref().map(upper_triangle),
            loglik: fit.loglik,
            aic: fit.aic(),
            bic: fit.bic(),
            n_params: fit.n_params(),
            iterations: fit.iterations,
            criteria: ArchivedCriteria {
                parameters: fit.criteria.parameters,
                likelihood: fit.criteria.likelihood,
                derivatives: fit.criteria.derivatives,
            },
            converged: fit.converged,
            stalled: fit.stalled,
            grid_logliks: fit.grid_logliks.iter().map(|v| v.is_finite().then_some(*v)).collect(),
            notes: fit.notes.clone(),
            data: Fingerprint::of(data),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Format(format!("archive: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: Self = serde_json::from_str(text).map_err(|e| CliError::Format(format!("archive: {e}")))?;
        if a.format != ARCHIVE_FORMAT {
            return Err(CliError::Format(format!("not a fit archive (format `{}`)", a.format)));
        }
        if a.version != ARCHIVE_VERSION {
            return Err(CliError::Format(format!("unsupported archive version {}", a.version)));
        }
        Ok(a)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| CliError::io(path, e))
    }

    pub fn theta(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.estimate).collect()
    }

    /// Rebuilds the fitted model on `data`, which must be the dataset the
    /// archive was fitted on.
    pub fn restore(&self, data: &LongDataset) -> Result<FittedModel> {
        if let Some(m) = self.data.mismatch(&Fingerprint::of(data)) {
            return Err(CliError::Fingerprint(m));
        }
        self.restore_unchecked(data)
    }

    /// Rebuilds the fitted model without comparing fingerprints (for
    /// outputs that do not depend on individual subjects).
    pub fn restore_unchecked(&self, data: &LongDataset) -> Result<FittedModel> {
        let spec = self.spec.to_model_spec()?;
        let model = validate_and_build(&spec, data)?;
        let keys: Vec<&str> = model.layout.params().iter().map(|p| p.key.as_str()).collect();
        let archived: Vec<&str> = self.parameters.iter().map(|p| p.key.as_str()).collect();
        if keys != archived {
            return Err(CliError::Fingerprint("the parameter layout differs from the archived one".into()));
        }
        let free: Vec<bool> = self.parameters.iter().map(|p| p.free).collect();
        let n_free = free.iter().filter(|&&f| f).count();
        let cov_free = self
            .covariance
            .as_ref()
            .map(|v| from_upper_triangle(v, n_free))
            .transpose()?;
        let theta = self.theta();
        Ok(FittedModel {
            model,
            initial: theta.clone(),
            theta,
            free,
            cov_free,
            loglik: self.loglik,
            iterations: self.iterations,
            criteria: Criteria {
                parameters: self.criteria.parameters,
                likelihood: self.criteria.likelihood,
                derivatives: self.criteria.derivatives,
            },
            converged: self.converged,
            stalled: self.stalled,
            grid_logliks: self.grid_logliks.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect(),
            notes: self.notes.clone(),
        })
    }
}
