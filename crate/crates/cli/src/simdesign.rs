//! Simulation design files (TOML).
//!
//! ```toml
//! subjects = 500
//! visits = [0, 1, 2, 3, 4, 5]
//! jitter = 0.2
//! admin_censoring = 10.0
//! theta = [0.3, 1.0, -0.5]
//! support = [0.0, 10.0]   # hazard support of joint models
//! ranges = [[0, 30]]      # marker ranges of link models
//!
//! [[covariates]]
//! name = "x"
//! law = "bernoulli"
//! p = 0.5
//! ```

use std::path::Path;

use mixlong::model::{declared_causes, declared_links};
use mixlong::simulate::{CovariateLaw, CovariateSpec, SimDesign};
use mixlong::{ModelSpec, ValidatedModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateEntry {
    pub name: String,
    /// `bernoulli`, `normal` or `uniform`.
    pub law: String,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub mean: Option<f64>,
    #[serde(default)]
    pub sd: Option<f64>,
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
    #[serde(default)]
    pub per_visit: bool,
}

impl CovariateEntry {
    fn to_spec(&self) -> Result<CovariateSpec> {
        let need = |v: Option<f64>, what: &str| {
            v.ok_or_else(|| CliError::Format(format!("covariate `{}`: `{what}` is required", self.name)))
        };
        let law = match self.law.to_ascii_lowercase().as_str() {
            "bernoulli" => CovariateLaw::Bernoulli(need(self.p, "p")?),
            "normal" => CovariateLaw::Normal {
                mean: self.mean.unwrap_or(0.0),
                sd: self.sd.unwrap_or(1.0),
            },
            "uniform" => CovariateLaw::Uniform {
                lo: need(self.lo, "lo")?,
                hi: need(self.hi, "hi")?,
            },
            other => return Err(CliError::Format(format!("unknown covariate law `{other}`"))),
        };
        Ok(CovariateSpec {
            name: self.name.clone(),
            law,
            per_visit: self.per_visit,
        })
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub subjects: usize,
    pub visits: Vec<f64>,
    #[serde(default)]
    pub jitter: f64,
    /// Visit-time column; defaults to the model's time column.
    #[serde(default)]
    pub time: Option<String>,
    #[serde(default)]
    pub admin_censoring: Option<f64>,
    #[serde(default)]
    pub censoring_rate: f64,
    #[serde(default)]
    pub entry: Option<[f64; 2]>,
    #[serde(default = "default_true")]
    pub truncate_at_event: bool,
    /// Column receiving the true class; `""` leaves it out.
    #[serde(default)]
    pub class_column: Option<String>,
    /// True parameter vector (not needed when simulating from an archive).
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    #[serde(default)]
    pub support: Option<[f64; 2]>,
    #[serde(default)]
    pub causes: Option<usize>,
    #[serde(default)]
    pub ranges: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub covariates: Vec<CovariateEntry>,
}

impl DesignFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Format(format!("design file: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Model with links and hazards resolved from the declared ranges and
    /// support.
    pub fn declared_model(&self, spec: &ModelSpec) -> Result<ValidatedModel> {
        let ranges: Vec<(f64, f64)> = self
            .ranges
            .as_ref()
            .map(|r| r.iter().map(|p| (p[0], p[1])).collect())
            .unwrap_or_default();
        if spec.has_link() && ranges.is_empty() {
            return Err(CliError::Format("link models need `ranges` in the design".into()));
        }
        let links = declared_links(spec, &ranges)?;
        let causes = match &spec.survival {
            None => Vec::new(),
            Some(s) => {
                let support = self
                    .support
                    .ok_or_else(|| CliError::Format("joint models need `support` in the design".into()))?;
                let n = self.causes.or(s.n_causes).unwrap_or(1);
                declared_causes(spec, (support[0], support[1]), n)?
            }
        };
        Ok(ValidatedModel::declared(spec, links, causes)?)
    }

    /// The simulation design for `model` and `theta`.
    pub fn design(&self, model: ValidatedModel, theta: Vec<f64>, seed: u64) -> Result<SimDesign> {
        let time = self
            .time
            .clone()
            .or_else(|| model.spec.time.clone())
            .ok_or_else(|| CliError::Format("no visit-time column: set `time` in the design or the model file".into()))?;
        if theta.len() != model.layout.len() {
            return Err(CliError::Format(format!(
                "theta has {} values, the model has {} parameters",
                theta.len(),
                model.layout.len()
            )));
        }
        let mut d = SimDesign::new(model, theta, self.subjects, self.visits.clone(), &time);
        d.jitter = self.jitter;
        d.covariates = self.covariates.iter().map(CovariateEntry::to_spec).collect::<Result<_>>()?;
        d.admin_censoring = self.admin_censoring.unwrap_or(f64::INFINITY);
        d.censoring_rate = self.censoring_rate;
        d.entry = self.entry.map(|e| (e[0], e[1]));
        d.truncate_at_event = self.truncate_at_event;
        d.class_column = match &self.class_column {
            None => Some("class".into()),
            Some(c) if c.is_empty() => None,
            Some(c) => Some(c.clone()),
        };
        d.seed = seed;
        Ok(d)
    }
}
