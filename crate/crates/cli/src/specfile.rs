//! Model specification files (TOML).
//!
//! ```toml
//! family = "jointlcmm"
//! subject = "ID"
//! outcomes = ["score"]
//! time = "age"
//! fixed = ["intercept", "age", "age:male"]
//! mixture = ["intercept", "age"]
//! random = ["intercept", "age"]
//! classmb = ["male"]
//! ng = 2
//! link = "5-quant-splines"
//!
//! [survival]
//! entry = "age0"
//! time = "agedem"
//! event = "dem"
//! terms = ["male", "mixture(edu)"]
//! hazard = "Weibull"
//! hazardtype = "Specific"
//! ```
//!
//! `link`, `hazard` and `hazardtype` take a single value or one per
//! outcome/cause.

use std::path::Path;

use mixlong::hazards::{HazardSpec, HazardType};
use mixlong::links::LinkSpec;
use mixlong::spec::{parse_terms, CorSpec, SurvivalSpec, SurvivalTerm};
use mixlong::{Family, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    fn items(&self) -> Vec<String> {
        match self {
            Self::One(s) => vec![s.clone()],
            Self::Many(v) => v.clone(),
        }
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurvivalFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<String>,
    pub time: String,
    pub event: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hazard: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hazardtype: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hazardnodes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub logscale: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub causes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub family: String,
    pub subject: String,
    pub outcomes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mixture: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub random: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classmb: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contrast: Vec<String>,
    #[serde(default = "one")]
    pub ng: usize,
    #[serde(default, skip_serializing_if = "is_false")]
    pub idiag: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub nwg: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<f64>>,
    #[serde(default, rename = "epsY", skip_serializing_if = "Option::is_none")]
    pub eps_y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Vec<[f64; 2]>>,
    #[serde(default, rename = "randomY", skip_serializing_if = "is_false")]
    pub random_y: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survival: Option<SurvivalFile>,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Format(format!("spec file: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_model_spec(&self) -> Result<ModelSpec> {
        let family = Family::parse(&self.family)?;
        let outcomes: Vec<&str> = self.outcomes.iter().map(String::as_str).collect();
        let mut s = ModelSpec::new(family, &self.subject, &outcomes);
        s.time = self.time.clone();
        if let Some(f) = &self.fixed {
            s.fixed = parse_terms(f)?;
        }
        s.mixture = parse_terms(&self.mixture)?;
        s.random = parse_terms(&self.random)?;
        s.classmb = parse_terms(&self.classmb)?;
        s.contrast = parse_terms(&self.contrast)?;
        s.ng = self.ng;
        s.idiag = self.idiag;
        s.nwg = self.nwg;
        if let Some(c) = &self.cor {
            s.cor = CorSpec::parse(c)?;
        }
        if let Some(l) = &self.link {
            s.link = l.items().iter().map(|x| LinkSpec::parse(x)).collect::<mixlong::Result<_>>()?;
        }
        s.intnodes = self.knots.clone();
        if let Some(e) = self.eps_y {
            s.eps_y = e;
        }
        s.range = self.range.as_ref().map(|r| r.iter().map(|p| (p[0], p[1])).collect());
        s.random_y = self.random_y;
        if let Some(sf) = &self.survival {
            let mut surv = SurvivalSpec::new(&sf.time, &sf.event);
            surv.entry = sf.entry.clone();
            surv.terms = sf
                .terms
                .iter()
                .map(|t| SurvivalTerm::parse(t))
                .collect::<mixlong::Result<_>>()?;
            if let Some(h) = &sf.hazard {
                surv.hazard = h.items().iter().map(|x| HazardSpec::parse(x)).collect::<mixlong::Result<_>>()?;
            }
            if let Some(h) = &sf.hazardtype {
                surv.hazard_type = h.items().iter().map(|x| HazardType::parse(x)).collect::<mixlong::Result<_>>()?;
            }
            surv.hazard_nodes = sf.hazardnodes.clone();
            surv.logscale = sf.logscale;
            surv.n_causes = sf.causes;
            s.survival = Some(surv);
        }
        s.check()?;
        Ok(s)
    }
}
