//! Declarative model specifications.

use crate::error::{Error, Result};
use crate::hazards::{HazardSpec, HazardType};
use crate::links::LinkSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Linear mixed model with optional latent classes.
    Hlme,
    /// Latent process mixed model for one marker.
    Lcmm,
    /// Latent process mixed model for several markers.
    Multlcmm,
    /// Joint latent class model with a time-to-event submodel.
    Jointlcmm,
}

impl Family {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hlme" => Ok(Self::Hlme),
            "lcmm" => Ok(Self::Lcmm),
            "multlcmm" => Ok(Self::Multlcmm),
            "jointlcmm" => Ok(Self::Jointlcmm),
            other => Err(Error::Spec(format!("unknown family `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Hlme => "hlme",
            Self::Lcmm => "lcmm",
            Self::Multlcmm => "multlcmm",
            Self::Jointlcmm => "jointlcmm",
        }
    }

    pub fn default_maxiter(&self) -> usize {
        match self {
            Self::Hlme => 500,
            _ => 100,
        }
    }
}

/// One column of a design matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Intercept,
    Column(String),
    /// Product of several columns, written `a:b`.
    Product(Vec<String>),
}

impl Term {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Spec("empty term".into()));
        }
        if s == "intercept" || s == "1" {
            return Ok(Self::Intercept);
        }
        if s.contains(':') {
            let parts: Vec<String> = s.split(':').map(|p| p.trim().to_string()).collect();
            if parts.iter().any(|p| p.is_empty()) {
                return Err(Error::Spec(format!("malformed product term `{s}`")));
            }
            return Ok(Self::Product(parts));
        }
        Ok(Self::Column(s.to_string()))
    }

    pub fn name(&self) -> String {
        match self {
            Self::Intercept => "intercept".into(),
            Self::Column(c) => c.clone(),
            Self::Product(p) => p.join(":"),
        }
    }

    pub fn columns(&self) -> Vec<&str> {
        match self {
            Self::Intercept => vec![],
            Self::Column(c) => vec![c.as_str()],
            Self::Product(p) => p.iter().map(String::as_str).collect(),
        }
    }
}

pub fn parse_terms(items: &[impl AsRef<str>]) -> Result<Vec<Term>> {
    items.iter().map(|s| Term::parse(s.as_ref())).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorSpec {
    None,
    /// Brownian motion indexed by the named time column.
    Brownian(String),
    /// Autoregressive process indexed by the named time column.
    Autoregressive(String),
}

impl CorSpec {
    /// Parses `BM(time)` or `AR(time)`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let inner = |prefix: &str| -> Option<String> {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
                .map(|r| r.trim().to_string())
                .filter(|r| !r.is_empty())
        };
        if let Some(v) = inner("BM") {
            return Ok(Self::Brownian(v));
        }
        if let Some(v) = inner("AR") {
            return Ok(Self::Autoregressive(v));
        }
        Err(Error::Spec(format!("invalid correlation structure `{s}`")))
    }

    pub fn time_column(&self) -> Option<&str> {
        match self {
            Self::None => None,
            Self::Brownian(t) | Self::Autoregressive(t) => Some(t),
        }
    }

    pub fn descriptor(&self) -> Option<String> {
        match self {
            Self::None => None,
            Self::Brownian(t) => Some(format!("BM({t})")),
            Self::Autoregressive(t) => Some(format!("AR({t})")),
        }
    }
}

/// Which causes a survival covariate effect applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CauseScope {
    /// One effect shared by every cause.
    Shared,
    /// A separate effect for each cause.
    EachCause,
    /// An effect for one cause only (0-based).
    Only(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurvivalTerm {
    pub term: Term,
    pub class_specific: bool,
    pub scope: CauseScope,
}

impl SurvivalTerm {
    /// Parses a term optionally wrapped in `mixture(...)`, `cause(...)` or
    /// `causeP(...)` (1-based `P`), in any nesting order.
    pub fn parse(s: &str) -> Result<Self> {
        let mut rest = s.trim().to_string();
        let mut class_specific = false;
        let mut scope = CauseScope::Shared;
        loop {
            let Some(open) = rest.find('(') else { break };
            if !rest.ends_with(')') {
                return Err(Error::Spec(format!("malformed survival term `{s}`")));
            }
            let func = rest[..open].trim().to_string();
            let inner = rest[open + 1..rest.len() - 1].trim().to_string();
            if func == "mixture" {
                class_specific = true;
            } else if func == "cause" {
                scope = CauseScope::EachCause;
            } else if let Some(num) = func.strip_prefix("cause") {
                let p: usize = num
                    .parse()
                    .map_err(|_| Error::Spec(format!("malformed cause in `{s}`")))?;
                if p == 0 {
                    return Err(Error::Spec("causes are numbered from 1".into()));
                }
                scope = CauseScope::Only(p - 1);
            } else {
                return Err(Error::Spec(format!("unknown survival term function `{func}`")));
            }
            rest = inner;
        }
        let term = Term::parse(&rest)?;
        if term == Term::Intercept {
            return Err(Error::Spec("survival submodel has no intercept term".into()));
        }
        Ok(Self {
            term,
            class_specific,
            scope,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalSpec {
    pub entry: Option<String>,
    pub time: String,
    pub event: String,
    pub terms: Vec<SurvivalTerm>,
    /// One descriptor shared by all causes, or one per cause.
    pub hazard: Vec<HazardSpec>,
    /// One type shared by all causes, or one per cause.
    pub hazard_type: Vec<HazardType>,
    pub hazard_nodes: Option<Vec<f64>>,
    pub logscale: bool,
    /// Number of competing causes; taken from the data when absent.
    pub n_causes: Option<usize>,
}

impl SurvivalSpec {
    pub fn new(time: &str, event: &str) -> Self {
        Self {
            entry: None,
            time: time.into(),
            event: event.into(),
            terms: Vec::new(),
            hazard: vec![HazardSpec::Weibull],
            hazard_type: vec![HazardType::Specific],
            hazard_nodes: None,
            logscale: false,
            n_causes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub family: Family,
    pub subject: String,
    /// Column ordering the observations of a subject.
    pub time: Option<String>,
    pub outcomes: Vec<String>,
    pub fixed: Vec<Term>,
    pub mixture: Vec<Term>,
    pub random: Vec<Term>,
    pub classmb: Vec<Term>,
    pub contrast: Vec<Term>,
    pub ng: usize,
    pub idiag: bool,
    pub nwg: bool,
    pub cor: CorSpec,
    /// One link per outcome, or one shared by all outcomes; empty means the
    /// Gaussian model (hlme, and jointlcmm without a link).
    pub link: Vec<LinkSpec>,
    pub intnodes: Option<Vec<f64>>,
    pub eps_y: f64,
    pub range: Option<Vec<(f64, f64)>>,
    pub random_y: bool,
    pub survival: Option<SurvivalSpec>,
}

impl ModelSpec {
    pub fn new(family: Family, subject: &str, outcomes: &[&str]) -> Self {
        Self {
            family,
            subject: subject.into(),
            time: None,
            outcomes: outcomes.iter().map(|s| s.to_string()).collect(),
            fixed: vec![Term::Intercept],
            mixture: Vec::new(),
            random: Vec::new(),
            classmb: Vec::new(),
            contrast: Vec::new(),
            ng: 1,
            idiag: false,
            nwg: false,
            cor: CorSpec::None,
            link: Vec::new(),
            intnodes: None,
            eps_y: 0.5,
            range: None,
            random_y: false,
            survival: None,
        }
    }

    /// Whether the longitudinal part uses a link function (the latent
    /// process parameterization with constrained intercept and unit
    /// residual scale).
    pub fn has_link(&self) -> bool {
        match self.family {
            Family::Hlme => false,
            Family::Lcmm | Family::Multlcmm => true,
            Family::Jointlcmm => !self.link.is_empty(),
        }
    }

    /// Link of outcome `k` (linear when none was given).
    pub fn link_for(&self, k: usize) -> LinkSpec {
        match self.link.len() {
            0 => LinkSpec::Linear,
            1 => self.link[0].clone(),
            _ => self.link[k].clone(),
        }
    }

    /// Checks internal consistency (everything that does not need data).
    pub fn check(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Spec(m.to_string()));
        if self.ng == 0 {
            return fail("ng must be at least 1");
        }
        if self.outcomes.is_empty() {
            return fail("at least one outcome is required");
        }
        if self.family != Family::Multlcmm && self.outcomes.len() != 1 {
            return fail("only multlcmm accepts several outcomes");
        }
        for t in &self.mixture {
            if !self.fixed.contains(t) {
                return Err(Error::Spec(format!("mixture term `{}` is not a fixed term", t.name())));
            }
        }
        if self.ng == 1 {
            if !self.mixture.is_empty() {
                return fail("mixture terms need ng > 1");
            }
            if !self.classmb.is_empty() {
                return fail("classmb terms need ng > 1");
            }
            if self.nwg {
                return fail("nwg needs ng > 1");
            }
        }
        if self.classmb.contains(&Term::Intercept) {
            return fail("classmb terms exclude the intercept, which is always present");
        }
        if self.nwg && self.random.is_empty() {
            return fail("nwg needs random effects");
        }
        if !self.contrast.is_empty() && self.family != Family::Multlcmm {
            return fail("contrasts are only available in multlcmm");
        }
        if self.contrast.contains(&Term::Intercept) {
            return fail("the intercept cannot be a contrast");
        }
        if self.random_y && self.family != Family::Multlcmm {
            return fail("randomY is only available in multlcmm");
        }
        if self.family == Family::Multlcmm && !self.random.contains(&Term::Intercept) {
            return fail("multlcmm requires a random intercept");
        }
        if self.family == Family::Hlme && !self.link.is_empty() {
            return fail("hlme has no link function");
        }
        if self.link.len() > 1 && self.link.len() != self.outcomes.len() {
            return fail("give one link per outcome or a single link");
        }
        let thresholds = self.link.iter().any(|l| !l.is_continuous());
        if thresholds && self.family != Family::Lcmm {
            return fail("the thresholds link is only available in lcmm");
        }
        if thresholds && self.cor != CorSpec::None {
            return fail("the thresholds link cannot be combined with a correlated process");
        }
        if !(self.eps_y > 0.0) {
            return fail("epsY must be positive");
        }
        if let Some(r) = &self.range {
            if r.len() != self.outcomes.len() {
                return fail("give one range per outcome");
            }
        }
        match (&self.survival, self.family) {
            (None, Family::Jointlcmm) => return fail("jointlcmm needs a survival submodel"),
            (Some(_), f) if f != Family::Jointlcmm => return fail("only jointlcmm has a survival submodel"),
            _ => {}
        }
        if let Some(s) = &self.survival {
            if s.hazard.is_empty() || s.hazard_type.is_empty() {
                return fail("a hazard family and type are required");
            }
            if self.ng == 1 && s.terms.iter().any(|t| t.class_specific) {
                return fail("class-specific survival effects need ng > 1");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms() {
        assert_eq!(Term::parse("intercept").unwrap(), Term::Intercept);
        assert_eq!(Term::parse("age").unwrap(), Term::Column("age".into()));
        assert_eq!(
            Term::parse("age:CEP").unwrap(),
            Term::Product(vec!["age".into(), "CEP".into()])
        );
        assert!(Term::parse("age:").is_err());
    }

    #[test]
    fn survival_terms() {
        let t = SurvivalTerm::parse("mixture(cause2(x))").unwrap();
        assert!(t.class_specific);
        assert_eq!(t.scope, CauseScope::Only(1));
        let t = SurvivalTerm::parse("cause(male)").unwrap();
        assert_eq!(t.scope, CauseScope::EachCause);
        assert!(!t.class_specific);
        assert!(SurvivalTerm::parse("frailty(x)").is_err());
    }

    #[test]
    fn cor_parsing() {
        assert_eq!(CorSpec::parse("BM(time)").unwrap(), CorSpec::Brownian("time".into()));
        assert_eq!(CorSpec::parse("AR(t)").unwrap(), CorSpec::Autoregressive("t".into()));
        assert!(CorSpec::parse("OU(t)").is_err());
    }

    #[test]
    fn consistency_checks() {
        let mut s = ModelSpec::new(Family::Hlme, "id", &["y"]);
        s.mixture = vec![Term::Column("t".into())];
        s.ng = 2;
        assert!(s.check().is_err());
        s.fixed.push(Term::Column("t".into()));
        assert!(s.check().is_ok());

        let mut m = ModelSpec::new(Family::Multlcmm, "id", &["a", "b"]);
        assert!(m.check().is_err());
        m.random = vec![Term::Intercept];
        assert!(m.check().is_ok());
    }
}
