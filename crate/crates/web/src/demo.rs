//! Plain Rust side of the browser demo. Everything here returns `String`
//! errors so it can be exercised on the host; `lib.rs` wraps it for
//! JavaScript.

use mixlong::fit::FittedModel;
use mixlong::hazards::HazardSpec;
use mixlong::likelihood::Evaluator;
use mixlong::links::{Link, LinkSpec};
use mixlong::model::declared_causes;
use mixlong::optimizer::Criteria;
use mixlong::postfit::{cumulative_incidence, dynamic_prediction};
use mixlong::spec::{SurvivalSpec, SurvivalTerm, Term};
use mixlong::{Family, ModelSpec, ValidatedModel};

pub type Result<T> = std::result::Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// A link resolved on `[lo, hi]`: equidistant knots for splines and the
/// integer levels of the range for thresholds.
pub fn resolve_link(kind: &str, lo: f64, hi: f64) -> Result<Link> {
    if !(lo < hi) {
        return Err(format!("invalid range [{lo}, {hi}]"));
    }
    let spec = LinkSpec::parse(kind).map_err(err)?;
    let values: Vec<f64> = match spec {
        LinkSpec::Thresholds => (lo.ceil() as i64..=hi.floor() as i64).map(|v| v as f64).collect(),
        _ => (0..=100).map(|i| lo + (hi - lo) * i as f64 / 100.0).collect(),
    };
    Link::resolve(&spec, &values, Some((lo, hi)), 0.5, None).map_err(err)
}

/// Default parameters of a link, as the optimizer would start.
pub fn link_defaults(kind: &str, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let link = resolve_link(kind, lo, hi)?;
    let values: Vec<f64> = (0..=100).map(|i| lo + (hi - lo) * i as f64 / 100.0).collect();
    let mut eta = link.default_eta(&values);
    if matches!(LinkSpec::parse(kind).map_err(err)?, LinkSpec::Linear) {
        // a standardized latent scale reads better than a mean-centered one
        eta = vec![0.5 * (lo + hi), 0.25 * (hi - lo)];
    }
    Ok(eta)
}

pub fn link_param_names(kind: &str, lo: f64, hi: f64) -> Result<Vec<String>> {
    Ok(resolve_link(kind, lo, hi)?.param_names())
}

/// `points` outcome values over the range followed by their latent
/// values. Threshold links give the cut points instead.
pub fn link_curve(kind: &str, lo: f64, hi: f64, eta: &[f64], points: usize) -> Result<Vec<f64>> {
    let link = resolve_link(kind, lo, hi)?;
    if eta.len() != link.n_params() {
        return Err(format!("{kind} link takes {} parameters, got {}", link.n_params(), eta.len()));
    }
    if !link.is_continuous() {
        return Ok(mixlong::links::thresholds_expand(eta));
    }
    let n = points.max(2);
    let ys: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let mut lat = Vec::with_capacity(n);
    for &y in &ys {
        lat.push(link.inverse_transform(y, eta).map_err(err)?.0);
    }
    Ok(ys.into_iter().chain(lat).collect())
}

/// A joint latent class model with class-specific linear trajectories,
/// a random intercept and one time-to-event outcome depending on a
/// covariate `x`.
pub struct JointDemo {
    fit: FittedModel,
}

const COLUMNS: [&str; 3] = ["t", "y", "x"];

fn columns() -> Vec<String> {
    COLUMNS.iter().map(|s| s.to_string()).collect()
}

impl JointDemo {
    pub fn new(ng: usize, hazard: &str, horizon: f64) -> Result<Self> {
        if !(1..=6).contains(&ng) {
            return Err(format!("number of classes must be in 1..=6, got {ng}"));
        }
        if !(horizon > 0.0) {
            return Err("horizon must be positive".into());
        }
        let mut s = ModelSpec::new(Family::Jointlcmm, "id", &["y"]);
        s.time = Some("t".into());
        s.fixed = vec![Term::Intercept, Term::Column("t".into())];
        s.random = vec![Term::Intercept];
        s.ng = ng;
        if ng > 1 {
            s.mixture = s.fixed.clone();
        }
        let mut surv = SurvivalSpec::new("T", "E");
        surv.terms = vec![SurvivalTerm::parse("x").map_err(err)?];
        surv.hazard = vec![HazardSpec::parse(hazard).map_err(err)?];
        s.survival = Some(surv);
        let causes = declared_causes(&s, (0.0, horizon), 1).map_err(err)?;
        let model = ValidatedModel::declared(&s, Vec::new(), causes).map_err(err)?;
        let theta = default_theta(&model, horizon);
        Ok(Self { fit: fitted(model, theta) })
    }

    pub fn parameter_names(&self) -> Vec<String> {
        self.fit
            .model
            .layout
            .params()
            .iter()
            .map(|p| match p.class {
                Some(g) => format!("{} (class {})", p.key, g + 1),
                None => p.key.clone(),
            })
            .collect()
    }

    pub fn parameters(&self) -> Vec<f64> {
        self.fit.theta.clone()
    }

    pub fn set_parameters(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.fit.theta.len() {
            return Err(format!("expected {} parameters, got {}", self.fit.theta.len(), theta.len()));
        }
        Evaluator::new(&self.fit.model, theta).map_err(err)?;
        self.fit.theta = theta.to_vec();
        self.fit.initial = theta.to_vec();
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.fit.model.layout.shape().ng
    }

    /// Hazards of each class at `times`, class after class.
    pub fn hazards(&self, x: f64, times: &[f64]) -> Result<Vec<f64>> {
        self.per_class(x, times, |(h, _)| h)
    }

    /// Cumulative hazards of each class at `times`, class after class.
    pub fn cumulative_hazards(&self, x: f64, times: &[f64]) -> Result<Vec<f64>> {
        self.per_class(x, times, |(_, a)| a)
    }

    fn per_class(&self, x: f64, times: &[f64], pick: impl Fn((f64, f64)) -> f64) -> Result<Vec<f64>> {
        let ev = Evaluator::new(&self.fit.model, &self.fit.theta).map_err(err)?;
        let mut out = Vec::with_capacity(times.len() * self.classes());
        for g in 0..self.classes() {
            for &t in times {
                out.push(pick(ev.hazard(&[x], t, g, 0).map_err(err)?));
            }
        }
        Ok(out)
    }

    /// Cumulative incidence at `times` for each class, then averaged over
    /// the class probabilities.
    pub fn incidence(&self, x: f64, times: &[f64]) -> Result<Vec<f64>> {
        let rows = cumulative_incidence(&self.fit, &["x".to_string()], &[x], times, None, 0).map_err(err)?;
        let ng = self.classes();
        let mut out = vec![0.0; (ng + 1) * times.len()];
        for r in rows {
            let block = r.class.unwrap_or(ng);
            let i = times.iter().position(|&t| t == r.time).unwrap_or(0);
            out[block * times.len() + i] = r.value;
        }
        Ok(out)
    }

    /// Probability of the event within each horizon after `landmark` for
    /// a subject with covariate `x`, event-free at the landmark, whose
    /// marker was measured as `values` at `times`.
    pub fn dynamic_prediction(&self, times: &[f64], values: &[f64], x: f64, landmark: f64, horizons: &[f64]) -> Result<Vec<f64>> {
        if times.len() != values.len() {
            return Err("times and values differ in length".into());
        }
        let rows: Vec<Vec<f64>> = times.iter().zip(values).map(|(&t, &y)| vec![t, y, x]).collect();
        let out = dynamic_prediction(&self.fit, &columns(), &[("subject".into(), rows)], &[landmark], horizons, None, 0)
            .map_err(err)?;
        Ok(out.into_iter().map(|r| r.value).collect())
    }

    /// Class-specific mean marker trajectories at `times`, class after
    /// class.
    pub fn class_means(&self, times: &[f64]) -> Result<Vec<f64>> {
        let model = &self.fit.model;
        // the outcome value is irrelevant to the mean
        let rows: Vec<Vec<f64>> = times.iter().map(|&t| vec![t, 0.0, 0.0]).collect();
        let d = model.subject_from_rows("grid", &columns(), &rows, None).map_err(err)?;
        let ev = Evaluator::new(model, &self.fit.theta).map_err(err)?;
        Ok((0..self.classes()).flat_map(|g| ev.class_mean(&d, g).iter().copied().collect::<Vec<_>>()).collect())
    }
}

/// Classes spread over intercepts and slopes, event rates increasing
/// with the class index.
fn default_theta(model: &ValidatedModel, horizon: f64) -> Vec<f64> {
    let ng = model.layout.shape().ng as f64;
    let weibull = model.spec.survival.as_ref().is_some_and(|s| s.hazard == [HazardSpec::Weibull]);
    model
        .layout
        .params()
        .iter()
        .map(|p| {
            let k = p.key.as_str();
            // class position in [0, ng - 1], 0 for common parameters
            let c = p.class.map_or(0.0, |g| g as f64);
            let centered = c - (ng - 1.0) / 2.0;
            match k {
                _ if k.starts_with("classmb") => 0.0,
                // baseline parameters enter squared
                "baseline:0:0" if weibull => ((0.5 + 0.4 * c) / horizon).sqrt(),
                "baseline:0:1" if weibull => 1.3f64.sqrt(),
                _ if k.starts_with("baseline") => (0.3 * (1.0 + 0.3 * c)).sqrt(),
                _ if k.starts_with("surv:") => 0.4,
                "fixed:intercept" => 10.0 - 3.0 * centered,
                "fixed:t" => -0.3 - 0.4 * centered,
                _ if k.starts_with("chol") => 1.0,
                _ => 0.8,
            }
        })
        .collect()
}

fn fitted(model: ValidatedModel, theta: Vec<f64>) -> FittedModel {
    let n = theta.len();
    FittedModel {
        model,
        initial: theta.clone(),
        theta,
        free: vec![true; n],
        cov_free: None,
        loglik: f64::NAN,
        iterations: 0,
        criteria: Criteria::default(),
        converged: true,
        stalled: false,
        grid_logliks: Vec::new(),
        notes: Vec::new(),
    }
}
