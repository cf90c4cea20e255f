//! Sampling datasets from a model with known parameters.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::data::LongDataset;
use crate::error::{Error, Result};
use crate::layout::CorKind;
use crate::likelihood::Evaluator;
use crate::model::ValidatedModel;
use crate::numerics::rng::stream;
use crate::spec::Term;

/// Distribution of a simulated covariate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovariateLaw {
    Bernoulli(f64),
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl CovariateLaw {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Bernoulli(p) => f64::from(u8::from(rng.random::<f64>() < p)),
            Self::Normal { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
            Self::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateSpec {
    pub name: String,
    pub law: CovariateLaw,
    /// Drawn at every visit rather than once per subject.
    pub per_visit: bool,
}

/// Everything needed to simulate a dataset.
#[derive(Debug, Clone)]
pub struct SimDesign {
    /// Model with resolved links and hazards (see [`ValidatedModel::declared`]).
    pub model: ValidatedModel,
    pub theta: Vec<f64>,
    pub n_subjects: usize,
    /// Planned visit times (relative to entry when there is one).
    pub visits: Vec<f64>,
    /// Visits are moved by a uniform amount in `[-jitter, jitter]`
    /// (never below the first planned time).
    pub jitter: f64,
    pub covariates: Vec<CovariateSpec>,
    pub time_column: String,
    /// Administrative end of follow-up.
    pub admin_censoring: f64,
    /// Rate of exponential random censoring (0 for none).
    pub censoring_rate: f64,
    /// Entry times drawn uniformly in this interval.
    pub entry: Option<(f64, f64)>,
    /// Drop visits after the event or censoring time.
    pub truncate_at_event: bool,
    /// Column receiving the (1-based) true class.
    pub class_column: Option<String>,
    pub seed: u64,
}

impl SimDesign {
    pub fn new(model: ValidatedModel, theta: Vec<f64>, n_subjects: usize, visits: Vec<f64>, time_column: &str) -> Self {
        let joint = model.spec.survival.is_some();
        Self {
            model,
            theta,
            n_subjects,
            visits,
            jitter: 0.0,
            covariates: Vec::new(),
            time_column: time_column.to_string(),
            admin_censoring: f64::INFINITY,
            censoring_rate: 0.0,
            entry: None,
            truncate_at_event: joint,
            class_column: Some("class".into()),
            seed: 0,
        }
    }

    /// Column names of the simulated dataset.
    pub fn columns(&self) -> Vec<String> {
        let mut cols = vec![self.time_column.clone()];
        for c in &self.covariates {
            if !cols.contains(&c.name) {
                cols.push(c.name.clone());
            }
        }
        cols.extend(self.model.spec.outcomes.iter().cloned());
        if let Some(s) = &self.model.spec.survival {
            if let Some(e) = &s.entry {
                cols.push(e.clone());
            }
            cols.push(s.time.clone());
            cols.push(s.event.clone());
        }
        if let Some(c) = &self.class_column {
            cols.push(c.clone());
        }
        cols
    }
}

struct SubjectDraw {
    rows: Vec<Vec<f64>>,
}

fn sample_class<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (g, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return g;
        }
    }
    probs.len() - 1
}

/// Solves `A(t) = target` for a nondecreasing `A` on `[lo, ∞)`.
/// Returns `None` when the target is not reached within `max_t`.
fn invert_cumulative<F: Fn(f64) -> Result<f64>>(a: F, lo: f64, target: f64, max_t: f64) -> Result<Option<f64>> {
    let mut hi = if max_t.is_finite() { max_t } else { (2.0 * lo).max(1.0) };
    if max_t.is_finite() {
        if a(hi)? < target {
            return Ok(None);
        }
    } else {
        while a(hi)? < target {
            hi *= 2.0;
            if hi > 1e12 {
                return Ok(None);
            }
        }
    }
    let mut l = lo;
    while hi - l > 1e-10 * (1.0 + hi.abs()) {
        let m = 0.5 * (l + hi);
        if a(m)? < target {
            l = m;
        } else {
            hi = m;
        }
    }
    Ok(Some(0.5 * (l + hi)))
}

fn simulate_subject(d: &SimDesign, ev: &Evaluator, cols: &[String], i: usize) -> Result<SubjectDraw> {
    let mut rng = stream(d.seed, i as u64);
    let spec = &d.model.spec;
    let shape = ev.shape();
    let col = |name: &str| cols.iter().position(|c| c == name).expect("column listed");

    let entry = d.entry.map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>());
    let offset = entry.unwrap_or(0.0);
    let first = d.visits.first().copied().unwrap_or(0.0);
    let mut times: Vec<f64> = d
        .visits
        .iter()
        .map(|&t| {
            let j = if d.jitter > 0.0 { d.jitter * (2.0 * rng.random::<f64>() - 1.0) } else { 0.0 };
            offset + (t + j).max(first)
        })
        .collect();
    times.sort_by(f64::total_cmp);

    let base: Vec<f64> = {
        let mut r = vec![f64::NAN; cols.len()];
        for c in d.covariates.iter().filter(|c| !c.per_visit) {
            r[col(&c.name)] = c.law.sample(&mut rng);
        }
        r
    };
    let mut rows: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| {
            let mut r = base.clone();
            r[col(&d.time_column)] = t;
            for c in d.covariates.iter().filter(|c| c.per_visit) {
                r[col(&c.name)] = c.law.sample(&mut rng);
            }
            r
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::InvalidArgument("simulation needs at least one visit".into()));
    }
    let cols_lookup = crate::model::Columns::new(cols);
    let x_classmb = cols_lookup.eval_all(&spec.classmb, &rows[0])?;
    let g = sample_class(&ev.params.class_probs(&x_classmb), &mut rng);

    // random effects u = ω_g L z
    let q = shape.q();
    let z = DVector::from_fn(q, |_, _| rng.sample::<f64, _>(StandardNormal));
    let u = (ev.params.b_lower(shape) * z) * ev.params.omega[g];

    // correlated process on the visit times
    let mut w = vec![0.0; times.len()];
    match shape.cor {
        CorKind::None => {}
        CorKind::Brownian => {
            let s2 = ev.params.cor[0].powi(2);
            let mut prev_t = 0.0;
            let mut prev = 0.0;
            for (j, &t) in times.iter().enumerate() {
                let dt = (t - prev_t).max(0.0);
                prev += (s2 * dt).sqrt() * rng.sample::<f64, _>(StandardNormal);
                prev_t = t;
                w[j] = prev;
            }
        }
        CorKind::Autoregressive => {
            let s2 = ev.params.cor[0].powi(2);
            let rate = ev.params.cor[1].powi(2);
            for j in 0..times.len() {
                let e: f64 = rng.sample(StandardNormal);
                w[j] = if j == 0 {
                    s2.sqrt() * e
                } else {
                    let r = (-rate * (times[j] - times[j - 1]).abs()).exp();
                    r * w[j - 1] + (s2 * (1.0 - r * r)).sqrt() * e
                };
            }
        }
    }

    // survival
    let mut cutoff = f64::INFINITY;
    if let Some(s) = &spec.survival {
        let x = cols_lookup.eval_all(&d.model.survival_terms, &rows[0])?;
        let t0 = entry.unwrap_or(0.0);
        let support = shape
            .causes
            .iter()
            .map(|c| c.baseline.support_max())
            .fold(f64::INFINITY, f64::min);
        let a = |t: f64| -> Result<f64> { Ok(-ev.log_survival(&x, t, g)?) };
        let target = a(t0)? + rng.sample::<f64, _>(Exp1);
        let event_time = invert_cumulative(a, t0, target, support)?;
        let censor = (t0 + if d.censoring_rate > 0.0 {
            rng.sample::<f64, _>(Exp1) / d.censoring_rate
        } else {
            f64::INFINITY
        })
        .min(d.admin_censoring)
        .min(support);
        let (t, e) = match event_time {
            Some(te) if te <= censor => {
                let lams: Vec<f64> = (0..shape.causes.len())
                    .map(|p| ev.hazard(&x, te, g, p).map(|h| h.0))
                    .collect::<Result<_>>()?;
                (te, sample_class(&crate::layout::softmax(&lams.iter().map(|l| l.ln()).collect::<Vec<_>>()), &mut rng) + 1)
            }
            _ => (censor, 0),
        };
        if !t.is_finite() {
            return Err(Error::InvalidArgument("no censoring bound for events beyond the hazard support".into()));
        }
        for r in rows.iter_mut() {
            if let Some(ec) = &s.entry {
                r[col(ec)] = t0;
            }
            r[col(&s.time)] = t;
            r[col(&s.event)] = e as f64;
        }
        if d.truncate_at_event {
            cutoff = t;
        }
    }

    // outcomes, marker by marker
    let builder = d.model.design_builder(cols)?;
    let k_markers = spec.outcomes.len();
    let row_refs: Vec<&[f64]> = (0..k_markers).flat_map(|_| rows.iter().map(Vec::as_slice)).collect();
    let markers: Vec<usize> = (0..k_markers).flat_map(|k| std::iter::repeat_n(k, rows.len())).collect();
    let design = builder.build(&row_refs, &markers)?;
    let mu = ev.class_mean(&design, g);
    let zu = &design.z * &u;
    let alpha: Vec<f64> = (0..k_markers)
        .map(|k| {
            ev.params
                .random_y
                .get(k)
                .map_or(0.0, |s| s * rng.sample::<f64, _>(StandardNormal))
        })
        .collect();
    let n = rows.len();
    let mut outcome_values = vec![vec![0.0; n]; k_markers];
    for j in 0..design.n_obs() {
        let k = markers[j];
        let visit = j % n;
        let eps = ev.params.sigma[k] * rng.sample::<f64, _>(StandardNormal);
        let lambda = mu[j] + zu[j] + w[visit] + alpha[k] + eps;
        outcome_values[k][visit] = if shape.links.is_empty() {
            lambda
        } else {
            shape.links[k].forward_transform(lambda, &ev.params.links[k])?
        };
    }
    for (k, name) in spec.outcomes.iter().enumerate() {
        let c = col(name);
        for (j, r) in rows.iter_mut().enumerate() {
            r[c] = outcome_values[k][j];
        }
    }
    if let Some(c) = &d.class_column {
        let c = col(c);
        for r in rows.iter_mut() {
            r[c] = (g + 1) as f64;
        }
    }
    let tcol = col(&d.time_column);
    rows.retain(|r| r[tcol] <= cutoff);
    Ok(SubjectDraw { rows })
}

/// Simulates a dataset. Subject `i` (0-based) gets identifier `i + 1`
/// and draws its randomness from the stream `(seed, i)`.
pub fn simulate(d: &SimDesign) -> Result<LongDataset> {
    let cols = d.columns();
    let spec = &d.model.spec;
    let mut needed: Vec<&Term> = spec
        .fixed
        .iter()
        .chain(&spec.random)
        .chain(&spec.classmb)
        .chain(&spec.contrast)
        .collect();
    needed.extend(d.model.survival_terms.iter());
    for t in needed {
        for c in t.columns() {
            if !cols.iter().any(|x| x == c) {
                return Err(Error::Spec(format!("no generator for column `{c}`")));
            }
        }
    }
    if let Some(c) = spec.ordering_column() {
        if c != d.time_column {
            return Err(Error::Spec(format!("time column `{c}` differs from the simulated `{}`", d.time_column)));
        }
    }
    let ev = Evaluator::new(&d.model, &d.theta)?;
    let draws: Vec<SubjectDraw> = (0..d.n_subjects)
        .into_par_iter()
        .map(|i| simulate_subject(d, &ev, &cols, i))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (i, s) in draws.into_iter().enumerate() {
        for r in s.rows {
            rows.push(((i + 1).to_string(), r));
        }
    }
    LongDataset::from_rows(cols, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{Family, ModelSpec};

    fn design(seed: u64) -> SimDesign {
        let mut s = ModelSpec::new(Family::Hlme, "id", &["y"]);
        s.time = Some("t".into());
        s.fixed = vec![Term::Intercept, Term::Column("t".into())];
        s.random = vec![Term::Intercept];
        let m = ValidatedModel::declared(&s, Vec::new(), Vec::new()).unwrap();
        let mut d = SimDesign::new(m, vec![1.0, 0.5, 0.8, 0.3], 50, vec![0.0, 1.0, 2.0], "t");
        d.seed = seed;
        d
    }

    #[test]
    fn same_seed_same_data() {
        assert_eq!(simulate(&design(4)).unwrap(), simulate(&design(4)).unwrap());
        assert_ne!(simulate(&design(4)).unwrap(), simulate(&design(5)).unwrap());
    }

    #[test]
    fn shape_of_output() {
        let d = simulate(&design(1)).unwrap();
        assert_eq!(d.n_subjects(), 50);
        assert_eq!(d.n_rows(), 150);
        assert_eq!(d.columns(), &["t", "y", "class"]);
    }
}
