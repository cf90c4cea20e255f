use super::{bands_over_draws, Band};
use crate::error::{Error, Result};
use crate::fit::FittedModel;
use crate::layout::softmax;
use crate::likelihood::Evaluator;
use crate::model::{Columns, ValidatedModel};
use crate::numerics::gauss_legendre;

const INCIDENCE_NODES: usize = 50;
const GRADED_PANELS: i32 = 15;
const SUBSTITUTION_POWER: i32 = 20;

/// Cumulative incidence of one cause at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceRow {
    pub time: f64,
    /// 0-based cause.
    pub cause: usize,
    /// `None` for the incidence averaged over the class probabilities.
    pub class: Option<usize>,
    pub value: f64,
    pub band: Option<Band>,
}

/// `F_p(b | g) − F_p(a | g)` for covariates `x`.
fn incidence_between(ev: &Evaluator, x: &[f64], a: f64, b: f64, g: usize, p: usize) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    if ev.shape().causes.len() == 1 {
        return Ok(ev.log_survival(x, a, g)?.exp() - ev.log_survival(x, b, g)?.exp());
    }
    // integrate piece by piece between the knots of the baselines
    let mut cuts = vec![a];
    for c in &ev.shape().causes {
        if let Some(k) = c.baseline.knots() {
            cuts.extend(k.knots().iter().copied().filter(|&v| v > a && v < b));
        }
    }
    if a == 0.0 {
        // Weibull hazards can be singular at the origin: geometric mesh
        cuts.extend((1..=GRADED_PANELS).map(|k| b * 0.25f64.powi(k)));
    }
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut acc = 0.0;
    let density = |u: f64| -> Result<f64> { Ok(ev.hazard(x, u, g, p)?.0 * ev.log_survival(x, u, g)?.exp()) };
    for w in cuts.windows(2) {
        if w[0] == 0.0 {
            // u = w1·v^m turns a t^(k-1) hazard into a regular integrand
            let m = SUBSTITUTION_POWER;
            let rule = gauss_legendre(INCIDENCE_NODES, 0.0, 1.0)?;
            for (v, wt) in rule.nodes.iter().zip(&rule.weights) {
                let u = w[1] * v.powi(m);
                acc += wt * density(u)? * w[1] * f64::from(m) * v.powi(m - 1);
            }
        } else {
            let rule = gauss_legendre(INCIDENCE_NODES, w[0], w[1])?;
            for (u, wt) in rule.nodes.iter().zip(&rule.weights) {
                acc += wt * density(*u)?;
            }
        }
    }
    Ok(acc)
}

fn require_joint(model: &ValidatedModel) -> Result<()> {
    if model.spec.survival.is_none() {
        return Err(Error::Unsupported("survival predictions of a model without time to event".into()));
    }
    Ok(())
}

/// Class-specific and marginal cumulative incidences of every cause for a
/// covariate profile `row`, with percentile bands over `draws` parameter
/// draws.
pub fn cumulative_incidence(
    fit: &FittedModel,
    columns: &[String],
    row: &[f64],
    times: &[f64],
    draws: Option<usize>,
    seed: u64,
) -> Result<Vec<IncidenceRow>> {
    let model = &fit.model;
    require_joint(model)?;
    let cols = Columns::new(columns);
    let x = cols.eval_all(&model.survival_terms, row)?;
    let x_c = cols.eval_all(&model.spec.classmb, row)?;
    if x.iter().chain(&x_c).any(|v| !v.is_finite()) {
        return Err(Error::Data("missing covariate in the prediction profile".into()));
    }
    let shape = model.layout.shape();
    let (ng, np) = (shape.ng, shape.causes.len());
    let mut meta = Vec::new();
    for &t in times {
        for p in 0..np {
            for g in 0..ng {
                meta.push((t, p, Some(g)));
            }
            meta.push((t, p, None));
        }
    }
    let eval = |theta: &[f64]| -> Result<Vec<f64>> {
        let ev = Evaluator::new(model, theta)?;
        let pi = ev.params.class_probs(&x_c);
        let mut out = Vec::with_capacity(meta.len());
        for &t in times {
            for p in 0..np {
                let mut marginal = 0.0;
                for g in 0..ng {
                    let f = incidence_between(&ev, &x, 0.0, t, g, p)?;
                    marginal += pi[g] * f;
                    out.push(f);
                }
                out.push(marginal);
            }
        }
        Ok(out)
    };
    let values = eval(&fit.theta)?;
    let bands = match draws {
        Some(n) if n > 0 => bands_over_draws(fit, n, seed, values.len(), eval)?,
        _ => vec![None; values.len()],
    };
    Ok(meta
        .iter()
        .enumerate()
        .map(|(i, &(time, cause, class))| IncidenceRow {
            time,
            cause,
            class,
            value: values[i],
            band: bands[i],
        })
        .collect())
}

/// Probability of an event of one cause within a horizon after a landmark
/// time, given survival and the marker history up to the landmark.
#[derive(Debug, Clone, PartialEq)]
pub struct DynPredRow {
    pub id: String,
    pub landmark: f64,
    pub horizon: f64,
    pub cause: usize,
    pub value: f64,
    pub band: Option<Band>,
}

/// Dynamic predictions for new subjects given as `(id, rows)`. Only rows
/// with time at most the landmark enter the history.
pub fn dynamic_prediction(
    fit: &FittedModel,
    columns: &[String],
    subjects: &[(String, Vec<Vec<f64>>)],
    landmarks: &[f64],
    horizons: &[f64],
    draws: Option<usize>,
    seed: u64,
) -> Result<Vec<DynPredRow>> {
    let model = &fit.model;
    require_joint(model)?;
    if horizons.iter().any(|h| !(*h >= 0.0)) {
        return Err(Error::InvalidArgument("horizons must be nonnegative".into()));
    }
    let np = model.layout.shape().causes.len();
    // designs without survival part so that only the history is weighted
    let mut cases = Vec::new();
    for (id, rows) in subjects {
        for &s in landmarks {
            let mut d = model.subject_from_rows(id, columns, rows, Some(s))?;
            let x = d.survival.take().map(|sv| sv.x).unwrap_or_default();
            cases.push((id.clone(), s, d, x));
        }
    }
    let eval = |theta: &[f64]| -> Result<Vec<f64>> {
        let ev = Evaluator::new(model, theta)?;
        let ng = ev.shape().ng;
        let mut out = Vec::new();
        for (_, s, d, x) in &cases {
            let terms = ev.class_terms(d)?;
            let w = softmax(&terms.joint());
            let surv: Vec<f64> = (0..ng).map(|g| ev.log_survival(x, *s, g).map(f64::exp)).collect::<Result<_>>()?;
            let denom: f64 = (0..ng).map(|g| w[g] * surv[g]).sum();
            for &h in horizons {
                for p in 0..np {
                    let mut num = 0.0;
                    for g in 0..ng {
                        num += w[g] * incidence_between(&ev, x, *s, s + h, g, p)?;
                    }
                    out.push(if denom > 0.0 { num / denom } else { f64::NAN });
                }
            }
        }
        Ok(out)
    };
    let values = eval(&fit.theta)?;
    let bands = match draws {
        Some(n) if n > 0 => bands_over_draws(fit, n, seed, values.len(), eval)?,
        _ => vec![None; values.len()],
    };
    let mut out = Vec::with_capacity(values.len());
    let mut i = 0;
    for (id, s, _, _) in &cases {
        for &h in horizons {
            for p in 0..np {
                out.push(DynPredRow {
                    id: id.clone(),
                    landmark: *s,
                    horizon: h,
                    cause: p,
                    value: values[i],
                    band: bands[i],
                });
                i += 1;
            }
        }
    }
    Ok(out)
}
