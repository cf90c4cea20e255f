//! Individual log-likelihood contributions and the total objective.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hazards::hazard_at;
use crate::layout::{CorKind, LayoutShape, ModelParams};
use crate::links::{thresholds_expand, LinkKind};
use crate::model::{SubjectDesign, ValidatedModel};
use crate::numerics::special::norm_interval;
use crate::numerics::{gauss_hermite, log_sum_exp, CholeskyFactor, QuadratureRule};

/// Nodes per dimension for ordinal outcomes.
pub const ORDINAL_NODES: usize = 30;
/// Largest number of random effects integrated by the tensor rule.
pub const MAX_ORDINAL_DIM: usize = 3;

/// Per-class pieces of one subject's likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTerms {
    /// `log π_ig`.
    pub log_prior: Vec<f64>,
    /// Longitudinal log-density (including Jacobians) in each class.
    pub log_long: Vec<f64>,
    /// `−Σ_p A_p(T|g) + log λ_E(T|g)`, zero without survival.
    pub log_surv: Vec<f64>,
    /// `−Σ_p A_p(T0|g)` for delayed entry, `None` otherwise.
    pub log_entry_surv: Option<Vec<f64>>,
}

impl ClassTerms {
    /// Joint log-density of class membership and data in each class.
    pub fn joint(&self) -> Vec<f64> {
        (0..self.log_prior.len())
            .map(|g| self.log_prior[g] + self.log_long[g] + self.log_surv[g])
            .collect()
    }

    pub fn loglik(&self) -> f64 {
        let mut l = log_sum_exp(&self.joint());
        if let Some(e) = &self.log_entry_surv {
            let t: Vec<f64> = (0..e.len()).map(|g| self.log_prior[g] + e[g]).collect();
            l -= log_sum_exp(&t);
        }
        l
    }

    /// Posterior class-membership probabilities.
    pub fn posterior(&self) -> Vec<f64> {
        crate::layout::softmax(&self.joint())
    }
}

/// Parameters unpacked once per evaluation, shared by all subjects.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    pub model: &'a ValidatedModel,
    pub params: ModelParams,
    b: DMatrix<f64>,
    b_lower: DMatrix<f64>,
    rule: Option<QuadratureRule>,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a ValidatedModel, theta: &[f64]) -> Result<Self> {
        let params = model.layout.unpack(theta)?;
        Self::from_params(model, params)
    }

    pub fn from_params(model: &'a ValidatedModel, params: ModelParams) -> Result<Self> {
        let shape = model.layout.shape();
        let b = params.b_matrix(shape);
        let b_lower = params.b_lower(shape);
        let ordinal = shape.links.iter().any(|l| !l.is_continuous());
        let rule = if ordinal && shape.q() > 0 {
            if shape.q() > MAX_ORDINAL_DIM {
                return Err(Error::Unsupported(format!(
                    "ordinal outcome with {} random effects (at most {MAX_ORDINAL_DIM})",
                    shape.q()
                )));
            }
            Some(gauss_hermite(ORDINAL_NODES)?)
        } else {
            None
        };
        Ok(Self {
            model,
            params,
            b,
            b_lower,
            rule,
        })
    }

    pub fn shape(&self) -> &LayoutShape {
        self.model.layout.shape()
    }

    /// Random-effect covariance `B` (class 1 scale before `ω_g`).
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Transformed outcomes and the sum of log-Jacobians.
    pub fn transformed_outcomes(&self, s: &SubjectDesign) -> Result<(Vec<f64>, f64)> {
        let links = &self.shape().links;
        if links.is_empty() {
            return Ok((s.y.clone(), 0.0));
        }
        let mut out = Vec::with_capacity(s.y.len());
        let mut jac = 0.0;
        for (j, &y) in s.y.iter().enumerate() {
            let k = s.marker[j];
            let (v, lj) = links[k].inverse_transform(y, &self.params.links[k])?;
            out.push(v);
            jac += lj;
        }
        Ok((out, jac))
    }

    /// Mean of the (transformed) outcomes in class `g`.
    pub fn class_mean(&self, s: &SubjectDesign, g: usize) -> DVector<f64> {
        let p = &self.params;
        let mut mu = &s.x_common * DVector::from_column_slice(&p.beta);
        if !p.upsilon.is_empty() && s.x_class.ncols() > 0 {
            mu += &s.x_class * DVector::from_column_slice(&p.upsilon[g]);
        }
        for (c, gamma) in p.contrasts.iter().enumerate() {
            for j in 0..mu.len() {
                mu[j] += s.x_contrast[(j, c)] * gamma[s.marker[j]];
            }
        }
        mu
    }

    /// Covariance of the random part `ω_g² Z B Z'`.
    pub fn random_covariance(&self, s: &SubjectDesign, g: usize) -> DMatrix<f64> {
        let w = self.params.omega[g];
        (&s.z * &self.b * s.z.transpose()) * (w * w)
    }

    /// Covariance of the correlated process between the observation times.
    pub fn process_covariance(&self, times: &[f64]) -> DMatrix<f64> {
        let n = times.len();
        let c = &self.params.cor;
        match self.shape().cor {
            CorKind::None => DMatrix::zeros(n, n),
            CorKind::Brownian => {
                let s2 = c[0] * c[0];
                DMatrix::from_fn(n, n, |i, j| s2 * times[i].min(times[j]))
            }
            CorKind::Autoregressive => {
                let s2 = c[0] * c[0];
                let rate = c[1] * c[1];
                DMatrix::from_fn(n, n, |i, j| s2 * (-rate * (times[i] - times[j]).abs()).exp())
            }
        }
    }

    /// Full covariance `V_ig` of the (transformed) outcomes.
    pub fn class_covariance(&self, s: &SubjectDesign, g: usize) -> DMatrix<f64> {
        let mut v = self.random_covariance(s, g) + self.process_covariance(&s.times);
        let p = &self.params;
        let n = s.n_obs();
        for i in 0..n {
            let ki = s.marker[i];
            v[(i, i)] += p.sigma[ki] * p.sigma[ki];
            if !p.random_y.is_empty() {
                let a2 = p.random_y[ki] * p.random_y[ki];
                for j in 0..n {
                    if s.marker[j] == ki {
                        v[(i, j)] += a2;
                    }
                }
            }
        }
        v
    }

    fn continuous_terms(&self, s: &SubjectDesign) -> Result<Vec<f64>> {
        let ng = self.shape().ng;
        let (y, jac) = self.transformed_outcomes(s)?;
        let nwg = self.shape().nwg;
        let mut out = Vec::with_capacity(ng);
        let mut shared: Option<CholeskyFactor> = None;
        for g in 0..ng {
            let mu = self.class_mean(s, g);
            let r: Vec<f64> = y.iter().zip(mu.iter()).map(|(a, b)| a - b).collect();
            let factor = match (&shared, nwg) {
                (Some(f), false) => f.clone(),
                _ => {
                    let f = CholeskyFactor::decompose(&self.class_covariance(s, g))?;
                    if !nwg {
                        shared = Some(f.clone());
                    }
                    f
                }
            };
            out.push(factor.gaussian_logdensity(&r) + jac);
        }
        Ok(out)
    }

    /// Log-probability of ordinal outcomes given the latent means `lat`.
    fn ordinal_logprob(&self, s: &SubjectDesign, lat: &[f64], cuts: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        let sd = self.params.sigma.first().copied().unwrap_or(1.0).abs();
        for (j, &y) in s.y.iter().enumerate() {
            let k = s.marker[j];
            let (levels, min_level) = match self.shape().links[k].kind {
                LinkKind::Thresholds { levels, min_level } => (levels, min_level),
                _ => unreachable!("ordinal path with a continuous link"),
            };
            let l = (y - min_level as f64).round() as usize;
            let lo = if l == 0 { f64::NEG_INFINITY } else { cuts[k][l - 1] };
            let hi = if l + 1 == levels { f64::INFINITY } else { cuts[k][l] };
            total += norm_interval((lo - lat[j]) / sd, (hi - lat[j]) / sd).ln();
        }
        total
    }

    fn ordinal_terms(&self, s: &SubjectDesign) -> Result<Vec<f64>> {
        let shape = self.shape();
        let ng = shape.ng;
        let q = shape.q();
        for (j, &y) in s.y.iter().enumerate() {
            if let LinkKind::Thresholds { levels, min_level } = shape.links[s.marker[j]].kind {
                let l = y - min_level as f64;
                if l.fract() != 0.0 || l < 0.0 || l >= levels as f64 {
                    return Err(Error::OutOfRange {
                        value: y,
                        min: min_level as f64,
                        max: (min_level + levels as i64 - 1) as f64,
                    });
                }
            }
        }
        let cuts: Vec<Vec<f64>> = self.params.links.iter().map(|e| thresholds_expand(e)).collect();
        let mut out = Vec::with_capacity(ng);
        for g in 0..ng {
            let mu = self.class_mean(s, g);
            if q == 0 {
                out.push(self.ordinal_logprob(s, mu.as_slice(), &cuts));
                continue;
            }
            let rule = self.rule.as_ref().expect("quadrature rule for ordinal outcomes");
            let scaled = &self.b_lower * self.params.omega[g];
            // Z L ω, so that u = ω L z with z standard normal
            let zl = &s.z * &scaled;
            let m = rule.len();
            let total = m.pow(q as u32);
            let mut terms = Vec::with_capacity(total);
            let mut idx = vec![0usize; q];
            let mut node = vec![0.0; q];
            let mut lat = vec![0.0; s.n_obs()];
            for _ in 0..total {
                let mut logw = 0.0;
                for d in 0..q {
                    node[d] = rule.nodes[idx[d]];
                    logw += rule.weights[idx[d]].ln();
                }
                for j in 0..lat.len() {
                    let mut v = mu[j];
                    for d in 0..q {
                        v += zl[(j, d)] * node[d];
                    }
                    lat[j] = v;
                }
                terms.push(logw + self.ordinal_logprob(s, &lat, &cuts));
                for d in 0..q {
                    idx[d] += 1;
                    if idx[d] < m {
                        break;
                    }
                    idx[d] = 0;
                }
            }
            out.push(log_sum_exp(&terms));
        }
        Ok(out)
    }

    /// Covariate part of the hazard of cause `p` in class `g`.
    pub fn surv_lin_pred(&self, x: &[f64], g: usize, p: usize) -> f64 {
        let shape = self.shape();
        let mut lp = 0.0;
        for (c, coef) in shape.surv_common.iter().enumerate() {
            if coef.causes.contains(&p) {
                lp += self.params.nu[c] * x[coef.term];
            }
        }
        for (c, coef) in shape.surv_class.iter().enumerate() {
            if coef.causes.contains(&p) {
                lp += self.params.delta[g][c] * x[coef.term];
            }
        }
        lp
    }

    /// `(λ_p, A_p)` at `t` for cause `p` in class `g`.
    pub fn hazard(&self, x: &[f64], t: f64, g: usize, p: usize) -> Result<(f64, f64)> {
        let lp = self.surv_lin_pred(x, g, p);
        hazard_at(&self.shape().causes, &self.params.survival, t, g, p, lp)
    }

    /// `−Σ_p A_p(t | g)`.
    pub fn log_survival(&self, x: &[f64], t: f64, g: usize) -> Result<f64> {
        let mut total = 0.0;
        for p in 0..self.shape().causes.len() {
            total += self.hazard(x, t, g, p)?.1;
        }
        Ok(-total)
    }

    /// Per-class likelihood pieces of subject `s`.
    pub fn class_terms(&self, s: &SubjectDesign) -> Result<ClassTerms> {
        let shape = self.shape();
        let ng = shape.ng;
        let log_prior: Vec<f64> = self.params.class_probs(&s.x_classmb).iter().map(|p| p.ln()).collect();
        let log_long = if s.n_obs() == 0 {
            vec![0.0; ng]
        } else if shape.links.iter().any(|l| !l.is_continuous()) {
            self.ordinal_terms(s)?
        } else {
            self.continuous_terms(s)?
        };
        let mut log_surv = vec![0.0; ng];
        let mut log_entry_surv = None;
        if let Some(sv) = &s.survival {
            let mut entry = vec![0.0; ng];
            for g in 0..ng {
                let mut v = self.log_survival(&sv.x, sv.time, g)?;
                if sv.event > 0 {
                    let (lam, _) = self.hazard(&sv.x, sv.time, g, sv.event - 1)?;
                    v += lam.ln();
                }
                log_surv[g] = v;
                if let Some(t0) = sv.entry {
                    entry[g] = self.log_survival(&sv.x, t0, g)?;
                }
            }
            if sv.entry.is_some() {
                log_entry_surv = Some(entry);
            }
        }
        Ok(ClassTerms {
            log_prior,
            log_long,
            log_surv,
            log_entry_surv,
        })
    }

    pub fn subject_loglik(&self, s: &SubjectDesign) -> Result<f64> {
        let l = self.class_terms(s)?.loglik();
        if l.is_finite() {
            Ok(l)
        } else {
            Err(Error::InvalidArgument(format!("non-finite contribution of subject `{}`", s.id)))
        }
    }

    /// Contributions of every subject, in subject order.
    pub fn subject_logliks(&self) -> Result<Vec<f64>> {
        self.model
            .subjects
            .par_iter()
            .map(|s| self.subject_loglik(s))
            .collect()
    }

    pub fn total(&self) -> Result<f64> {
        // ordered sequential reduction for run-to-run identical values
        Ok(self.subject_logliks()?.iter().sum())
    }
}

/// Total log-likelihood at `theta`.
pub fn total_loglik(model: &ValidatedModel, theta: &[f64]) -> Result<f64> {
    Evaluator::new(model, theta)?.total()
}

/// Total log-likelihood as an optimization objective: `None` marks an
/// evaluation failure.
pub fn objective(model: &ValidatedModel, theta: &[f64]) -> Option<f64> {
    total_loglik(model, theta).ok().filter(|v| v.is_finite())
}
