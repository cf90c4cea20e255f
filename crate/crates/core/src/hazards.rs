//! Baseline hazards and class/cause-specific proportional hazards.
//!
//! Baseline parameters are stored unconstrained and made positive either
//! by squaring (`logscale = false`) or by exponentiation
//! (`logscale = true`). For the Weibull family the two transforms also
//! select two parameterizations:
//!
//! * `logscale = true`:  `λ₀(t) = ζ₁ζ₂ t^(ζ₂-1)`, `A₀(t) = ζ₁ t^ζ₂`
//! * `logscale = false`: `λ₀(t) = ζ₁ζ₂ (ζ₁t)^(ζ₂-1)`, `A₀(t) = (ζ₁t)^ζ₂`

use crate::basis::{self, KnotPlacement, KnotVector};
use crate::error::{Error, Result};

/// Baseline family as written in a specification.
#[derive(Debug, Clone, PartialEq)]
pub enum HazardSpec {
    Weibull,
    Piecewise { n_knots: usize, placement: KnotPlacement },
    Splines { n_knots: usize, placement: KnotPlacement },
}

impl HazardSpec {
    /// Parses `Weibull`, `piecewise`, `splines`, `<n>-<type>-piecewise` or
    /// `<n>-<type>-splines`. Knot-based families default to five
    /// equidistant knots.
    pub fn parse(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "weibull" => return Ok(Self::Weibull),
            "piecewise" => {
                return Ok(Self::Piecewise {
                    n_knots: 5,
                    placement: KnotPlacement::Equi,
                })
            }
            "splines" => {
                return Ok(Self::Splines {
                    n_knots: 5,
                    placement: KnotPlacement::Equi,
                })
            }
            _ => {}
        }
        let parts: Vec<&str> = lower.split('-').collect();
        if parts.len() == 3 {
            let n: usize = parts[0]
                .parse()
                .map_err(|_| Error::Spec(format!("invalid knot count in hazard `{s}`")))?;
            if n < 3 {
                return Err(Error::Spec(format!("hazard knots must be more than 2, got {n}")));
            }
            let placement = KnotPlacement::parse(parts[1])?;
            match parts[2] {
                "piecewise" => return Ok(Self::Piecewise { n_knots: n, placement }),
                "splines" => return Ok(Self::Splines { n_knots: n, placement }),
                _ => {}
            }
        }
        Err(Error::Spec(format!("unknown hazard `{s}`")))
    }

    pub fn descriptor(&self) -> String {
        match self {
            Self::Weibull => "Weibull".into(),
            Self::Piecewise { n_knots, placement } => format!("{n_knots}-{}-piecewise", placement.as_str()),
            Self::Splines { n_knots, placement } => format!("{n_knots}-{}-splines", placement.as_str()),
        }
    }
}

/// Relation of the baseline hazard across latent classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HazardType {
    /// One baseline per class.
    Specific,
    /// One baseline multiplied by `exp(ζ_g)` in class `g`, `ζ_G = 0`.
    PH,
    /// The same baseline in all classes.
    Common,
}

impl HazardType {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "specific" => Ok(Self::Specific),
            "ph" => Ok(Self::PH),
            "common" => Ok(Self::Common),
            other => Err(Error::Spec(format!("unknown hazard type `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Specific => "Specific",
            Self::PH => "PH",
            Self::Common => "Common",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineFamily {
    Weibull,
    Piecewise(KnotVector),
    Splines(KnotVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineHazard {
    pub family: BaselineFamily,
    pub logscale: bool,
}

impl BaselineHazard {
    pub fn weibull(logscale: bool) -> Self {
        Self {
            family: BaselineFamily::Weibull,
            logscale,
        }
    }

    /// Resolves a specification: knots span `[entry_min, max(times)]` and
    /// quantile knots use every observed time.
    pub fn resolve(
        spec: &HazardSpec,
        logscale: bool,
        entry_min: f64,
        times: &[f64],
        interior_knots: Option<&[f64]>,
    ) -> Result<Self> {
        let family = match spec {
            HazardSpec::Weibull => BaselineFamily::Weibull,
            HazardSpec::Piecewise { n_knots, placement } | HazardSpec::Splines { n_knots, placement } => {
                let hi = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let knots = basis::place_knots(times, entry_min, hi, *n_knots, *placement, interior_knots)?;
                if matches!(spec, HazardSpec::Piecewise { .. }) {
                    BaselineFamily::Piecewise(knots)
                } else {
                    BaselineFamily::Splines(knots)
                }
            }
        };
        Ok(Self { family, logscale })
    }

    pub fn n_params(&self) -> usize {
        match &self.family {
            BaselineFamily::Weibull => 2,
            BaselineFamily::Piecewise(k) => k.len() - 1,
            BaselineFamily::Splines(k) => k.len() + 2,
        }
    }

    pub fn knots(&self) -> Option<&KnotVector> {
        match &self.family {
            BaselineFamily::Weibull => None,
            BaselineFamily::Piecewise(k) | BaselineFamily::Splines(k) => Some(k),
        }
    }

    /// Upper end of the time support (infinite for Weibull).
    pub fn support_max(&self) -> f64 {
        self.knots().map_or(f64::INFINITY, |k| k.max())
    }

    pub fn param_names(&self) -> Vec<String> {
        match &self.family {
            BaselineFamily::Weibull => vec!["Weibull1".into(), "Weibull2".into()],
            BaselineFamily::Piecewise(k) => (1..k.len()).map(|i| format!("piecewise{i}")).collect(),
            BaselineFamily::Splines(k) => (1..=k.len() + 2).map(|i| format!("splines{i}")).collect(),
        }
    }

    pub fn description(&self) -> String {
        let scale = if self.logscale { "exp" } else { "square" };
        match &self.family {
            BaselineFamily::Weibull => format!("Weibull ({scale} transform)"),
            BaselineFamily::Piecewise(k) => format!("piecewise constant with nodes {:?} ({scale} transform)", k.knots()),
            BaselineFamily::Splines(k) => format!("cubic M-splines with nodes {:?} ({scale} transform)", k.knots()),
        }
    }

    fn positive(&self, raw: f64) -> f64 {
        if self.logscale {
            raw.exp()
        } else {
            raw * raw
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::OutOfRange {
                value: t,
                min: 0.0,
                max: f64::INFINITY,
            });
        }
        if let Some(k) = self.knots() {
            let tol = 1e-12 * (1.0 + k.max().abs());
            if t < k.min() - tol || t > k.max() + tol {
                return Err(Error::OutOfRange {
                    value: t,
                    min: k.min(),
                    max: k.max(),
                });
            }
        }
        Ok(())
    }

    /// Baseline hazard and cumulative hazard `(λ₀(t), A₀(t))`.
    pub fn evaluate(&self, t: f64, raw: &[f64]) -> Result<(f64, f64)> {
        if raw.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.n_params(),
                got: raw.len(),
            });
        }
        self.check_time(t)?;
        let z: Vec<f64> = raw.iter().map(|&r| self.positive(r)).collect();
        Ok(match &self.family {
            BaselineFamily::Weibull => {
                let (z1, z2) = (z[0], z[1]);
                if self.logscale {
                    (z1 * z2 * t.powf(z2 - 1.0), z1 * t.powf(z2))
                } else {
                    (z1 * z2 * (z1 * t).powf(z2 - 1.0), (z1 * t).powf(z2))
                }
            }
            BaselineFamily::Piecewise(k) => {
                let kn = k.knots();
                let t = t.clamp(k.min(), k.max());
                let mut a = 0.0;
                let mut lam = z[z.len() - 1];
                for l in 0..kn.len() - 1 {
                    let (lo, hi) = (kn[l], kn[l + 1]);
                    if t >= hi {
                        a += z[l] * (hi - lo);
                    } else {
                        a += z[l] * (t - lo);
                        lam = z[l];
                        break;
                    }
                }
                (lam, a)
            }
            BaselineFamily::Splines(k) => {
                let m = basis::mspline_cubic(k, t);
                let i = basis::mspline_cubic_integral(k, t);
                let lam = z.iter().zip(&m).map(|(a, b)| a * b).sum();
                let a = z.iter().zip(&i).map(|(a, b)| a * b).sum();
                (lam, a)
            }
        })
    }

    pub fn hazard(&self, t: f64, raw: &[f64]) -> Result<f64> {
        Ok(self.evaluate(t, raw)?.0)
    }

    pub fn cumulative(&self, t: f64, raw: &[f64]) -> Result<f64> {
        Ok(self.evaluate(t, raw)?.1)
    }

    /// Default raw parameters. `events` and `event_time_sum` are the number
    /// of events of this cause and the sum of their times; with no events
    /// the Weibull rate falls back to 0.5 and `true` is returned.
    pub fn default_raw(&self, events: usize, event_time_sum: f64) -> (Vec<f64>, bool) {
        match &self.family {
            BaselineFamily::Weibull => {
                let (rate, fallback) = if events > 0 && event_time_sum > 0.0 {
                    (events as f64 / event_time_sum, false)
                } else {
                    (0.5, true)
                };
                if self.logscale {
                    (vec![rate.ln(), 0.0], fallback)
                } else {
                    (vec![rate.sqrt(), 1.0], fallback)
                }
            }
            BaselineFamily::Piecewise(k) => {
                let n = (k.len() - 1) as f64;
                let v = if self.logscale { -n.ln() } else { (1.0 / n).sqrt() };
                (vec![v; k.len() - 1], false)
            }
            BaselineFamily::Splines(k) => {
                let n = (k.len() + 2) as f64;
                let v = if self.logscale { -n.ln() } else { (1.0 / n).sqrt() };
                (vec![v; k.len() + 2], false)
            }
        }
    }
}

/// Hazard model for one cause.
#[derive(Debug, Clone, PartialEq)]
pub struct CauseModel {
    pub baseline: BaselineHazard,
    pub hazard_type: HazardType,
}

impl CauseModel {
    /// Number of baseline parameters for `g` classes.
    pub fn n_baseline_params(&self, g: usize) -> usize {
        let k = self.baseline.n_params();
        match self.hazard_type {
            HazardType::Specific => k * g,
            HazardType::PH => k + g - 1,
            HazardType::Common => k,
        }
    }
}

/// Baseline parameters of every cause, unpacked from the parameter vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurvivalParams {
    /// `zeta[p][g]`: raw baseline parameters of cause `p` in class `g`.
    /// PH and Common causes hold one entry shared by all classes.
    pub zeta: Vec<Vec<Vec<f64>>>,
    /// `ph_offsets[p]`: `G` log proportional factors (last one 0). Empty
    /// for causes that are not PH.
    pub ph_offsets: Vec<Vec<f64>>,
}

/// Hazard `(λ, A)` of cause `p` in class `g` at `t`, where `lin_pred` is
/// the covariate part `x_{S1}'ν_p + x_{S2}'δ_{gp}`.
pub fn hazard_at(
    causes: &[CauseModel],
    params: &SurvivalParams,
    t: f64,
    g: usize,
    p: usize,
    lin_pred: f64,
) -> Result<(f64, f64)> {
    let cause = &causes[p];
    let (zeta, log_factor) = match cause.hazard_type {
        HazardType::Specific => (&params.zeta[p][g], 0.0),
        HazardType::PH => (&params.zeta[p][0], params.ph_offsets[p][g]),
        HazardType::Common => (&params.zeta[p][0], 0.0),
    };
    let (lam0, a0) = cause.baseline.evaluate(t, zeta)?;
    let f = (lin_pred + log_factor).exp();
    Ok((lam0 * f, a0 * f))
}

/// All-cause survival `exp(-Σ_p A_p(t | g))`. `lin_preds[p]` holds the
/// covariate part of cause `p` in class `g`.
pub fn survival_all_causes(
    causes: &[CauseModel],
    params: &SurvivalParams,
    t: f64,
    g: usize,
    lin_preds: &[f64],
) -> Result<f64> {
    let mut total = 0.0;
    for p in 0..causes.len() {
        total += hazard_at(causes, params, t, g, p, lin_preds[p])?.1;
    }
    Ok((-total).exp())
}
