//! Measurement links between an observed marker and its noisy latent
//! process.
//!
//! Continuous links are described through `H⁻¹`, the map from the marker
//! scale to the latent scale, together with the log of its derivative.
//! The ordinal (thresholds) link is a cumulative probit model whose
//! cut-points are built from unconstrained parameters.

use crate::basis::{self, KnotPlacement, KnotVector};
use crate::error::{Error, Result};
use crate::numerics::quantile_sorted;
use crate::numerics::special::{beta_pdf, norm_quantile, reg_inc_beta};

/// Link family as written in a model specification, before the outcome
/// range and knots are known.
#[derive(Debug, Clone, PartialEq)]
pub enum LinkSpec {
    Linear,
    Beta,
    Splines { n_knots: usize, placement: KnotPlacement },
    Thresholds,
}

impl LinkSpec {
    /// Parses `linear`, `beta`, `thresholds`, `splines` or
    /// `<n>-<equi|quant|manual>-splines`. Plain `splines` means five
    /// equidistant knots.
    pub fn parse(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "linear" => return Ok(Self::Linear),
            "beta" => return Ok(Self::Beta),
            "thresholds" => return Ok(Self::Thresholds),
            "splines" => {
                return Ok(Self::Splines {
                    n_knots: 5,
                    placement: KnotPlacement::Equi,
                })
            }
            _ => {}
        }
        let parts: Vec<&str> = lower.split('-').collect();
        if parts.len() == 3 && parts[2] == "splines" {
            let n: usize = parts[0]
                .parse()
                .map_err(|_| Error::Spec(format!("invalid knot count in link `{s}`")))?;
            if n < 3 {
                return Err(Error::Spec(format!("spline links need at least 3 knots, got {n}")));
            }
            return Ok(Self::Splines {
                n_knots: n,
                placement: KnotPlacement::parse(parts[1])?,
            });
        }
        Err(Error::Spec(format!("unknown link `{s}`")))
    }

    pub fn descriptor(&self) -> String {
        match self {
            Self::Linear => "linear".into(),
            Self::Beta => "beta".into(),
            Self::Thresholds => "thresholds".into(),
            Self::Splines { n_knots, placement } => format!("{n_knots}-{}-splines", placement.as_str()),
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Self::Thresholds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinkKind {
    Linear,
    Beta { eps: f64 },
    Splines(KnotVector),
    Thresholds { levels: usize, min_level: i64 },
}

/// A link with its outcome range resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub kind: LinkKind,
    pub min: f64,
    pub max: f64,
}

impl Link {
    /// Resolves a link specification against the observed values of the
    /// marker. `range` overrides the observed range for Beta and spline
    /// links; observations outside it are rejected.
    pub fn resolve(
        spec: &LinkSpec,
        values: &[f64],
        range: Option<(f64, f64)>,
        eps: f64,
        interior_knots: Option<&[f64]>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("marker has no observations".into()));
        }
        let obs_min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let obs_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (min, max) = match (spec, range) {
            (LinkSpec::Beta | LinkSpec::Splines { .. }, Some((lo, hi))) => {
                if !(lo < hi) {
                    return Err(Error::Spec(format!("invalid range [{lo}, {hi}]")));
                }
                if obs_min < lo || obs_max > hi {
                    let bad = if obs_min < lo { obs_min } else { obs_max };
                    return Err(Error::OutOfRange { value: bad, min: lo, max: hi });
                }
                (lo, hi)
            }
            _ => (obs_min, obs_max),
        };
        let kind = match spec {
            LinkSpec::Linear => LinkKind::Linear,
            LinkSpec::Beta => {
                if !(eps > 0.0) {
                    return Err(Error::Spec(format!("epsY must be positive, got {eps}")));
                }
                if !(min < max) {
                    return Err(Error::Data("Beta link needs a nondegenerate outcome range".into()));
                }
                LinkKind::Beta { eps }
            }
            LinkSpec::Splines { n_knots, placement } => LinkKind::Splines(basis::place_knots(
                values,
                min,
                max,
                *n_knots,
                *placement,
                interior_knots,
            )?),
            LinkSpec::Thresholds => {
                if values.iter().any(|v| v.fract() != 0.0) {
                    return Err(Error::Data("thresholds link needs integer outcome levels".into()));
                }
                let min_level = obs_min as i64;
                let levels = (obs_max - obs_min) as usize + 1;
                if levels < 2 {
                    return Err(Error::Data("thresholds link needs at least two levels".into()));
                }
                let mut seen = vec![false; levels];
                for v in values {
                    seen[(*v - obs_min) as usize] = true;
                }
                if let Some(gap) = seen.iter().position(|s| !s) {
                    return Err(Error::Data(format!(
                        "thresholds link needs consecutive levels, level {} is never observed",
                        min_level + gap as i64
                    )));
                }
                LinkKind::Thresholds { levels, min_level }
            }
        };
        Ok(Self { kind, min, max })
    }

    pub fn linear() -> Self {
        Self {
            kind: LinkKind::Linear,
            min: f64::NEG_INFINITY,
            max: f64::INFINITY,
        }
    }

    pub fn n_params(&self) -> usize {
        match &self.kind {
            LinkKind::Linear => 2,
            LinkKind::Beta { .. } => 4,
            LinkKind::Splines(k) => k.len() + 2,
            LinkKind::Thresholds { levels, .. } => levels - 1,
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self.kind, LinkKind::Thresholds { .. })
    }

    pub fn param_names(&self) -> Vec<String> {
        match &self.kind {
            LinkKind::Linear => vec!["Linear 1".into(), "Linear 2".into()],
            LinkKind::Beta { .. } => (1..=4).map(|i| format!("Beta{i}")).collect(),
            LinkKind::Splines(k) => (1..=k.len() + 2).map(|i| format!("I-splines{i}")).collect(),
            LinkKind::Thresholds { levels, .. } => (1..*levels).map(|i| format!("thresh. parm{i}")).collect(),
        }
    }

    pub fn description(&self) -> String {
        match &self.kind {
            LinkKind::Linear => "Linear".into(),
            LinkKind::Beta { eps } => format!("Standardised Beta CDF (epsY = {eps})"),
            LinkKind::Splines(k) => {
                let nodes: Vec<String> = k.knots().iter().map(|v| format!("{v}")).collect();
                format!("Quadratic I-splines with nodes {}", nodes.join(" "))
            }
            LinkKind::Thresholds { levels, min_level } => {
                format!("Thresholds ({} levels from {})", levels, min_level)
            }
        }
    }

    fn check_len(&self, eta: &[f64]) -> Result<()> {
        if eta.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.n_params(),
                got: eta.len(),
            });
        }
        Ok(())
    }

    /// `H⁻¹(y)` and `log |dH⁻¹/dy|` for a continuous link.
    pub fn inverse_transform(&self, y: f64, eta: &[f64]) -> Result<(f64, f64)> {
        self.check_len(eta)?;
        match &self.kind {
            LinkKind::Linear => {
                if !(eta[1] > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "linear link scale must be positive, got {}",
                        eta[1]
                    )));
                }
                Ok(((y - eta[0]) / eta[1], -eta[1].ln()))
            }
            LinkKind::Beta { eps } => {
                self.check_range(y)?;
                if eta[3] == 0.0 {
                    return Err(Error::InvalidArgument("Beta link scale η4 is zero".into()));
                }
                let (a, b) = beta_canonical(eta[0], eta[1]);
                let width = self.max - self.min + 2.0 * eps;
                let ystar = (y - self.min + eps) / width;
                let h = reg_inc_beta(ystar, a, b);
                let dens = beta_pdf(ystar, a, b);
                Ok(((h - eta[2]) / eta[3], dens.ln() - eta[3].abs().ln() - width.ln()))
            }
            LinkKind::Splines(k) => {
                self.check_range(y)?;
                let i = basis::ispline_quadratic(k, y);
                let m = basis::mspline_quadratic(k, y);
                let mut value = eta[0];
                let mut slope = 0.0;
                for l in 0..i.len() {
                    let c = eta[l + 1] * eta[l + 1];
                    value += c * i[l];
                    slope += c * m[l];
                }
                Ok((value, slope.ln()))
            }
            LinkKind::Thresholds { .. } => Err(Error::Unsupported(
                "inverse transform of the thresholds link".into(),
            )),
        }
    }

    fn check_range(&self, y: f64) -> Result<()> {
        if y < self.min || y > self.max || !y.is_finite() {
            return Err(Error::OutOfRange {
                value: y,
                min: self.min,
                max: self.max,
            });
        }
        Ok(())
    }

    /// `H(λ)`: the marker value whose transform is `λ`. Continuous links
    /// clamp to the range when `λ` lies outside the image; the thresholds
    /// link returns the level whose interval contains `λ`.
    pub fn forward_transform(&self, lambda: f64, eta: &[f64]) -> Result<f64> {
        self.check_len(eta)?;
        match &self.kind {
            LinkKind::Linear => Ok(eta[0] + eta[1] * lambda),
            LinkKind::Thresholds { min_level, .. } => {
                let cuts = thresholds_expand(eta);
                let l = cuts.iter().take_while(|&&c| lambda >= c).count();
                Ok(*min_level as f64 + l as f64)
            }
            _ => self.invert_monotone(lambda, eta),
        }
    }

    fn invert_monotone(&self, lambda: f64, eta: &[f64]) -> Result<f64> {
        let (lo_val, _) = self.inverse_transform(self.min, eta)?;
        let (hi_val, _) = self.inverse_transform(self.max, eta)?;
        let increasing = hi_val >= lo_val;
        let (img_lo, img_hi) = if increasing { (lo_val, hi_val) } else { (hi_val, lo_val) };
        if lambda <= img_lo {
            return Ok(if increasing { self.min } else { self.max });
        }
        if lambda >= img_hi {
            return Ok(if increasing { self.max } else { self.min });
        }
        let mut a = self.min;
        let mut b = self.max;
        let mut y = 0.5 * (a + b);
        for _ in 0..100 {
            let (v, logj) = self.inverse_transform(y, eta)?;
            let r = v - lambda;
            if r.abs() < 1e-13 * (1.0 + lambda.abs()) {
                return Ok(y);
            }
            if (r > 0.0) == increasing {
                b = y;
            } else {
                a = y;
            }
            let slope = if increasing { logj.exp() } else { -logj.exp() };
            let newton = y - r / slope;
            y = if slope.is_finite() && slope != 0.0 && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            if b - a < 1e-14 * (1.0 + self.max.abs().max(self.min.abs())) {
                return Ok(y);
            }
        }
        Ok(y)
    }

    /// Default starting link parameters computed from the marker values.
    pub fn default_eta(&self, values: &[f64]) -> Vec<f64> {
        match &self.kind {
            LinkKind::Linear => {
                let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
                vec![mean, 1.0]
            }
            LinkKind::Beta { .. } => vec![0.0, -(2f64.ln()), 0.7, 0.1],
            LinkKind::Splines(k) => {
                let mut v = vec![-2.0];
                v.extend(std::iter::repeat_n(0.1, k.len() + 1));
                v
            }
            LinkKind::Thresholds { levels, min_level } => {
                let m = *levels;
                if m == 2 {
                    return vec![0.0];
                }
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                let med = quantile_sorted(&sorted, 0.5);
                let u = norm_quantile(0.98);
                let span = (m - 2) as f64;
                let mut v = vec![2.0 * u * (-med + *min_level as f64 + 1.0) / span];
                v.extend(std::iter::repeat_n((2.0 * u / span).sqrt(), m - 2));
                v
            }
        }
    }
}

/// Canonical Beta shape parameters from the unconstrained pair.
pub fn beta_canonical(eta1: f64, eta2: f64) -> (f64, f64) {
    let a = eta1.exp() / (eta2.exp() * (1.0 + eta1.exp()));
    let b = 1.0 / (eta1.exp() * (1.0 + eta2.exp()));
    (a, b)
}

/// Increasing cut-points `η*_1 = η_1`, `η*_l = η_1 + Σ_{j=2}^l η_j²`.
pub fn thresholds_expand(eta: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(eta.len());
    let mut acc = 0.0;
    for (l, &e) in eta.iter().enumerate() {
        acc = if l == 0 { e } else { acc + e * e };
        out.push(acc);
    }
    out
}
