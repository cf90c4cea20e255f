//! Monotone spline bases.
//!
//! M-splines of order `k` are normalized B-splines, `M_j = k N_{j,k} /
//! (t_{j+k} - t_j)`, built on a knot sequence whose boundary knots are
//! repeated `k` times. Their integrals, the I-splines, are suffix sums of
//! order `k + 1` B-splines on the same sequence padded by one more boundary
//! knot at each end, so no quadrature is involved.
//!
//! Link functions use order-3 M-splines (quadratic pieces, `m + 1` bases
//! for `m` knots). Baseline hazards use cubic M-splines (order 4, `n_z + 2`
//! bases).

use crate::error::{Error, Result};
use crate::numerics::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnotPlacement {
    Equi,
    Quant,
    Manual,
}

impl KnotPlacement {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "equi" => Ok(Self::Equi),
            "quant" => Ok(Self::Quant),
            "manual" => Ok(Self::Manual),
            other => Err(Error::Spec(format!("unknown knot placement `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Equi => "equi",
            Self::Quant => "quant",
            Self::Manual => "manual",
        }
    }
}

/// Knots including both boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
    placement: KnotPlacement,
}

impl KnotVector {
    pub fn new(knots: Vec<f64>, placement: KnotPlacement) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Knots("at least two knots are required".into()));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::Knots("knots must be finite".into()));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Knots(format!("knots must be strictly increasing: {knots:?}")));
        }
        Ok(Self { knots, placement })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.knots[0]
    }

    pub fn max(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    pub fn placement(&self) -> KnotPlacement {
        self.placement
    }

    pub fn interior(&self) -> &[f64] {
        &self.knots[1..self.knots.len() - 1]
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min() && x <= self.max()
    }
}

/// Places `n` knots over `[lo, hi]`.
///
/// `Quant` puts interior knots at the type-7 quantiles `l/(n-1)` of
/// `values`; `Manual` takes the `n - 2` interior knots from `manual`.
pub fn place_knots(
    values: &[f64],
    lo: f64,
    hi: f64,
    n: usize,
    placement: KnotPlacement,
    manual: Option<&[f64]>,
) -> Result<KnotVector> {
    if n < 2 {
        return Err(Error::Knots(format!("need at least 2 knots, got {n}")));
    }
    if !(lo < hi) {
        return Err(Error::Knots(format!("degenerate knot range [{lo}, {hi}]")));
    }
    let step = (n - 1) as f64;
    let knots = match placement {
        KnotPlacement::Equi => (0..n)
            .map(|l| if l == n - 1 { hi } else { lo + (hi - lo) * l as f64 / step })
            .collect(),
        KnotPlacement::Quant => {
            if values.is_empty() {
                return Err(Error::Knots("quantile knots need a nonempty sample".into()));
            }
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            let mut k = vec![lo];
            k.extend((1..n - 1).map(|l| quantile_sorted(&sorted, l as f64 / step)));
            k.push(hi);
            k
        }
        KnotPlacement::Manual => {
            let inner = manual.ok_or_else(|| Error::Knots("manual placement needs interior knots".into()))?;
            if inner.len() != n - 2 {
                return Err(Error::Knots(format!(
                    "{} interior knots given, {} expected",
                    inner.len(),
                    n - 2
                )));
            }
            if let Some(&bad) = inner.iter().find(|&&v| !(v > lo && v < hi)) {
                return Err(Error::Knots(format!("manual knot {bad} outside ({lo}, {hi})")));
            }
            let mut k = vec![lo];
            k.extend_from_slice(inner);
            k.push(hi);
            k
        }
    };
    KnotVector::new(knots, placement)
}

/// Knot sequence with each boundary repeated `rep` times.
fn extended(knots: &[f64], rep: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(knots.len() + 2 * (rep - 1));
    t.extend(std::iter::repeat_n(knots[0], rep - 1));
    t.extend_from_slice(knots);
    t.extend(std::iter::repeat_n(knots[knots.len() - 1], rep - 1));
    t
}

/// All B-splines of the given order on sequence `t` at `x`, using
/// left-closed intervals except at the right boundary which belongs to the
/// last nondegenerate interval.
fn bsplines(t: &[f64], order: usize, x: f64) -> Vec<f64> {
    let nb = t.len() - order;
    let mut out = vec![0.0; nb];
    // interval index mu with t[mu] <= x < t[mu+1], t[mu] < t[mu+1]
    let last = t.len() - order;
    let mut mu = order - 1;
    while mu < last - 1 && x >= t[mu + 1] {
        mu += 1;
    }
    let mut b = vec![0.0; order];
    b[0] = 1.0;
    for d in 1..order {
        let mut saved = 0.0;
        for r in 0..d {
            let left = t[mu + r + 1];
            let right = t[mu + r + 1 - d];
            let denom = left - right;
            let term = if denom > 0.0 { b[r] / denom } else { 0.0 };
            b[r] = saved + (left - x) * term;
            saved = (x - right) * term;
        }
        b[d] = saved;
    }
    for (r, v) in b.into_iter().enumerate() {
        out[mu + 1 - order + r] = v;
    }
    out
}

/// M-spline basis of order `order` at `x` (`len + order - 2` values).
pub fn mspline(knots: &KnotVector, order: usize, x: f64) -> Vec<f64> {
    let t = extended(knots.knots(), order);
    let n = bsplines(&t, order, x.clamp(knots.min(), knots.max()));
    n.iter()
        .enumerate()
        .map(|(j, &v)| {
            let w = t[j + order] - t[j];
            if w > 0.0 {
                order as f64 * v / w
            } else {
                0.0
            }
        })
        .collect()
}

/// I-spline basis of order `order` at `x`: `I_j(x) = ∫_{min}^x M_j`.
pub fn ispline(knots: &KnotVector, order: usize, x: f64) -> Vec<f64> {
    let s = extended(knots.knots(), order + 1);
    let n = bsplines(&s, order + 1, x.clamp(knots.min(), knots.max()));
    let nb = knots.len() + order - 2;
    let mut out = vec![0.0; nb];
    let mut acc = 0.0;
    for j in (0..nb).rev() {
        acc += n[j + 1];
        out[j] = acc.min(1.0);
    }
    out
}

/// Quadratic-piece I-splines used by link functions (`m + 1` values).
pub fn ispline_quadratic(knots: &KnotVector, x: f64) -> Vec<f64> {
    ispline(knots, 3, x)
}

/// Derivatives of [`ispline_quadratic`].
pub fn mspline_quadratic(knots: &KnotVector, x: f64) -> Vec<f64> {
    mspline(knots, 3, x)
}

/// Cubic M-splines used by baseline hazards (`n_z + 2` values).
pub fn mspline_cubic(knots: &KnotVector, t: f64) -> Vec<f64> {
    mspline(knots, 4, t)
}

/// Integrals of [`mspline_cubic`] from the first knot to `t`.
pub fn mspline_cubic_integral(knots: &KnotVector, t: f64) -> Vec<f64> {
    ispline(knots, 4, t)
}
