//! Starting values: defaults for one class, spreading a one-class fit
//! over several classes, and random draws around it.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::hazards::HazardType;
use crate::layout::{BlockKind, CorKind, ModelParams, ParameterLayout};
use crate::model::ValidatedModel;
use crate::numerics::CholeskyFactor;
use crate::spec::ModelSpec;

/// Default starting values. Class-specific blocks get the same values in
/// every class. Returns the vector and notes about fallbacks.
pub fn init_default(model: &ValidatedModel) -> (Vec<f64>, Vec<String>) {
    let shape = model.layout.shape();
    let mut notes = Vec::new();
    let mut p = ModelParams::zeros(shape);
    if shape.links.is_empty() {
        let v = &model.marker_values[0];
        let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
        for (j, name) in shape.fixed_common.iter().enumerate() {
            if name == "intercept" {
                p.beta[j] = mean;
            }
        }
        for (j, name) in shape.fixed_class.iter().enumerate() {
            if name == "intercept" {
                for g in 0..shape.ng {
                    p.upsilon[g][j] = mean;
                }
            }
        }
    }
    let q = shape.q();
    if shape.idiag {
        p.chol.iter_mut().for_each(|v| *v = 1.0);
    } else {
        for col in 0..q {
            p.chol[col * (col + 1) / 2 + col] = 1.0;
        }
    }
    match shape.cor {
        CorKind::None => {}
        CorKind::Brownian => p.cor[0] = 1.0,
        CorKind::Autoregressive => {
            p.cor[0] = 1.0;
            p.cor[1] = 1.0;
        }
    }
    p.random_y.iter_mut().for_each(|v| *v = 1.0);
    for (k, link) in shape.links.iter().enumerate() {
        p.links[k] = link.default_eta(&model.marker_values[k]);
    }
    for (c, cause) in shape.causes.iter().enumerate() {
        let st = model.event_stats[c];
        let (raw, fallback) = cause.baseline.default_raw(st.events, st.time_sum);
        if fallback {
            notes.push(format!("no event of cause {}: baseline rate set to 0.5", c + 1));
        }
        for z in p.survival.zeta[c].iter_mut() {
            z.clone_from(&raw);
        }
    }
    (model.layout.pack(&p), notes)
}

/// The one-class counterpart of a specification.
pub fn lower_spec(spec: &ModelSpec) -> ModelSpec {
    let mut s = spec.clone();
    s.ng = 1;
    s.mixture.clear();
    s.classmb.clear();
    s.nwg = false;
    if let Some(sv) = s.survival.as_mut() {
        for t in &mut sv.terms {
            t.class_specific = false;
        }
        for ht in &mut sv.hazard_type {
            if *ht == HazardType::PH {
                *ht = HazardType::Common;
            }
        }
    }
    s
}

fn lookup(lower: &ParameterLayout) -> HashMap<&str, usize> {
    lower.params().iter().enumerate().map(|(i, p)| (p.key.as_str(), i)).collect()
}

/// Spreads a one-class estimate over the classes of `target`: common
/// parameters are copied, class `g` (1-based) of a class-specific
/// parameter gets `θ̂ + (g − (G+1)/2)·SE`. Class-membership parameters
/// start at 0, `ω_g` at 1 and proportional-hazard offsets at `g/2`.
/// `se` holds one standard error per entry of `theta1`.
pub fn init_from_lower(
    lower: &ParameterLayout,
    theta1: &[f64],
    se: Option<&[f64]>,
    target: &ParameterLayout,
) -> (Vec<f64>, Vec<String>) {
    let mut notes = Vec::new();
    if se.is_none() {
        notes.push("no covariance for the one-class fit: classes start at identical values".into());
    }
    let map = lookup(lower);
    let ng = target.shape().ng as f64;
    let theta = target
        .params()
        .iter()
        .map(|info| {
            let gpos = info.class.map(|g| g as f64 + 1.0);
            match info.kind {
                BlockKind::ClassMembership => 0.0,
                BlockKind::Omega => 1.0,
                BlockKind::PhOffset => gpos.unwrap_or(1.0) / 2.0,
                _ => {
                    let (value, sd) = match map.get(info.key.as_str()) {
                        Some(&i) => (theta1[i], se.map_or(0.0, |s| s[i])),
                        // a class-specific parameter constrained in one class
                        None => (0.0, 1.0),
                    };
                    match gpos {
                        Some(g) if ng > 1.0 => value + (g - (ng + 1.0) / 2.0) * sd,
                        _ => value,
                    }
                }
            }
        })
        .collect();
    (theta, notes)
}

/// Random start: each class draws its class-specific entries from
/// `N(θ̂, V̂)`; common entries are copied from `θ̂`. `cov` is over all
/// entries of `theta1`. A non positive definite `cov` falls back to
/// independent draws from its diagonal.
pub fn init_random<R: Rng>(
    lower: &ParameterLayout,
    theta1: &[f64],
    cov: Option<&DMatrix<f64>>,
    target: &ParameterLayout,
    rng: &mut R,
) -> (Vec<f64>, Vec<String>) {
    let mut notes = Vec::new();
    let n = theta1.len();
    let factor: DMatrix<f64> = match cov {
        Some(v) => {
            // drop fixed coordinates (zero variance) before factorizing
            let idx: Vec<usize> = (0..n).filter(|&i| v[(i, i)] > 0.0).collect();
            let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| v[(idx[a], idx[b])]);
            let mut full = DMatrix::zeros(n, n);
            match CholeskyFactor::decompose(&sub) {
                Ok(f) => {
                    for a in 0..idx.len() {
                        for b in 0..idx.len() {
                            full[(idx[a], idx[b])] = f.lower()[(a, b)];
                        }
                    }
                }
                Err(_) => {
                    notes.push("covariance not positive definite: independent draws".into());
                    for &i in &idx {
                        full[(i, i)] = v[(i, i)].sqrt();
                    }
                }
            }
            full
        }
        None => {
            notes.push("no covariance for the one-class fit: classes start at identical values".into());
            DMatrix::zeros(n, n)
        }
    };
    let ng = target.shape().ng;
    let mut draws = Vec::with_capacity(ng);
    for _ in 0..ng {
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let d = &factor * z + DVector::from_column_slice(theta1);
        draws.push(d);
    }
    let map = lookup(lower);
    let theta = target
        .params()
        .iter()
        .map(|info| match info.kind {
            BlockKind::ClassMembership => 0.0,
            BlockKind::Omega => 1.0,
            BlockKind::PhOffset => (info.class.unwrap_or(0) as f64 + 1.0) / 2.0,
            _ => match (map.get(info.key.as_str()), info.class) {
                (Some(&i), Some(g)) => draws[g][i],
                (Some(&i), None) => theta1[i],
                (None, _) => rng.sample::<f64, _>(StandardNormal),
            },
        })
        .collect();
    (theta, notes)
}
