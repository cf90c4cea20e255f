//! Random small model instances and a brute-force likelihood written
//! independently of the library's evaluation code: designs are rebuilt
//! from the raw rows, covariances are assembled entry by entry, Gaussian
//! densities use an LU factorization and ordinal integrals use nested
//! adaptive Simpson quadrature.

#![allow(dead_code)]

use mixlong::hazards::{hazard_at, HazardSpec, HazardType};
use mixlong::layout::{BlockKind, CorKind, ModelParams};
use mixlong::links::{thresholds_expand, LinkKind, LinkSpec};
use mixlong::model::validate_and_build;
use mixlong::spec::{CorSpec, SurvivalSpec, SurvivalTerm, Term};
use mixlong::{Family, LongDataset, ModelSpec, ValidatedModel};
use mixlong::optimizer::Criteria;
use mixlong::FittedModel;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub mod invariants;
pub mod toys;

pub struct Instance {
    pub spec: ModelSpec,
    pub data: LongDataset,
    pub model: ValidatedModel,
    pub theta: Vec<f64>,
}

pub const FAMILIES: [Family; 4] = [Family::Hlme, Family::Lcmm, Family::Multlcmm, Family::Jointlcmm];

fn pick<'a, T, R: Rng>(rng: &mut R, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller keeps the generator self-contained
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// A random specification of `family` with `ng` classes. `ordinal`
/// requests the thresholds link (lcmm only).
pub fn random_spec<R: Rng>(rng: &mut R, family: Family, ng: usize, ordinal: bool) -> ModelSpec {
    let n_markers = if family == Family::Multlcmm { rng.random_range(2..=3) } else { 1 };
    let names: Vec<String> = (0..n_markers).map(|k| format!("y{k}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut s = ModelSpec::new(family, "id", &refs);
    s.time = Some("t".into());
    s.fixed = vec![Term::Intercept, Term::Column("t".into()), Term::Column("x1".into())];
    if rng.random_bool(0.3) {
        s.fixed.push(Term::Product(vec!["t".into(), "x2".into()]));
    }
    let max_q = if ordinal { 2 } else { 3 };
    let min_q = if family == Family::Multlcmm { 1 } else { 0 };
    let q = rng.random_range(min_q..=max_q);
    s.random = [Term::Intercept, Term::Column("t".into()), Term::Column("x1".into())][..q].to_vec();
    s.idiag = q > 1 && rng.random_bool(0.3);
    s.ng = ng;
    if ng > 1 {
        s.mixture = pick(
            rng,
            &[
                vec![Term::Intercept],
                vec![Term::Intercept, Term::Column("t".into())],
                vec![Term::Column("t".into())],
            ],
        )
        .clone();
        if rng.random_bool(0.5) {
            s.classmb = vec![Term::Column("x2".into())];
        }
        s.nwg = q > 0 && rng.random_bool(0.4);
    }
    if !ordinal && rng.random_bool(0.4) {
        s.cor = if rng.random_bool(0.5) {
            CorSpec::Brownian("t".into())
        } else {
            CorSpec::Autoregressive("t".into())
        };
    }
    let continuous_links = [
        LinkSpec::Linear,
        LinkSpec::Beta,
        LinkSpec::parse("4-equi-splines").unwrap(),
        LinkSpec::parse("5-equi-splines").unwrap(),
    ];
    match family {
        Family::Hlme => {}
        Family::Lcmm => {
            s.link = vec![if ordinal { LinkSpec::Thresholds } else { pick(rng, &continuous_links).clone() }];
        }
        Family::Multlcmm => {
            s.link = (0..n_markers).map(|_| pick(rng, &continuous_links).clone()).collect();
            if rng.random_bool(0.4) {
                s.contrast = vec![Term::Column("x2".into())];
            }
            s.random_y = rng.random_bool(0.4);
        }
        Family::Jointlcmm => {
            if rng.random_bool(0.3) {
                s.link = vec![pick(rng, &continuous_links).clone()];
            }
            let n_causes = rng.random_range(1..=2);
            let mut surv = SurvivalSpec::new("T", "E");
            if rng.random_bool(0.3) {
                surv.entry = Some("T0".into());
            }
            surv.n_causes = Some(n_causes);
            let mut terms = vec![SurvivalTerm::parse("x2").unwrap()];
            if ng > 1 && rng.random_bool(0.5) {
                terms.push(SurvivalTerm::parse("mixture(x1)").unwrap());
            }
            if n_causes > 1 && rng.random_bool(0.5) {
                terms[0] = SurvivalTerm::parse("cause(x2)").unwrap();
            }
            surv.terms = terms;
            surv.hazard = vec![pick(
                rng,
                &[
                    HazardSpec::Weibull,
                    HazardSpec::parse("4-equi-piecewise").unwrap(),
                    HazardSpec::parse("5-equi-splines").unwrap(),
                ],
            )
            .clone()];
            surv.hazard_type = vec![if ng > 1 {
                *pick(rng, &[HazardType::Specific, HazardType::PH, HazardType::Common])
            } else {
                HazardType::Specific
            }];
            surv.logscale = rng.random_bool(0.3);
            s.survival = Some(surv);
        }
    }
    if !s.link.is_empty() && !ordinal {
        s.range = Some(vec![(0.0, 10.0); n_markers]);
    }
    s
}

/// Random data for `spec`: `N ≤ 5` subjects with at most 4 visits.
pub fn random_data<R: Rng>(rng: &mut R, spec: &ModelSpec) -> LongDataset {
    let k = spec.outcomes.len();
    let mut cols: Vec<String> = ["id", "t", "x1", "x2"].iter().map(|s| s.to_string()).collect();
    cols.extend(spec.outcomes.iter().cloned());
    cols.extend(["T0", "T", "E"].iter().map(|s| s.to_string()));
    let ordinal = spec.link.iter().any(|l| !l.is_continuous());
    let n_causes = spec.survival.as_ref().and_then(|s| s.n_causes).unwrap_or(1);
    let n = rng.random_range(1..=5);
    let mut rows = Vec::new();
    let mut levels_seen = Vec::new();
    for i in 0..n {
        let visits = rng.random_range(1..=4);
        let x2 = f64::from(u8::from(rng.random_bool(0.5)));
        let t0 = uniform(rng, 0.0, 0.3);
        let mut t = t0 + uniform(rng, 0.0, 0.5);
        let mut last = t;
        let mut subject_rows = Vec::new();
        for _ in 0..visits {
            let mut r = vec![(i + 1) as f64, t, normal(rng), x2];
            let mut any = false;
            for kk in 0..k {
                let missing = k > 1 && rng.random_bool(0.2);
                let v = if missing {
                    f64::NAN
                } else if ordinal {
                    let l = rng.random_range(0..4) as f64;
                    levels_seen.push(l);
                    l
                } else if spec.link.is_empty() {
                    2.0 + normal(rng)
                } else {
                    uniform(rng, 0.0, 10.0)
                };
                any |= !missing;
                if missing && kk == k - 1 && !any {
                    r.push(uniform(rng, 0.0, 10.0));
                } else {
                    r.push(v);
                }
            }
            r.extend([t0, f64::NAN, f64::NAN]);
            subject_rows.push(r);
            last = t;
            t += uniform(rng, 0.2, 1.0);
        }
        let big_t = last + uniform(rng, 0.1, 2.0);
        let e = rng.random_range(0..=n_causes) as f64;
        for r in subject_rows.iter_mut() {
            let len = r.len();
            r[len - 2] = big_t;
            r[len - 1] = e;
        }
        rows.extend(subject_rows.into_iter().map(|r| (format!("{}", i + 1), r)));
    }
    if ordinal {
        // observed levels must be consecutive integers with at least two
        let mut distinct = levels_seen.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let col = 4;
        for (_, r) in rows.iter_mut() {
            let rank = distinct.iter().position(|&v| v == r[col]).unwrap();
            r[col] = rank as f64;
        }
        if distinct.len() < 2 {
            rows[0].1[col] = 1.0;
        }
    }
    // the survival columns of subjects without event-causes in the data
    // would leave the cause count undetermined; it is declared in the model
    let cols_owned = cols.clone();
    let rows = rows
        .into_iter()
        .map(|(id, mut r)| {
            r[0] = id.parse().unwrap();
            (id, r)
        })
        .collect();
    LongDataset::from_rows(cols_owned, rows).unwrap()
}

/// Random parameters in a well-behaved region.
pub fn random_theta<R: Rng>(rng: &mut R, model: &ValidatedModel) -> Vec<f64> {
    let shape = model.layout.shape();
    let ordinal = shape.links.iter().any(|l| !l.is_continuous());
    model
        .layout
        .params()
        .iter()
        .map(|info| match info.kind {
            BlockKind::ClassMembership => normal(rng),
            BlockKind::Baseline => {
                if model.spec.survival.as_ref().is_some_and(|s| s.logscale) {
                    uniform(rng, -1.0, 0.2)
                } else {
                    uniform(rng, 0.4, 1.2)
                }
            }
            BlockKind::PhOffset => 0.3 * normal(rng),
            BlockKind::SurvivalCommon | BlockKind::SurvivalClass => 0.5 * normal(rng),
            BlockKind::FixedCommon | BlockKind::FixedClass => normal(rng),
            // the 30-node rule loses its 1e-6 accuracy once the random
            // part of an ordinal latent process exceeds about 2 probit units
            BlockKind::Cholesky if ordinal => uniform(rng, 0.1, 0.5),
            BlockKind::Cholesky => uniform(rng, 0.3, 1.0),
            BlockKind::Omega => uniform(rng, 0.5, 1.5),
            BlockKind::Correlation => uniform(rng, 0.3, 1.0),
            BlockKind::Contrast => 0.5 * normal(rng),
            BlockKind::RandomY => uniform(rng, 0.3, 1.0),
            BlockKind::Residual => uniform(rng, 0.5, 1.5),
            BlockKind::Link => {
                let mut parts = info.key.split(':').skip(1);
                let m: usize = parts.next().unwrap().parse().unwrap();
                let j: usize = parts.next().unwrap().parse().unwrap();
                match shape.links[m].kind {
                    LinkKind::Linear => {
                        if j == 0 {
                            uniform(rng, 3.0, 7.0)
                        } else {
                            uniform(rng, 1.0, 3.0)
                        }
                    }
                    LinkKind::Beta { .. } => match j {
                        0 | 1 => 0.5 * normal(rng),
                        2 => 0.3 * normal(rng),
                        _ => uniform(rng, 0.2, 0.5),
                    },
                    LinkKind::Splines(_) => {
                        if j == 0 {
                            -2.0 + normal(rng)
                        } else {
                            uniform(rng, 0.5, 1.2)
                        }
                    }
                    LinkKind::Thresholds { .. } => {
                        if j == 0 {
                            normal(rng)
                        } else {
                            uniform(rng, 0.5, 1.0)
                        }
                    }
                }
            }
        })
        .collect()
}

pub fn random_instance(seed: u64, family: Family) -> Instance {
    random_instance_with(seed, family, None)
}

/// Like [`random_instance`] with the number of classes fixed when given.
pub fn random_instance_with(seed: u64, family: Family, classes: Option<usize>) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let ng = classes.unwrap_or_else(|| rng.random_range(1..=3));
        let ordinal = family == Family::Lcmm && rng.random_bool(0.3);
        let spec = random_spec(&mut rng, family, ng, ordinal);
        let data = random_data(&mut rng, &spec);
        // tiny samples occasionally give degenerate knots; draw again
        let Ok(model) = validate_and_build(&spec, &data) else { continue };
        let theta = random_theta(&mut rng, &model);
        return Instance { spec, data, model, theta };
    }
}

fn eval_term(name: &str, cols: &[String], row: &[f64]) -> f64 {
    if name == "intercept" {
        return 1.0;
    }
    name.split(':')
        .map(|c| row[cols.iter().position(|x| x == c).unwrap()])
        .product()
}

fn log_mvn_lu(r: &[f64], v: &DMatrix<f64>) -> f64 {
    let n = r.len();
    let lu = v.clone().lu();
    let det = lu.determinant();
    assert!(det > 0.0, "covariance with non-positive determinant");
    let x = lu.solve(&DVector::from_column_slice(r)).unwrap();
    let quad: f64 = r.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + det.ln() + quad)
}

fn phi_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        // a few forced levels keep coarse panels from agreeing by accident
        if depth == 0 || (depth <= MAX_DEPTH - MIN_DEPTH && delta.abs() <= 15.0 * tol) {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    const MAX_DEPTH: u32 = 40;
    const MIN_DEPTH: u32 = 3;
    // start from a few panels so that narrow peaks are not missed
    let panels = 16;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let (lo, hi) = (a + p as f64 * h, a + (p + 1) as f64 * h);
            let mid = 0.5 * (lo + hi);
            let (fl, fmid, fh) = (f(lo), f(mid), f(hi));
            let w = h / 6.0 * (fl + 4.0 * fmid + fh);
            rec(f, lo, hi, fl, fmid, fh, w, tol / panels as f64, MAX_DEPTH)
        })
        .sum()
}

struct Obs {
    marker: usize,
    time: f64,
    y: f64,
    row: Vec<f64>,
}

/// Per-class log contributions `(log π_g, log f(Y | g), log f(T | g), log S(T0 | g))`.
fn subject_terms(model: &ValidatedModel, p: &ModelParams, cols: &[String], rows: &[Vec<f64>]) -> Vec<[f64; 4]> {
    let spec = &model.spec;
    let shape = model.layout.shape();
    let ng = shape.ng;
    let k_markers = spec.outcomes.len();
    let first = &rows[0];
    let col = |name: &str| cols.iter().position(|c| c == name).unwrap();

    // observations, marker by marker in time order
    let mut sorted: Vec<&Vec<f64>> = rows.iter().collect();
    sorted.sort_by(|a, b| a[col("t")].total_cmp(&b[col("t")]));
    let mut obs = Vec::new();
    for k in 0..k_markers {
        for r in &sorted {
            let y = r[col(&spec.outcomes[k])];
            if y.is_finite() {
                obs.push(Obs {
                    marker: k,
                    time: r[col("t")],
                    y,
                    row: (*r).clone(),
                });
            }
        }
    }
    let n = obs.len();

    // class probabilities
    let xc: Vec<f64> = spec.classmb.iter().map(|t| eval_term(&t.name(), cols, first)).collect();
    let lin: Vec<f64> = (0..ng)
        .map(|g| p.xi[g][0] + xc.iter().enumerate().map(|(c, v)| p.xi[g][c + 1] * v).sum::<f64>())
        .collect();
    let mx = lin.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = mx + lin.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();

    // random-effect covariance from the stored upper factor
    let q = shape.q();
    let mut u = DMatrix::zeros(q, q);
    if shape.idiag {
        for i in 0..q {
            u[(i, i)] = p.chol[i];
        }
    } else {
        let mut pos = 0;
        for c in 0..q {
            for r in 0..=c {
                u[(r, c)] = p.chol[pos];
                pos += 1;
            }
        }
    }
    let b = u.transpose() * &u;

    let z: Vec<Vec<f64>> = obs
        .iter()
        .map(|o| shape.random.iter().map(|name| eval_term(name, cols, &o.row)).collect())
        .collect();

    let mut out = Vec::with_capacity(ng);
    for g in 0..ng {
        let mut mu = vec![0.0; n];
        for (j, o) in obs.iter().enumerate() {
            let mut m = 0.0;
            for (c, name) in shape.fixed_common.iter().enumerate() {
                m += p.beta[c] * eval_term(name, cols, &o.row);
            }
            for (c, name) in shape.fixed_class.iter().enumerate() {
                m += p.upsilon[g][c] * eval_term(name, cols, &o.row);
            }
            for (c, name) in shape.contrasts.iter().enumerate() {
                m += p.contrasts[c][o.marker] * eval_term(name, cols, &o.row);
            }
            mu[j] = m;
        }
        let w2 = p.omega[g] * p.omega[g];
        let log_long = if n == 0 {
            0.0
        } else if shape.links.iter().any(|l| !l.is_continuous()) {
            ordinal_log_prob(shape, p, &obs, &mu, &z, &(&b * w2))
        } else {
            let mut v = DMatrix::zeros(n, n);
            let mut ytil = vec![0.0; n];
            let mut logj = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for a in 0..q {
                        for c in 0..q {
                            s += z[i][a] * b[(a, c)] * z[j][c];
                        }
                    }
                    s *= w2;
                    let (ti, tj) = (obs[i].time, obs[j].time);
                    s += match shape.cor {
                        CorKind::None => 0.0,
                        CorKind::Brownian => p.cor[0].powi(2) * ti.min(tj),
                        CorKind::Autoregressive => p.cor[0].powi(2) * (-(p.cor[1].powi(2)) * (ti - tj).abs()).exp(),
                    };
                    if obs[i].marker == obs[j].marker {
                        if !p.random_y.is_empty() {
                            s += p.random_y[obs[i].marker].powi(2);
                        }
                        if i == j {
                            s += p.sigma[obs[i].marker].powi(2);
                        }
                    }
                    v[(i, j)] = s;
                }
                let k = obs[i].marker;
                if shape.links.is_empty() {
                    ytil[i] = obs[i].y;
                } else {
                    let (val, lj) = shape.links[k].inverse_transform(obs[i].y, &p.links[k]).unwrap();
                    ytil[i] = val;
                    logj += lj;
                }
            }
            let r: Vec<f64> = ytil.iter().zip(&mu).map(|(a, b)| a - b).collect();
            log_mvn_lu(&r, &v) + logj
        };

        let (mut log_surv, mut log_entry) = (0.0, 0.0);
        if let Some(sv) = &spec.survival {
            let x: Vec<f64> = model
                .survival_terms
                .iter()
                .map(|t| eval_term(&t.name(), cols, first))
                .collect();
            let big_t = first[col(&sv.time)];
            let e = first[col(&sv.event)] as usize;
            let lin_pred = |cause: usize| -> f64 {
                let mut lp = 0.0;
                for (c, coef) in shape.surv_common.iter().enumerate() {
                    if coef.causes.contains(&cause) {
                        lp += p.nu[c] * x[coef.term];
                    }
                }
                for (c, coef) in shape.surv_class.iter().enumerate() {
                    if coef.causes.contains(&cause) {
                        lp += p.delta[g][c] * x[coef.term];
                    }
                }
                lp
            };
            for cause in 0..shape.causes.len() {
                let (lam, a) = hazard_at(&shape.causes, &p.survival, big_t, g, cause, lin_pred(cause)).unwrap();
                log_surv -= a;
                if e == cause + 1 {
                    log_surv += lam.ln();
                }
                if let Some(ec) = &sv.entry {
                    let (_, a0) = hazard_at(&shape.causes, &p.survival, first[col(ec)], g, cause, lin_pred(cause)).unwrap();
                    log_entry -= a0;
                }
            }
        }
        out.push([lin[g] - lse, log_long, log_surv, log_entry]);
    }
    out
}

fn ordinal_log_prob(
    shape: &mixlong::layout::LayoutShape,
    p: &ModelParams,
    obs: &[Obs],
    mu: &[f64],
    z: &[Vec<f64>],
    cov: &DMatrix<f64>,
) -> f64 {
    let q = cov.nrows();
    let cuts: Vec<Vec<f64>> = p.links.iter().map(|e| thresholds_expand(e)).collect();
    let prob_given = |u: &[f64]| -> f64 {
        let mut pr = 1.0;
        for (j, o) in obs.iter().enumerate() {
            let lam = mu[j] + (0..q).map(|a| z[j][a] * u[a]).sum::<f64>();
            let (levels, min_level) = match shape.links[o.marker].kind {
                LinkKind::Thresholds { levels, min_level } => (levels, min_level),
                _ => unreachable!(),
            };
            let l = (o.y - min_level as f64) as usize;
            let c = &cuts[o.marker];
            let hi = if l + 1 == levels { 1.0 } else { phi_cdf(c[l] - lam) };
            let lo = if l == 0 { 0.0 } else { phi_cdf(c[l - 1] - lam) };
            pr *= hi - lo;
        }
        pr
    };
    if q == 0 {
        return prob_given(&[]).ln();
    }
    // u = L w with w standard normal, integrated over [-9, 9]^q
    let l = cov.clone().cholesky().unwrap().l();
    let dens = |w: f64| (-0.5 * w * w).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let tol = 1e-10;
    let value = match q {
        1 => adaptive_simpson(&|w: f64| dens(w) * prob_given(&[l[(0, 0)] * w]), -9.0, 9.0, tol),
        2 => adaptive_simpson(
            &|w1: f64| {
                dens(w1)
                    * adaptive_simpson(
                        &|w2: f64| dens(w2) * prob_given(&[l[(0, 0)] * w1, l[(1, 0)] * w1 + l[(1, 1)] * w2]),
                        -9.0,
                        9.0,
                        tol,
                    )
            },
            -9.0,
            9.0,
            tol,
        ),
        _ => panic!("ordinal oracle handles at most two random effects"),
    };
    value.ln()
}

fn lse(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Brute-force total log-likelihood of `theta` on the instance's data.
pub fn oracle_loglik(model: &ValidatedModel, data: &LongDataset, theta: &[f64]) -> f64 {
    let p = model.layout.unpack(theta).unwrap();
    let cols = data.columns().to_vec();
    let mut total = 0.0;
    for s in data.subjects() {
        if !model.subjects.iter().any(|d| d.id == s.id) {
            continue;
        }
        let terms = subject_terms(model, &p, &cols, &s.rows);
        let joint: Vec<f64> = terms.iter().map(|t| t[0] + t[1] + t[2]).collect();
        total += lse(&joint);
        if model.spec.survival.as_ref().is_some_and(|sv| sv.entry.is_some()) {
            let entry: Vec<f64> = terms.iter().map(|t| t[0] + t[3]).collect();
            total -= lse(&entry);
        }
    }
    total
}

/// The same data under the duplicated two-class version of a one-class
/// instance: every class-specific parameter copies its one-class value.
pub fn duplicated_two_class(inst: &Instance, seed: u64) -> (ValidatedModel, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = inst.spec.clone();
    spec.ng = 2;
    spec.mixture = spec.fixed.iter().filter(|_| rng.random_bool(0.6)).cloned().collect();
    if spec.random.len() > 0 && rng.random_bool(0.5) {
        spec.nwg = true;
    }
    if rng.random_bool(0.5) {
        spec.classmb = vec![Term::Column("x2".into())];
    }
    if let Some(sv) = spec.survival.as_mut() {
        for t in sv.terms.iter_mut() {
            t.class_specific = rng.random_bool(0.5);
        }
        sv.hazard_type = vec![*pick(&mut rng, &[HazardType::Specific, HazardType::PH, HazardType::Common])];
    }
    let model = validate_and_build(&spec, &inst.data).unwrap();
    let lower = &inst.model.layout;
    let theta = model
        .layout
        .params()
        .iter()
        .map(|info| match info.kind {
            BlockKind::ClassMembership => normal(&mut rng),
            BlockKind::Omega => 1.0,
            BlockKind::PhOffset => 0.0,
            _ => lower
                .params()
                .iter()
                .position(|l| l.key == info.key)
                .map_or(0.0, |i| inst.theta[i]),
        })
        .collect();
    (model, theta)
}

/// A fitted-model value around `theta` with a small diagonal covariance,
/// for exercising post-fit computations without running the optimizer.
pub fn fitted(model: ValidatedModel, theta: Vec<f64>) -> FittedModel {
    let n = theta.len();
    FittedModel {
        model,
        initial: theta.clone(),
        theta,
        free: vec![true; n],
        cov_free: Some(DMatrix::identity(n, n) * 1e-4),
        loglik: f64::NAN,
        iterations: 0,
        criteria: Criteria::default(),
        converged: true,
        stalled: false,
        grid_logliks: Vec::new(),
        notes: Vec::new(),
    }
}
