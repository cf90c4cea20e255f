//! Numerical invariants of the quadrature rules, spline bases, hazards and
//! survival predictions. Each check returns a short report, `Err` when the
//! invariant is violated.

use mixlong::basis::{self, KnotPlacement, KnotVector};
use mixlong::hazards::{BaselineFamily, BaselineHazard, HazardSpec, HazardType};
use mixlong::likelihood::Evaluator;
use mixlong::model::declared_causes;
use mixlong::numerics::{gauss_hermite, gauss_legendre};
use mixlong::postfit::{cumulative_incidence, dynamic_prediction};
use mixlong::spec::{SurvivalSpec, SurvivalTerm, Term};
use mixlong::{Family, FittedModel, ModelSpec, ValidatedModel};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{adaptive_simpson, fitted};

pub type Check = Result<String, String>;

fn double_factorial(n: i64) -> f64 {
    let mut v = 1.0;
    let mut k = n;
    while k > 1 {
        v *= k as f64;
        k -= 2;
    }
    v
}

/// 30-node Gauss-Hermite integrates `x^k` exactly for `k ≤ 59` and not
/// for `k = 60`.
pub fn gauss_hermite_degree() -> Check {
    let rule = gauss_hermite(30).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for k in 0..=59 {
        let exact = if k % 2 == 1 { 0.0 } else { double_factorial(k - 1) };
        let got = rule.integrate(|x| x.powi(k as i32));
        let err = if exact == 0.0 {
            // odd moments cancel against the size of the even neighbours
            (got / double_factorial(k)).abs()
        } else {
            ((got - exact) / exact).abs()
        };
        worst = worst.max(err);
    }
    let e60 = ((rule.integrate(|x| x.powi(60)) - double_factorial(59)) / double_factorial(59)).abs();
    if worst < 1e-10 && e60 > 1e-12 {
        Ok(format!("max rel. error {worst:.1e} up to degree 59, {e60:.1e} at degree 60"))
    } else {
        Err(format!("max rel. error {worst:.1e} up to degree 59, {e60:.1e} at degree 60"))
    }
}

/// 50-point Gauss-Legendre on `[a, b]` integrates polynomials up to
/// degree 99 exactly.
pub fn gauss_legendre_degree() -> Check {
    let (a, b) = (-0.5, 1.5);
    let rule = gauss_legendre(50, a, b).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for k in 0..=99 {
        // ∫ (x - c)^k with the center c keeps both signs in play
        let c = 0.5;
        let exact = ((b - c).powi(k + 1) - (a - c).powi(k + 1)) / (k + 1) as f64;
        let got = rule.integrate(|x| (x - c).powi(k));
        let scale = ((b - c).powi(k + 1).abs() + (a - c).powi(k + 1).abs()) / (k + 1) as f64;
        worst = worst.max(((got - exact) / scale).abs());
    }
    let exact100 = 2.0 * 1.0f64.powi(101) / 101.0;
    let e100 = ((rule.integrate(|x| (x - 0.5).powi(100)) - exact100) / exact100).abs();
    if worst < 1e-12 && e100 > 1e-14 {
        Ok(format!("max scaled error {worst:.1e} up to degree 99, {e100:.1e} at degree 100"))
    } else {
        Err(format!("max scaled error {worst:.1e} up to degree 99, {e100:.1e} at degree 100"))
    }
}

fn knot_sets() -> Vec<KnotVector> {
    [
        vec![0.0, 1.0, 2.0],
        vec![0.0, 2.0, 6.0, 12.0, 52.0],
        vec![-3.0, -1.0, 0.5, 0.7, 4.0, 9.0],
    ]
    .into_iter()
    .map(|k| KnotVector::new(k, KnotPlacement::Manual).unwrap())
    .collect()
}

/// I-splines are 0 at the first knot and 1 at the last one; M-splines
/// integrate to 1 (adaptive Simpson), as do the closed-form integrals.
pub fn spline_bases() -> Check {
    let mut worst: f64 = 0.0;
    for k in knot_sets() {
        for order in [3, 4] {
            for v in basis::ispline(&k, order, k.min()) {
                worst = worst.max(v.abs());
            }
            for v in basis::ispline(&k, order, k.max()) {
                worst = worst.max((v - 1.0).abs());
            }
            let nb = basis::mspline(&k, order, k.min()).len();
            for j in 0..nb {
                let mut integral = 0.0;
                for w in k.knots().windows(2) {
                    integral += adaptive_simpson(&|x| basis::mspline(&k, order, x)[j], w[0], w[1], 1e-13);
                }
                worst = worst.max((integral - 1.0).abs());
            }
        }
    }
    if worst < 1e-9 {
        Ok(format!("max deviation {worst:.1e}"))
    } else {
        Err(format!("max deviation {worst:.1e}"))
    }
}

/// Central difference of `A` with one Richardson extrapolation step.
fn richardson<F: Fn(f64) -> f64>(f: &F, t: f64, h: f64) -> f64 {
    let d = |h: f64| (f(t + h) - f(t - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// `dA/dt = λ` for every baseline family, both positivity transforms.
pub fn hazard_derivatives(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let knots = KnotVector::new(vec![0.0, 1.0, 2.5, 4.0, 8.0], KnotPlacement::Manual).unwrap();
    for logscale in [false, true] {
        let families = [
            BaselineFamily::Weibull,
            BaselineFamily::Piecewise(knots.clone()),
            BaselineFamily::Splines(knots.clone()),
        ];
        for family in families {
            let h = BaselineHazard { family, logscale };
            for _ in 0..20 {
                let raw: Vec<f64> = (0..h.n_params())
                    .map(|_| if logscale { rng.random_range(-1.0..0.5) } else { rng.random_range(0.3..1.3) })
                    .collect();
                let mut t: f64 = rng.random_range(0.2..7.8);
                if let BaselineFamily::Piecewise(k) = &h.family {
                    // keep the stencil inside one piece
                    if k.knots().iter().any(|&c| (c - t).abs() < 0.05) {
                        t += 0.1;
                    }
                }
                let a = |u: f64| h.cumulative(u, &raw).unwrap();
                let lam = h.hazard(t, &raw).map_err(|e| e.to_string())?;
                let d = richardson(&a, t, 1e-3);
                worst = worst.max((d - lam).abs() / lam.max(1.0));
                count += 1;
            }
        }
    }
    if worst < 1e-6 {
        Ok(format!("{count} points, max error {worst:.1e}"))
    } else {
        Err(format!("{count} points, max error {worst:.1e}"))
    }
}

fn joint_model(hazard: HazardSpec, n_causes: usize, ng: usize, hazard_type: HazardType) -> ValidatedModel {
    let mut s = ModelSpec::new(Family::Jointlcmm, "id", &["y"]);
    s.time = Some("t".into());
    s.fixed = vec![Term::Intercept, Term::Column("t".into())];
    s.random = vec![Term::Intercept];
    s.ng = ng;
    if ng > 1 {
        s.mixture = vec![Term::Intercept];
        s.classmb = vec![Term::Column("x".into())];
    }
    let mut surv = SurvivalSpec::new("T", "E");
    surv.terms = vec![SurvivalTerm::parse("x").unwrap()];
    surv.hazard = vec![hazard];
    surv.hazard_type = vec![hazard_type];
    surv.n_causes = Some(n_causes);
    s.survival = Some(surv);
    let causes = declared_causes(&s, (0.0, 10.0), n_causes).unwrap();
    ValidatedModel::declared(&s, Vec::new(), causes).unwrap()
}

fn random_joint_theta<R: Rng>(rng: &mut R, m: &ValidatedModel) -> Vec<f64> {
    m.layout
        .params()
        .iter()
        .map(|info| {
            if info.key.starts_with("baseline:") {
                rng.random_range(0.3..0.9)
            } else if info.key.starts_with("chol:") || info.key.starts_with("sigma:") || info.key == "omega" {
                rng.random_range(0.5..1.5)
            } else {
                rng.random_range(-0.5..0.5)
            }
        })
        .collect()
}

/// Incidences of all causes plus all-cause survival add up to 1, class
/// by class and averaged over classes.
pub fn incidence_partition(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let hazards = [
        HazardSpec::Weibull,
        HazardSpec::parse("5-equi-piecewise").unwrap(),
        HazardSpec::parse("5-equi-splines").unwrap(),
    ];
    for hz in hazards {
        for (n_causes, ng, ht) in [(2, 1, HazardType::Specific), (3, 2, HazardType::PH), (2, 2, HazardType::Specific)] {
            let m = joint_model(hz.clone(), n_causes, ng, ht);
            let theta = random_joint_theta(&mut rng, &m);
            let fit = fitted(m, theta);
            let ev = Evaluator::new(&fit.model, &fit.theta).map_err(|e| e.to_string())?;
            let x: f64 = rng.random_range(-1.0..1.0);
            let times = [0.3, 2.0, 4.9, 9.5];
            let cols = vec!["x".to_string()];
            let rows = cumulative_incidence(&fit, &cols, &[x], &times, None, 0).map_err(|e| e.to_string())?;
            let pi = ev.params.class_probs(&[x]);
            for &t in &times {
                let surv: Vec<f64> = (0..ng).map(|g| ev.log_survival(&[x], t, g).unwrap().exp()).collect();
                for g in 0..ng {
                    let f: f64 = rows.iter().filter(|r| r.time == t && r.class == Some(g)).map(|r| r.value).sum();
                    worst = worst.max((f + surv[g] - 1.0).abs());
                }
                let f: f64 = rows.iter().filter(|r| r.time == t && r.class.is_none()).map(|r| r.value).sum();
                let s: f64 = (0..ng).map(|g| pi[g] * surv[g]).sum();
                worst = worst.max((f + s - 1.0).abs());
            }
        }
    }
    if worst < 1e-9 {
        Ok(format!("max |ΣF + S − 1| = {worst:.1e}"))
    } else {
        Err(format!("max |ΣF + S − 1| = {worst:.1e}"))
    }
}

/// One-class dynamic predictions against `(S(s) − S(s+t)) / S(s)` with
/// `S` obtained by integrating the hazard (adaptive Simpson).
pub fn dynpred_closed_form(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for hz in [HazardSpec::Weibull, HazardSpec::parse("5-equi-splines").unwrap(), HazardSpec::parse("7-equi-splines").unwrap()] {
        for logscale in [false, true] {
            let mut m = joint_model(hz.clone(), 1, 1, HazardType::Specific);
            if logscale {
                let mut s = m.spec.clone();
                s.survival.as_mut().unwrap().logscale = true;
                let causes = declared_causes(&s, (0.0, 10.0), 1).unwrap();
                m = ValidatedModel::declared(&s, Vec::new(), causes).unwrap();
            }
            let mut theta = random_joint_theta(&mut rng, &m);
            if logscale {
                for (i, info) in m.layout.params().iter().enumerate() {
                    if info.key.starts_with("baseline:") {
                        theta[i] = rng.random_range(-1.5..0.0);
                    }
                }
            }
            let fit: FittedModel = fitted(m, theta);
            let ev = Evaluator::new(&fit.model, &fit.theta).map_err(|e| e.to_string())?;
            let x: f64 = rng.random_range(-1.0..1.0);
            // P(T ≤ s + t | T > s) = 1 − exp(−∫_s^{s+t} λ)
            let conditional = |s: f64, t: f64| -> f64 {
                let a = adaptive_simpson(&|u: f64| ev.hazard(&[x], u, 0, 0).unwrap().0, s, s + t, 1e-14);
                -(-a).exp_m1()
            };
            let cols: Vec<String> = ["t", "y", "x"].iter().map(|s| s.to_string()).collect();
            let history = vec![vec![0.0, 1.0, x], vec![1.0, 0.3, x], vec![2.5, -0.4, x]];
            let landmarks = [0.5, 1.0, 2.0, 4.0];
            let horizons = [0.5, 1.0, 3.0, 5.0];
            let out = dynamic_prediction(&fit, &cols, &[("s".into(), history)], &landmarks, &horizons, None, 0)
                .map_err(|e| e.to_string())?;
            for r in out {
                worst = worst.max((r.value - conditional(r.landmark, r.horizon)).abs());
                count += 1;
            }
        }
    }
    if worst < 1e-10 {
        Ok(format!("{count} (s, t) pairs, max error {worst:.1e}"))
    } else {
        Err(format!("{count} (s, t) pairs, max error {worst:.1e}"))
    }
}
