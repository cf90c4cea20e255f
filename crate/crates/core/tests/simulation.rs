use mixlong::likelihood::Evaluator;
use mixlong::model::declared_causes;
use mixlong::simulate::{simulate, CovariateLaw, CovariateSpec, SimDesign};
use mixlong::spec::{SurvivalSpec, SurvivalTerm, Term};
use mixlong::{Family, ModelSpec, ValidatedModel};

fn column(d: &mixlong::LongDataset, name: &str) -> Vec<f64> {
    d.column(name).unwrap()
}

/// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
fn ks_uniform(mut u: Vec<f64>) -> f64 {
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n).abs().max(((i + 1) as f64 / n - v).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn random_intercept_moments() {
    let mut s = ModelSpec::new(Family::Hlme, "id", &["y"]);
    s.time = Some("t".into());
    s.fixed = vec![Term::Intercept, Term::Column("t".into())];
    s.random = vec![Term::Intercept];
    let m = ValidatedModel::declared(&s, Vec::new(), Vec::new()).unwrap();
    let n = 4000;
    let mut d = SimDesign::new(m, vec![1.0, 0.5, 0.8, 0.3], n, vec![0.0, 1.0, 2.0], "t");
    d.seed = 17;
    let data = simulate(&d).unwrap();
    let (t, y) = (column(&data, "t"), column(&data, "y"));
    let at = |v: f64| -> Vec<f64> { t.iter().zip(&y).filter(|(a, _)| **a == v).map(|(_, b)| *b).collect() };
    let (y0, y2) = (at(0.0), at(2.0));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var_total: f64 = 0.64 + 0.09;
    // four standard errors of the sample mean, variance and covariance
    let se_mean = (var_total / n as f64).sqrt();
    assert!((mean(&y0) - 1.0).abs() < 4.0 * se_mean, "{}", mean(&y0));
    assert!((mean(&y2) - 2.0).abs() < 4.0 * se_mean, "{}", mean(&y2));
    let (m0, m2) = (mean(&y0), mean(&y2));
    let var0 = y0.iter().map(|v| (v - m0).powi(2)).sum::<f64>() / (n - 1) as f64;
    let cov02 = y0.iter().zip(&y2).map(|(a, b)| (a - m0) * (b - m2)).sum::<f64>() / (n - 1) as f64;
    let se_var = var_total * (2.0 / n as f64).sqrt();
    assert!((var0 - var_total).abs() < 4.0 * se_var, "{var0}");
    assert!((cov02 - 0.64).abs() < 4.0 * se_var, "{cov02}");
}

fn joint_design(n_causes: usize, ng: usize) -> (ValidatedModel, Vec<f64>) {
    let mut s = ModelSpec::new(Family::Jointlcmm, "id", &["y"]);
    s.time = Some("t".into());
    s.fixed = vec![Term::Intercept, Term::Column("t".into())];
    s.random = vec![Term::Intercept];
    s.ng = ng;
    if ng > 1 {
        s.mixture = vec![Term::Intercept, Term::Column("t".into())];
    }
    let mut surv = SurvivalSpec::new("T", "E");
    surv.terms = vec![SurvivalTerm::parse("x").unwrap()];
    surv.n_causes = Some(n_causes);
    s.survival = Some(surv);
    let causes = declared_causes(&s, (0.0, 30.0), n_causes).unwrap();
    let m = ValidatedModel::declared(&s, Vec::new(), causes).unwrap();
    let theta = m
        .layout
        .params()
        .iter()
        .map(|info| {
            let k = info.key.as_str();
            if k.starts_with("baseline:") {
                // rates 0.15 and 0.3 (squared raw values), shape 1.3
                let cause: usize = k.split(':').nth(1).unwrap().parse().unwrap();
                if k.ends_with(":0") { (0.15 * (cause + 1) as f64).sqrt() } else { 1.3f64.sqrt() }
            } else if k.starts_with("surv:") {
                0.6
            } else if k.starts_with("classmb:") {
                0.4
            } else {
                0.7
            }
        })
        .collect();
    (m, theta)
}

#[test]
fn event_times_follow_the_survival_function() {
    let (m, theta) = joint_design(1, 1);
    let mut d = SimDesign::new(m.clone(), theta.clone(), 2000, vec![0.0], "t");
    d.covariates = vec![CovariateSpec {
        name: "x".into(),
        law: CovariateLaw::Bernoulli(0.5),
        per_visit: false,
    }];
    d.admin_censoring = 30.0;
    d.seed = 3;
    let data = simulate(&d).unwrap();
    let ev = Evaluator::new(&m, &theta).unwrap();
    let (x, tt, e) = (column(&data, "x"), column(&data, "T"), column(&data, "E"));
    let mut u = Vec::new();
    for i in 0..x.len() {
        assert!(e[i] == 1.0 || tt[i] == 30.0);
        u.push(ev.log_survival(&[x[i]], tt[i], 0).unwrap().exp());
    }
    // S(T | x) is uniform; 1.63 / √n is the 1% critical value
    let ks = ks_uniform(u);
    assert!(ks < 1.63 / (x.len() as f64).sqrt(), "{ks}");
}

#[test]
fn cause_shares_match_hazard_ratio() {
    let (m, theta) = joint_design(2, 1);
    let mut d = SimDesign::new(m, theta, 3000, vec![0.0], "t");
    d.covariates = vec![CovariateSpec {
        name: "x".into(),
        law: CovariateLaw::Normal { mean: 0.0, sd: 1.0 },
        per_visit: false,
    }];
    d.admin_censoring = 30.0;
    d.seed = 8;
    let data = simulate(&d).unwrap();
    let e = column(&data, "E");
    // same shape and covariate effect, so the hazard ratio (0.3 / 0.15)^1.3
    // is constant over time
    let ratio = 2f64.powf(1.3);
    let want = ratio / (1.0 + ratio);
    let events = e.iter().filter(|&&v| v > 0.0).count() as f64;
    let share = e.iter().filter(|&&v| v == 2.0).count() as f64 / events;
    let se = (want * (1.0 - want) / events).sqrt();
    assert!((share - want).abs() < 4.0 * se, "{share} vs {want}");
}

#[test]
fn class_shares_follow_the_prior() {
    let (m, theta) = joint_design(1, 2);
    let mut d = SimDesign::new(m, theta, 3000, vec![0.0, 1.0], "t");
    d.covariates = vec![CovariateSpec {
        name: "x".into(),
        law: CovariateLaw::Bernoulli(0.3),
        per_visit: false,
    }];
    d.admin_censoring = 30.0;
    d.truncate_at_event = false;
    d.seed = 21;
    let data = simulate(&d).unwrap();
    let class = column(&data, "class");
    let p1 = class.iter().filter(|&&c| c == 1.0).count() as f64 / class.len() as f64;
    let want = 0.4f64.exp() / (1.0 + 0.4f64.exp());
    let se = (want * (1.0 - want) / 3000.0).sqrt();
    assert!((p1 - want).abs() < 4.0 * se, "{p1} vs {want}");
}
