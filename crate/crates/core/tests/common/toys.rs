//! Regression toys with closed-form (least squares) and Newton (probit)
//! reference solutions.

use mixlong::fit::{fit_model, CovarianceMethod, FitOptions};
use mixlong::links::LinkSpec;
use mixlong::spec::Term;
use mixlong::{Family, LongDataset, ModelSpec};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::invariants::Check;

const N: usize = 300;

/// One observation per subject: columns x1, x2, y.
fn regression_data(seed: u64, binary: bool) -> (LongDataset, DMatrix<f64>, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(N);
    let mut x = DMatrix::zeros(N, 3);
    let mut y = DVector::zeros(N);
    for i in 0..N {
        let x1: f64 = rng.sample(StandardNormal);
        let x2 = f64::from(u8::from(rng.random::<f64>() < 0.4));
        let e: f64 = rng.sample(StandardNormal);
        let latent = 0.5 + 1.2 * x1 - 0.8 * x2 + if binary { e } else { 1.5 * e };
        let yi = if binary { f64::from(u8::from(latent > 0.0)) } else { latent };
        x[(i, 0)] = 1.0;
        x[(i, 1)] = x1;
        x[(i, 2)] = x2;
        y[i] = yi;
        rows.push((format!("s{i}"), vec![x1, x2, yi]));
    }
    let d = LongDataset::from_rows(vec!["x1".into(), "x2".into(), "y".into()], rows).unwrap();
    (d, x, y)
}

fn options() -> FitOptions {
    FitOptions {
        covariance: CovarianceMethod::Central,
        ..FitOptions::default()
    }
}

fn linear_spec() -> ModelSpec {
    let mut s = ModelSpec::new(Family::Hlme, "id", &["y"]);
    s.fixed = vec![Term::Intercept, Term::Column("x1".into()), Term::Column("x2".into())];
    s
}

/// Largest absolute estimate error and relative SE error seen so far.
#[derive(Default)]
struct Worst {
    estimate: f64,
    se: f64,
}

impl Worst {
    fn estimate(&mut self, got: f64, want: f64) {
        self.estimate = self.estimate.max((got - want).abs());
    }

    fn se(&mut self, got: f64, want: f64) {
        self.se = self.se.max(((got - want) / want).abs());
    }

    fn verdict(&self, label: &str) -> Check {
        let msg = format!("{label}: estimates off by {:.1e}, SEs by {:.1e} relative", self.estimate, self.se);
        if self.estimate <= 1e-5 && self.se <= 1e-4 {
            Ok(msg)
        } else {
            Err(msg)
        }
    }
}

pub fn linear_regression() -> Check {
    let (d, x, y) = regression_data(11, false);
    let fit = fit_model(&linear_spec(), &d, &options()).map_err(|e| e.to_string())?;
    if !fit.converged {
        return Err(format!("linear toy did not converge: {:?}", fit.criteria));
    }
    let xtx_inv = (x.transpose() * &x).try_inverse().unwrap();
    let beta = &xtx_inv * x.transpose() * &y;
    let rss = (&y - &x * &beta).norm_squared();
    let sigma2 = rss / N as f64;
    let se = fit.standard_errors().ok_or("no covariance matrix")?;
    let mut w = Worst::default();
    for j in 0..3 {
        w.estimate(fit.theta[j], beta[j]);
        w.se(se[j], (sigma2 * xtx_inv[(j, j)]).sqrt());
    }
    w.estimate(fit.theta[3].abs(), sigma2.sqrt());
    // information for σ with β profiled out is 2n/σ²
    w.se(se[3], (sigma2 / (2.0 * N as f64)).sqrt());
    w.verdict("linear")
}

/// Newton iterations on the probit log-likelihood with rows of `design`
/// as linear predictors; returns the estimate and its observed
/// information.
fn probit_newton(design: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let norm = Normal::standard();
    let p = design.ncols();
    let mut theta = DVector::zeros(p);
    let mut info = DMatrix::zeros(p, p);
    for _ in 0..100 {
        let eta = design * &theta;
        let mut grad = DVector::zeros(p);
        info.fill(0.0);
        for i in 0..design.nrows() {
            // signed predictor: the likelihood of y=0 at η is that of y=1 at −η
            let sign = if y[i] > 0.5 { 1.0 } else { -1.0 };
            let e = sign * eta[i];
            let mills = norm.pdf(e) / norm.cdf(e);
            let row = design.row(i).transpose();
            grad += &row * (sign * mills);
            info += &row * row.transpose() * (mills * (mills + e));
        }
        let step = info.clone().cholesky().unwrap().solve(&grad);
        theta += &step;
        if step.norm() < 1e-14 {
            break;
        }
    }
    (theta, info)
}

pub fn binary_regression() -> Check {
    let (d, x, y) = regression_data(5, true);
    let mut s = ModelSpec::new(Family::Lcmm, "id", &["y"]);
    s.fixed = vec![Term::Intercept, Term::Column("x1".into()), Term::Column("x2".into())];
    s.link = vec![LinkSpec::parse("thresholds").unwrap()];
    let fit = fit_model(&s, &d, &options()).map_err(|e| e.to_string())?;
    if !fit.converged {
        return Err(format!("binary toy did not converge: {:?}", fit.criteria));
    }
    // parameters (β1, β2, c) with P(y = 1) = Φ(β1 x1 + β2 x2 − c)
    let mut design = DMatrix::zeros(N, 3);
    for i in 0..N {
        design[(i, 0)] = x[(i, 1)];
        design[(i, 1)] = x[(i, 2)];
        design[(i, 2)] = -1.0;
    }
    let (theta, info) = probit_newton(&design, &y);
    let cov = info.try_inverse().unwrap();
    let se = fit.standard_errors().ok_or("no covariance matrix")?;
    let mut w = Worst::default();
    for j in 0..3 {
        w.estimate(fit.theta[j], theta[j]);
        w.se(se[j], cov[(j, j)].sqrt());
    }
    w.verdict("probit")
}

/// The converged flag is set exactly when all three criteria are below
/// 1e-4, and a one-iteration fit is not converged.
pub fn convergence_flag() -> Check {
    let (d, _, _) = regression_data(11, false);
    let s = linear_spec();
    let all = |c: &mixlong::optimizer::Criteria| c.parameters <= 1e-4 && c.likelihood <= 1e-4 && c.derivatives <= 1e-4;
    let fit = fit_model(&s, &d, &options()).map_err(|e| e.to_string())?;
    let short = FitOptions {
        maxiter: Some(1),
        ..options()
    };
    let early = fit_model(&s, &d, &short).map_err(|e| e.to_string())?;
    let msg = format!("full fit {:?}, one iteration {:?}", fit.criteria, early.criteria);
    if fit.converged && all(&fit.criteria) && early.converged == all(&early.criteria) && !early.converged {
        Ok(msg)
    } else {
        Err(msg)
    }
}
