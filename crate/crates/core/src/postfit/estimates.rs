use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fit::FittedModel;
use crate::layout::{BlockKind, ParamInfo};
use crate::numerics::special::chi2_sf;
use crate::numerics::{norm_sf, CholeskyFactor};

/// One line of the estimate table.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub info: ParamInfo,
    pub estimate: f64,
    /// `None` for parameters held fixed or without covariance.
    pub se: Option<f64>,
    pub wald: Option<f64>,
    pub p_value: Option<f64>,
    pub fixed: bool,
}

pub fn estimates_table(fit: &FittedModel) -> Vec<EstimateRow> {
    let se = fit.standard_errors();
    fit.model
        .layout
        .params()
        .iter()
        .enumerate()
        .map(|(i, info)| {
            let fixed = !fit.free[i];
            let s = if fixed { None } else { se.as_ref().map(|v| v[i]) };
            let z = s.filter(|&v| v > 0.0).map(|v| fit.theta[i] / v);
            EstimateRow {
                info: info.clone(),
                estimate: fit.theta[i],
                se: s,
                wald: z,
                p_value: z.map(|z| 2.0 * norm_sf(z.abs())),
                fixed,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Multivariate Wald test of `C θ = c0` (`c0 = 0` when `None`). `C` has
/// one column per parameter.
pub fn wald_test(fit: &FittedModel, c: &DMatrix<f64>, c0: Option<&DVector<f64>>) -> Result<WaldResult> {
    let n = fit.theta.len();
    if c.ncols() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: c.ncols(),
        });
    }
    let v = fit.covariance().ok_or(Error::NoCovariance)?;
    let mut d = c * DVector::from_column_slice(&fit.theta);
    if let Some(c0) = c0 {
        d -= c0;
    }
    let m = c * v * c.transpose();
    let f = CholeskyFactor::decompose(&m).map_err(|_| Error::InvalidArgument("singular C V C'".into()))?;
    let statistic = f.quad_form(d.as_slice());
    let df = c.nrows();
    Ok(WaldResult {
        statistic,
        df,
        p_value: chi2_sf(statistic, df as f64),
    })
}

/// One entry of the random-effect covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct VarCovRow {
    pub row: usize,
    pub col: usize,
    pub estimate: f64,
    pub se: Option<f64>,
    pub wald: Option<f64>,
    pub p_value: Option<f64>,
}

/// Entries `B_ij` (`i ≤ j`) of the random-effect covariance with
/// delta-method standard errors.
pub fn varcov_re(fit: &FittedModel) -> Result<Vec<VarCovRow>> {
    let shape = fit.model.layout.shape();
    let q = shape.q();
    let params = fit.params();
    let l = params.b_lower(shape);
    let b = &l * l.transpose();
    let n = fit.theta.len();
    // position in θ of each stored Cholesky entry
    let mut pos_of = vec![None; shape.n_chol()];
    for (i, info) in fit.model.layout.params().iter().enumerate() {
        if info.kind == BlockKind::Cholesky {
            let k: usize = info.key.trim_start_matches("chol:").parse().expect("cholesky key");
            pos_of[k] = Some(i);
        }
    }
    // stored entry k ↔ L[a, c]
    let mut entries = Vec::new();
    if shape.idiag {
        for a in 0..q {
            entries.push((a, a));
        }
    } else {
        for col in 0..q {
            for row in 0..=col {
                entries.push((col, row));
            }
        }
    }
    let cov = fit.covariance();
    let mut out = Vec::new();
    for i in 0..q {
        for j in i..q {
            if shape.idiag && i != j {
                continue;
            }
            let mut grad = DVector::zeros(n);
            for (k, &(a, c)) in entries.iter().enumerate() {
                // d(Σ_m L_im L_jm)/dL_ac
                let mut d = 0.0;
                if a == i {
                    d += l[(j, c)];
                }
                if a == j {
                    d += l[(i, c)];
                }
                if let Some(p) = pos_of[k] {
                    grad[p] += d;
                }
            }
            let se = cov.as_ref().map(|v| (grad.transpose() * v * &grad)[(0, 0)].max(0.0).sqrt());
            let z = se.filter(|&s| s > 0.0).map(|s| b[(i, j)] / s);
            out.push(VarCovRow {
                row: i,
                col: j,
                estimate: b[(i, j)],
                se,
                wald: z,
                p_value: z.map(|z| 2.0 * norm_sf(z.abs())),
            });
        }
    }
    Ok(out)
}
