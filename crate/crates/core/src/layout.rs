//! Canonical parameter vector and its structured view.
//!
//! Free parameters are stored in this order:
//!
//! 1. class-membership coefficients ξ, term-major, classes `1..G-1`;
//! 2. survival: baseline parameters by cause (then by class for
//!    class-specific baselines, followed by the `G-1` log proportional
//!    factors for PH baselines), common effects ν, class-specific effects
//!    δ by class;
//! 3. common fixed effects β, then class-specific fixed effects υ by class;
//! 4. random-effect Cholesky entries: the upper factor `U` with `B = U'U`,
//!    column-major (`U11, U12, U22, U13, ...`), or the `q` standard
//!    deviations when the covariance is diagonal;
//! 5. the `G-1` proportional random-effect scales ω;
//! 6. the correlated process (σ_w, plus the unconstrained AR rate whose
//!    square is the decay rate);
//! 7. marker contrasts, `K-1` per contrast covariate;
//! 8. marker-specific random intercept standard deviations;
//! 9. link parameters by marker;
//! 10. residual standard deviations.
//!
//! Identifiability constraints (reference class, location and scale of the
//! latent process) are not part of the vector; [`ParameterLayout::unpack`]
//! injects them.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hazards::{CauseModel, HazardType, SurvivalParams};
use crate::links::Link;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorKind {
    None,
    Brownian,
    Autoregressive,
}

/// Location constraint on the mean intercept of a latent process model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterceptConstraint {
    None,
    /// Common intercept at this index of the common fixed effects is 0.
    Common(usize),
    /// First-class intercept at this index of the class-specific fixed
    /// effects is 0.
    FirstClass(usize),
}

/// A survival covariate coefficient and the causes it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvCoef {
    /// Index into the survival term list of the subject design.
    pub term: usize,
    pub causes: Vec<usize>,
    pub label: String,
}

/// Everything that determines the parameter vector of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutShape {
    pub ng: usize,
    /// Class-membership covariates (the intercept is implicit).
    pub classmb: Vec<String>,
    pub causes: Vec<CauseModel>,
    pub surv_common: Vec<SurvCoef>,
    pub surv_class: Vec<SurvCoef>,
    pub fixed_common: Vec<String>,
    pub fixed_class: Vec<String>,
    pub intercept: InterceptConstraint,
    pub random: Vec<String>,
    pub idiag: bool,
    /// Variance of the first random effect fixed to 1.
    pub unit_first_variance: bool,
    pub nwg: bool,
    pub cor: CorKind,
    pub contrasts: Vec<String>,
    pub markers: Vec<String>,
    pub random_y: bool,
    /// One link per marker; empty for the Gaussian model.
    pub links: Vec<Link>,
    /// Residual standard deviations are estimated (one per marker).
    pub free_residual: bool,
}

impl LayoutShape {
    pub fn q(&self) -> usize {
        self.random.len()
    }

    pub fn n_markers(&self) -> usize {
        self.markers.len()
    }

    pub fn n_chol(&self) -> usize {
        let q = self.q();
        if self.idiag {
            q
        } else {
            q * (q + 1) / 2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    ClassMembership,
    Baseline,
    PhOffset,
    SurvivalCommon,
    SurvivalClass,
    FixedCommon,
    FixedClass,
    Cholesky,
    Omega,
    Correlation,
    Contrast,
    RandomY,
    Link,
    Residual,
}

/// Description of one free parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamInfo {
    pub kind: BlockKind,
    pub label: String,
    /// Class-independent identity, shared by a parameter and its
    /// counterparts in models with a different number of classes.
    pub key: String,
    pub class: Option<usize>,
}

/// Structured (unpacked) parameters with constraints applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// `xi[g][t]`, term 0 is the intercept; the last class is all zero.
    pub xi: Vec<Vec<f64>>,
    pub survival: SurvivalParams,
    pub nu: Vec<f64>,
    /// `delta[g][c]`.
    pub delta: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    /// `upsilon[g][j]`.
    pub upsilon: Vec<Vec<f64>>,
    pub chol: Vec<f64>,
    /// `omega[g]`, the last one is 1.
    pub omega: Vec<f64>,
    pub cor: Vec<f64>,
    /// `contrasts[c][k]`, summing to zero over markers.
    pub contrasts: Vec<Vec<f64>>,
    pub random_y: Vec<f64>,
    pub links: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
}

trait Visit {
    fn free(&mut self, slot: &mut f64, info: &dyn Fn() -> ParamInfo);
    fn fixed(&mut self, slot: &mut f64, value: f64);
}

fn class_label(label: &str, g: usize, ng: usize) -> String {
    if ng > 1 {
        format!("{label} class{}", g + 1)
    } else {
        label.to_string()
    }
}

impl ModelParams {
    /// Parameters of the right sizes, zero except for the entries that
    /// default to one (ω, residual scales when fixed).
    pub fn zeros(shape: &LayoutShape) -> Self {
        let g = shape.ng;
        let k = shape.n_markers();
        Self {
            xi: vec![vec![0.0; shape.classmb.len() + 1]; g],
            survival: SurvivalParams {
                zeta: shape
                    .causes
                    .iter()
                    .map(|c| {
                        let n = if c.hazard_type == HazardType::Specific { g } else { 1 };
                        vec![vec![0.0; c.baseline.n_params()]; n]
                    })
                    .collect(),
                ph_offsets: shape
                    .causes
                    .iter()
                    .map(|c| if c.hazard_type == HazardType::PH { vec![0.0; g] } else { Vec::new() })
                    .collect(),
            },
            nu: vec![0.0; shape.surv_common.len()],
            delta: vec![vec![0.0; shape.surv_class.len()]; g],
            beta: vec![0.0; shape.fixed_common.len()],
            upsilon: vec![vec![0.0; shape.fixed_class.len()]; g],
            chol: vec![0.0; shape.n_chol()],
            omega: vec![1.0; g],
            cor: vec![
                0.0;
                match shape.cor {
                    CorKind::None => 0,
                    CorKind::Brownian => 1,
                    CorKind::Autoregressive => 2,
                }
            ],
            contrasts: vec![vec![0.0; k]; shape.contrasts.len()],
            random_y: if shape.random_y { vec![0.0; k] } else { Vec::new() },
            links: shape.links.iter().map(|l| vec![0.0; l.n_params()]).collect(),
            sigma: vec![1.0; k],
        }
    }

    fn walk(&mut self, shape: &LayoutShape, v: &mut dyn Visit) {
        let ng = shape.ng;
        let k = shape.n_markers();
        let info = |kind, label: String, key: String, class| ParamInfo { kind, label, key, class };

        let mb_names: Vec<String> = std::iter::once("intercept".to_string())
            .chain(shape.classmb.iter().cloned())
            .collect();
        for (t, name) in mb_names.iter().enumerate() {
            for g in 0..ng.saturating_sub(1) {
                v.free(&mut self.xi[g][t], &|| {
                    info(BlockKind::ClassMembership, format!("{name} class{}", g + 1), format!("classmb:{name}"), Some(g))
                });
            }
        }

        for (p, cause) in shape.causes.iter().enumerate() {
            let names = cause.baseline.param_names();
            let cause_tag = if shape.causes.len() > 1 { format!(" event{}", p + 1) } else { String::new() };
            match cause.hazard_type {
                HazardType::Specific => {
                    for g in 0..ng {
                        for (j, n) in names.iter().enumerate() {
                            v.free(&mut self.survival.zeta[p][g][j], &|| {
                                info(
                                    BlockKind::Baseline,
                                    class_label(&format!("{n}{cause_tag}"), g, ng),
                                    format!("baseline:{p}:{j}"),
                                    Some(g),
                                )
                            });
                        }
                    }
                }
                HazardType::PH | HazardType::Common => {
                    for (j, n) in names.iter().enumerate() {
                        v.free(&mut self.survival.zeta[p][0][j], &|| {
                            info(BlockKind::Baseline, format!("{n}{cause_tag}"), format!("baseline:{p}:{j}"), None)
                        });
                    }
                    if cause.hazard_type == HazardType::PH {
                        for g in 0..ng - 1 {
                            v.free(&mut self.survival.ph_offsets[p][g], &|| {
                                info(
                                    BlockKind::PhOffset,
                                    format!("SurvPH{cause_tag} class{}", g + 1),
                                    format!("phoffset:{p}"),
                                    Some(g),
                                )
                            });
                        }
                        v.fixed(&mut self.survival.ph_offsets[p][ng - 1], 0.0);
                    }
                }
            }
        }
        for (c, coef) in shape.surv_common.iter().enumerate() {
            v.free(&mut self.nu[c], &|| {
                info(BlockKind::SurvivalCommon, coef.label.clone(), format!("surv:{}", coef.label), None)
            });
        }
        for g in 0..ng {
            for (c, coef) in shape.surv_class.iter().enumerate() {
                v.free(&mut self.delta[g][c], &|| {
                    info(
                        BlockKind::SurvivalClass,
                        class_label(&coef.label, g, ng),
                        format!("surv:{}", coef.label),
                        Some(g),
                    )
                });
            }
        }

        for (j, name) in shape.fixed_common.iter().enumerate() {
            if shape.intercept == InterceptConstraint::Common(j) {
                v.fixed(&mut self.beta[j], 0.0);
            } else {
                v.free(&mut self.beta[j], &|| {
                    info(BlockKind::FixedCommon, name.clone(), format!("fixed:{name}"), None)
                });
            }
        }
        for g in 0..ng {
            for (j, name) in shape.fixed_class.iter().enumerate() {
                if g == 0 && shape.intercept == InterceptConstraint::FirstClass(j) {
                    v.fixed(&mut self.upsilon[g][j], 0.0);
                } else {
                    v.free(&mut self.upsilon[g][j], &|| {
                        info(BlockKind::FixedClass, class_label(name, g, ng), format!("fixed:{name}"), Some(g))
                    });
                }
            }
        }

        for i in 0..shape.n_chol() {
            if i == 0 && shape.unit_first_variance {
                v.fixed(&mut self.chol[0], 1.0);
            } else {
                let label = if shape.idiag { format!("varcov {}", i + 1) } else { format!("cholesky {}", i + 1) };
                v.free(&mut self.chol[i], &|| info(BlockKind::Cholesky, label.clone(), format!("chol:{i}"), None));
            }
        }

        if shape.nwg {
            for g in 0..ng - 1 {
                v.free(&mut self.omega[g], &|| {
                    info(BlockKind::Omega, format!("varprop class{}", g + 1), "omega".into(), Some(g))
                });
            }
            v.fixed(&mut self.omega[ng - 1], 1.0);
        }

        let cor_names = ["stderr BM/AR", "AR rate"];
        for i in 0..self.cor.len() {
            let label = if shape.cor == CorKind::Brownian { "stderr BM".to_string() } else { cor_names[i].to_string() };
            v.free(&mut self.cor[i], &|| info(BlockKind::Correlation, label.clone(), format!("cor:{i}"), None));
        }

        for (c, name) in shape.contrasts.iter().enumerate() {
            for m in 0..k.saturating_sub(1) {
                let marker = &shape.markers[m];
                v.free(&mut self.contrasts[c][m], &|| {
                    info(
                        BlockKind::Contrast,
                        format!("contrast {name} {marker}"),
                        format!("contrast:{name}:{m}"),
                        None,
                    )
                });
            }
        }

        if shape.random_y {
            for m in 0..k {
                let marker = &shape.markers[m];
                v.free(&mut self.random_y[m], &|| {
                    info(BlockKind::RandomY, format!("std randomY {marker}"), format!("randomY:{m}"), None)
                });
            }
        }

        for (m, link) in shape.links.iter().enumerate() {
            let names = link.param_names();
            let marker = &shape.markers[m];
            for (j, n) in names.iter().enumerate() {
                let label = if k > 1 { format!("{marker}-{n}") } else { n.clone() };
                v.free(&mut self.links[m][j], &|| info(BlockKind::Link, label.clone(), format!("link:{m}:{j}"), None));
            }
        }

        if shape.free_residual {
            for m in 0..k {
                let label = if k > 1 { format!("stderr {}", shape.markers[m]) } else { "stderr".to_string() };
                v.free(&mut self.sigma[m], &|| info(BlockKind::Residual, label.clone(), format!("sigma:{m}"), None));
            }
        }
    }

    fn finalize(&mut self) {
        for c in &mut self.contrasts {
            let k = c.len();
            if k > 0 {
                c[k - 1] = -c[..k - 1].iter().sum::<f64>();
            }
        }
    }

    /// Random-effect covariance `B = U'U` (or `diag(s²)`).
    pub fn b_matrix(&self, shape: &LayoutShape) -> DMatrix<f64> {
        let l = self.b_lower(shape);
        &l * l.transpose()
    }

    /// Lower factor `L = U'` with `B = L L'`.
    pub fn b_lower(&self, shape: &LayoutShape) -> DMatrix<f64> {
        let q = shape.q();
        let mut l = DMatrix::zeros(q, q);
        if shape.idiag {
            for i in 0..q {
                l[(i, i)] = self.chol[i];
            }
        } else {
            let mut pos = 0;
            for col in 0..q {
                for row in 0..=col {
                    // U[row, col] stored column-major; L = U'
                    l[(col, row)] = self.chol[pos];
                    pos += 1;
                }
            }
        }
        l
    }

    /// Prior class-membership probabilities for covariate row `x_c`
    /// (without the leading 1).
    pub fn class_probs(&self, x_c: &[f64]) -> Vec<f64> {
        class_membership_probs(x_c, &self.xi)
    }
}

/// Multinomial logistic class probabilities with the last class as
/// reference. `xi[g][0]` is the intercept of class `g`.
pub fn class_membership_probs(x_c: &[f64], xi: &[Vec<f64>]) -> Vec<f64> {
    let lp: Vec<f64> = xi
        .iter()
        .map(|row| row[0] + row[1..].iter().zip(x_c).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    softmax(&lp)
}

pub fn softmax(lp: &[f64]) -> Vec<f64> {
    let max = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = lp.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

struct Unpacker<'a> {
    theta: &'a [f64],
    pos: usize,
}

impl Visit for Unpacker<'_> {
    fn free(&mut self, slot: &mut f64, _: &dyn Fn() -> ParamInfo) {
        *slot = self.theta[self.pos];
        self.pos += 1;
    }
    fn fixed(&mut self, slot: &mut f64, value: f64) {
        *slot = value;
    }
}

struct Packer(Vec<f64>);

impl Visit for Packer {
    fn free(&mut self, slot: &mut f64, _: &dyn Fn() -> ParamInfo) {
        self.0.push(*slot);
    }
    fn fixed(&mut self, _: &mut f64, _: f64) {}
}

struct Describer(Vec<ParamInfo>);

impl Visit for Describer {
    fn free(&mut self, _: &mut f64, info: &dyn Fn() -> ParamInfo) {
        self.0.push(info());
    }
    fn fixed(&mut self, _: &mut f64, _: f64) {}
}

/// Layout of the free parameter vector of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterLayout {
    shape: LayoutShape,
    params: Vec<ParamInfo>,
}

impl ParameterLayout {
    pub fn new(shape: LayoutShape) -> Self {
        let mut d = Describer(Vec::new());
        ModelParams::zeros(&shape).walk(&shape, &mut d);
        Self { shape, params: d.0 }
    }

    pub fn shape(&self) -> &LayoutShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn params(&self) -> &[ParamInfo] {
        &self.params
    }

    pub fn labels(&self) -> Vec<String> {
        self.params.iter().map(|p| p.label.clone()).collect()
    }

    /// Index range of every nonempty block, in order.
    pub fn blocks(&self) -> Vec<(BlockKind, std::ops::Range<usize>)> {
        let mut out: Vec<(BlockKind, std::ops::Range<usize>)> = Vec::new();
        for (i, p) in self.params.iter().enumerate() {
            match out.last_mut() {
                Some((k, r)) if *k == p.kind => r.end = i + 1,
                _ => out.push((p.kind, i..i + 1)),
            }
        }
        out
    }

    pub fn indices_of(&self, kind: BlockKind) -> Vec<usize> {
        (0..self.params.len()).filter(|&i| self.params[i].kind == kind).collect()
    }

    pub fn unpack(&self, theta: &[f64]) -> Result<ModelParams> {
        if theta.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: theta.len(),
            });
        }
        let mut p = ModelParams::zeros(&self.shape);
        let mut u = Unpacker { theta, pos: 0 };
        p.walk(&self.shape, &mut u);
        p.finalize();
        Ok(p)
    }

    pub fn pack(&self, params: &ModelParams) -> Vec<f64> {
        let mut p = params.clone();
        let mut w = Packer(Vec::with_capacity(self.len()));
        p.walk(&self.shape, &mut w);
        w.0
    }
}
