//! Validation of a specification against a dataset and construction of
//! the per-subject design matrices.

use std::cmp::Ordering;

use nalgebra::DMatrix;

use crate::data::LongDataset;
use crate::error::{Error, Result};
use crate::hazards::{BaselineHazard, CauseModel};
use crate::layout::{CorKind, InterceptConstraint, LayoutShape, ParameterLayout, SurvCoef};
use crate::links::{Link, LinkSpec};
use crate::spec::{CauseScope, CorSpec, Family, ModelSpec, Term};

/// Time-to-event data of a subject with its survival covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectSurvival {
    pub entry: Option<f64>,
    pub time: f64,
    pub event: usize,
    /// Values of the survival terms, in specification order.
    pub x: Vec<f64>,
}

/// Design of one subject. Observations of several markers are stacked
/// marker by marker, each marker in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectDesign {
    pub id: String,
    pub marker: Vec<usize>,
    /// Time of each observation for the correlated process and for
    /// ordering (0 when the model has no time column).
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    pub x_common: DMatrix<f64>,
    pub x_class: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub x_contrast: DMatrix<f64>,
    /// Class-membership covariates (without the intercept).
    pub x_classmb: Vec<f64>,
    pub survival: Option<SubjectSurvival>,
}

impl SubjectDesign {
    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    /// Indices of the observations of marker `k`.
    pub fn marker_indices(&self, k: usize) -> Vec<usize> {
        (0..self.marker.len()).filter(|&j| self.marker[j] == k).collect()
    }
}

/// Counts reported after missing-data handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DataSummary {
    pub n_subjects: usize,
    pub n_observations: usize,
    /// Observations (row × marker) removed because of missing values.
    pub n_deleted: usize,
    /// Subjects removed because nothing of them was retained.
    pub n_subjects_dropped: usize,
}

/// Per-cause event counts and sums of event times.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EventStats {
    pub events: usize,
    pub time_sum: f64,
}

/// A specification checked against data, with every design built.
/// Immutable once constructed.
#[derive(Debug, Clone)]
pub struct ValidatedModel {
    pub spec: ModelSpec,
    pub layout: ParameterLayout,
    pub subjects: Vec<SubjectDesign>,
    pub summary: DataSummary,
    /// Retained values of each marker.
    pub marker_values: Vec<Vec<f64>>,
    pub event_stats: Vec<EventStats>,
    pub survival_terms: Vec<Term>,
}

/// Column lookup for term evaluation.
#[derive(Debug, Clone)]
pub struct Columns {
    names: Vec<String>,
}

impl Columns {
    pub fn new(names: &[String]) -> Self {
        Self { names: names.to_vec() }
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn check_term(&self, t: &Term) -> Result<()> {
        for c in t.columns() {
            self.index(c)?;
        }
        Ok(())
    }

    pub fn eval(&self, t: &Term, row: &[f64]) -> Result<f64> {
        Ok(match t {
            Term::Intercept => 1.0,
            Term::Column(c) => row[self.index(c)?],
            Term::Product(cs) => {
                let mut v = 1.0;
                for c in cs {
                    v *= row[self.index(c)?];
                }
                v
            }
        })
    }

    pub fn eval_all(&self, terms: &[Term], row: &[f64]) -> Result<Vec<f64>> {
        terms.iter().map(|t| self.eval(t, row)).collect()
    }
}

fn term_names(terms: &[Term]) -> Vec<String> {
    terms.iter().map(Term::name).collect()
}

impl ModelSpec {
    pub fn common_fixed_terms(&self) -> Vec<Term> {
        self.fixed.iter().filter(|t| !self.mixture.contains(t)).cloned().collect()
    }

    /// Column ordering observations within a subject.
    pub fn ordering_column(&self) -> Option<&str> {
        self.time.as_deref().or(self.cor.time_column())
    }
}

fn row_order(a: &[f64], b: &[f64], key: Option<usize>) -> Ordering {
    if let Some(k) = key {
        let o = a[k].total_cmp(&b[k]);
        if o != Ordering::Equal {
            return o;
        }
    }
    for (x, y) in a.iter().zip(b) {
        let o = x.total_cmp(y);
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Validates `spec` against `data` and builds all subject designs.
pub fn validate_and_build(spec: &ModelSpec, data: &LongDataset) -> Result<ValidatedModel> {
    spec.check()?;
    let cols = Columns::new(data.columns());
    let k_markers = spec.outcomes.len();
    let outcome_idx: Vec<usize> = spec.outcomes.iter().map(|o| cols.index(o)).collect::<Result<_>>()?;
    for t in spec.fixed.iter().chain(&spec.random).chain(&spec.classmb).chain(&spec.contrast) {
        cols.check_term(t)?;
    }
    let cor_idx = spec.cor.time_column().map(|c| cols.index(c)).transpose()?;
    let order_idx = spec.ordering_column().map(|c| cols.index(c)).transpose()?;
    let surv_terms: Vec<Term> = spec
        .survival
        .as_ref()
        .map(|s| s.terms.iter().map(|t| t.term.clone()).collect())
        .unwrap_or_default();
    for t in &surv_terms {
        cols.check_term(t)?;
    }

    let survival_records = match &spec.survival {
        Some(s) => {
            let recs = data.survival_records(s.entry.as_deref(), &s.time, &s.event)?;
            if recs.is_empty() {
                return Err(Error::Data("no usable survival records".into()));
            }
            Some(recs)
        }
        None => None,
    };

    // columns that must be present for a row to be kept
    let mut row_terms: Vec<Term> = spec.fixed.clone();
    row_terms.extend(spec.random.iter().cloned());
    row_terms.extend(spec.contrast.iter().cloned());
    let mut required: Vec<usize> = Vec::new();
    for t in &row_terms {
        for c in t.columns() {
            required.push(cols.index(c)?);
        }
    }
    required.extend(cor_idx);
    required.extend(order_idx);
    required.sort_unstable();
    required.dedup();

    struct Kept {
        id: String,
        rows: Vec<Vec<f64>>,
        survival: Option<(Option<f64>, f64, usize)>,
    }
    let mut kept: Vec<Kept> = Vec::new();
    let mut summary = DataSummary::default();
    let mut surv_iter = survival_records.as_ref().map(|r| r.iter().peekable());
    for subj in data.subjects() {
        let surv = match surv_iter.as_mut() {
            Some(it) => match it.peek() {
                Some(r) if r.subject_id == subj.id => {
                    let r = it.next().unwrap();
                    Some((r.entry_time, r.event_time, r.event))
                }
                _ => None,
            },
            None => None,
        };
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for r in &subj.rows {
            let present = outcome_idx.iter().filter(|&&j| r[j].is_finite()).count();
            if required.iter().all(|&j| r[j].is_finite()) && present > 0 {
                summary.n_deleted += k_markers - present;
                rows.push(r.clone());
            } else {
                summary.n_deleted += k_markers;
            }
        }
        let subject_level_ok = |row: &[f64]| -> Result<bool> {
            for t in spec.classmb.iter().chain(&surv_terms) {
                if !cols.eval(t, row)?.is_finite() {
                    return Ok(false);
                }
            }
            Ok(true)
        };
        let usable = !rows.is_empty()
            && (spec.survival.is_none() || surv.is_some())
            && subject_level_ok(&rows[0])?;
        if !usable {
            summary.n_subjects_dropped += 1;
            continue;
        }
        rows.sort_by(|a, b| row_order(a, b, order_idx));
        kept.push(Kept {
            id: subj.id.clone(),
            rows,
            survival: surv,
        });
    }
    if kept.is_empty() {
        return Err(Error::Data("no subject left after removing missing values".into()));
    }

    // resolve links
    let mut marker_values: Vec<Vec<f64>> = vec![Vec::new(); k_markers];
    for s in &kept {
        for r in &s.rows {
            for (k, &j) in outcome_idx.iter().enumerate() {
                if r[j].is_finite() {
                    marker_values[k].push(r[j]);
                }
            }
        }
    }
    let mut links = Vec::new();
    if spec.has_link() {
        let mut nodes_used = 0;
        for (k, values) in marker_values.iter().enumerate() {
            let ls = spec.link_for(k);
            let range = spec.range.as_ref().map(|r| r[k]);
            let interior = match (&ls, &spec.intnodes) {
                (LinkSpec::Splines { n_knots, placement: crate::basis::KnotPlacement::Manual }, Some(nodes)) => {
                    let need = n_knots - 2;
                    if nodes.len() < nodes_used + need {
                        return Err(Error::Spec("not enough interior knots in intnodes".into()));
                    }
                    let slice = nodes[nodes_used..nodes_used + need].to_vec();
                    nodes_used += need;
                    Some(slice)
                }
                _ => None,
            };
            links.push(Link::resolve(&ls, values, range, spec.eps_y, interior.as_deref())?);
        }
    }

    // survival structure
    let mut causes = Vec::new();
    let mut event_stats = Vec::new();
    if let Some(s) = &spec.survival {
        let max_event = kept.iter().filter_map(|k| k.survival.map(|v| v.2)).max().unwrap_or(0);
        let p_causes = s.n_causes.unwrap_or(max_event.max(1));
        if max_event > p_causes {
            return Err(Error::Data(format!("event code {max_event} exceeds the {p_causes} declared causes")));
        }
        let pick = |n: usize, what: &str| -> Result<()> {
            if n == 1 || n == p_causes {
                Ok(())
            } else {
                Err(Error::Spec(format!("give one {what} or one per cause ({p_causes})")))
            }
        };
        pick(s.hazard.len(), "hazard")?;
        pick(s.hazard_type.len(), "hazard type")?;
        let entry_min = if s.entry.is_some() {
            kept.iter().filter_map(|k| k.survival.and_then(|v| v.0)).fold(f64::INFINITY, f64::min)
        } else {
            0.0
        };
        let times: Vec<f64> = kept.iter().filter_map(|k| k.survival.map(|v| v.1)).collect();
        let mut nodes_used = 0;
        for p in 0..p_causes {
            let hs = &s.hazard[if s.hazard.len() == 1 { 0 } else { p }];
            let ht = s.hazard_type[if s.hazard_type.len() == 1 { 0 } else { p }];
            let interior = match (hs, &s.hazard_nodes) {
                (
                    crate::hazards::HazardSpec::Piecewise { n_knots, placement: crate::basis::KnotPlacement::Manual }
                    | crate::hazards::HazardSpec::Splines { n_knots, placement: crate::basis::KnotPlacement::Manual },
                    Some(nodes),
                ) => {
                    let need = n_knots - 2;
                    if nodes.len() < nodes_used + need {
                        return Err(Error::Spec("not enough interior knots in hazardnodes".into()));
                    }
                    let slice = nodes[nodes_used..nodes_used + need].to_vec();
                    nodes_used += need;
                    Some(slice)
                }
                _ => None,
            };
            causes.push(CauseModel {
                baseline: BaselineHazard::resolve(hs, s.logscale, entry_min, &times, interior.as_deref())?,
                hazard_type: ht,
            });
            let mut st = crate::model::EventStats::default();
            for k in &kept {
                if let Some((_, t, e)) = k.survival {
                    if e == p + 1 {
                        st.events += 1;
                        st.time_sum += t;
                    }
                }
            }
            event_stats.push(st);
        }
    }

    let shape = build_shape(spec, links, causes)?;
    let layout = ParameterLayout::new(shape);

    // designs
    let builder = DesignBuilder {
        cols: cols.clone(),
        common: spec.common_fixed_terms(),
        mixture: spec.mixture.clone(),
        random: spec.random.clone(),
        contrast: spec.contrast.clone(),
        time_idx: cor_idx.or(order_idx),
    };
    let mut subjects = Vec::with_capacity(kept.len());
    for s in kept {
        let mut obs_rows: Vec<(usize, &Vec<f64>)> = Vec::new();
        for (k, &j) in outcome_idx.iter().enumerate() {
            for r in &s.rows {
                if r[j].is_finite() {
                    obs_rows.push((k, r));
                }
            }
        }
        let y: Vec<f64> = obs_rows.iter().map(|(k, r)| r[outcome_idx[*k]]).collect();
        let markers: Vec<usize> = obs_rows.iter().map(|(k, _)| *k).collect();
        let rows: Vec<&[f64]> = obs_rows.iter().map(|(_, r)| r.as_slice()).collect();
        let mut d = builder.build(&rows, &markers)?;
        d.id = s.id.clone();
        d.y = y;
        d.x_classmb = cols.eval_all(&spec.classmb, &s.rows[0])?;
        d.survival = match s.survival {
            Some((entry, time, event)) => Some(SubjectSurvival {
                entry,
                time,
                event,
                x: cols.eval_all(&surv_terms, &s.rows[0])?,
            }),
            None => None,
        };
        summary.n_observations += d.n_obs();
        subjects.push(d);
    }
    summary.n_subjects = subjects.len();

    Ok(ValidatedModel {
        spec: spec.clone(),
        layout,
        subjects,
        summary,
        marker_values,
        event_stats,
        survival_terms: surv_terms,
    })
}

/// Layout shape of `spec` with resolved links and hazards.
pub fn build_shape(spec: &ModelSpec, links: Vec<Link>, causes: Vec<CauseModel>) -> Result<LayoutShape> {
    let common = spec.common_fixed_terms();
    let p_causes = causes.len();
    let mut surv_common = Vec::new();
    let mut surv_class = Vec::new();
    if let Some(s) = &spec.survival {
        for (i, st) in s.terms.iter().enumerate() {
            let name = st.term.name();
            let tag = |p: usize| if p_causes > 1 { format!("{name} event{}", p + 1) } else { name.clone() };
            let coefs: Vec<SurvCoef> = match st.scope {
                CauseScope::Shared => vec![SurvCoef {
                    term: i,
                    causes: (0..p_causes).collect(),
                    label: name.clone(),
                }],
                CauseScope::EachCause => (0..p_causes)
                    .map(|p| SurvCoef {
                        term: i,
                        causes: vec![p],
                        label: tag(p),
                    })
                    .collect(),
                CauseScope::Only(p) => {
                    if p >= p_causes {
                        return Err(Error::Spec(format!("term `{name}` refers to cause {} of {p_causes}", p + 1)));
                    }
                    vec![SurvCoef {
                        term: i,
                        causes: vec![p],
                        label: tag(p),
                    }]
                }
            };
            if st.class_specific {
                surv_class.extend(coefs);
            } else {
                surv_common.extend(coefs);
            }
        }
    }

    let fixed_common = term_names(&common);
    let fixed_class = term_names(&spec.mixture);
    let intercept = if spec.has_link() {
        if let Some(i) = common.iter().position(|t| *t == Term::Intercept) {
            InterceptConstraint::Common(i)
        } else if let Some(i) = spec.mixture.iter().position(|t| *t == Term::Intercept) {
            InterceptConstraint::FirstClass(i)
        } else {
            InterceptConstraint::None
        }
    } else {
        InterceptConstraint::None
    };
    Ok(LayoutShape {
        ng: spec.ng,
        classmb: term_names(&spec.classmb),
        causes,
        surv_common,
        surv_class,
        fixed_common,
        fixed_class,
        intercept,
        random: term_names(&spec.random),
        idiag: spec.idiag,
        unit_first_variance: spec.family == Family::Multlcmm,
        nwg: spec.nwg,
        cor: match spec.cor {
            CorSpec::None => CorKind::None,
            CorSpec::Brownian(_) => CorKind::Brownian,
            CorSpec::Autoregressive(_) => CorKind::Autoregressive,
        },
        contrasts: term_names(&spec.contrast),
        markers: spec.outcomes.clone(),
        random_y: spec.random_y,
        links,
        free_residual: match spec.family {
            Family::Hlme | Family::Multlcmm => true,
            Family::Lcmm => false,
            Family::Jointlcmm => !spec.has_link(),
        },
    })
}

/// Links resolved from declared outcome ranges: `[lo, hi]` for continuous
/// links, the integer levels `lo..=hi` for thresholds.
pub fn declared_links(spec: &ModelSpec, ranges: &[(f64, f64)]) -> Result<Vec<Link>> {
    if !spec.has_link() {
        return Ok(Vec::new());
    }
    if ranges.len() != spec.outcomes.len() {
        return Err(Error::LengthMismatch {
            expected: spec.outcomes.len(),
            got: ranges.len(),
        });
    }
    let mut nodes_used = 0;
    let mut out = Vec::new();
    for (k, &(lo, hi)) in ranges.iter().enumerate() {
        let ls = spec.link_for(k);
        let values: Vec<f64> = match ls {
            LinkSpec::Thresholds => (lo.round() as i64..=hi.round() as i64).map(|v| v as f64).collect(),
            _ => (0..=100).map(|i| lo + (hi - lo) * i as f64 / 100.0).collect(),
        };
        let interior = match (&ls, &spec.intnodes) {
            (LinkSpec::Splines { n_knots, placement: crate::basis::KnotPlacement::Manual }, Some(nodes)) => {
                let need = n_knots - 2;
                let slice = nodes.get(nodes_used..nodes_used + need).map(<[f64]>::to_vec);
                nodes_used += need;
                slice
            }
            _ => None,
        };
        let range = if ls.is_continuous() { Some((lo, hi)) } else { None };
        out.push(Link::resolve(&ls, &values, range, spec.eps_y, interior.as_deref())?);
    }
    Ok(out)
}

/// Hazards resolved over the declared time support `[lo, hi]` with
/// `n_causes` causes.
pub fn declared_causes(spec: &ModelSpec, support: (f64, f64), n_causes: usize) -> Result<Vec<CauseModel>> {
    let Some(s) = &spec.survival else {
        return Ok(Vec::new());
    };
    let times: Vec<f64> = (0..=100).map(|i| support.0 + (support.1 - support.0) * i as f64 / 100.0).collect();
    let mut nodes_used = 0;
    let mut out = Vec::new();
    for p in 0..n_causes {
        let hs = &s.hazard[if s.hazard.len() == 1 { 0 } else { p }];
        let ht = s.hazard_type[if s.hazard_type.len() == 1 { 0 } else { p }];
        let interior = match (hs, &s.hazard_nodes) {
            (
                crate::hazards::HazardSpec::Piecewise { n_knots, placement: crate::basis::KnotPlacement::Manual }
                | crate::hazards::HazardSpec::Splines { n_knots, placement: crate::basis::KnotPlacement::Manual },
                Some(nodes),
            ) => {
                let need = n_knots - 2;
                let slice = nodes.get(nodes_used..nodes_used + need).map(<[f64]>::to_vec);
                nodes_used += need;
                slice
            }
            _ => None,
        };
        out.push(CauseModel {
            baseline: BaselineHazard::resolve(hs, s.logscale, support.0, &times, interior.as_deref())?,
            hazard_type: ht,
        });
    }
    Ok(out)
}

/// Builds design matrices from raw rows.
#[derive(Debug, Clone)]
pub struct DesignBuilder {
    pub cols: Columns,
    pub common: Vec<Term>,
    pub mixture: Vec<Term>,
    pub random: Vec<Term>,
    pub contrast: Vec<Term>,
    pub time_idx: Option<usize>,
}

impl DesignBuilder {
    /// Design for observations given by `rows` of marker `markers[j]`.
    /// Outcomes, class-membership and survival parts are left empty.
    pub fn build(&self, rows: &[&[f64]], markers: &[usize]) -> Result<SubjectDesign> {
        let n = rows.len();
        let fill = |terms: &[Term]| -> Result<DMatrix<f64>> {
            let mut m = DMatrix::zeros(n, terms.len());
            for (i, r) in rows.iter().enumerate() {
                for (j, t) in terms.iter().enumerate() {
                    m[(i, j)] = self.cols.eval(t, r)?;
                }
            }
            Ok(m)
        };
        Ok(SubjectDesign {
            id: String::new(),
            marker: markers.to_vec(),
            times: rows.iter().map(|r| self.time_idx.map_or(0.0, |j| r[j])).collect(),
            y: vec![f64::NAN; n],
            x_common: fill(&self.common)?,
            x_class: fill(&self.mixture)?,
            z: fill(&self.random)?,
            x_contrast: fill(&self.contrast)?,
            x_classmb: Vec::new(),
            survival: None,
        })
    }
}

impl ValidatedModel {
    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn shape(&self) -> &LayoutShape {
        self.layout.shape()
    }

    /// Builder for designs over rows with the given column names
    /// (used for predictions on new data).
    pub fn design_builder(&self, columns: &[String]) -> Result<DesignBuilder> {
        let cols = Columns::new(columns);
        let spec = &self.spec;
        for t in spec.fixed.iter().chain(&spec.random).chain(&spec.contrast) {
            cols.check_term(t)?;
        }
        let time_idx = spec
            .cor
            .time_column()
            .or(spec.ordering_column())
            .map(|c| cols.index(c))
            .transpose()?;
        Ok(DesignBuilder {
            cols,
            common: spec.common_fixed_terms(),
            mixture: spec.mixture.clone(),
            random: spec.random.clone(),
            contrast: spec.contrast.clone(),
            time_idx,
        })
    }

    /// A model with no data, from links and hazards resolved elsewhere
    /// (used to simulate or to evaluate a known parameter vector).
    pub fn declared(spec: &ModelSpec, links: Vec<Link>, causes: Vec<CauseModel>) -> Result<Self> {
        spec.check()?;
        if spec.has_link() != !links.is_empty() || (spec.has_link() && links.len() != spec.outcomes.len()) {
            return Err(Error::Spec("one resolved link per outcome is needed".into()));
        }
        if spec.survival.is_some() == causes.is_empty() {
            return Err(Error::Spec("resolved hazards must match the survival part".into()));
        }
        let survival_terms = spec
            .survival
            .as_ref()
            .map(|s| s.terms.iter().map(|t| t.term.clone()).collect())
            .unwrap_or_default();
        let n_causes = causes.len();
        let layout = ParameterLayout::new(build_shape(spec, links, causes)?);
        Ok(Self {
            spec: spec.clone(),
            layout,
            subjects: Vec::new(),
            summary: DataSummary::default(),
            marker_values: vec![Vec::new(); spec.outcomes.len()],
            event_stats: vec![EventStats::default(); n_causes],
            survival_terms,
        })
    }

    /// Design of a subject outside the fitted data. Subject-level
    /// covariates come from the first row; observations are the non-missing
    /// outcome values of the rows whose time is at most `cutoff`.
    pub fn subject_from_rows(
        &self,
        id: &str,
        columns: &[String],
        rows: &[Vec<f64>],
        cutoff: Option<f64>,
    ) -> Result<SubjectDesign> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Data(format!("subject `{id}` has no row")))?;
        let cols = Columns::new(columns);
        let builder = self.design_builder(columns)?;
        let spec = &self.spec;
        let outcome_idx: Vec<usize> = spec.outcomes.iter().map(|o| cols.index(o)).collect::<Result<_>>()?;
        let time_idx = spec.ordering_column().map(|c| cols.index(c)).transpose()?;
        let mut kept: Vec<&Vec<f64>> = rows
            .iter()
            .filter(|r| match (cutoff, time_idx) {
                (Some(c), Some(j)) => r[j] <= c,
                _ => true,
            })
            .collect();
        kept.sort_by(|a, b| row_order(a, b, time_idx));
        let mut obs: Vec<(usize, &[f64])> = Vec::new();
        for (k, &j) in outcome_idx.iter().enumerate() {
            for r in &kept {
                if r[j].is_finite() {
                    obs.push((k, r.as_slice()));
                }
            }
        }
        let row_refs: Vec<&[f64]> = obs.iter().map(|o| o.1).collect();
        let markers: Vec<usize> = obs.iter().map(|o| o.0).collect();
        let mut d = builder.build(&row_refs, &markers)?;
        for (j, r) in row_refs.iter().enumerate() {
            let bad = (0..d.x_common.ncols()).any(|c| !d.x_common[(j, c)].is_finite())
                || (0..d.x_class.ncols()).any(|c| !d.x_class[(j, c)].is_finite())
                || (0..d.z.ncols()).any(|c| !d.z[(j, c)].is_finite())
                || (0..d.x_contrast.ncols()).any(|c| !d.x_contrast[(j, c)].is_finite())
                || !d.times[j].is_finite();
            if bad {
                return Err(Error::Data(format!("missing covariate for subject `{id}` at row {:?}", r)));
            }
        }
        d.id = id.to_string();
        d.y = obs.iter().map(|(k, r)| r[outcome_idx[*k]]).collect();
        d.x_classmb = cols.eval_all(&spec.classmb, first)?;
        if spec.survival.is_some() {
            let x = cols.eval_all(&self.survival_terms, first)?;
            if x.iter().any(|v| !v.is_finite()) || d.x_classmb.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("missing subject-level covariate for subject `{id}`")));
            }
            d.survival = Some(SubjectSurvival {
                entry: None,
                time: f64::NAN,
                event: 0,
                x,
            });
        }
        Ok(d)
    }

    /// Restricts the model to a subset of subjects (by index).
    pub fn with_subjects(&self, subjects: Vec<SubjectDesign>) -> Self {
        let mut m = self.clone();
        m.summary.n_subjects = subjects.len();
        m.summary.n_observations = subjects.iter().map(|s| s.n_obs()).sum();
        m.subjects = subjects;
        m
    }
}
