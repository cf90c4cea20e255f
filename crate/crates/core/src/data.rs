//! Long-format datasets: one row per subject visit, numeric columns, with
//! `NaN` standing for a missing value.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// One retained visit of a subject.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRecord {
    pub subject_id: String,
    /// Outcome values per marker, `None` when missing.
    pub outcome_values: Vec<Option<f64>>,
    pub time: f64,
    pub covariates: Vec<(String, f64)>,
}

/// Time-to-event data of a subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalRecord {
    pub subject_id: String,
    pub entry_time: Option<f64>,
    pub event_time: f64,
    /// 0 for censoring, otherwise the cause (1-based).
    pub event: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRows {
    pub id: String,
    pub rows: Vec<Vec<f64>>,
}

/// Rows grouped by subject, subjects ordered by identifier (numerically
/// when every identifier is a number) and rows kept in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct LongDataset {
    columns: Vec<String>,
    subjects: Vec<SubjectRows>,
}

fn compare_ids(a: &str, b: &str, numeric: bool) -> Ordering {
    if numeric {
        let x: f64 = a.parse().unwrap_or(f64::NAN);
        let y: f64 = b.parse().unwrap_or(f64::NAN);
        x.total_cmp(&y).then_with(|| a.cmp(b))
    } else {
        a.cmp(b)
    }
}

impl LongDataset {
    /// Builds a dataset from `(subject id, row)` pairs.
    pub fn from_rows(columns: Vec<String>, rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let width = columns.len();
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if !seen.insert(c.as_str()) {
                return Err(Error::Data(format!("duplicated column `{c}`")));
            }
        }
        let mut groups: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
        for (id, row) in rows {
            if row.len() != width {
                return Err(Error::Data(format!(
                    "row of subject `{id}` has {} values, expected {width}",
                    row.len()
                )));
            }
            groups.entry(id).or_default().push(row);
        }
        let numeric = groups.keys().all(|k| k.parse::<f64>().is_ok());
        let mut subjects: Vec<SubjectRows> = groups
            .into_iter()
            .map(|(id, rows)| SubjectRows { id, rows })
            .collect();
        subjects.sort_by(|a, b| compare_ids(&a.id, &b.id, numeric));
        Ok(Self { columns, subjects })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn subjects(&self) -> &[SubjectRows] {
        &self.subjects
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn n_rows(&self) -> usize {
        self.subjects.iter().map(|s| s.rows.len()).sum()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// All values of a column in subject order.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column_index(name)?;
        Ok(self
            .subjects
            .iter()
            .flat_map(|s| s.rows.iter().map(move |r| r[j]))
            .collect())
    }

    /// Flattened `(subject id, row)` pairs in subject order.
    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.subjects
            .iter()
            .flat_map(|s| s.rows.iter().map(move |r| (s.id.as_str(), r.as_slice())))
    }

    /// Per-subject survival records read from per-subject constant columns.
    pub fn survival_records(&self, entry: Option<&str>, time: &str, event: &str) -> Result<Vec<SurvivalRecord>> {
        let je = entry.map(|e| self.column_index(e)).transpose()?;
        let jt = self.column_index(time)?;
        let jd = self.column_index(event)?;
        let mut out = Vec::with_capacity(self.subjects.len());
        for s in &self.subjects {
            let first = &s.rows[0];
            for r in &s.rows[1..] {
                let differs = |j: usize| !(r[j] == first[j] || (r[j].is_nan() && first[j].is_nan()));
                if differs(jt) || differs(jd) || je.is_some_and(differs) {
                    return Err(Error::Data(format!(
                        "survival columns vary within subject `{}`",
                        s.id
                    )));
                }
            }
            let t = first[jt];
            let e = first[jd];
            let t0 = je.map(|j| first[j]);
            if !t.is_finite() || !e.is_finite() || t0.is_some_and(|v| !v.is_finite()) {
                continue;
            }
            if e < 0.0 || e.fract() != 0.0 {
                return Err(Error::Data(format!("event indicator {e} of subject `{}` is not a cause number", s.id)));
            }
            if let Some(t0) = t0 {
                if !(t0 >= 0.0 && t0 < t) {
                    return Err(Error::Data(format!(
                        "subject `{}` has entry time {t0} not before event time {t}",
                        s.id
                    )));
                }
            }
            out.push(SurvivalRecord {
                subject_id: s.id.clone(),
                entry_time: t0,
                event_time: t,
                event: e as usize,
            });
        }
        Ok(out)
    }
}
