use crate::error::Result;
use crate::fit::FittedModel;
use crate::layout::softmax;
use crate::likelihood::Evaluator;

/// Posterior class-membership probabilities of the fitted subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTable {
    pub ids: Vec<String>,
    /// Given all the subject's data (longitudinal and, for joint models,
    /// time to event).
    pub probs: Vec<Vec<f64>>,
    /// Given the longitudinal data only (joint models).
    pub probs_y: Option<Vec<Vec<f64>>>,
    /// Class with the largest posterior probability (0-based, lowest
    /// index among ties).
    pub class: Vec<usize>,
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (g, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = g;
        }
    }
    best
}

pub fn posterior_probs(fit: &FittedModel) -> Result<PosteriorTable> {
    let ev = Evaluator::new(&fit.model, &fit.theta)?;
    let joint = fit.model.spec.survival.is_some();
    let mut probs = Vec::new();
    let mut probs_y = Vec::new();
    for s in &fit.model.subjects {
        let t = ev.class_terms(s)?;
        probs.push(t.posterior());
        if joint {
            let ly: Vec<f64> = (0..t.log_prior.len()).map(|g| t.log_prior[g] + t.log_long[g]).collect();
            probs_y.push(softmax(&ly));
        }
    }
    let class = probs.iter().map(|p| argmax(p)).collect();
    Ok(PosteriorTable {
        ids: fit.model.subjects.iter().map(|s| s.id.clone()).collect(),
        probs,
        probs_y: joint.then_some(probs_y),
        class,
    })
}

/// Class sizes and posterior classification table.
#[derive(Debug, Clone, PartialEq)]
pub struct PostprobSummary {
    pub counts: Vec<usize>,
    /// Percentages of subjects per class.
    pub proportions: Vec<f64>,
    /// Row `g`: mean posterior probabilities of the subjects assigned to
    /// class `g`, `None` for an empty class.
    pub table: Vec<Option<Vec<f64>>>,
    /// Per class, proportions (in %) of assigned subjects whose posterior
    /// probability exceeds 0.7, 0.8 and 0.9.
    pub above: Vec<Option<[f64; 3]>>,
}

pub fn postprob_summary(table: &PosteriorTable) -> PostprobSummary {
    let ng = table.probs.first().map_or(0, Vec::len);
    let n = table.probs.len();
    let mut counts = vec![0usize; ng];
    let mut sums = vec![vec![0.0; ng]; ng];
    let mut above_counts = vec![[0usize; 3]; ng];
    for (p, &c) in table.probs.iter().zip(&table.class) {
        counts[c] += 1;
        for (l, v) in p.iter().enumerate() {
            sums[c][l] += v;
        }
        for (i, th) in [0.7, 0.8, 0.9].iter().enumerate() {
            if p[c] > *th {
                above_counts[c][i] += 1;
            }
        }
    }
    let proportions = counts.iter().map(|&c| 100.0 * c as f64 / n.max(1) as f64).collect();
    let table_rows = (0..ng)
        .map(|g| (counts[g] > 0).then(|| sums[g].iter().map(|s| s / counts[g] as f64).collect()))
        .collect();
    let above = (0..ng)
        .map(|g| {
            (counts[g] > 0).then(|| {
                let c = counts[g] as f64;
                [
                    100.0 * above_counts[g][0] as f64 / c,
                    100.0 * above_counts[g][1] as f64 / c,
                    100.0 * above_counts[g][2] as f64 / c,
                ]
            })
        })
        .collect();
    PostprobSummary {
        counts,
        proportions,
        table: table_rows,
        above,
    }
}
