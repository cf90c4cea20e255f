//! Human-readable report of a fit.

use std::fmt::Write;

use mixlong::layout::BlockKind;
use mixlong::postfit::{estimates_table, posterior_probs, postprob_summary, varcov_re};
use mixlong::FittedModel;

use crate::archive::FitArchive;

fn block_title(kind: BlockKind) -> &'static str {
    match kind {
        BlockKind::ClassMembership => "Class-membership model",
        BlockKind::Baseline => "Baseline hazards",
        BlockKind::PhOffset => "Proportional class effects on the baseline hazard",
        BlockKind::SurvivalCommon | BlockKind::SurvivalClass => "Survival covariate effects",
        BlockKind::FixedCommon | BlockKind::FixedClass => "Fixed effects of the longitudinal model",
        BlockKind::Cholesky => "Cholesky factor of the random-effect covariance",
        BlockKind::Omega => "Class-specific random-effect scale",
        BlockKind::Correlation => "Correlated process",
        BlockKind::Contrast => "Marker contrasts",
        BlockKind::RandomY => "Marker-specific random intercepts (SD)",
        BlockKind::Link => "Link function parameters",
        BlockKind::Residual => "Residual standard errors",
    }
}

fn num(v: f64) -> String {
    format!("{v:>12.5}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| format!("{:>12}", ""), num)
}

fn p_value(v: Option<f64>) -> String {
    match v {
        None => format!("{:>10}", ""),
        Some(p) if p < 1e-5 => format!("{:>10}", "<0.00001"),
        Some(p) => format!("{p:>10.5}"),
    }
}

/// The fit report. It only depends on the archive and the model rebuilt
/// from it, so a reloaded archive prints the same bytes.
pub fn report(archive: &FitArchive, fit: &FittedModel) -> String {
    let mut s = String::new();
    let m = &fit.model;
    let shape = m.layout.shape();
    let spec = &m.spec;
    let _ = writeln!(s, "{} model with {} latent class{}", spec.family.as_str(), spec.ng, if spec.ng == 1 { "" } else { "es" });
    let _ = writeln!(s, "Outcome{}: {}", if spec.outcomes.len() > 1 { "s" } else { "" }, spec.outcomes.join(", "));
    s.push('\n');

    let d = &m.summary;
    let _ = writeln!(s, "Data");
    let _ = writeln!(s, "  subjects                 {}", d.n_subjects);
    let _ = writeln!(s, "  observations             {}", d.n_observations);
    let _ = writeln!(s, "  deleted observations     {}", d.n_deleted);
    if d.n_subjects_dropped > 0 {
        let _ = writeln!(s, "  dropped subjects         {}", d.n_subjects_dropped);
    }
    for (p, e) in m.event_stats.iter().enumerate() {
        let _ = writeln!(s, "  events of cause {}        {}", p + 1, e.events);
    }
    s.push('\n');

    let st = &archive.settings;
    let status = if fit.converged {
        "converged"
    } else if fit.stalled {
        "stopped (no improving step)"
    } else {
        "not converged (maximum number of iterations)"
    };
    let _ = writeln!(s, "Optimization: {status} after {} iterations", fit.iterations);
    let c = &fit.criteria;
    let _ = writeln!(s, "  parameter criterion      {:.5e}  (convB = {:e})", c.parameters, st.conv_b);
    let _ = writeln!(s, "  likelihood criterion     {:.5e}  (convL = {:e})", c.likelihood, st.conv_l);
    let _ = writeln!(s, "  derivative criterion     {:.5e}  (convG = {:e})", c.derivatives, st.conv_g);
    let _ = writeln!(s, "  starting values          {}", st.init);
    if !fit.grid_logliks.is_empty() {
        let best = fit.grid_logliks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(s, "  grid search              {} runs, best short-run logL {best:.5}", fit.grid_logliks.len());
    }
    for n in &fit.notes {
        let _ = writeln!(s, "  note: {n}");
    }
    s.push('\n');

    let _ = writeln!(s, "Goodness of fit");
    let _ = writeln!(s, "  log-likelihood           {:.5}", fit.loglik);
    let _ = writeln!(s, "  parameters               {}", fit.n_params());
    let _ = writeln!(s, "  AIC                      {:.5}", fit.aic());
    let _ = writeln!(s, "  BIC                      {:.5}", fit.bic());
    s.push('\n');

    if spec.ng > 1 {
        if let Ok(post) = posterior_probs(fit) {
            let sum = postprob_summary(&post);
            let _ = writeln!(s, "Posterior classification");
            for g in 0..spec.ng {
                let _ = writeln!(s, "  class {}: {} subjects ({:.2}%)", g + 1, sum.counts[g], sum.proportions[g]);
            }
            s.push('\n');
        }
    }

    let rows = estimates_table(fit);
    let mut current: Option<&str> = None;
    let _ = writeln!(s, "Estimates");
    for (i, r) in rows.iter().enumerate() {
        let title = block_title(r.info.kind);
        if current != Some(title) {
            let _ = writeln!(s, "\n  {title}");
            let _ = writeln!(s, "  {:<4} {:<30} {:>12} {:>12} {:>12} {:>10}", "#", "", "coef", "Se", "Wald", "p-value");
            current = Some(title);
        }
        let label = match r.info.class {
            Some(g) if !r.info.label.contains("class") => format!("{} class{}", r.info.label, g + 1),
            _ => r.info.label.clone(),
        };
        if r.fixed {
            let _ = writeln!(s, "  {:<4} {:<30} {} {:>12}", i + 1, label, num(r.estimate), "fixed");
        } else {
            let _ = writeln!(
                s,
                "  {:<4} {:<30} {} {} {} {}",
                i + 1,
                label,
                num(r.estimate),
                opt(r.se),
                opt(r.wald),
                p_value(r.p_value)
            );
        }
    }
    s.push('\n');

    if shape.q() > 0 {
        if let Ok(vc) = varcov_re(fit) {
            let q = shape.q();
            let mut b = vec![vec![None; q]; q];
            for r in &vc {
                b[r.row][r.col] = Some(r.estimate);
            }
            let _ = writeln!(s, "Random-effect covariance");
            let _ = write!(s, "  {:<20}", "");
            for name in &shape.random {
                let _ = write!(s, " {name:>12}");
            }
            s.push('\n');
            for i in 0..q {
                let _ = write!(s, "  {:<20}", shape.random[i]);
                for j in 0..=i {
                    let v = b[j][i].or(b[i][j]);
                    let _ = write!(s, " {}", opt(v));
                }
                s.push('\n');
            }
            s.push('\n');
        }
    }

    if !shape.links.is_empty() {
        let _ = writeln!(s, "Links");
        for (k, l) in shape.links.iter().enumerate() {
            let _ = writeln!(s, "  {}: {}", shape.markers[k], l.description());
        }
        s.push('\n');
    }
    if !shape.causes.is_empty() {
        let _ = writeln!(s, "Hazards");
        for (p, c) in shape.causes.iter().enumerate() {
            let _ = writeln!(s, "  cause {}: {} ({})", p + 1, c.baseline.description(), c.hazard_type.as_str());
        }
        s.push('\n');
    }
    s
}
