//! Command-line definitions and dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mixlong::fit::{fit_model, CovarianceMethod, FitOptions, InitStrategy};
use mixlong::postfit::{
    cumulative_incidence, dynamic_prediction, fit_outcome_scale, posterior_probs, predict_link, predict_trajectory,
    predictions_residuals, var_explained, Band, Integration, LinkGrid, Scale,
};
use mixlong::simulate::simulate;
use mixlong::{FittedModel, LongDataset};

use crate::archive::{FitArchive, FitSettings};
use crate::dataio::{dataset_table, fmt_float, read_dataset_file, Fingerprint, Table};
use crate::error::{CliError, Result};
use crate::simdesign::DesignFile;
use crate::specfile::SpecFile;
use crate::summary::report;

#[derive(Debug, Parser)]
#[command(name = "mixlong", version, about = "Latent class and latent process mixed models")]
pub struct Cli {
    /// Worker threads for likelihood and derivative evaluations (results
    /// do not depend on it).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and write its archive.
    Fit(FitArgs),
    /// Print the report of an archived fit.
    Summary(SummaryArgs),
    /// Compare archived fits (classes, logL, parameters, BIC, class sizes).
    Summarytable(SummaryTableArgs),
    /// Quantities computed from an archived fit.
    Postfit(PostfitArgs),
    /// Simulate a dataset from a model.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HessianArg {
    Forward,
    Central,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Archive to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "convB", default_value_t = 1e-4)]
    pub conv_b: f64,
    #[arg(long = "convL", default_value_t = 1e-4)]
    pub conv_l: f64,
    #[arg(long = "convG", default_value_t = 1e-4)]
    pub conv_g: f64,
    #[arg(long)]
    pub maxiter: Option<usize>,
    /// `rep,maxiter`: short runs from random starts, the best continued.
    #[arg(long)]
    pub gridsearch: Option<String>,
    /// `default`, `from:<archive>` or `random:<archive>`.
    #[arg(long, default_value = "default")]
    pub init: String,
    /// 1-based indices of parameters kept at their initial values.
    #[arg(long, value_delimiter = ',')]
    pub posfix: Vec<usize>,
    /// Hessian used for the covariance of the estimates.
    #[arg(long, value_enum, default_value_t = HessianArg::Forward)]
    pub hessian: HessianArg,
}

#[derive(Debug, Args)]
pub struct SummaryArgs {
    #[arg(long)]
    pub archive: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct SummaryTableArgs {
    /// Archives to compare.
    #[arg(required = true)]
    pub archives: Vec<PathBuf>,
    /// Dataset used for the posterior class proportions.
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct PostfitArgs {
    #[arg(long, global = true)]
    pub archive: Option<PathBuf>,
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// CSV output (standard output when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Parameter draws for percentile bands (no bands when absent).
    #[arg(long, global = true)]
    pub draws: Option<usize>,

    #[command(subcommand)]
    pub command: PostfitCommand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Latent,
    Outcome,
}

#[derive(Debug, Subcommand)]
pub enum PostfitCommand {
    /// Posterior class-membership probabilities of the fitted subjects.
    Postprob,
    /// Class-specific trajectories for a covariate profile, or
    /// observation-level predictions and residuals without one.
    Predict {
        /// CSV of covariate rows (no subject column).
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ScaleArg::Latent)]
        scale: ScaleArg,
        /// Monte Carlo draws for outcome-scale predictions; Gauss-Hermite
        /// quadrature when absent.
        #[arg(long)]
        mc: Option<usize>,
    },
    /// Estimated link functions on a grid of marker values.
    Link {
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Cumulative incidence of each cause for a covariate profile.
    Cuminc {
        /// `name=value,...`
        #[arg(long, default_value = "")]
        covariates: String,
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
    },
    /// Probability of each event within a horizon given the history up to
    /// a landmark.
    Dynpred {
        /// Subjects to predict (long-format CSV with the subject column);
        /// the fitted dataset when absent.
        #[arg(long)]
        subjects: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        landmarks: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<f64>,
    },
    /// Share of the latent-process variance explained by the random
    /// effects, per class.
    Varexpl {
        /// `name=value,...`
        #[arg(long, default_value = "")]
        covariates: String,
    },
    /// Simulate from the estimates and refit; one row per parameter.
    SimulateCheck {
        #[arg(long)]
        design: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Simulate from the estimates of an archive instead of the design's
    /// `theta`; needs `--data` to rebuild the model.
    #[arg(long)]
    pub archive: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Exit status of a command: 0 success or convergence, 2 a fit that
/// stopped without convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Self::Ok => 0,
            Self::NotConverged => 2,
        }
    }
}

/// Runs a parsed command line on a pool of `cli.threads` workers.
pub fn run(cli: Cli) -> Result<Status> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> Result<Status> {
    match command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Summary(a) => cmd_summary(&a),
        Command::Summarytable(a) => cmd_summarytable(&a),
        Command::Postfit(a) => cmd_postfit(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn parse_gridsearch(s: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [r, m] => match (r.parse(), m.parse()) {
            (Ok(r), Ok(m)) => Ok((r, m)),
            _ => Err(CliError::Usage(format!("--gridsearch expects rep,maxiter, got `{s}`"))),
        },
        _ => Err(CliError::Usage(format!("--gridsearch expects rep,maxiter, got `{s}`"))),
    }
}

/// Fit options and the settings recorded in the archive.
pub fn fit_options(a: &FitArgs, spec: &SpecFile, data: &LongDataset) -> Result<(FitOptions, FitSettings)> {
    if a.posfix.contains(&0) {
        return Err(CliError::Usage("--posfix indices are 1-based".into()));
    }
    let model_spec = spec.to_model_spec()?;
    let mut options = FitOptions {
        maxiter: a.maxiter,
        eps_a: a.conv_b,
        eps_b: a.conv_l,
        eps_d: a.conv_g,
        posfix: a.posfix.iter().map(|i| i - 1).collect(),
        init: InitStrategy::Default,
        covariance: match a.hessian {
            HessianArg::Forward => CovarianceMethod::Forward,
            HessianArg::Central => CovarianceMethod::Central,
        },
    };
    let init_archive = |path: &str| -> Result<FittedModel> {
        FitArchive::read(Path::new(path))?.restore(data)
    };
    let mut init_desc = a.init.clone();
    options.init = if let Some(g) = &a.gridsearch {
        if a.init != "default" {
            return Err(CliError::Usage("--gridsearch and --init cannot be combined".into()));
        }
        let (rep, maxiter) = parse_gridsearch(g)?;
        init_desc = format!("grid search ({rep} runs of {maxiter} iterations, seed {})", a.seed);
        InitStrategy::GridSearch {
            rep,
            maxiter,
            lower: None,
            seed: a.seed,
        }
    } else if a.init == "default" {
        InitStrategy::Default
    } else if let Some(path) = a.init.strip_prefix("from:") {
        let lower = init_archive(path)?;
        if lower.model.spec.ng == model_spec.ng {
            InitStrategy::Values(lower.theta)
        } else {
            InitStrategy::FromLower(Box::new(lower))
        }
    } else if let Some(path) = a.init.strip_prefix("random:") {
        InitStrategy::Random {
            lower: Box::new(init_archive(path)?),
            seed: a.seed,
        }
    } else {
        return Err(CliError::Usage(format!(
            "--init expects default, from:<archive> or random:<archive>, got `{}`",
            a.init
        )));
    };
    let settings = FitSettings {
        conv_b: a.conv_b,
        conv_l: a.conv_l,
        conv_g: a.conv_g,
        maxiter: a.maxiter.unwrap_or_else(|| model_spec.family.default_maxiter()),
        posfix: a.posfix.clone(),
        init: init_desc,
        seed: a.seed,
        hessian: format!("{:?}", a.hessian).to_lowercase(),
    };
    Ok((options, settings))
}

/// Fits and archives; returns the archive and its report.
pub fn fit_to_archive(a: &FitArgs) -> Result<(FitArchive, String)> {
    let spec = SpecFile::read(&a.spec)?;
    let data = read_dataset_file(&a.data, &spec.subject)?;
    let (options, settings) = fit_options(a, &spec, &data)?;
    let fit = fit_model(&spec.to_model_spec()?, &data, &options)?;
    let archive = FitArchive::new(spec, settings, &fit, &data);
    // the report is printed from the archived values so that it can be
    // reproduced from the archive
    let reloaded = FitArchive::from_json(&archive.to_json()?)?;
    let text = report(&reloaded, &reloaded.restore(&data)?);
    Ok((archive, text))
}

fn cmd_fit(a: &FitArgs) -> Result<Status> {
    let (archive, text) = fit_to_archive(a)?;
    archive.write(&a.out)?;
    if let Some(p) = &a.report {
        emit(Some(p), &text)?;
    }
    emit(None, &text)?;
    Ok(if archive.converged { Status::Ok } else { Status::NotConverged })
}

fn load(archive: &Path, data: &Path) -> Result<(FitArchive, LongDataset)> {
    let a = FitArchive::read(archive)?;
    let d = read_dataset_file(data, &a.spec.subject)?;
    Ok((a, d))
}

fn cmd_summary(a: &SummaryArgs) -> Result<Status> {
    let (archive, data) = load(&a.archive, &a.data)?;
    let fit = archive.restore(&data)?;
    emit(None, &report(&archive, &fit))?;
    Ok(Status::Ok)
}

/// The comparison table of several archives.
pub fn summary_table(archives: &[FitArchive], data: &LongDataset) -> Result<Table> {
    let max_g = archives.iter().map(|a| a.spec.ng).max().unwrap_or(1);
    let mut header = vec!["G".to_string(), "loglik".into(), "npm".into(), "BIC".into()];
    header.extend((1..=max_g).map(|g| format!("%class{g}")));
    let mut t = Table { header, rows: Vec::new() };
    let here = Fingerprint::of(data);
    for a in archives {
        if a.data.mismatch(&here).is_some() {
            eprintln!("warning: an archive was fitted on a different dataset");
        }
        let mut row = vec![a.spec.ng.to_string(), fmt_float(a.loglik), a.n_params.to_string(), fmt_float(a.bic)];
        let props: Vec<f64> = match a.restore_unchecked(data).and_then(|f| Ok(posterior_probs(&f)?)) {
            Ok(post) => {
                let n = post.class.len() as f64;
                (0..a.spec.ng)
                    .map(|g| 100.0 * post.class.iter().filter(|&&c| c == g).count() as f64 / n)
                    .collect()
            }
            Err(_) => vec![f64::NAN; a.spec.ng],
        };
        for g in 0..max_g {
            row.push(props.get(g).map_or_else(String::new, |p| fmt_float(*p)));
        }
        t.rows.push(row);
    }
    Ok(t)
}

fn cmd_summarytable(a: &SummaryTableArgs) -> Result<Status> {
    let archives: Vec<FitArchive> = a.archives.iter().map(|p| FitArchive::read(p)).collect::<Result<_>>()?;
    let data = read_dataset_file(&a.data, &archives[0].spec.subject)?;
    emit(None, &summary_table(&archives, &data)?.to_string()?)?;
    Ok(Status::Ok)
}

/// Columns and one row from `name=value,...`.
pub fn parse_profile(s: &str) -> Result<(Vec<String>, Vec<f64>)> {
    let mut cols = Vec::new();
    let mut row = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected name=value, got `{part}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("`{}` is not a number", v.trim())))?;
        cols.push(k.trim().to_string());
        row.push(v);
    }
    Ok((cols, row))
}

fn band_cells(b: Option<Band>, with_bands: bool) -> Vec<String> {
    if !with_bands {
        return Vec::new();
    }
    match b {
        Some(b) => vec![fmt_float(b.median), fmt_float(b.lower), fmt_float(b.upper)],
        None => vec!["NA".into(); 3],
    }
}

fn with_band_header(mut h: Vec<&'static str>, with_bands: bool) -> Vec<&'static str> {
    if with_bands {
        h.extend(["median", "lower", "upper"]);
    }
    h
}

fn read_profile_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| CliError::Format(format!("{}: `{c}` is not a number", path.display()))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Runs a post-fit subcommand and returns its table.
pub fn postfit_table(a: &PostfitArgs) -> Result<Table> {
    let archive_path = a
        .archive
        .as_ref()
        .ok_or_else(|| CliError::Usage("--archive is required".into()))?;
    let data_path = a
        .data
        .as_ref()
        .ok_or_else(|| CliError::Usage("--data is required".into()))?;
    let (archive, data) = load(archive_path, data_path)?;
    let subject_level = matches!(
        a.command,
        PostfitCommand::Postprob | PostfitCommand::Predict { profile: None, .. } | PostfitCommand::Dynpred { subjects: None, .. }
    );
    let fit = if subject_level {
        archive.restore(&data)?
    } else {
        if let Some(m) = archive.data.mismatch(&Fingerprint::of(&data)) {
            eprintln!("warning: archive does not match the dataset ({m})");
        }
        archive.restore_unchecked(&data)?
    };
    let bands = a.draws.is_some();
    let markers = &fit.model.spec.outcomes;
    let ng = fit.model.spec.ng;
    match &a.command {
        PostfitCommand::Postprob => {
            let post = posterior_probs(&fit)?;
            let mut header = vec!["id".to_string(), "class".into()];
            header.extend((1..=ng).map(|g| format!("prob{g}")));
            if post.probs_y.is_some() {
                header.extend((1..=ng).map(|g| format!("probY{g}")));
            }
            let mut t = Table { header, rows: Vec::new() };
            for i in 0..post.ids.len() {
                let mut r = vec![post.ids[i].clone(), (post.class[i] + 1).to_string()];
                r.extend(post.probs[i].iter().map(|v| fmt_float(*v)));
                if let Some(py) = &post.probs_y {
                    r.extend(py[i].iter().map(|v| fmt_float(*v)));
                }
                t.rows.push(r);
            }
            Ok(t)
        }
        PostfitCommand::Predict { profile: None, scale, mc } => {
            if *scale == ScaleArg::Outcome {
                let integration = mc.map_or(Integration::GaussHermite, Integration::MonteCarlo);
                let rows = fit_outcome_scale(&fit, integration, a.seed)?;
                let mut header = vec!["id".to_string(), "marker".into(), "time".into(), "obs".into(), "pred".into()];
                header.extend((1..=ng).map(|g| format!("pred_class{g}")));
                let mut t = Table { header, rows: Vec::new() };
                for r in rows {
                    let mut row = vec![r.id, markers[r.marker].clone(), fmt_float(r.time), fmt_float(r.obs), fmt_float(r.pred)];
                    row.extend(r.pred_class.iter().map(|v| fmt_float(*v)));
                    t.rows.push(row);
                }
                return Ok(t);
            }
            let rows = predictions_residuals(&fit)?;
            let mut header: Vec<String> = ["id", "marker", "time", "obs", "pred_m", "resid_m", "pred_ss", "resid_ss"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            header.extend((1..=ng).map(|g| format!("pred_m{g}")));
            header.extend((1..=ng).map(|g| format!("pred_ss{g}")));
            let mut t = Table { header, rows: Vec::new() };
            for r in rows {
                let mut row = vec![
                    r.id,
                    markers[r.marker].clone(),
                    fmt_float(r.time),
                    fmt_float(r.obs),
                    fmt_float(r.pred_m),
                    fmt_float(r.resid_m),
                    fmt_float(r.pred_ss),
                    fmt_float(r.resid_ss),
                ];
                row.extend(r.pred_m_class.iter().map(|v| fmt_float(*v)));
                row.extend(r.pred_ss_class.iter().map(|v| fmt_float(*v)));
                t.rows.push(row);
            }
            Ok(t)
        }
        PostfitCommand::Predict {
            profile: Some(path),
            scale,
            mc,
        } => {
            let (cols, rows) = read_profile_csv(path)?;
            let scale = match scale {
                ScaleArg::Latent => Scale::Latent,
                ScaleArg::Outcome => Scale::Outcome,
            };
            let integration = mc.map_or(Integration::GaussHermite, Integration::MonteCarlo);
            let out = predict_trajectory(&fit, &cols, &rows, scale, integration, a.draws, a.seed)?;
            let mut t = Table::new(&with_band_header(vec!["row", "time", "marker", "class", "value"], bands));
            for r in out {
                let mut row = vec![
                    (r.row + 1).to_string(),
                    fmt_float(r.time),
                    markers[r.marker].clone(),
                    (r.class + 1).to_string(),
                    fmt_float(r.value),
                ];
                row.extend(band_cells(r.band, bands));
                t.push(row);
            }
            Ok(t)
        }
        PostfitCommand::Link { points } => {
            let out = predict_link(&fit, &LinkGrid::Count(*points), a.draws, a.seed)?;
            let mut t = Table::new(&with_band_header(vec!["marker", "y", "latent"], bands));
            for r in out {
                let mut row = vec![markers[r.marker].clone(), fmt_float(r.y), fmt_float(r.estimate)];
                row.extend(band_cells(r.band, bands));
                t.push(row);
            }
            Ok(t)
        }
        PostfitCommand::Cuminc { covariates, times } => {
            let (cols, row) = parse_profile(covariates)?;
            let out = cumulative_incidence(&fit, &cols, &row, times, a.draws, a.seed)?;
            let mut t = Table::new(&with_band_header(vec!["time", "cause", "class", "incidence"], bands));
            for r in out {
                let mut cells = vec![
                    fmt_float(r.time),
                    (r.cause + 1).to_string(),
                    r.class.map_or_else(|| "all".to_string(), |g| (g + 1).to_string()),
                    fmt_float(r.value),
                ];
                cells.extend(band_cells(r.band, bands));
                t.push(cells);
            }
            Ok(t)
        }
        PostfitCommand::Dynpred {
            subjects,
            landmarks,
            horizons,
        } => {
            let source = match subjects {
                Some(p) => read_dataset_file(p, &archive.spec.subject)?,
                None => data.clone(),
            };
            let subj: Vec<(String, Vec<Vec<f64>>)> =
                source.subjects().iter().map(|s| (s.id.clone(), s.rows.clone())).collect();
            let out = dynamic_prediction(&fit, source.columns(), &subj, landmarks, horizons, a.draws, a.seed)?;
            let mut t = Table::new(&with_band_header(vec!["id", "landmark", "horizon", "cause", "probability"], bands));
            for r in out {
                let mut cells = vec![
                    r.id,
                    fmt_float(r.landmark),
                    fmt_float(r.horizon),
                    (r.cause + 1).to_string(),
                    fmt_float(r.value),
                ];
                cells.extend(band_cells(r.band, bands));
                t.push(cells);
            }
            Ok(t)
        }
        PostfitCommand::Varexpl { covariates } => {
            let (cols, row) = parse_profile(covariates)?;
            let v = var_explained(&fit, &cols, &row)?;
            let mut t = Table::new(&["class", "marker", "percent"]);
            for (g, per_marker) in v.iter().enumerate() {
                for (k, p) in per_marker.iter().enumerate() {
                    t.push(vec![(g + 1).to_string(), markers[k].clone(), fmt_float(*p)]);
                }
            }
            Ok(t)
        }
        PostfitCommand::SimulateCheck { design } => {
            let design = DesignFile::read(design)?;
            let sim = design.design(fit.model.with_subjects(Vec::new()), fit.theta.clone(), a.seed)?;
            let simulated = simulate(&sim)?;
            let options = FitOptions {
                maxiter: Some(archive.settings.maxiter),
                eps_a: archive.settings.conv_b,
                eps_b: archive.settings.conv_l,
                eps_d: archive.settings.conv_g,
                posfix: archive.settings.posfix.iter().map(|i| i - 1).collect(),
                init: InitStrategy::Values(fit.theta.clone()),
                covariance: CovarianceMethod::Forward,
            };
            let refit = fit_model(&fit.model.spec, &simulated, &options)?;
            let se = refit.standard_errors();
            let mut t = Table::new(&["parameter", "truth", "estimate", "se", "z"]);
            for (i, info) in refit.model.layout.params().iter().enumerate() {
                let s = se.as_ref().map_or(f64::NAN, |v| v[i]);
                let z = if s > 0.0 { (refit.theta[i] - fit.theta[i]) / s } else { f64::NAN };
                t.push(vec![
                    info.label.clone(),
                    fmt_float(fit.theta[i]),
                    fmt_float(refit.theta[i]),
                    fmt_float(s),
                    fmt_float(z),
                ]);
            }
            if !refit.converged {
                eprintln!("warning: the refit on simulated data did not converge");
            }
            Ok(t)
        }
    }
}

fn cmd_postfit(a: &PostfitArgs) -> Result<Status> {
    let t = postfit_table(a)?;
    emit(a.out.as_deref(), &t.to_string()?)?;
    Ok(Status::Ok)
}

/// Simulates the dataset described by the arguments.
pub fn simulated_dataset(a: &SimulateArgs) -> Result<(LongDataset, String)> {
    let design = DesignFile::read(&a.design)?;
    let (model, theta, subject) = match (&a.archive, &a.spec) {
        (Some(arch), None) => {
            let data_path = a
                .data
                .as_ref()
                .ok_or_else(|| CliError::Usage("--archive needs --data".into()))?;
            let (archive, data) = load(arch, data_path)?;
            let fit = archive.restore(&data)?;
            (fit.model.with_subjects(Vec::new()), fit.theta, archive.spec.subject.clone())
        }
        (None, Some(spec_path)) => {
            let spec = SpecFile::read(spec_path)?;
            let theta = design
                .theta
                .clone()
                .ok_or_else(|| CliError::Format("the design needs `theta` when simulating from a spec".into()))?;
            let model = design.declared_model(&spec.to_model_spec()?)?;
            (model, theta, spec.subject.clone())
        }
        _ => return Err(CliError::Usage("give exactly one of --spec and --archive".into())),
    };
    let sim = design.design(model, theta, a.seed)?;
    Ok((simulate(&sim)?, subject))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Status> {
    let (data, subject) = simulated_dataset(a)?;
    emit(a.out.as_deref(), &dataset_table(&data, &subject).to_string()?)?;
    Ok(Status::Ok)
}
