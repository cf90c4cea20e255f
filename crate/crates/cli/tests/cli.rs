use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mixlong_cli::archive::FitArchive;
use mixlong_cli::dataio::read_dataset_file;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn scratch(test: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(test);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn mixlong(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixlong")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = mixlong(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

/// Simulated toy dataset and its one-class fit.
fn toy_fit(dir: &Path) -> (String, String) {
    let data = dir.join("toy.csv");
    let archive = dir.join("toy.json");
    let (d, a) = (data.to_str().unwrap().to_string(), archive.to_str().unwrap().to_string());
    ok(&[
        "simulate",
        "--spec",
        fixture("toy_hlme.toml").to_str().unwrap(),
        "--design",
        fixture("toy_hlme_design.toml").to_str().unwrap(),
        "--seed",
        "4",
        "--out",
        &d,
    ]);
    ok(&["fit", "--spec", fixture("toy_hlme.toml").to_str().unwrap(), "--data", &d, "--out", &a]);
    (d, a)
}

#[test]
fn fit_report_round_trips_through_the_archive() {
    let dir = scratch("round_trip");
    let data = dir.join("toy.csv");
    let d = data.to_str().unwrap();
    ok(&[
        "simulate",
        "--spec",
        fixture("toy_hlme.toml").to_str().unwrap(),
        "--design",
        fixture("toy_hlme_design.toml").to_str().unwrap(),
        "--seed",
        "4",
        "--out",
        d,
    ]);
    let a = dir.join("toy.json");
    let printed = ok(&["fit", "--spec", fixture("toy_hlme.toml").to_str().unwrap(), "--data", d, "--out", a.to_str().unwrap()]);
    assert!(printed.contains("convB = 1e-4"), "{printed}");
    let again = ok(&["summary", "--archive", a.to_str().unwrap(), "--data", d]);
    assert_eq!(printed, again);
}

#[test]
fn refit_from_the_estimates_stops_at_once() {
    let dir = scratch("refit");
    let (d, a) = toy_fit(&dir);
    let b = dir.join("refit.json");
    ok(&[
        "fit",
        "--spec",
        fixture("toy_hlme.toml").to_str().unwrap(),
        "--data",
        &d,
        "--out",
        b.to_str().unwrap(),
        "--init",
        &format!("from:{a}"),
    ]);
    let refit = FitArchive::read(&b).unwrap();
    assert!(refit.converged);
    assert!(refit.iterations <= 2, "{} iterations", refit.iterations);
}

#[test]
fn shuffled_rows_give_the_same_fit() {
    let dir = scratch("shuffle");
    let (d, a) = toy_fit(&dir);
    let text = std::fs::read_to_string(&d).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let header = lines.remove(0);
    lines.reverse();
    // move every third line to the end as well
    let (keep, moved): (Vec<(usize, &str)>, Vec<(usize, &str)>) = lines.into_iter().enumerate().partition(|(i, _)| i % 3 != 0);
    let mut shuffled = vec![header.to_string()];
    shuffled.extend(keep.into_iter().chain(moved).map(|(_, l)| l.to_string()));
    let s = dir.join("shuffled.csv");
    std::fs::write(&s, shuffled.join("\n") + "\n").unwrap();
    let b = dir.join("shuffled.json");
    ok(&["fit", "--spec", fixture("toy_hlme.toml").to_str().unwrap(), "--data", s.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    let (x, y) = (FitArchive::read(Path::new(&a)).unwrap(), FitArchive::read(&b).unwrap());
    assert_eq!(x.theta(), y.theta());
    assert_eq!(x.data, y.data);
}

#[test]
fn exit_status_and_fixed_parameters() {
    let dir = scratch("status");
    let (d, _) = toy_fit(&dir);
    let spec = fixture("toy_hlme.toml");
    let out = mixlong(&[
        "fit",
        "--spec",
        spec.to_str().unwrap(),
        "--data",
        &d,
        "--out",
        dir.join("short.json").to_str().unwrap(),
        "--maxiter",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.join("short.json").exists());

    let out = mixlong(&["fit", "--spec", spec.to_str().unwrap(), "--data", "missing.csv", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(1));

    let report = ok(&[
        "fit",
        "--spec",
        spec.to_str().unwrap(),
        "--data",
        &d,
        "--out",
        dir.join("fixed.json").to_str().unwrap(),
        "--posfix",
        "3",
        "--init",
        "default",
    ]);
    let line = report.lines().find(|l| l.trim_start().starts_with("3 ")).unwrap();
    assert!(line.contains("fixed"), "{line}");
}

#[test]
fn postfit_tables() {
    let dir = scratch("postfit");
    let (d, a) = toy_fit(&dir);
    let n_subjects = read_dataset_file(Path::new(&d), "id").unwrap().n_subjects();
    let post = ok(&["postfit", "--archive", &a, "--data", &d, "postprob"]);
    assert_eq!(csv_rows(&post).len(), n_subjects);

    let profile = dir.join("profile.csv");
    let mut text = String::from("t,x\n");
    for i in 0..100 {
        text.push_str(&format!("{},1\n", i as f64 * 0.03));
    }
    std::fs::write(&profile, text).unwrap();
    let pred = ok(&["postfit", "--archive", &a, "--data", &d, "predict", "--profile", profile.to_str().unwrap()]);
    assert_eq!(csv_rows(&pred).len(), 100);

    let with_bands = ok(&[
        "postfit", "--archive", &a, "--data", &d, "--draws", "50", "--seed", "3", "predict", "--profile",
        profile.to_str().unwrap(),
    ]);
    let rows = csv_rows(&with_bands);
    assert_eq!(rows[0].len(), 8);

    let resid = ok(&["postfit", "--archive", &a, "--data", &d, "predict"]);
    let rows = csv_rows(&resid);
    let n_obs = read_dataset_file(Path::new(&d), "id").unwrap().n_rows();
    assert_eq!(rows.len(), n_obs);

    let table = ok(&["summarytable", &a, &a, "--data", &d]);
    let rows = csv_rows(&table);
    assert_eq!(rows[0], rows[1]);
    assert_eq!(rows[0][4].parse::<f64>().unwrap(), 100.0);
    let archive = FitArchive::read(Path::new(&a)).unwrap();
    let bic = -2.0 * archive.loglik + archive.n_params as f64 * (n_subjects as f64).ln();
    assert!((rows[0][3].parse::<f64>().unwrap() - bic).abs() < 1e-9 * bic.abs());

    let varexpl = ok(&["postfit", "--archive", &a, "--data", &d, "varexpl", "--covariates", "t=1,x=0"]);
    let rows = csv_rows(&varexpl);
    let theta = archive.theta();
    let (b, s) = (theta[3] * theta[3], theta[4] * theta[4]);
    assert!((rows[0][2].parse::<f64>().unwrap() - 100.0 * b / (b + s)).abs() < 1e-10);
}

#[test]
fn postfit_outputs_are_reproducible() {
    let dir = scratch("reproducible");
    let (d, a) = toy_fit(&dir);
    let profile = dir.join("profile.csv");
    std::fs::write(&profile, "t,x\n0,0\n1,1\n2.5,0\n").unwrap();
    let p = profile.to_str().unwrap();
    let run = |threads: &str| {
        ok(&[
            "--threads", threads, "postfit", "--archive", &a, "--data", &d, "--draws", "40", "--seed", "11", "predict",
            "--profile", p, "--scale", "outcome", "--mc", "200",
        ])
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn subject_level_outputs_need_the_fitted_data() {
    let dir = scratch("fingerprint");
    let (d, a) = toy_fit(&dir);
    let text = std::fs::read_to_string(&d).unwrap();
    let other = dir.join("other.csv");
    let lines: Vec<&str> = text.lines().collect();
    std::fs::write(&other, lines[..lines.len() - 4].join("\n") + "\n").unwrap();
    let out = mixlong(&["postfit", "--archive", &a, "--data", other.to_str().unwrap(), "postprob"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not match"));
}

#[test]
fn one_class_dynamic_prediction_is_conditional_survival() {
    let dir = scratch("dynpred");
    let d = dir.join("joint.csv");
    let a = dir.join("joint.json");
    let (d, a) = (d.to_str().unwrap(), a.to_str().unwrap());
    ok(&[
        "simulate",
        "--spec",
        fixture("toy_joint.toml").to_str().unwrap(),
        "--design",
        fixture("toy_joint_design.toml").to_str().unwrap(),
        "--seed",
        "2",
        "--out",
        d,
    ]);
    let fit = mixlong(&["fit", "--spec", fixture("toy_joint.toml").to_str().unwrap(), "--data", d, "--out", a]);
    assert!(fit.status.code() == Some(0) || fit.status.code() == Some(2));
    let out = ok(&["postfit", "--archive", a, "--data", d, "dynpred", "--landmarks", "1,2.5", "--horizons", "0.5,3"]);
    let archive = FitArchive::read(Path::new(a)).unwrap();
    let theta = archive.theta();
    let (rate, shape, beta) = (theta[0] * theta[0], theta[1] * theta[1], theta[2]);
    let data = read_dataset_file(Path::new(d), "id").unwrap();
    let xcol = data.column_index("x").unwrap();
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4 * data.n_subjects());
    for r in rows {
        let subject = data.subjects().iter().find(|s| s.id == r[0]).unwrap();
        let x = subject.rows[0][xcol];
        let (s, t): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        let cum = |u: f64| (rate * u).powf(shape) * (beta * x).exp();
        let want = 1.0 - (cum(s) - cum(s + t)).exp();
        let got: f64 = r[4].parse().unwrap();
        assert!((got - want).abs() < 1e-10, "{r:?}: {want}");
    }
}
