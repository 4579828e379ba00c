use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
cohort.n_train = 30
cohort.n_val = 10
cohort.n_test = 10
encoder.channels = 2, 2
encoder.epochs = 2
grid.learning_rate = 0.1
grid.n_trees = 10, 20
grid.max_depth = 2
grid.lambda = 0
grid.alpha = 0
";

fn voxboost(workdir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voxboost"))
        .arg("--workdir")
        .arg(workdir)
        .args(args)
        .env_remove("VOXBOOST_WORKDIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn help_lists_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = voxboost(dir.path(), &["--help"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for cmd in [
        "synth",
        "train-encoder",
        "extract",
        "gridsearch",
        "train-gbm",
        "predict",
        "score",
        "ablation",
        "pipeline",
        "print-config",
    ] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn printed_config_is_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = voxboost(dir.path(), &["print-config"]);
    assert!(out.status.success());
    let cfg = dir.path().join("printed.ini");
    std::fs::write(&cfg, stdout(&out)).unwrap();
    let again = voxboost(dir.path(), &["-c", cfg.to_str().unwrap(), "print-config"]);
    assert!(again.status.success(), "{}", stderr(&again));
    assert_eq!(stdout(&again), stdout(&out));
    assert!(stdout(&out).contains("global.seed = 17"));
}

#[test]
fn bad_config_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.ini");
    std::fs::write(&cfg, "cohort.n_train = many\nencoder.colour = red\ngbm.lambda = 1\ngbm.lambda = 2\n").unwrap();
    let out = voxboost(dir.path(), &["-c", cfg.to_str().unwrap(), "synth"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    for key in ["cohort.n_train", "encoder.colour", "gbm.lambda"] {
        assert!(err.contains(key), "{key} not reported in {err}");
    }
}

#[test]
fn score_prints_exact_mse() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.csv");
    let truth = dir.path().join("truth.csv");
    let far = dir.path().join("far.csv");
    std::fs::write(&pred, "subject_id,prediction\na,0\nb,0\n").unwrap();
    std::fs::write(&truth, "subject_id,residual_score\na,1\nb,3\n").unwrap();
    std::fs::write(&far, "subject_id,prediction\na,4\nb,0\n").unwrap();
    let run = |p: &Path, t: &Path| stdout(&voxboost(dir.path(), &["score", p.to_str().unwrap(), t.to_str().unwrap()]));
    assert_eq!(run(&truth, &truth).trim(), "MSE 0");
    assert_eq!(run(&pred, &truth).trim(), "MSE 5");
    assert_eq!(run(&far, &truth).trim(), "MSE 9");

    let missing = voxboost(dir.path(), &["score", "nope.csv", truth.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
    std::fs::write(&far, "subject_id,prediction\na,4\nc,0\n").unwrap();
    let mismatched = voxboost(dir.path(), &["score", far.to_str().unwrap(), truth.to_str().unwrap()]);
    assert_eq!(mismatched.status.code(), Some(1));
}

#[test]
fn stages_report_their_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    for (args, stage) in [(&["predict", "--fold", "test"][..], "train-gbm"), (&["train-encoder"][..], "synth")] {
        let out = voxboost(dir.path(), args);
        assert_eq!(out.status.code(), Some(2));
        assert!(stderr(&out).contains(&format!("voxboost {stage}")), "{}", stderr(&out));
    }
}

#[test]
fn default_synth_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = voxboost(d.path(), &["synth"]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let manifest = |d: &tempfile::TempDir| d.path().join("cohort/manifest.csv");
    assert_eq!(lines(&manifest(&a)), 341);
    assert_eq!(lines(&a.path().join("sealed/answers_test.csv")), 101);
    assert_eq!(std::fs::read(manifest(&a)).unwrap(), std::fs::read(manifest(&b)).unwrap());
    let vol = "cohort/volumes/sub0001.vvol";
    assert_eq!(std::fs::read(a.path().join(vol)).unwrap(), std::fs::read(b.path().join(vol)).unwrap());
}

#[test]
fn small_pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.ini");
    std::fs::write(&cfg, SMALL).unwrap();
    let c = cfg.to_str().unwrap();
    let out = voxboost(dir.path(), &["-c", c, "--workers", "2", "pipeline", "--compare-scales"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = std::fs::read_to_string(dir.path().join("reports/report.txt")).unwrap();
    for method in ["Derived+GBM", "CNN+GBM", "CNN(3^3)+GBM"] {
        assert!(report.contains(method), "{method} missing from report");
    }

    let manifest = std::fs::read_to_string(dir.path().join("cohort/manifest.csv")).unwrap();
    for fold in ["train", "validation", "test"] {
        let expected = manifest.lines().filter(|l| l.split(',').nth(1) == Some(fold)).count();
        let out = voxboost(dir.path(), &["-c", c, "predict", "--fold", fold]);
        assert!(out.status.success(), "{}", stderr(&out));
        let path = dir.path().join(format!("predictions/scale6/predictions_{fold}.csv"));
        assert_eq!(lines(&path), expected + 1, "{fold}");
    }

    let answers = dir.path().join("sealed/answers_test.csv");
    let preds = dir.path().join("predictions/scale6/predictions_test.csv");
    let scored = voxboost(dir.path(), &["score", preds.to_str().unwrap(), answers.to_str().unwrap()]);
    let mse: f64 = stdout(&scored).trim().strip_prefix("MSE ").unwrap().parse().unwrap();
    assert!(report.contains(&format!("{mse:.4}")));

    let refit = voxboost(dir.path(), &["-c", c, "train-gbm", "--from-config"]);
    assert!(refit.status.success(), "{}", stderr(&refit));
}
