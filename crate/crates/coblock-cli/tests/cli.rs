//! End-to-end checks of the installed binary: pipelines, exit codes, and
//! the determinism contract between engines.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coblock"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should launch")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path_str(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

#[test]
fn simulate_fit_evaluate_recovers_planted_labels() {
    let dir = TempDir::new().unwrap();
    let mat = path_str(&dir, "mat.txt");
    let truth = path_str(&dir, "truth.txt");
    let report = path_str(&dir, "report.txt");
    let trace = path_str(&dir, "trace.csv");
    let heat = path_str(&dir, "heat.ppm");

    let sim = run(&[
        "simulate", "--n", "60", "--m", "45", "--k", "3", "--q", "0.02", "--seed", "11",
        "--output", &mat, "--truth-output", &truth,
    ]);
    assert_success(&sim);

    let fit = run(&[
        "fit", "--input", &mat, "--model", "bernoulli", "--kmax", "8", "--gmax", "8",
        "--restarts", "3", "--seed", "1", "--output", &report, "--trace", &trace,
        "--heatmap", &heat,
    ]);
    assert_success(&fit);
    let summary = String::from_utf8_lossy(&fit.stdout);
    assert!(summary.starts_with("icl "), "summary line: {summary}");

    let eval = run(&["evaluate", "--pred", &report, "--truth", &truth]);
    assert_success(&eval);
    assert_eq!(String::from_utf8_lossy(&eval.stdout).trim(), "2.000000");

    let trace_text = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace_text.starts_with("sweep,icl,moves,k,g\n"));

    let ppm = std::fs::read(dir.path().join("heat.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n45 60\n255\n"));
    assert_eq!(ppm.len(), b"P6\n45 60\n255\n".len() + 45 * 60 * 3);
}

#[test]
fn report_is_identical_across_engines_except_wall_time() {
    let dir = TempDir::new().unwrap();
    let mat = path_str(&dir, "mat.txt");
    assert_success(&run(&[
        "simulate", "--n", "40", "--m", "30", "--k", "2", "--q", "0.1", "--seed", "5",
        "--output", &mat,
    ]));
    let mut reports = Vec::new();
    for engine in ["dense", "sparse"] {
        let out_path = path_str(&dir, &format!("r-{engine}.txt"));
        assert_success(&run(&[
            "fit", "--input", &mat, "--model", "bernoulli", "--engine", engine,
            "--seed", "3", "--output", &out_path,
        ]));
        let text = std::fs::read_to_string(&out_path).unwrap();
        let stripped: String = text
            .lines()
            .filter(|l| !l.starts_with("wall_time_ms "))
            .map(|l| format!("{l}\n"))
            .collect();
        assert_ne!(text, stripped, "report should carry a wall_time_ms line");
        reports.push(stripped);
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn domain_violation_reports_file_and_line() {
    let dir = TempDir::new().unwrap();
    let mat = path_str(&dir, "bad.txt");
    std::fs::write(&mat, "0 1 0\n1 2 1\n").unwrap();
    let out = run(&[
        "fit", "--input", &mat, "--model", "bernoulli",
        "--output", &path_str(&dir, "r.txt"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.txt:2:"), "stderr: {stderr}");
    assert!(stderr.contains("(2,2)"), "stderr: {stderr}");
}

#[test]
fn missing_input_exits_with_input_error() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "fit", "--input", &path_str(&dir, "absent.txt"), "--model", "bernoulli",
        "--output", &path_str(&dir, "r.txt"),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn flag_misuse_exits_with_usage_error() {
    let dir = TempDir::new().unwrap();
    let mat = path_str(&dir, "mat.txt");
    std::fs::write(&mat, "0 1\n1 0\n").unwrap();
    let report = path_str(&dir, "r.txt");

    let cases: Vec<Vec<&str>> = vec![
        // categories on a non-categorical model
        vec!["fit", "--input", &mat, "--model", "bernoulli", "--categories", "3",
             "--output", &report],
        // categorical without categories
        vec!["fit", "--input", &mat, "--model", "categorical", "--output", &report],
        // unknown flag
        vec!["fit", "--input", &mat, "--model", "bernoulli", "--frobnicate",
             "--output", &report],
        // invalid prior
        vec!["fit", "--input", &mat, "--model", "bernoulli", "--eta", "-1",
             "--output", &report],
        // q and theta-file together
        vec!["simulate", "--n", "4", "--m", "4", "--k", "2", "--q", "0.1",
             "--theta-file", &mat, "--output", &report],
        // neither q nor theta-file
        vec!["simulate", "--n", "4", "--m", "4", "--output", &report],
        // malformed study grid
        vec!["study", "--q-grid", "0.5:0.1:0.2", "--out-csv", &report],
    ];
    for args in &cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "args {args:?} should be usage errors");
    }
}

#[test]
fn theta_grid_simulation_controls_block_shape() {
    let dir = TempDir::new().unwrap();
    let theta = path_str(&dir, "theta.txt");
    std::fs::write(&theta, "0.95 0.05\n0.05 0.95\n0.05 0.05\n").unwrap();
    let mat = path_str(&dir, "mat.txt");
    let truth = path_str(&dir, "truth.txt");
    assert_success(&run(&[
        "simulate", "--n", "90", "--m", "40", "--theta-file", &theta, "--seed", "4",
        "--output", &mat, "--truth-output", &truth,
    ]));
    let truth_text = std::fs::read_to_string(dir.path().join("truth.txt")).unwrap();
    let rows: Vec<&str> = truth_text.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(rows.len(), 90);
    assert!(rows.iter().any(|&l| l == "3"), "three row groups should appear");

    let report = path_str(&dir, "r.txt");
    assert_success(&run(&[
        "fit", "--input", &mat, "--model", "bernoulli", "--restarts", "3",
        "--output", &report,
    ]));
    let eval = run(&["evaluate", "--pred", &report, "--truth", &truth]);
    assert_success(&eval);
    let score: f64 = String::from_utf8_lossy(&eval.stdout).trim().parse().unwrap();
    assert!(score > 1.8, "near-noiseless planted grid should be recovered, got {score}");
}

#[test]
fn evaluate_rejects_mismatched_lengths() {
    let dir = TempDir::new().unwrap();
    let mat = path_str(&dir, "mat.txt");
    let truth = path_str(&dir, "truth.txt");
    let report = path_str(&dir, "r.txt");
    assert_success(&run(&[
        "simulate", "--n", "20", "--m", "10", "--k", "2", "--q", "0.05", "--seed", "1",
        "--output", &mat, "--truth-output", &truth,
    ]));
    assert_success(&run(&[
        "fit", "--input", &mat, "--model", "bernoulli", "--output", &report,
    ]));
    std::fs::write(dir.path().join("truth.txt"), "1 2 1\n1 2\n").unwrap();
    let out = run(&["evaluate", "--pred", &report, "--truth", &truth]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("mismatch"), "stderr: {stderr}");
}

#[test]
fn study_writes_grid_csv_and_plot() {
    let dir = TempDir::new().unwrap();
    let csv = path_str(&dir, "study.csv");
    let plot = path_str(&dir, "study.svg");
    let out = run(&[
        "study", "--q-grid", "0.05:0.35:0.4", "--reps", "2", "--restarts", "1",
        "--n", "30", "--m", "30", "--k", "2", "--seed", "8",
        "--out-csv", &csv, "--out-plot", &plot,
    ]);
    assert_success(&out);
    let text = std::fs::read_to_string(dir.path().join("study.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "q,rep,nmi,icl,k,g,seconds");
    assert_eq!(lines.len(), 1 + 2 * 2, "two q values x two reps");
    assert!(lines[1].starts_with("0.05,0,"));
    assert!(lines[3].starts_with("0.4,0,"));
    let svg = std::fs::read_to_string(dir.path().join("study.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 2);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("q 0.05 mean_nmi"), "stdout: {stdout}");
}

#[test]
fn sparse_format_round_trip_matches_dense_fit() {
    let dir = TempDir::new().unwrap();
    let dense_path = path_str(&dir, "dense.txt");
    std::fs::write(
        &dense_path,
        "1 1 0 0\n1 1 0 0\n0 0 1 1\n0 0 1 1\n1 1 0 0\n0 0 1 1\n",
    )
    .unwrap();
    let sparse_path = dir.path().join("sparse.txt");
    let mut body = String::new();
    let mut nnz = 0;
    let dense_text = std::fs::read_to_string(&dense_path).unwrap();
    for (i, line) in dense_text.lines().enumerate() {
        for (j, tok) in line.split_whitespace().enumerate() {
            if tok == "1" {
                body.push_str(&format!("{} {} 1\n", i + 1, j + 1));
                nnz += 1;
            }
        }
    }
    std::fs::write(&sparse_path, format!("6 4 {nnz}\n{body}")).unwrap();

    let rd = path_str(&dir, "rd.txt");
    let rs = path_str(&dir, "rs.txt");
    assert_success(&run(&[
        "fit", "--input", &dense_path, "--model", "bernoulli", "--seed", "2",
        "--output", &rd,
    ]));
    assert_success(&run(&[
        "fit", "--input", sparse_path.to_str().unwrap(), "--format", "sparse",
        "--model", "bernoulli", "--seed", "2", "--output", &rs,
    ]));
    let strip = |p: &str| -> String {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("wall_time_ms "))
            .map(|l| format!("{l}\n"))
            .collect()
    };
    assert_eq!(strip(&rd), strip(&rs));
}
