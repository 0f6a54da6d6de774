//! End-to-end tests of the `spacetx` binary: generate a benchmark, run a
//! small experiment, verify determinism, reports, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn spacetx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spacetx"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn genbench(path: &Path, n_tasks: usize, n_grid: usize, seed: u64) {
    let out = spacetx(&[
        "genbench",
        "--family",
        "shifted-quadratic",
        "--n-tasks",
        &n_tasks.to_string(),
        "--shift-scale",
        "0.05",
        "--n-grid",
        &n_grid.to_string(),
        "--noise",
        "0.01",
        "--seed",
        &seed.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn run_small(bench: &Path, out_dir: &Path, methods: &str) -> Output {
    spacetx(&[
        "run",
        "--benchmark",
        bench.to_str().unwrap(),
        "--methods",
        methods,
        "--trial-num",
        "8",
        "--rep",
        "2",
        "--seed",
        "7",
        "--n-source-obs",
        "20",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ])
}

#[test]
fn genbench_output_is_loadable_and_reports_similarity() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.json");
    let out = spacetx(&[
        "genbench",
        "--family",
        "shifted-quadratic",
        "--n-tasks",
        "3",
        "--shift-scale",
        "0",
        "--n-grid",
        "120",
        "--seed",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("task0 ~ task1"), "{stdout}");
    // clone family: all pairwise similarity ~ 1
    for line in stdout.lines().filter(|l| l.contains('~')) {
        let s: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
        assert!(s > 0.99, "{line}");
    }
    let bench = spacetx::benchmark::load_tabular_benchmark(&path).unwrap();
    assert_eq!(bench.tasks.len(), 3);
}

#[test]
fn genbench_rejects_single_task() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.json");
    let out = spacetx(&[
        "genbench",
        "--family",
        "shifted-branin",
        "--n-tasks",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_files_and_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bench.json");
    genbench(&bench, 3, 120, 3);

    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    let output = run_small(&bench, &out1, "rs,box-gp");
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let output = run_small(&bench, &out2, "rs,box-gp");
    assert!(output.status.success());

    for file in ["rs.csv", "box-gp.csv", "aggregate.csv", "manifest.json"] {
        let a = std::fs::read(out1.join(file)).unwrap();
        let b = std::fs::read(out2.join(file)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{file} differs between identical runs");
    }

    // method CSV shape: header + tasks * reps * trials rows
    let csv = std::fs::read_to_string(out1.join("rs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2 * 8);
    assert_eq!(csv.lines().next().unwrap(), "task,rep,trial,incumbent,nce,space_size");
}

#[test]
fn run_rejects_unknown_designer_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bench.json");
    genbench(&bench, 2, 100, 5);
    let out = run_small(&bench, &dir.path().join("out"), "foo-gp");
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("foo"), "{stderr}");
    assert!(stderr.contains("ellipsoid"), "stderr should list designers: {stderr}");
}

#[test]
fn run_rejects_missing_benchmark_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_small(&dir.path().join("nope.json"), &dir.path().join("out"), "rs");
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn report_table_and_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bench.json");
    genbench(&bench, 3, 120, 11);
    let out_dir = dir.path().join("out");
    assert!(run_small(&bench, &out_dir, "rs,box-gp").status.success());

    let out = spacetx(&["report", "--result-dir", out_dir.to_str().unwrap(), "--format", "table"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("method,final_mean_nce"));
    assert!(stdout.contains("rs,") && stdout.contains("box-gp,"), "{stdout}");
    // sorted ascending by final NCE
    let finals: Vec<f64> = stdout
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(finals.len(), 2);
    assert!(finals[0] <= finals[1]);

    let out = spacetx(&["report", "--result-dir", out_dir.to_str().unwrap(), "--format", "plotdata"]);
    assert!(out.status.success());
    for method in ["rs", "box-gp"] {
        let text = std::fs::read_to_string(out_dir.join(format!("plotdata_{method}.csv"))).unwrap();
        assert_eq!(text.lines().count(), 1 + 8, "{method}");
        assert_eq!(text.lines().next().unwrap(), "trial,mean_nce,std_nce");
    }
}

#[test]
fn report_on_empty_dir_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = spacetx(&["report", "--result-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn report_lists_missing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bench.json");
    genbench(&bench, 2, 100, 13);
    let out_dir = dir.path().join("out");
    assert!(run_small(&bench, &out_dir, "rs").status.success());
    // drop half of the rows of the only method file
    let csv = std::fs::read_to_string(out_dir.join("rs.csv")).unwrap();
    let truncated: Vec<&str> = csv.lines().take(1 + 8).collect();
    std::fs::write(out_dir.join("rs.csv"), truncated.join("\n") + "\n").unwrap();
    let out = spacetx(&["report", "--result-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("missing"), "{stderr}");
}

#[test]
fn manifest_replays_to_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bench.json");
    genbench(&bench, 2, 100, 17);
    let out1 = dir.path().join("out1");
    assert!(run_small(&bench, &out1, "rs,gp").status.success());

    let manifest: spacetx::cli::Manifest =
        serde_json::from_str(&std::fs::read_to_string(out1.join("manifest.json")).unwrap()).unwrap();
    let out2 = dir.path().join("out2");
    let args = manifest.to_run_args(out2.clone());
    spacetx::cli::cmd_run(&args).unwrap();

    for file in ["rs.csv", "gp.csv", "aggregate.csv"] {
        let a = std::fs::read(out1.join(file)).unwrap();
        let b = std::fs::read(out2.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs after manifest replay");
    }
}
