use std::process::Command;

fn hcbo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hcbo"))
}

#[test]
fn failrate_reports_estimate() {
    let out = hcbo().args(["failrate", "--problem", "alimo", "--n", "20000"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("Alimo: fail rate 0.5"), "{text}");
}

#[test]
fn run_then_summarize_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("runs");
    let status = hcbo()
        .args(["run", "--problem", "branin", "--strategy", "rejection", "--n-infill", "2", "--reps", "2", "--n-doe", "6"])
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());

    let summary = dir.path().join("summary.csv");
    assert!(hcbo().arg("summarize").arg("--in").arg(&out_dir).arg("--out").arg(&summary).status().unwrap().success());
    let table = std::fs::read_to_string(&summary).unwrap();
    assert!(table.starts_with("problem,strategy,n_reps,median_regret"));
    assert!(table.contains("Branin,rejection,2,"));

    let curves = dir.path().join("curves.csv");
    assert!(hcbo().arg("plotdata").arg("--in").arg(&out_dir).arg("--out").arg(&curves).status().unwrap().success());
    assert!(std::fs::read_to_string(&curves).unwrap().lines().count() > 1);
}

#[test]
fn rejects_unknown_problem() {
    let out = hcbo().args(["failrate", "--problem", "nonexistent"]).output().unwrap();
    assert!(!out.status.success());
}
