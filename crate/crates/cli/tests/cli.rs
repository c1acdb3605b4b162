//! Command-level tests: exit codes, diagnostics, and output artifacts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sigbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigbench"))
        .args(args)
        .output()
        .expect("spawn sigbench")
}

fn write_fixture(dir: &Path) -> (String, String, String) {
    let sig_a = "COUNT 3\nMETA subject=s1 input=stylus scenario=office auth=genuine\n\
                 0 0 0 5 0\n1 1 10 6 0\n2 0 20 5 0\n";
    let sig_b = "COUNT 3\nMETA subject=s1 input=stylus scenario=office auth=genuine\n\
                 0 0 0 5 0\n1 1.5 10 6 0\n2 0.5 20 5 0\n";
    let sig_c = "COUNT 3\nMETA subject=s2 input=stylus scenario=office auth=genuine\n\
                 9 4 0 5 0\n5 0 10 6 0\n1 8 20 5 0\n";
    fs::write(dir.join("a.sig"), sig_a).unwrap();
    fs::write(dir.join("b.sig"), sig_b).unwrap();
    fs::write(dir.join("c.sig"), sig_c).unwrap();
    let comparisons = "c1,a.sig,b.sig\nc2,a.sig,c.sig\n";
    fs::write(dir.join("comparisons.txt"), comparisons).unwrap();
    fs::write(dir.join("labels.txt"), "c1,genuine\nc2,impostor\n").unwrap();
    fs::write(dir.join("pipeline.cfg"), "verifier = baseline-dtw\n").unwrap();
    (
        dir.join("comparisons.txt").display().to_string(),
        dir.join("pipeline.cfg").display().to_string(),
        dir.join("labels.txt").display().to_string(),
    )
}

#[test]
fn compare_writes_one_score_per_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let (comparisons, pipeline, _) = write_fixture(dir.path());
    let out = dir.path().join("scores.txt");
    let result = sigbench(&[
        "compare",
        &comparisons,
        "--pipeline",
        &pipeline,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let content = fs::read_to_string(&out).unwrap();
    assert_eq!(content.lines().count(), 2);
    assert!(content.starts_with("c1,"));
}

#[test]
fn compare_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (comparisons, pipeline, _) = write_fixture(dir.path());
    let out1 = dir.path().join("scores1.txt");
    let out2 = dir.path().join("scores2.txt");
    for out in [&out1, &out2] {
        assert!(sigbench(&[
            "compare",
            &comparisons,
            "--pipeline",
            &pipeline,
            "--out",
            out.to_str().unwrap(),
        ])
        .status
        .success());
    }
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());
}

#[test]
fn missing_signature_file_names_the_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let (_, pipeline, _) = write_fixture(dir.path());
    fs::write(
        dir.path().join("broken.txt"),
        "cx,missing.sig,also-missing.sig\n",
    )
    .unwrap();
    let out = dir.path().join("scores.txt");
    let result = sigbench(&[
        "compare",
        dir.path().join("broken.txt").to_str().unwrap(),
        "--pipeline",
        &pipeline,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!result.status.success());
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("cx"), "stderr: {stderr}");
    assert!(!out.exists(), "no partial score file on failure");
}

#[test]
fn dry_run_validates_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let (comparisons, pipeline, _) = write_fixture(dir.path());
    let out = dir.path().join("scores.txt");
    let result = sigbench(&[
        "compare",
        &comparisons,
        "--pipeline",
        &pipeline,
        "--out",
        out.to_str().unwrap(),
        "--dry-run",
    ]);
    assert!(result.status.success());
    assert!(!out.exists());
}

#[test]
fn eval_prints_eer_and_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("scores.txt"), "c1,0.9\nc2,0.1\n").unwrap();
    fs::write(dir.path().join("labels.txt"), "c1,genuine\nc2,impostor\n").unwrap();
    let curve = dir.path().join("curve.csv");
    let report = dir.path().join("report.txt");
    let result = sigbench(&[
        "eval",
        dir.path().join("scores.txt").to_str().unwrap(),
        dir.path().join("labels.txt").to_str().unwrap(),
        "--task",
        "2",
        "--curve",
        curve.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("eer_percent=0.0"), "stdout: {stdout}");
    assert!(stdout.contains("task=2"));

    let curve_content = fs::read_to_string(&curve).unwrap();
    assert!(curve_content.starts_with("threshold,far,frr\n"));
    assert!(curve_content.lines().count() >= 3);

    let report_content = fs::read_to_string(&report).unwrap();
    assert!(report_content.contains("eer_percent=0.0"));
    assert!(report_content.contains("n_genuine=1"));
    assert!(report_content.contains("curve="));
}

#[test]
fn eval_rejects_id_mismatch_listing_ids() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("scores.txt"), "c1,0.9\nzz,0.1\n").unwrap();
    fs::write(dir.path().join("labels.txt"), "c1,genuine\nc2,impostor\n").unwrap();
    let result = sigbench(&[
        "eval",
        dir.path().join("scores.txt").to_str().unwrap(),
        dir.path().join("labels.txt").to_str().unwrap(),
        "--task",
        "1",
    ]);
    assert!(!result.status.success());
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("c2") && stderr.contains("zz"), "stderr: {stderr}");
}

#[test]
fn rank_reproduces_totals_from_eer_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = "\
# team,task,eer
DLVC-Lab,1,3.33\nDLVC-Lab,2,7.41\nDLVC-Lab,3,6.04\n\
SIG,1,7.50\nSIG,2,10.14\nSIG,3,9.96\n\
TUSUR KIBEVS,1,6.44\nTUSUR KIBEVS,2,13.39\nTUSUR KIBEVS,3,11.42\n\
SigStat,1,11.75\nSigStat,2,13.29\nSigStat,3,14.48\n\
MaD,1,9.83\nMaD,2,17.23\nMaD,3,14.21\n\
JAIRG,2,18.43\n";
    fs::write(dir.path().join("eers.csv"), table).unwrap();
    let out = dir.path().join("ranking.csv");
    let result = sigbench(&[
        "rank",
        dir.path().join("eers.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let csv = fs::read_to_string(&out).unwrap();
    let expected = "position,team,total_points\n1,DLVC-Lab,9\n2,SIG,5\n3,TUSUR KIBEVS,3\n\
                    4,SigStat,1\n5,MaD,0\n6,JAIRG,0\n";
    assert_eq!(csv, expected);
}

#[test]
fn rank_of_single_team_totals_nine() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("eers.csv"), "Solo,1,5.0\nSolo,2,4.0\nSolo,3,3.0\n").unwrap();
    let result = sigbench(&["rank", dir.path().join("eers.csv").to_str().unwrap()]);
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("1,Solo,9"));
}

#[test]
fn rank_of_empty_table_is_empty_and_ok() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("eers.csv"), "# nothing yet\n").unwrap();
    let result = sigbench(&["rank", dir.path().join("eers.csv").to_str().unwrap()]);
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert_eq!(stdout, "position,team,total_points\n");
}

#[test]
fn synth_rejects_single_subject() {
    let dir = tempfile::tempdir().unwrap();
    let result = sigbench(&[
        "synth",
        "--seed",
        "1",
        "--subjects",
        "1",
        "--out",
        dir.path().join("d").to_str().unwrap(),
    ]);
    assert!(!result.status.success());
}

#[test]
fn inspect_summarizes_a_signature() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let result = sigbench(&["inspect", dir.path().join("a.sig").to_str().unwrap()]);
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("subject=s1"));
    assert!(stdout.contains("samples=3"));
    assert!(stdout.contains("duration_ms=20"));
}
