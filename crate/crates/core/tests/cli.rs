use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn markrefine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_markrefine")).args(args).output().expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synth(dir: &TempDir, config: &str) -> String {
    std::fs::write(dir.path().join("synth.toml"), config).unwrap();
    let out = markrefine(&["synth", "--config", &path(dir, "synth.toml"), "--out", &path(dir, "raw.csv")]);
    assert!(out.status.success(), "{}", stderr(&out));
    path(dir, "raw.csv")
}

fn manifest(p: &Path) -> serde_json::Value {
    let mut m = p.as_os_str().to_owned();
    m.push(".manifest.json");
    serde_json::from_slice(&std::fs::read(PathBuf::from(m)).unwrap()).unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert!(markrefine(&["--help"]).status.success());
    assert!(markrefine(&["--version"]).status.success());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(markrefine(&[]).status.code(), Some(2));
    assert_eq!(markrefine(&["refine", "--in", "x.csv"]).status.code(), Some(2));
    let out = markrefine(&["clean", "--in", "x.csv", "--dept", "Physics", "--out", "y.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Physics"));
    let out = markrefine(&["stats", "ttest", "--table1", "--format", "xml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_three_and_name_the_stage() {
    let dir = TempDir::new().unwrap();
    let out = markrefine(&["clean", "--in", &path(&dir, "missing.csv"), "--dept", "CS", "--out", &path(&dir, "o.csv")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("clean failed"), "{}", stderr(&out));

    std::fs::write(dir.path().join("bad.csv"), "student,module_code\nA,B\n").unwrap();
    let out = markrefine(&["refine", "--in", &path(&dir, "bad.csv"), "--dept", "CS", "--out", &path(&dir, "o.csv")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("refine failed"), "{}", stderr(&out));
}

#[test]
fn ttest_on_reference_means() {
    let out = markrefine(&["stats", "ttest", "--table1", "--format", "json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let text = v.to_string();
    assert!(text.contains("Exam vs Coursework"), "{text}");
    assert!(text.contains("-5.83"), "{text}");
}

#[test]
fn ttest_from_file_matches_builtin() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("means.csv"),
        "department,exam,coursework,mixed\n\
         Business,59.77,60.83,60.01\n\
         CivilEng,58.78,63.74,60.70\n\
         CS,58.18,64.40,58.87\n\
         ECSEng,59.55,63.26,57.00\n\
         Math,61.59,66.00,61.17\n\
         MechEng,58.80,64.26,60.24\n",
    )
    .unwrap();
    let from_file = markrefine(&["stats", "ttest", "--in", &path(&dir, "means.csv"), "--format", "csv"]);
    let builtin = markrefine(&["stats", "ttest", "--table1", "--format", "csv"]);
    assert!(from_file.status.success(), "{}", stderr(&from_file));
    assert_eq!(from_file.stdout, builtin.stdout);
}

#[test]
fn clean_refine_report_chain() {
    let dir = TempDir::new().unwrap();
    let raw = synth(&dir, "seed = 3\nmissing_method_rate = 0.3\nmarkless_rate = 0.05\n[departments.Math]\nstudents = 40\n");
    let cleaned = path(&dir, "cleaned.csv");
    let out = markrefine(&["clean", "--in", &raw, "--dept", "Math", "--out", &cleaned]);
    assert!(out.status.success(), "{}", stderr(&out));
    let m = manifest(Path::new(&cleaned));
    assert_eq!(m["subcommand"], "clean");
    assert!(m["counts"]["clean"]["records_dropped"].as_u64().unwrap() > 0);
    assert_eq!(m["outputs"][0]["sha256"].as_str().unwrap().len(), 64);

    let refined = path(&dir, "refined.csv");
    let out = markrefine(&["refine", "--in", &cleaned, "--dept", "Math", "--out", &refined]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&refined).unwrap();
    assert!(text.lines().next().unwrap().ends_with("mai,rmm,flag"));

    let out = markrefine(&["report", "--in", &refined, "--dept", "Math", "--regno", "Math00001", "--format", "csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("Total"), "{table}");

    let out = markrefine(&["fit", "--in", &refined, "--dept", "Math"]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn zero_coefficients_leave_marks_unchanged() {
    let dir = TempDir::new().unwrap();
    let raw = synth(&dir, "seed = 4\n[departments.CS]\nstudents = 10\n");
    let refined = path(&dir, "refined.csv");
    let out = markrefine(&["refine", "--in", &raw, "--dept", "CS", "--out", &refined, "--beta1", "0", "--beta2", "0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mut reader = csv::Reader::from_path(&refined).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |n: &str| headers.iter().position(|h| h == n).unwrap();
    let (mm, rmm) = (col("module_mark"), col("rmm"));
    for row in reader.records() {
        let row = row.unwrap();
        assert_eq!(row[mm].parse::<f64>().unwrap(), row[rmm].parse::<f64>().unwrap());
    }
}

#[test]
fn class_override_file_applies() {
    let dir = TempDir::new().unwrap();
    let raw = synth(&dir, "seed = 5\n[departments.CS]\nstudents = 5\nclass_weights = [1,0,0,0,0,0,0,0,0,0,0,1]\n");
    std::fs::write(dir.path().join("classes.csv"), "department,exam_weighting,cswk_weighting\nCS,100,0\nCS,50,50\nCS,0,100\n")
        .unwrap();
    let refined = path(&dir, "refined.csv");
    let out = markrefine(&["refine", "--in", &raw, "--dept", "CS", "--out", &refined, "--classes", &path(&dir, "classes.csv")]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mut reader = csv::Reader::from_path(&refined).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |n: &str| headers.iter().position(|h| h == n).unwrap();
    let (cww, mai) = (col("cswk_weighting"), col("mai"));
    for row in reader.records() {
        let row = row.unwrap();
        // pure coursework is index 2 in the three-class table
        let expected = if &row[cww] == "100" { "2" } else { "0" };
        assert_eq!(&row[mai], expected);
    }
}

#[test]
fn synth_splits_departments() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("s.toml"), "[departments.CS]\nstudents = 3\n[departments.Math]\nstudents = 3\n").unwrap();
    let out = markrefine(&["synth", "--config", &path(&dir, "s.toml"), "--seed", "9", "--out", &path(&dir, "raw.csv")]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("raw_CS.csv").exists());
    assert!(dir.path().join("raw_Math.csv").exists());
    assert_eq!(manifest(&dir.path().join("raw.csv"))["seed"], 9);
}

#[test]
fn predict_reports_both_feature_sets() {
    let dir = TempDir::new().unwrap();
    let raw = synth(&dir, "seed = 6\nmai_outcome_coupling = 2.0\n[departments.CS]\nstudents = 200\n");
    let refined = path(&dir, "refined.csv");
    assert!(markrefine(&["refine", "--in", &raw, "--dept", "CS", "--out", &refined]).status.success());
    let out = markrefine(&["predict", "--in", &refined, "--dept", "CS", "--trees", "20", "--seed", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let text = v.to_string();
    assert!(text.contains("year1_mai"), "{text}");
    assert!(text.contains("0.942"), "{text}");

    let again = markrefine(&["predict", "--in", &refined, "--dept", "CS", "--trees", "20", "--seed", "1"]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn pipeline_writes_manifest_listing_outputs() {
    let dir = TempDir::new().unwrap();
    let raw = synth(&dir, "seed = 8\n[departments.CS]\nstudents = 20\n");
    let out = markrefine(&["pipeline", "--in", &raw, "--dept", "CS", "--out", &path(&dir, "run"), "--format", "table"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let run = dir.path().join("run");
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["outputs"].as_array().unwrap().len(), 3);
    assert!(run.join("summary.txt").exists());
}
