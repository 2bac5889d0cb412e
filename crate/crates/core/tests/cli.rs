use std::path::Path;
use std::process::{Command, Output};

fn proxylabel(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxylabel"))
        .args(args)
        .current_dir(cwd)
        .env_remove("PROXYLABEL_OUT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, name: &str, seed: u64) {
    let file = format!("{name}.csv");
    let seed = seed.to_string();
    let o = proxylabel(
        &["synth", &file, "--samples", "90", "--dim", "6", "--classes", "3", "--separation", "5", "--seed", &seed],
        dir,
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

const QUICK: &str = "base_seed = 7\n[train]\nepochs = 2\n";

fn write_spec(dir: &Path, datasets: &[&str], study: &str) -> std::path::PathBuf {
    let mut s = String::from(QUICK);
    for d in datasets {
        s.push_str(&format!("[[dataset]]\npath = \"{d}.csv\"\n"));
    }
    s.push_str(study);
    let path = dir.join("spec.toml");
    std::fs::write(&path, s).unwrap();
    path
}

#[test]
fn validate_reports_summary_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "blobs", 1);
    let ok = proxylabel(&["validate", "blobs.csv"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert!(stdout(&ok).contains("90"));

    let text = std::fs::read_to_string(dir.path().join("blobs.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let bad = 5;
    let cut = lines[bad - 1].rfind(',').unwrap();
    lines[bad - 1].truncate(cut);
    std::fs::write(dir.path().join("cut.csv"), lines.join("\n")).unwrap();
    let o = proxylabel(&["validate", "cut.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(&format!(":{bad}:")), "{}", stderr(&o));

    std::fs::write(dir.path().join("empty.csv"), "").unwrap();
    let o = proxylabel(&["validate", "empty.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no samples"));
}

#[test]
fn run_then_report_reproduces_tables() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "a", 1);
    let spec = write_spec(
        dir.path(),
        &["a"],
        "[study.main]\nrates = [0.95, 0.8]\nalgorithms = [\"supervised\", \"TBST\"]\nmax_iterations = 1\n",
    );
    let o = proxylabel(&["run", spec.to_str().unwrap(), "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    for rate in ["0.95", "0.8"] {
        assert!(out.join(format!("main-rate{rate}.txt")).exists());
        assert!(out.join(format!("main-rate{rate}.csv")).exists());
    }

    let o = proxylabel(&["report", "out/runs-main.csv", "--out", "again"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["main-rate0.95.txt", "main-rate0.95.csv", "main-rate0.8.txt", "main-rate0.8.csv"] {
        let a = std::fs::read(out.join(f)).unwrap();
        let b = std::fs::read(dir.path().join("again").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }

    // a second run of the same spec is byte-identical
    let o = proxylabel(&["run", spec.to_str().unwrap(), "--out", "rerun", "--jobs", "2"], dir.path());
    assert!(o.status.success());
    assert_eq!(
        std::fs::read(out.join("runs-main.csv")).unwrap(),
        std::fs::read(dir.path().join("rerun/runs-main.csv")).unwrap()
    );
}

#[test]
fn empty_algorithm_list_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "a", 1);
    let spec = write_spec(dir.path(), &["a"], "[study.none]\nrates = [0.9]\nalgorithms = []\n");
    let o = proxylabel(&["run", spec.to_str().unwrap(), "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty algorithm list"), "{}", stderr(&o));
    assert!(!dir.path().join("out/runs-none.csv").exists());
}

#[test]
fn concatenated_logs_give_union_table() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "a", 1);
    synth(dir.path(), "b", 2);
    for (d, out) in [("a", "oa"), ("b", "ob")] {
        let spec = write_spec(dir.path(), &[d], "[study.s]\nrates = [0.9]\nmax_iterations = 1\nalgorithms = [\"supervised\", \"CBST\"]\n");
        let o = proxylabel(&["run", spec.to_str().unwrap(), "--out", out], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = std::fs::read_to_string(dir.path().join("oa/runs-s.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("ob/runs-s.csv")).unwrap();
    std::fs::write(dir.path().join("both.csv"), format!("{a}{b}")).unwrap();
    let o = proxylabel(&["report", "both.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = stdout(&o);
    let header = table.lines().nth(1).unwrap();
    assert_eq!(header.split_whitespace().collect::<Vec<_>>(), ["Alg", "Variant", "a", "b"]);
    assert_eq!(table.lines().filter(|l| l.starts_with("CBST")).count(), 1);

    // conflicting duplicate rows are rejected
    let mut bad = b.clone();
    let row = b.lines().find(|l| l.starts_with("b,0.9,Supervised")).unwrap();
    let mut fields: Vec<&str> = row.split(',').collect();
    fields[6] = "1.00";
    bad.push_str(&fields.join(","));
    bad.push('\n');
    std::fs::write(dir.path().join("bad.csv"), bad).unwrap();
    let o = proxylabel(&["report", "bad.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn single_cell_table() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "a", 3);
    let spec = write_spec(dir.path(), &["a"], "[study.one]\nrates = [0.9]\nalgorithms = [\"supervised\"]\noracle = false\n");
    let o = proxylabel(&["run", spec.to_str().unwrap(), "--out", "out"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("out/one-rate0.9.txt")).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 1, "{text}");
    assert!(rows[0].starts_with("Supervised"));
}

#[test]
fn sampling_study_has_one_row_per_strategy() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "a", 4);
    let spec = write_spec(
        dir.path(),
        &["a"],
        "[study.sampling]\nrates = [0.9]\nalgorithms = [\"TT\"]\noracle = false\nmax_iterations = 1\n\
         sampling = [\"x-norep\", \"2x-rep\", \"x-rep\", \"x/2-rep\", \"x/3-disjoint\"]\n",
    );
    let o = proxylabel(&["run", spec.to_str().unwrap(), "--out", "out"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/sampling-rate0.9.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 5, "{csv}");
    for s in ["x-norep", "2x-rep", "x-rep", "x/2-rep", "x/3-disjoint"] {
        assert!(rows.iter().any(|r| r.contains(&format!("sample={s};"))), "{s} missing");
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = proxylabel(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
