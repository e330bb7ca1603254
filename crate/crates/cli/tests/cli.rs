use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
name = "cli-tiny"
seed = 3
replications = 2

[[cell]]
algorithm = "insga2"
problem = "dtlz2"
m = 3
pop_size = 20
max_fe = 400
warmup = 3
tau = 3
mu = 4
[cell.train]
epochs = 30
"#;

fn iemo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iemo"))
        .args(args)
        .env_remove("IEMO_OUT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_tiny(dir: &Path) -> String {
    let file = dir.join("tiny.toml");
    fs::write(&file, TINY).unwrap();
    file.to_str().unwrap().to_string()
}

#[test]
fn run_report_and_export() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_tiny(tmp.path());
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let o = iemo(&["run", &file, "--out", out, "--parallel", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("dtlz2-m3"));
    assert_eq!(fs::read_dir(Path::new(out).join("runs")).unwrap().count(), 2);

    let o = iemo(&["report", out]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("insga2"));

    let o = iemo(&["export", out, "--kind", "ranks"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).trim_end().ends_with("rank_distribution.csv"));
}

#[test]
fn overrides_change_seed_and_replications() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_tiny(tmp.path());
    let out = tmp.path().join("out");
    let o = iemo(&[
        "run",
        &file,
        "--out",
        out.to_str().unwrap(),
        "--reps",
        "1",
        "--seed",
        "9",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"master_seed\": 9"));
    assert!(manifest.contains("\"replications\": 1"));
}

#[test]
fn partial_failure_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_tiny(tmp.path());
    let out = tmp.path().join("out");
    // a directory where a run file belongs makes that replication fail
    fs::create_dir_all(out.join("runs/c000_r001.json")).unwrap();
    let o = iemo(&["run", &file, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1 replications failed"));
    assert_eq!(iemo(&["report", out.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn presets_list_print_and_errors() {
    let o = iemo(&["preset"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "noise-study"));

    let o = iemo(&["preset", "smoke", "--print", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("seed = 5"));
    assert!(text.contains("[[cell]]"));

    let o = iemo(&["preset", "nope"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown preset"));

    let tmp = tempfile::tempdir().unwrap();
    let o = iemo(&["report", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ndcg_verb_runs_a_reduced_study() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ndcg");
    let o = iemo(&["ndcg", "--m", "2,3", "--reps", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("ndcg.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
}
