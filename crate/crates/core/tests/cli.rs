use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_rmmt-bench");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("run rmmt-bench")
}

fn short(extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> =
        ["--threads", "2", "--duration", "0.1", "--reps", "1", "--write-pct", "0.3"].iter().map(|s| s.to_string()).collect();
    if !extra.contains(&"--input") {
        v.extend(["--random-nodes".to_string(), "500".to_string()]);
    }
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

fn run_short(extra: &[&str]) -> Output {
    let args = short(extra);
    run(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn help_and_version_succeed() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in ["--mode", "--threads", "--duration", "--write-pct", "--retries", "--input", "--random-nodes", "--seed", "--reps", "--csv", "--validate"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn short_run_writes_csv_to_stdout() {
    let out = run_short(&["--mode", "both", "--retries", "0,2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], rmmt::bench::CSV_HEADER);
    // rwlock, speculative r=0, r=2; one run and one mean row each
    assert_eq!(lines.len(), 1 + 3 * 2);
    for row in &lines[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 13, "{row}");
        let n = |k: usize| f[k].parse::<u64>().unwrap();
        assert_eq!(n(6), n(7) + n(8));
        assert_eq!(n(9) + n(10), n(6));
        if f[0] == "rwlock" {
            assert_eq!((n(10), n(11)), (0, 0));
        }
    }
    assert_eq!(lines.iter().filter(|l| l.split(',').nth(5) == Some("mean")).count(), 3);
}

#[test]
fn csv_goes_to_a_file_when_asked() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = run_short(&["--mode", "rwlock", "--csv", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with(rmmt::bench::CSV_HEADER));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn reads_input_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.xml");
    std::fs::write(&path, "<a><b/><c><d/></c></a>").unwrap();
    let out = run_short(&["--mode", "speculative", "--retries", "1", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_errors_exit_with_1() {
    for bad in [
        &["--write-pct", "1.5"][..],
        &["--write-pct", "-0.1"],
        &["--threads", "0"],
        &["--duration", "0"],
        &["--reps", "0"],
        &["--mode", "nope"],
        &["--bogus"],
    ] {
        let out = run_short(bad);
        assert_eq!(out.status.code(), Some(1), "{bad:?}");
        assert!(out.stdout.is_empty(), "{bad:?}");
    }
}

#[test]
fn input_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [("bad.xml", "<a><b></a></b>"), ("bad.bp", "())("), ("chars.bp", "(x)")];
    for (name, body) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        let out = run_short(&["--input", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{name}");
    }
    let missing = dir.path().join("missing");
    let both = run(&["--input", "x", "--random-nodes", "5"]);
    assert_eq!(both.status.code(), Some(1));
    assert_eq!(run_short(&["--input", missing.to_str().unwrap()]).status.code(), Some(2));
}
