use std::process::{Command, Output};

fn ticker(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ticker"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn no_arguments_prints_usage() {
    let o = ticker(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("Usage"));
}

#[test]
fn model_at_7() {
    for s in ["incremental", "oneshot"] {
        let o = ticker(&[
            "--program",
            "tests/data/diamond.lars",
            "--strategy",
            s,
            "--input",
            "tests/data/diamond.stream",
            "--until",
            "7",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout(&o), "@7 model: b(y)\n");
    }
}

#[test]
fn every_time_point() {
    let o = ticker(&[
        "--program",
        "tests/data/diamond.lars",
        "--input",
        "tests/data/diamond.stream",
        "--until",
        "8",
        "--every",
        "--mode",
        "pull",
        "--gc-cutoff",
    ]);
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[5], "@5 model: a(y) b(y)");
    assert_eq!(lines[8], "@8 model:");
}

#[test]
fn dump_encoding_oneshot() {
    let o = ticker(&[
        "--program",
        "tests/data/diamond.lars",
        "--strategy",
        "oneshot",
        "--until",
        "7",
        "--dump-encoding",
    ]);
    let text = stdout(&o);
    assert!(text.contains("now(7)."), "{text}");
    assert!(text.ends_with("@7 model:\n"));
}

#[test]
fn errors_exit_nonzero() {
    let o = ticker(&["--program", "tests/data/missing.lars"]);
    assert_eq!(o.status.code(), Some(1));
    let o = ticker(&["--program", "tests/data/diamond.lars", "--input", "tests/data/diamond.stream", "--until", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("after --until"));
}

#[test]
fn bench_csv() {
    let o = ticker(&[
        "--bench", "A", "--setup", "A1", "--window", "3", "--timepoints", "10", "--runs", "1", "--warmup", "0",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "setup,strategy,n,tp,t_init,t_tick,t_total");
    assert!(rows[1].starts_with("A1,oneshot,3,10,"));
    assert!(rows[2].starts_with("A1,incremental,3,10,"));
    let o = ticker(&["--bench", "B", "--setup", "A1", "--runs", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = ticker(&["--bench", "A", "--setup", "A1", "--runs", "0"]);
    assert_eq!(o.status.code(), Some(1));
}
