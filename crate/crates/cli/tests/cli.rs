use std::fs;
use std::process::{Command, Output};

fn ramexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ramexp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn crn_examples() {
    for (r, n, want) in [
        ("6", "3", "-2"),
        ("1", "0", "1"),
        ("5", "5", "4"),
        ("12", "0", "4"),
    ] {
        let out = ramexp(&["crn", r, n]);
        assert!(out.status.success());
        assert_eq!(stdout(&out).trim(), want);
    }
    assert_eq!(ramexp(&["crn", "0", "3"]).status.code(), Some(2));
}

#[test]
fn parseval_sigma_csv() {
    let out = ramexp(&[
        "parseval",
        "--pair",
        "sigma",
        "--s",
        "1",
        "--t",
        "1",
        "--h",
        "2",
        "--grid",
        "1e4,1e5,1e6",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let headers = rows.headers().unwrap().clone();
    let rel = headers.iter().position(|h| h == "relative_error").unwrap();
    let values: Vec<f64> = rows
        .records()
        .map(|r| r.unwrap()[rel].parse::<f64>().unwrap().abs())
        .collect();
    assert_eq!(values.len(), 3);
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
    assert!(values[2] <= 0.01);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["parseval", "--grid", ""][..],
        &["parseval", "--grid", "1e5,1e4"],
        &["parseval", "--grid", "1e4,2e7"],
        &["parseval", "--pair", "sigma", "--s", "0"],
        &["parseval", "--pair", "custom"],
        &["verify", "bogus"],
        &["verify", "phi", "--grid", "1e4,1e7"],
        &["nonsense"],
    ] {
        let out = ramexp(args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn jordan_json_has_delta_cross_check() {
    let out = ramexp(&[
        "parseval",
        "--pair",
        "jordan",
        "--s",
        "1",
        "--t",
        "1",
        "--h",
        "1",
        "--grid",
        "1e3,1e4,1e5",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["schema_version"], "1");
    let check = &doc["report"]["cross_check"];
    assert_eq!(check["reference_name"], "delta_constant");
    assert_eq!(check["passed"], true);
    assert_eq!(doc["report"]["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn output_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in ["1", "64"] {
        let path = dir.path().join(format!("t{threads}.csv"));
        let out = ramexp(&[
            "--threads",
            threads,
            "parseval",
            "--pair",
            "sigma",
            "--h",
            "2",
            "--grid",
            "1e4,1e5,1e6",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        files.push(fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(String::from_utf8_lossy(&files[0]).lines().count(), 4);
}

#[test]
fn config_file_is_used_and_checked() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    fs::write(&good, "pair = \"sigma\"\nh = 2\ngrid = [1e3, 1e4, 1e5]\n").unwrap();
    let out = ramexp(&["parseval", "--config", good.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).lines().nth(1).unwrap().starts_with("1000,2,"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "pair = \"sigma\"\ns = 1\ngrid = [1e4, 1e3]\n").unwrap();
    let out = ramexp(&["parseval", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn custom_pair_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.json");
    fs::write(
        &path,
        r#"{"f": {"label": "c2", "decay_delta": 1.0, "coefficients": [0.0, 1.0]},
            "g": {"label": "c1c2", "decay_delta": 1.0, "coefficients": [1.0, 1.0]}}"#,
    )
    .unwrap();
    let out = ramexp(&[
        "parseval",
        "--pair",
        "custom",
        "--pair-file",
        path.to_str().unwrap(),
        "--h",
        "1",
        "--grid",
        "10,100,1000",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(stdout(&out).lines().count(), 4);
}

#[test]
fn verify_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = ramexp(&[
        "verify",
        "lemma1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).starts_with("PASS lemma1"));
    assert!(dir.path().join("lemma1.csv").exists());
    let doc: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("lemma1.json")).unwrap()).unwrap();
    assert_eq!(doc["report"]["passed"], true);

    let out = ramexp(&[
        "verify",
        "mertens",
        "--grid",
        "10,100,1000",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    // |M(1000)|/1000 = 0.002 is above the 1e-3 gate
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).starts_with("FAIL mertens"));
    let csv = fs::read_to_string(dir.path().join("mertens.csv")).unwrap();
    assert!(csv.starts_with("x,partial,model,normalized_deviation\n10,-1.00000000000000e0,"));
}

#[test]
fn verify_all_passes_at_defaults() {
    let out = ramexp(&["--threads", "4", "verify", "all"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(!stdout(&out).contains("FAIL"));
}

#[test]
fn table_command_writes_a_readable_cache() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.bin");
    let out = ramexp(&[
        "table",
        "phi",
        "--limit",
        "1000",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let table = ramexp::arith::cache::read_table(fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(table.limit(), 1000);
    assert_eq!(table.int(10), Some(4));

    let csv = dir.path().join("mu.csv");
    assert!(ramexp(&[
        "table",
        "mobius",
        "--limit",
        "6",
        "--format",
        "csv",
        "-o",
        csv.to_str().unwrap()
    ])
    .status
    .success());
    assert_eq!(
        fs::read_to_string(&csv).unwrap(),
        "n,value\n1,1\n2,-1\n3,-1\n4,0\n5,-1\n6,1\n"
    );
    assert_eq!(
        ramexp(&[
            "table",
            "phi",
            "--limit",
            "3000000",
            "-o",
            csv.to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );
}
