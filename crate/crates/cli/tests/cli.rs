use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn rfde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfde"))
        .args(args)
        .output()
        .expect("spawn rfde")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn run_in(dir: &Path, sub: &str, args: &[&str]) -> Output {
    let out = dir.join(sub);
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", out.to_str().unwrap()]);
    rfde(&all)
}

/// Every file of `a` has a byte-identical twin in `b`, and vice versa.
fn same_tree(a: &Path, b: &Path) {
    let names = |d: &Path| {
        let mut v: Vec<_> = fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        v.sort();
        v
    };
    assert_eq!(names(a), names(b));
    for n in names(a) {
        assert_eq!(
            fs::read(a.join(&n)).unwrap(),
            fs::read(b.join(&n)).unwrap(),
            "{n:?} differs"
        );
    }
}

const BLOWUP: &str = r#"{
    "initial": {"kind": "constant", "value": [1.0, 0.0]},
    "u": {"kind": "constant", "value": [1.0]},
    "d": {"kind": "constant", "value": [1.0]}
}"#;

const GAMMA_5_4: &str = r#"{
    "envelope": {"gamma": {"kind": "power", "c": 1.224744871391589, "p": 0.6666666666666666}}
}"#;

#[test]
fn reproduce_example_4_8_defaults_passes() {
    let tmp = TempDir::new().unwrap();
    let out = run_in(tmp.path(), "a", &["reproduce", "example-4.8"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("a/report.json")).unwrap())
            .unwrap();
    let certs = report["certificates"].as_array().unwrap();
    assert_eq!(certs[0]["checker"], "check_lyapunov_ios");
    assert_eq!(certs[0]["observed"], "no_counterexample");
    assert_eq!(certs[1]["observed"], "no_counterexample");
    assert!(certs.iter().all(|c| c["pass"] == true));
    for f in [
        "manifest.json",
        "report.json",
        "scenario_2.csv",
        "scenario_3.csv",
    ] {
        assert!(tmp.path().join("a").join(f).exists(), "{f}");
    }
}

#[test]
fn example_5_2_rejects_long_delay() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"command": "reproduce", "system": {"name": "example-5.2", "params": {"r": 1.2}}}"#,
    );
    let out = run_in(tmp.path(), "o", &["--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let msg = stderr(&out);
    assert!(msg.contains("3√2/2 > r exp(r)"), "{msg}");
    assert!(msg.contains("2.12132") && msg.contains("3.98414"), "{msg}");
}

#[test]
fn simulate_zero_initial_condition_is_zero() {
    let tmp = TempDir::new().unwrap();
    let out = run_in(
        tmp.path(),
        "z",
        &["simulate", "example-4.8", "--horizon", "2"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(tmp.path().join("z/trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,x_1,x_2,|x|,out_1");
    let mut rows = 0;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols[1..].iter().all(|v| *v == 0.0), "{line}");
        rows += 1;
    }
    assert_eq!(rows, 201);
}

#[test]
fn exit_status_per_command() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let blowup = write_config(d, "blowup.json", BLOWUP);
    let gamma = write_config(d, "gamma.json", GAMMA_5_4);
    let fast = write_config(
        d,
        "fast.json",
        r#"{"system": {"name": "scalar-contraction", "params": {"rate": 1.5}}}"#,
    );
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["simulate", "example-5.4"], 0),
        (
            vec![
                "simulate",
                "example-4.8",
                "--config",
                blowup.to_str().unwrap(),
                "--horizon",
                "30",
            ],
            1,
        ),
        (vec!["simulate", "no-such-system"], 2),
        (vec!["check", "example-5.4"], 0),
        (vec!["check", "--config", fast.to_str().unwrap()], 1),
        (vec!["check", "example-4.8", "--step", "-1"], 2),
        (vec!["falsify", "scalar-contraction"], 0),
        (vec!["falsify", "--config", fast.to_str().unwrap()], 1),
        (vec!["falsify", "example-4.8", "--tolerance", "-1"], 2),
        (vec!["reproduce", "example-5.4"], 0),
        (vec!["reproduce", "--config", fast.to_str().unwrap()], 1),
        (vec!["reproduce", "example-4.8", "--samples", "0"], 2),
        (
            vec![
                "envelope",
                "example-5.4",
                "--config",
                gamma.to_str().unwrap(),
            ],
            0,
        ),
        (vec!["envelope", "example-5.4"], 1),
        (vec!["envelope", "example-4.8", "--horizon", "0"], 2),
    ];
    for (k, (args, expected)) in cases.iter().enumerate() {
        let out = run_in(d, &format!("case{k}"), args);
        assert_eq!(code(&out), *expected, "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn config_errors_name_the_culprit() {
    let tmp = TempDir::new().unwrap();
    let out = run_in(tmp.path(), "a", &["check", "example-9.9"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("example-9.9"));

    let out = run_in(tmp.path(), "b", &["transmogrify", "example-4.8"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("transmogrify"));

    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"command": "check", "sistem": "example-4.8"}"#,
    );
    let out = run_in(tmp.path(), "c", &["--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("sistem"));

    let out = run_in(tmp.path(), "d", &["--config", "/nonexistent/run.json"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("/nonexistent/run.json"));

    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = rfde(&[
        "check",
        "example-5.4",
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let blowup = write_config(d, "blowup.json", BLOWUP);
    let gamma = write_config(d, "gamma.json", GAMMA_5_4);
    let random = write_config(
        d,
        "random.json",
        r#"{"u": {"kind": "random", "mean_dwell": 0.5}, "d": {"kind": "random", "mean_dwell": 0.5}}"#,
    );
    let runs: Vec<Vec<&str>> = vec![
        vec![
            "simulate",
            "example-4.8",
            "--config",
            blowup.to_str().unwrap(),
            "--seed",
            "3",
        ],
        vec![
            "simulate",
            "example-5.4",
            "--config",
            random.to_str().unwrap(),
            "--seed",
            "3",
        ],
        vec!["check", "example-5.4", "--seed", "11"],
        vec![
            "falsify",
            "example-4.8",
            "--seed",
            "11",
            "--samples",
            "2000",
        ],
        vec!["reproduce", "example-4.8", "--seed", "5"],
        vec![
            "envelope",
            "example-5.4",
            "--config",
            gamma.to_str().unwrap(),
            "--seed",
            "5",
        ],
        vec![
            "check",
            "example-5.2",
            "--seed",
            "2",
            "--samples",
            "500",
            "--horizon",
            "3",
        ],
    ];
    for (k, args) in runs.iter().enumerate() {
        let a = run_in(d, &format!("r{k}a"), args);
        let b = run_in(d, &format!("r{k}b"), args);
        assert_eq!(code(&a), code(&b), "{args:?}");
        assert_ne!(code(&a), 2, "{args:?}: {}", stderr(&a));
        same_tree(&d.join(format!("r{k}a")), &d.join(format!("r{k}b")));
    }
}

#[test]
fn manifest_records_seed_tolerance_and_hashes() {
    let tmp = TempDir::new().unwrap();
    let out = run_in(
        tmp.path(),
        "m",
        &[
            "falsify",
            "example-4.8",
            "--seed",
            "42",
            "--tolerance",
            "1e-7",
            "--samples",
            "300",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let dir = tmp.path().join("m");
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 42);
    assert_eq!(m["context"]["sampler"]["tolerance"]["abs"], 1e-7);
    assert_eq!(m["context"]["sampler"]["samples"], 300);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    let arts = m["artifacts"].as_array().unwrap();
    assert_eq!(arts.len(), 1);
    assert_eq!(arts[0]["file"], "report.json");
    let bytes = fs::read(dir.join("report.json")).unwrap();
    assert_eq!(arts[0]["bytes"], bytes.len());
    assert_eq!(arts[0]["sha256"].as_str().unwrap().len(), 64);
}
