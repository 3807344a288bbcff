use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dqssa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqssa")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn simulate_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = dqssa(&[
        "simulate", "--model", "cellcycle", "--variant", "full", "-T", "60", "--dt", "0.001", "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,C,P,A\n"));
    assert_eq!(csv.lines().count(), 60_002);
    assert!(!out.join("delays.csv").exists());
    assert!(!out.join("summary.json").exists());
}

#[test]
fn delay_runs_write_delays_and_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let o = dqssa(&[
            "simulate", "--model", "hes1", "--variant", "dqssa", "-T", "50", "-o",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        p
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["trajectory.csv", "delays.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let delays = fs::read_to_string(a.join("delays.csv")).unwrap();
    assert!(delays.starts_with("t,tau1\n"));
}

#[test]
fn reduce_reports_a3_violation() {
    let o = dqssa(&["reduce", "--model", "hes1", "--fast", "D,Dp"]);
    assert_eq!(o.status.code(), Some(2));
    let d = stderr_json(&o);
    assert_eq!(d["kind"], "reduction");
    let v = d["violations"].as_array().unwrap();
    assert!(v.iter().any(|x| x["assumption"] == "A3" && x["detail"].as_str().unwrap().contains("Dp")));
}

#[test]
fn reduce_prints_system_and_delay_table() {
    let o = dqssa(&["reduce", "--model", "hes1", "--fast", "D"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("D = "));
    assert!(text.contains("p@tau1"));
    assert!(text.contains("delay tau1 = 1 / "));
    assert!(text.contains("state-dependent"));
    assert!(text.contains("A2 tau1: g > 0 guaranteed"));
}

#[test]
fn compare_matches_table_scale() {
    let d = stdout_json(&dqssa(&["compare", "--model", "hes1", "--against", "qssa,dqssa", "-T", "500"]));
    assert_eq!(d["schema"], 1);
    let q = d["errors"]["qssa"]["p"].as_f64().unwrap();
    let dq = d["errors"]["dqssa"]["p"].as_f64().unwrap();
    assert!((q - 0.13).abs() < 0.04, "{q}");
    assert!((dq - 0.024).abs() < 0.01, "{dq}");
}

#[test]
fn compare_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = dqssa(&[
        "compare", "--model", "hes1", "--against", "dqssa", "-T", "100", "-o",
        dir.path().to_str().unwrap(),
    ]);
    let printed = stdout_json(&o);
    let saved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(printed, saved);
}

#[test]
fn qssa0_policy_reproduces_qssa() {
    let d = stdout_json(&dqssa(&[
        "compare", "--model", "hes1", "--against", "dqssa", "--delay-policy", "qssa0", "--method", "euler", "-T",
        "100",
    ]));
    let e = stdout_json(&dqssa(&["compare", "--model", "hes1", "--against", "qssa", "--method", "euler", "-T", "100"]));
    for v in ["m", "p"] {
        let (a, b) = (d["errors"]["dqssa"][v].as_f64().unwrap(), e["errors"]["qssa"][v].as_f64().unwrap());
        assert!((a - b).abs() < 1e-10, "{v}: {a} {b}");
    }
}

#[test]
fn bound_explicit_inputs() {
    let d = stdout_json(&dqssa(&[
        "bound", "--model", "hes1", "--eps", "0.02", "--m-max", "4.88", "--sup-f", "0.02", "--x0", "1", "--at", "0,200",
    ]));
    let b = &d["results"][0]["bound"];
    assert!((b[0]["certified"].as_f64().unwrap() - 3.99).abs() < 0.01);
    assert!((b[1]["certified"].as_f64().unwrap() - 2.03).abs() < 0.01);
}

#[test]
fn bound_along_simulation_is_not_exceeded() {
    let d = stdout_json(&dqssa(&["bound", "--model", "hes1"]));
    let r = &d["results"][0];
    assert_eq!(r["var"], "D");
    assert_eq!(r["points_above_bound"], 0);
    assert!(r["measured_max"].as_f64().unwrap() < 0.352);
}

#[test]
fn scan_produces_policy_grid() {
    let d = stdout_json(&dqssa(&[
        "scan", "--model", "cellcycle", "--variant", "dqssa-P", "--var", "C", "--policy", "min", "--policy",
        "const:tau1=0.3,tau2=0.28",
    ]));
    let row = d["grid"]["dqssa-P"].as_array().unwrap();
    assert_eq!(row.len(), 2);
    assert_eq!(row[0]["policy"], "min");
    assert!((row[0]["delays"]["tau1"].as_f64().unwrap() - 0.37).abs() < 0.01);
    assert!(row[1]["period_error"].as_f64().unwrap() < row[0]["period_error"].as_f64().unwrap());
}

#[test]
fn network_file_models() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dimer.crn");
    fs::write(&path, "species: X, Y\nfast: X\nreaction: 0 -> X @ 1\nreaction: 2 X -> Y @ 5\nreaction: Y -> 0 @ 1\n").unwrap();
    let o = dqssa(&["reduce", "--model", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let d = stderr_json(&o);
    assert_eq!(d["violations"][0]["assumption"], "A1");

    let path = dir.path().join("chain.crn");
    fs::write(&path, "species: A, B, C\nfast: B\nreaction: A -> B @ 1\nreaction: B -> C @ 20\ninit: A=1\n").unwrap();
    let d = stdout_json(&dqssa(&["compare", "--model", path.to_str().unwrap(), "-T", "10"]));
    for v in ["qssa", "dqssa", "dqssa-ablated"] {
        assert!(d["errors"][v]["C"].as_f64().unwrap() < 0.1, "{v}");
    }
    // A does not see B, so the QSSA run reproduces it exactly.
    assert_eq!(d["errors"]["qssa"]["A"].as_f64().unwrap(), 0.0);
}

#[test]
fn validation_errors_exit_2() {
    for args in [
        &["simulate", "--model", "nope"][..],
        &["simulate", "--model", "hes1", "--delay-policy", "bogus"],
        &["simulate", "--model", "hes1", "--variant", "dqssa", "--method", "rk4"],
        &["simulate", "--model", "hes1", "--dt", "-1"],
        &["simulate", "--model", "hes1", "--variant", "dqssa", "--delay-policy", "min", "--stats-window", "5:1"],
        &["simulate", "--model", "missing.crn"],
        &["reduce", "--model", "hes1", "--fast", "q"],
    ] {
        let o = dqssa(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stderr_json(&o)["exit_code"], 2);
    }
}

#[test]
fn help_lists_every_subcommand() {
    let o = dqssa(&["--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for sub in ["simulate", "reduce", "compare", "bound", "scan", "models"] {
        assert!(text.contains(sub), "{sub}");
    }
    let o = dqssa(&["simulate", "--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for flag in ["--model", "--variant", "--fast", "--t-end", "--t0", "--dt", "--method", "--delay-policy", "--ablate-last-term", "--stats-window", "--out"] {
        assert!(text.contains(flag), "{flag}");
    }
}

#[test]
fn models_list_and_export() {
    let o = dqssa(&["models", "list"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("hes1-set2"));
    assert!(text.contains("dqssa-PA"));
    let o = dqssa(&["models", "export", "hes1", "full"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# network"));
    assert!(text.contains("dD/dt"));
    assert!(Path::new(env!("CARGO_BIN_EXE_dqssa")).exists());
}
