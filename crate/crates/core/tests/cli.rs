use std::path::Path;
use std::process::{Command, Output};

use fivebar::io::{self, ProjectConfig};
use fivebar::mechanism::{self, JointState, MechanismParams};

fn fivebar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fivebar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    fivebar(args).status.code().expect("exited normally")
}

fn stdout_row(out: &Output) -> Vec<f64> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let line = text.lines().nth(1).expect("value row");
    line.split(',').map(|v| v.parse().unwrap()).collect()
}

#[test]
fn fk_prints_the_library_result() {
    let out = fivebar(&["fk", "--theta1", "120", "--theta2", "60"]);
    assert!(out.status.success());
    let row = stdout_row(&out);
    let c =
        mechanism::forward_kinematics(&MechanismParams::prototype(), JointState::from_degrees(120.0, 60.0)).unwrap();
    assert!((row[0] - c.x).abs() < 1e-9 && (row[1] - c.z).abs() < 1e-9);
}

#[test]
fn ik_undoes_fk_through_the_cli() {
    let fk = stdout_row(&fivebar(&["fk", "--theta1", "110", "--theta2", "70"]));
    let (x, z) = (fk[0].to_string(), fk[1].to_string());
    let ik = stdout_row(&fivebar(&["ik", "--x", &x, "--z", &z]));
    assert!((ik[0] - 110.0).abs() < 1e-6 && (ik[1] - 70.0).abs() < 1e-6);
}

#[test]
fn feas_emits_json() {
    let out = fivebar(&["feas", "--x", "50.6", "--z", "150"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.is_object());
}

#[test]
fn plan_hits_the_configured_waypoints() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("profiles");
    assert_eq!(code(&["plan", "--out-dir", out_dir.to_str().unwrap()]), 0);
    let cfg = ProjectConfig::prototype();
    for (file, waypoints) in [
        ("m1_profile.csv", cfg.waypoints.m1_deg),
        ("m2_profile.csv", cfg.waypoints.m2_deg),
    ] {
        let (times, angles) = io::read_profile_csv(&out_dir.join(file)).unwrap();
        for (tc, expected) in [0.0, 2.5, 5.0, 7.5, 10.0].into_iter().zip(waypoints) {
            let k = times
                .iter()
                .position(|t| (t - tc).abs() < 1e-9)
                .expect("control time sampled");
            assert!((angles[k] - expected).abs() < 1e-6, "{file} at {tc}: {}", angles[k]);
        }
    }
}

#[test]
fn outputs_feed_the_next_stage_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    assert_eq!(code(&["plan", "--out-dir", &p("prof")]), 0);
    let (m1, m2) = (p("prof/m1_profile.csv"), p("prof/m2_profile.csv"));
    assert_eq!(
        code(&[
            "schedule",
            "--m1",
            &m1,
            "--m2",
            &m2,
            "--cycles",
            "2",
            "--out",
            &p("s.csv")
        ]),
        0
    );
    let sched = io::read_schedule_csv(Path::new(&p("s.csv"))).unwrap();
    let n = io::read_profile_csv(Path::new(&m1)).unwrap().0.len();
    assert_eq!(sched.len(), 2 * n - 1);
    assert_eq!(
        code(&[
            "plot",
            "--input",
            &m1,
            "--x",
            "t_s",
            "--y",
            "theta_deg",
            "--out",
            &p("m1.svg")
        ]),
        0
    );
    assert!(std::fs::read_to_string(p("m1.svg")).unwrap().contains("<polyline"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let missing = missing.to_str().unwrap();
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["frobnicate"]), 3);
    assert_eq!(code(&["fk", "--theta1", "120"]), 4);
    assert_eq!(code(&["fk", "--theta1", "abc", "--theta2", "60"]), 4);
    assert_eq!(
        code(&["plan", "--out-dir", dir.path().to_str().unwrap(), "--rate", "-1"]),
        4
    );
    assert_eq!(code(&["synth", "--desired", missing, "--out", "x.json"]), 5);
    assert_eq!(
        code(&["fk", "--theta1", "120", "--theta2", "60", "--config", missing]),
        5
    );
    assert_eq!(code(&["fk", "--theta1", "180", "--theta2", "0"]), 6);
    assert_eq!(code(&["ik", "--x", "50.6", "--z", "1000"]), 6);
}

#[test]
fn malformed_config_is_a_file_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[mechanism]\nl0 = \"wide\"\n").unwrap();
    let out = fivebar(&[
        "fk",
        "--theta1",
        "120",
        "--theta2",
        "60",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(5));
    assert!(!out.stderr.is_empty());
}
