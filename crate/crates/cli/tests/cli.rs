use std::fs;
use std::process::Command;

fn gofair() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gofair"))
}

const SMALL: &str = "\
experiment = var_tbb_strength
grid = 0, 1
modes = S, C
seeds = 3
horizon_days = 200
";

#[test]
fn rerun_writes_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let st = gofair().arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap();
        assert!(st.success());
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "sweep,mode,mean_days,stddev_days,seed_0,seed_1,seed_2");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,S,"));
    assert!(lines[4].starts_with("1,C,"));
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let out = gofair().arg("--config").arg(&cfg).args(["--seeds", "1", "--set", "grid=1"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "sweep,mode,mean_days,stddev_days,seed_0");
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn unattacked_victim_survives_a_short_horizon() {
    let out = gofair()
        .args(["--experiment", "custom", "--seeds", "2", "--horizon-days", "20", "--set", "grid=0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for row in text.lines().skip(1) {
        let cols: Vec<_> = row.split(',').collect();
        assert_eq!(cols[2], "20", "{row}");
    }
}

#[test]
fn show_config_prints_the_preset() {
    let out = gofair().args(["--experiment", "attacker_ratio_10", "--show-config"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["device_count"], 10);
    assert_eq!(v["sweep"], "AttackerRatio");
}

#[test]
fn bad_configs_fail_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.cfg", "speed = 3\n"),
        ("range.cfg", "tbb_strength = 2\n"),
        ("syntax.cfg", "devices 4\n"),
        ("preset.cfg", "experiment = nope\n"),
        ("sched.cfg", "period_s = 10\ngroup_s = 60\n"),
    ];
    for (name, body) in cases {
        let cfg = dir.path().join(name);
        fs::write(&cfg, body).unwrap();
        let out = gofair().arg("--config").arg(&cfg).output().unwrap();
        assert!(!out.status.success(), "{name}");
        assert!(out.stdout.is_empty(), "{name}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.starts_with("gofair: invalid config"), "{name}: {err}");
    }
    let out = gofair().args(["--config", "/nonexistent/x.cfg"]).output().unwrap();
    assert!(!out.status.success());
}
