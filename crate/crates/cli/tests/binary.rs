use std::process::Command;

fn czdc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_czdc"))
}

#[test]
fn run_writes_the_csv() {
    let dir = std::env::temp_dir().join(format!("czdc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("quad.csv");
    let status = czdc()
        .args([
            "run",
            "--example",
            "quad2d",
            "--steps",
            "5",
            "--runs",
            "3",
            "--seed",
            "4",
            "--enclosure",
            "partope",
        ])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8(status.stdout).unwrap();
    assert!(stdout.contains("violations     0"));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 6);
    assert!(csv.starts_with("run,k,stage_time_ms,area,contained,lo_1,hi_1,lo_2,hi_2\n"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn rejects_unknown_benchmarks() {
    let out = czdc().args(["run", "--example", "pendulum"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn zero_runs_is_an_error() {
    let out = czdc()
        .args(["run", "--example", "quad2d", "--runs", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let out = czdc().arg("selftest").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}
