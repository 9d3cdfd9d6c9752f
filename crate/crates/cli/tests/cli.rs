use std::path::PathBuf;
use std::process::{Command, Output};

fn assets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn reflex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reflex"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn run_free_space_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = assets().join("scenarios/free_space.json");
    let out = reflex(&[
        "run",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("success"));
    assert!(dir.path().join("summary.json").is_file());
}

#[test]
fn bad_inputs_exit_with_scenario_code() {
    assert_eq!(code(&reflex(&["run", "--scenario", "/nonexistent/scene.json"])), 2);
    let robot = assets().join("robots/ur_like.json");
    let out = reflex(&["reach", "build", "--robot", robot.to_str().unwrap(), "--link", "0", "--out", "/tmp/x.bin"]);
    assert_eq!(code(&out), 2);
    // Usage errors come from the argument parser.
    assert_eq!(code(&reflex(&["run"])), 2);
}

#[test]
fn sdf_build_then_query() {
    let dir = tempfile::tempdir().unwrap();
    let shape = dir.path().join("ball.json");
    std::fs::write(&shape, r#"{"primitive":"sphere","radius":0.2}"#).unwrap();
    let grid = dir.path().join("ball.sdf");
    let out = reflex(&[
        "sdf",
        "build",
        "--shape",
        shape.to_str().unwrap(),
        "--res",
        "0.02",
        "--gradients",
        "--out",
        grid.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let query = |p: &str| {
        let out = reflex(&["sdf", "query", "--grid", grid.to_str().unwrap(), "--point", p]);
        assert_eq!(code(&out), 0);
        let text = String::from_utf8(out.stdout).unwrap();
        let fields: Vec<f64> = text.split_whitespace().map(|v| v.parse().unwrap()).collect();
        assert_eq!(fields.len(), 4);
        fields
    };
    assert!(query("0,0,0")[0] < -0.15);
    let outside = query("0.25,0,0");
    assert!((outside[0] - 0.05).abs() < 0.03, "{outside:?}");
    assert!(outside[1] > 0.5);
}
