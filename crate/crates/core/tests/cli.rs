use std::path::Path;
use std::process::{Command, Output};

fn droplet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_droplet"))
        .args(args)
        .env("DROPLET_LOG", "error")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_lists_every_flag_with_a_default() {
    for sub in ["exact-check", "solve", "evolve", "counterexample"] {
        let out = droplet(&[sub, "--help"]);
        assert!(out.status.success(), "{sub}");
        let text = stdout(&out);
        let flags: Vec<&str> = text
            .lines()
            .map(str::trim_start)
            .filter(|l| l.starts_with("--") && !l.starts_with("--help"))
            .collect();
        assert!(!flags.is_empty(), "{sub}");
        for line in flags {
            assert!(line.contains("[default: "), "{sub}: `{line}` has no default");
        }
    }
}

#[test]
fn exact_check_passes_and_writes_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = droplet(&["exact-check", "--a", "2", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(!stdout(&out).contains("FAIL"), "{}", stdout(&out));
    let profile = std::fs::read_to_string(dir.path().join("edge_profile.csv")).unwrap();
    assert_eq!(profile.lines().next(), Some("x,V,V2"));
}

#[test]
fn solve_disk_writes_curve_and_flux() {
    let dir = tempfile::tempdir().unwrap();
    let out = droplet(&[
        "solve",
        "--shape",
        "disk",
        "--N",
        "128",
        "--out",
        path(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let flux = std::fs::read_to_string(dir.path().join("flux.csv")).unwrap();
    assert_eq!(flux.lines().next(), Some("s,x,y,flux,normalized_gradient"));
    assert_eq!(flux.lines().count(), 129);
    let curve = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 129);
}

#[test]
fn evolve_is_deterministic() {
    let config = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(
        config.path(),
        r#"{"shape": {"kind": "disk", "radius": 1.0}, "N": 96, "t_end": 0.01, "dt_max": 2e-3}"#,
    )
    .unwrap();
    let runs: Vec<String> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let out = droplet(&[
                "evolve",
                "--config",
                path(config.path()),
                "--out",
                path(dir.path()),
            ]);
            assert!(out.status.success(), "{}", stderr(&out));
            assert!(dir.path().join("final_curve.csv").exists());
            std::fs::read_to_string(dir.path().join("series.csv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert!(runs[0].starts_with("t,area,lambda,min_flux,max_flux,min_curv,convex,G\n"));
    assert_eq!(runs[0].lines().count(), 7, "header, t = 0 and five steps");
}

#[test]
fn counterexample_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = droplet(&[
        "counterexample",
        "--fillet",
        "0.05",
        "--N",
        "400",
        "--dt-max",
        "5e-4",
        "--t-end",
        "2e-3",
        "--out",
        path(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"]["status"], "broken");
    assert_eq!(report["verdict"]["agree"], true);
    let gap = std::fs::read_to_string(dir.path().join("gap.csv")).unwrap();
    assert_eq!(gap.lines().next(), Some("t,G,min_curvature,convex_flag"));
    assert!(dir.path().join("series.csv").exists());
    assert!(dir.path().join("overlay_00.svg").exists());
}

#[test]
fn bad_input_exits_with_one() {
    let config = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(config.path(), r#"{"cfl": 0}"#).unwrap();
    let out = droplet(&["evolve", "--config", path(config.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("cfl"), "{}", stderr(&out));

    std::fs::write(config.path(), r#"{"dtmax": 1e-3}"#).unwrap();
    let out = droplet(&["solve", "--config", path(config.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("dtmax"));

    assert_eq!(
        droplet(&["counterexample", "--law", "linear"]).status.code(),
        Some(1)
    );
    assert_eq!(
        droplet(&["counterexample", "--pair", "0.7"]).status.code(),
        Some(1)
    );
    assert_eq!(droplet(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        droplet(&["counterexample", "--fillet", "0.2", "--pair", "0.7,0.9"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn numerical_failure_exits_with_two() {
    // No solve can meet a residual tolerance below round-off.
    let config = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(
        config.path(),
        r#"{"shape": {"kind": "disk", "radius": 1.0}, "N": 64, "solver": {"residual_tolerance": 1e-30}}"#,
    )
    .unwrap();
    let out = droplet(&["solve", "--config", path(config.path())]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("ill-conditioned"), "{}", stderr(&out));
}
