use std::fs;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l1-obstacle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_shows_every_fixture() {
    let o = cli(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for id in ["phi1_1d", "hemisphere_2d", "minimal_surface_osc", "two_phase_branching", "hs_circles"] {
        assert!(text.contains(id), "{id} missing from:\n{text}");
    }
}

#[test]
fn run_writes_report_and_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("phi2");
    let o = cli(&["run", "phi2_1d", "--n", "129", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("converged = true"));
    assert!(report.contains("linf_error"));
    let solution = fs::read_to_string(out.join("solution.csv")).unwrap();
    assert_eq!(solution.lines().count(), 130);
    assert!(out.join("history.csv").exists());
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("out");
    fs::write(
        &cfg,
        format!("# two-phase\nproblem = two_phase_sym\nn = 65\ntol = 1e-6\nout = {}\n", out.display()),
    )
    .unwrap();
    let o = cli(&["run", "--config", cfg.to_str().unwrap(), "--n", "33"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("n = 33"));
    assert!(report.contains("problem = two_phase_sym"));
}

#[test]
fn refinement_study_reports_a_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study");
    let o = cli(&["study", "phi2_1d", "refine", "64,128,256", "--tol", "1e-9", "--max-outer", "1000000", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let study = fs::read_to_string(out.join("study.csv")).unwrap();
    assert_eq!(study.lines().count(), 4);
    let rate: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("rate = "))
        .and_then(|v| v.trim().parse().ok())
        .expect("rate line");
    assert!(rate > 1.5, "rate {rate}");
    for n in [64, 128, 256] {
        assert!(out.join(format!("n{n}")).join("solution.csv").exists());
    }
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(cli(&["run", "no_such_problem"]).status.code(), Some(2));
    assert_eq!(cli(&["run", "phi1_1d", "--n", "4"]).status.code(), Some(2));
    assert_eq!(cli(&["run", "phi1_1d", "--lambda", "-1"]).status.code(), Some(2));
    assert_eq!(cli(&["run", "phi1_1d", "--set", "colour=blue"]).status.code(), Some(2));
    assert_eq!(cli(&["check", "--only", "11"]).status.code(), Some(2));
    assert_eq!(cli(&["run", "--config", "/nonexistent/run.cfg"]).status.code(), Some(2));
}

#[test]
fn unconverged_run_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("short");
    let o = cli(&["run", "phi1_1d", "--max-outer", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(fs::read_to_string(out.join("report.txt")).unwrap().contains("converged = false"));
}

#[test]
fn check_runs_a_single_criterion() {
    let o = cli(&["check", "--only", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("PASS [ 1]"));
}

#[test]
fn custom_hele_shaw_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("hs.cfg");
    let out = dir.path().join("hs");
    fs::write(
        &cfg,
        format!(
            "problem = hele_shaw\nn = 49\ndomain = -3 3\nslot = circle 0 0 0.4\ninitial_fluid = circle 0 0 1\nt = 0.1\ntol = 1e-5\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = cli(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(out.join("boundary.csv").exists());
}
