//! End-to-end runs of the `qsynapse` binary.

use std::path::Path;
use std::process::{Command, Output};

fn qsynapse(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsynapse"))
        .args(args)
        .env("QSYNAPSE_OUT_DIR", out_dir)
        .output()
        .expect("spawn qsynapse")
}

/// Splits a command line on whitespace; temp paths contain no spaces.
fn words(cmd: &str) -> Vec<&str> {
    cmd.split_whitespace().collect()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value<'a>(report: &'a str, key: &str) -> &'a str {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(" = ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{report}"))
}

const SHORT_EVOLVE: &[&str] = &["evolve", "--preset", "fig3-left-tau0.001", "--t-end", "100"];

#[test]
fn evolve_writes_csv_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let o = qsynapse(SHORT_EVOLVE, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout(&o);
    for l in report.lines() {
        assert!(l.contains(" = "), "not key = value: {l}");
    }
    let t: f64 = value(&report, "first_negativity_max_time").parse().unwrap();
    assert!((t - 31.4).abs() < 1.6);

    let csv = std::fs::read_to_string(dir.path().join("qsynapse-evolve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,p1,p2,r,negativity"));
    assert_eq!(lines.count(), 1001);
    assert_eq!(value(&report, "rows"), "1001");
}

#[test]
fn flags_override_config_which_overrides_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "preset = \"fig3-right-tau10\"\nt_end = 20\nsample_every = 1000\n").unwrap();
    let out = dir.path().join("custom.csv");
    let cmd = format!("evolve --preset fig3-left-tau500 --config {} --t-end 5 --out {}", cfg.display(), out.display());
    let o = qsynapse(&words(&cmd), dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    // t_end = 5 from the flag, sample_every = 1000 from the config: t = 0, 1, ..., 5.
    assert_eq!(csv.lines().count(), 7);
    assert!(!dir.path().join("qsynapse-evolve.csv").exists());
}

#[test]
fn errors_exit_nonzero_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = qsynapse(&["evolve", "--tau", "10"], dir.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`omega`") && err.contains("`t_end`"), "{err}");

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "mode = \"evolve\"\nomgea = 0.05\n").unwrap();
    let o = qsynapse(&["evolve", "--config", bad.to_str().unwrap()], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let o = qsynapse(&["evolve", "--preset", "fig9"], dir.path());
    assert!(!o.status.success());
    let o = qsynapse(&["fly"], dir.path());
    assert!(!o.status.success());

    let o = qsynapse(&["evolve", "--preset", "fig3-left-tau10", "--u", "1.5"], dir.path());
    assert!(!o.status.success());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1, "only bad.toml may exist");
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("no").join("such").join("dir.csv");
    let mut args = SHORT_EVOLVE.to_vec();
    args.extend(["--out", out.to_str().unwrap()]);
    let o = qsynapse(&args, dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("dir.csv"));
}

#[test]
fn ensemble_output_is_reproducible_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let cmd = format!(
            "ensemble --preset fig5-tau1 --n-traj 80 --t-end 900 --seed 5 --threads {threads} --out {}",
            out.display()
        );
        let o = qsynapse(&words(&cmd), dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let a = run("1", "a.csv");
    assert_eq!(a, run("1", "b.csv"));
    assert_eq!(a, run("3", "c.csv"));
    assert!(String::from_utf8_lossy(&a).starts_with("t,mean_p1,mean_p2,mean_r,stderr_p1\n"));
}

#[test]
fn trajectory_sweep_and_classical_modes() {
    let dir = tempfile::tempdir().unwrap();
    let o = qsynapse(&["trajectory", "--preset", "fig5-single-tau1", "--t-end", "300"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(value(&stdout(&o), "measurements"), "10");
    let csv = std::fs::read_to_string(dir.path().join("qsynapse-trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,p1,p2,r,negativity,s_c,meas\n"));

    let o = qsynapse(
        &["sweep-rmin", "--preset", "fig2", "--taus", "0.001,10", "--omegas", "0,0.1", "--t-end", "50"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(value(&stdout(&o), "r_min_over_r0[tau=10,omega=0]"), "1");

    let cmd = "classical-synapse --eps1 0 --eps2 0 --omega 0 --u 0.5 --tau 10 --dt 0.01 --t-end 400 --spike-rate 1";
    let o = qsynapse(&words(cmd), dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let avg: f64 = value(&stdout(&o), "time_average_second_half").parse().unwrap();
    assert!((avg - 0.131064).abs() < 1e-5);
}

#[test]
fn lists_presets() {
    let dir = tempfile::tempdir().unwrap();
    let o = qsynapse(&["presets"], dir.path());
    assert!(o.status.success());
    let names = stdout(&o);
    assert!(names.lines().any(|l| l == "fig3-right-tau100"));
    assert!(names.lines().any(|l| l == "fig5-tau10"));
}
