use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn smectic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smectic")).args(args).output().expect("binary runs")
}

fn smectic_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smectic")).env("SMECTIC_THREADS", threads).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn assert_manifest_complete(dir: &Path) {
    let m = manifest(dir);
    for a in m["artifacts"].as_array().unwrap() {
        let p = dir.join(a["path"].as_str().unwrap());
        assert!(p.is_file(), "{} listed but missing", p.display());
        assert_eq!(fs::metadata(&p).unwrap().len(), a["bytes"].as_u64().unwrap());
    }
    let leftovers: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "partial"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn jumpcost_examples() {
    let o = smectic(&["jumpcost", "--aplus", "1", "--aminus", "-1"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert!((v["cost"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert!((v["first_form"].as_f64().unwrap() - v["second_form"].as_f64().unwrap()).abs() < 1e-15);

    let v = stdout_json(&smectic(&["jumpcost", "--aplus", "0.7", "--aminus", "0.7"]));
    assert_eq!(v["cost"].as_f64(), Some(0.0));
    assert_eq!(v["degenerate"], Value::Bool(true));

    let v = stdout_json(&smectic(&["jumpcost", "--aplus", "2", "--aminus", "0"]));
    assert!((v["cost"].as_f64().unwrap() - 0.471405).abs() < 1e-6);
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(code(&smectic(&["jumpcost", "--aplus", "1"])), 2);
    assert_eq!(code(&smectic(&["jumpcost", "--aplus", "nan", "--aminus", "0"])), 2);
    assert_eq!(code(&smectic(&["profile", "--aplus", "1", "--aminus", "1", "--eps", "0.05"])), 2);
    assert_eq!(code(&smectic(&["profile", "--aplus", "1", "--aminus", "-1", "--eps", "-0.1"])), 2);
    assert_eq!(code(&smectic(&["profile", "--aplus", "1", "--aminus", "-1"])), 2);
    assert_eq!(code(&smectic(&["minimize", "--aplus", "1", "--aminus", "-1", "--eps", "0.1", "--init", "random"])), 2);
    assert_eq!(code(&smectic(&["minimize", "--aplus", "1", "--aminus", "-1", "--eps", "0.1", "--n-s", "4"])), 2);
    assert_eq!(code(&smectic(&["sweep", "--aplus", "1", "--aminus", "-1", "--eps-list", "0.1", "--p-list", "0.5"])), 2);
    assert_eq!(code(&smectic(&["check", "--suite", "nonsense"])), 2);
    assert_eq!(code(&smectic(&["frobnicate"])), 2);
    assert_eq!(code(&smectic_threads("zero", &["jumpcost", "--aplus", "1", "--aminus", "0"])), 2);
    assert_eq!(code(&smectic(&["--help"])), 0);
}

#[test]
fn ode_failure_exits_3() {
    let o = smectic(&["profile", "--aplus", "3", "--aminus", "-3", "--eps", "0.1", "--step", "2", "--horizon", "10"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("refine the step"));
}

#[test]
fn profile_writes_artifacts_and_monotone_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = smectic(&[
        "profile", "--aplus", "1", "--aminus", "-1", "--eps-list", "0.1,0.05,0.025", "--out", out.to_str().unwrap(), "--strict",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_manifest_complete(&out);
    let m = manifest(&out);
    assert_eq!(m["command"], "profile");
    assert_eq!(m["acceptance"]["excess_decreasing"], Value::Bool(true));

    let table = fs::read_to_string(out.join("oned.csv")).unwrap();
    let excess: Vec<f64> = table.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(excess.len(), 3);
    assert!(excess.windows(2).all(|w| w[1] < w[0]));
    let r005: f64 = table.lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((r005 - 2.0 / 3.0).abs() < 1e-2);

    let prof = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert_eq!(prof.lines().next(), Some("t,g,W"));
    assert!(fs::read_to_string(out.join("plot_profile.py")).unwrap().contains("matplotlib"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# unit jump\naplus = 1\naminus = -1\n").unwrap();
    let o = smectic(&["jumpcost", "--config", conf.to_str().unwrap()]);
    assert!((stdout_json(&o)["cost"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    let o = smectic(&["jumpcost", "--config", conf.to_str().unwrap(), "--aminus", "0", "--aplus=2"]);
    assert!((stdout_json(&o)["cost"].as_f64().unwrap() - 0.471405).abs() < 1e-6);

    fs::write(&conf, "aplus = 1\naminus = -1\nbogus = 3\n").unwrap();
    assert_eq!(code(&smectic(&["jumpcost", "--config", conf.to_str().unwrap()])), 2);
    assert_eq!(code(&smectic(&["jumpcost", "--config", dir.path().join("absent").to_str().unwrap()])), 2);
}

#[test]
fn minimize_verdict_and_strict_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("min");
    let o = smectic(&["minimize", "--aplus", "1", "--aminus", "-1", "--eps", "0.1", "--out", out.to_str().unwrap(), "--strict"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_manifest_complete(&out);
    let acc = &manifest(&out)["acceptance"];
    for key in ["converged", "sandwich_lower", "sandwich_upper", "below_discrete_ansatz"] {
        assert_eq!(acc[key], Value::Bool(true), "{key}");
    }
    assert!(out.join("u_star.field").is_file() && out.join("history.csv").is_file());

    let cut = ["minimize", "--aplus", "1", "--aminus", "-1", "--eps", "0.1", "--init", "linear", "--max-iterations", "1"];
    assert_eq!(code(&smectic(&cut)), 0);
    let strict: Vec<&str> = cut.iter().copied().chain(["--strict"]).collect();
    assert_eq!(code(&smectic(&strict)), 4);
}

#[test]
fn check_formulas_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chk");
    let o = smectic(&["check", "--suite", "formulas", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("PASS formulas/dual_formula_agreement"));
    assert!(!text.contains("FAIL"));
    assert_manifest_complete(&out);
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = smectic_threads(
            threads,
            &["sweep", "--aplus", "2", "--aminus", "0", "--eps-list", "0.1,0.05,0.025", "--out", out.to_str().unwrap()],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert_manifest_complete(&out);
        out
    };
    let (a, b, c) = (run("1", "a"), run("4", "b"), run("4", "c"));
    for f in ["sweep.csv", "sweep.json"] {
        let x = fs::read(a.join(f)).unwrap();
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f} differs across thread counts");
        assert_eq!(x, fs::read(c.join(f)).unwrap(), "{f} differs across runs");
    }
    let csv = fs::read_to_string(a.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().next().unwrap().contains("lp_inf"));
}

#[test]
fn minimize_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = smectic_threads(
            threads,
            &[
                "minimize", "--aplus", "0", "--aminus", "2", "--eps", "0.1", "--init", "random", "--seed", "11", "--n-s", "81",
                "--out", out.to_str().unwrap(),
            ],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("1", "a"), run("3", "b"));
    for f in ["u_star.field", "u_star.json", "history.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}
