use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use landau_core::grid::make_maxwellian;
use landau_core::io::write_snapshot;
use landau_core::{DistributionState, VelocityGrid};
use serde_json::Value;

const MAXWELLIAN: &str = "\
[model]
gamma = -3.0
[grid]
N = 8
L = 4.0
[initial]
kind = \"maxwellian\"
[solver]
T = 0.1
dt_max = 0.02
[diagnostics]
snapshot_every = 2
";

const UNSTABLE: &str = "\
[model]
gamma = 0.0
[grid]
N = 8
L = 4.0
[initial]
kind = \"maxwellian\"
temperature = 2.0
[solver]
T = 1.0
cfl = 5.0
";

const MIXTURE: &str = "\
seed = 41
[model]
gamma = -2.0
[grid]
N = 8
L = 4.0
[initial]
kind = \"mixture\"
spread = 0.5
[solver]
T = 0.05
dt_max = 0.01
";

fn landau(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_landau"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn landau")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout_path(out: &Output) -> PathBuf {
    PathBuf::from(String::from_utf8(out.stdout.clone()).unwrap().trim())
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_times(path: &Path) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let col = r.headers().unwrap().iter().position(|h| h == "time").unwrap();
    r.records().map(|rec| rec.unwrap()[col].parse().unwrap()).collect()
}

#[test]
fn maxwellian_preset_completes_with_monotone_times() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", MAXWELLIAN);
    let out = landau(&["simulate", "--config", cfg.to_str().unwrap(), "--out", "runs"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join(stdout_path(&out));
    assert_eq!(run.file_name().unwrap(), "run-000");
    let times = csv_times(&run.join("trajectory.csv"));
    assert!(times.len() >= 6, "{times:?}");
    assert!(times.windows(2).all(|w| w[1] > w[0]), "{times:?}");
    assert!((times.last().unwrap() - 0.1).abs() < 1e-12);
    let manifest = read_json(&run.join("manifest.json"));
    assert_eq!(manifest["status"], "completed");
    assert!(manifest["failure"].is_null());
    assert_eq!(manifest["config"]["grid"]["N"], 8);
    assert_eq!(manifest["tool"]["name"], "landau-cli");
    for snap in manifest["snapshots"].as_array().unwrap() {
        assert!(run.join(snap.as_str().unwrap()).is_file());
    }
}

#[test]
fn unstable_cfl_exits_nonzero_and_keeps_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", UNSTABLE);
    let out = landau(&["simulate", "--config", cfg.to_str().unwrap(), "--out", "runs"], dir.path());
    assert_eq!(out.status.code(), Some(landau_cli::EXIT_UNSTABLE as i32));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unstable step"));
    let run = dir.path().join(stdout_path(&out));
    let manifest = read_json(&run.join("manifest.json"));
    assert_eq!(manifest["status"], "unstable");
    assert!(manifest["failure"]["reason"].as_str().unwrap().contains("sup-norm change"));
    assert!(!csv_times(&run.join("trajectory.csv")).is_empty());
    assert!(run.join("final.snap").is_file());
}

#[test]
fn missing_grid_n_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", &MAXWELLIAN.replace("N = 8\n", ""));
    let out = landau(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("grid.N"), "{err}");
    assert!(!dir.path().join("out").exists(), "no run directory on a parse error");
}

#[test]
fn identical_config_and_seed_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", MIXTURE);
    let run = |seed: &str| {
        let out = landau(
            &["simulate", "--config", cfg.to_str().unwrap(), "--out", "runs", "--seed", seed],
            dir.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        dir.path().join(stdout_path(&out))
    };
    let a = run("5");
    let b = run("5");
    let c = run("6");
    assert_ne!(a, b, "runs never share a directory");
    let bytes = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(bytes(&a, "trajectory.csv"), bytes(&b, "trajectory.csv"));
    assert_eq!(bytes(&a, "final.snap"), bytes(&b, "final.snap"));
    assert_ne!(bytes(&a, "final.snap"), bytes(&c, "final.snap"));
    let strip = |d: &Path| {
        let mut m = read_json(&d.join("manifest.json"));
        m.as_object_mut().unwrap().remove("generated");
        m
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(strip(&a)["seed"], 5);
}

fn report(snapshot: &Path, extra: &[&str]) -> Value {
    let mut args = vec!["report", "--snapshot", snapshot.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = landau(&args, snapshot.parent().unwrap());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn report_of_stored_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let g = VelocityGrid::new(16, 6.0).unwrap();
    let m = dir.path().join("m.snap");
    write_snapshot(&m, &make_maxwellian(g, 1.0, [0.0; 3], 1.0).unwrap(), -2.0).unwrap();
    let r = report(&m, &[]);
    assert!((r["m0"].as_f64().unwrap() - 1.0).abs() <= 1e-6, "{r}");
    assert_eq!(r["gamma"], -2.0);

    let r = report(&m, &["--gamma", "-3"]);
    assert_eq!(r["p"], 1.5);

    let z = dir.path().join("z.snap");
    write_snapshot(&z, &DistributionState::zeros(g), 0.0).unwrap();
    let r = report(&z, &[]);
    for key in ["m0", "s0", "e0", "p0", "sup_f", "inf_ball"] {
        assert_eq!(r[key], 0.0, "{key}: {r}");
    }
}

#[test]
fn report_rejects_a_version_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.snap");
    write_snapshot(&p, &DistributionState::zeros(VelocityGrid::new(4, 2.0).unwrap()), 0.0).unwrap();
    let mut bytes = std::fs::read(&p).unwrap();
    bytes[8] = 2;
    std::fs::write(&p, bytes).unwrap();
    let out = landau(&["report", "--snapshot", p.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("format version 2"));
}

fn audit(selector: &str) -> (Output, Option<Value>) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", MAXWELLIAN);
    let out = landau(
        &["audit", "--config", cfg.to_str().unwrap(), "--audit", selector, "--out", "audits"],
        dir.path(),
    );
    let doc = out
        .status
        .success()
        .then(|| read_json(&dir.path().join(stdout_path(&out)).join("findings.json")));
    (out, doc)
}

#[test]
fn moser_audit_reports_the_limits() {
    let (out, doc) = audit("moser");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = doc.unwrap();
    let f = &doc["findings"][0];
    assert_eq!(f["audit"], "moser-constants");
    assert_eq!(f["verdict"], "pass");
    assert_eq!(f["measured"]["limit_inverse"], 19.0 / 4.0);
    assert_eq!(f["measured"]["limit_weighted"], 893.0 / 4.0);
    assert_eq!(doc["any_failed"], false);
}

#[test]
fn calc_audit_reports_the_unrestricted_region() {
    let (out, doc) = audit("calc");
    assert!(out.status.success());
    let f = &doc.unwrap()["findings"][0];
    assert_eq!(f["verdict"], "pass");
    let regions = f["measured"]["unrestricted_regions"].as_array().unwrap();
    let quarter = regions.iter().find(|r| r["mu"] == 0.25).unwrap();
    assert!(quarter["failing_interval"].is_array(), "{quarter}");
}

#[test]
fn unknown_selector_lists_the_options() {
    let (out, _) = audit("entropy");
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    for name in [
        "coeff-bounds", "divergence-identity", "form-equivalence", "moser", "calc", "scaling",
        "barrier", "interpolation", "all",
    ] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn state_audits_run_on_the_configured_state() {
    for selector in ["divergence-identity", "form-equivalence", "scaling", "barrier", "interpolation"] {
        let (out, doc) = audit(selector);
        assert!(out.status.success(), "{selector}: {}", String::from_utf8_lossy(&out.stderr));
        let doc = doc.unwrap();
        assert!(!doc["findings"].as_array().unwrap().is_empty(), "{selector}");
        assert_eq!(doc["selector"], selector);
    }
}
