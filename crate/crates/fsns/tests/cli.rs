use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fsns::artifacts::{sha256_hex, RunManifest};
use fsns::commands::{rung_file, CheckReport, RateArtifact, RungArtifact};
use fsns::snapshot;
use fsns_core::ldp::SanityReport;
use fsns_core::spectral::Mode;

fn fsns(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fsns"));
    c.args(args).arg("--out").arg(out);
    if let Some(cfg) = config {
        c.arg("--config").arg(cfg);
    }
    c.output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const SINGLE_MODE: &str = r#"
seed = 3
[sim]
k_max = 4
alpha = 1.5
nu = 0.5
t_final = 1.0
dt = 0.01
epsilon = 0.0
[initial]
preset = "single_mode"
mode = [2, 1]
amplitude = 0.8
"#;

#[test]
fn single_mode_energy_decays_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", SINGLE_MODE);
    let out = tmp.path().join("run");
    let o = fsns(&["simulate"], Some(&cfg), &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("energy.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,H1_norm_sq,H1a2_norm_sq,trilinear_residual"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 101);
    let rate = 2.0 * 0.5 * 5f64.powf(0.75);
    let (e0, last) = (rows[0][1], rows.last().unwrap());
    assert!((last[0] - 1.0).abs() < 1e-12);
    assert!((last[1] - e0 * (-rate).exp()).abs() <= 1e-10 * e0);
    // the final snapshot carries the same state
    let snap = snapshot::read_file(&out.join("final.fsns"), 2.0 / 3.0).unwrap();
    let amp = snap.field.get(Mode(2, 1)).re;
    assert!((amp - 0.8 * (-rate / 2.0).exp()).abs() < 1e-12);
    assert_eq!((snap.alpha, snap.nu, snap.time), (1.5, 0.5, 1.0));
}

#[test]
fn reruns_are_byte_identical_and_manifest_matches() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        &SINGLE_MODE.replace("epsilon = 0.0", "epsilon = 0.05").replace("[initial]", "[outputs]\nsnapshot_every = 25\n[initial]"),
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(fsns(&["simulate"], Some(&cfg), &a).status.success());
    assert!(fsns(&["simulate"], Some(&cfg), &b).status.success());
    assert_eq!(fs::read(a.join("energy.csv")).unwrap(), fs::read(b.join("energy.csv")).unwrap());
    let m = RunManifest::load(&a).unwrap();
    assert_eq!(m.status, "complete");
    assert_eq!(m.outputs, RunManifest::load(&b).unwrap().outputs);
    assert!(m.outputs.contains_key("snapshots/step_0000025.fsns"));
    for (rel, hash) in &m.outputs {
        assert_eq!(&sha256_hex(&fs::read(a.join(rel)).unwrap()), hash, "{rel}");
    }
    // a different seed moves the noise
    let o = Command::new(env!("CARGO_BIN_EXE_fsns"))
        .args(["simulate", "--seed", "4", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("c"))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_ne!(fs::read(a.join("energy.csv")).unwrap(), fs::read(tmp.path().join("c/energy.csv")).unwrap());
}

#[test]
fn missing_key_exits_2_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", &SINGLE_MODE.replace("nu = 0.5\n", ""));
    let o = fsns(&["simulate"], Some(&cfg), &tmp.path().join("run"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`nu`"));
    assert!(!tmp.path().join("run").exists());

    let cfg = write(tmp.path(), "d.toml", &SINGLE_MODE.replace("seed = 3\n", ""));
    let o = fsns(&["simulate"], Some(&cfg), &tmp.path().join("run"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`seed`"));
}

#[test]
fn rate_without_target_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", SINGLE_MODE);
    let o = fsns(&["rate"], Some(&cfg), &tmp.path().join("run"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("target"));
}

#[test]
fn blowup_exits_3_and_keeps_partial_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        "seed = 1\n[sim]\nk_max = 32\nalpha = 1.0\nnu = 0.001\nt_final = 1.0\ndt = 0.05\nepsilon = 0.0\n\
         [initial]\npreset = \"random_smooth(1.0)\"\namplitude = 200.0\n",
    );
    let out = tmp.path().join("run");
    let o = fsns(&["simulate"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(3));
    let m = RunManifest::load(&out).unwrap();
    assert_eq!(m.status, "blowup");
    assert!(m.outputs.contains_key("energy.csv") && m.outputs.contains_key("last_finite.fsns"));
    assert!(!out.join("final.fsns").exists());
}

#[test]
fn identities_pass_and_report_parses() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("id");
    let o = fsns(&["check", "identities"], None, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: CheckReport = serde_json::from_str(&fs::read_to_string(out.join("check_identities.json")).unwrap()).unwrap();
    assert!(r.pass && r.failures.is_empty());
    assert_eq!(r.suite, "identities");
    assert!(r.checks.iter().any(|c| c.name == "curl_biot_savart_inverse"));
    assert!(r.checks.iter().any(|c| c.name.starts_with("trilinear_h1_cancellation (K = 32)")));
    assert_eq!(RunManifest::load(&out).unwrap().command, "check identities");
}

const CHECKS: &str = "seed = 0\n[sim]\nk_max = 4\nalpha = 1.5\nnu = 1.0\nt_final = 1.0\nepsilon = 0.0\n\
                      [check]\ntrials = 10\ngrids = [4, 8]\n";

#[test]
fn inadmissible_estimate_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{CHECKS}[[check.estimates]]\nname = \"bilinear\"\nalpha = 1.5\neta = 0.75\n");
    let cfg = write(tmp.path(), "c.toml", &text);
    let o = fsns(&["check", "estimates"], Some(&cfg), &tmp.path().join("e"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("inadmissible"));
}

#[test]
fn explicit_estimates_are_certified() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        "{CHECKS}[[check.estimates]]\nname = \"interpolation\"\nalpha = 2.0\neta = 1.0\n\
         [[check.estimates]]\nname = \"bilinear\"\nalpha = 1.0\neta = 1.0\n"
    );
    let cfg = write(tmp.path(), "c.toml", &text);
    let out = tmp.path().join("e");
    let o = fsns(&["check", "estimates"], Some(&cfg), &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: CheckReport = serde_json::from_str(&fs::read_to_string(out.join("check_estimates.json")).unwrap()).unwrap();
    assert_eq!(r.estimates.len(), 2);
    assert!(r.estimates[0].max_ratio <= 1.0);
}

#[test]
fn failing_noise_check_exits_1_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    // too few draws for the 5% variance tolerance
    let cfg = write(tmp.path(), "c.toml", &format!("{CHECKS}noise_samples = 3\n"));
    let o = fsns(&["check", "noise"], Some(&cfg), &tmp.path().join("n"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("increment_variance_rel_error"));
}

const OU: &str = r#"
seed = 5
[sim]
k_max = 1
alpha = 2.0
nu = 1.0
t_final = 1.0
dt = 0.01
epsilon = 0.1
nonlinear = false
[covariance]
noise_modes = 1
[initial]
preset = "single_mode"
amplitude = 0.0
[target]
kind = "endpoint_ball"
radius = 0.3
[ldp]
epsilons = [0.1, 0.05]
samples = 2000
"#;

#[test]
fn zero_cost_target_gives_zero_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", &OU.replace("radius = 0.3", "radius = 0.3\noutside = false"));
    let out = tmp.path().join("rate");
    assert!(fsns(&["rate"], Some(&cfg), &out).status.success());
    let r: RateArtifact = serde_json::from_str(&fs::read_to_string(out.join("rate.json")).unwrap()).unwrap();
    assert_eq!(r.energy, 0.0);
    assert!(r.converged);
}

#[test]
fn rate_control_drives_skeleton_to_target() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", OU);
    let out = tmp.path().join("rate");
    assert!(fsns(&["rate"], Some(&cfg), &out).status.success());
    let r: RateArtifact = serde_json::from_str(&fs::read_to_string(out.join("rate.json")).unwrap()).unwrap();
    assert!(r.converged && r.energy > 0.0);
    let control = out.join("rate_control.fsns");
    let n = snapshot::decode_all(&fs::read(&control).unwrap(), 2.0 / 3.0).unwrap().len();
    assert_eq!(n, r.control_intervals);
    let text = format!("{OU}[control]\npath = {:?}\n", control.to_str().unwrap());
    let cfg = write(tmp.path(), "s.toml", &text);
    let sk = tmp.path().join("skel");
    assert!(fsns(&["skeleton"], Some(&cfg), &sk).status.success());
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(sk.join("summary.json")).unwrap()).unwrap();
    assert!((s["control_energy"].as_f64().unwrap() - r.energy).abs() < 1e-12);
    assert!(s["target_violation"].as_f64().unwrap() <= r.feasibility_tol);
}

#[test]
fn ldp_rerun_resumes_completed_rungs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", OU);
    let out = tmp.path().join("ldp");
    assert!(fsns(&["ldp"], Some(&cfg), &out).status.success());
    let rep: SanityReport = serde_json::from_str(&fs::read_to_string(out.join("sanity.json")).unwrap()).unwrap();
    assert_eq!(rep.curve.len(), 2);

    // a completed rung is read back, not recomputed: tamper with it and
    // the curve follows
    let file = out.join(rung_file(0.05));
    let mut rung: RungArtifact = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    rung.point.hits += 1;
    fs::write(&file, serde_json::to_string(&rung).unwrap()).unwrap();
    let o = fsns(&["ldp"], Some(&cfg), &out);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("2 rung(s) resumed"));
    let again: SanityReport = serde_json::from_str(&fs::read_to_string(out.join("sanity.json")).unwrap()).unwrap();
    assert_eq!(again.curve[1].hits, rep.curve[1].hits + 1);
    assert_eq!(again.curve[0], rep.curve[0]);

    // a changed sample count invalidates the rungs
    let cfg2 = write(tmp.path(), "d.toml", &OU.replace("samples = 2000", "samples = 1000"));
    let o = fsns(&["ldp"], Some(&cfg2), &out);
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 rung(s) resumed"));
    assert_eq!(RunManifest::load(&out).unwrap().outputs[&rung_file(0.1)], sha256_hex(&fs::read(out.join(rung_file(0.1))).unwrap()));
}
