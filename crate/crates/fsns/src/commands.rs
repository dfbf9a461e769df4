//! The CLI commands. Each validates its inputs before touching the output
//! directory, writes its artifacts, and writes the manifest last.

use std::path::Path;

use fsns_core::checks::{noise_checks, structural_identities, trilinear_cancellations, CheckResult};
use fsns_core::dynamics::{ControlPath, Driver, Integrator, SimParams};
use fsns_core::ldp::{
    control_energy, estimate_ldp_rung, ldp_sanity_report, minimize_rate, summarize, CurvePoint, PenaltyRound,
    RateResult, SanityReport, TargetSet,
};
use fsns_core::operators::certify::{certify_estimate, CertifyConfig, Estimate, EstimateReport};
use fsns_core::operators::curl;
use fsns_core::spectral::{FieldKind, SpectralField, WaveGrid};
use fsns_core::stochastic::{CovarianceSpec, DiffusionSpec};
use serde::{Deserialize, Serialize};

use crate::artifacts::{energy_row, sha256_hex, ArtifactDir, EnergyTally, ENERGY_HEADER};
use crate::config::{CheckSection, RunConfig};
use crate::error::RunError;
use crate::snapshot::{self, Snapshot};

pub const STRUCTURAL_TOL: f64 = 1e-12;
pub const CANCELLATION_TOL: f64 = 1e-10;

pub fn config_hash(cfg: &RunConfig) -> String {
    sha256_hex(cfg.canonical().to_toml().as_bytes())
}

/// Creates the directory, runs `body`, and closes the run with a manifest
/// unless `body` failed for a reason other than blow-up.
fn with_artifacts(
    command: &str,
    cfg: &RunConfig,
    out: &Path,
    body: impl FnOnce(&mut ArtifactDir) -> Result<String, RunError>,
) -> Result<String, RunError> {
    let mut dir = ArtifactDir::create(out)?;
    dir.write("config.toml", cfg.canonical().to_toml().as_bytes())?;
    match body(&mut dir) {
        Ok(msg) => {
            dir.finish(command, "complete", config_hash(cfg), cfg.seed)?;
            Ok(msg)
        }
        Err(e @ RunError::BlowUp { .. }) => {
            dir.finish(command, "blowup", config_hash(cfg), cfg.seed)?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Serialize)]
struct TrajectorySummary {
    command: String,
    steps: usize,
    dt: f64,
    final_time: f64,
    energy: EnergyTally,
    energy_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    control_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_violation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    blowup_step: Option<usize>,
}

/// Streams a run into `energy.csv`, periodic snapshots and `final.fsns`
/// (`last_finite.fsns` after a blow-up).
fn record_run(
    dir: &mut ArtifactDir,
    command: &str,
    cfg: &RunConfig,
    integ: &Integrator,
    u0: &SpectralField,
    driver: Driver<'_>,
    extra: impl FnOnce(&SpectralField) -> Result<(Option<f64>, Option<f64>), RunError>,
) -> Result<String, RunError> {
    let p = *integ.params();
    let every = cfg.outputs.snapshot_every;
    let mut csv = String::from(ENERGY_HEADER);
    let mut tally = EnergyTally::default();
    let mut snaps: Vec<(usize, Vec<u8>)> = Vec::new();
    let mut last_t = 0.0;
    let result = integ.run_observed(u0, driver, |step, t, u| {
        let r = integ.energy_record(t, u)?;
        energy_row(&mut csv, &r);
        tally.push(&r, p.nu);
        if every > 0 && step % every == 0 {
            snaps.push((step, snapshot::encode(u, t, p.alpha, p.nu)));
        }
        last_t = t;
        Ok(())
    });
    dir.write("energy.csv", csv.as_bytes())?;
    for (step, bytes) in &snaps {
        dir.write(&format!("snapshots/step_{step:07}.fsns"), bytes)?;
    }
    let mut summary = TrajectorySummary {
        command: command.into(),
        steps: p.steps(),
        dt: p.dt,
        final_time: last_t,
        energy: tally,
        energy_ratio: tally.ratio(),
        control_energy: None,
        target_violation: None,
        blowup_step: None,
    };
    match result {
        Ok(u) => {
            dir.write("final.fsns", &snapshot::encode(&u, last_t, p.alpha, p.nu))?;
            (summary.control_energy, summary.target_violation) = extra(&u)?;
            dir.write_json("summary.json", &summary)?;
            Ok(format!("{command}: {} steps to t = {last_t}, |u(T)|² = {:e}", p.steps(), tally.terminal))
        }
        Err(fsns_core::Error::BlowUp { step, time, partial }) => {
            if let (Some(t), Some(u)) = (partial.times.last(), partial.states.last()) {
                dir.write("last_finite.fsns", &snapshot::encode(u, *t, p.alpha, p.nu))?;
            }
            summary.blowup_step = Some(step);
            dir.write_json("summary.json", &summary)?;
            Err(RunError::BlowUp { step, time })
        }
        Err(e) => Err(e.into()),
    }
}

struct Model {
    p: SimParams,
    q: CovarianceSpec,
    g: DiffusionSpec,
    u0: SpectralField,
}

fn model(cfg: &RunConfig) -> Result<Model, RunError> {
    Ok(Model { p: cfg.sim_params()?, q: cfg.covariance()?, g: cfg.diffusion()?, u0: cfg.initial_field()? })
}

fn integrator(m: &Model) -> Result<Integrator, RunError> {
    Integrator::new(&m.p, &m.q, &m.g).map_err(|e| RunError::Config(e.to_string()))
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    let m = model(cfg)?;
    m.u0.expect_kind(FieldKind::DivFreeVector).map_err(|e| RunError::Config(format!("initial: {e}")))?;
    let integ = integrator(&m)?;
    with_artifacts("simulate", cfg, out, |dir| {
        record_run(dir, "simulate", cfg, &integ, &m.u0, Driver::noise(cfg.seed, 0), |_| Ok((None, None)))
    })
}

/// Vorticity run from `curl u0` (or a scalar snapshot), noise path shared
/// with `simulate`.
pub fn vorticity(cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    let m = model(cfg)?;
    let theta0 = match m.u0.kind() {
        FieldKind::Scalar => m.u0.clone(),
        FieldKind::DivFreeVector => curl(&m.u0)?,
    };
    let integ = integrator(&m)?;
    with_artifacts("vorticity", cfg, out, |dir| {
        record_run(dir, "vorticity", cfg, &integ, &theta0, Driver::noise(cfg.seed, 0), |_| Ok((None, None)))
    })
}

pub fn load_control(cfg: &RunConfig, grid: WaveGrid, t_final: f64) -> Result<ControlPath, RunError> {
    let c = cfg.control.clone().unwrap_or(crate::config::ControlSection { path: None, intervals: 20 });
    match c.path {
        None => ControlPath::zero(grid, t_final, c.intervals).map_err(|e| RunError::Config(format!("control: {e}"))),
        Some(path) => {
            let bytes = std::fs::read(&path)
                .map_err(|e| RunError::Config(format!("control.path {}: {e}", path.display())))?;
            let snaps = snapshot::decode_all(&bytes, cfg.sim.dealias_fraction)
                .map_err(|e| RunError::Config(format!("control.path {}: {e}", path.display())))?;
            let values = snaps.into_iter().map(|s| s.field.resampled(grid)).collect();
            ControlPath::new(t_final, values).map_err(|e| RunError::Config(format!("control: {e}")))
        }
    }
}

pub fn control_snapshots(control: &ControlPath, p: &SimParams) -> Vec<Snapshot> {
    control
        .times()
        .into_iter()
        .zip(control.values())
        .map(|(t, v)| Snapshot { field: v.clone(), time: t, alpha: p.alpha, nu: p.nu })
        .collect()
}

fn free_endpoint(m: &Model) -> Result<SpectralField, RunError> {
    let mut p0 = m.p;
    p0.epsilon = 0.0;
    Ok(Integrator::new(&p0, &m.q, &m.g)?.endpoint(&m.u0, Driver::None)?)
}

pub fn skeleton(cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    let m = model(cfg)?;
    m.u0.expect_kind(FieldKind::DivFreeVector).map_err(|e| RunError::Config(format!("initial: {e}")))?;
    let control = load_control(cfg, m.p.grid, m.p.t_final)?;
    let target = match cfg.target {
        Some(_) => Some(cfg.target(&m.u0, || free_endpoint(&m))?),
        None => None,
    };
    let integ = integrator(&m)?;
    with_artifacts("skeleton", cfg, out, |dir| {
        let energy = control_energy(&control, &m.q)?;
        record_run(dir, "skeleton", cfg, &integ, &m.u0, Driver::Control(&control), |_| {
            let violation = match &target {
                Some(t) => Some(t.violation(&summarize(&integ, t, &m.u0, Driver::Control(&control))?)?),
                None => None,
            };
            Ok((Some(energy), violation))
        })
    })
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct RateArtifact {
    pub target: String,
    pub energy: f64,
    pub terminal_residual: f64,
    pub feasibility_tol: f64,
    pub iterations: usize,
    pub converged: bool,
    pub control_intervals: usize,
    pub rounds: Vec<PenaltyRound>,
}

fn rate_artifact(t: &TargetSet, r: &RateResult, tol: f64) -> RateArtifact {
    RateArtifact {
        target: t.description.clone(),
        energy: r.energy,
        terminal_residual: r.terminal_residual,
        feasibility_tol: tol,
        iterations: r.iterations,
        converged: r.converged,
        control_intervals: r.control.values().len(),
        rounds: r.rounds.clone(),
    }
}

fn write_rate(dir: &mut ArtifactDir, stem: &str, t: &TargetSet, r: &RateResult, p: &SimParams, tol: f64) -> Result<(), RunError> {
    dir.write_json(&format!("{stem}.json"), &rate_artifact(t, r, tol))?;
    let mut bytes = Vec::new();
    snapshot::write_all(&mut bytes, &control_snapshots(&r.control, p))?;
    dir.write(&format!("{stem}_control.fsns"), &bytes)?;
    Ok(())
}

pub fn rate(cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    let m = model(cfg)?;
    let target = cfg.target(&m.u0, || free_endpoint(&m))?;
    let opt = cfg.optimizer();
    with_artifacts("rate", cfg, out, |dir| {
        let r = minimize_rate(&target, &m.u0, &m.p, &m.q, &m.g, &opt)?;
        write_rate(dir, "rate", &target, &r, &m.p, opt.feasibility_tol)?;
        Ok(format!("rate: I = {:e}, residual = {:e}, converged = {}", r.energy, r.terminal_residual, r.converged))
    })
}

/// One Monte Carlo rung on disk; reused by a rerun when `key` matches.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct RungArtifact {
    pub key: String,
    pub point: CurvePoint,
}

/// Identifies the rung computation: every config entry except the list
/// of noise levels, plus the level itself.
fn rung_key(cfg: &RunConfig, epsilon: f64) -> String {
    let mut c = cfg.canonical();
    if let Some(l) = c.ldp.as_mut() {
        l.epsilons.clear();
    }
    sha256_hex(format!("{}\nepsilon = {epsilon:e}\n", c.to_toml()).as_bytes())
}

pub fn rung_file(epsilon: f64) -> String {
    format!("rungs/eps_{epsilon:e}.json")
}

fn curve_csv(curve: &[CurvePoint]) -> String {
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:e}"));
    let mut s = String::from("epsilon,samples,hits,p_hat,wilson_low,wilson_high,eps_log_p,eps_log_p_low,eps_log_p_high\n");
    for c in curve {
        s.push_str(&format!(
            "{:e},{},{},{:e},{:e},{:e},{},{},{:e}\n",
            c.epsilon,
            c.samples,
            c.hits,
            c.p_hat,
            c.wilson_low,
            c.wilson_high,
            opt(c.eps_log_p),
            opt(c.eps_log_p_low),
            c.eps_log_p_high
        ));
    }
    s
}

pub fn ldp(cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    let m = model(cfg)?;
    let target = cfg.target(&m.u0, || free_endpoint(&m))?;
    let l = cfg.ldp_section()?.clone();
    if l.epsilons.is_empty() || l.epsilons.iter().any(|e| !(*e > 0.0)) || l.epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(RunError::Config("ldp.epsilons must be positive and strictly decreasing".into()));
    }
    if l.samples == 0 {
        return Err(RunError::Config("ldp.samples must be positive".into()));
    }
    let tol = cfg.sanity_tolerance()?;
    let opt = cfg.optimizer();
    let interior = target.shrunk(opt.feasibility_tol).map_err(|e| RunError::Config(e.to_string()))?;
    let closure = target.shrunk(-opt.feasibility_tol).map_err(|e| RunError::Config(e.to_string()))?;
    with_artifacts("ldp", cfg, out, |dir| {
        let ri = minimize_rate(&interior, &m.u0, &m.p, &m.q, &m.g, &opt)?;
        write_rate(dir, "rate_interior", &interior, &ri, &m.p, opt.feasibility_tol)?;
        let rc = minimize_rate(&closure, &m.u0, &m.p, &m.q, &m.g, &opt)?;
        write_rate(dir, "rate_closure", &closure, &rc, &m.p, opt.feasibility_tol)?;

        let mut curve = Vec::with_capacity(l.epsilons.len());
        let mut resumed = 0;
        for &eps in &l.epsilons {
            let key = rung_key(cfg, eps);
            let file = rung_file(eps);
            let previous = std::fs::read_to_string(dir.path(&file))
                .ok()
                .and_then(|t| serde_json::from_str::<RungArtifact>(&t).ok())
                .filter(|r| r.key == key && r.point.epsilon == eps && r.point.samples == l.samples);
            let point = match previous {
                Some(r) => {
                    log::info!("resuming rung epsilon = {eps} from {file}");
                    dir.adopt(&file)?;
                    resumed += 1;
                    r.point
                }
                None => {
                    let point = estimate_ldp_rung(&target, &m.u0, &m.p, &m.q, &m.g, eps, l.samples, cfg.seed)?;
                    dir.write_json(&file, &RungArtifact { key, point: point.clone() })?;
                    point
                }
            };
            curve.push(point);
        }
        dir.write("curve.csv", curve_csv(&curve).as_bytes())?;
        let report: SanityReport = ldp_sanity_report(&target, &ri, &rc, curve, tol);
        dir.write_json("sanity.json", &report)?;
        Ok(format!(
            "ldp: {} (extrapolated {:?}, band [{:?}, {:e}]), {resumed} rung(s) resumed",
            if report.pass { "PASS" } else { "FAIL" },
            report.extrapolated,
            report.band_low,
            report.band_high
        ))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Identities,
    Estimates,
    Noise,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Estimates => "estimates",
            Suite::Noise => "noise",
        }
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckReport {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
    pub estimates: Vec<EstimateReport>,
    /// Names of the violated inequalities or identities.
    pub failures: Vec<String>,
}

pub fn inequality(e: Estimate) -> &'static str {
    match e {
        Estimate::Bilinear => "|B(u,v)|_{H^(eta-alpha/2)} <= c |u|_{H^(eta+alpha/2)} |v|_{H^(eta+alpha/2)}",
        Estimate::BilinearGain => "|B(u,v)|_{H^(eta-alpha/2)} <= c |u|_{H^(eta+1-alpha/2)} |v|_{H^(eta+1-alpha/2)}",
        Estimate::Interpolation => "|v|^2_{H^(1+alpha/4)} <= |v|_{H^1} |v|_{H^(1+alpha/2)}",
        Estimate::TrilinearDuality => "|<B(v1,v2),v3>_{H^1}| <= |v3|_{H^(1+alpha/2)} |B(v1,v2)|_{H^(1-alpha/2)}",
        Estimate::TrilinearInterpolated => {
            "|<B(v1,v2),v3>_{H^1}| <= c |v3|_{H^(1+alpha/2)} |v1|_{H^(1+alpha/4)} |v2|_{H^(1+alpha/4)}"
        }
    }
}

/// Check inputs; `cfg = None` runs the suites on their defaults.
pub fn run_suite(suite: Suite, cfg: Option<&RunConfig>, seed: u64) -> Result<CheckReport, RunError> {
    let section = cfg.map_or_else(CheckSection::default, |c| c.check.clone());
    let mut checks = Vec::new();
    let mut estimates = Vec::new();
    let mut failures = Vec::new();
    match suite {
        Suite::Identities => {
            let g = WaveGrid::with_k(section.identity_grid).map_err(|e| RunError::Config(e.to_string()))?;
            checks.extend(structural_identities(g, section.identity_fields, seed, STRUCTURAL_TOL)?);
            for &k in &section.grids {
                let g = WaveGrid::with_k(k).map_err(|e| RunError::Config(e.to_string()))?;
                for mut r in trilinear_cancellations(g, section.identity_fields, seed, CANCELLATION_TOL)? {
                    r.name = format!("{} (K = {k})", r.name);
                    checks.push(r);
                }
            }
        }
        Suite::Estimates => {
            let list = match cfg {
                Some(c) => c.estimate_list()?,
                None => crate::config::default_estimates(),
            };
            let cc = CertifyConfig { trials: section.trials, grids: section.grids.clone(), seed };
            for (e, alpha, eta) in list {
                let rep = certify_estimate(e, alpha, eta, &cc).map_err(|err| RunError::Config(err.to_string()))?;
                if rep.violated {
                    failures.push(format!("{} (alpha = {alpha}, eta = {eta}): {}", e.name(), inequality(e)));
                }
                estimates.push(rep);
            }
        }
        Suite::Noise => {
            let (q, g, horizon) = match cfg {
                Some(c) => (c.covariance()?, c.diffusion()?, c.sim.t_final),
                None => (
                    CovarianceSpec::new(WaveGrid::with_k(8)?, 2.0, 1.0)?,
                    DiffusionSpec::multiplicative(0.5, 1.0, 0.5, 0.5, 2.0)?,
                    1.0,
                ),
            };
            checks.extend(noise_checks(&q, &g, horizon, section.noise_samples, seed)?);
        }
    }
    failures.extend(checks.iter().filter(|c| !c.pass).map(|c| format!("{} = {:e} > {:e}", c.name, c.value, c.tolerance)));
    Ok(CheckReport { suite: suite.name().into(), pass: failures.is_empty(), checks, estimates, failures })
}

pub fn check(suite: Suite, cfg: Option<&RunConfig>, seed: u64, out: Option<&Path>) -> Result<String, RunError> {
    let report = run_suite(suite, cfg, seed)?;
    let file = format!("check_{}.json", suite.name());
    if let Some(out) = out {
        let mut dir = ArtifactDir::create(out)?;
        if let Some(c) = cfg {
            dir.write("config.toml", c.canonical().to_toml().as_bytes())?;
        }
        dir.write_json(&file, &report)?;
        let hash = cfg.map_or_else(|| sha256_hex(b""), config_hash);
        dir.finish(&format!("check {}", suite.name()), "complete", hash, seed)?;
    }
    let n = report.checks.len() + report.estimates.len();
    if report.pass {
        Ok(format!("check {}: PASS ({n} checks)", suite.name()))
    } else {
        Err(RunError::CheckFailed(format!("{} suite: {}", suite.name(), report.failures.join("; "))))
    }
}
