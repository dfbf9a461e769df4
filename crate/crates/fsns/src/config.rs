//! Run configuration: TOML with dotted sections. The grammar is documented
//! in `docs/config.md`.

use std::path::{Path, PathBuf};

use fsns_core::dynamics::{Preset, Scheme, SimParams};
use fsns_core::ldp::{OptimizerConfig, SanityTolerance, TargetSet};
use fsns_core::operators::certify::{check_admissible, Estimate};
use fsns_core::spectral::{Mode, SobolevExponent, SpectralField, WaveGrid, DEFAULT_DEALIAS};
use fsns_core::stochastic::{CovarianceSpec, DiffusionSpec};
use serde::{Deserialize, Serialize};

use crate::error::RunError;
use crate::snapshot;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub sim: SimSection,
    #[serde(default)]
    pub covariance: CovarianceSection,
    #[serde(default)]
    pub diffusion: DiffusionSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub outputs: OutputsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSection>,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ldp: Option<LdpSection>,
    #[serde(default)]
    pub check: CheckSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub k_max: u32,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
    pub alpha: f64,
    pub nu: f64,
    pub t_final: f64,
    /// Falls back to [`SimParams::suggested_dt`] when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub epsilon: f64,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "yes")]
    pub nonlinear: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceSection {
    #[serde(default = "two")]
    pub decay_s: f64,
    #[serde(default = "one")]
    pub c0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_modes: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionSection {
    /// `additive` or `multiplicative`.
    #[serde(default = "additive")]
    pub family: String,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default)]
    pub c2: f64,
    #[serde(default)]
    pub c3: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub saturation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// `single_mode`, `two_mode`, `random_smooth` or `random_smooth(ρ)`;
    /// ignored when `snapshot` is set.
    #[serde(default = "two_mode")]
    pub preset: String,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "unit_mode")]
    pub mode: [i32; 2],
    #[serde(default = "two")]
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    /// Write a snapshot every this many steps; 0 keeps only the final state.
    #[serde(default)]
    pub snapshot_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    /// `endpoint_ball` or `sup_exceed`.
    pub kind: String,
    /// Ball centre: `zero`, `initial`, `free` (noiseless endpoint) or a
    /// snapshot path.
    #[serde(default = "zero")]
    pub center: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default = "yes")]
    pub outside: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    /// Sobolev exponent of the target norm.
    #[serde(default = "one")]
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub control_intervals: usize,
    pub control_modes: usize,
    pub penalty_initial: f64,
    pub penalty_growth: f64,
    pub penalty_rounds: usize,
    pub feasibility_tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    pub init_scale: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            control_intervals: d.control_intervals,
            control_modes: d.control_modes,
            penalty_initial: d.penalty_initial,
            penalty_growth: d.penalty_growth,
            penalty_rounds: d.penalty_rounds,
            feasibility_tol: d.feasibility_tol,
            max_iter: d.max_iter,
            fd_step: d.fd_step,
            init_scale: d.init_scale,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdpSection {
    /// Strictly decreasing noise levels.
    pub epsilons: Vec<f64>,
    pub samples: usize,
    #[serde(default = "default_rel")]
    pub relative_tolerance: f64,
    #[serde(default = "default_abs")]
    pub absolute_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateEntry {
    pub name: String,
    pub alpha: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_ladder")]
    pub grids: Vec<u32>,
    /// Explicit estimate list; the default suite is used when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub estimates: Vec<EstimateEntry>,
    #[serde(default = "default_identity_grid")]
    pub identity_grid: u32,
    #[serde(default = "default_fields")]
    pub identity_fields: usize,
    #[serde(default = "default_noise_samples")]
    pub noise_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    /// Multi-snapshot control file; zero control when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default = "default_intervals")]
    pub intervals: usize,
}

fn default_dealias() -> f64 {
    DEFAULT_DEALIAS
}
fn default_scheme() -> String {
    Scheme::ExponentialEulerMaruyama.name().into()
}
fn yes() -> bool {
    true
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn additive() -> String {
    "additive".into()
}
fn two_mode() -> String {
    "two_mode".into()
}
fn unit_mode() -> [i32; 2] {
    [1, 0]
}
fn zero() -> String {
    "zero".into()
}
fn default_rel() -> f64 {
    SanityTolerance::default().relative
}
fn default_abs() -> f64 {
    SanityTolerance::default().absolute
}
fn default_trials() -> usize {
    200
}
fn default_ladder() -> Vec<u32> {
    vec![8, 16, 32]
}
fn default_identity_grid() -> u32 {
    16
}
fn default_fields() -> usize {
    100
}
fn default_noise_samples() -> usize {
    10_000
}
fn default_intervals() -> usize {
    20
}

impl Default for CovarianceSection {
    fn default() -> Self {
        Self { decay_s: 2.0, c0: 1.0, noise_modes: None }
    }
}

impl Default for DiffusionSection {
    fn default() -> Self {
        Self { family: additive(), c1: 1.0, c2: 0.0, c3: 0.0, gamma: 1.0, saturation: 1.0 }
    }
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { preset: two_mode(), amplitude: 1.0, mode: [1, 0], rho: 2.0, snapshot: None }
    }
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            grids: default_ladder(),
            estimates: Vec::new(),
            identity_grid: default_identity_grid(),
            identity_fields: default_fields(),
            noise_samples: default_noise_samples(),
        }
    }
}

fn cfg_err(e: impl std::fmt::Display) -> RunError {
    RunError::Config(e.to_string())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The config without its output location, which names where the
    /// artifacts go and not what they contain.
    pub fn canonical(&self) -> Self {
        let mut c = self.clone();
        c.outputs.directory = None;
        c
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn grid(&self) -> Result<WaveGrid, RunError> {
        WaveGrid::new(self.sim.k_max, self.sim.dealias_fraction).map_err(cfg_err)
    }

    /// Simulation parameters; a missing `dt` is filled in and reported.
    pub fn sim_params(&self) -> Result<SimParams, RunError> {
        let grid = self.grid()?;
        let s = &self.sim;
        let dt = match s.dt {
            Some(dt) => dt,
            None => {
                let dt = SimParams::suggested_dt(&grid, s.nu, s.alpha).min(s.t_final);
                log::warn!("sim.dt not set, using {dt}");
                dt
            }
        };
        let scheme = Scheme::from_name(&s.scheme)
            .ok_or_else(|| RunError::Config(format!("sim.scheme: unknown scheme `{}`", s.scheme)))?;
        let mut p = SimParams::new(grid, s.alpha, s.nu, s.t_final, dt, s.epsilon).map_err(cfg_err)?.with_scheme(scheme);
        if !s.nonlinear {
            p = p.linearized();
        }
        Ok(p)
    }

    pub fn covariance(&self) -> Result<CovarianceSpec, RunError> {
        let c = &self.covariance;
        let q = CovarianceSpec::new(self.grid()?, c.decay_s, c.c0).map_err(cfg_err)?;
        match c.noise_modes {
            Some(n) => q.with_noise_modes(n).map_err(cfg_err),
            None => Ok(q),
        }
    }

    pub fn diffusion(&self) -> Result<DiffusionSpec, RunError> {
        let d = &self.diffusion;
        match d.family.as_str() {
            "additive" => Ok(DiffusionSpec::additive()),
            "multiplicative" => DiffusionSpec::multiplicative(d.c1, d.c2, d.c3, d.gamma, d.saturation).map_err(cfg_err),
            other => Err(RunError::Config(format!("diffusion.family: unknown family `{other}`"))),
        }
    }

    /// Initial velocity field.
    pub fn initial_field(&self) -> Result<SpectralField, RunError> {
        let grid = self.grid()?;
        let i = &self.initial;
        if let Some(path) = &i.snapshot {
            let snap = snapshot::read_file(path, self.sim.dealias_fraction)
                .map_err(|e| RunError::Config(format!("initial.snapshot: {e}")))?;
            return Ok(snap.field.resampled(grid));
        }
        let preset = parse_preset(&i.preset, i, self.seed)?;
        preset.build(grid).map_err(cfg_err)
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        let o = &self.optimizer;
        OptimizerConfig {
            control_intervals: o.control_intervals,
            control_modes: o.control_modes,
            penalty_initial: o.penalty_initial,
            penalty_growth: o.penalty_growth,
            penalty_rounds: o.penalty_rounds,
            feasibility_tol: o.feasibility_tol,
            max_iter: o.max_iter,
            fd_step: o.fd_step,
            init_scale: o.init_scale,
            seed: self.seed,
        }
    }

    pub fn target_section(&self) -> Result<&TargetSection, RunError> {
        self.target.as_ref().ok_or_else(|| RunError::Config("missing required section `target`".into()))
    }

    pub fn ldp_section(&self) -> Result<&LdpSection, RunError> {
        self.ldp.as_ref().ok_or_else(|| RunError::Config("missing required section `ldp`".into()))
    }

    /// Target set; `free_endpoint` supplies the noiseless endpoint when the
    /// centre is `free`.
    pub fn target(
        &self,
        u0: &SpectralField,
        free_endpoint: impl FnOnce() -> Result<SpectralField, RunError>,
    ) -> Result<TargetSet, RunError> {
        let t = self.target_section()?;
        let norm = SobolevExponent(t.norm);
        match t.kind.as_str() {
            "endpoint_ball" => {
                let radius = t.radius.ok_or_else(|| RunError::Config("missing required key `target.radius`".into()))?;
                let center = match t.center.as_str() {
                    "zero" => SpectralField::zeros(*u0.grid(), u0.kind()),
                    "initial" => u0.clone(),
                    "free" => free_endpoint()?,
                    path => snapshot::read_file(Path::new(path), self.sim.dealias_fraction)
                        .map_err(|e| RunError::Config(format!("target.center: {e}")))?
                        .field
                        .resampled(*u0.grid()),
                };
                TargetSet::endpoint_ball(center, radius, norm, t.outside).map_err(cfg_err)
            }
            "sup_exceed" => {
                let level = t.level.ok_or_else(|| RunError::Config("missing required key `target.level`".into()))?;
                TargetSet::sup_exceed(level, norm).map_err(cfg_err)
            }
            other => Err(RunError::Config(format!("target.kind: unknown kind `{other}`"))),
        }
    }

    pub fn sanity_tolerance(&self) -> Result<SanityTolerance, RunError> {
        let l = self.ldp_section()?;
        Ok(SanityTolerance { relative: l.relative_tolerance, absolute: l.absolute_tolerance })
    }

    /// Estimates to certify: the explicit list, each checked for
    /// admissibility, or the default suite.
    pub fn estimate_list(&self) -> Result<Vec<(Estimate, f64, f64)>, RunError> {
        if self.check.estimates.is_empty() {
            return Ok(default_estimates());
        }
        self.check
            .estimates
            .iter()
            .map(|e| {
                let est = Estimate::from_name(&e.name)
                    .ok_or_else(|| RunError::Config(format!("check.estimates: unknown estimate `{}`", e.name)))?;
                check_admissible(est, e.alpha, e.eta).map_err(|err| RunError::Config(format!("check.estimates: {err}")))?;
                Ok((est, e.alpha, e.eta))
            })
            .collect()
    }
}

/// Bilinear bound for `η ∈ {0, 1}`, the gain bound at `η = 1`, and the
/// interpolation and trilinear bounds, each for `α ∈ {4/3, 3/2, 2}`.
pub fn default_estimates() -> Vec<(Estimate, f64, f64)> {
    let alphas = [4.0 / 3.0, 1.5, 2.0];
    let mut out = Vec::new();
    for eta in [0.0, 1.0] {
        for &a in &alphas {
            if check_admissible(Estimate::Bilinear, a, eta).is_ok() {
                out.push((Estimate::Bilinear, a, eta));
            }
        }
    }
    for est in [
        Estimate::BilinearGain,
        Estimate::Interpolation,
        Estimate::TrilinearDuality,
        Estimate::TrilinearInterpolated,
    ] {
        for &a in &alphas {
            out.push((est, a, 1.0));
        }
    }
    out
}

fn parse_preset(name: &str, i: &InitialSection, seed: u64) -> Result<Preset, RunError> {
    let (base, rho) = match name.strip_suffix(')').and_then(|s| s.split_once('(')) {
        Some((b, r)) => {
            let rho = r.trim().parse::<f64>().map_err(|_| RunError::Config(format!("initial.preset: bad ρ in `{name}`")))?;
            (b.trim(), rho)
        }
        None => (name, i.rho),
    };
    match base {
        "single_mode" => Ok(Preset::SingleMode { k: Mode(i.mode[0], i.mode[1]), amplitude: i.amplitude }),
        "two_mode" => Ok(Preset::TwoMode { amplitude: i.amplitude }),
        "random_smooth" => Ok(Preset::RandomSmooth { rho, amplitude: i.amplitude, seed }),
        other => Err(RunError::Config(format!("initial.preset: unknown preset `{other}`"))),
    }
}
