//! Rate functional `I(f) = inf { ½∫|v|²_{H₀} dt : f = g⁰(∫v) }`, its
//! numerical minimisation over target sets, and crude Monte Carlo estimates
//! of `ε log P(u^ε ∈ F)`.

mod curve;

pub use curve::{estimate_ldp_curve, estimate_ldp_rung, extrapolate, ldp_sanity_report, CurvePoint, SanityReport, SanityTolerance};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dynamics::{ControlPath, Driver, Integrator, SimParams, Trajectory};
use crate::optimize::{bfgs, BfgsConfig};
use crate::rng::{stream_id, tag, CounterRng};
use crate::spectral::{FieldKind, Mode, SobolevExponent, SpectralField};
use crate::stochastic::{CovarianceSpec, DiffusionSpec};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum TargetKind {
    /// `{u : |u(T) - center|_{H^s} < radius}`, or its complement when
    /// `outside`.
    EndpointBall { center: SpectralField, radius: f64, norm: SobolevExponent, outside: bool },
    /// `{u : sup_t |u(t)|_{H^s} ≥ level}`.
    SupExceed { level: f64, norm: SobolevExponent },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetSet {
    pub kind: TargetKind,
    pub description: String,
}

/// What a target needs to know about a path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSummary {
    pub endpoint: SpectralField,
    /// `sup_t |u(t)|` in the target norm; only tracked for sup targets.
    pub sup_norm: f64,
}

impl TargetSet {
    pub fn endpoint_ball(center: SpectralField, radius: f64, norm: SobolevExponent, outside: bool) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("target radius {radius} must be positive")));
        }
        center.expect_kind(FieldKind::DivFreeVector)?;
        let description = format!(
            "endpoint {} ball of radius {radius} in H^{}",
            if outside { "outside" } else { "inside" },
            norm.0
        );
        Ok(Self { kind: TargetKind::EndpointBall { center, radius, norm, outside }, description })
    }

    pub fn sup_exceed(level: f64, norm: SobolevExponent) -> Result<Self> {
        if !(level > 0.0) {
            return Err(Error::invalid(format!("target level {level} must be positive")));
        }
        let description = format!("sup over [0, T] of the H^{} norm reaches {level}", norm.0);
        Ok(Self { kind: TargetKind::SupExceed { level, norm }, description })
    }

    fn tracks_sup(&self) -> Option<SobolevExponent> {
        match self.kind {
            TargetKind::SupExceed { norm, .. } => Some(norm),
            TargetKind::EndpointBall { .. } => None,
        }
    }

    /// Distance-like amount by which a path misses the target; zero iff hit.
    pub fn violation(&self, path: &PathSummary) -> Result<f64> {
        Ok(match &self.kind {
            TargetKind::EndpointBall { center, radius, norm, outside } => {
                let d = path.endpoint.sub(center)?.sobolev_norm(*norm);
                if *outside {
                    (radius - d).max(0.0)
                } else {
                    (d - radius).max(0.0)
                }
            }
            TargetKind::SupExceed { level, .. } => (level - path.sup_norm).max(0.0),
        })
    }

    /// Whether the path lies in the target (closed version of the set).
    pub fn contains(&self, path: &PathSummary) -> Result<bool> {
        Ok(self.violation(path)? == 0.0)
    }

    /// The set shrunk (`delta > 0`) or grown (`delta < 0`) by `|delta|` in
    /// its own norm: stand-ins for the interior and the closure.
    pub fn shrunk(&self, delta: f64) -> Result<Self> {
        match &self.kind {
            TargetKind::EndpointBall { center, radius, norm, outside } => {
                let r = if *outside { radius + delta } else { radius - delta };
                Self::endpoint_ball(center.clone(), r, *norm, *outside)
            }
            TargetKind::SupExceed { level, norm } => Self::sup_exceed(level + delta, *norm),
        }
    }
}

/// Runs `integrator` and reduces the path to what `target` needs.
pub fn summarize(
    integrator: &Integrator,
    target: &TargetSet,
    u0: &SpectralField,
    driver: Driver<'_>,
) -> Result<PathSummary> {
    let norm = target.tracks_sup();
    let mut sup = 0.0f64;
    let endpoint = integrator.run_observed(u0, driver, |_, _, u| {
        if let Some(s) = norm {
            sup = sup.max(u.sobolev_norm(s));
        }
        Ok(())
    })?;
    Ok(PathSummary { endpoint, sup_norm: sup })
}

/// `½ Σ_i Δt |v_i|²_{H₀}`.
pub fn control_energy(v: &ControlPath, q: &CovarianceSpec) -> Result<f64> {
    let mut e = 0.0;
    for vi in v.values() {
        let h = q.h0_norm(vi)?;
        e += h * h;
    }
    Ok(0.5 * v.interval() * e)
}

/// Trajectory of the skeleton equation driven by `v`.
pub fn skeleton_map(
    v: &ControlPath,
    u0: &SpectralField,
    p: &SimParams,
    q: &CovarianceSpec,
    g: &DiffusionSpec,
) -> Result<Trajectory> {
    Integrator::new(p, q, g)?.integrate(u0, Driver::Control(v))
}

/// Decades the starting control may grow by before the search starts.
const INIT_GROWTH_STEPS: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    /// Number of constant pieces of the control on `[0, T]`.
    pub control_intervals: usize,
    /// Control acts on this many lowest noisy modes.
    pub control_modes: usize,
    pub penalty_initial: f64,
    pub penalty_growth: f64,
    pub penalty_rounds: usize,
    /// Admissible violation, in the target norm.
    pub feasibility_tol: f64,
    /// BFGS iteration cap per penalty round.
    pub max_iter: usize,
    pub fd_step: f64,
    /// Size of the random starting control (whitened coordinates).
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            control_intervals: 20,
            control_modes: 8,
            penalty_initial: 10.0,
            penalty_growth: 10.0,
            penalty_rounds: 5,
            feasibility_tol: 1e-3,
            max_iter: 200,
            fd_step: 1e-6,
            init_scale: 1e-2,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PenaltyRound {
    pub mu: f64,
    pub energy: f64,
    pub violation: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateResult {
    /// `½∫|v|²_{H₀}` of the returned control.
    pub energy: f64,
    pub control: ControlPath,
    /// Target violation of the controlled skeleton path.
    pub terminal_residual: f64,
    pub iterations: usize,
    /// A control with `terminal_residual ≤ feasibility_tol` was found.
    pub converged: bool,
    pub rounds: Vec<PenaltyRound>,
}

/// Whitened control coordinates: `θ ↦ v` with `|v_i|²_{H₀} = Σ θ²` per
/// interval.
struct ControlBasis {
    modes: Vec<(Mode, f64)>,
    intervals: usize,
    grid: crate::spectral::WaveGrid,
    t_final: f64,
}

impl ControlBasis {
    fn new(q: &CovarianceSpec, p: &SimParams, opt: &OptimizerConfig) -> Result<Self> {
        if opt.control_intervals == 0 || opt.control_modes == 0 {
            return Err(Error::invalid("control needs at least one interval and one mode"));
        }
        let modes = q
            .support()
            .iter()
            .take(opt.control_modes)
            // a(k) = sqrt(q_k / (2|k|²)) θ puts H₀ weight θ² on the ±k pair
            .map(|&k| (k, libm::sqrt(q.eigenvalue(k) / (2.0 * k.norm_sq()))))
            .collect();
        Ok(Self { modes, intervals: opt.control_intervals, grid: p.grid, t_final: p.t_final })
    }

    fn dim(&self) -> usize {
        2 * self.modes.len() * self.intervals
    }

    fn path(&self, theta: &[f64]) -> ControlPath {
        let per = 2 * self.modes.len();
        let values = theta
            .chunks_exact(per)
            .map(|c| {
                let entries: Vec<(Mode, Complex64)> = self
                    .modes
                    .iter()
                    .enumerate()
                    .map(|(j, &(k, s))| (k, Complex64::new(s * c[2 * j], s * c[2 * j + 1])))
                    .collect();
                SpectralField::from_modes(self.grid, FieldKind::DivFreeVector, &entries).expect("support on grid")
            })
            .collect();
        ControlPath::new(self.t_final, values).expect("non-empty control")
    }

    fn energy(&self, theta: &[f64]) -> f64 {
        0.5 * (self.t_final / self.intervals as f64) * theta.iter().map(|x| x * x).sum::<f64>()
    }
}

/// Minimises `control_energy(v) + μ violation²` over piecewise constant
/// controls, escalating `μ`. A target already hit by the zero control has
/// rate zero.
pub fn minimize_rate(
    target: &TargetSet,
    u0: &SpectralField,
    p: &SimParams,
    q: &CovarianceSpec,
    g: &DiffusionSpec,
    opt: &OptimizerConfig,
) -> Result<RateResult> {
    if !(opt.feasibility_tol >= 0.0) || !(opt.penalty_initial > 0.0) || !(opt.penalty_growth >= 1.0) {
        return Err(Error::invalid("optimizer needs tol >= 0, initial penalty > 0 and growth >= 1"));
    }
    let integ = Integrator::new(p, q, g)?;
    let basis = ControlBasis::new(q, p, opt)?;
    let zero = ControlPath::zero(p.grid, p.t_final, opt.control_intervals)?;
    let free = summarize(&integ, target, u0, Driver::Control(&zero))?;
    let free_violation = target.violation(&free)?;
    if free_violation <= opt.feasibility_tol {
        return Ok(RateResult {
            energy: 0.0,
            control: zero,
            terminal_residual: free_violation,
            iterations: 0,
            converged: true,
            rounds: Vec::new(),
        });
    }

    let violation = |theta: &[f64]| -> f64 {
        let v = basis.path(theta);
        match summarize(&integ, target, u0, Driver::Control(&v)) {
            Ok(s) => target.violation(&s).unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        }
    };
    let mut rng = CounterRng::new(opt.seed, stream_id(tag::OPTIMIZER, 0));
    let direction: Vec<f64> = (0..basis.dim()).map(|j| rng.normal_pair(j as u64).0).collect();
    // Sup targets are flat near zero control when u0 carries the sup; grow
    // the start until the violation responds.
    let mut scale = opt.init_scale;
    let mut theta: Vec<f64> = direction.iter().map(|d| scale * d).collect();
    for _ in 0..INIT_GROWTH_STEPS {
        if violation(&theta) < free_violation {
            break;
        }
        scale *= 10.0;
        theta = direction.iter().map(|d| scale * d).collect();
    }
    let bfgs_cfg = BfgsConfig { max_iter: opt.max_iter, grad_tol: 1e-9, fd_step: opt.fd_step };

    let mut rounds = Vec::new();
    let mut iterations = 0;
    let mut feasible: Option<(Vec<f64>, f64)> = None;
    let mut last_violation = free_violation;
    let mut mu = opt.penalty_initial;
    for _ in 0..opt.penalty_rounds.max(1) {
        let objective = |th: &[f64]| {
            let r = violation(th);
            basis.energy(th) + mu * r * r
        };
        let m = bfgs(&objective, theta, &bfgs_cfg);
        theta = m.x;
        iterations += m.iterations;
        let r = violation(&theta);
        let e = basis.energy(&theta);
        rounds.push(PenaltyRound { mu, energy: e, violation: r, iterations: m.iterations });
        last_violation = r;
        // later rounds are closer to the constrained minimiser
        if r <= opt.feasibility_tol {
            feasible = Some((theta.clone(), r));
        }
        mu *= opt.penalty_growth;
    }
    let (theta, residual, converged) = match feasible {
        Some((th, r)) => (th, r, true),
        None => (theta, last_violation, false),
    };
    let control = basis.path(&theta);
    Ok(RateResult {
        energy: control_energy(&control, q)?,
        control,
        terminal_residual: residual,
        iterations,
        converged,
        rounds,
    })
}
