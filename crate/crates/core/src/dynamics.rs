//! Galerkin time stepping of the stochastic equation, its control
//! (skeleton) version and the vorticity form.
//!
//! Every scheme treats the dissipation `ν|k|^α` exactly or implicitly and
//! everything else explicitly at the left end point (Itô):
//!
//! ```text
//! exponential:    û⁺ = e^{-ν|k|^α dt} [û + dt B̂(u) + √ε G(t,u) Q^{1/2}ΔW]
//! semi-implicit:  (1 + ν|k|^α dt) û⁺ = û + dt B̂(u) + √ε G(t,u) Q^{1/2}ΔW
//! ```
//!
//! The skeleton replaces the noise by `dt G(t,u) v(t)`. The active-mode set
//! of the grid is the Galerkin truncation.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::operators::{biot_savart, curl, Convection};
use crate::rng::{stream_id, tag, CounterRng};
use crate::spectral::{FieldKind, Mode, SobolevExponent, SpectralField, WaveGrid};
use crate::stochastic::{apply_g, CovarianceSpec, DiffusionSpec, NoiseIncrement, NoiseSource};
use crate::{Error, Result};

/// `|u|_{H¹}` above which a run is declared blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e8;

/// Lower end of the dissipation band covered by the well-posedness theory.
pub const ALPHA_ADMISSIBLE_MIN: f64 = 4.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    ExponentialEulerMaruyama,
    SemiImplicitEuler,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ExponentialEulerMaruyama => "exponential_euler_maruyama",
            Scheme::SemiImplicitEuler => "semi_implicit_euler",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Scheme::ExponentialEulerMaruyama, Scheme::SemiImplicitEuler].into_iter().find(|x| x.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimParams {
    pub grid: WaveGrid,
    pub alpha: f64,
    pub nu: f64,
    pub t_final: f64,
    pub dt: f64,
    pub epsilon: f64,
    pub scheme: Scheme,
    /// `false` drops `B` (linearised system).
    pub nonlinear: bool,
}

impl SimParams {
    pub fn new(grid: WaveGrid, alpha: f64, nu: f64, t_final: f64, dt: f64, epsilon: f64) -> Result<Self> {
        let p = Self {
            grid,
            alpha,
            nu,
            t_final,
            dt,
            epsilon,
            scheme: Scheme::ExponentialEulerMaruyama,
            nonlinear: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 1.0 && self.alpha <= 2.0) {
            return Err(Error::invalid(format!("alpha = {} outside [1, 2]", self.alpha)));
        }
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(Error::invalid(format!("nu = {} must be positive", self.nu)));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::invalid(format!("T = {} must be positive", self.t_final)));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_final) {
            return Err(Error::invalid(format!("dt = {} must lie in (0, T]", self.dt)));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid(format!("epsilon = {} must be >= 0", self.epsilon)));
        }
        Ok(())
    }

    /// Whether `alpha` lies in `[4/3, 2]`.
    pub fn alpha_admissible(&self) -> bool {
        self.alpha >= ALPHA_ADMISSIBLE_MIN
    }

    /// `min(0.1, 0.5 / (ν K^α))`.
    pub fn suggested_dt(grid: &WaveGrid, nu: f64, alpha: f64) -> f64 {
        let k = f64::from(grid.k_max());
        (0.5 / (nu * libm::pow(k, alpha))).min(0.1)
    }

    pub fn steps(&self) -> usize {
        (libm::round(self.t_final / self.dt) as usize).max(1)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn linearized(mut self) -> Self {
        self.nonlinear = false;
        self
    }
}

/// Energy quantities of one stored state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    /// `|u|²_{H¹}`.
    pub h1_norm_sq: f64,
    /// `|u|²_{H^{1+α/2}}`.
    pub h1a2_norm_sq: f64,
    /// `⟨B(u), u⟩_{H¹}` (vorticity runs: `⟨u·∇θ, θ⟩`), zero when `B` is off.
    pub trilinear_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub energy_log: Vec<EnergyRecord>,
}

impl Trajectory {
    pub fn final_state(&self) -> &SpectralField {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial state")
    }

    /// `(|u(T)|², 2ν Σ dt |u_{n+1}|²_{H^{1+α/2}}, |u₀|²)` in `H¹`.
    pub fn energy_balance(&self, nu: f64) -> EnergyBalance {
        let log = &self.energy_log;
        let mut dissipation = 0.0;
        for w in log.windows(2) {
            dissipation += (w[1].t - w[0].t) * w[1].h1a2_norm_sq;
        }
        EnergyBalance {
            initial: log.first().map_or(0.0, |r| r.h1_norm_sq),
            terminal: log.last().map_or(0.0, |r| r.h1_norm_sq),
            dissipation: 2.0 * nu * dissipation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBalance {
    pub initial: f64,
    pub terminal: f64,
    pub dissipation: f64,
}

impl EnergyBalance {
    /// `(terminal + dissipation) / initial`; at most one up to round-off for
    /// noise-free runs.
    pub fn ratio(&self) -> f64 {
        (self.terminal + self.dissipation) / self.initial
    }
}

/// Piecewise constant control `v ∈ L²(0, T; H₀)` on a uniform partition.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPath {
    t_final: f64,
    values: Vec<SpectralField>,
}

impl ControlPath {
    pub fn new(t_final: f64, values: Vec<SpectralField>) -> Result<Self> {
        if values.is_empty() || !(t_final > 0.0) {
            return Err(Error::invalid("control path needs a positive horizon and at least one interval"));
        }
        let g = *values[0].grid();
        for v in &values {
            if *v.grid() != g {
                return Err(Error::GridMismatch);
            }
            v.expect_kind(FieldKind::DivFreeVector)?;
        }
        Ok(Self { t_final, values })
    }

    pub fn zero(grid: WaveGrid, t_final: f64, intervals: usize) -> Result<Self> {
        Self::new(t_final, alloc::vec![SpectralField::zeros(grid, FieldKind::DivFreeVector); intervals.max(1)])
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn values(&self) -> &[SpectralField] {
        &self.values
    }

    pub fn grid(&self) -> &WaveGrid {
        self.values[0].grid()
    }

    pub fn interval(&self) -> f64 {
        self.t_final / self.values.len() as f64
    }

    /// Partition points `0 = t₀ < … < t_n = T`.
    pub fn times(&self) -> Vec<f64> {
        let h = self.interval();
        (0..=self.values.len()).map(|i| i as f64 * h).collect()
    }

    /// Value on the interval containing `t`.
    pub fn at(&self, t: f64) -> &SpectralField {
        let i = libm::floor(t / self.interval()) as isize;
        &self.values[i.clamp(0, self.values.len() as isize - 1) as usize]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { t_final: self.t_final, values: self.values.iter().map(|v| v.scaled(s)).collect() }
    }
}

/// Source of the forcing in a run.
#[derive(Debug)]
pub enum Driver<'a> {
    /// Deterministic flow; requires `ε = 0`.
    None,
    Noise(NoiseSource),
    Control(&'a ControlPath),
}

impl Driver<'_> {
    /// Noise path `(seed, trajectory index)`.
    pub fn noise(seed: u64, path: u64) -> Self {
        Driver::Noise(NoiseSource::new(seed, stream_id(tag::TRAJECTORY, path)))
    }
}

/// Named initial conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preset {
    /// One Stokes mode pair `±k` with real amplitude.
    SingleMode { k: Mode, amplitude: f64 },
    /// Interacting pair `(1,0)`, `(1,1)` with amplitudes `a`, `a/2`.
    TwoMode { amplitude: f64 },
    /// Random field with `|â(k)| ~ |k|^{-ρ}`, rescaled to `|u|_{H¹} = amplitude`.
    RandomSmooth { rho: f64, amplitude: f64, seed: u64 },
}

impl Preset {
    pub fn build(&self, grid: WaveGrid) -> Result<SpectralField> {
        let c = |x: f64| num_complex::Complex64::new(x, 0.0);
        match *self {
            Preset::SingleMode { k, amplitude } => {
                SpectralField::from_modes(grid, FieldKind::DivFreeVector, &[(k, c(amplitude))])
            }
            Preset::TwoMode { amplitude } => SpectralField::from_modes(
                grid,
                FieldKind::DivFreeVector,
                &[(Mode(1, 0), c(amplitude)), (Mode(1, 1), c(0.5 * amplitude))],
            ),
            Preset::RandomSmooth { rho, amplitude, seed } => {
                let mut rng = CounterRng::new(seed, stream_id(tag::INITIAL, 0));
                let f = SpectralField::random(grid, FieldKind::DivFreeVector, rho, &mut rng);
                let n = f.sobolev_norm(SobolevExponent(1.0));
                Ok(if n > 0.0 { f.scaled(amplitude / n) } else { f })
            }
        }
    }
}

/// Plans and decay factors for one parameter set.
#[derive(Clone, Debug)]
pub struct Integrator {
    p: SimParams,
    q: CovarianceSpec,
    g: DiffusionSpec,
    conv: Convection,
    /// Linear propagator per coefficient, in the field's storage order.
    decay: Vec<f64>,
}

enum Outcome {
    Done(SpectralField),
    /// `last` is the final finite state and its time.
    BlowUp { step: usize, time: f64, last: (f64, SpectralField) },
}

/// Forcing of a single step.
enum Forcing<'a> {
    None,
    Noise(&'a NoiseIncrement),
    Control(&'a SpectralField),
}

impl Integrator {
    pub fn new(p: &SimParams, q: &CovarianceSpec, g: &DiffusionSpec) -> Result<Self> {
        p.validate()?;
        g.validate()?;
        if *q.grid() != p.grid {
            return Err(Error::GridMismatch);
        }
        let (nu, a, dt) = (p.nu, p.alpha, p.dt);
        let decay = (0..p.grid.len())
            .map(|i| p.grid.mode_at(i))
            .map(|k| match p.scheme {
                Scheme::ExponentialEulerMaruyama => libm::exp(-nu * k.norm_pow(a) * dt),
                Scheme::SemiImplicitEuler => 1.0 / (1.0 + nu * k.norm_pow(a) * dt),
            })
            .collect();
        Ok(Self { p: *p, q: q.clone(), g: *g, conv: Convection::new(p.grid), decay })
    }

    pub fn params(&self) -> &SimParams {
        &self.p
    }

    pub fn covariance(&self) -> &CovarianceSpec {
        &self.q
    }

    pub fn diffusion(&self) -> &DiffusionSpec {
        &self.g
    }

    fn check(&self, u: &SpectralField, kind: FieldKind) -> Result<()> {
        if *u.grid() != self.p.grid {
            return Err(Error::GridMismatch);
        }
        u.expect_kind(kind)
    }

    fn dissipate(&self, mut f: SpectralField) -> SpectralField {
        for (c, d) in f.raw_mut().iter_mut().zip(&self.decay) {
            *c *= *d;
        }
        f
    }

    /// `G(t, u)` applied to the forcing, as a velocity field.
    fn forcing_term(&self, t: f64, u: &SpectralField, forcing: &Forcing<'_>) -> Result<Option<SpectralField>> {
        Ok(match forcing {
            Forcing::None => None,
            Forcing::Noise(inc) => {
                if self.p.epsilon == 0.0 {
                    return Ok(None);
                }
                let w = inc.field(&self.q);
                Some(apply_g(&self.g, t, u, &w)?.scaled(libm::sqrt(self.p.epsilon)))
            }
            Forcing::Control(v) => {
                self.check(v, FieldKind::DivFreeVector)?;
                Some(apply_g(&self.g, t, u, v)?.scaled(self.p.dt))
            }
        })
    }

    /// One velocity step; `b` is `B(u)` when already known.
    fn velocity_step(
        &self,
        u: &SpectralField,
        b: Option<&SpectralField>,
        t: f64,
        forcing: &Forcing<'_>,
    ) -> Result<SpectralField> {
        let mut rhs = u.clone();
        if self.p.nonlinear {
            match b {
                Some(b) => rhs.axpy(self.p.dt, b),
                None => rhs.axpy(self.p.dt, &self.conv.apply(u, u)?),
            }
        }
        if let Some(f) = self.forcing_term(t, u, forcing)? {
            rhs.axpy(1.0, &f);
        }
        Ok(self.dissipate(rhs))
    }

    /// One Euler-Maruyama step at time `t`.
    pub fn step_stochastic(&self, u: &SpectralField, t: f64, inc: &NoiseIncrement) -> Result<SpectralField> {
        self.check(u, FieldKind::DivFreeVector)?;
        self.velocity_step(u, None, t, &Forcing::Noise(inc))
    }

    /// One skeleton step with control value `v` on `[t, t + dt)`.
    pub fn step_skeleton(&self, u: &SpectralField, t: f64, v: &SpectralField) -> Result<SpectralField> {
        self.check(u, FieldKind::DivFreeVector)?;
        self.velocity_step(u, None, t, &Forcing::Control(v))
    }

    /// One vorticity step: `θ⁺ = e^{-ν|k|^α dt}[θ + dt u·∇θ + curl(G̃ forcing)]`
    /// with `u = R¹θ`.
    fn vorticity_step(&self, theta: &SpectralField, t: f64, forcing: &Forcing<'_>) -> Result<SpectralField> {
        let u = biot_savart(theta)?;
        let mut rhs = theta.clone();
        if self.p.nonlinear {
            rhs.axpy(self.p.dt, &self.conv.advect_scalar(&u, theta)?);
        }
        if let Some(f) = self.forcing_term(t, &u, forcing)? {
            rhs.axpy(1.0, &curl(&f)?);
        }
        Ok(self.dissipate(rhs))
    }

    fn blown_up(&self, u: &SpectralField) -> bool {
        let s = match u.kind() {
            FieldKind::DivFreeVector => SobolevExponent(1.0),
            FieldKind::Scalar => SobolevExponent(0.0),
        };
        !u.is_finite() || u.sobolev_norm(s) > BLOWUP_THRESHOLD
    }

    fn record(&self, t: f64, u: &SpectralField, b: Option<&SpectralField>) -> Result<EnergyRecord> {
        let half = self.p.alpha / 2.0;
        Ok(match u.kind() {
            FieldKind::DivFreeVector => EnergyRecord {
                t,
                h1_norm_sq: u.sobolev_norm_sq(SobolevExponent(1.0)),
                h1a2_norm_sq: u.sobolev_norm_sq(SobolevExponent(1.0 + half)),
                trilinear_residual: match b {
                    Some(b) => b.sobolev_inner(u, SobolevExponent(1.0))?,
                    None => 0.0,
                },
            },
            // |R¹θ|_{H^s} = |θ|_{H^{s-1}}
            FieldKind::Scalar => EnergyRecord {
                t,
                h1_norm_sq: u.sobolev_norm_sq(SobolevExponent(0.0)),
                h1a2_norm_sq: u.sobolev_norm_sq(SobolevExponent(half)),
                trilinear_residual: match b {
                    Some(b) => b.l2_inner(u)?,
                    None => 0.0,
                },
            },
        })
    }

    /// Energy quantities of a velocity (or vorticity) state at time `t`.
    pub fn energy_record(&self, t: f64, u: &SpectralField) -> Result<EnergyRecord> {
        self.check(u, u.kind())?;
        let b = match (self.p.nonlinear, u.kind()) {
            (false, _) => None,
            (true, FieldKind::DivFreeVector) => Some(self.conv.apply(u, u)?),
            (true, FieldKind::Scalar) => Some(self.conv.advect_scalar(&biot_savart(u)?, u)?),
        };
        self.record(t, u, b.as_ref())
    }

    fn check_driver(&self, driver: &Driver<'_>) -> Result<()> {
        match driver {
            Driver::None if self.p.epsilon > 0.0 => {
                Err(Error::invalid("epsilon > 0 needs a noise driver (driver = none given)"))
            }
            Driver::Control(c) if *c.grid() != self.p.grid => Err(Error::GridMismatch),
            _ => Ok(()),
        }
    }

    /// Core loop. `observe(step, t, u)` sees every state including the
    /// initial one; returns the final state or the blow-up step.
    fn run(
        &self,
        u0: &SpectralField,
        mut driver: Driver<'_>,
        mut observe: impl FnMut(usize, f64, &SpectralField) -> Result<()>,
    ) -> Result<Outcome> {
        self.check_driver(&driver)?;
        let vorticity = u0.kind() == FieldKind::Scalar;
        self.check(u0, u0.kind())?;
        let n = self.p.steps();
        let dt = self.p.dt;
        let mut u = u0.clone();
        observe(0, 0.0, &u)?;
        for step in 0..n {
            let t = step as f64 * dt;
            let inc;
            let forcing = match &mut driver {
                Driver::None => Forcing::None,
                Driver::Noise(src) => {
                    inc = src.increment(&self.q, step as u64, dt)?;
                    Forcing::Noise(&inc)
                }
                // midpoint lookup is robust to round-off in t
                Driver::Control(c) => Forcing::Control(c.at(t + 0.5 * dt)),
            };
            let next =
                if vorticity { self.vorticity_step(&u, t, &forcing)? } else { self.velocity_step(&u, None, t, &forcing)? };
            let t1 = (step + 1) as f64 * dt;
            if self.blown_up(&next) {
                return Ok(Outcome::BlowUp { step: step + 1, time: t1, last: (t, u) });
            }
            u = next;
            observe(step + 1, t1, &u)?;
        }
        Ok(Outcome::Done(u))
    }

    /// Final state only; `observe` sees every state.
    pub fn run_observed(
        &self,
        u0: &SpectralField,
        driver: Driver<'_>,
        observe: impl FnMut(usize, f64, &SpectralField) -> Result<()>,
    ) -> Result<SpectralField> {
        match self.run(u0, driver, observe)? {
            Outcome::Done(u) => Ok(u),
            Outcome::BlowUp { step, time, last: (t, u) } => Err(Error::BlowUp {
                step,
                time,
                partial: Box::new(Trajectory { times: alloc::vec![t], states: alloc::vec![u], energy_log: Vec::new() }),
            }),
        }
    }

    /// Final state of a run.
    pub fn endpoint(&self, u0: &SpectralField, driver: Driver<'_>) -> Result<SpectralField> {
        self.run_observed(u0, driver, |_, _, _| Ok(()))
    }

    fn trajectory(&self, u0: &SpectralField, driver: Driver<'_>) -> Result<Trajectory> {
        let mut traj = Trajectory { times: Vec::new(), states: Vec::new(), energy_log: Vec::new() };
        let outcome = self.run(u0, driver, |_, t, u| {
            traj.energy_log.push(self.energy_record(t, u)?);
            traj.times.push(t);
            traj.states.push(u.clone());
            Ok(())
        })?;
        match outcome {
            Outcome::Done(_) => Ok(traj),
            Outcome::BlowUp { step, time, .. } => Err(Error::BlowUp { step, time, partial: Box::new(traj) }),
        }
    }

    /// Velocity trajectory with energy log.
    pub fn integrate(&self, u0: &SpectralField, driver: Driver<'_>) -> Result<Trajectory> {
        self.check(u0, FieldKind::DivFreeVector)?;
        self.trajectory(u0, driver)
    }

    /// Vorticity trajectory; the forcing enters as `curl G(t, R¹θ)`.
    pub fn integrate_vorticity(&self, theta0: &SpectralField, driver: Driver<'_>) -> Result<Trajectory> {
        self.check(theta0, FieldKind::Scalar)?;
        self.trajectory(theta0, driver)
    }
}

pub fn step_stochastic(
    u: &SpectralField,
    t: f64,
    p: &SimParams,
    q: &CovarianceSpec,
    g: &DiffusionSpec,
    inc: &NoiseIncrement,
) -> Result<SpectralField> {
    Integrator::new(p, q, g)?.step_stochastic(u, t, inc)
}

pub fn step_skeleton(
    u: &SpectralField,
    t: f64,
    p: &SimParams,
    q: &CovarianceSpec,
    g: &DiffusionSpec,
    v: &SpectralField,
) -> Result<SpectralField> {
    Integrator::new(p, q, g)?.step_skeleton(u, t, v)
}

pub fn integrate(
    u0: &SpectralField,
    p: &SimParams,
    q: &CovarianceSpec,
    g: &DiffusionSpec,
    driver: Driver<'_>,
) -> Result<Trajectory> {
    Integrator::new(p, q, g)?.integrate(u0, driver)
}

pub fn integrate_vorticity(
    theta0: &SpectralField,
    p: &SimParams,
    q: &CovarianceSpec,
    g: &DiffusionSpec,
    driver: Driver<'_>,
) -> Result<Trajectory> {
    Integrator::new(p, q, g)?.integrate_vorticity(theta0, driver)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn setup(k: u32, alpha: f64, dt: f64, eps: f64) -> (SimParams, CovarianceSpec, DiffusionSpec) {
        let g = WaveGrid::with_k(k).unwrap();
        (
            SimParams::new(g, alpha, 1.0, 1.0, dt, eps).unwrap(),
            CovarianceSpec::new(g, 2.0, 1.0).unwrap(),
            DiffusionSpec::additive(),
        )
    }

    #[test]
    fn single_mode_decays_exactly() {
        for alpha in [4.0 / 3.0, 2.0] {
            let (p, q, g) = setup(4, alpha, 0.01, 0.0);
            let k = Mode(2, 1);
            let u0 = Preset::SingleMode { k, amplitude: 0.7 }.build(p.grid).unwrap();
            let tr = integrate(&u0, &p, &q, &g, Driver::None).unwrap();
            let expect = 0.7 * (-k.norm_pow(alpha)).exp();
            let got = tr.final_state().get(k).re;
            assert!((got / expect - 1.0).abs() < 1e-12, "{got} {expect}");
            assert_eq!(tr.times.len(), 101);
            assert!(tr.energy_log.iter().all(|r| r.trilinear_residual.abs() < 1e-14));
        }
    }

    #[test]
    fn zero_stays_zero_and_none_rejects_noise() {
        let (p, q, g) = setup(4, 2.0, 0.1, 0.0);
        let z = SpectralField::zeros(p.grid, FieldKind::DivFreeVector);
        assert_eq!(*integrate(&z, &p, &q, &g, Driver::None).unwrap().final_state(), z);
        let (p, q, g) = setup(4, 2.0, 0.1, 0.1);
        assert!(integrate(&z, &p, &q, &g, Driver::None).is_err());
    }

    #[test]
    fn params_validation() {
        let g = WaveGrid::with_k(4).unwrap();
        assert!(SimParams::new(g, 0.9, 1.0, 1.0, 0.1, 0.0).is_err());
        assert!(SimParams::new(g, 2.1, 1.0, 1.0, 0.1, 0.0).is_err());
        assert!(SimParams::new(g, 2.0, 0.0, 1.0, 0.1, 0.0).is_err());
        assert!(SimParams::new(g, 2.0, 1.0, 1.0, 2.0, 0.0).is_err());
        assert!(SimParams::new(g, 2.0, 1.0, 1.0, 0.1, -1.0).is_err());
        assert!(!SimParams::new(g, 1.2, 1.0, 1.0, 0.1, 0.0).unwrap().alpha_admissible());
        assert_eq!(SimParams::suggested_dt(&g, 1.0, 2.0), 0.5 / 16.0);
    }

    #[test]
    fn skeleton_zero_control_is_deterministic_flow() {
        let (p, q, g) = setup(6, 1.5, 0.01, 0.0);
        let u0 = Preset::TwoMode { amplitude: 0.5 }.build(p.grid).unwrap();
        let free = integrate(&u0, &p, &q, &g, Driver::None).unwrap();
        let v = ControlPath::zero(p.grid, 1.0, 10).unwrap();
        let ctl = integrate(&u0, &p, &q, &g, Driver::Control(&v)).unwrap();
        assert_eq!(free, ctl);
    }

    #[test]
    fn vorticity_single_mode_decays() {
        let (p, q, g) = setup(4, 1.5, 0.05, 0.0);
        let k = Mode(1, 2);
        let u0 = Preset::SingleMode { k, amplitude: 1.0 }.build(p.grid).unwrap();
        let th = curl(&u0).unwrap();
        let tr = integrate_vorticity(&th, &p, &q, &g, Driver::None).unwrap();
        let r = tr.final_state().get(k) / th.get(k);
        assert!((r.re - (-k.norm_pow(1.5)).exp()).abs() < 1e-12 && r.im.abs() < 1e-15);
        assert_eq!(tr.final_state().get(Mode(0, 0)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn blow_up_is_reported_with_partial() {
        let g = WaveGrid::with_k(2).unwrap();
        let p = SimParams::new(g, 2.0, 1.0, 1.0, 0.5, 0.0).unwrap();
        let q = CovarianceSpec::new(g, 2.0, 1.0).unwrap();
        let u0 = Preset::TwoMode { amplitude: 1e6 }.build(g).unwrap();
        match integrate(&u0, &p, &q, &DiffusionSpec::additive(), Driver::None) {
            Err(Error::BlowUp { step, partial, .. }) => {
                assert!(step >= 1);
                assert_eq!(partial.states.len(), step);
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
