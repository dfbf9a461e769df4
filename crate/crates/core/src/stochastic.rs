//! Q-Wiener noise on `H = H^{1,2}`, the Cameron-Martin space `H₀ = Q^{1/2}H`
//! and the diffusion operators `G(t, u)`.
//!
//! `Q` is diagonal on the Stokes modes: it multiplies the coefficient at `k`
//! by `q_k = c₀ |k|^{-2s}`, and is self-adjoint on `H`. With the real
//! `H`-orthonormal basis built from each `±k` pair,
//!
//! ```text
//! e_{k,c}: a(k) = 1/(√2|k|),   e_{k,s}: a(k) = i/(√2|k|),
//! ```
//!
//! the increment over `dt` is `ΔW = Σ √(q_k dt) (ξ_c e_{k,c} + ξ_s e_{k,s})`,
//! so `E|ΔW|²_H = dt tr Q = dt Σ_k q_k` and `|v|²_{H₀} = Σ |k|² |v̂(k)|² / q_k`.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::rng::{step_mode_counter, CounterRng};
use crate::spectral::{FieldKind, Mode, SobolevExponent, SpectralField, WaveGrid};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceSpec {
    grid: WaveGrid,
    decay_s: f64,
    c0: f64,
    noise_modes: Option<usize>,
    support: Vec<Mode>,
}

/// Half-spectrum modes ordered by `|k|`, ties broken towards larger `k₁`
/// then smaller `k₂`, so `(1, 0)` comes first.
pub fn modes_by_wavenumber(grid: &WaveGrid) -> Vec<Mode> {
    let mut modes: Vec<Mode> = grid.half_modes().collect();
    modes.sort_by_key(|k| (i64::from(k.0) * i64::from(k.0) + i64::from(k.1) * i64::from(k.1), -k.0, k.1));
    modes
}

impl CovarianceSpec {
    pub fn new(grid: WaveGrid, decay_s: f64, c0: f64) -> Result<Self> {
        if !(decay_s > 1.0) || !decay_s.is_finite() {
            return Err(Error::invalid(format!("covariance decay {decay_s} must exceed 1 (trace class)")));
        }
        if !(c0 > 0.0) || !c0.is_finite() {
            return Err(Error::invalid(format!("covariance scale c0 = {c0} must be positive")));
        }
        Ok(Self { grid, decay_s, c0, noise_modes: None, support: modes_by_wavenumber(&grid) })
    }

    /// Restricts the noise to the `n` lowest modes; `q_k = 0` elsewhere.
    pub fn with_noise_modes(mut self, n: usize) -> Result<Self> {
        if n == 0 || n > self.grid.half_count() {
            return Err(Error::invalid(format!(
                "noise_modes = {n} outside 1..={}",
                self.grid.half_count()
            )));
        }
        self.support.truncate(n);
        self.noise_modes = Some(n);
        Ok(self)
    }

    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    pub fn decay_s(&self) -> f64 {
        self.decay_s
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn noise_modes(&self) -> Option<usize> {
        self.noise_modes
    }

    /// Half-spectrum modes that carry noise, lowest first.
    pub fn support(&self) -> &[Mode] {
        &self.support
    }

    fn in_support(&self, k: Mode) -> bool {
        match self.noise_modes {
            None => self.grid.contains(k),
            Some(_) => {
                let h = if k.is_half() { k } else { k.neg() };
                self.support.contains(&h)
            }
        }
    }

    /// `q_k`.
    pub fn eigenvalue(&self, k: Mode) -> f64 {
        if self.in_support(k) {
            self.c0 * k.norm_pow(-2.0 * self.decay_s)
        } else {
            0.0
        }
    }

    /// `tr Q = Σ_{active k} q_k`.
    pub fn trace(&self) -> f64 {
        self.support.iter().map(|&k| 2.0 * self.eigenvalue(k)).sum()
    }

    /// `Q^{1/2} w`: multiplies each coefficient by `q_k^{1/2}`.
    pub fn sqrt_apply(&self, w: &SpectralField) -> Result<SpectralField> {
        self.check_grid(w)?;
        Ok(w.multiply_by(|k| libm::sqrt(self.eigenvalue(k))))
    }

    fn check_grid(&self, f: &SpectralField) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `|v|_{H₀} = |Q^{-1/2} v|_{H^{1,2}}`; infinite if `v` has energy off
    /// the noise support.
    pub fn h0_norm(&self, v: &SpectralField) -> Result<f64> {
        self.check_grid(v)?;
        let mut acc = 0.0;
        for (k, c) in v.iter() {
            let e = c.norm_sqr();
            if e == 0.0 {
                continue;
            }
            let q = self.eigenvalue(k);
            if q == 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += k.norm_sq() * e / q;
        }
        Ok(libm::sqrt(acc))
    }
}

/// Standard normal draws for one time step, one `(ξ_c, ξ_s)` pair per noisy
/// half-spectrum mode.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseIncrement {
    pub dt: f64,
    pub xi: Vec<(Mode, f64, f64)>,
}

impl NoiseIncrement {
    /// `Q^{1/2} ΔW` as a divergence-free field.
    pub fn field(&self, q: &CovarianceSpec) -> SpectralField {
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let mut entries = Vec::with_capacity(self.xi.len());
        for &(k, a, b) in &self.xi {
            let s = libm::sqrt(q.eigenvalue(k) * self.dt) * r / k.norm();
            entries.push((k, Complex64::new(a * s, b * s)));
        }
        SpectralField::from_modes(*q.grid(), FieldKind::DivFreeVector, &entries).expect("support lies on the grid")
    }
}

/// Draws the increment of time step `step`; the draw for each mode is
/// addressed by `(step, k)` inside the stream of `rng`.
pub fn sample_increment(q: &CovarianceSpec, dt: f64, step: u64, rng: &mut CounterRng) -> Result<NoiseIncrement> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("time step {dt} must be positive")));
    }
    let xi = q
        .support()
        .iter()
        .map(|&k| {
            let (a, b) = rng.normal_pair(step_mode_counter(step, k));
            (k, a, b)
        })
        .collect();
    Ok(NoiseIncrement { dt, xi })
}

/// Brownian path addressed by `(seed, stream)`. With `substeps = r` each
/// increment is the sum of `r` increments of the finer path with step
/// `dt/r`, so runs at different resolutions can share one path.
#[derive(Clone, Debug)]
pub struct NoiseSource {
    rng: CounterRng,
    substeps: u32,
}

impl NoiseSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self::refined(seed, stream, 1)
    }

    pub fn refined(seed: u64, stream: u64, substeps: u32) -> Self {
        Self { rng: CounterRng::new(seed, stream), substeps: substeps.max(1) }
    }

    pub fn increment(&mut self, q: &CovarianceSpec, step: u64, dt: f64) -> Result<NoiseIncrement> {
        let r = u64::from(self.substeps);
        if r == 1 {
            return sample_increment(q, dt, step, &mut self.rng);
        }
        let fine = dt / r as f64;
        let mut total = sample_increment(q, fine, step * r, &mut self.rng)?;
        for j in 1..r {
            let part = sample_increment(q, fine, step * r + j, &mut self.rng)?;
            for (t, p) in total.xi.iter_mut().zip(&part.xi) {
                t.1 += p.1;
                t.2 += p.2;
            }
        }
        let norm = 1.0 / libm::sqrt(r as f64);
        for t in &mut total.xi {
            t.1 *= norm;
            t.2 *= norm;
        }
        total.dt = dt;
        Ok(total)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffusionFamily {
    /// `G(t, u) = I`.
    Additive,
    /// `G(t, u) = σ(t, u) I`, `σ = (c₁ + c₂ ψ(|u|_{H¹}))(1 + c₃ t^γ)`,
    /// `ψ(x) = x / (1 + x/saturation)`.
    DiagonalMultiplicative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionSpec {
    pub family: DiffusionFamily,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub gamma: f64,
    pub saturation: f64,
}

impl DiffusionSpec {
    pub fn additive() -> Self {
        Self { family: DiffusionFamily::Additive, c1: 1.0, c2: 0.0, c3: 0.0, gamma: 1.0, saturation: 1.0 }
    }

    pub fn multiplicative(c1: f64, c2: f64, c3: f64, gamma: f64, saturation: f64) -> Result<Self> {
        let s = Self { family: DiffusionFamily::DiagonalMultiplicative, c1, c2, c3, gamma, saturation };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("c3", self.c3)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("diffusion {name} = {v} must be finite and >= 0")));
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid(format!("Hoelder exponent gamma = {} outside (0, 1]", self.gamma)));
        }
        if !(self.saturation > 0.0) || !self.saturation.is_finite() {
            return Err(Error::invalid(format!("saturation {} must be positive", self.saturation)));
        }
        Ok(())
    }

    fn psi(&self, x: f64) -> f64 {
        x / (1.0 + x / self.saturation)
    }

    fn time_factor(&self, t: f64) -> f64 {
        1.0 + self.c3 * libm::pow(t.abs(), self.gamma)
    }

    /// Scalar gain `σ(t, u)` given `|u|_{H^{1,2}}`.
    pub fn gain(&self, t: f64, u_h1: f64) -> f64 {
        match self.family {
            DiffusionFamily::Additive => 1.0,
            DiffusionFamily::DiagonalMultiplicative => (self.c1 + self.c2 * self.psi(u_h1)) * self.time_factor(t),
        }
    }

    /// `c` in `‖G(t,u) - G(t,v)‖_{L_Q} ≤ c |u - v|_{H¹}` for `t ∈ [0, horizon]`.
    pub fn lipschitz_constant(&self, q: &CovarianceSpec, horizon: f64) -> f64 {
        match self.family {
            DiffusionFamily::Additive => 0.0,
            // ψ is 1-Lipschitz and | |u| - |v| | ≤ |u - v|
            DiffusionFamily::DiagonalMultiplicative => self.c2 * self.time_factor(horizon) * libm::sqrt(q.trace()),
        }
    }

    /// `c` in `‖G(t,u)‖_{L_Q} ≤ c (1 + |u|_{H¹})` for `t ∈ [0, horizon]`.
    pub fn growth_constant(&self, q: &CovarianceSpec, horizon: f64) -> f64 {
        match self.family {
            DiffusionFamily::Additive => libm::sqrt(q.trace()),
            DiffusionFamily::DiagonalMultiplicative => {
                self.c1.max(self.c2) * self.time_factor(horizon) * libm::sqrt(q.trace())
            }
        }
    }

    /// `c` in `‖G(t,u) - G(t',u)‖_{L_Q} ≤ c (1 + |u|_{H¹}) |t - t'|^γ`.
    pub fn holder_constant(&self, q: &CovarianceSpec) -> f64 {
        match self.family {
            DiffusionFamily::Additive => 0.0,
            // |t^γ - t'^γ| ≤ |t - t'|^γ for γ ∈ (0, 1]
            DiffusionFamily::DiagonalMultiplicative => self.c1.max(self.c2) * self.c3 * libm::sqrt(q.trace()),
        }
    }
}

/// `G(t, u) h`.
pub fn apply_g(spec: &DiffusionSpec, t: f64, u: &SpectralField, h: &SpectralField) -> Result<SpectralField> {
    if u.grid() != h.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(match spec.family {
        DiffusionFamily::Additive => h.clone(),
        DiffusionFamily::DiagonalMultiplicative => h.scaled(spec.gain(t, u.sobolev_norm(SobolevExponent(1.0)))),
    })
}

/// Hilbert-Schmidt norm of `G(t, u) Q^{1/2}` on `H^{1,2}`: `σ(t, u) (tr Q)^{1/2}`.
pub fn lq_norm(q: &CovarianceSpec, spec: &DiffusionSpec, t: f64, u: &SpectralField) -> f64 {
    spec.gain(t, u.sobolev_norm(SobolevExponent(1.0))) * libm::sqrt(q.trace())
}

/// `‖G(t, u) - G(t', v)‖_{L_Q}`.
pub fn lq_distance(
    q: &CovarianceSpec,
    spec: &DiffusionSpec,
    (t, u): (f64, &SpectralField),
    (t2, v): (f64, &SpectralField),
) -> f64 {
    let s = SobolevExponent(1.0);
    (spec.gain(t, u.sobolev_norm(s)) - spec.gain(t2, v.sobolev_norm(s))).abs() * libm::sqrt(q.trace())
}
