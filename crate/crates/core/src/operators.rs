//! The convection operator `B(u, v) = Π((u·∇)v)`, the trilinear form, curl
//! and Biot-Savart.
//!
//! Products are formed pseudo-spectrally on the padded collocation grid of
//! [`WaveGrid::product_size`], which is alias-free for every active output
//! mode; the Galerkin identities `⟨B(u, v), v⟩ = 0` and
//! `⟨B(u), u⟩_{H¹} = 0` therefore hold to round-off on the truncated space.

pub mod certify;

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::fft::Fft2;
use crate::spectral::{gather, scatter, FieldKind, Mode, SobolevExponent, SpectralField, WaveGrid};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Reusable FFT plan for quadratic products on one wave grid.
#[derive(Clone, Debug)]
pub struct Convection {
    grid: WaveGrid,
    m: usize,
    cutoff: u32,
    plan: Fft2,
}

impl Convection {
    pub fn new(grid: WaveGrid) -> Self {
        let m = grid.product_size();
        Self { grid, m, cutoff: grid.product_cutoff(), plan: Fft2::new(m) }
    }

    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    fn check(&self, f: &SpectralField, kind: FieldKind) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        f.expect_kind(kind)
    }

    /// `B(u, v) = Π((u·∇)v)` truncated to the active modes.
    pub fn apply(&self, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
        self.check(u, FieldKind::DivFreeVector)?;
        self.check(v, FieldKind::DivFreeVector)?;
        let (g, m) = (&self.grid, self.m);
        let (ur, vr) = (u.raw(), v.raw());
        // u₁ + i u₂, ∂₁v₁ + i ∂₁v₂, ∂₂v₁ + i ∂₂v₂: two real fields per transform.
        let packed = |i: usize, c: Complex64| {
            let (d1, d2) = g.mode_at(i).stokes_direction();
            Complex64::new(d1, 0.0) * c + I * d2 * c
        };
        let mut p1 = scatter(g, m, |i| packed(i, ur[i]));
        let mut p2 = scatter(g, m, |i| I * f64::from(g.mode_at(i).0) * packed(i, vr[i]));
        let mut p3 = scatter(g, m, |i| I * f64::from(g.mode_at(i).1) * packed(i, vr[i]));
        self.plan.inverse(&mut p1);
        self.plan.inverse(&mut p2);
        self.plan.inverse(&mut p3);
        for ((a, b), c) in p1.iter_mut().zip(&p2).zip(&p3) {
            let w1 = a.re * b.re + a.im * c.re;
            let w2 = a.re * b.im + a.im * c.im;
            *a = Complex64::new(w1, w2);
        }
        self.plan.forward(&mut p1);
        let out = self.unpack_projected(&p1);
        Ok(SpectralField::from_raw(self.grid, FieldKind::DivFreeVector, out))
    }

    /// Splits the spectrum of `w₁ + i w₂` into the two real components and
    /// projects onto the Stokes direction; positive half only.
    fn unpack_projected(&self, z: &[Complex64]) -> Vec<Complex64> {
        let (g, m) = (&self.grid, self.m);
        let mi = m as i32;
        let scale = 1.0 / (m * m) as f64;
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); g.len()];
        for (i, o) in out.iter_mut().enumerate().skip(g.len() / 2 + 1) {
            let k = g.mode_at(i);
            if k.sup_norm() > self.cutoff {
                continue;
            }
            let at = |k: Mode| z[k.0.rem_euclid(mi) as usize * m + k.1.rem_euclid(mi) as usize];
            let zk = at(k);
            let zm = at(k.neg()).conj();
            let w1 = (zk + zm) * 0.5;
            let w2 = (zk - zm) * Complex64::new(0.0, -0.5);
            let (d1, d2) = k.stokes_direction();
            *o = (w1 * d1 + w2 * d2) * scale;
        }
        out
    }

    /// `u·∇θ` for a divergence-free `u` and scalar `θ`, truncated.
    pub fn advect_scalar(&self, u: &SpectralField, theta: &SpectralField) -> Result<SpectralField> {
        self.check(u, FieldKind::DivFreeVector)?;
        self.check(theta, FieldKind::Scalar)?;
        let (g, m) = (&self.grid, self.m);
        let (ur, tr) = (u.raw(), theta.raw());
        let mut p1 = scatter(g, m, |i| {
            let (d1, d2) = g.mode_at(i).stokes_direction();
            ur[i] * d1 + I * d2 * ur[i]
        });
        let mut p2 = scatter(g, m, |i| {
            let k = g.mode_at(i);
            I * f64::from(k.0) * tr[i] - f64::from(k.1) * tr[i]
        });
        self.plan.inverse(&mut p1);
        self.plan.inverse(&mut p2);
        for (a, b) in p1.iter_mut().zip(&p2) {
            *a = Complex64::new(a.re * b.re + a.im * b.im, 0.0);
        }
        self.plan.forward(&mut p1);
        let out = gather(g, m, &p1, self.cutoff, 1.0 / (m * m) as f64);
        Ok(SpectralField::from_raw(self.grid, FieldKind::Scalar, out))
    }
}

/// One-shot `B(u, v)`; prefer a cached [`Convection`] in loops.
pub fn bilinear_b(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    Convection::new(*u.grid()).apply(u, v)
}

/// Inner product used by [`trilinear_b`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pairing {
    L2,
    H1,
}

impl Pairing {
    pub fn exponent(self) -> SobolevExponent {
        match self {
            Pairing::L2 => SobolevExponent(0.0),
            Pairing::H1 => SobolevExponent(1.0),
        }
    }
}

/// `b(u, w, v) = ⟨B(u, w), v⟩` in the chosen pairing.
pub fn trilinear_b(u: &SpectralField, w: &SpectralField, v: &SpectralField, pairing: Pairing) -> Result<f64> {
    if v.grid() != u.grid() {
        return Err(Error::GridMismatch);
    }
    bilinear_b(u, w)?.sobolev_inner(v, pairing.exponent())
}

/// Vorticity `θ̂(k) = i|k| a(k)`.
pub fn curl(v: &SpectralField) -> Result<SpectralField> {
    v.expect_kind(FieldKind::DivFreeVector)?;
    let g = *v.grid();
    let raw = v.raw();
    let coeffs = (0..g.len()).map(|i| I * g.mode_at(i).norm() * raw[i]).collect();
    Ok(SpectralField::from_raw(g, FieldKind::Scalar, coeffs))
}

/// Velocity from vorticity, `a(k) = -i θ̂(k)/|k|`.
pub fn biot_savart(theta: &SpectralField) -> Result<SpectralField> {
    theta.expect_kind(FieldKind::Scalar)?;
    let g = *theta.grid();
    let raw = theta.raw();
    let coeffs = (0..g.len())
        .map(|i| {
            let k = g.mode_at(i);
            if k == Mode(0, 0) {
                Complex64::new(0.0, 0.0)
            } else {
                -I * raw[i] / k.norm()
            }
        })
        .collect();
    Ok(SpectralField::from_raw(g, FieldKind::DivFreeVector, coeffs))
}
