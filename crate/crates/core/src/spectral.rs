//! Truncated Fourier representation of zero-mean real fields on `(0, 2π)²`.
//!
//! A field is stored densely over the square `max(|k₁|, |k₂|) ≤ K`; the
//! origin is always zero. Scalar fields carry `f̂(k)`; divergence-free
//! vector fields carry one Stokes amplitude `a(k)` per mode, the vector
//! coefficient being `a(k) k^⊥/|k|` with `k^⊥ = (-k₂, k₁)`. Because the
//! basis direction flips sign under `k ↦ -k`, a real vector field has
//! `a(-k) = -conj(a(k))`, while a real scalar has `f̂(-k) = conj(f̂(k))`.
//! Constructors take the half spectrum (`k₁ > 0`, or `k₁ = 0, k₂ > 0`) as
//! authoritative and fill in the other half.
//!
//! All norms are plain coefficient sums, `|f|²_{H^s} = Σ |k|^{2s} |f̂(k)|²`,
//! and `f(x) = Σ f̂(k) e^{ik·x}`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::fft::Fft2;
use crate::rng::{mode_code, CounterRng};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Integer wavenumber `k = (k₁, k₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode(pub i32, pub i32);

impl Mode {
    pub fn norm_sq(self) -> f64 {
        let (a, b) = (f64::from(self.0), f64::from(self.1));
        a * a + b * b
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.norm_sq())
    }

    /// `|k|^p`, computed as `(|k|²)^{p/2}`.
    pub fn norm_pow(self, p: f64) -> f64 {
        libm::pow(self.norm_sq(), 0.5 * p)
    }

    pub fn neg(self) -> Self {
        Mode(-self.0, -self.1)
    }

    /// Unit Stokes direction `k^⊥/|k|`.
    pub fn stokes_direction(self) -> (f64, f64) {
        let n = self.norm();
        (-f64::from(self.1) / n, f64::from(self.0) / n)
    }

    /// Representative half of `Z² \ {0}`: `k₁ > 0`, or `k₁ = 0` and `k₂ > 0`.
    pub fn is_half(self) -> bool {
        self.0 > 0 || (self.0 == 0 && self.1 > 0)
    }

    pub fn sup_norm(self) -> u32 {
        self.0.unsigned_abs().max(self.1.unsigned_abs())
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

/// Order `s` of the Sobolev space `H^{s,2}`. May be negative.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SobolevExponent(pub f64);

/// Active mode set `0 < max(|k₁|, |k₂|) ≤ K` plus the dealiasing fraction
/// used when forming quadratic products.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveGrid {
    k_max: u32,
    dealias_fraction: f64,
}

pub const DEFAULT_DEALIAS: f64 = 2.0 / 3.0;

impl WaveGrid {
    pub fn new(k_max: u32, dealias_fraction: f64) -> Result<Self> {
        if k_max == 0 || k_max > 4096 {
            return Err(Error::invalid(alloc::format!("K = {k_max} outside 1..=4096")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::invalid(alloc::format!(
                "dealias fraction {dealias_fraction} outside (0, 1]"
            )));
        }
        Ok(Self { k_max, dealias_fraction })
    }

    /// Grid with the 2/3 dealiasing rule.
    pub fn with_k(k_max: u32) -> Result<Self> {
        Self::new(k_max, DEFAULT_DEALIAS)
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    pub(crate) fn side(&self) -> usize {
        2 * self.k_max as usize + 1
    }

    pub(crate) fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub(crate) fn index(&self, k: Mode) -> Option<usize> {
        let kk = self.k_max as i32;
        if k.0.abs() > kk || k.1.abs() > kk {
            return None;
        }
        Some((k.0 + kk) as usize * self.side() + (k.1 + kk) as usize)
    }

    pub(crate) fn mode_at(&self, idx: usize) -> Mode {
        let kk = self.k_max as i32;
        let s = self.side();
        Mode((idx / s) as i32 - kk, (idx % s) as i32 - kk)
    }

    pub fn contains(&self, k: Mode) -> bool {
        k != Mode(0, 0) && k.sup_norm() <= self.k_max
    }

    /// All active modes, `k₁` major.
    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        let kk = self.k_max as i32;
        (-kk..=kk)
            .flat_map(move |a| (-kk..=kk).map(move |b| Mode(a, b)))
            .filter(|&k| k != Mode(0, 0))
    }

    /// One representative per `±k` pair.
    pub fn half_modes(&self) -> impl Iterator<Item = Mode> + '_ {
        self.modes().filter(|k| k.is_half())
    }

    pub fn active_count(&self) -> usize {
        self.len() - 1
    }

    pub fn half_count(&self) -> usize {
        self.active_count() / 2
    }

    /// Smallest collocation grid that represents every active mode.
    pub fn min_physical_size(&self) -> usize {
        2 * self.k_max as usize + 2
    }

    /// Collocation size used for quadratic products: at least `2K/f + 1`
    /// (`3K + 1` for the 2/3 rule), rounded up to a power of two.
    pub fn product_size(&self) -> usize {
        let k = self.k_max as f64;
        let need = libm::ceil(2.0 * k / self.dealias_fraction) as usize + 1;
        need.max(self.min_physical_size()).next_power_of_two()
    }

    /// Modes with `max(|k₁|, |k₂|)` above this are dropped from products.
    pub fn product_cutoff(&self) -> u32 {
        let c = libm::floor(self.dealias_fraction * self.product_size() as f64 / 2.0) as u32;
        c.min(self.k_max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Scalar,
    DivFreeVector,
}

impl FieldKind {
    /// `c(-k) = sign · conj(c(k))` for a real field of this kind.
    pub fn reflection_sign(self) -> f64 {
        match self {
            FieldKind::Scalar => 1.0,
            FieldKind::DivFreeVector => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Scalar => "scalar",
            FieldKind::DivFreeVector => "divergence-free vector",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            FieldKind::Scalar => 0,
            FieldKind::DivFreeVector => 1,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(FieldKind::Scalar),
            1 => Some(FieldKind::DivFreeVector),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: WaveGrid,
    kind: FieldKind,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: WaveGrid, kind: FieldKind) -> Self {
        Self { grid, kind, coeffs: vec![ZERO; grid.len()] }
    }

    /// Builds a real field from its values on the half spectrum.
    pub fn from_fn(grid: WaveGrid, kind: FieldKind, mut f: impl FnMut(Mode) -> Complex64) -> Self {
        let mut out = Self::zeros(grid, kind);
        for k in grid.half_modes() {
            let c = f(k);
            out.put_pair(k, c);
        }
        out
    }

    /// Builds a real field from sparse `(mode, amplitude)` entries. Entries
    /// on the negative half are reflected; later entries win.
    pub fn from_modes(grid: WaveGrid, kind: FieldKind, entries: &[(Mode, Complex64)]) -> Result<Self> {
        let mut out = Self::zeros(grid, kind);
        let sign = kind.reflection_sign();
        for &(k, c) in entries {
            if !grid.contains(k) {
                return Err(Error::invalid(alloc::format!("mode {k} not active on K = {}", grid.k_max)));
            }
            if k.is_half() {
                out.put_pair(k, c);
            } else {
                out.put_pair(k.neg(), c.conj() * sign);
            }
        }
        Ok(out)
    }

    /// The same field on another grid: zero-padded when `grid` is larger,
    /// truncated to the active modes of `grid` otherwise.
    pub fn resampled(&self, grid: WaveGrid) -> Self {
        let mut out = Self::zeros(grid, self.kind);
        for k in grid.half_modes() {
            let c = self.get(k);
            out.put_pair(k, c);
        }
        out
    }

    /// Builds a field from dense coefficients in the internal layout and
    /// overwrites the negative half from the positive one.
    pub(crate) fn from_raw(grid: WaveGrid, kind: FieldKind, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        let mut out = Self { grid, kind, coeffs };
        out.resymmetrize();
        out
    }

    fn put_pair(&mut self, k: Mode, c: Complex64) {
        debug_assert!(k.is_half());
        let i = self.grid.index(k).expect("active mode");
        let j = self.grid.index(k.neg()).expect("active mode");
        self.coeffs[i] = c;
        self.coeffs[j] = c.conj() * self.kind.reflection_sign();
    }

    pub(crate) fn resymmetrize(&mut self) {
        let sign = self.kind.reflection_sign();
        let n = self.coeffs.len();
        for i in 0..n / 2 {
            // index n-1-i is the reflection of index i
            self.coeffs[i] = self.coeffs[n - 1 - i].conj() * sign;
        }
        self.coeffs[n / 2] = ZERO;
    }

    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    /// Coefficient at `k`; zero for the origin and for inactive modes.
    pub fn get(&self, k: Mode) -> Complex64 {
        self.grid.index(k).map_or(ZERO, |i| self.coeffs[i])
    }

    pub(crate) fn raw(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// `(mode, coefficient)` over all active modes.
    pub fn iter(&self) -> impl Iterator<Item = (Mode, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| (self.grid.mode_at(i), c))
            .filter(|(k, _)| *k != Mode(0, 0))
    }

    /// Half-spectrum entries, the canonical serialised form.
    pub fn half_spectrum(&self) -> impl Iterator<Item = (Mode, Complex64)> + '_ {
        self.iter().filter(|(k, _)| k.is_half())
    }

    /// Largest `|c(-k) - sign·conj(c(k))|` relative to the largest coefficient.
    pub fn reflection_defect(&self) -> f64 {
        let sign = self.kind.reflection_sign();
        let n = self.coeffs.len();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut worst = self.coeffs[n / 2].norm();
        for i in 0..n / 2 {
            worst = worst.max((self.coeffs[i] - self.coeffs[n - 1 - i].conj() * sign).norm());
        }
        worst / scale
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.kind != other.kind {
            return Err(Error::KindMismatch { expected: self.kind.name(), found: other.kind.name() });
        }
        Ok(())
    }

    /// Errors unless the field has kind `kind`.
    pub fn expect_kind(&self, kind: FieldKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::KindMismatch { expected: kind.name(), found: self.kind.name() });
        }
        Ok(())
    }

    /// `self + scale · other`.
    pub fn add_scaled(&self, other: &Self, scale: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.axpy(scale, other);
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, -1.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub(crate) fn axpy(&mut self, s: f64, other: &Self) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    /// Applies a real even multiplier `m(k)`; kind and reality are preserved.
    pub fn multiply_by(&self, mut m: impl FnMut(Mode) -> f64) -> Self {
        let mut out = self.clone();
        let grid = self.grid;
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let k = grid.mode_at(i);
            if k != Mode(0, 0) {
                *c *= m(k);
            }
        }
        out
    }

    /// `( Σ |k|^{2s} |û(k)|² )^{1/2}`.
    pub fn sobolev_norm(&self, s: SobolevExponent) -> f64 {
        libm::sqrt(self.sobolev_norm_sq(s))
    }

    pub fn sobolev_norm_sq(&self, s: SobolevExponent) -> f64 {
        let grid = self.grid;
        let fast = s.0 == 0.0;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != grid.len() / 2)
            .map(|(i, c)| {
                let w = if fast { 1.0 } else { grid.mode_at(i).norm_pow(2.0 * s.0) };
                w * c.norm_sqr()
            })
            .sum()
    }

    /// `Re Σ |k|^{2s} û(k) conj(v̂(k))`.
    pub fn sobolev_inner(&self, other: &Self, s: SobolevExponent) -> Result<f64> {
        self.check_compatible(other)?;
        let grid = self.grid;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .filter(|&(i, _)| i != grid.len() / 2)
            .map(|(i, (a, b))| grid.mode_at(i).norm_pow(2.0 * s.0) * (a * b.conj()).re)
            .sum())
    }

    pub fn l2_inner(&self, other: &Self) -> Result<f64> {
        self.sobolev_inner(other, SobolevExponent(0.0))
    }

    /// `(-Δ)^{α/2}`: coefficient-wise multiplication by `|k|^α`.
    pub fn fractional_laplacian(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        Ok(self.multiply_by(|k| k.norm_pow(alpha)))
    }

    /// Cartesian coefficients `(v̂₁, v̂₂)` of a divergence-free field, as two
    /// scalar fields.
    pub fn vector_components(&self) -> Result<[SpectralField; 2]> {
        self.expect_kind(FieldKind::DivFreeVector)?;
        let mut c1 = Self::zeros(self.grid, FieldKind::Scalar);
        let mut c2 = Self::zeros(self.grid, FieldKind::Scalar);
        for (i, a) in self.coeffs.iter().enumerate() {
            let k = self.grid.mode_at(i);
            if k == Mode(0, 0) {
                continue;
            }
            let (d1, d2) = k.stokes_direction();
            c1.coeffs[i] = a * d1;
            c2.coeffs[i] = a * d2;
        }
        Ok([c1, c2])
    }

    /// Samples on the `m × m` collocation grid `x = 2π(i, j)/m`, row-major,
    /// one buffer per Cartesian component.
    pub fn to_physical(&self, m: usize) -> Result<Vec<Vec<f64>>> {
        if m < self.grid.min_physical_size() {
            return Err(Error::GridTooSmall { m, min: self.grid.min_physical_size() });
        }
        let plan = Fft2::new(m);
        let comps = match self.kind {
            FieldKind::Scalar => vec![self.clone()],
            FieldKind::DivFreeVector => self.vector_components()?.to_vec(),
        };
        Ok(comps
            .iter()
            .map(|c| {
                let mut buf = scatter(&c.grid, m, |i| c.coeffs[i]);
                plan.inverse(&mut buf);
                buf.iter().map(|z| z.re).collect()
            })
            .collect())
    }

    /// Scalar field whose coefficients are the discrete Fourier coefficients
    /// of `samples` on the active modes. The mean is discarded.
    pub fn from_physical(grid: WaveGrid, samples: &[f64], m: usize) -> Result<Self> {
        if m < grid.min_physical_size() {
            return Err(Error::GridTooSmall { m, min: grid.min_physical_size() });
        }
        if samples.len() != m * m {
            return Err(Error::SampleLength { expected: m * m, found: samples.len() });
        }
        let plan = Fft2::new(m);
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        plan.forward(&mut buf);
        let coeffs = gather(&grid, m, &buf, grid.k_max, 1.0 / (m * m) as f64);
        Ok(Self::from_raw(grid, FieldKind::Scalar, coeffs))
    }

    /// Divergence-free part of a sampled vector field.
    pub fn from_physical_vector(grid: WaveGrid, samples: [&[f64]; 2], m: usize) -> Result<Self> {
        let v1 = Self::from_physical(grid, samples[0], m)?;
        let v2 = Self::from_physical(grid, samples[1], m)?;
        helmholtz_project(&v1, &v2)
    }

    /// Random field with `c(k) = ξ(k) |k|^{-ρ}`, `ξ` complex standard
    /// normal (`E|ξ|² = 1`). The draw for `k` depends only on
    /// `(seed, stream, k)`, so fields on nested grids agree on common modes.
    pub fn random(grid: WaveGrid, kind: FieldKind, rho: f64, rng: &mut CounterRng) -> Self {
        let r = core::f64::consts::FRAC_1_SQRT_2;
        Self::from_fn(grid, kind, |k| {
            let (a, b) = rng.normal_pair(mode_code(k));
            Complex64::new(a * r, b * r) * k.norm_pow(-rho)
        })
    }
}

/// Leray projection of the vector field with scalar components `(v₁, v₂)`:
/// per mode `a(k) = (k^⊥/|k|) · v̂(k)`.
pub fn helmholtz_project(v1: &SpectralField, v2: &SpectralField) -> Result<SpectralField> {
    if v1.grid != v2.grid {
        return Err(Error::GridMismatch);
    }
    v1.expect_kind(FieldKind::Scalar)?;
    v2.expect_kind(FieldKind::Scalar)?;
    let grid = v1.grid;
    let mut out = SpectralField::zeros(grid, FieldKind::DivFreeVector);
    for i in 0..grid.len() {
        let k = grid.mode_at(i);
        if k == Mode(0, 0) {
            continue;
        }
        let (d1, d2) = k.stokes_direction();
        out.coeffs[i] = v1.coeffs[i] * d1 + v2.coeffs[i] * d2;
    }
    out.resymmetrize();
    Ok(out)
}

/// Places `value(index)` for every active mode into an `m × m` buffer at
/// the wrapped frequency position.
pub(crate) fn scatter(grid: &WaveGrid, m: usize, value: impl Fn(usize) -> Complex64) -> Vec<Complex64> {
    let mut buf = vec![ZERO; m * m];
    let mi = m as i32;
    for i in 0..grid.len() {
        let k = grid.mode_at(i);
        if k == Mode(0, 0) {
            continue;
        }
        let r = k.0.rem_euclid(mi) as usize;
        let c = k.1.rem_euclid(mi) as usize;
        buf[r * m + c] = value(i);
    }
    buf
}

/// Reads the active modes with `max(|k₁|, |k₂|) ≤ cutoff` out of an
/// `m × m` spectrum, multiplied by `scale`.
pub(crate) fn gather(grid: &WaveGrid, m: usize, buf: &[Complex64], cutoff: u32, scale: f64) -> Vec<Complex64> {
    let mut out = vec![ZERO; grid.len()];
    let mi = m as i32;
    for (i, o) in out.iter_mut().enumerate() {
        let k = grid.mode_at(i);
        if k == Mode(0, 0) || k.sup_norm() > cutoff {
            continue;
        }
        let r = k.0.rem_euclid(mi) as usize;
        let c = k.1.rem_euclid(mi) as usize;
        *o = buf[r * m + c] * scale;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{SQRT_2, TAU};

    fn grid(k: u32) -> WaveGrid {
        WaveGrid::with_k(k).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn grid_bookkeeping() {
        let g = grid(3);
        assert_eq!(g.modes().count(), 48);
        assert_eq!(g.half_modes().count(), 24);
        assert!(!g.modes().any(|k| k == Mode(0, 0)));
        for k in g.modes() {
            assert!(g.contains(k.neg()));
            assert_eq!(g.mode_at(g.index(k).unwrap()), k);
        }
        assert_eq!(grid(8).product_size(), 32);
        assert_eq!(grid(16).product_size(), 64);
        assert_eq!(grid(16).product_cutoff(), 16);
        assert!(WaveGrid::new(0, 0.5).is_err());
        assert!(WaveGrid::new(4, 0.0).is_err());
        assert!(WaveGrid::new(4, 1.5).is_err());
    }

    #[test]
    fn sobolev_examples() {
        let g = grid(5);
        let one = Complex64::new(1.0, 0.0);
        let f = SpectralField::from_modes(g, FieldKind::Scalar, &[(Mode(1, 0), one)]).unwrap();
        assert!(close(f.sobolev_norm(SobolevExponent(0.0)), SQRT_2, 1e-15));
        let f = SpectralField::from_modes(g, FieldKind::Scalar, &[(Mode(3, 4), one)]).unwrap();
        assert!(close(f.sobolev_norm(SobolevExponent(1.0)), SQRT_2 * 5.0, 1e-14));
        let l2: f64 = f.iter().map(|(_, c)| c.norm_sqr()).sum();
        assert!(close(f.sobolev_norm(SobolevExponent(0.0)), l2.sqrt(), 1e-15));
    }

    #[test]
    fn fractional_laplacian_examples() {
        let g = grid(5);
        let one = Complex64::new(1.0, 0.0);
        let f = SpectralField::from_modes(g, FieldKind::DivFreeVector, &[(Mode(3, 4), one)]).unwrap();
        let lf = f.fractional_laplacian(1.5).unwrap();
        assert!(close(lf.get(Mode(3, 4)).re, 5f64.powf(1.5), 1e-14));
        assert_eq!(lf.kind(), FieldKind::DivFreeVector);
        let f = SpectralField::from_modes(g, FieldKind::Scalar, &[(Mode(1, 1), one)]).unwrap();
        assert!(close(f.fractional_laplacian(2.0).unwrap().get(Mode(1, 1)).re, 2.0, 1e-15));
        let z = SpectralField::zeros(g, FieldKind::Scalar).fractional_laplacian(0.7).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        assert!(matches!(f.fractional_laplacian(0.0), Err(Error::AlphaOutOfRange(_))));
        assert!(matches!(f.fractional_laplacian(2.5), Err(Error::AlphaOutOfRange(_))));
    }

    #[test]
    fn helmholtz_examples() {
        let g = grid(4);
        let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
        let v1 = SpectralField::from_modes(g, FieldKind::Scalar, &[(Mode(1, 0), a)]).unwrap();
        let v2 = SpectralField::from_modes(g, FieldKind::Scalar, &[(Mode(1, 0), b)]).unwrap();
        let p = helmholtz_project(&v1, &v2).unwrap();
        assert!((p.get(Mode(1, 0)) - b).norm() < 1e-15);
        // pure gradient: v̂ ∝ k
        let k = Mode(2, -3);
        let c = Complex64::new(0.0, 1.7);
        let g1 = SpectralField::from_modes(g, FieldKind::Scalar, &[(k, c * 2.0)]).unwrap();
        let g2 = SpectralField::from_modes(g, FieldKind::Scalar, &[(k, c * -3.0)]).unwrap();
        assert!(helmholtz_project(&g1, &g2).unwrap().max_abs() < 1e-15);
        let other = WaveGrid::with_k(5).unwrap();
        let w = SpectralField::zeros(other, FieldKind::Scalar);
        assert!(matches!(helmholtz_project(&v1, &w), Err(Error::GridMismatch)));
    }

    #[test]
    fn vector_reflection_rule() {
        let g = grid(3);
        let f = SpectralField::from_modes(g, FieldKind::DivFreeVector, &[(Mode(1, 2), Complex64::new(1.0, 2.0))])
            .unwrap();
        assert_eq!(f.get(Mode(-1, -2)), Complex64::new(-1.0, 2.0));
        assert_eq!(f.reflection_defect(), 0.0);
        let [c1, c2] = f.vector_components().unwrap();
        assert_eq!(c1.reflection_defect(), 0.0);
        assert_eq!(c2.reflection_defect(), 0.0);
    }

    #[test]
    fn physical_bridge() {
        let g = grid(3);
        let half = Complex64::new(0.5, 0.0);
        let f = SpectralField::from_modes(g, FieldKind::Scalar, &[(Mode(1, 0), half)]).unwrap();
        let m = 8;
        let s = f.to_physical(m).unwrap();
        for i in 0..m {
            for j in 0..m {
                let x1 = TAU * i as f64 / m as f64;
                assert!((s[0][i * m + j] - x1.cos()).abs() < 1e-14);
            }
        }
        let z = SpectralField::zeros(g, FieldKind::Scalar).to_physical(m).unwrap();
        assert!(z[0].iter().all(|&x| x == 0.0));
        assert!(matches!(f.to_physical(7), Err(Error::GridTooSmall { m: 7, min: 8 })));
        assert!(SpectralField::from_physical(g, &[0.0; 10], 8).is_err());
    }

    #[test]
    fn physical_roundtrip_any_size() {
        let g = grid(4);
        let mut rng = CounterRng::new(3, 0);
        for kind in [FieldKind::Scalar, FieldKind::DivFreeVector] {
            let f = SpectralField::random(g, kind, 1.0, &mut rng);
            for m in [10usize, 11, 16] {
                let s = f.to_physical(m).unwrap();
                let back = match kind {
                    FieldKind::Scalar => SpectralField::from_physical(g, &s[0], m).unwrap(),
                    FieldKind::DivFreeVector => {
                        SpectralField::from_physical_vector(g, [&s[0], &s[1]], m).unwrap()
                    }
                };
                let err = back.sub(&f).unwrap().sobolev_norm(SobolevExponent(0.0));
                assert!(err <= 1e-12 * f.sobolev_norm(SobolevExponent(0.0)), "m={m} err={err}");
            }
        }
    }

    #[test]
    fn physical_samples_of_vector_field_are_divergence_free() {
        let g = grid(4);
        let mut rng = CounterRng::new(5, 1);
        let f = SpectralField::random(g, FieldKind::DivFreeVector, 1.0, &mut rng);
        let [c1, c2] = f.vector_components().unwrap();
        let mut worst: f64 = 0.0;
        for k in g.modes() {
            let div = c1.get(k) * f64::from(k.0) + c2.get(k) * f64::from(k.1);
            worst = worst.max(div.norm());
        }
        assert!(worst <= 1e-14 * f.max_abs());
    }

    #[test]
    fn random_fields_nest() {
        let small = grid(4);
        let big = grid(8);
        let a = SpectralField::random(small, FieldKind::DivFreeVector, 2.0, &mut CounterRng::new(9, 2));
        let b = SpectralField::random(big, FieldKind::DivFreeVector, 2.0, &mut CounterRng::new(9, 2));
        for k in small.modes() {
            assert_eq!(a.get(k), b.get(k));
        }
    }
}
