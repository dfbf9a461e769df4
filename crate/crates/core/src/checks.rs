//! Randomised identity and noise checks with pass/fail records.

use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::operators::{biot_savart, curl, Convection};
use crate::par::map_indexed;
use crate::rng::{stream_id, tag, CounterRng};
use crate::spectral::{helmholtz_project, FieldKind, Mode, SobolevExponent as S, SpectralField, WaveGrid};
use crate::stochastic::{lq_distance, lq_norm, sample_increment, CovarianceSpec, DiffusionSpec};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckResult {
    pub name: String,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    /// Largest value that passes.
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: String::from(name), value, tolerance, pass: value <= tolerance }
    }
}

fn worst(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    let mut w: f64 = 0.0;
    for v in values {
        let v = v?;
        w = if v.is_nan() { f64::INFINITY } else { w.max(v) };
    }
    Ok(w)
}

fn rel(err: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

fn rng(seed: u64, trial: usize, slot: u64) -> CounterRng {
    CounterRng::new(seed, stream_id(tag::NOISE_CHECK, (1 << 32) + 8 * trial as u64 + slot))
}

fn scalar(grid: WaveGrid, seed: u64, trial: usize, slot: u64) -> SpectralField {
    SpectralField::random(grid, FieldKind::Scalar, 1.0, &mut rng(seed, trial, slot))
}

fn vector(grid: WaveGrid, seed: u64, trial: usize, slot: u64) -> SpectralField {
    SpectralField::random(grid, FieldKind::DivFreeVector, 1.0, &mut rng(seed, trial, slot))
}

/// `max_k |k·v̂(k)| / max_k |k||v̂(k)|` over the Cartesian components.
fn divergence_defect(v: &SpectralField) -> Result<f64> {
    let [a, b] = v.vector_components()?;
    let mut div: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for k in v.grid().modes() {
        let d = a.get(k) * f64::from(k.0) + b.get(k) * f64::from(k.1);
        div = div.max(d.norm());
        scale = scale.max(k.norm() * (a.get(k).norm() + b.get(k).norm()));
    }
    let mean = a.get(Mode(0, 0)).norm() + b.get(Mode(0, 0)).norm();
    Ok(rel(div, scale) + mean)
}

fn vector_inner(x: &[SpectralField; 2], y: &[SpectralField; 2]) -> Result<f64> {
    Ok(x[0].l2_inner(&y[0])? + x[1].l2_inner(&y[1])?)
}

fn vector_norm(x: &[SpectralField; 2]) -> Result<f64> {
    Ok(libm::sqrt(vector_inner(x, x)?))
}

/// Projection, curl and Biot-Savart identities on `trials` random fields of
/// one grid; relative errors against `tol`.
pub fn structural_identities(grid: WaveGrid, trials: usize, seed: u64, tol: f64) -> Result<Vec<CheckResult>> {
    let conv = Convection::new(grid);
    let per_trial = map_indexed(trials, |t| -> Result<[f64; 6]> {
        let (a, b, c, d) = (scalar(grid, seed, t, 0), scalar(grid, seed, t, 1), scalar(grid, seed, t, 2), scalar(grid, seed, t, 3));
        let w = helmholtz_project(&a, &b)?;
        let again = helmholtz_project(&w.vector_components()?[0], &w.vector_components()?[1])?;
        let idem = rel(again.sub(&w)?.max_abs(), w.max_abs());

        let (x, y) = ([a, b], [c, d]);
        let px = helmholtz_project(&x[0], &x[1])?.vector_components()?;
        let py = helmholtz_project(&y[0], &y[1])?.vector_components()?;
        let adj = rel((vector_inner(&px, &y)? - vector_inner(&x, &py)?).abs(), vector_norm(&x)? * vector_norm(&y)?);

        let (u, v) = (vector(grid, seed, t, 4), vector(grid, seed, t, 5));
        let bu = conv.apply(&u, &v)?;
        let theta = curl(&u)?;
        let div = [divergence_defect(&w)?, divergence_defect(&bu)?, divergence_defect(&biot_savart(&theta)?)?]
            .into_iter()
            .fold(0.0, f64::max);
        let mean = [w.get(Mode(0, 0)), bu.get(Mode(0, 0)), theta.get(Mode(0, 0))]
            .iter()
            .map(|z: &Complex64| z.norm())
            .fold(0.0, f64::max);

        let th = scalar(grid, seed, t, 6);
        let cb = rel(curl(&biot_savart(&th)?)?.sub(&th)?.max_abs(), th.max_abs())
            .max(rel(biot_savart(&theta)?.sub(&u)?.max_abs(), u.max_abs()));

        let mut comm: f64 = 0.0;
        for alpha in [4.0 / 3.0, 1.5, 2.0] {
            let lhs = curl(&u.fractional_laplacian(alpha)?)?;
            let rhs = theta.fractional_laplacian(alpha)?;
            comm = comm.max(rel(lhs.sub(&rhs)?.max_abs(), rhs.max_abs()));
        }
        Ok([idem, adj, div, mean, cb, comm])
    });
    let mut cols = [0.0f64; 6];
    for r in per_trial {
        for (c, v) in cols.iter_mut().zip(r?) {
            *c = if v.is_nan() { f64::INFINITY } else { c.max(v) };
        }
    }
    let names = [
        "helmholtz_idempotent",
        "helmholtz_self_adjoint",
        "divergence_free",
        "zero_mean",
        "curl_biot_savart_inverse",
        "curl_commutes_with_fractional_laplacian",
    ];
    Ok(names.iter().zip(cols).map(|(n, v)| CheckResult::new(n, v, tol)).collect())
}

/// `b(u,v,v)_{L²} = 0` and `⟨B(u),u⟩_{H¹} = 0`, relative to the field
/// scale `|B|·|v|` of each pairing.
pub fn trilinear_cancellations(grid: WaveGrid, trials: usize, seed: u64, tol: f64) -> Result<Vec<CheckResult>> {
    let conv = Convection::new(grid);
    let res = map_indexed(trials, |t| -> Result<(f64, f64)> {
        let (u, v) = (vector(grid, seed, t, 0), vector(grid, seed, t, 1));
        let buv = conv.apply(&u, &v)?;
        let l2 = rel(buv.l2_inner(&v)?.abs(), buv.sobolev_norm(S(0.0)) * v.sobolev_norm(S(0.0)));
        let buu = conv.apply(&u, &u)?;
        let h1 = rel(buu.sobolev_inner(&u, S(1.0))?.abs(), buu.sobolev_norm(S(1.0)) * u.sobolev_norm(S(1.0)));
        Ok((l2, h1))
    });
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for r in res {
        let (x, y) = r?;
        a = a.max(x);
        b = b.max(y);
    }
    Ok(alloc::vec![
        CheckResult::new("trilinear_l2_cancellation", a, tol),
        CheckResult::new("trilinear_h1_cancellation", b, tol),
    ])
}

/// Noise and diffusion checks: increment variance against `dt tr Q`,
/// lag-one autocorrelation, `H₀` isometry, real increments, and the
/// Lipschitz, growth and Hölder bounds of `G` on `[0, horizon]`.
pub fn noise_checks(
    q: &CovarianceSpec,
    g: &DiffusionSpec,
    horizon: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    let grid = *q.grid();
    let dt = 0.01;
    let mut rng_inc = CounterRng::new(seed, stream_id(tag::NOISE_CHECK, 0));
    let mut mean_sq = 0.0;
    let mut lag = Vec::with_capacity(samples);
    let mut defect: f64 = 0.0;
    for s in 0..samples as u64 {
        let inc = sample_increment(q, dt, s, &mut rng_inc)?;
        let f = inc.field(q);
        defect = defect.max(f.reflection_defect());
        mean_sq += f.sobolev_norm_sq(S(1.0));
        lag.push(inc.xi.first().map_or(0.0, |x| x.1));
    }
    let variance = rel((mean_sq / samples as f64 - dt * q.trace()).abs(), dt * q.trace());
    let n = lag.len() as f64;
    let m = lag.iter().sum::<f64>() / n;
    let var = lag.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    let ac = lag.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / ((n - 1.0) * var);

    let trials = 200;
    let iso = worst((0..trials).map(|t| {
        let w = vector(grid, seed, t, 0);
        Ok(rel((q.h0_norm(&q.sqrt_apply(&w)?)? - w.sobolev_norm(S(1.0))).abs(), w.sobolev_norm(S(1.0))))
    }))?;

    let lip_c = g.lipschitz_constant(q, horizon);
    let grow_c = g.growth_constant(q, horizon);
    let hold_c = g.holder_constant(q);
    let mut pick = CounterRng::new(seed, stream_id(tag::NOISE_CHECK, 2));
    let mut ratios = [0.0f64; 3];
    for t in 0..trials {
        let scale = 10.0 * pick.uniform(3 * t as u64);
        let (u, v) = (vector(grid, seed, t, 1).scaled(scale), vector(grid, seed, t, 2));
        let t1 = horizon * pick.uniform(3 * t as u64 + 1);
        let t2 = horizon * pick.uniform(3 * t as u64 + 2);
        let d = u.sub(&v)?.sobolev_norm(S(1.0));
        let nu = 1.0 + u.sobolev_norm(S(1.0));
        let bound = |lhs: f64, rhs: f64| if lhs == 0.0 { 0.0 } else { lhs / rhs };
        ratios[0] = ratios[0].max(bound(lq_distance(q, g, (t1, &u), (t1, &v)), lip_c * d));
        ratios[1] = ratios[1].max(bound(lq_norm(q, g, t1, &u), grow_c * nu));
        ratios[2] = ratios[2].max(bound(
            lq_distance(q, g, (t1, &u), (t2, &u)),
            hold_c * nu * libm::pow((t1 - t2).abs(), g.gamma),
        ));
    }
    let unit = 1.0 + 1e-12;
    Ok(alloc::vec![
        CheckResult::new("increment_variance_rel_error", variance, 0.05),
        CheckResult::new("increment_lag1_autocorrelation", ac.abs(), 3.0 / libm::sqrt(n)),
        CheckResult::new("increment_reflection_defect", defect, 0.0),
        CheckResult::new("h0_isometry_rel_error", iso, 1e-12),
        CheckResult::new("lipschitz_ratio", ratios[0], unit),
        CheckResult::new("linear_growth_ratio", ratios[1], unit),
        CheckResult::new("time_holder_ratio", ratios[2], unit),
    ])
}
