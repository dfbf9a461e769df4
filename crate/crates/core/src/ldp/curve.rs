//! Crude Monte Carlo for `P(u^ε ∈ F)` and the comparison with `-I`.

use alloc::string::String;
use alloc::vec::Vec;

use super::{summarize, RateResult, TargetKind, TargetSet};
use crate::dynamics::{Driver, Integrator, SimParams};
use crate::par::map_indexed;
use crate::spectral::SpectralField;
use crate::stochastic::{CovarianceSpec, DiffusionSpec};
use crate::{Error, Result};

/// Normal quantile of the 95% Wilson interval.
pub const WILSON_Z: f64 = 1.96;

const CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    pub epsilon: f64,
    pub samples: usize,
    pub hits: usize,
    pub p_hat: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// `ε log P̂`; absent when no path hit the target.
    pub eps_log_p: Option<f64>,
    /// `ε log` of the Wilson bounds (the lower one absent for zero hits).
    pub eps_log_p_low: Option<f64>,
    pub eps_log_p_high: f64,
    /// Half-width of the interval on the `ε log P` scale.
    pub half_width: Option<f64>,
    /// The estimate is only an upper bound.
    pub zero_hits: bool,
}

fn wilson(hits: usize, n: usize) -> (f64, f64) {
    let (k, n) = (hits as f64, n as f64);
    let p = k / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * libm::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

impl CurvePoint {
    pub fn from_counts(epsilon: f64, hits: usize, samples: usize) -> Self {
        let p_hat = hits as f64 / samples as f64;
        let (lo, hi) = wilson(hits, samples);
        let elog = |x: f64| if x > 0.0 { Some(epsilon * libm::log(x)) } else { None };
        let eps_log_p = elog(p_hat);
        let eps_log_p_low = elog(lo);
        let eps_log_p_high = epsilon * libm::log(hi);
        Self {
            epsilon,
            samples,
            hits,
            p_hat,
            wilson_low: lo,
            wilson_high: hi,
            eps_log_p,
            eps_log_p_low,
            eps_log_p_high,
            half_width: eps_log_p_low.map(|l| 0.5 * (eps_log_p_high - l)),
            zero_hits: hits == 0,
        }
    }
}

/// Whether a path that blew up counts as a hit.
fn blowup_hits(target: &TargetSet) -> bool {
    match target.kind {
        TargetKind::EndpointBall { outside, .. } => outside,
        TargetKind::SupExceed { .. } => true,
    }
}

/// One rung: `n_samples` paths at noise level `epsilon`. Path `i` uses noise
/// stream `i` of `seed`, so rungs share their noise paths.
pub fn estimate_ldp_rung(
    target: &TargetSet,
    u0: &SpectralField,
    p: &SimParams,
    q: &CovarianceSpec,
    g: &DiffusionSpec,
    epsilon: f64,
    n_samples: usize,
    seed: u64,
) -> Result<CurvePoint> {
    if !(epsilon > 0.0) || n_samples == 0 {
        return Err(Error::invalid("Monte Carlo rung needs epsilon > 0 and at least one sample"));
    }
    let mut pe = *p;
    pe.epsilon = epsilon;
    let integ = Integrator::new(&pe, q, g)?;
    let chunks = n_samples.div_ceil(CHUNK);
    let counts = map_indexed(chunks, |c| -> Result<usize> {
        let mut hits = 0;
        for i in c * CHUNK..((c + 1) * CHUNK).min(n_samples) {
            let hit = match summarize(&integ, target, u0, Driver::noise(seed, i as u64)) {
                Ok(s) => target.contains(&s)?,
                Err(Error::BlowUp { .. }) => blowup_hits(target),
                Err(e) => return Err(e),
            };
            hits += usize::from(hit);
        }
        Ok(hits)
    });
    let mut hits = 0;
    for c in counts {
        hits += c?;
    }
    Ok(CurvePoint::from_counts(epsilon, hits, n_samples))
}

/// One [`CurvePoint`] per noise level; `epsilons` must be positive and
/// strictly decreasing.
pub fn estimate_ldp_curve(
    target: &TargetSet,
    u0: &SpectralField,
    p: &SimParams,
    q: &CovarianceSpec,
    g: &DiffusionSpec,
    epsilons: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("epsilon ladder must be positive and strictly decreasing"));
    }
    epsilons.iter().map(|&e| estimate_ldp_rung(target, u0, p, q, g, e, n_samples, seed)).collect()
}

/// Intercept at `ε = 0` of the least-squares line through `(ε, ε log P̂)`
/// over rungs with at least one hit; a single usable rung is returned as is.
pub fn extrapolate(points: &[CurvePoint]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter_map(|c| c.eps_log_p.map(|y| (c.epsilon, y))).collect();
    match pts.len() {
        0 => None,
        1 => Some(pts[0].1),
        n => {
            let n = n as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            Some(my - sxy / sxx * mx)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SanityTolerance {
    /// Band half-width relative to `I`.
    pub relative: f64,
    /// Additive slack, dominant for `I ≈ 0`.
    pub absolute: f64,
}

impl Default for SanityTolerance {
    fn default() -> Self {
        Self { relative: 0.2, absolute: 0.02 }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SanityReport {
    pub target: String,
    /// `I` of the shrunk set (interior surrogate); absent when infeasible.
    pub rate_interior: Option<f64>,
    /// `I` of the grown set (closure surrogate).
    pub rate_closure: Option<f64>,
    /// Lower end of the accepted band; absent means `-∞`.
    pub band_low: Option<f64>,
    pub band_high: f64,
    pub extrapolated: Option<f64>,
    pub curve: Vec<CurvePoint>,
    pub tolerance: SanityTolerance,
    pub pass: bool,
}

/// `-I(F̊) ≤ lim ε log P ≤ -I(F̄)`, widened by `tol`, against the
/// extrapolated Monte Carlo curve.
pub fn ldp_sanity_report(
    target: &TargetSet,
    interior: &RateResult,
    closure: &RateResult,
    curve: Vec<CurvePoint>,
    tol: SanityTolerance,
) -> SanityReport {
    let rate = |r: &RateResult| r.converged.then_some(r.energy);
    let (ri, rc) = (rate(interior), rate(closure));
    let band_low = ri.map(|i| -i - tol.relative * i - tol.absolute);
    let band_high = match rc {
        Some(i) => -i + tol.relative * i + tol.absolute,
        // closure unreachable: the upper bound is -∞, nothing can pass
        None => f64::NEG_INFINITY,
    };
    let extrapolated = extrapolate(&curve);
    let pass = match extrapolated {
        Some(x) => band_low.is_none_or(|lo| x >= lo) && x <= band_high,
        None => false,
    };
    SanityReport {
        target: target.description.clone(),
        rate_interior: ri,
        rate_closure: rc,
        band_low,
        band_high,
        extrapolated,
        curve,
        tolerance: tol,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_interval() {
        let (lo, hi) = wilson(50, 100);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
        let (lo, hi) = wilson(0, 100);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.0370).abs() < 1e-4);
        let c = CurvePoint::from_counts(0.1, 0, 100);
        assert!(c.zero_hits && c.eps_log_p.is_none() && c.eps_log_p_high < 0.0);
    }

    #[test]
    fn extrapolation_is_exact_on_lines() {
        let pts: Vec<CurvePoint> = [0.1, 0.05, 0.02]
            .iter()
            .map(|&e| {
                let mut c = CurvePoint::from_counts(e, 1, 2);
                c.eps_log_p = Some(-0.3 + 2.0 * e);
                c
            })
            .collect();
        assert!((extrapolate(&pts).unwrap() + 0.3).abs() < 1e-14);
        assert_eq!(extrapolate(&[]), None);
    }
}
