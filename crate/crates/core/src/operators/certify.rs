//! Empirical certification of operator-norm estimates for `B`.
//!
//! The constants in these estimates are not constructive, so a bound is
//! "certified" when the worst observed ratio LHS/RHS over a random ensemble
//! stops growing under grid refinement: the per-doubling growth of the
//! maximum ratio must stay below [`GROWTH_LIMIT`]. Estimates whose constant
//! is exactly one (Cauchy-Schwarz type) are additionally checked against
//! that constant.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::operators::Convection;
use crate::rng::{stream_id, tag, CounterRng};
use crate::spectral::{FieldKind, SobolevExponent as S, SpectralField, WaveGrid};
use crate::{par, Error, Result};

pub const GROWTH_LIMIT: f64 = 1.25;
/// Slack on exact unit constants, for round-off.
pub const UNIT_SLACK: f64 = 1e-12;
/// Spectral decay exponents of the random ensemble, one drawn per trial.
pub const ENSEMBLE_DECAYS: [f64; 3] = [1.5, 2.0, 3.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimate {
    /// `|B(u,v)|_{H^{η-α/2}} ≤ c |u|_{H^{η+α/2}} |v|_{H^{η+α/2}}`.
    Bilinear,
    /// `|B(u,v)|_{H^{η-α/2}} ≤ c |u|_{H^{η+1-α/2}} |v|_{H^{η+1-α/2}}`, `η ≥ 1`.
    BilinearGain,
    /// `|v|²_{H^{1+α/4}} ≤ |v|_{H^1} |v|_{H^{1+α/2}}`, constant one.
    Interpolation,
    /// `|⟨B(v¹,v²),v³⟩_{H^1}| ≤ |v³|_{H^{1+α/2}} |B(v¹,v²)|_{H^{1-α/2}}`, constant one.
    TrilinearDuality,
    /// `|⟨B(v¹,v²),v³⟩_{H^1}| ≤ c |v³|_{H^{1+α/2}} |v¹|_{H^{1+α/4}} |v²|_{H^{1+α/4}}`.
    TrilinearInterpolated,
}

impl Estimate {
    pub const ALL: [Estimate; 5] = [
        Estimate::Bilinear,
        Estimate::BilinearGain,
        Estimate::Interpolation,
        Estimate::TrilinearDuality,
        Estimate::TrilinearInterpolated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimate::Bilinear => "bilinear",
            Estimate::BilinearGain => "bilinear_gain",
            Estimate::Interpolation => "interpolation",
            Estimate::TrilinearDuality => "trilinear_duality",
            Estimate::TrilinearInterpolated => "trilinear_interpolated",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }

    /// Exact constant, when the estimate has one.
    pub fn unit_constant(self) -> bool {
        matches!(self, Estimate::Interpolation | Estimate::TrilinearDuality)
    }
}

/// Lower end of the admissible dissipation range for `B: V_η × V_η → V_η*`:
/// `max{(4-2η)/3, 2η}` for `η ∈ [0,1)`, and `1` for `η ≥ 1`.
pub fn critical_alpha(eta: f64) -> f64 {
    if eta >= 1.0 {
        1.0
    } else {
        ((4.0 - 2.0 * eta) / 3.0).max(2.0 * eta)
    }
}

/// Checks `(α, η)` against the admissibility rule of `estimate`. For
/// `η ∈ [1/2, 1)` the range is the open interval `(α(η), 2)`.
pub fn check_admissible(estimate: Estimate, alpha: f64, eta: f64) -> Result<()> {
    let reject = |bound: String| Err(Error::Inadmissible { alpha, eta, bound });
    if !(alpha > 0.0 && alpha <= 2.0) {
        return reject(String::from("alpha must lie in (0, 2]"));
    }
    match estimate {
        Estimate::Bilinear | Estimate::BilinearGain => {
            if !(eta >= 0.0) {
                return reject(String::from("eta must be >= 0"));
            }
            if estimate == Estimate::BilinearGain && eta < 1.0 {
                return reject(String::from("the gain estimate needs eta >= 1"));
            }
            let a = critical_alpha(eta);
            if (0.5..1.0).contains(&eta) {
                if !(alpha > a && alpha < 2.0) {
                    return reject(format!("alpha in the open interval ({a}, 2) for eta in [1/2, 1)"));
                }
            } else if alpha < a {
                return reject(format!("alpha in [{a}, 2]"));
            }
            Ok(())
        }
        Estimate::TrilinearInterpolated => {
            if alpha < 4.0 / 3.0 {
                return reject(String::from("alpha in [4/3, 2]"));
            }
            Ok(())
        }
        Estimate::Interpolation | Estimate::TrilinearDuality => Ok(()),
    }
}

#[derive(Clone, Debug)]
pub struct CertifyConfig {
    pub trials: usize,
    /// Grid ladder, increasing `K`.
    pub grids: Vec<u32>,
    pub seed: u64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self { trials: 200, grids: alloc::vec![8, 16, 32], seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimateReport {
    pub name: String,
    pub alpha: f64,
    pub eta: f64,
    pub samples: usize,
    pub grid_sizes: Vec<u32>,
    pub max_ratio_per_grid: Vec<f64>,
    /// Growth of the max ratio normalised to one grid doubling.
    pub growth_per_doubling: Vec<f64>,
    pub max_ratio: f64,
    pub violated: bool,
}

struct Ensemble {
    rho: f64,
    seed: u64,
    trial: u64,
}

impl Ensemble {
    fn new(seed: u64, trial: usize) -> Self {
        let trial = trial as u64;
        let mut pick = CounterRng::new(seed, stream_id(tag::CERTIFY, 1 << 40));
        let idx = (pick.uniform(trial) * ENSEMBLE_DECAYS.len() as f64) as usize;
        Self { rho: ENSEMBLE_DECAYS[idx.min(ENSEMBLE_DECAYS.len() - 1)], seed, trial }
    }

    fn field(&self, grid: WaveGrid, slot: u64) -> SpectralField {
        let mut rng = CounterRng::new(self.seed, stream_id(tag::CERTIFY, 3 * self.trial + slot));
        SpectralField::random(grid, FieldKind::DivFreeVector, self.rho, &mut rng)
    }
}

fn ratio(estimate: Estimate, alpha: f64, eta: f64, conv: &Convection, ens: &Ensemble) -> Result<f64> {
    let g = *conv.grid();
    let h = alpha / 2.0;
    let r = match estimate {
        Estimate::Bilinear | Estimate::BilinearGain => {
            let (u, v) = (ens.field(g, 0), ens.field(g, 1));
            let s = if estimate == Estimate::Bilinear { eta + h } else { eta + 1.0 - h };
            let lhs = conv.apply(&u, &v)?.sobolev_norm(S(eta - h));
            lhs / (u.sobolev_norm(S(s)) * v.sobolev_norm(S(s)))
        }
        Estimate::Interpolation => {
            let v = ens.field(g, 0);
            v.sobolev_norm_sq(S(1.0 + alpha / 4.0)) / (v.sobolev_norm(S(1.0)) * v.sobolev_norm(S(1.0 + h)))
        }
        Estimate::TrilinearDuality | Estimate::TrilinearInterpolated => {
            let (v1, v2, v3) = (ens.field(g, 0), ens.field(g, 1), ens.field(g, 2));
            let b = conv.apply(&v1, &v2)?;
            let lhs = b.sobolev_inner(&v3, S(1.0))?.abs();
            let rhs = if estimate == Estimate::TrilinearDuality {
                v3.sobolev_norm(S(1.0 + h)) * b.sobolev_norm(S(1.0 - h))
            } else {
                let q = S(1.0 + alpha / 4.0);
                v3.sobolev_norm(S(1.0 + h)) * v1.sobolev_norm(q) * v2.sobolev_norm(q)
            };
            lhs / rhs
        }
    };
    Ok(r)
}

/// Samples `cfg.trials` random ensembles on every grid of the ladder and
/// records the worst ratio per grid.
pub fn certify_estimate(estimate: Estimate, alpha: f64, eta: f64, cfg: &CertifyConfig) -> Result<EstimateReport> {
    check_admissible(estimate, alpha, eta)?;
    if cfg.grids.is_empty() || cfg.trials == 0 {
        return Err(Error::invalid("certification needs at least one grid and one trial"));
    }
    if cfg.grids.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid ladder must be strictly increasing"));
    }
    let mut max_per_grid = Vec::with_capacity(cfg.grids.len());
    for &k in &cfg.grids {
        let conv = Convection::new(WaveGrid::with_k(k)?);
        let ratios = par::map_indexed(cfg.trials, |t| ratio(estimate, alpha, eta, &conv, &Ensemble::new(cfg.seed, t)));
        let mut worst: f64 = 0.0;
        for r in ratios {
            let r = r?;
            worst = if r.is_nan() { f64::INFINITY } else { worst.max(r) };
        }
        max_per_grid.push(worst);
    }
    let growth: Vec<f64> = cfg
        .grids
        .windows(2)
        .zip(max_per_grid.windows(2))
        .map(|(k, r)| {
            let doublings = libm::log2(f64::from(k[1]) / f64::from(k[0]));
            libm::pow(r[1] / r[0], 1.0 / doublings)
        })
        .collect();
    let max_ratio = max_per_grid.iter().cloned().fold(0.0, f64::max);
    let mut violated = growth.iter().any(|&g| !(g < GROWTH_LIMIT)) || !max_ratio.is_finite();
    if estimate.unit_constant() {
        violated |= max_ratio > 1.0 + UNIT_SLACK;
    }
    Ok(EstimateReport {
        name: String::from(estimate.name()),
        alpha,
        eta,
        samples: cfg.trials,
        grid_sizes: cfg.grids.clone(),
        max_ratio_per_grid: max_per_grid,
        growth_per_doubling: growth,
        max_ratio,
        violated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_alpha_values() {
        assert!((critical_alpha(0.0) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(critical_alpha(1.0), 1.0);
        assert_eq!(critical_alpha(3.0), 1.0);
        assert!((critical_alpha(0.25) - 7.0 / 6.0).abs() < 1e-15);
        assert_eq!(critical_alpha(0.75), 1.5);
    }

    #[test]
    fn admissibility() {
        assert!(check_admissible(Estimate::Bilinear, 4.0 / 3.0, 0.0).is_ok());
        assert!(check_admissible(Estimate::Bilinear, 1.3, 0.0).is_err());
        assert!(check_admissible(Estimate::Bilinear, 1.0, 1.0).is_ok());
        assert!(check_admissible(Estimate::Bilinear, 1.5, 0.75).is_err());
        assert!(check_admissible(Estimate::Bilinear, 1.6, 0.75).is_ok());
        assert!(check_admissible(Estimate::Bilinear, 2.0, 0.75).is_err());
        assert!(check_admissible(Estimate::BilinearGain, 1.5, 0.5).is_err());
        match check_admissible(Estimate::Bilinear, 1.0, 0.0) {
            Err(Error::Inadmissible { bound, .. }) => assert!(bound.contains("1.333")),
            other => panic!("{other:?}"),
        }
        assert!(check_admissible(Estimate::TrilinearInterpolated, 1.2, 1.0).is_err());
    }

    #[test]
    fn gain_estimate_is_bounded_on_small_ladder() {
        let cfg = CertifyConfig { trials: 20, grids: alloc::vec![4, 8, 16], seed: 1 };
        let rep = certify_estimate(Estimate::BilinearGain, 1.5, 1.0, &cfg).unwrap();
        assert!(!rep.violated, "{rep:?}");
        assert_eq!(rep.max_ratio_per_grid.len(), 3);
        let rep = certify_estimate(Estimate::Interpolation, 1.5, 0.0, &cfg).unwrap();
        assert!(rep.max_ratio <= 1.0 + UNIT_SLACK && !rep.violated);
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = CertifyConfig { trials: 8, grids: alloc::vec![4, 8], seed: 3 };
        let a = certify_estimate(Estimate::Bilinear, 2.0, 0.0, &cfg).unwrap();
        let b = certify_estimate(Estimate::Bilinear, 2.0, 0.0, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
