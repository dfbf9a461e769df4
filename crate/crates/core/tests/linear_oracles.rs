//! Linear one-mode system: the skeleton and the rate functional against
//! solutions computed without the crate's integrator.

use fsns_core::dynamics::{ControlPath, Driver, Integrator, SimParams};
use fsns_core::ldp::{minimize_rate, skeleton_map, OptimizerConfig, TargetSet};
use fsns_core::rng::{stream_id, tag, CounterRng};
use fsns_core::spectral::{FieldKind, Mode, SobolevExponent, SpectralField, WaveGrid};
use fsns_core::stochastic::{sample_increment, CovarianceSpec, DiffusionSpec};
use fsns_core::Complex64;

const LAMBDA: f64 = 1.0;
const T: f64 = 1.0;

fn one_mode(dt: f64) -> (SimParams, CovarianceSpec, DiffusionSpec) {
    let g = WaveGrid::with_k(1).unwrap();
    (
        SimParams::new(g, 2.0, LAMBDA, T, dt, 0.0).unwrap().linearized(),
        CovarianceSpec::new(g, 2.0, 1.0).unwrap().with_noise_modes(1).unwrap(),
        DiffusionSpec::additive(),
    )
}

/// Minimal energy to steer `x' = -λx + √q θ` from 0 to `|x(T)| = a`:
/// shooting on the Hamiltonian system `x' = -λx + q p`, `p' = λp` with RK4
/// on `n` steps, energy `½∫ q p² dt` by Simpson's rule.
fn two_point_bvp(a: f64, q: f64, lambda: f64, t: f64, n: usize) -> f64 {
    let h = t / n as f64;
    let rhs = |x: f64, p: f64| (-lambda * x + q * p, lambda * p);
    let shoot = |p0: f64| {
        let (mut x, mut p) = (0.0, p0);
        let mut ps = vec![p];
        for _ in 0..n {
            let k1 = rhs(x, p);
            let k2 = rhs(x + 0.5 * h * k1.0, p + 0.5 * h * k1.1);
            let k3 = rhs(x + 0.5 * h * k2.0, p + 0.5 * h * k2.1);
            let k4 = rhs(x + h * k3.0, p + h * k3.1);
            x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            p += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            ps.push(p);
        }
        (x, ps)
    };
    // linear in p0
    let (x1, _) = shoot(1.0);
    let (_, ps) = shoot(a / x1);
    let mut simpson = 0.0;
    for (i, p) in ps.iter().enumerate() {
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        simpson += w * q * p * p;
    }
    0.5 * simpson * h / 3.0
}

fn closed_form(a: f64) -> f64 {
    a * a * LAMBDA / (1.0 - (-2.0 * LAMBDA * T).exp())
}

#[test]
fn bvp_oracle_agrees_with_closed_form() {
    for a in [0.1, 0.3, 1.0] {
        let e = two_point_bvp(a, 1.0, LAMBDA, T, 20_000);
        assert!((e / closed_form(a) - 1.0).abs() < 1e-9, "{e} {}", closed_form(a));
    }
}

#[test]
fn minimal_energy_matches_bvp() {
    let (p, q, g) = one_mode(1.0 / 200.0);
    let u0 = SpectralField::zeros(p.grid, FieldKind::DivFreeVector);
    for a in [0.3, 0.6] {
        let target = TargetSet::endpoint_ball(u0.clone(), a, SobolevExponent(1.0), true).unwrap();
        let r = minimize_rate(&target, &u0, &p, &q, &g, &OptimizerConfig::default()).unwrap();
        let oracle = two_point_bvp(a, 1.0, LAMBDA, T, 20_000);
        assert!(r.converged);
        assert!(r.terminal_residual <= 1e-3);
        assert!((r.energy / oracle - 1.0).abs() < 0.02, "a = {a}: {} vs {oracle}", r.energy);
    }
}

#[test]
fn skeleton_matches_variation_of_constants() {
    // constant control v on (1, 0): u(T) = e^{-λT} u0 + (1 - e^{-λT}) v / λ
    let k = Mode(1, 0);
    let (u0c, vc) = (Complex64::new(0.4, -0.1), Complex64::new(0.3, 0.2));
    let exact = u0c * (-LAMBDA * T).exp() + vc * (1.0 - (-LAMBDA * T).exp()) / LAMBDA;
    let mut errs = Vec::new();
    for dt in [0.01, 0.005, 0.0025] {
        let (p, q, g) = one_mode(dt);
        let u0 = SpectralField::from_modes(p.grid, FieldKind::DivFreeVector, &[(k, u0c)]).unwrap();
        let v = SpectralField::from_modes(p.grid, FieldKind::DivFreeVector, &[(k, vc)]).unwrap();
        let path = ControlPath::new(T, vec![v; 4]).unwrap();
        let tr = skeleton_map(&path, &u0, &p, &q, &g).unwrap();
        errs.push((tr.final_state().get(k) - exact).norm());
        // deterministic
        assert_eq!(tr, skeleton_map(&path, &u0, &p, &q, &g).unwrap());
    }
    assert!(errs[0] < 0.01 * exact.norm());
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 1.0).abs() < 0.05, "{errs:?}");
    }
}

#[test]
fn skeleton_refinement_is_stable() {
    // fixed control, dt and grid refined: the endpoint settles
    let g1 = WaveGrid::with_k(4).unwrap();
    let mut rng = CounterRng::new(3, stream_id(tag::INITIAL, 9));
    let v = SpectralField::random(g1, FieldKind::DivFreeVector, 2.0, &mut rng);
    let u0 = SpectralField::random(g1, FieldKind::DivFreeVector, 2.0, &mut rng).scaled(0.5);
    let mut ends = Vec::new();
    for (k, dt) in [(4u32, 0.01), (8, 0.005), (16, 0.0025)] {
        let g = WaveGrid::with_k(k).unwrap();
        let p = SimParams::new(g, 1.5, 1.0, 0.5, dt, 0.0).unwrap();
        let q = CovarianceSpec::new(g, 2.0, 1.0).unwrap();
        let path = ControlPath::new(0.5, vec![v.resampled(g); 5]).unwrap();
        let tr = skeleton_map(&path, &u0.resampled(g), &p, &q, &DiffusionSpec::additive()).unwrap();
        ends.push(tr.final_state().resampled(WaveGrid::with_k(16).unwrap()));
    }
    let d1 = ends[0].sub(&ends[1]).unwrap().sobolev_norm(SobolevExponent(1.0));
    let d2 = ends[1].sub(&ends[2]).unwrap().sobolev_norm(SobolevExponent(1.0));
    assert!(d2 < d1 && d2 < 1e-2 * ends[2].sobolev_norm(SobolevExponent(1.0)), "{d1} {d2}");
}

#[test]
fn increments_are_uncorrelated_in_time() {
    let g = WaveGrid::with_k(3).unwrap();
    let q = CovarianceSpec::new(g, 2.0, 1.0).unwrap();
    let mut rng = CounterRng::new(21, stream_id(tag::NOISE_CHECK, 1));
    let n = 20_000u64;
    let xs: Vec<f64> = (0..n).map(|s| sample_increment(&q, 0.01, s, &mut rng).unwrap().xi[2].1).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let lag1 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / ((n - 1) as f64 * var);
    assert!(lag1.abs() < 3.0 / (n as f64).sqrt(), "{lag1}");
}

#[test]
fn exponential_and_semi_implicit_agree_on_refinement() {
    let g = WaveGrid::with_k(6).unwrap();
    let q = CovarianceSpec::new(g, 2.0, 1.0).unwrap();
    let d = DiffusionSpec::additive();
    let u0 = fsns_core::dynamics::Preset::TwoMode { amplitude: 1.0 }.build(g).unwrap();
    let mut gaps = Vec::new();
    for dt in [0.01, 0.005, 0.0025] {
        let p = SimParams::new(g, 1.5, 1.0, 0.5, dt, 0.0).unwrap();
        let a = Integrator::new(&p, &q, &d).unwrap().endpoint(&u0, Driver::None).unwrap();
        let p2 = p.with_scheme(fsns_core::dynamics::Scheme::SemiImplicitEuler);
        let b = Integrator::new(&p2, &q, &d).unwrap().endpoint(&u0, Driver::None).unwrap();
        gaps.push(a.sub(&b).unwrap().sobolev_norm(SobolevExponent(1.0)));
    }
    assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
}
