//! # fsns-core
//!
//! Fourier-Galerkin solver for the two-dimensional fractional stochastic
//! Navier-Stokes equation on the torus `(0, 2π)²`,
//!
//! ```text
//! du = (-ν A_α u + B(u)) dt + √ε G(t, u) dW,    A_α = (-Δ)^{α/2},  B(u) = Π((u·∇)u),
//! ```
//!
//! together with the small-noise large-deviation toolkit built on top of it:
//! the skeleton (control) equation, the control-energy rate functional and
//! its penalised minimisation, and crude Monte Carlo estimates of
//! `ε log P(u^ε ∈ F)`.
//!
//! The crate is `no_std` + `alloc`. The default `std` and `parallel`
//! features only switch on rayon for the embarrassingly parallel loops
//! (Monte Carlo paths, certification trials, finite-difference gradients);
//! every numeric result is independent of the feature set and of the
//! thread count.
//!
//! Module map:
//!
//! * [`spectral`]: wave grids, spectral fields, Sobolev norms, Helmholtz
//!   projection, fractional Laplacian, physical-space bridge.
//! * [`operators`]: the convection operator `B`, trilinear form, curl,
//!   Biot-Savart, and [`operators::certify`] for operator-norm estimates.
//! * [`stochastic`]: Q-Wiener increments, Cameron-Martin norm, diffusion
//!   operators `G(t, u)` and their `L_Q` norms.
//! * [`dynamics`]: time stepping of the stochastic, skeleton and vorticity
//!   equations.
//! * [`checks`]: randomised identity and noise checks with pass/fail
//!   records.
//! * [`ldp`]: target sets, the rate functional, its minimisation and the
//!   Monte Carlo LDP curve.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod checks;
pub mod dynamics;
mod error;
pub mod fft;
pub mod ldp;
pub mod operators;
pub mod optimize;
mod par;
pub mod rng;
pub mod spectral;
pub mod stochastic;

pub use error::{Error, Result};
pub use num_complex::Complex64;
