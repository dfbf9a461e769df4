//! BFGS with central finite-difference gradients and Armijo backtracking.
//!
//! The objective may return `+∞` (for instance after a blown-up solve); the
//! line search treats that as a failed trial step.

use alloc::vec;
use alloc::vec::Vec;

use crate::par::map_indexed;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BfgsConfig {
    pub max_iter: usize,
    /// Stop once `max_i |∂_i f| ≤ grad_tol`.
    pub grad_tol: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        Self { max_iter: 200, grad_tol: 1e-8, fd_step: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Gradient tolerance reached (as opposed to iteration cap or stalled
    /// line search).
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central differences; the `2n` evaluations run concurrently.
pub fn fd_gradient<F: Fn(&[f64]) -> f64 + Sync>(f: &F, x: &[f64], rel_step: f64) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|v| rel_step * v.abs().max(1.0)).collect();
    let vals = map_indexed(2 * n, |j| {
        let (i, sign) = (j / 2, if j % 2 == 0 { 1.0 } else { -1.0 });
        let mut y = x.to_vec();
        y[i] += sign * h[i];
        f(&y)
    });
    (0..n).map(|i| (vals[2 * i] - vals[2 * i + 1]) / (2.0 * h[i])).collect()
}

pub fn bfgs<F: Fn(&[f64]) -> f64 + Sync>(f: &F, x0: Vec<f64>, cfg: &BfgsConfig) -> Minimum {
    let n = x0.len();
    let mut x = x0;
    let mut fx = f(&x);
    if n == 0 {
        return Minimum { x, value: fx, iterations: 0, converged: true };
    }
    let mut g = fd_gradient(f, &x, cfg.fd_step);
    let mut h = identity(n);
    let mut fresh = true;
    for iter in 0..cfg.max_iter {
        if g.iter().all(|v| v.abs() <= cfg.grad_tol) {
            return Minimum { x, value: fx, iterations: iter, converged: true };
        }
        let d: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&g, &d);
        let d = if slope < 0.0 {
            d
        } else {
            // lost descent: restart along the gradient
            h = identity(n);
            fresh = true;
            slope = -dot(&g, &g);
            g.iter().map(|v| -v).collect()
        };
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let ft = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_)) = accepted else {
            if fresh {
                return Minimum { x, value: fx, iterations: iter, converged: false };
            }
            h = identity(n);
            fresh = true;
            continue;
        };
        let gn = fd_gradient(f, &xn, cfg.fd_step);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * libm::sqrt(dot(&s, &s) * dot(&y, &y)) {
            if fresh {
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v *= scale);
            }
            update_inverse(&mut h, &s, &y, sy);
            fresh = false;
        }
        let stalled = (fx - fn_).abs() <= 1e-15 * fx.abs().max(1e-300) && step < 1e-8;
        x = xn;
        fx = fn_;
        g = gn;
        if stalled {
            return Minimum { x, value: fx, iterations: iter + 1, converged: false };
        }
    }
    let converged = g.iter().all(|v| v.abs() <= cfg.grad_tol);
    Minimum { x, value: fx, iterations: cfg.max_iter, converged }
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

/// `H ← (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ`, `ρ = 1/(sᵀy)`.
fn update_inverse(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
