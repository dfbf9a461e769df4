//! Two-dimensional complex DFT on an `M × M` row-major grid.
//!
//! Power-of-two sizes use an iterative radix-2 transform; any other size
//! falls back to a direct O(M²)-per-line DFT, which is only used by the
//! physical-space bridge on odd-sized user grids.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;

#[derive(Clone, Debug)]
enum Plan {
    Radix2 { twiddles: Vec<Complex64>, bitrev: Vec<usize> },
    Direct { table: Vec<Complex64> },
}

#[derive(Clone, Debug)]
pub struct Fft2 {
    m: usize,
    plan: Plan,
}

fn root(j: usize, m: usize) -> Complex64 {
    let (s, c) = libm::sincos(-TAU * j as f64 / m as f64);
    Complex64::new(c, s)
}

impl Fft2 {
    pub fn new(m: usize) -> Self {
        assert!(m > 0, "empty transform");
        let plan = if m.is_power_of_two() {
            let bits = m.trailing_zeros();
            let bitrev = (0..m)
                .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
                .collect();
            let twiddles = (0..m / 2).map(|j| root(j, m)).collect();
            Plan::Radix2 { twiddles, bitrev }
        } else {
            Plan::Direct { table: (0..m).map(|j| root(j, m)).collect() }
        };
        Self { m, plan }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    /// Unnormalised forward transform, kernel `e^{-2πi jk/M}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform_2d(data, false);
    }

    /// Unnormalised inverse transform, kernel `e^{+2πi jk/M}`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform_2d(data, true);
    }

    fn transform_2d(&self, data: &mut [Complex64], inverse: bool) {
        let m = self.m;
        assert_eq!(data.len(), m * m, "buffer is not M x M");
        let mut scratch = vec![Complex64::new(0.0, 0.0); m];
        for row in data.chunks_exact_mut(m) {
            self.transform_1d(row, &mut scratch, inverse);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); m];
        for j in 0..m {
            for i in 0..m {
                col[i] = data[i * m + j];
            }
            self.transform_1d(&mut col, &mut scratch, inverse);
            for i in 0..m {
                data[i * m + j] = col[i];
            }
        }
    }

    fn transform_1d(&self, x: &mut [Complex64], scratch: &mut [Complex64], inverse: bool) {
        let m = self.m;
        match &self.plan {
            Plan::Radix2 { twiddles, bitrev } => {
                for i in 0..m {
                    let j = bitrev[i];
                    if i < j {
                        x.swap(i, j);
                    }
                }
                let mut len = 2;
                while len <= m {
                    let half = len / 2;
                    let stride = m / len;
                    for start in (0..m).step_by(len) {
                        for j in 0..half {
                            let w = twiddles[j * stride];
                            let w = if inverse { w.conj() } else { w };
                            let a = x[start + j];
                            let b = x[start + j + half] * w;
                            x[start + j] = a + b;
                            x[start + j + half] = a - b;
                        }
                    }
                    len <<= 1;
                }
            }
            Plan::Direct { table } => {
                for (k, out) in scratch.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (n, v) in x.iter().enumerate() {
                        let w = table[(k * n) % m];
                        acc += v * if inverse { w.conj() } else { w };
                    }
                    *out = acc;
                }
                x.copy_from_slice(scratch);
            }
        }
    }
}
