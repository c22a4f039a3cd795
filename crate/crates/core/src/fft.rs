//! Thin wrappers over rustfft for tensor grids stored row-major (axis 0 slowest).

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::C64;

pub struct TensorFft {
    n: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl TensorFft {
    pub fn new(n: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, dim, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [C64]) {
        assert_eq!(data.len(), self.len());
        let n = self.n;
        match self.dim {
            1 => plan.process(data),
            2 => {
                plan.process(data);
                let mut col = vec![C64::new(0.0, 0.0); n];
                for c in 0..n {
                    for r in 0..n {
                        col[r] = data[r * n + c];
                    }
                    plan.process(&mut col);
                    for r in 0..n {
                        data[r * n + c] = col[r];
                    }
                }
            }
            d => panic!("tensor FFT supports 1 or 2 axes, got {d}"),
        }
    }

    /// Unnormalized `Σ_j e^{-2πi jm/N} u_j`.
    pub fn forward(&self, data: &mut [C64]) {
        self.run(&self.forward, data);
    }

    /// Unnormalized `Σ_m e^{+2πi jm/N} v_m`.
    pub fn inverse(&self, data: &mut [C64]) {
        self.run(&self.inverse, data);
    }

    /// Applies the Fourier multiplier `mult` (FFT ordering), normalized.
    pub fn multiply(&self, data: &mut [C64], mult: &[f64]) {
        self.forward(data);
        let scale = 1.0 / self.len() as f64;
        for (v, m) in data.iter_mut().zip(mult) {
            *v *= m * scale;
        }
        self.inverse(data);
    }

    pub fn multiply_complex(&self, data: &mut [C64], mult: &[C64]) {
        self.forward(data);
        let scale = 1.0 / self.len() as f64;
        for (v, m) in data.iter_mut().zip(mult) {
            *v *= m * scale;
        }
        self.inverse(data);
    }
}

/// Signed frequency index of FFT slot `m`: `0..N/2-1, -N/2..-1`.
pub fn signed_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let f = TensorFft::new(8, 2);
        let orig: Vec<C64> = (0..64).map(|k| C64::new(k as f64, (k * k % 7) as f64)).collect();
        let mut v = orig.clone();
        f.multiply(&mut v, &vec![1.0; 64]);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_plane_wave() {
        let n = 16;
        let f = TensorFft::new(n, 1);
        let k = 3.0;
        let x: Vec<f64> = (0..n).map(|j| 2.0 * std::f64::consts::PI * j as f64 / n as f64).collect();
        let mut v: Vec<C64> = x.iter().map(|&t| C64::new(0.0, k * t).exp()).collect();
        let mult: Vec<C64> = (0..n).map(|m| C64::new(0.0, signed_index(m, n) as f64)).collect();
        f.multiply_complex(&mut v, &mult);
        for (j, &t) in x.iter().enumerate() {
            let want = C64::new(0.0, k) * C64::new(0.0, k * t).exp();
            assert!((v[j] - want).norm() < 1e-12);
        }
    }
}
