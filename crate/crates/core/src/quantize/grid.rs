use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Even with no prime factor above 5: powers of two and sizes such as 96.
pub fn is_fft_friendly(points: usize) -> bool {
    if points == 0 || points % 2 == 1 {
        return false;
    }
    let mut m = points;
    for p in [2, 3, 5] {
        while m % p == 0 {
            m /= p;
        }
    }
    m == 1
}

/// Uniform periodic grid on `[-L, L)^n` with its FFT-dual frequency grid.
///
/// Nodes are `x_j = -L + jΔx`, `Δx = 2L/N`; frequencies are
/// `ξ_m = hπm/L` for signed `m` in `-N/2..N/2`, stored in FFT order. Vectors on
/// the grid are row-major with axis 0 slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub n: usize,
    pub half_width: f64,
    pub points: usize,
    pub h: f64,
}

impl PhaseSpaceGrid {
    pub fn new(n: usize, half_width: f64, points: usize, h: f64) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidGrid(format!("dimension {n} not supported (1 or 2)")));
        }
        if points < 4 || !is_fft_friendly(points) {
            return Err(Error::InvalidGrid(format!("points per axis must be even, >= 4 and have no prime factor above 5, got {points}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half-width must be positive, got {half_width}")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("h must be positive, got {h}")));
        }
        Ok(Self { n, half_width, points, h })
    }

    pub fn with_h(&self, h: f64) -> Result<Self> {
        Self::new(self.n, self.half_width, self.points, h)
    }

    /// Number of unknowns `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn dxi(&self) -> f64 {
        self.h * PI / self.half_width
    }

    /// `hπN/(2L)`.
    pub fn xi_max(&self) -> f64 {
        self.h * PI * self.points as f64 / (2.0 * self.half_width)
    }

    /// Quadrature weight `Δx^n`.
    pub fn weight(&self) -> f64 {
        self.dx().powi(self.n as i32)
    }

    /// The `h_min = 4L/(πN)` guidance value.
    pub fn h_min_guidance(&self) -> f64 {
        4.0 * self.half_width / (PI * self.points as f64)
    }

    pub fn x_nodes(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.points).map(|j| -self.half_width + j as f64 * dx).collect()
    }

    /// Frequencies `ξ_m` in FFT order.
    pub fn xi_nodes(&self) -> Vec<f64> {
        let dxi = self.dxi();
        (0..self.points).map(|m| crate::fft::signed_index(m, self.points) as f64 * dxi).collect()
    }

    /// Multi-index of flat index `i`.
    pub fn multi_index(&self, i: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        let mut rest = i;
        for a in (0..self.n).rev() {
            out[a] = rest % self.points;
            rest /= self.points;
        }
        out
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &j| acc * self.points + j)
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let dx = self.dx();
        self.multi_index(i).into_iter().map(|j| -self.half_width + j as f64 * dx).collect()
    }

    /// `|ξ|²` multiplier in FFT order, flattened like grid vectors.
    pub fn xi_squared(&self) -> Vec<f64> {
        let xi = self.xi_nodes();
        (0..self.len()).map(|i| self.multi_index(i).iter().map(|&m| xi[m] * xi[m]).sum()).collect()
    }

    /// Fails unless `ξ_max` covers the momentum scale `required`.
    pub fn check_nyquist(&self, required: f64) -> Result<()> {
        if self.xi_max() < required {
            return Err(Error::NyquistViolation { xi_max: self.xi_max(), required });
        }
        Ok(())
    }

    /// Fails unless both the box and the frequency range extend `factor·√h`
    /// past the origin, so ground states at the `√h` scale are resolved.
    pub fn check_resolves_ground_scale(&self, factor: f64) -> Result<()> {
        let need = factor * self.h.sqrt();
        let have = self.half_width.min(self.xi_max());
        if have < need {
            return Err(Error::UnresolvableScale { scale: self.h.sqrt(), resolution: have / factor });
        }
        Ok(())
    }
}

/// How experiments choose a grid for a given `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridPolicy {
    /// Fixed box `[-L, L)^n` with `points` per axis.
    Fixed { half_width: f64, points: usize },
    /// Box half-width `width·√h`, so the frequency cutoff also scales like `√h`.
    Adaptive { width: f64, points: usize },
}

impl GridPolicy {
    pub fn grid(&self, n: usize, h: f64) -> Result<PhaseSpaceGrid> {
        match *self {
            GridPolicy::Fixed { half_width, points } => PhaseSpaceGrid::new(n, half_width, points, h),
            GridPolicy::Adaptive { width, points } => PhaseSpaceGrid::new(n, width * h.sqrt(), points, h),
        }
    }

    pub fn points(&self) -> usize {
        match *self {
            GridPolicy::Fixed { points, .. } | GridPolicy::Adaptive { points, .. } => points,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepted_sizes() {
        for ok in [4, 64, 96, 120, 512] {
            assert!(PhaseSpaceGrid::new(1, 1.0, ok, 0.1).is_ok(), "{ok}");
        }
        for bad in [2, 7, 14, 98] {
            assert!(PhaseSpaceGrid::new(1, 1.0, bad, 0.1).is_err(), "{bad}");
        }
    }

    #[test]
    fn spacing_product() {
        let g = PhaseSpaceGrid::new(1, 10.0, 512, 0.05).unwrap();
        let ratio = g.dx() * g.dxi() / (2.0 * PI * g.h);
        assert!((ratio - 1.0 / 512.0).abs() < 1e-15);
        assert!((g.xi_max() - 0.05 * PI * 512.0 / 20.0).abs() < 1e-12);
    }

    #[test]
    fn index_round_trip() {
        let g = PhaseSpaceGrid::new(2, 1.0, 8, 0.1).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
        }
        assert_eq!(g.point(9), vec![-0.75, -0.75]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(PhaseSpaceGrid::new(3, 1.0, 8, 0.1).is_err());
        assert!(PhaseSpaceGrid::new(1, 1.0, 14, 0.1).is_err());
        assert!(PhaseSpaceGrid::new(1, -1.0, 8, 0.1).is_err());
        let g = PhaseSpaceGrid::new(1, 10.0, 64, 0.01).unwrap();
        assert!(matches!(g.check_nyquist(1.0), Err(Error::NyquistViolation { .. })));
        assert!(g.check_resolves_ground_scale(5.0).is_err());
    }

    #[test]
    fn adaptive_policy_scales_with_root_h() {
        let p = GridPolicy::Adaptive { width: 7.0, points: 32 };
        let a = p.grid(2, 0.25).unwrap();
        let b = p.grid(2, 0.0625).unwrap();
        assert!((a.half_width / b.half_width - 2.0).abs() < 1e-14);
        assert!((a.xi_max() / b.xi_max() - 2.0).abs() < 1e-14);
        a.check_resolves_ground_scale(7.0).unwrap();
    }
}
