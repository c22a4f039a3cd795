//! Harmonic-oscillator oracle.
//!
//! The normalized eigenfunctions of `Op_h^w(|ξ|² + |x|²)` are
//! `u_α(h)(x) = h^{-n/4} Π_j ψ_{α_j}(x_j/√h)` with `ψ_k` the L²-normalized
//! Hermite functions, and the eigenvalues are `(2|α| + n)h`. Their L^p norms are
//! `C_α h^{n/(2p) - n/4}` where `C_α = Π_j ‖ψ_{α_j}‖_p`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use crate::quantize::PhaseSpaceGrid;
use crate::{Error, Result};

/// Above this value of `|x|²/h` states are reported as exactly zero.
pub const OVERFLOW_GUARD: f64 = 1400.0;
/// Half-width of the quadrature box for `C_α`.
pub const QUADRATURE_RADIUS: f64 = 12.0;
const SIMPSON_TOL: f64 = 1e-10;

pub fn oscillator_eigenvalue(alpha: &[u32], h: f64, n: usize) -> f64 {
    let total: u32 = alpha.iter().sum();
    (2 * total as usize + n) as f64 * h
}

/// L²-normalized Hermite function `ψ_k(y)` by the stable three-term recurrence.
pub fn hermite_function(k: u32, y: f64) -> f64 {
    if y * y > OVERFLOW_GUARD {
        return 0.0;
    }
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * y * y).exp();
    for j in 0..k {
        let j = j as f64;
        let next = (2.0 / (j + 1.0)).sqrt() * y * cur - (j / (j + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `u_α(h)` on `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillatorState {
    pub alpha: Vec<u32>,
    pub h: f64,
    pub n: usize,
}

impl OscillatorState {
    pub fn new(alpha: &[u32], h: f64) -> Self {
        Self { alpha: alpha.to_vec(), h, n: alpha.len() }
    }

    pub fn ground(n: usize, h: f64) -> Self {
        Self::new(&vec![0; n], h)
    }

    pub fn eigenvalue(&self) -> f64 {
        oscillator_eigenvalue(&self.alpha, self.h, self.n)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 / self.h > OVERFLOW_GUARD {
            return 0.0;
        }
        let s = self.h.sqrt();
        let mut v = self.h.powf(-(self.n as f64) / 4.0);
        for (k, xi) in self.alpha.iter().zip(x) {
            v *= hermite_function(*k, xi / s);
        }
        v
    }

    /// Samples on the grid nodes.
    pub fn sample(&self, grid: &PhaseSpaceGrid) -> Vec<f64> {
        assert_eq!(grid.n, self.n, "state and grid dimensions differ");
        (0..grid.len()).map(|i| self.eval(&grid.point(i))).collect()
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    // Start from unit panels so narrow peaks are never skipped by the first estimate.
    let panels = ((b - a).ceil() as usize).max(1);
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * w, a + (i + 1) as f64 * w);
            let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = w / 6.0 * (flo + 4.0 * fmid + fhi);
            step(f, lo, hi, flo, fmid, fhi, whole, tol / panels as f64, 40)
        })
        .sum()
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..100 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    f(0.5 * (a + b))
}

fn factor_cache() -> &'static RwLock<HashMap<(u32, u64), f64>> {
    static CACHE: OnceLock<RwLock<HashMap<(u32, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 2.0 {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// `‖ψ_k‖_p` on the line.
pub fn hermite_lp_factor(k: u32, p: f64) -> Result<f64> {
    check_p(p)?;
    let key = (k, p.to_bits());
    if let Some(v) = factor_cache().read().expect("cache poisoned").get(&key) {
        return Ok(*v);
    }
    let r = QUADRATURE_RADIUS;
    let value = if p.is_infinite() {
        let f = |y: f64| hermite_function(k, y).abs();
        let steps = (2.0 * r / 1e-3).round() as usize;
        let mut best = (0.0, 0usize);
        for i in 0..=steps {
            let v = f(-r + i as f64 * 1e-3);
            if v > best.0 {
                best = (v, i);
            }
        }
        let y = -r + best.1 as f64 * 1e-3;
        golden_max(&f, y - 1e-3, y + 1e-3).max(best.0)
    } else {
        let f = |y: f64| hermite_function(k, y).abs().powf(p);
        adaptive_simpson(&f, -r, r, SIMPSON_TOL).powf(1.0 / p)
    };
    factor_cache().write().expect("cache poisoned").insert(key, value);
    Ok(value)
}

/// `C_α = Π_j ‖ψ_{α_j}‖_p`.
pub fn lp_constant(alpha: &[u32], p: f64) -> Result<f64> {
    alpha.iter().try_fold(1.0, |acc, &k| Ok(acc * hermite_lp_factor(k, p)?))
}

/// `‖u_α(h)‖_{L^p} = C_α h^{n/(2p) - n/4}`.
pub fn lp_norm_exact(alpha: &[u32], h: f64, p: f64, n: usize) -> Result<f64> {
    if alpha.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: alpha.len() });
    }
    Ok(lp_constant(alpha, p)? * h.powf(lp_scaling_exponent(n, p)))
}

/// `n/(2p) - n/4`, with `p = ∞` giving `-n/4`.
pub fn lp_scaling_exponent(n: usize, p: f64) -> f64 {
    let n = n as f64;
    n / (2.0 * p) - n / 4.0
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Gauss-Hermite nodes and weights for weight e^{-y²}, from the Golub-Welsch
    /// eigenproblem of the Jacobi matrix.
    fn gauss_hermite(m: usize) -> Vec<(f64, f64)> {
        let jac = faer::Mat::<f64>::from_fn(m, m, |i, j| {
            if i + 1 == j || j + 1 == i {
                ((i.max(j)) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = jac.self_adjoint_eigen(faer::Side::Lower).unwrap();
        (0..m)
            .map(|k| {
                let v0 = eig.U()[(0, k)];
                (eig.S()[k], PI.sqrt() * v0 * v0)
            })
            .collect()
    }

    #[test]
    fn eigenvalue_formula() {
        assert!((oscillator_eigenvalue(&[0, 0], 0.1, 2) - 0.2).abs() < 1e-15);
        assert!((oscillator_eigenvalue(&[1, 2], 0.05, 2) - 0.4).abs() < 1e-15);
        assert_eq!(oscillator_eigenvalue(&[3], 0.0, 1), 0.0);
    }

    #[test]
    fn ground_state_values() {
        let h = 0.3;
        let u = OscillatorState::new(&[0], h);
        assert!((u.eval(&[0.0]) - (PI * h).powf(-0.25)).abs() < 1e-14);
        assert_eq!(OscillatorState::new(&[1], h).eval(&[0.0]), 0.0);
        assert_eq!(u.eval(&[40.0]), 0.0);
    }

    #[test]
    fn orthonormal_by_gauss_hermite() {
        // ∫ψ_aψ_b dy = ∫ (ψ_aψ_b e^{y²}) e^{-y²} dy, exact for 40 nodes at these degrees.
        let nodes = gauss_hermite(40);
        for a in 0..=3 {
            for b in 0..=3 {
                let s: f64 = nodes.iter().map(|&(y, w)| w * hermite_function(a, y) * hermite_function(b, y) * (y * y).exp()).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-10, "a={a} b={b} s={s}");
            }
        }
    }

    #[test]
    fn normalization_of_states() {
        for alpha in [[0u32, 0], [1, 2], [3, 0]] {
            assert!((lp_norm_exact(&alpha, 0.37, 2.0, 2).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_closed_forms() {
        let sup = lp_norm_exact(&[0, 0], 0.01, f64::INFINITY, 2).unwrap();
        assert!((sup - (PI * 0.01).powf(-0.5)).abs() < 1e-9);
        assert!((sup - 5.6419).abs() < 1e-4);
        let c4 = lp_constant(&[0], 4.0).unwrap();
        let want = PI.powf(-0.25) * (PI / 2.0).powf(0.125);
        assert!((c4 - want).abs() < 1e-10);
        assert!((c4 - 0.7948).abs() < 1e-4);
    }

    #[test]
    fn first_excited_sup() {
        // |ψ_1(y)| = √2 π^{-1/4} |y| e^{-y²/2}, maximal at y = 1.
        let want = 2f64.sqrt() * PI.powf(-0.25) * (-0.5f64).exp();
        assert!((hermite_lp_factor(1, f64::INFINITY).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn scaling_law_cancels_constant() {
        for p in [2.0, 4.0, 6.0, f64::INFINITY] {
            let r = lp_norm_exact(&[1, 2], 0.1, p, 2).unwrap() / lp_norm_exact(&[1, 2], 0.4, p, 2).unwrap();
            let want = (0.25f64).powf(lp_scaling_exponent(2, p));
            assert!((r / want - 1.0).abs() < 1e-12);
        }
        assert_eq!(lp_scaling_exponent(3, 2.0), 0.0);
        assert_eq!(lp_scaling_exponent(2, f64::INFINITY), -0.5);
    }

    #[test]
    fn rejects_small_p() {
        assert!(matches!(lp_norm_exact(&[0], 1.0, 1.5, 1), Err(Error::InvalidExponent(_))));
    }
}
