use serde::{Deserialize, Serialize};

use crate::hermite::lp_scaling_exponent;
use crate::quantize::PhaseSpaceGrid;
use crate::{Error, Result, C64};

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 2.0 {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// `(Σ|u_j|^p w)^{1/p}`, or `max |u_j|` for `p = ∞`.
///
/// The sum is taken relative to the largest entry so large `p` cannot overflow.
pub fn lp_norm_weighted(abs: impl Iterator<Item = f64> + Clone, weight: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    let peak = abs.clone().fold(0.0, f64::max);
    if p.is_infinite() || peak == 0.0 {
        return Ok(peak);
    }
    let s: f64 = abs.map(|a| (a / peak).powf(p)).sum();
    Ok(peak * (s * weight).powf(1.0 / p))
}

/// Grid `L^p` norm with the quadrature weight `Δx^n`.
pub fn lp_norm_grid(u: &[C64], grid: &PhaseSpaceGrid, p: f64) -> Result<f64> {
    if u.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: u.len() });
    }
    lp_norm_weighted(u.iter().map(|z| z.norm()), grid.weight(), p)
}

/// `δ(p) = n/4 - n/(2p)`, the decay exponent in `‖u‖_p ≤ O(1) h^{-δ(p)}`.
pub fn theoretical_exponent(n: usize, p: f64) -> f64 {
    // `+ 0.0` turns `-0.0` at `p = 2` into `0.0`.
    -lp_scaling_exponent(n, p) + 0.0
}

/// The comparison exponent for general (not necessarily doubly
/// characteristic) eigenfunction bounds, drawn as a dashed line in plots.
/// Undefined for `n = 1`.
pub fn ktz_reference(n: usize, p: f64) -> Option<f64> {
    let nf = n as f64;
    match n {
        0 | 1 => None,
        2 => Some(0.5 - 1.0 / p),
        _ => {
            let critical = 2.0 * nf / (nf - 2.0);
            if p >= critical {
                Some((nf - 1.0) / 2.0 - nf / p)
            } else {
                Some(nf / 4.0 - nf / (2.0 * p))
            }
        }
    }
}

/// Least-squares fit of `log norm = c - δ log h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub delta: f64,
    pub stderr: f64,
    /// `e^c`, the fitted `O(1)` constant.
    pub prefactor: f64,
    pub used_h: Vec<f64>,
    /// The largest `h`, dropped as pre-asymptotic when five or more points are given.
    pub excluded_h: Vec<f64>,
}

pub const MIN_FIT_POINTS: usize = 4;

/// Fits `norm ≈ A h^{-δ}` to `(h, norm)` pairs.
///
/// With five or more points the largest `h` is excluded; at least
/// [`MIN_FIT_POINTS`] must remain.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    let mut pts: Vec<(f64, f64)> = points.iter().copied().filter(|(h, v)| *h > 0.0 && *v > 0.0).collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut excluded_h = Vec::new();
    if pts.len() >= 5 {
        excluded_h.push(pts.remove(0).0);
    }
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints { got: pts.len(), need: MIN_FIT_POINTS });
    }
    let m = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::TooFewPoints { got: 1, need: MIN_FIT_POINTS });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (ssr / (m - 2.0) / sxx).sqrt();
    Ok(ExponentFit {
        delta: -slope,
        stderr,
        prefactor: intercept.exp(),
        used_h: pts.iter().map(|p| p.0).collect(),
        excluded_h,
    })
}
