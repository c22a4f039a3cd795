use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{weighted_norm, weyl_quantize, PhaseSpaceGrid};
use crate::fft::{signed_index, TensorFft};
use crate::symbols::{rescaled, Symbol};
use crate::{Error, Result, C64};

/// The two semiclassical parameters `h ≤ h̃` with `ε = h/h̃`, and the
/// microlocal scale exponent `δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub h: f64,
    pub h_tilde: f64,
    pub eps: f64,
    pub delta: f64,
}

impl ScalingParams {
    pub fn new(h: f64, h_tilde: f64, delta: f64) -> Result<Self> {
        if !(h > 0.0 && h <= h_tilde && h_tilde <= 1.0) {
            return Err(Error::InvalidParameter(format!("need 0 < h <= h_tilde <= 1, got h = {h}, h_tilde = {h_tilde}")));
        }
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::InvalidParameter(format!("delta must lie in (0, 1/2), got {delta}")));
        }
        Ok(Self { h, h_tilde, eps: h / h_tilde, delta })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// `(Uu)(x̃) = ε^{n/4} u(√ε x̃)`, from the `h` grid to the `h̃` grid.
    Forward,
    /// `(U^{-1}v)(x) = ε^{-n/4} v(x/√ε)`, from the `h̃` grid to the `h` grid.
    Inverse,
}

/// Trigonometric interpolant of periodic samples on `[-L, L)` at the points `t`.
fn interpolate_axis(samples: &[C64], half_width: f64, t: &[f64], plan: &TensorFft) -> Vec<C64> {
    let np = samples.len();
    let mut hat = samples.to_vec();
    plan.forward(&mut hat);
    t.iter()
        .map(|&ti| {
            let y = ti + half_width;
            let mut acc = C64::new(0.0, 0.0);
            for (m, c) in hat.iter().enumerate() {
                let sm = signed_index(m, np);
                let k = PI * sm as f64 / half_width;
                if sm == -(np as i64) / 2 {
                    acc += c * (k * y).cos();
                } else {
                    acc += c * C64::new(0.0, k * y).exp();
                }
            }
            acc / np as f64
        })
        .collect()
}

/// Whether `u` is negligible (below `1e-10` of its peak) on the two outermost
/// node layers, so it may be continued by zero outside the box.
fn vanishes_at_boundary(u: &[C64], grid: &PhaseSpaceGrid) -> bool {
    let peak = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let np = grid.points;
    let edge = |j: usize| j < 2 || j >= np - 2;
    (0..u.len()).filter(|&i| grid.multi_index(i).into_iter().any(edge)).all(|i| u[i].norm() <= 1e-10 * peak)
}

/// Band-limited interpolation of a grid vector at the tensor points
/// `t × t` (or `t` in 1D). Points outside the box get zero, which is only
/// allowed when the vector vanishes at the boundary.
fn interpolate(u: &[C64], grid: &PhaseSpaceGrid, t: &[f64]) -> Result<Vec<C64>> {
    let l = grid.half_width;
    let inside = |v: &f64| v.abs() <= l * (1.0 + 1e-12);
    if let Some(&bad) = t.iter().find(|v| !inside(v)) {
        if !vanishes_at_boundary(u, grid) {
            return Err(Error::InterpolationOutOfRange { coordinate: bad, half_width: l });
        }
    }
    let np = grid.points;
    let plan = TensorFft::new(np, 1);
    let axis = |samples: &[C64]| -> Vec<C64> {
        let vals = interpolate_axis(samples, l, t, &plan);
        vals.into_iter().zip(t).map(|(v, ti)| if inside(ti) { v } else { C64::new(0.0, 0.0) }).collect()
    };
    match grid.n {
        1 => Ok(axis(u)),
        _ => {
            let m = t.len();
            // Along axis 1 for each row, then along axis 0 for each new column.
            let mut rows = vec![C64::new(0.0, 0.0); np * m];
            for r in 0..np {
                rows[r * m..(r + 1) * m].copy_from_slice(&axis(&u[r * np..(r + 1) * np]));
            }
            let mut out = vec![C64::new(0.0, 0.0); m * m];
            let mut col = vec![C64::new(0.0, 0.0); np];
            for c in 0..m {
                for r in 0..np {
                    col[r] = rows[r * m + c];
                }
                for (i, v) in axis(&col).into_iter().enumerate() {
                    out[i * m + c] = v;
                }
            }
            Ok(out)
        }
    }
}

/// Applies `U` or `U^{-1}` and resamples onto `to`.
pub fn rescale_state(
    u: &[C64],
    from: &PhaseSpaceGrid,
    to: &PhaseSpaceGrid,
    params: &ScalingParams,
    direction: Direction,
) -> Result<Vec<C64>> {
    if from.n != to.n {
        return Err(Error::DimensionMismatch { expected: from.n, got: to.n });
    }
    if u.len() != from.len() {
        return Err(Error::DimensionMismatch { expected: from.len(), got: u.len() });
    }
    let root = params.eps.sqrt();
    let quarter = params.eps.powf(from.n as f64 / 4.0);
    let (factor, amp) = match direction {
        Direction::Forward => (root, quarter),
        Direction::Inverse => (1.0 / root, 1.0 / quarter),
    };
    let t: Vec<f64> = to.x_nodes().iter().map(|x| factor * x).collect();
    let mut out = interpolate(u, from, &t)?;
    out.iter_mut().for_each(|v| *v *= amp);
    Ok(out)
}

/// `max_u ‖Op_h^w(a)u - U^{-1}Op_h̃^w(ã)Uu‖ / ‖u‖` over Gaussian test vectors at the
/// `√h` scale, with `ã(X̃) = a(√ε X̃)`.
pub fn conjugation_check(
    a: Arc<dyn Symbol>,
    params: &ScalingParams,
    grid_h: &PhaseSpaceGrid,
    grid_htilde: &PhaseSpaceGrid,
) -> Result<f64> {
    if (grid_h.h - params.h).abs() > 1e-15 * params.h || (grid_htilde.h - params.h_tilde).abs() > 1e-15 * params.h_tilde {
        return Err(Error::InvalidParameter("grid parameters do not match h and h_tilde".into()));
    }
    let op_h = weyl_quantize(a.as_ref(), grid_h)?;
    let a_tilde = rescaled(a, params.eps.sqrt());
    let op_ht = weyl_quantize(&a_tilde, grid_htilde)?;
    let mut worst = 0.0f64;
    for u in test_vectors(grid_h) {
        let lhs = op_h.apply(&u);
        let up = rescale_state(&u, grid_h, grid_htilde, params, Direction::Forward)?;
        let mid = op_ht.apply(&up);
        let rhs = rescale_state(&mid, grid_htilde, grid_h, params, Direction::Inverse)?;
        let diff: Vec<C64> = lhs.iter().zip(&rhs).map(|(x, y)| x - y).collect();
        let rel = weighted_norm(&diff, grid_h.weight()) / weighted_norm(&u, grid_h.weight());
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// A centred Gaussian, a shifted and modulated one, and an odd one, all at width `√h`.
pub(crate) fn test_vectors(grid: &PhaseSpaceGrid) -> Vec<Vec<C64>> {
    let h = grid.h;
    let s = h.sqrt();
    let shapes: [Box<dyn Fn(&[f64]) -> C64>; 3] = [
        Box::new(move |x: &[f64]| C64::new((-x.iter().map(|v| v * v).sum::<f64>() / (2.0 * h)).exp(), 0.0)),
        Box::new(move |x: &[f64]| {
            let r2: f64 = x.iter().map(|v| (v - 0.3 * s) * (v - 0.3 * s)).sum();
            let phase: f64 = x.iter().map(|v| 0.3 * s * v / h).sum();
            C64::new(0.0, phase).exp() * (-r2 / (2.0 * h)).exp()
        }),
        Box::new(move |x: &[f64]| C64::new(x[0] / s * (-x.iter().map(|v| v * v).sum::<f64>() / (2.0 * h)).exp(), 0.0)),
    ];
    shapes.iter().map(|f| (0..grid.len()).map(|i| f(&grid.point(i))).collect()).collect()
}
