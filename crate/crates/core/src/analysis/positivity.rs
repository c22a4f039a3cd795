use std::sync::Arc;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use super::sweep::{ground_state, parallel_map, OperatorFamily};
use crate::eigensolve::EigenOptions;
use crate::quantize::{cutoff_quantize, weyl_quantize, GridPolicy, OperatorMatrix, PhaseSpaceGrid, ScalingParams, DENSE_LIMIT};
use crate::symbols::{fd_gradient, fd_hessian, Symbol};
use crate::{Error, Result, C64};

fn backend<E: std::fmt::Debug>(e: E) -> Error {
    Error::Backend(format!("{e:?}"))
}

fn hermitian(m: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()))
}

/// Smallest eigenvalue and its eigenvector of a Hermitian matrix.
fn lowest(m: &Mat<C64>) -> Result<(f64, Vec<C64>)> {
    let eig = m.self_adjoint_eigen(Side::Lower).map_err(backend)?;
    let s = eig.S();
    let u = eig.U();
    let mut best = 0;
    for i in 1..m.nrows() {
        if s[i].re < s[best].re {
            best = i;
        }
    }
    Ok((s[best].re, (0..m.nrows()).map(|r| u[(r, best)]).collect()))
}

/// Smallest eigenvalue of the Hermitian part of `Op_h^w(a)`.
pub fn garding_min_eig(a: &dyn Symbol, grid: &PhaseSpaceGrid) -> Result<f64> {
    let op = weyl_quantize(a, grid)?;
    Ok(lowest(&op.hermitian_part())?.0)
}

/// Minimum of `Re a` over the grid's phase-space nodes.
fn sampled_min(a: &dyn Symbol, grid: &PhaseSpaceGrid) -> f64 {
    let xs = grid.x_nodes();
    let xis = grid.xi_nodes();
    let n = grid.n;
    let axis = xs.len();
    let total = axis.pow(2 * n as u32);
    let mut best = f64::INFINITY;
    let mut pt = vec![0.0; 2 * n];
    for flat in 0..total {
        let mut rest = flat;
        for (v, slot) in pt.iter_mut().enumerate() {
            let i = rest % axis;
            rest /= axis;
            *slot = if v < n { xs[i] } else { xis[i] };
        }
        best = best.min(a.eval(&pt, grid.h).re);
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GardingRow {
    pub h: f64,
    pub min_eig: f64,
    /// `min Re a` over the sampled phase-space box.
    pub symbol_min: f64,
    /// `(min_eig - symbol_min)/h`.
    pub constant: f64,
    /// `min_eig >= -C h` holds with this `C` (0 when `min_eig >= 0`).
    pub lower_bound_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GardingReport {
    pub symbol: String,
    pub rows: Vec<GardingRow>,
    pub nonnegative: bool,
    /// `(max c - min c)/min |c|` over the rows.
    pub variation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Runs [`garding_min_eig`] over `h_list` and checks that the fitted constant is stable.
pub fn garding_sweep(a: &dyn Symbol, policy: &GridPolicy, h_list: &[f64], tolerance: f64) -> Result<GardingReport> {
    let mut rows = Vec::new();
    let mut nonnegative = true;
    for &h in h_list {
        let grid = policy.grid(a.dim(), h)?;
        let min_eig = garding_min_eig(a, &grid)?;
        let symbol_min = sampled_min(a, &grid);
        nonnegative &= symbol_min >= 0.0;
        rows.push(GardingRow {
            h,
            min_eig,
            symbol_min,
            constant: (min_eig - symbol_min) / h,
            lower_bound_constant: (-min_eig / h).max(0.0),
        });
    }
    let cs: Vec<f64> = rows.iter().map(|r| r.constant).collect();
    let hi = cs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = cs.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = cs.iter().map(|c| c.abs()).fold(f64::INFINITY, f64::min);
    let variation = if hi == lo { 0.0 } else { (hi - lo) / scale };
    Ok(GardingReport {
        symbol: a.describe(),
        rows,
        nonnegative,
        variation,
        tolerance,
        pass: nonnegative && variation <= tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriResult {
    pub h: f64,
    pub eps: f64,
    pub lambda: C64,
    pub min_eig: f64,
    /// `ε/m` when `m > 0`.
    pub c_tilde: Option<f64>,
    pub violation: bool,
    /// Eigenvector of the offending eigenvalue when `m <= 0`.
    pub witness: Option<Vec<C64>>,
}

/// Smallest eigenvalue `m` of the Hermitian part of `(P - λ) + ε Op_h^w(χ(X/√ε))`.
pub fn apriori_check(p: &OperatorMatrix, lambda: C64, chi: Arc<dyn Symbol>, params: &ScalingParams) -> Result<AprioriResult> {
    if p.dim() > DENSE_LIMIT {
        return Err(Error::ResourceCeiling(format!("a priori check needs a dense matrix of dimension {}", p.dim())));
    }
    let cut = cutoff_quantize(chi, params.eps.sqrt(), &p.grid)?.to_dense();
    let base = p.to_dense();
    let m = Mat::from_fn(base.nrows(), base.ncols(), |i, j| {
        let shift = if i == j { lambda } else { C64::new(0.0, 0.0) };
        base[(i, j)] - shift + params.eps * cut[(i, j)]
    });
    let (min_eig, vec) = lowest(&hermitian(&m))?;
    let violation = !(min_eig > 0.0);
    Ok(AprioriResult {
        h: params.h,
        eps: params.eps,
        lambda,
        min_eig,
        c_tilde: (!violation).then(|| params.eps / min_eig),
        violation,
        witness: violation.then_some(vec),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub h_tilde: f64,
    pub rows: Vec<AprioriResult>,
    /// Smallest `C̃` valid at every `h`, when all rows are positive.
    pub c_tilde: Option<f64>,
    pub bound: f64,
    pub pass: bool,
}

/// [`apriori_check`] at the ground eigenvalue of `family(h)` for each `h`.
#[allow(clippy::too_many_arguments)]
pub fn apriori_sweep(
    family: &OperatorFamily,
    h_list: &[f64],
    h_tilde: f64,
    delta: f64,
    chi: Arc<dyn Symbol>,
    c: f64,
    bound: f64,
    jobs: usize,
) -> Result<AprioriReport> {
    let opts = EigenOptions::default();
    let cells = parallel_map(h_list, jobs, |&h| -> Result<AprioriResult> {
        let op = family(h)?;
        let g = ground_state(&op, c, h, &opts)?;
        apriori_check(&op, g.lam, chi.clone(), &ScalingParams::new(h, h_tilde, delta)?)
    });
    let rows = cells.into_iter().collect::<Result<Vec<_>>>()?;
    let c_tilde = rows.iter().map(|r| r.c_tilde).try_fold(0.0f64, |acc, c| c.map(|c| acc.max(c)));
    Ok(AprioriReport { h_tilde, rows, c_tilde, bound, pass: c_tilde.is_some_and(|c| c <= bound) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub worst_ratio: f64,
    pub worst_point: Option<Vec<f64>>,
    /// Sampled `sup ‖f''‖` (spectral norm of the Hessian).
    pub second_derivative_bound: f64,
    pub skipped: usize,
}

/// Worst sampled `|∇f|² / (2 ‖f''‖_∞ f)` for `f = Re a`; points with `f < 1e-14` are skipped.
pub fn gradient_bound_check(f: &dyn Symbol, samples: &[Vec<f64>]) -> Result<GradientReport> {
    let mut bound = 0.0f64;
    for x in samples {
        let hess = fd_hessian(f, x, 0.0);
        let d = x.len();
        let m = Mat::<f64>::from_fn(d, d, |i, j| 0.5 * (hess[i][j].re + hess[j][i].re));
        let ev = m.self_adjoint_eigenvalues(Side::Lower).map_err(backend)?;
        bound = ev.iter().fold(bound, |b, e| b.max(e.abs()));
    }
    let mut worst_ratio = 0.0f64;
    let mut worst_point = None;
    let mut skipped = 0;
    for x in samples {
        let v = f.eval(x, 0.0).re;
        if v < 1e-14 {
            skipped += 1;
            continue;
        }
        let g2: f64 = fd_gradient(f, x, 0.0).iter().map(|g| g.re * g.re).sum();
        let ratio = if bound > 0.0 { g2 / (2.0 * bound * v) } else if g2 > 0.0 { f64::INFINITY } else { 0.0 };
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_point = Some(x.clone());
        }
    }
    Ok(GradientReport { worst_ratio, worst_point, second_derivative_bound: bound, skipped })
}

/// Uniform tensor samples of `[-r, r]^dim` with `per_axis` points per axis.
pub fn box_samples(dim: usize, radius: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let step = if per_axis > 1 { 2.0 * radius / (per_axis - 1) as f64 } else { 0.0 };
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|mut flat| {
            (0..dim)
                .map(|_| {
                    let i = flat % per_axis;
                    flat /= per_axis;
                    -radius + i as f64 * step
                })
                .collect()
        })
        .collect()
}
