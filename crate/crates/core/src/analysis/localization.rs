use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fft::{signed_index, TensorFft};
use crate::quantize::{cutoff_quantize, weighted_norm, weyl_quantize, PhaseSpaceGrid, ScalingParams};
use crate::symbols::{rescaled, PolySymbol, Symbol};
use crate::{Error, Result, C64};

fn check_len(u: &[C64], grid: &PhaseSpaceGrid) -> Result<()> {
    if u.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: u.len() });
    }
    Ok(())
}

/// `‖u - Op_h^w(ψ(X/h^δ)) u‖₂`.
pub fn microlocal_mass(u: &[C64], psi: Arc<dyn Symbol>, delta: f64, h: f64, grid: &PhaseSpaceGrid) -> Result<f64> {
    check_len(u, grid)?;
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    let op = cutoff_quantize(psi, h.powf(delta), grid)?;
    let r: Vec<C64> = u.iter().zip(op.apply(u)).map(|(a, b)| a - b).collect();
    Ok(weighted_norm(&r, grid.weight()))
}

/// `‖Op_h^w(q^N(X/√ε)) u‖₂`.
pub fn qn_boundedness_check(u: &[C64], q: &PolySymbol, power: u32, params: &ScalingParams, grid: &PhaseSpaceGrid) -> Result<f64> {
    check_len(u, grid)?;
    if power > 4 {
        return Err(Error::InvalidParameter(format!("power N = {power} exceeds 4")));
    }
    if !q.is_h_free() {
        return Err(Error::InvalidParameter(format!("'{q}' depends on h")));
    }
    let sym = rescaled(Arc::new(q.pow(power)), 1.0 / params.eps.sqrt());
    let op = weyl_quantize(&sym, grid)?;
    Ok(weighted_norm(&op.apply(u), grid.weight()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeEntry {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    /// `‖(x/√h)^α (√h ∂_x)^β u‖_∞`.
    pub value: f64,
    /// The entry is below the spectral-differentiation noise floor.
    pub noise_floor: bool,
}

/// Multi-indices `(α, β)` in `N^n × N^n` with `|α| + |β| <= k`, ordered by total order.
pub fn multi_index_pairs(n: usize, k: u32) -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut all = Vec::new();
    let d = 2 * n;
    let mut idx = vec![0u32; d];
    loop {
        if idx.iter().sum::<u32>() <= k {
            all.push(idx.clone());
        }
        let mut v = 0;
        loop {
            if v == d {
                all.sort_by_key(|m| (m.iter().sum::<u32>(), m.iter().map(|&e| std::cmp::Reverse(e)).collect::<Vec<_>>()));
                return all.into_iter().map(|m| (m[..n].to_vec(), m[n..].to_vec())).collect();
            }
            idx[v] += 1;
            if idx[v] <= k {
                break;
            }
            idx[v] = 0;
            v += 1;
        }
    }
}

const NOISE_FLOOR: f64 = 1e-10;

/// Weighted sup norms of `u` for all `|α + β| <= K`, by spectral differentiation.
pub fn derivative_bounds_check(u: &[C64], grid: &PhaseSpaceGrid, h: f64, k: u32) -> Result<Vec<DerivativeEntry>> {
    check_len(u, grid)?;
    if k > 3 {
        return Err(Error::InvalidParameter(format!("K = {k} exceeds 3")));
    }
    let n = grid.n;
    let np = grid.points;
    let plan = TensorFft::new(np, n);
    let sh = h.sqrt();
    let freq: Vec<f64> = (0..np).map(|m| sh * PI * signed_index(m, np) as f64 / grid.half_width).collect();
    let xs = grid.x_nodes();
    let peak = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut out = Vec::new();
    for (alpha, beta) in multi_index_pairs(n, k) {
        let mult: Vec<C64> = (0..grid.len())
            .map(|i| {
                grid.multi_index(i).iter().zip(&beta).fold(C64::new(1.0, 0.0), |acc, (&m, &b)| {
                    if b % 2 == 1 && np % 2 == 0 && m == np / 2 {
                        return C64::new(0.0, 0.0);
                    }
                    acc * C64::new(0.0, freq[m]).powu(b)
                })
            })
            .collect();
        let mut w = u.to_vec();
        if beta.iter().any(|&b| b > 0) {
            plan.multiply_complex(&mut w, &mult);
        }
        let value = (0..grid.len())
            .map(|i| {
                let weight: f64 = grid.multi_index(i).iter().zip(&alpha).map(|(&j, &a)| (xs[j] / sh).powi(a as i32)).product();
                (w[i] * weight).norm()
            })
            .fold(0.0, f64::max);
        out.push(DerivativeEntry { alpha, beta, value, noise_floor: value < NOISE_FLOOR * peak });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeRatio {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    /// Worst `value(h) / (value(h_max) (h/h_max)^{-n/4})` over the sweep.
    pub worst_ratio: f64,
}

/// Compares each entry against its value at the largest `h` scaled by `(h/h_max)^{-n/4}`.
pub fn derivative_sweep_ratios(tables: &[(f64, Vec<DerivativeEntry>)], n: usize) -> Result<Vec<DerivativeRatio>> {
    let (h_max, base) = tables
        .iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::InvalidParameter("empty derivative sweep".into()))?;
    let mut out = Vec::new();
    for (i, e) in base.iter().enumerate() {
        let mut worst = 0.0f64;
        for (h, t) in tables {
            let entry = t.get(i).filter(|x| x.alpha == e.alpha && x.beta == e.beta).ok_or_else(|| {
                Error::InvalidParameter("derivative tables disagree on their multi-indices".into())
            })?;
            let allowed = e.value * (h / h_max).powf(-(n as f64) / 4.0);
            worst = worst.max(entry.value / allowed);
        }
        out.push(DerivativeRatio { alpha: e.alpha.clone(), beta: e.beta.clone(), worst_ratio: worst });
    }
    Ok(out)
}
