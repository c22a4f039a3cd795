use std::sync::Arc;

use faer::Mat;

use super::{Method, OperatorMatrix, PhaseSpaceGrid, SparseMatrix, Storage};
use crate::fft::{signed_index, TensorFft};
use crate::symbols::{rescaled, Symbol};
use crate::{Error, Result, C64};

/// Largest dense operator (unknowns) the midpoint rule will assemble.
pub const DENSE_LIMIT: usize = 4096;

/// `Op_h^w(a)` by the midpoint rule:
///
/// `A[j,k] = N^{-n} Σ_m e^{2πi(j-k)·m/N} a((x_j + x_k)/2, ξ_m)`,
///
/// which is the Riemann sum of the Weyl integral with `ΔxΔξ/(2πh) = 1/N`.
/// The midpoint is the plain average of the two nodes (not reduced
/// periodically), so real symbols give exactly Hermitian matrices and the
/// long-range kernels of ξ-growing symbols see the correct x-dependence.
pub fn weyl_quantize(a: &dyn Symbol, grid: &PhaseSpaceGrid) -> Result<OperatorMatrix> {
    weyl_quantize_oversampled(a, grid, 1)
}

/// Midpoint rule with the ξ-quadrature refined by `factor`:
///
/// `A[j,k] = (rN)^{-n} Σ_m e^{2πi(j-k)·m/(rN)} a((x_j + x_k)/2, ξ_m/r)`.
///
/// The discrete kernel then has period `2rL` in `x - y` instead of `2L`, so
/// kernels of symbols with sharp ξ-structure do not wrap around the box. Only
/// meant for symbols supported inside `|ξ| < ξ_max`; for ξ-growing symbols
/// `factor = 1` is the spectrally accurate choice.
pub fn weyl_quantize_oversampled(a: &dyn Symbol, grid: &PhaseSpaceGrid, factor: usize) -> Result<OperatorMatrix> {
    if factor == 0 {
        return Err(Error::InvalidParameter("oversampling factor must be positive".into()));
    }
    if a.dim() != grid.n {
        return Err(Error::DimensionMismatch { expected: grid.n, got: a.dim() });
    }
    let dim = grid.len();
    if dim > DENSE_LIMIT {
        return Err(Error::ResourceCeiling(format!(
            "dense midpoint quantization of {dim} unknowns exceeds the limit {DENSE_LIMIT}"
        )));
    }
    let n = grid.n;
    let np = grid.points;
    let half_dx = 0.5 * grid.dx();
    let nf = factor * np;
    let dxi = grid.dxi() / factor as f64;
    let xi: Vec<f64> = (0..nf).map(|m| signed_index(m, nf) as f64 * dxi).collect();
    let plan = TensorFft::new(nf, n);
    // Pairs (j, k) on one axis sharing the midpoint half-index s = j + k.
    let pairs = |s: usize| (s.saturating_sub(np - 1)..=s.min(np - 1)).map(move |k| (s - k, k));
    let offset = |j: usize, k: usize| (j + nf - k) % nf;
    let mut mat = Mat::<C64>::zeros(dim, dim);
    let scale = 1.0 / plan.len() as f64;
    let mut buf = vec![C64::new(0.0, 0.0); plan.len()];
    let mut point = vec![0.0; 2 * n];
    let span = 2 * np - 1;
    for flat_s in 0..span.pow(n as u32) {
        let s: Vec<usize> = match n {
            1 => vec![flat_s],
            _ => vec![flat_s / span, flat_s % span],
        };
        for ax in 0..n {
            point[ax] = -grid.half_width + s[ax] as f64 * half_dx;
        }
        for (i, b) in buf.iter_mut().enumerate() {
            let mut rest = i;
            for ax in (0..n).rev() {
                point[n + ax] = xi[rest % nf];
                rest /= nf;
            }
            let v = a.eval(&point, grid.h);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFiniteSymbol { point: point.clone() });
            }
            *b = v;
        }
        plan.inverse(&mut buf);
        match n {
            1 => {
                for (j, k) in pairs(s[0]) {
                    mat[(j, k)] = buf[offset(j, k)] * scale;
                }
            }
            _ => {
                for (j0, k0) in pairs(s[0]) {
                    for (j1, k1) in pairs(s[1]) {
                        mat[(j0 * np + j1, k0 * np + k1)] = buf[offset(j0, k0) * nf + offset(j1, k1)] * scale;
                    }
                }
            }
        }
    }
    Ok(OperatorMatrix { storage: Storage::Dense(mat), grid: grid.clone(), method: Method::MidpointFft, symbol_desc: a.describe() })
}

/// [`weyl_quantize`] after checking that `ξ_max` covers `xi_required`.
pub fn weyl_quantize_resolving(a: &dyn Symbol, grid: &PhaseSpaceGrid, xi_required: f64) -> Result<OperatorMatrix> {
    grid.check_nyquist(xi_required)?;
    weyl_quantize(a, grid)
}

fn potential_values(v: &dyn Symbol, grid: &PhaseSpaceGrid) -> Result<Vec<f64>> {
    if v.dim() != grid.n {
        return Err(Error::DimensionMismatch { expected: grid.n, got: v.dim() });
    }
    let n = grid.n;
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let mut p = grid.point(i);
        p.resize(2 * n, 0.0);
        let val = v.eval(&p, grid.h);
        if !(val.re.is_finite() && val.im.is_finite()) {
            return Err(Error::NonFiniteSymbol { point: p });
        }
        if i % 97 == 0 {
            // Spot check that the potential ignores the momentum variables.
            let mut q = p.clone();
            q[n..].iter_mut().for_each(|x| *x = 1.0);
            if (v.eval(&q, grid.h) - val).norm() > 1e-12 * (1.0 + val.norm()) {
                return Err(Error::InvalidParameter(format!("potential '{}' depends on ξ", v.describe())));
            }
        }
        if val.im != 0.0 {
            return Err(Error::InvalidParameter(format!("potential '{}' must be real-valued", v.describe())));
        }
        out.push(val.re);
    }
    Ok(out)
}

fn schrodinger_desc(v: &dyn Symbol, w: &dyn Symbol) -> String {
    format!("|xi|^2 + ({}) + i({})", v.describe(), w.describe())
}

/// `-h²Δ + V + iW` with the spectral Laplacian, applied matrix-free.
pub fn quantize_schrodinger(v: &dyn Symbol, w: &dyn Symbol, grid: &PhaseSpaceGrid) -> Result<OperatorMatrix> {
    let vv = potential_values(v, grid)?;
    let ww = potential_values(w, grid)?;
    let diagonal = vv.iter().zip(&ww).map(|(&a, &b)| C64::new(a, b)).collect();
    Ok(OperatorMatrix {
        storage: Storage::Spectral { diagonal, multiplier: grid.xi_squared(), plan: Arc::new(TensorFft::new(grid.points, grid.n)) },
        grid: grid.clone(),
        method: Method::SchrodingerSpectral,
        symbol_desc: schrodinger_desc(v, w),
    })
}

/// `-h²Δ + V + iW` with the periodic second-order difference Laplacian.
pub fn quantize_schrodinger_fd2(v: &dyn Symbol, w: &dyn Symbol, grid: &PhaseSpaceGrid) -> Result<OperatorMatrix> {
    let vv = potential_values(v, grid)?;
    let ww = potential_values(w, grid)?;
    let diagonal: Vec<C64> = vv.iter().zip(&ww).map(|(&a, &b)| C64::new(a, b)).collect();
    Ok(OperatorMatrix {
        storage: Storage::Sparse(fd2_matrix(grid, &diagonal)),
        grid: grid.clone(),
        method: Method::SchrodingerFd2,
        symbol_desc: schrodinger_desc(v, w),
    })
}

pub(crate) fn fd2_matrix(grid: &PhaseSpaceGrid, diagonal: &[C64]) -> SparseMatrix {
    let np = grid.points;
    let c = grid.h * grid.h / (grid.dx() * grid.dx());
    let mut t = Vec::with_capacity(grid.len() * (2 * grid.n + 1));
    for i in 0..grid.len() {
        let idx = grid.multi_index(i);
        t.push((i, i, diagonal[i] + C64::new(2.0 * c * grid.n as f64, 0.0)));
        for a in 0..grid.n {
            for step in [1, np - 1] {
                let mut nb = idx.clone();
                nb[a] = (nb[a] + step) % np;
                t.push((i, grid.flat_index(&nb), C64::new(-c, 0.0)));
            }
        }
    }
    SparseMatrix::from_triplets(grid.len(), t)
}

/// ξ-refinement used for compactly supported cutoffs.
pub const CUTOFF_OVERSAMPLING: usize = 4;

/// `Op_h^w(χ(X/s))`, assembled with [`weyl_quantize_oversampled`].
///
/// Fails when `s` is below the phase-space resolution of the grid.
pub fn cutoff_quantize(chi: Arc<dyn Symbol>, scale: f64, grid: &PhaseSpaceGrid) -> Result<OperatorMatrix> {
    let resolution = grid.dx().max(grid.dxi());
    if !(scale >= resolution) {
        return Err(Error::UnresolvableScale { scale, resolution });
    }
    let desc = chi.describe();
    let mut op = weyl_quantize_oversampled(&rescaled(chi, 1.0 / scale), grid, CUTOFF_OVERSAMPLING)?;
    op.symbol_desc = format!("({desc})(X/{scale})");
    Ok(op)
}
