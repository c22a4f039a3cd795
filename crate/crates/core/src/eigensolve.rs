//! Eigenpairs of (generally non-normal) grid operators near a target.
//!
//! Small problems are solved densely. Larger ones use subspace iteration on
//! the shift-inverted operator `(A - σ)^{-1}` with Rayleigh-Ritz extraction on
//! `A`; the inverse comes from a dense or sparse LU, or for spectral
//! Schrödinger operators from GMRES preconditioned by the LU of the
//! finite-difference companion.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::quantize::{
    weighted_norm, weyl_quantize, OperatorMatrix, PhaseSpaceGrid, SparseMatrix, Storage,
};
use crate::symbols::PolySymbol;
use crate::{Error, Result, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
/// Largest cluster [`ground_cluster`] will grow to.
pub const CLUSTER_CAP: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lam: C64,
    /// Grid-weighted L² norm 1, largest component real positive.
    pub vec: Vec<C64>,
    /// `‖(A - lam)vec‖` in the weighted norm.
    pub residual: f64,
    pub multiplicity_hint: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    /// Dense when the dimension is at most `dense_limit`, shift-invert otherwise.
    Auto,
    Dense,
    ShiftInvert,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub solver: Solver,
    pub dense_limit: usize,
    /// Defaults to 1e-8 for dense solves and 1e-6 for iterative ones.
    pub residual_tol: Option<f64>,
    /// Relative distance under which eigenvalues count as one cluster.
    pub cluster_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { solver: Solver::Auto, dense_limit: 2048, residual_tol: None, cluster_tol: 1e-6, max_iter: 400, seed: 0x5eed }
    }
}

/// Scales `v` to unit weighted norm with its largest-magnitude component real positive.
pub fn normalize(v: &mut [C64], weight: f64) {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() {
            best = i;
        }
    }
    let norm = weighted_norm(v, weight);
    if norm == 0.0 {
        return;
    }
    let phase = if v[best].norm() > 0.0 { v[best].conj() / v[best].norm() } else { C64::new(1.0, 0.0) };
    for z in v.iter_mut() {
        *z *= phase / norm;
    }
}

pub fn residual(a: &OperatorMatrix, lam: C64, v: &[C64]) -> f64 {
    let av = a.apply(v);
    let r: Vec<C64> = av.iter().zip(v).map(|(x, y)| x - lam * y).collect();
    a.norm(&r)
}

/// Deterministic ordering key: distance to the target (ties below 1e-12 merged),
/// then imaginary part, then real part.
fn order(pairs: &mut [(C64, Vec<C64>)], target: C64) {
    let scale = pairs.iter().map(|p| (p.0 - target).norm()).fold(1e-300, f64::max);
    let key = |l: &C64| ((l - target).norm() / (1e-12 * scale)).round();
    pairs.sort_by(|a, b| {
        key(&a.0)
            .total_cmp(&key(&b.0))
            .then(a.0.im.total_cmp(&b.0.im))
            .then(a.0.re.total_cmp(&b.0.re))
    });
}

fn within(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1e-300)
}

fn finish(a: &OperatorMatrix, mut pairs: Vec<(C64, Vec<C64>)>, all: &[C64], tol: f64, cluster_tol: f64) -> Result<Vec<EigenPair>> {
    let weight = a.grid.weight();
    let mut out = Vec::with_capacity(pairs.len());
    let mut bad = Vec::new();
    for (lam, v) in pairs.iter_mut() {
        normalize(v, weight);
        let res = residual(a, *lam, v);
        if !(res <= tol) {
            bad.push(res);
        }
        let mult = all.iter().filter(|m| within(**m, *lam, cluster_tol)).count().max(1);
        out.push(EigenPair { lam: *lam, vec: std::mem::take(v), residual: res, multiplicity_hint: mult });
    }
    if !bad.is_empty() {
        return Err(Error::NotConverged { residuals: out.iter().map(|p| p.residual).collect() });
    }
    Ok(out)
}

/// The `k` eigenpairs nearest `target` with default options.
pub fn eigs_near(a: &OperatorMatrix, target: C64, k: usize) -> Result<Vec<EigenPair>> {
    eigs_near_with(a, target, k, &EigenOptions::default())
}

pub fn eigs_near_with(a: &OperatorMatrix, target: C64, k: usize, opts: &EigenOptions) -> Result<Vec<EigenPair>> {
    let dim = a.dim();
    if k == 0 || k > CLUSTER_CAP || k > dim {
        return Err(Error::InvalidParameter(format!("k must lie in 1..={}, got {k}", CLUSTER_CAP.min(dim))));
    }
    let dense = match opts.solver {
        Solver::Dense => true,
        Solver::ShiftInvert => false,
        Solver::Auto => dim <= opts.dense_limit,
    };
    if dense {
        eigs_dense(a, target, k, opts)
    } else {
        eigs_shift_invert(a, target, k, opts)
    }
}

/// All eigenvalues and eigenvectors of a dense matrix; Hermitian input uses the
/// self-adjoint solver so the eigenvalues come out exactly real.
pub(crate) fn dense_eigen(m: &Mat<C64>, hermitian: bool) -> Result<Vec<(C64, Vec<C64>)>> {
    let d = m.nrows();
    if hermitian {
        let e = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Backend(format!("{e:?}")))?;
        let s = e.S().column_vector();
        let u = e.U();
        Ok((0..d).map(|j| (C64::new(s[j].re, 0.0), (0..d).map(|i| u[(i, j)]).collect())).collect())
    } else {
        let e = m.eigen().map_err(|e| Error::Backend(format!("{e:?}")))?;
        let s = e.S().column_vector();
        let u = e.U();
        Ok((0..d).map(|j| (s[j], (0..d).map(|i| u[(i, j)]).collect())).collect())
    }
}

fn eigs_dense(a: &OperatorMatrix, target: C64, k: usize, opts: &EigenOptions) -> Result<Vec<EigenPair>> {
    let m = a.to_dense();
    let hermitian = a.is_hermitian(1e-12);
    let mut pairs = dense_eigen(&m, hermitian)?;
    let all: Vec<C64> = pairs.iter().map(|p| p.0).collect();
    order(&mut pairs, target);
    pairs.truncate(k);
    let tol = opts.residual_tol.unwrap_or(1e-8);
    // One step of inverse iteration tightens vectors of ill-conditioned eigenvalues.
    let weight = a.grid.weight();
    for (lam, v) in pairs.iter_mut() {
        normalize(v, weight);
        if residual(a, *lam, v) > tol {
            let mut shifted = m.clone();
            let sigma = *lam + C64::new(1e-10 * lam.norm().max(1e-10), 0.0);
            for i in 0..shifted.nrows() {
                shifted[(i, i)] -= sigma;
            }
            let lu = shifted.partial_piv_lu();
            let mut rhs = Mat::from_fn(v.len(), 1, |i, _| v[i]);
            lu.solve_in_place(&mut rhs);
            let w: Vec<C64> = (0..v.len()).map(|i| rhs[(i, 0)]).collect();
            if w.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                *v = w;
                normalize(v, weight);
            }
        }
    }
    finish(a, pairs, &all, tol, opts.cluster_tol)
}

/// Solver for `(A - σ)x = b` on blocks of right-hand sides.
enum ShiftSolve {
    Dense(faer::linalg::solvers::PartialPivLu<C64>),
    Sparse(faer::sparse::linalg::solvers::Lu<usize, C64>),
    Gmres { pre: faer::sparse::linalg::solvers::Lu<usize, C64> },
}

fn sparse_lu(s: &SparseMatrix) -> Result<faer::sparse::linalg::solvers::Lu<usize, C64>> {
    s.to_faer().sp_lu().map_err(|e| Error::Backend(format!("sparse LU failed: {e:?}")))
}

impl ShiftSolve {
    fn new(a: &OperatorMatrix, sigma: C64) -> Result<Self> {
        Ok(match &a.storage {
            Storage::Dense(m) => {
                let mut s = m.clone();
                for i in 0..s.nrows() {
                    s[(i, i)] -= sigma;
                }
                ShiftSolve::Dense(s.partial_piv_lu())
            }
            Storage::Sparse(s) => ShiftSolve::Sparse(sparse_lu(&s.shifted(-sigma))?),
            Storage::Spectral { .. } => {
                let fd2 = a.fd2_companion().expect("spectral storage has a companion");
                ShiftSolve::Gmres { pre: sparse_lu(&fd2.shifted(-sigma))? }
            }
        })
    }

    fn solve(&self, a: &OperatorMatrix, sigma: C64, block: &mut Mat<C64>) -> Result<()> {
        match self {
            ShiftSolve::Dense(lu) => lu.solve_in_place(&mut *block),
            ShiftSolve::Sparse(lu) => lu.solve_in_place(&mut *block),
            ShiftSolve::Gmres { pre } => {
                for j in 0..block.ncols() {
                    let b: Vec<C64> = block.col_as_slice(j).to_vec();
                    let x = gmres(|v| shifted_apply(a, sigma, v), |v| precondition(pre, v), &b, 1e-12, 60, 40)?;
                    block.col_as_slice_mut(j).copy_from_slice(&x);
                }
            }
        }
        let ok = (0..block.ncols()).all(|j| block.col_as_slice(j).iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        if ok {
            Ok(())
        } else {
            Err(Error::SingularShift { shift: format!("{sigma}") })
        }
    }
}

fn shifted_apply(a: &OperatorMatrix, sigma: C64, v: &[C64]) -> Vec<C64> {
    let mut out = a.apply(v);
    for (o, x) in out.iter_mut().zip(v) {
        *o -= sigma * x;
    }
    out
}

fn precondition(lu: &faer::sparse::linalg::solvers::Lu<usize, C64>, v: &[C64]) -> Vec<C64> {
    let mut m = Mat::from_fn(v.len(), 1, |i, _| v[i]);
    lu.solve_in_place(&mut m);
    m.col_as_slice(0).to_vec()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Restarted right-preconditioned GMRES for `Ax = b`.
pub fn gmres(
    apply: impl Fn(&[C64]) -> Vec<C64>,
    precond: impl Fn(&[C64]) -> Vec<C64>,
    b: &[C64],
    rel_tol: f64,
    restart: usize,
    max_restarts: usize,
) -> Result<Vec<C64>> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![ZERO; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut last = f64::INFINITY;
    for _ in 0..max_restarts {
        let ax = apply(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm2(&r);
        last = beta / bnorm;
        if last <= rel_tol {
            return Ok(x);
        }
        let mut basis: Vec<Vec<C64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut hess = vec![vec![ZERO; restart]; restart + 1];
        let mut cs = vec![ZERO; restart];
        let mut sn = vec![ZERO; restart];
        let mut g = vec![ZERO; restart + 1];
        g[0] = C64::new(beta, 0.0);
        let mut used = 0;
        for j in 0..restart {
            let mut w = apply(&precond(&basis[j]));
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let c = dot(q, &w);
                    hess[i][j] += c;
                    for (wk, qk) in w.iter_mut().zip(q) {
                        *wk -= c * qk;
                    }
                }
            }
            let wn = norm2(&w);
            hess[j + 1][j] = C64::new(wn, 0.0);
            for i in 0..j {
                let t = cs[i].conj() * hess[i][j] + sn[i].conj() * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let (p, q) = (hess[j][j], hess[j + 1][j]);
            let rho = (p.norm_sqr() + q.norm_sqr()).sqrt();
            if rho == 0.0 {
                used = j;
                break;
            }
            cs[j] = p / rho;
            sn[j] = q / rho;
            hess[j][j] = C64::new(rho, 0.0);
            hess[j + 1][j] = ZERO;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j].conj() * g[j];
            used = j + 1;
            if g[j + 1].norm() / bnorm <= rel_tol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|z| z / wn).collect());
        }
        let mut y = vec![ZERO; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= hess[i][k] * y[k];
            }
            y[i] = s / hess[i][i];
        }
        let mut dz = vec![ZERO; n];
        for (yi, q) in y.iter().zip(&basis) {
            for (d, qk) in dz.iter_mut().zip(q) {
                *d += yi * qk;
            }
        }
        let dx = precond(&dz);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
    }
    let ax = apply(&x);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    last = last.min(norm2(&r) / bnorm);
    if last <= rel_tol * 100.0 {
        Ok(x)
    } else {
        Err(Error::NotConverged { residuals: vec![last] })
    }
}

/// Modified Gram-Schmidt (twice) on the columns; returns the rank kept.
fn orthonormalize(m: &mut Mat<C64>) -> usize {
    let cols = m.ncols();
    let mut kept = 0;
    for j in 0..cols {
        let mut v = m.col_as_slice(j).to_vec();
        let before = norm2(&v);
        for _ in 0..2 {
            for i in 0..kept {
                let q = m.col_as_slice(i);
                let c = dot(q, &v);
                for (vk, qk) in v.iter_mut().zip(q) {
                    *vk -= c * qk;
                }
            }
        }
        let nv = norm2(&v);
        if nv > 1e-10 * before.max(1e-300) {
            m.col_as_slice_mut(kept).iter_mut().zip(&v).for_each(|(d, s)| *d = s / nv);
            kept += 1;
        }
    }
    kept
}

fn eigs_shift_invert(a: &OperatorMatrix, target: C64, k: usize, opts: &EigenOptions) -> Result<Vec<EigenPair>> {
    let dim = a.dim();
    let tol = opts.residual_tol.unwrap_or(1e-6);
    let mut sigma = target;
    let mut retried = false;
    let mut solver = match ShiftSolve::new(a, sigma) {
        Ok(s) => s,
        Err(_) => {
            retried = true;
            sigma += C64::new(1e-12, 0.0);
            ShiftSolve::new(a, sigma).map_err(|_| Error::SingularShift { shift: format!("{target}") })?
        }
    };
    let m = (2 * k + 10).min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = Mat::from_fn(dim, m, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let mut last = Vec::new();
    for _ in 0..opts.max_iter {
        if let Err(e) = solver.solve(a, sigma, &mut x) {
            if retried || !matches!(e, Error::SingularShift { .. }) {
                return Err(e);
            }
            retried = true;
            sigma += C64::new(1e-12, 0.0);
            solver = ShiftSolve::new(a, sigma)?;
            x = Mat::from_fn(dim, m, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            continue;
        }
        let rank = orthonormalize(&mut x);
        let ax: Vec<Vec<C64>> = (0..rank).map(|j| a.apply(x.col_as_slice(j))).collect();
        let proj = Mat::from_fn(rank, rank, |i, j| dot(x.col_as_slice(i), &ax[j]));
        let mut ritz = dense_eigen(&proj, false)?;
        order(&mut ritz, target);
        let mut new_x = Mat::<C64>::zeros(dim, m);
        let mut pairs = Vec::with_capacity(k);
        for (c, (theta, z)) in ritz.iter().enumerate() {
            let col = new_x.col_as_slice_mut(c);
            for (j, zj) in z.iter().enumerate() {
                for (d, s) in col.iter_mut().zip(x.col_as_slice(j)) {
                    *d += zj * s;
                }
            }
            if c < k {
                pairs.push((*theta, col.to_vec()));
            }
        }
        // Columns lost to rank deficiency are refilled with fresh random vectors.
        for c in ritz.len()..m {
            for d in new_x.col_as_slice_mut(c) {
                *d = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            }
        }
        x = new_x;
        let weight = a.grid.weight();
        last = pairs
            .iter()
            .map(|(l, v)| {
                let mut v = v.clone();
                normalize(&mut v, weight);
                residual(a, *l, &v)
            })
            .collect();
        if pairs.len() == k && last.iter().all(|r| *r <= tol) {
            let all: Vec<C64> = ritz.iter().map(|p| p.0).collect();
            return finish(a, pairs, &all, tol, opts.cluster_tol);
        }
    }
    Err(Error::NotConverged { residuals: last })
}

/// All eigenpairs with `|λ| < C·h`, growing the request until the next
/// eigenvalue found lies at or beyond `1.05·C·h`.
pub fn ground_cluster(a: &OperatorMatrix, c: f64, h: f64) -> Result<Vec<EigenPair>> {
    ground_cluster_with(a, c, h, &EigenOptions::default())
}

pub fn ground_cluster_with(a: &OperatorMatrix, c: f64, h: f64, opts: &EigenOptions) -> Result<Vec<EigenPair>> {
    let radius = c * h;
    let mut k = 4.min(a.dim());
    loop {
        let pairs = eigs_near_with(a, ZERO, k, opts)?;
        let exhausted = pairs.iter().any(|p| p.lam.norm() >= 1.05 * radius);
        if exhausted || k == a.dim() {
            let mut inside: Vec<EigenPair> = pairs.into_iter().filter(|p| p.lam.norm() < radius).collect();
            let lams: Vec<C64> = inside.iter().map(|p| p.lam).collect();
            for p in inside.iter_mut() {
                p.multiplicity_hint = lams.iter().filter(|l| within(**l, p.lam, opts.cluster_tol)).count();
            }
            return Ok(inside);
        }
        if k >= CLUSTER_CAP {
            return Err(Error::ClusterTooLarge { cap: CLUSTER_CAP });
        }
        k = (2 * k).min(CLUSTER_CAP).min(a.dim());
    }
}

/// A cluster `μ_k` of the quadratic model with its multiplicity `N_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelCluster {
    pub mu: C64,
    pub multiplicity: usize,
}

/// Eigenvalues of `Op_1^w(q)` in the disc `D(0, C)`, clustered.
pub fn quadratic_model_spectrum(q: &PolySymbol, c: f64) -> Result<Vec<ModelCluster>> {
    if q.degree() > 2 || !q.is_h_free() {
        return Err(Error::InvalidParameter(format!("'{q}' is not an h-free quadratic")));
    }
    let n = q.dim();
    let hess = q.hessian_at_zero();
    let re = Mat::<f64>::from_fn(2 * n, 2 * n, |i, j| 0.5 * hess[i][j].to_c64().re);
    let min_eig = re.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Backend(format!("{e:?}")))?[0];
    if !(min_eig > 0.0) {
        return Err(Error::InvalidParameter(format!("Re q is not positive definite (smallest eigenvalue {min_eig})")));
    }
    let grid = match n {
        1 => PhaseSpaceGrid::new(1, 12.0, 256, 1.0)?,
        _ => PhaseSpaceGrid::new(2, 6.0, 32, 1.0)?,
    };
    // Eigenfunctions below energy C live where |X|² ≲ C/min_eig; keep a margin of three widths.
    let reach = (c / min_eig).sqrt() + 3.0;
    let have = grid.half_width.min(grid.xi_max());
    if reach > have {
        return Err(Error::UnresolvableScale { scale: reach, resolution: have });
    }
    let op = weyl_quantize(q, &grid)?;
    let all = dense_eigen(&op.to_dense(), op.is_hermitian(1e-12))?;
    let mut mus: Vec<(C64, Vec<C64>)> = all.into_iter().filter(|p| p.0.norm() < c).map(|p| (p.0, Vec::new())).collect();
    order(&mut mus, ZERO);
    let tol = 1e-6 * c;
    let mut clusters: Vec<(C64, Vec<C64>)> = Vec::new();
    for (mu, _) in mus {
        match clusters.iter_mut().find(|cl| (cl.0 - mu).norm() <= tol) {
            Some(cl) => cl.1.push(mu),
            None => clusters.push((mu, vec![mu])),
        }
    }
    Ok(clusters
        .into_iter()
        .map(|(_, members)| ModelCluster {
            mu: members.iter().sum::<C64>() / members.len() as f64,
            multiplicity: members.len(),
        })
        .collect())
}

/// One row of [`leading_order_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeadingOrderRow {
    pub h: f64,
    pub lambda: C64,
    pub mu: C64,
    /// `|λ/h - μ|`.
    pub deviation: f64,
    /// More eigenvalues paired to `μ` than its multiplicity.
    pub ambiguous: bool,
}

/// Pairs the ground cluster of `P(h)` with `h·μ_k` for each `h`.
pub fn leading_order_check(
    family: &dyn Fn(f64) -> Result<OperatorMatrix>,
    q: &PolySymbol,
    h_list: &[f64],
    c: f64,
) -> Result<Vec<LeadingOrderRow>> {
    let model = quadratic_model_spectrum(q, c)?;
    if model.is_empty() {
        return Err(Error::EmptyCluster { h: 1.0, radius: c });
    }
    let mut rows = Vec::new();
    for &h in h_list {
        let op = family(h)?;
        let cluster = ground_cluster(&op, c, h)?;
        let mut used = vec![0usize; model.len()];
        for p in &cluster {
            let scaled = p.lam / h;
            let (idx, best) = model
                .iter()
                .enumerate()
                .map(|(i, m)| (i, (m.mu - scaled).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("model is non-empty");
            used[idx] += 1;
            rows.push(LeadingOrderRow { h, lambda: p.lam, mu: model[idx].mu, deviation: best, ambiguous: false });
        }
        let start = rows.len() - cluster.len();
        for row in rows[start..].iter_mut() {
            let idx = model.iter().position(|m| m.mu == row.mu).expect("paired");
            row.ambiguous = used[idx] > model[idx].multiplicity;
        }
    }
    Ok(rows)
}
