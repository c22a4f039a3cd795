use std::fmt;
use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::PhaseSpaceGrid;
use crate::fft::TensorFft;
use crate::C64;

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<C64>,
}

impl SparseMatrix {
    /// Builds from triplets; duplicates are summed and each row is sorted by column.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { dim, row_ptr, col_idx, values }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k])))
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.values[k] * v[self.col_idx[k]]).sum())
            .collect()
    }

    pub fn to_faer(&self) -> faer::sparse::SparseColMat<usize, C64> {
        let entries: Vec<_> = self.triplets().map(|(r, c, v)| faer::sparse::Triplet::new(r, c, v)).collect();
        faer::sparse::SparseColMat::try_new_from_triplets(self.dim, self.dim, &entries).expect("valid sparse pattern")
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// Adds `c` to the diagonal (inserting entries where absent).
    pub fn shifted(&self, c: C64) -> Self {
        let mut t: Vec<_> = self.triplets().collect();
        t.extend((0..self.dim).map(|i| (i, i, c)));
        Self::from_triplets(self.dim, t)
    }
}

/// Storage of an assembled operator.
#[derive(Clone)]
pub enum Storage {
    Dense(Mat<C64>),
    Sparse(SparseMatrix),
    /// `F^{-1} diag(multiplier) F + diag(diagonal)`, applied matrix-free.
    Spectral { diagonal: Vec<C64>, multiplier: Vec<f64>, plan: Arc<TensorFft> },
}

impl fmt::Debug for Storage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Storage::Dense(m) => write!(f, "Dense({}x{})", m.nrows(), m.ncols()),
            Storage::Sparse(s) => write!(f, "Sparse({}x{}, nnz {})", s.dim, s.dim, s.values.len()),
            Storage::Spectral { diagonal, .. } => write!(f, "Spectral({})", diagonal.len()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MidpointFft,
    SchrodingerSpectral,
    SchrodingerFd2,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::MidpointFft => "midpoint-fft",
            Method::SchrodingerSpectral => "schrodinger-spectral",
            Method::SchrodingerFd2 => "schrodinger-fd2",
        }
    }
}

/// `Op_h^w(a)` discretized on a grid, with its provenance.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub storage: Storage,
    pub grid: PhaseSpaceGrid,
    pub method: Method,
    pub symbol_desc: String,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim(), "vector length does not match the grid");
        match &self.storage {
            Storage::Dense(m) => {
                let mut out = vec![C64::new(0.0, 0.0); v.len()];
                for (k, &vk) in v.iter().enumerate() {
                    if vk == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for (o, a) in out.iter_mut().zip(m.col_as_slice(k)) {
                        *o += a * vk;
                    }
                }
                out
            }
            Storage::Sparse(s) => s.apply(v),
            Storage::Spectral { diagonal, multiplier, plan } => {
                let mut out = v.to_vec();
                plan.multiply(&mut out, multiplier);
                for ((o, d), x) in out.iter_mut().zip(diagonal).zip(v) {
                    *o += d * x;
                }
                out
            }
        }
    }

    pub fn apply_real(&self, v: &[f64]) -> Vec<C64> {
        let c: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.apply(&c)
    }

    pub fn to_dense(&self) -> Mat<C64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(s) => s.to_dense(),
            Storage::Spectral { diagonal, multiplier, .. } => {
                // Kronecker sum of 1D spectral blocks plus the diagonal.
                let np = self.grid.points;
                let xi = self.grid.xi_nodes();
                let block = TensorFft::new(np, 1);
                let mult1: Vec<f64> = xi.iter().map(|x| x * x).collect();
                let mut t1 = Mat::<C64>::zeros(np, np);
                for k in 0..np {
                    let mut e = vec![C64::new(0.0, 0.0); np];
                    e[k] = C64::new(1.0, 0.0);
                    block.multiply(&mut e, &mult1);
                    for j in 0..np {
                        t1[(j, k)] = e[j];
                    }
                }
                let dim = self.dim();
                let mut m = Mat::<C64>::zeros(dim, dim);
                match self.grid.n {
                    1 => m.copy_from(&t1),
                    _ => {
                        for a in 0..np {
                            for b in 0..np {
                                for c in 0..np {
                                    // axis 0 block: T[a,c] δ_{b,b'}; axis 1 block: δ_{a,c} T[b,b']
                                    m[(a * np + b, c * np + b)] += t1[(a, c)];
                                    m[(a * np + b, a * np + c)] += t1[(b, c)];
                                }
                            }
                        }
                    }
                }
                debug_assert_eq!(multiplier.len(), dim);
                for (i, d) in diagonal.iter().enumerate() {
                    m[(i, i)] += d;
                }
                m
            }
        }
    }

    /// `(A + A*)/2`, densely.
    pub fn hermitian_part(&self) -> Mat<C64> {
        let a = self.to_dense();
        let d = a.nrows();
        Mat::from_fn(d, d, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
    }

    /// `A + cI` with the same provenance.
    pub fn shifted(&self, c: C64) -> Self {
        let storage = match &self.storage {
            Storage::Dense(m) => {
                let mut m = m.clone();
                for i in 0..m.nrows() {
                    m[(i, i)] += c;
                }
                Storage::Dense(m)
            }
            Storage::Sparse(s) => Storage::Sparse(s.shifted(c)),
            Storage::Spectral { diagonal, multiplier, plan } => Storage::Spectral {
                diagonal: diagonal.iter().map(|d| d + c).collect(),
                multiplier: multiplier.clone(),
                plan: plan.clone(),
            },
        };
        Self { storage, grid: self.grid.clone(), method: self.method, symbol_desc: format!("{} + ({c})", self.symbol_desc) }
    }

    /// Whether `A = A*` up to `tol` relative to the largest entry.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        match &self.storage {
            Storage::Spectral { diagonal, .. } => diagonal.iter().all(|d| d.im == 0.0),
            _ => {
                let a = self.to_dense();
                let d = a.nrows();
                let mut scale = 0.0f64;
                let mut diff = 0.0f64;
                for j in 0..d {
                    for i in 0..d {
                        scale = scale.max(a[(i, j)].norm());
                        diff = diff.max((a[(i, j)] - a[(j, i)].conj()).norm());
                    }
                }
                diff <= tol * scale.max(f64::MIN_POSITIVE)
            }
        }
    }

    /// The periodic 5-point (3-point in 1D) finite-difference companion of a
    /// spectral Schrödinger operator, sharing its diagonal.
    pub fn fd2_companion(&self) -> Option<SparseMatrix> {
        match &self.storage {
            Storage::Spectral { diagonal, .. } => Some(super::weyl::fd2_matrix(&self.grid, diagonal)),
            _ => None,
        }
    }

    /// Grid-weighted L² norm.
    pub fn norm(&self, v: &[C64]) -> f64 {
        weighted_norm(v, self.grid.weight())
    }
}

pub fn weighted_norm(v: &[C64], weight: f64) -> f64 {
    (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * weight).sqrt()
}
