//! Binary caches: a magic line, a little-endian `u64` header length, a JSON
//! header, then raw little-endian payload.
//!
//! Operators store `(row: u64, col: u64, re: f64, im: f64)` triples (the
//! diagonal, for the spectral storage, followed by the Fourier multiplier).
//! Eigenpair files store the vectors as interleaved `(re, im)` pairs.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::eigensolve::EigenPair;
use crate::fft::TensorFft;
use crate::quantize::{Method, OperatorMatrix, PhaseSpaceGrid, SparseMatrix, Storage};
use crate::{Error, Result, C64};

const OPERATOR_MAGIC: &[u8; 8] = b"SCOPv01\n";
const EIGEN_MAGIC: &[u8; 8] = b"SCEPv01\n";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum StorageKind {
    Dense,
    Sparse,
    Spectral,
}

#[derive(Debug, Serialize, Deserialize)]
struct OperatorHeader {
    schema_version: u32,
    grid: PhaseSpaceGrid,
    method: Method,
    symbol_desc: String,
    storage: StorageKind,
    dim: usize,
    entries: usize,
    multiplier_len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct EigenHeader {
    schema_version: u32,
    grid: PhaseSpaceGrid,
    dim: usize,
    lambdas: Vec<C64>,
    residuals: Vec<f64>,
    multiplicity_hints: Vec<usize>,
}

fn write_framed(path: &Path, magic: &[u8; 8], header: &impl Serialize, payload: &[u8]) -> Result<()> {
    let json = serde_json::to_vec(header)?;
    let tmp = path.with_extension("partial");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        w.write_all(magic)?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        w.write_all(payload)?;
        w.flush()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

fn read_framed<H: for<'de> Deserialize<'de>>(path: &Path, magic: &[u8; 8]) -> Result<(H, Vec<u8>)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 16 || &bytes[..8] != magic {
        return Err(Error::Format(format!("{} is not a cache file of the expected kind", path.display())));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = bytes.get(16..16 + len).ok_or_else(|| Error::Format("truncated header".into()))?;
    let header = serde_json::from_slice(body)?;
    Ok((header, bytes[16 + len..].to_vec()))
}

fn f64_at(b: &[u8], i: usize) -> f64 {
    f64::from_le_bytes(b[8 * i..8 * i + 8].try_into().expect("8 bytes"))
}

fn u64_at(b: &[u8], i: usize) -> usize {
    u64::from_le_bytes(b[8 * i..8 * i + 8].try_into().expect("8 bytes")) as usize
}

fn push_triple(out: &mut Vec<u8>, r: usize, c: usize, v: C64) {
    out.extend_from_slice(&(r as u64).to_le_bytes());
    out.extend_from_slice(&(c as u64).to_le_bytes());
    out.extend_from_slice(&v.re.to_le_bytes());
    out.extend_from_slice(&v.im.to_le_bytes());
}

fn is_stored(v: C64) -> bool {
    v.re.to_bits() != 0 || v.im.to_bits() != 0
}

pub fn write_operator(path: &Path, op: &OperatorMatrix) -> Result<()> {
    let mut payload = Vec::new();
    let mut entries = 0;
    let mut multiplier_len = 0;
    let kind = match &op.storage {
        Storage::Dense(m) => {
            for c in 0..m.ncols() {
                for r in 0..m.nrows() {
                    if is_stored(m[(r, c)]) {
                        push_triple(&mut payload, r, c, m[(r, c)]);
                        entries += 1;
                    }
                }
            }
            StorageKind::Dense
        }
        Storage::Sparse(s) => {
            for (r, c, v) in s.triplets() {
                push_triple(&mut payload, r, c, v);
                entries += 1;
            }
            StorageKind::Sparse
        }
        Storage::Spectral { diagonal, multiplier, .. } => {
            for (i, v) in diagonal.iter().enumerate() {
                push_triple(&mut payload, i, i, *v);
            }
            entries = diagonal.len();
            for m in multiplier {
                payload.extend_from_slice(&m.to_le_bytes());
            }
            multiplier_len = multiplier.len();
            StorageKind::Spectral
        }
    };
    let header = OperatorHeader {
        schema_version: 1,
        grid: op.grid.clone(),
        method: op.method,
        symbol_desc: op.symbol_desc.clone(),
        storage: kind,
        dim: op.dim(),
        entries,
        multiplier_len,
    };
    write_framed(path, OPERATOR_MAGIC, &header, &payload)
}

pub fn read_operator(path: &Path) -> Result<OperatorMatrix> {
    let (h, payload): (OperatorHeader, _) = read_framed(path, OPERATOR_MAGIC)?;
    if payload.len() != 32 * h.entries + 8 * h.multiplier_len || h.dim != h.grid.len() {
        return Err(Error::Format(format!("{}: payload does not match its header", path.display())));
    }
    let triple = |k: usize| {
        let (r, c) = (u64_at(&payload, 4 * k), u64_at(&payload, 4 * k + 1));
        (r, c, C64::new(f64_at(&payload, 4 * k + 2), f64_at(&payload, 4 * k + 3)))
    };
    let mut triples = Vec::with_capacity(h.entries);
    for k in 0..h.entries {
        let t = triple(k);
        if t.0 >= h.dim || t.1 >= h.dim {
            return Err(Error::Format(format!("index ({}, {}) out of range", t.0, t.1)));
        }
        triples.push(t);
    }
    let storage = match h.storage {
        StorageKind::Dense => {
            let mut m = Mat::<C64>::zeros(h.dim, h.dim);
            for (r, c, v) in triples {
                m[(r, c)] = v;
            }
            Storage::Dense(m)
        }
        StorageKind::Sparse => Storage::Sparse(SparseMatrix::from_triplets(h.dim, triples)),
        StorageKind::Spectral => {
            let diagonal = triples.into_iter().map(|t| t.2).collect();
            let multiplier = (0..h.multiplier_len).map(|i| f64_at(&payload, 4 * h.entries + i)).collect();
            Storage::Spectral { diagonal, multiplier, plan: Arc::new(TensorFft::new(h.grid.points, h.grid.n)) }
        }
    };
    Ok(OperatorMatrix { storage, grid: h.grid, method: h.method, symbol_desc: h.symbol_desc })
}

pub fn write_eigenpairs(path: &Path, grid: &PhaseSpaceGrid, pairs: &[EigenPair]) -> Result<()> {
    let dim = grid.len();
    let mut payload = Vec::with_capacity(16 * dim * pairs.len());
    for p in pairs {
        if p.vec.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.vec.len() });
        }
        for z in &p.vec {
            payload.extend_from_slice(&z.re.to_le_bytes());
            payload.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    let header = EigenHeader {
        schema_version: 1,
        grid: grid.clone(),
        dim,
        lambdas: pairs.iter().map(|p| p.lam).collect(),
        residuals: pairs.iter().map(|p| p.residual).collect(),
        multiplicity_hints: pairs.iter().map(|p| p.multiplicity_hint).collect(),
    };
    write_framed(path, EIGEN_MAGIC, &header, &payload)
}

pub fn read_eigenpairs(path: &Path) -> Result<(PhaseSpaceGrid, Vec<EigenPair>)> {
    let (h, payload): (EigenHeader, _) = read_framed(path, EIGEN_MAGIC)?;
    let count = h.lambdas.len();
    if payload.len() != 16 * h.dim * count || h.residuals.len() != count || h.multiplicity_hints.len() != count {
        return Err(Error::Format(format!("{}: payload does not match its header", path.display())));
    }
    let pairs = (0..count)
        .map(|k| EigenPair {
            lam: h.lambdas[k],
            vec: (0..h.dim).map(|i| C64::new(f64_at(&payload, 2 * (k * h.dim + i)), f64_at(&payload, 2 * (k * h.dim + i) + 1))).collect(),
            residual: h.residuals[k],
            multiplicity_hint: h.multiplicity_hints[k],
        })
        .collect();
    Ok((h.grid, pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::complex_perturbed;
    use crate::quantize::weyl_quantize;
    use crate::symbols::parse_symbol;

    fn same(a: &OperatorMatrix, b: &OperatorMatrix) {
        assert_eq!(a.grid, b.grid);
        assert_eq!(a.method, b.method);
        assert_eq!(a.symbol_desc, b.symbol_desc);
        let (da, db) = (a.to_dense(), b.to_dense());
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                assert_eq!(da[(i, j)], db[(i, j)]);
            }
        }
    }

    #[test]
    fn operators_round_trip_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let grid = PhaseSpaceGrid::new(1, 5.0, 32, 0.1).unwrap();
        let fam = complex_perturbed(1);
        let dense = weyl_quantize(&parse_symbol("xi1^2 + x1^2 + i*x1^3", 1).unwrap(), &grid).unwrap();
        for (k, op) in [dense, fam.operator(&grid, Method::SchrodingerSpectral).unwrap(), fam.operator(&grid, Method::SchrodingerFd2).unwrap()]
            .iter()
            .enumerate()
        {
            let path = dir.path().join(format!("op{k}.bin"));
            write_operator(&path, op).unwrap();
            same(op, &read_operator(&path).unwrap());
        }
    }

    #[test]
    fn eigenpairs_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = PhaseSpaceGrid::new(1, 2.0, 8, 0.1).unwrap();
        let pairs = vec![EigenPair {
            lam: C64::new(0.1, -3e-17),
            vec: (0..8).map(|i| C64::new(i as f64 / 7.0, -(i as f64).sqrt())).collect(),
            residual: 1e-13,
            multiplicity_hint: 1,
        }];
        let path = dir.path().join("eig.bin");
        write_eigenpairs(&path, &grid, &pairs).unwrap();
        let (g, back) = read_eigenpairs(&path).unwrap();
        assert_eq!(g, grid);
        assert_eq!(back, pairs);
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        fs::write(&path, b"not a cache file at all").unwrap();
        assert!(matches!(read_operator(&path), Err(Error::Format(_))));
        assert!(matches!(read_eigenpairs(&path), Err(Error::Format(_))));
    }
}
