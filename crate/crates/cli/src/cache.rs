//! On-disk reuse of operators and ground states, keyed by content hash.
//! Enabled by `SEMICLASS_CACHE_DIR`.

use std::path::PathBuf;

use anyhow::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};

use semiclass::eigensolve::{EigenOptions, EigenPair};
use semiclass::io::{read_eigenpairs, read_operator, write_eigenpairs, write_operator};
use semiclass::quantize::{Method, OperatorMatrix, PhaseSpaceGrid};

pub const CACHE_ENV: &str = "SEMICLASS_CACHE_DIR";

#[derive(Clone, Debug, Default)]
pub struct Cache {
    dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct OperatorKey<'a> {
    symbol: &'a str,
    grid: &'a PhaseSpaceGrid,
    method: Method,
}

#[derive(Serialize)]
struct GroundKey<'a> {
    operator: &'a str,
    c: f64,
    eigen: &'a EigenOptions,
}

fn digest(v: &impl Serialize) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(v).expect("cache key serializes")))
}

impl Cache {
    pub fn from_env() -> Self {
        Self { dir: std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from) }
    }

    pub fn operator_key(symbol: &str, grid: &PhaseSpaceGrid, method: Method) -> String {
        digest(&OperatorKey { symbol, grid, method })
    }

    fn path(&self, stem: &str, ext: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{stem}.{ext}")))
    }

    /// Returns the cached operator or builds and stores it.
    pub fn operator(&self, key: &str, build: impl FnOnce() -> semiclass::Result<OperatorMatrix>) -> Result<OperatorMatrix> {
        let Some(path) = self.path(key, "op") else {
            return Ok(build()?);
        };
        if path.exists() {
            if let Ok(op) = read_operator(&path) {
                return Ok(op);
            }
        }
        let op = build()?;
        std::fs::create_dir_all(path.parent().expect("cache path has a parent"))?;
        write_operator(&path, &op)?;
        Ok(op)
    }

    /// Returns the cached ground state of the operator under `op_key` or computes and stores it.
    pub fn ground_state(
        &self,
        op_key: &str,
        c: f64,
        eigen: &EigenOptions,
        grid: &PhaseSpaceGrid,
        solve: impl FnOnce() -> semiclass::Result<EigenPair>,
    ) -> Result<EigenPair> {
        let key = digest(&GroundKey { operator: op_key, c, eigen });
        let Some(path) = self.path(&key, "eig") else {
            return Ok(solve()?);
        };
        if path.exists() {
            if let Ok((g, mut pairs)) = read_eigenpairs(&path) {
                if &g == grid && pairs.len() == 1 {
                    return Ok(pairs.remove(0));
                }
            }
        }
        let pair = solve()?;
        std::fs::create_dir_all(path.parent().expect("cache path has a parent"))?;
        write_eigenpairs(&path, grid, std::slice::from_ref(&pair))?;
        Ok(pair)
    }
}
