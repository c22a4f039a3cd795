use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::norms::{fit_exponent, ktz_reference, lp_norm_grid, theoretical_exponent};
use crate::eigensolve::{ground_cluster_with, EigenOptions, EigenPair};
use crate::quantize::{OperatorMatrix, PhaseSpaceGrid};
use crate::{Error, Result, C64};

pub const SCHEMA_VERSION: u32 = 1;

/// `p` values serialize as numbers, `∞` as the string `"inf"`.
pub mod p_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => super::parse_p(&t).map_err(serde::de::Error::custom),
        }
    }
}

/// Parses `"inf"` or a number `>= 2`.
pub fn parse_p(s: &str) -> Result<f64> {
    let t = s.trim();
    let p = if matches!(t, "inf" | "infinity" | "∞") {
        f64::INFINITY
    } else {
        t.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad exponent '{t}'")))?
    };
    if p.is_nan() || p < 2.0 {
        return Err(Error::InvalidExponent(p));
    }
    Ok(p)
}

pub fn format_p(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub h: f64,
    #[serde(with = "p_serde")]
    pub p: f64,
    pub norm: f64,
    pub oracle_norm: Option<f64>,
    pub lambda: C64,
    pub residual: f64,
    /// Whether the grid at this `h` resolves the ground-state scale; rows
    /// below the floor are reported but not fitted.
    pub above_floor: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentVerdict {
    #[serde(with = "p_serde")]
    pub p: f64,
    pub fitted: f64,
    pub stderr: f64,
    pub prefactor: f64,
    pub theoretical: f64,
    pub ktz_reference: Option<f64>,
    pub deviation: f64,
    pub pass: bool,
    pub used_h: Vec<f64>,
    pub excluded_h: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub schema_version: u32,
    pub operator_desc: String,
    pub n: usize,
    pub fit_tol: f64,
    /// `n = 1` lies outside the theorem; verdicts are then informational.
    pub diagnostic: bool,
    pub rows: Vec<ScalingRow>,
    pub fits: Vec<ExponentVerdict>,
    /// Fitted exponents non-decreasing in `p` within one combined standard error.
    pub monotone_in_p: bool,
}

impl ScalingReport {
    pub fn fit(&self, p: f64) -> Option<&ExponentVerdict> {
        self.fits.iter().find(|f| f.p == p)
    }

    pub fn all_pass(&self) -> bool {
        self.diagnostic || self.fits.iter().all(|f| f.pass)
    }

    pub const CSV_HEADER: &'static str = "h,p,norm,oracle_norm,lambda_re,lambda_im,residual";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let oracle = r.oracle_norm.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{},{},{}", r.h, format_p(r.p), r.norm, oracle, r.lambda.re, r.lambda.im, r.residual);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Cluster radius `C` in `|λ| < C·h`.
    pub c: f64,
    pub fit_tol: f64,
    /// Ground-scale resolution factor passed to `check_resolves_ground_scale`.
    pub floor_factor: f64,
    pub jobs: usize,
    pub eigen: EigenOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { c: 3.0, fit_tol: 0.05, floor_factor: 5.0, jobs: 1, eigen: EigenOptions::default() }
    }
}

/// Minimum number of distinct `h` values and their minimum span.
pub const MIN_SWEEP_POINTS: usize = 5;
pub const MIN_SWEEP_SPAN: f64 = 16.0;

pub type OperatorFamily<'a> = dyn Fn(f64) -> Result<OperatorMatrix> + Sync + 'a;
pub type NormOracle<'a> = dyn Fn(f64, f64) -> Result<f64> + Sync + 'a;

/// Runs `f` over `items` on up to `jobs` threads, keeping the input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("sweep worker panicked")).collect()
    })
}

/// The eigenpair of `|λ| < C·h` with smallest `|λ|`.
pub fn ground_state(op: &OperatorMatrix, c: f64, h: f64, opts: &EigenOptions) -> Result<EigenPair> {
    let cluster = ground_cluster_with(op, c, h, opts)?;
    cluster
        .into_iter()
        .min_by(|a, b| a.lam.norm().total_cmp(&b.lam.norm()))
        .ok_or(Error::EmptyCluster { h, radius: c * h })
}

pub fn validate_h_list(h_list: &[f64]) -> Result<()> {
    let mut hs: Vec<f64> = h_list.to_vec();
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    if hs.iter().any(|h| !(*h > 0.0 && *h <= 1.0)) {
        return Err(Error::InvalidParameter("h values must lie in (0, 1]".into()));
    }
    let span = hs.last().copied().unwrap_or(0.0) / hs.first().copied().unwrap_or(1.0);
    if hs.len() < MIN_SWEEP_POINTS || span < MIN_SWEEP_SPAN {
        return Err(Error::InvalidParameter(format!(
            "a scaling sweep needs at least {MIN_SWEEP_POINTS} distinct h values spanning a factor {MIN_SWEEP_SPAN}, got {} spanning {span:.3}",
            hs.len()
        )));
    }
    Ok(())
}

/// A ground state computed at one `h` of a sweep.
#[derive(Clone, Debug)]
pub struct SweepCell {
    pub h: f64,
    pub grid: PhaseSpaceGrid,
    pub state: EigenPair,
    /// Whether the grid resolves the ground-state scale (see [`SweepOptions::floor_factor`]).
    pub above_floor: bool,
}

/// Ground states of `family(h)` for every `h`, in input order.
pub fn sweep_ground_states(family: &OperatorFamily, h_list: &[f64], opts: &SweepOptions) -> Result<(String, Vec<SweepCell>)> {
    let cells = parallel_map(h_list, opts.jobs, |&h| -> Result<(String, SweepCell)> {
        let op = family(h)?;
        let above_floor = op.grid.check_resolves_ground_scale(opts.floor_factor).is_ok();
        let state = ground_state(&op, opts.c, h, &opts.eigen)?;
        Ok((op.symbol_desc.clone(), SweepCell { h, grid: op.grid, state, above_floor }))
    });
    let mut desc = String::new();
    let mut out = Vec::with_capacity(cells.len());
    for c in cells {
        let (d, cell) = c?;
        desc = d;
        out.push(cell);
    }
    Ok((desc, out))
}

/// Ground states of `family(h)` over `h_list`, their `L^p` norms and the fitted exponents.
pub fn scaling_sweep(
    family: &OperatorFamily,
    h_list: &[f64],
    p_list: &[f64],
    opts: &SweepOptions,
    oracle: Option<&NormOracle>,
) -> Result<ScalingReport> {
    validate_h_list(h_list)?;
    check_exponents(p_list)?;
    let (desc, cells) = sweep_ground_states(family, h_list, opts)?;
    scaling_report(&desc, &cells, p_list, opts.fit_tol, oracle)
}

fn check_exponents(p_list: &[f64]) -> Result<()> {
    for &p in p_list {
        if p.is_nan() || p < 2.0 {
            return Err(Error::InvalidExponent(p));
        }
    }
    Ok(())
}

/// Builds the report from precomputed ground states.
pub fn scaling_report(desc: &str, cells: &[SweepCell], p_list: &[f64], fit_tol: f64, oracle: Option<&NormOracle>) -> Result<ScalingReport> {
    let hs: Vec<f64> = cells.iter().map(|c| c.h).collect();
    validate_h_list(&hs)?;
    check_exponents(p_list)?;
    let n = cells[0].grid.n;
    let mut rows = Vec::with_capacity(cells.len() * p_list.len());
    for c in cells {
        for &p in p_list {
            rows.push(ScalingRow {
                h: c.h,
                p,
                norm: lp_norm_grid(&c.state.vec, &c.grid, p)?,
                oracle_norm: oracle.map(|o| o(c.h, p)).transpose()?,
                lambda: c.state.lam,
                residual: c.state.residual,
                above_floor: c.above_floor,
            });
        }
    }
    let mut fits = Vec::new();
    for &p in p_list {
        let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.p == p && r.above_floor).map(|r| (r.h, r.norm)).collect();
        let fit = fit_exponent(&pts)?;
        let theoretical = theoretical_exponent(n, p);
        let deviation = (fit.delta - theoretical).abs();
        fits.push(ExponentVerdict {
            p,
            fitted: fit.delta,
            stderr: fit.stderr,
            prefactor: fit.prefactor,
            theoretical,
            ktz_reference: ktz_reference(n, p),
            deviation,
            pass: deviation <= fit_tol,
            used_h: fit.used_h,
            excluded_h: fit.excluded_h,
        });
    }
    let mut by_p: Vec<&ExponentVerdict> = fits.iter().collect();
    by_p.sort_by(|a, b| a.p.total_cmp(&b.p));
    let monotone_in_p = by_p.windows(2).all(|w| w[1].fitted + w[1].stderr + w[0].stderr >= w[0].fitted);
    Ok(ScalingReport {
        schema_version: SCHEMA_VERSION,
        operator_desc: desc.to_string(),
        n,
        fit_tol,
        diagnostic: n < 2,
        rows,
        fits,
        monotone_in_p,
    })
}
