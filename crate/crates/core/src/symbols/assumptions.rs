use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::symbols::{fd_hessian, quadratic_part, Symbol};
use crate::{Error, Result};

/// Sampling controls for [`check_assumptions_with`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssumptionConfig {
    /// Radius `R` of the sampled ball in phase space.
    pub radius: f64,
    pub n_samples: usize,
    /// Samples with `|X| >= ellipticity_radius` enter the ellipticity constant; defaults to `R/2`.
    pub ellipticity_radius: Option<f64>,
    /// `Re p > 0` is required at sampled points with `|X| > zero_tol`.
    pub zero_tol: f64,
    /// Leading Halton indices skipped; fixed so the point set is reproducible.
    pub halton_offset: u64,
}

impl Default for AssumptionConfig {
    fn default() -> Self {
        Self { radius: 20.0, n_samples: 4096, ellipticity_radius: None, zero_tol: 1e-3, halton_offset: 17 }
    }
}

/// Outcome of the sampled checks of the standing assumptions on `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub symbol: String,
    pub dim: usize,
    pub radius: f64,
    pub n_samples: usize,
    /// `p(0) = 0` and `∇p(0) = 0` within tolerance.
    pub doubly_characteristic: bool,
    pub nonneg_real_part: bool,
    /// Smallest sampled `Re p` (clamped above at 0).
    pub worst_violation: f64,
    pub witness: Option<Vec<f64>>,
    pub ellipticity_radius: f64,
    /// Smallest sampled `Re p(X) / <X>^2` over `|X| >= ellipticity_radius`.
    pub ellipticity_constant: f64,
    pub elliptic_at_infinity: bool,
    pub zero_set_ok: bool,
    pub zero_set_witness: Option<Vec<f64>>,
    /// `p''(0)` as `[re, im]` pairs.
    pub hessian: Vec<Vec<[f64; 2]>>,
    /// Eigenvalues of the symmetric matrix `M` with `Re q(X) = M X·X`.
    pub re_q_eigenvalues: Vec<f64>,
    pub re_q_min_eig: f64,
    /// `max |X|^2 / Re p(X)` over samples; `None` when `Re p <= 0` somewhere.
    pub lower_bound_c: Option<f64>,
    pub accepted: bool,
}

impl AssumptionReport {
    /// Human-readable list of the assumptions that failed.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.doubly_characteristic {
            out.push("p(0) and grad p(0) do not vanish (not doubly characteristic at 0)".to_string());
        }
        if !self.nonneg_real_part {
            out.push(format!(
                "Re p >= 0 violated: Re p = {:.4e} at {:?}",
                self.worst_violation, self.witness
            ));
        }
        if !self.elliptic_at_infinity {
            out.push(format!(
                "Re p is not elliptic at infinity: min Re p/<X>^2 = {:.4e} over |X| >= {}",
                self.ellipticity_constant, self.ellipticity_radius
            ));
        }
        if !self.zero_set_ok {
            out.push(format!("Re p vanishes away from 0 at {:?}", self.zero_set_witness));
        }
        if self.re_q_min_eig <= 0.0 {
            out.push(format!("Re q is not positive definite (min eigenvalue {:.4e})", self.re_q_min_eig));
        }
        out
    }
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    out
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Deterministic low-discrepancy points in the ball `|X| <= radius` of `R^d`,
/// followed by points on every coordinate axis.
fn sample_points(d: usize, cfg: &AssumptionConfig) -> Vec<Vec<f64>> {
    let r = cfg.radius;
    let mut pts = Vec::with_capacity(cfg.n_samples + 64 * d);
    let mut k = cfg.halton_offset;
    while pts.len() < cfg.n_samples {
        k += 1;
        let p: Vec<f64> = (0..d).map(|j| r * (2.0 * radical_inverse(k, PRIMES[j]) - 1.0)).collect();
        if p.iter().map(|v| v * v).sum::<f64>() <= r * r {
            pts.push(p);
        }
    }
    let per_axis = 16;
    for j in 0..d {
        for s in 1..=per_axis {
            for sign in [-1.0, 1.0] {
                let mut p = vec![0.0; d];
                p[j] = sign * r * s as f64 / per_axis as f64;
                pts.push(p);
            }
        }
    }
    pts
}

/// Checks the assumptions with the default sampling (`R = 20`, 4096 samples).
pub fn check_assumptions(p: &dyn Symbol) -> Result<AssumptionReport> {
    check_assumptions_with(p, &AssumptionConfig::default())
}

/// Sampled verification of non-negativity of `Re p`, ellipticity at
/// infinity, the zero set of `Re p`, double characteristic at 0 and
/// positivity of `Re q`. Failed assumptions are reported, never raised.
pub fn check_assumptions_with(p: &dyn Symbol, cfg: &AssumptionConfig) -> Result<AssumptionReport> {
    if cfg.n_samples < 1000 {
        return Err(Error::InvalidParameter(format!("n_samples must be >= 1000, got {}", cfg.n_samples)));
    }
    if !(cfg.radius > 0.0) {
        return Err(Error::InvalidParameter("sample radius must be positive".into()));
    }
    let dim = p.dim();
    let d = 2 * dim;
    if d > PRIMES.len() {
        return Err(Error::InvalidParameter(format!("dimension {dim} too large for the sampler")));
    }
    let ell_radius = cfg.ellipticity_radius.unwrap_or(cfg.radius / 2.0);

    let mut worst = 0.0f64;
    let mut witness = None;
    let mut ell = f64::INFINITY;
    let mut zero_witness = None;
    let mut lower_c = 0.0f64;
    let mut lower_ok = true;
    for x in sample_points(d, cfg) {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let re = p.eval(&x, 0.0).re;
        if re < worst {
            worst = re;
            witness = Some(x.clone());
        }
        if r2.sqrt() >= ell_radius {
            ell = ell.min(re / (1.0 + r2));
        }
        if r2.sqrt() > cfg.zero_tol && re <= 0.0 && zero_witness.is_none() {
            zero_witness = Some(x.clone());
        }
        if r2 > 0.0 {
            if re > 0.0 {
                lower_c = lower_c.max(r2 / re);
            } else {
                lower_ok = false;
            }
        }
    }

    let quad = quadratic_part(p);
    let doubly_characteristic = quad.is_ok();
    let origin = vec![0.0; d];
    let hess: Vec<Vec<crate::C64>> = match (&quad, p.as_poly()) {
        (_, Some(poly)) => poly
            .hessian_at_zero()
            .iter()
            .map(|row| row.iter().map(|c| c.to_c64()).collect())
            .collect(),
        (Ok(q), None) => q
            .hessian_at_zero()
            .iter()
            .map(|row| row.iter().map(|c| c.to_c64()).collect())
            .collect(),
        (Err(_), None) => fd_hessian(p, &origin, 0.0),
    };
    let m = Mat::<f64>::from_fn(d, d, |i, j| 0.5 * hess[i][j].re);
    let re_q_eigenvalues = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Backend(format!("{e:?}")))?;
    let re_q_min_eig = re_q_eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);

    let nonneg = worst >= 0.0;
    let elliptic = ell > 0.0 && ell.is_finite();
    let zero_ok = zero_witness.is_none();
    let accepted = doubly_characteristic && nonneg && elliptic && zero_ok && re_q_min_eig > 0.0;
    Ok(AssumptionReport {
        symbol: p.describe(),
        dim,
        radius: cfg.radius,
        n_samples: cfg.n_samples,
        doubly_characteristic,
        nonneg_real_part: nonneg,
        worst_violation: worst,
        witness,
        ellipticity_radius: ell_radius,
        ellipticity_constant: ell,
        elliptic_at_infinity: elliptic,
        zero_set_ok: zero_ok,
        zero_set_witness: zero_witness,
        hessian: hess.iter().map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect(),
        re_q_eigenvalues,
        re_q_min_eig,
        lower_bound_c: lower_ok.then_some(lower_c),
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::parse_symbol;

    #[test]
    fn oscillator_passes_everything() {
        let p = parse_symbol("xi1^2 + xi2^2 + x1^2 + x2^2", 2).unwrap();
        let r = check_assumptions(&p).unwrap();
        assert!(r.accepted, "{:?}", r.failures());
        assert!((r.re_q_min_eig - 1.0).abs() < 1e-14);
        assert!((r.lower_bound_c.unwrap() - 1.0).abs() < 1e-12);
        assert!(r.failures().is_empty());
    }

    #[test]
    fn inverted_potential_fails_with_axis_witness() {
        let p = parse_symbol("xi1^2 + xi2^2 - x1^2 - x2^2", 2).unwrap();
        let r = check_assumptions(&p).unwrap();
        assert!(!r.nonneg_real_part);
        assert!(!r.accepted);
        let w = r.witness.unwrap();
        // The worst point is on an x-axis at the sampling radius.
        assert_eq!(&w[2..], &[0.0, 0.0]);
        assert_eq!(w.iter().filter(|v| **v != 0.0).count(), 1);
        assert!((r.worst_violation + 400.0).abs() < 1e-9);
        assert!(r.re_q_min_eig < 0.0);
        assert!(r.lower_bound_c.is_none());
    }

    #[test]
    fn complex_perturbation_keeps_real_part() {
        let p = parse_symbol("xi1^2 + xi2^2 + x1^2 + x2^2 + 0.2i*x1^2*tanh(x1)", 2).unwrap();
        let r = check_assumptions(&p).unwrap();
        assert!(r.accepted, "{:?}", r.failures());
        assert!((r.lower_bound_c.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coupled_quadratic_eigenvalues() {
        let p = parse_symbol("xi1^2 + xi2^2 + x1^2 + x2^2 + x1*x2", 2).unwrap();
        let r = check_assumptions(&p).unwrap();
        let mut ev = r.re_q_eigenvalues.clone();
        ev.sort_by(f64::total_cmp);
        // Independent route: closed form of the 2x2 block [[1, 1/2], [1/2, 1]].
        let expect = [0.5, 1.0, 1.0, 1.5];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn report_round_trips_through_json() {
        let p = parse_symbol("xi1^2 + x1^2", 1).unwrap();
        let r = check_assumptions(&p).unwrap();
        let back: AssumptionReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(r, back);
    }

    #[test]
    fn too_few_samples_is_a_parameter_error() {
        let p = parse_symbol("xi1^2 + x1^2", 1).unwrap();
        let cfg = AssumptionConfig { n_samples: 10, ..Default::default() };
        assert!(check_assumptions_with(&p, &cfg).is_err());
    }
}
