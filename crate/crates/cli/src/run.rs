//! The experiment pipeline: assumption gate, operators, ground states, then
//! the analysis checks, each writing its artifacts into the run directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use semiclass::analysis::{
    apriori_check, derivative_bounds_check, derivative_sweep_ratios, format_p, garding_sweep, ground_state, microlocal_mass,
    parallel_map, qn_boundedness_check, scaling_report, AprioriReport, DerivativeEntry, DerivativeRatio,
    GardingReport, ScalingReport, SweepCell, SweepOptions,
};
use semiclass::eigensolve::{ground_cluster_with, quadratic_model_spectrum, EigenOptions, ModelCluster};
use semiclass::families::{Family, FamilyId};
use semiclass::hermite::lp_norm_exact;
use semiclass::moyal::star_commutator;
use semiclass::quantize::{OperatorMatrix, ScalingParams};
use semiclass::symbols::cutoff::{apriori_cutoff, localization_cutoff};
use semiclass::symbols::{check_assumptions_with, AssumptionConfig, AssumptionReport, Symbol};
use semiclass::C64;

use crate::cache::Cache;
use crate::config::{Check, ExperimentConfig, SymbolSpec};
use crate::plot::{gnuplot_script, scaling_svg};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub pass: bool,
    /// Reported but not counted towards the exit status.
    pub informational: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub name: String,
    pub config_hash: String,
    pub symbol: String,
    pub n: usize,
    pub verdicts: Vec<Verdict>,
    /// Checks skipped because the assumption gate failed.
    pub skipped: Vec<String>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub lambda: C64,
    pub lambda_over_h: C64,
    pub residual: f64,
    pub multiplicity: usize,
    pub mu: Option<C64>,
    pub deviation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub schema_version: u32,
    pub h: f64,
    pub c: f64,
    pub rows: Vec<SpectrumRow>,
    pub model: Vec<ModelCluster>,
    pub max_deviation: Option<f64>,
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicrolocalRow {
    pub h: f64,
    pub mass: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicrolocalReport {
    pub schema_version: u32,
    pub delta: f64,
    pub rows: Vec<MicrolocalRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QnRow {
    pub h: f64,
    pub power: u32,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QnSpread {
    pub power: u32,
    pub min: f64,
    pub max: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QnReport {
    pub schema_version: u32,
    pub q: String,
    pub h_tilde: f64,
    /// The bound is read as "max/min over the sweep within `factor`".
    pub factor: f64,
    pub rows: Vec<QnRow>,
    pub spreads: Vec<QnSpread>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub schema_version: u32,
    pub order: u32,
    pub factor: f64,
    pub tables: Vec<(f64, Vec<DerivativeEntry>)>,
    pub ratios: Vec<DerivativeRatio>,
    /// Index pairs whose largest-`h` value is below the noise floor; not judged.
    pub unjudged: Vec<(Vec<u32>, Vec<u32>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoyalRow {
    pub power: u32,
    pub commutator: String,
    pub zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoyalReport {
    pub schema_version: u32,
    pub q: String,
    pub rows: Vec<MoyalRow>,
}

/// A configured experiment with its family, cache and parallelism.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub family: Family,
    pub cache: Cache,
    pub jobs: usize,
    pub eigen: EigenOptions,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig, cache: Cache, jobs: usize) -> Result<Self> {
        let family = cfg.family()?;
        let eigen = EigenOptions { seed: cfg.seed, ..Default::default() };
        Ok(Self { cfg, family, cache, jobs: jobs.max(1), eigen })
    }

    fn op_key(&self, h: f64) -> Result<(String, semiclass::quantize::PhaseSpaceGrid)> {
        let grid = self.cfg.grid.grid(self.cfg.n, h)?;
        Ok((Cache::operator_key(&self.family.symbol.describe(), &grid, self.cfg.method), grid))
    }

    pub fn operator(&self, h: f64) -> Result<OperatorMatrix> {
        let (key, grid) = self.op_key(h)?;
        self.cache.operator(&key, || self.family.operator(&grid, self.cfg.method)).with_context(|| format!("quantizing at h = {h}"))
    }

    fn ground_cell(&self, h: f64, opts: &SweepOptions) -> Result<SweepCell> {
        let (key, grid) = self.op_key(h)?;
        let above_floor = grid.check_resolves_ground_scale(opts.floor_factor).is_ok();
        let state = self.cache.ground_state(&key, opts.c, &self.eigen, &grid, || {
            let op = self.operator(h).map_err(|e| semiclass::Error::Backend(format!("{e:#}")))?;
            ground_state(&op, opts.c, h, &self.eigen)
        })?;
        Ok(SweepCell { h, grid, state, above_floor })
    }

    fn sweep_options(&self) -> SweepOptions {
        SweepOptions { c: self.cfg.params.ground_c, fit_tol: self.cfg.tolerances.fit, jobs: self.jobs, eigen: self.eigen.clone(), ..Default::default() }
    }

    /// Ground states at every `h` in `hs`, in order.
    pub fn ground_states(&self, hs: &[f64]) -> Result<Vec<SweepCell>> {
        let opts = self.sweep_options();
        parallel_map(hs, self.jobs, |&h| self.ground_cell(h, &opts).with_context(|| format!("ground state at h = {h}")))
            .into_iter()
            .collect()
    }

    pub fn assumptions(&self) -> Result<AssumptionReport> {
        let p = &self.cfg.params;
        let ac = AssumptionConfig { radius: p.assumption_radius, n_samples: p.assumption_samples, ..Default::default() };
        Ok(check_assumptions_with(&self.family.symbol, &ac)?)
    }

    pub fn spectrum(&self, h: f64, c: f64) -> Result<SpectrumReport> {
        let op = self.operator(h)?;
        let cluster = ground_cluster_with(&op, c, h, &self.eigen)?;
        let model = self.family.quadratic().and_then(|q| quadratic_model_spectrum(&q, c)).unwrap_or_default();
        let rows: Vec<SpectrumRow> = cluster
            .iter()
            .map(|p| {
                let scaled = p.lam / h;
                let best = model.iter().min_by(|a, b| (a.mu - scaled).norm().total_cmp(&(b.mu - scaled).norm()));
                SpectrumRow {
                    lambda: p.lam,
                    lambda_over_h: scaled,
                    residual: p.residual,
                    multiplicity: p.multiplicity_hint,
                    mu: best.map(|m| m.mu),
                    deviation: best.map(|m| (m.mu - scaled).norm()),
                }
            })
            .collect();
        let max_deviation = rows.iter().filter_map(|r| r.deviation).reduce(f64::max);
        let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
        Ok(SpectrumReport { schema_version: REPORT_SCHEMA_VERSION, h, c, rows, model, max_deviation, max_residual })
    }

    fn oracle_norm(&self) -> Option<impl Fn(f64, f64) -> semiclass::Result<f64> + Sync> {
        let n = self.cfg.n;
        matches!(self.cfg.symbol, SymbolSpec::Family(FamilyId::Oscillator)).then(move || move |h: f64, p: f64| lp_norm_exact(&vec![0; n], h, p, n))
    }

    pub fn scaling(&self, cells: &[SweepCell]) -> Result<ScalingReport> {
        let oracle = self.oracle_norm();
        let oracle_ref = oracle.as_ref().map(|o| o as &semiclass::analysis::NormOracle);
        Ok(scaling_report(&self.family.symbol.describe(), cells, &self.cfg.p_values(), self.cfg.tolerances.fit, oracle_ref)?)
    }

    pub fn garding(&self) -> Result<GardingReport> {
        Ok(garding_sweep(&self.family.symbol, &self.cfg.grid, &self.cfg.params.garding_h, self.cfg.tolerances.garding)?)
    }

    pub fn apriori(&self, cells: &[SweepCell]) -> Result<AprioriReport> {
        let h_tilde = self.cfg.sweep.h_tilde;
        let chi: Arc<dyn Symbol> = Arc::new(apriori_cutoff(self.cfg.n));
        let rows = parallel_map(cells, self.jobs, |c| -> Result<_> {
            let op = self.operator(c.h)?;
            Ok(apriori_check(&op, c.state.lam, chi.clone(), &ScalingParams::new(c.h, h_tilde, self.cfg.params.delta)?)?)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let bound = self.cfg.tolerances.apriori;
        let c_tilde = rows.iter().map(|r| r.c_tilde).try_fold(0.0f64, |acc, c| c.map(|c| acc.max(c)));
        Ok(AprioriReport { h_tilde, rows, c_tilde, bound, pass: c_tilde.is_some_and(|c| c <= bound) })
    }

    pub fn microlocal(&self, cells: &[SweepCell]) -> Result<MicrolocalReport> {
        let delta = self.cfg.params.delta;
        let psi: Arc<dyn Symbol> = Arc::new(localization_cutoff(self.cfg.n));
        let rows = parallel_map(cells, self.jobs, |c| -> Result<MicrolocalRow> {
            let mass = microlocal_mass(&c.state.vec, psi.clone(), delta, c.h, &c.grid)?;
            let bound = c.h.powf(self.cfg.tolerances.microlocal_power);
            Ok(MicrolocalRow { h: c.h, mass, bound, pass: mass <= bound })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(MicrolocalReport { schema_version: REPORT_SCHEMA_VERSION, delta, rows })
    }

    pub fn qn_bound(&self, cells: &[SweepCell]) -> Result<QnReport> {
        let q = self.family.quadratic()?;
        let h_tilde = self.cfg.sweep.h_tilde;
        let powers = self.cfg.params.qn_powers.clone();
        let per_cell = parallel_map(cells, self.jobs, |c| -> Result<Vec<QnRow>> {
            let params = ScalingParams::new(c.h, h_tilde, self.cfg.params.delta)?;
            powers
                .iter()
                .map(|&power| Ok(QnRow { h: c.h, power, value: qn_boundedness_check(&c.state.vec, &q, power, &params, &c.grid)? }))
                .collect()
        });
        let rows: Vec<QnRow> = per_cell.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
        let factor = self.cfg.tolerances.qn_factor;
        let spreads = powers
            .iter()
            .map(|&power| {
                let vals: Vec<f64> = rows.iter().filter(|r| r.power == power).map(|r| r.value).collect();
                let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let max = vals.iter().copied().fold(0.0, f64::max);
                let ratio = max / min;
                QnSpread { power, min, max, ratio, pass: ratio <= factor }
            })
            .collect();
        Ok(QnReport { schema_version: REPORT_SCHEMA_VERSION, q: q.to_string(), h_tilde, factor, rows, spreads })
    }

    pub fn derivative_bounds(&self, cells: &[SweepCell]) -> Result<DerivativeReport> {
        let order = self.cfg.params.derivative_order;
        let tables = parallel_map(cells, self.jobs, |c| derivative_bounds_check(&c.state.vec, &c.grid, c.h, order).map(|t| (c.h, t)))
            .into_iter()
            .collect::<semiclass::Result<Vec<_>>>()?;
        let ratios = derivative_sweep_ratios(&tables, self.cfg.n)?;
        let h_max = tables.iter().map(|t| t.0).fold(0.0, f64::max);
        let base = &tables.iter().find(|t| t.0 == h_max).expect("non-empty sweep").1;
        let unjudged = base.iter().filter(|e| e.noise_floor).map(|e| (e.alpha.clone(), e.beta.clone())).collect();
        Ok(DerivativeReport { schema_version: REPORT_SCHEMA_VERSION, order, factor: self.cfg.tolerances.derivative_factor, tables, ratios, unjudged })
    }

    pub fn moyal(&self) -> Result<MoyalReport> {
        let q = self.family.quadratic()?;
        let rows = (1..=4)
            .map(|power| {
                let c = star_commutator(&q, &q.pow(power));
                MoyalRow { power, commutator: c.to_string(), zero: c.is_zero() }
            })
            .collect();
        Ok(MoyalReport { schema_version: REPORT_SCHEMA_VERSION, q: q.to_string(), rows })
    }
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json(dir: &Path, name: &str, v: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    write(dir, name, s)
}

pub fn spectrum_csv(rep: &SpectrumReport) -> String {
    let mut s = String::from("k,lambda_re,lambda_im,lambda_over_h_re,lambda_over_h_im,residual,multiplicity\n");
    for (k, r) in rep.rows.iter().enumerate() {
        let _ = writeln!(s, "{k},{},{},{},{},{},{}", r.lambda.re, r.lambda.im, r.lambda_over_h.re, r.lambda_over_h.im, r.residual, r.multiplicity);
    }
    s
}

pub fn leading_order_csv(rep: &SpectrumReport) -> String {
    let mut s = String::from("h,lambda_re,lambda_im,mu_re,mu_im,deviation\n");
    for r in &rep.rows {
        if let (Some(mu), Some(d)) = (r.mu, r.deviation) {
            let _ = writeln!(s, "{},{},{},{},{},{d}", rep.h, r.lambda.re, r.lambda.im, mu.re, mu.im);
        }
    }
    s
}

pub fn derivative_csv(rep: &DerivativeReport) -> String {
    let mut s = String::from("h,alpha,beta,value,noise_floor\n");
    for (h, t) in &rep.tables {
        for e in t {
            let idx = |v: &[u32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            let _ = writeln!(s, "{h},{},{},{},{}", idx(&e.alpha), idx(&e.beta), e.value, e.noise_floor);
        }
    }
    s
}

pub fn scaling_verdict(rep: &ScalingReport) -> Verdict {
    let fits: Vec<String> =
        rep.fits.iter().map(|f| format!("delta({}) = {:.4} vs {:.4} (+/- {:.3})", format_p(f.p), f.fitted, f.theoretical, f.stderr)).collect();
    let all = rep.fits.iter().all(|f| f.pass);
    let mut detail = fits.join("; ");
    if rep.diagnostic {
        detail.push_str("; diagnostic only: n = 1 lies outside the theorem");
    }
    Verdict { check: Check::Scaling.as_str().into(), pass: all, informational: rep.diagnostic, detail }
}

fn derivative_verdict(rep: &DerivativeReport) -> Verdict {
    let judged: Vec<&DerivativeRatio> =
        rep.ratios.iter().filter(|r| !rep.unjudged.iter().any(|(a, b)| a == &r.alpha && b == &r.beta)).collect();
    let worst = judged.iter().map(|r| r.worst_ratio).fold(0.0, f64::max);
    Verdict {
        check: Check::DerivativeBounds.as_str().into(),
        pass: worst <= rep.factor,
        informational: false,
        detail: format!("worst ratio {worst:.4} over {} index pairs (|alpha+beta| <= {}), allowed {}", judged.len(), rep.order, rep.factor),
    }
}

/// Outcome of [`run`].
pub struct RunOutcome {
    pub dir: PathBuf,
    pub summary: Summary,
}

/// Runs every requested check and writes the artifacts under the run directory.
/// `out` replaces the config's `output_dir` without changing the recorded config.
pub fn run(cfg: ExperimentConfig, out: Option<&Path>, cache: Cache, jobs: usize) -> Result<RunOutcome> {
    let dir = cfg.run_dir(out);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_json(&dir, "config.json", &cfg)?;
    let exp = Experiment::new(cfg, cache, jobs)?;
    let cfg = &exp.cfg;
    let mut verdicts = Vec::new();
    let mut skipped = Vec::new();
    let checks = cfg.ordered_checks();

    let mut gate_ok = true;
    if cfg.wants(Check::Assumptions) {
        let rep = exp.assumptions()?;
        write_json(&dir, "assumptions.json", &rep)?;
        let failures = rep.failures();
        gate_ok = rep.accepted;
        verdicts.push(Verdict {
            check: Check::Assumptions.as_str().into(),
            pass: rep.accepted,
            informational: false,
            detail: if failures.is_empty() { format!("accepted ({} samples, R = {})", rep.n_samples, rep.radius) } else { failures.join("; ") },
        });
    }
    if !gate_ok {
        skipped = checks.iter().filter(|c| **c != Check::Assumptions).map(|c| c.as_str().to_string()).collect();
    } else {
        let sweep_h = cfg.sweep.h_values();
        let needs_sweep = [Check::Scaling, Check::Apriori, Check::QnBound, Check::DerivativeBounds].iter().any(|c| cfg.wants(*c));
        let mut wanted: Vec<f64> = Vec::new();
        if needs_sweep {
            wanted.extend(&sweep_h);
        }
        if cfg.wants(Check::Microlocal) {
            wanted.extend(&cfg.params.microlocal_h);
        }
        wanted.sort_by(|a, b| b.total_cmp(a));
        wanted.dedup();
        let cells = exp.ground_states(&wanted)?;
        let pick = |hs: &[f64]| -> Vec<SweepCell> { hs.iter().filter_map(|h| cells.iter().find(|c| c.h == *h).cloned()).collect() };
        let sweep_cells = pick(&sweep_h);

        for check in checks.iter().copied().filter(|c| *c != Check::Assumptions) {
            let v = match check {
                Check::Spectrum => {
                    let rep = exp.spectrum(cfg.params.spectrum_h, cfg.params.spectrum_c)?;
                    write(&dir, "spectrum.csv", spectrum_csv(&rep))?;
                    write(&dir, "leading_order.csv", leading_order_csv(&rep))?;
                    write_json(&dir, "spectrum.json", &rep)?;
                    let dev = rep.max_deviation.unwrap_or(f64::INFINITY);
                    Verdict {
                        check: check.as_str().into(),
                        pass: !rep.rows.is_empty() && dev <= cfg.tolerances.leading_order,
                        informational: false,
                        detail: format!(
                            "{} eigenvalues in |lambda| < {} h at h = {}; max |lambda/h - mu| = {dev:.3e}; max residual {:.1e}",
                            rep.rows.len(),
                            rep.c,
                            rep.h,
                            rep.max_residual
                        ),
                    }
                }
                Check::Scaling => {
                    let rep = exp.scaling(&sweep_cells)?;
                    write(&dir, "scaling.csv", rep.to_csv())?;
                    write_json(&dir, "scaling.json", &rep)?;
                    write(&dir, "scaling.svg", scaling_svg(&rep))?;
                    write(&dir, "scaling.gp", gnuplot_script(&rep))?;
                    scaling_verdict(&rep)
                }
                Check::Garding => {
                    let rep = exp.garding()?;
                    write_json(&dir, "garding.json", &rep)?;
                    let cs: Vec<String> = rep.rows.iter().map(|r| format!("{:.4}", r.constant)).collect();
                    Verdict {
                        check: check.as_str().into(),
                        pass: rep.pass,
                        informational: false,
                        detail: format!("constants [{}], variation {:.4} (allowed {})", cs.join(", "), rep.variation, rep.tolerance),
                    }
                }
                Check::Apriori => {
                    let k_max = cfg.params.apriori_k_max;
                    let hs: Vec<f64> = sweep_h.iter().copied().filter(|h| *h >= cfg.sweep.h_tilde * 0.5f64.powi(k_max as i32)).collect();
                    let rep = exp.apriori(&pick(&hs))?;
                    write_json(&dir, "apriori.json", &rep)?;
                    Verdict {
                        check: check.as_str().into(),
                        pass: rep.pass,
                        informational: false,
                        detail: match rep.c_tilde {
                            Some(c) => format!("C~ = {c:.4} over {} values of h (allowed {})", rep.rows.len(), rep.bound),
                            None => "Hermitian part not positive at some h".into(),
                        },
                    }
                }
                Check::Microlocal => {
                    let rep = exp.microlocal(&pick(&cfg.params.microlocal_h))?;
                    write_json(&dir, "microlocal.json", &rep)?;
                    let parts: Vec<String> = rep.rows.iter().map(|r| format!("h = {}: {:.3e} (bound {:.3e})", r.h, r.mass, r.bound)).collect();
                    Verdict { check: check.as_str().into(), pass: rep.rows.iter().all(|r| r.pass), informational: false, detail: parts.join("; ") }
                }
                Check::QnBound => {
                    let rep = exp.qn_bound(&sweep_cells)?;
                    write_json(&dir, "qn_bound.json", &rep)?;
                    let parts: Vec<String> = rep.spreads.iter().map(|s| format!("N = {}: max/min = {:.4}", s.power, s.ratio)).collect();
                    Verdict {
                        check: check.as_str().into(),
                        pass: rep.spreads.iter().all(|s| s.pass),
                        informational: false,
                        detail: format!("{} (allowed {}, an operational reading of an O(1) bound)", parts.join("; "), rep.factor),
                    }
                }
                Check::DerivativeBounds => {
                    let rep = exp.derivative_bounds(&sweep_cells)?;
                    write(&dir, "derivative_bounds.csv", derivative_csv(&rep))?;
                    write_json(&dir, "derivative_bounds.json", &rep)?;
                    derivative_verdict(&rep)
                }
                Check::Moyal => {
                    let rep = exp.moyal()?;
                    write_json(&dir, "moyal.json", &rep)?;
                    Verdict {
                        check: check.as_str().into(),
                        pass: rep.rows.iter().all(|r| r.zero),
                        informational: false,
                        detail: format!("[q, q^N] for N = 1..4 with q = {}", rep.q),
                    }
                }
                Check::Assumptions => unreachable!("handled by the gate"),
            };
            verdicts.push(v);
        }
    }

    let summary = Summary {
        schema_version: REPORT_SCHEMA_VERSION,
        name: cfg.name.clone(),
        config_hash: cfg.hash(),
        symbol: exp.family.symbol.describe(),
        n: cfg.n,
        pass: gate_ok && verdicts.iter().all(|v| v.pass || v.informational),
        verdicts,
        skipped,
    };
    write_json(&dir, "summary.json", &summary)?;
    Ok(RunOutcome { dir, summary })
}
