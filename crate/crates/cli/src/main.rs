mod cache;
mod config;
mod plot;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use semiclass::analysis::{format_p, parse_p};
use semiclass::families::FamilyId;
use semiclass::hermite::{lp_constant, lp_norm_exact, oscillator_eigenvalue};
use semiclass::io::write_operator;
use semiclass::moyal::{poisson_bracket, star_commutator, star_product, star_product_at};
use semiclass::quantize::{GridPolicy, Method, Storage};
use semiclass::symbols::{parse_symbol, PolySymbol, Symbol};

use cache::Cache;
use config::{ExperimentConfig, SymbolSpec};
use run::Experiment;

#[derive(Parser)]
#[command(version, about = "Numerical laboratory for semiclassical operators with double characteristics", long_about = None)]
struct Cli {
    /// Worker threads for sweep cells (defaults to the available parallelism)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check listed in an experiment config and write the artifacts
    Run {
        /// Experiment config (JSON)
        config: PathBuf,
        /// Write under this directory instead of the config's output_dir
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the standing assumptions on a symbol
    Assumptions(OperatorArgs),
    /// Quantize a symbol at one h and print a summary of the matrix
    Quantize {
        #[command(flatten)]
        op: OperatorArgs,
        /// Semiclassical parameter
        #[arg(long)]
        h: f64,
        /// Save the operator in the binary cache format
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the eigenvalues with |lambda| < C h (the ground cluster)
    Spectrum {
        #[command(flatten)]
        op: OperatorArgs,
        /// Semiclassical parameter (default: params.spectrum_h)
        #[arg(long)]
        h: Option<f64>,
        /// Cluster radius C (default: params.spectrum_c)
        #[arg(long)]
        c: Option<f64>,
    },
    /// Ground-state L^p scaling sweep with exponent fits
    Scaling {
        #[command(flatten)]
        op: OperatorArgs,
        /// Exponents, comma separated ("inf" allowed)
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<String>>,
        /// Write scaling.csv/json/svg and the gnuplot script into this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest eigenvalue of the Hermitian part over an h list
    Garding {
        #[command(flatten)]
        op: OperatorArgs,
        /// Values of h, comma separated (default: params.garding_h)
        #[arg(long, value_delimiter = ',')]
        h: Option<Vec<f64>>,
    },
    /// Exact star products of polynomial symbols
    Moyal {
        /// Left factor, e.g. "x1^2 + xi1^2"
        #[arg(long)]
        a: String,
        /// Right factor
        #[arg(long)]
        b: String,
        /// Dimension (default: the largest variable index used)
        #[arg(long)]
        n: Option<usize>,
        /// Print a#b - b#a instead
        #[arg(long)]
        commutator: bool,
        /// Also print the Poisson bracket {a, b}
        #[arg(long)]
        poisson: bool,
        /// Substitute a numeric h
        #[arg(long)]
        h: Option<f64>,
        /// Print JSON instead of text
        #[arg(long)]
        json: bool,
    },
    /// Harmonic-oscillator eigenvalues and exact L^p norms as CSV
    Oracle {
        /// Multi-index, comma separated; its length is the dimension
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<u32>,
        /// Values of h, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        h: Vec<f64>,
        /// Exponents, comma separated ("inf" allowed)
        #[arg(long, value_delimiter = ',', default_value = "2,4,6,inf")]
        p: Vec<String>,
        /// Decimal places in the output
        #[arg(long, default_value_t = 4)]
        precision: usize,
    },
}

/// Operator selection: a config file, overridden by any explicit flag.
#[derive(Args, Clone, Debug)]
struct OperatorArgs {
    /// Experiment config to take defaults from
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in family: oscillator, complex-perturbed or inverted
    #[arg(long, value_parser = parse_family, conflicts_with = "expression")]
    family: Option<FamilyId>,
    /// Symbol expression in x1.., xi1.., e.g. "xi1^2 + x1^2"
    #[arg(long)]
    expression: Option<String>,
    /// Dimension
    #[arg(long)]
    n: Option<usize>,
    /// Adaptive box: half-width is width*sqrt(h)
    #[arg(long, conflicts_with = "half_width")]
    width: Option<f64>,
    /// Fixed box half-width L
    #[arg(long)]
    half_width: Option<f64>,
    /// Grid points per axis
    #[arg(long)]
    points: Option<usize>,
    /// midpoint-fft, schrodinger-spectral or schrodinger-fd2
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
}

fn parse_family(s: &str) -> Result<FamilyId, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown family '{s}'"))
}

fn parse_method(s: &str) -> Result<Method, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown method '{s}'"))
}

const DEFAULT_CONFIG: &str = r#"{
    "schema_version": 1,
    "name": "adhoc",
    "symbol": {"family": "oscillator"},
    "n": 2,
    "grid": {"kind": "adaptive", "width": 7.0, "points": 32},
    "sweep": {"h_tilde": 0.5, "k_min": 1, "k_max": 6},
    "checks": ["assumptions"]
}"#;

impl OperatorArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::parse(DEFAULT_CONFIG)?,
        };
        if let Some(id) = self.family {
            cfg.symbol = SymbolSpec::Family(id);
        }
        if let Some(e) = &self.expression {
            cfg.symbol = SymbolSpec::Expression(e.clone());
            if self.method.is_none() {
                cfg.method = Method::MidpointFft;
            }
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        let points = self.points.unwrap_or(cfg.grid.points());
        if let Some(width) = self.width {
            cfg.grid = GridPolicy::Adaptive { width, points };
        } else if let Some(half_width) = self.half_width {
            cfg.grid = GridPolicy::Fixed { half_width, points };
        } else if self.points.is_some() {
            cfg.grid = match cfg.grid {
                GridPolicy::Adaptive { width, .. } => GridPolicy::Adaptive { width, points },
                GridPolicy::Fixed { half_width, .. } => GridPolicy::Fixed { half_width, points },
            };
        }
        if let Some(m) = self.method {
            cfg.method = m;
        }
        Ok(cfg)
    }
}

fn experiment(op: &OperatorArgs, jobs: usize) -> Result<Experiment> {
    Experiment::new(op.resolve()?, Cache::from_env(), jobs)
}

fn parse_ps(ps: &[String]) -> Result<Vec<f64>> {
    ps.iter().map(|p| parse_p(p).map_err(Into::into)).collect()
}

/// Shortest dimension covering every `x<k>`/`xi<k>` in the text.
fn infer_dim(src: &str) -> usize {
    let b = src.as_bytes();
    let mut best = 1;
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'x' {
            let mut j = i + 1;
            if j < b.len() && b[j] == b'i' {
                j += 1;
            }
            let start = j;
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            if let Ok(k) = src[start..j].parse::<usize>() {
                best = best.max(k);
            }
            i = j.max(i + 1);
        } else {
            i += 1;
        }
    }
    best
}

fn poly(src: &str, n: usize) -> Result<PolySymbol> {
    match parse_symbol(src, n)?.as_poly() {
        Some(p) => Ok(p.clone()),
        None => bail!("'{src}' is not a polynomial symbol"),
    }
}

fn fixed(v: f64, digits: usize) -> String {
    format!("{v:.digits$}")
}

fn main() -> Result<ExitCode> {
    semiclass::pin_sequential_backend();
    let cli = Cli::parse();
    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let outcome = run::run(cfg, out.as_deref(), Cache::from_env(), jobs)?;
            let s = &outcome.summary;
            println!("{} ({})", s.name, s.symbol);
            for v in &s.verdicts {
                let tag = match (v.pass, v.informational) {
                    (true, _) => "PASS",
                    (false, true) => "INFO",
                    (false, false) => "FAIL",
                };
                println!("  {tag:<4}  {:<18} {}", v.check, v.detail);
            }
            for c in &s.skipped {
                println!("  SKIP  {c:<18} assumption gate failed");
            }
            println!("results in {}", outcome.dir.display());
            return Ok(if s.pass { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
        Command::Assumptions(op) => {
            let exp = experiment(&op, jobs)?;
            let rep = exp.assumptions()?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
            for f in rep.failures() {
                eprintln!("failed: {f}");
            }
            return Ok(if rep.accepted { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
        Command::Quantize { op, h, out } => {
            let exp = experiment(&op, jobs)?;
            let m = exp.operator(h)?;
            let storage = match &m.storage {
                Storage::Dense(_) => "dense".to_string(),
                Storage::Sparse(s) => format!("sparse ({} entries)", s.triplets().count()),
                Storage::Spectral { .. } => "spectral (diagonal + Fourier multiplier)".to_string(),
            };
            println!("symbol: {}", m.symbol_desc);
            println!("method: {}", m.method.as_str());
            println!("grid: n = {}, L = {}, N = {}, h = {}", m.grid.n, m.grid.half_width, m.grid.points, m.grid.h);
            println!("dimension: {}", m.dim());
            println!("storage: {storage}");
            if let Some(path) = out {
                write_operator(&path, &m).with_context(|| format!("writing {}", path.display()))?;
                println!("written to {}", path.display());
            }
        }
        Command::Spectrum { op, h, c } => {
            let exp = experiment(&op, jobs)?;
            let h = h.unwrap_or(exp.cfg.params.spectrum_h);
            let c = c.unwrap_or(exp.cfg.params.spectrum_c);
            let rep = exp.spectrum(h, c)?;
            println!("k,lambda_re,lambda_im,lambda_over_h,residual,N_k");
            for (k, r) in rep.rows.iter().enumerate() {
                println!("{k},{:.6},{:.2e},{:.6},{:.2e},{}", r.lambda.re, r.lambda.im, r.lambda_over_h.re, r.residual, r.multiplicity);
            }
        }
        Command::Scaling { op, p, out } => {
            let mut exp = experiment(&op, jobs)?;
            if let Some(p) = p {
                exp.cfg.p_list = parse_ps(&p)?.into_iter().map(config::PValue).collect();
            }
            let hs = exp.cfg.sweep.h_values();
            semiclass::analysis::validate_h_list(&hs)?;
            let cells = exp.ground_states(&hs)?;
            let rep = exp.scaling(&cells)?;
            println!("p,fitted,stderr,theoretical,deviation,pass");
            for f in &rep.fits {
                println!("{},{:.4},{:.4},{:.4},{:.4},{}", format_p(f.p), f.fitted, f.stderr, f.theoretical, f.deviation, f.pass);
            }
            if rep.diagnostic {
                println!("diagnostic only: n = 1 lies outside the theorem");
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("scaling.csv"), rep.to_csv())?;
                std::fs::write(dir.join("scaling.json"), serde_json::to_string_pretty(&rep)? + "\n")?;
                std::fs::write(dir.join("scaling.svg"), plot::scaling_svg(&rep))?;
                std::fs::write(dir.join("scaling.gp"), plot::gnuplot_script(&rep))?;
            }
            return Ok(if rep.all_pass() { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
        Command::Garding { op, h } => {
            let mut exp = experiment(&op, jobs)?;
            if let Some(h) = h {
                exp.cfg.params.garding_h = h;
            }
            let rep = exp.garding()?;
            println!("h,min_eig,symbol_min,constant");
            for r in &rep.rows {
                println!("{},{:.8},{:.8},{:.6}", r.h, r.min_eig, r.symbol_min, r.constant);
            }
            println!("variation {:.4} (allowed {}), nonnegative symbol: {}", rep.variation, rep.tolerance, rep.nonnegative);
            return Ok(if rep.pass { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
        Command::Moyal { a, b, n, commutator, poisson, h, json } => {
            let n = n.unwrap_or_else(|| infer_dim(&a).max(infer_dim(&b)));
            let (pa, pb) = (poly(&a, n)?, poly(&b, n)?);
            let result = match (commutator, h) {
                (true, None) => star_commutator(&pa, &pb),
                (true, Some(h)) => &star_product_at(&pa, &pb, h) - &star_product_at(&pb, &pa, h),
                (false, None) => star_product(&pa, &pb),
                (false, Some(h)) => star_product_at(&pa, &pb, h),
            };
            let bracket = poisson.then(|| poisson_bracket(&pa, &pb));
            if json {
                let v = serde_json::json!({
                    "a": pa.to_string(),
                    "b": pb.to_string(),
                    "operation": if commutator { "commutator" } else { "star_product" },
                    "result": result.to_string(),
                    "poisson_bracket": bracket.map(|p| p.to_string()),
                });
                println!("{}", serde_json::to_string_pretty(&v)?);
            } else {
                println!("{result}");
                if let Some(p) = bracket {
                    println!("{{a, b}} = {p}");
                }
            }
        }
        Command::Oracle { alpha, h, p, precision } => {
            let ps = parse_ps(&p)?;
            let n = alpha.len();
            let tag = alpha.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ");
            println!("alpha,h,p,lambda,c_alpha,norm");
            for &hv in &h {
                if hv.is_nan() || hv <= 0.0 {
                    bail!("h must be positive, got {hv}");
                }
                for &pv in &ps {
                    let lam = oscillator_eigenvalue(&alpha, hv, n);
                    let c = lp_constant(&alpha, pv)?;
                    let norm = lp_norm_exact(&alpha, hv, pv, n)?;
                    println!(
                        "{tag},{hv},{},{},{},{}",
                        format_p(pv),
                        fixed(lam, precision),
                        fixed(c, precision),
                        fixed(norm, precision)
                    );
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
