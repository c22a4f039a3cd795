//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines reach stdout; exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use semiclass::analysis::lp_norm_weighted;
use semiclass::eigensolve::{eigs_near, eigs_near_with, EigenOptions, Solver};
use semiclass::families::oscillator;
use semiclass::hermite::{lp_norm_exact, lp_scaling_exponent, oscillator_eigenvalue, OscillatorState};
use semiclass::moyal::{star_commutator, star_product};
use semiclass::quantize::{weyl_quantize, Method, PhaseSpaceGrid};
use semiclass::symbols::{parse_symbol, Coeff, Monomial, PolySymbol, Symbol};
use semiclass::C64;

const PS: [f64; 4] = [2.0, 4.0, 6.0, f64::INFINITY];
const CONFIGS: [&str; 5] = ["oscillator_n2", "complex_perturbed_n2", "inverted_n2", "garding_sin", "oscillator_n1"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().expect("workspace root")
}

struct Run {
    dir: PathBuf,
    status: i32,
    seconds: f64,
}

fn run_config(name: &str, out: &Path, cache: Option<&Path>) -> Run {
    let cfg = workspace_root().join("configs").join(format!("{name}.json"));
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_semiclass"));
    cmd.arg("run").arg(&cfg).arg("--out").arg(out);
    match cache {
        Some(c) => cmd.env("SEMICLASS_CACHE_DIR", c),
        None => cmd.env_remove("SEMICLASS_CACHE_DIR"),
    };
    let start = Instant::now();
    let res = cmd.output().expect("spawn semiclass");
    let seconds = start.elapsed().as_secs_f64();
    let dir = std::fs::read_dir(out)
        .expect("output directory")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .find(|p| p.file_name().is_some_and(|f| f.to_string_lossy().starts_with(&format!("{name}-"))))
        .unwrap_or_else(|| panic!("no run directory for {name}: {}", String::from_utf8_lossy(&res.stderr)));
    Run { dir, status: res.status.code().unwrap_or(-1), seconds }
}

fn json(dir: &Path, file: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(file)).unwrap_or_else(|e| panic!("{}: {e}", dir.join(file).display()));
    serde_json::from_str(&text).expect("valid JSON")
}

fn f(v: &Value) -> f64 {
    match v {
        Value::String(s) if s == "inf" => f64::INFINITY,
        _ => v.as_f64().expect("number"),
    }
}

fn fine_1d_norm(k: u32, h: f64, p: f64) -> f64 {
    let grid = PhaseSpaceGrid::new(1, 12.0 * h.sqrt(), 1 << 17, h).unwrap();
    let u = OscillatorState::new(&[k], h).sample(&grid);
    lp_norm_weighted(u.iter().map(|v| v.abs()), grid.weight(), p).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let hs = [1.0, 0.3, 0.1, 0.03];
    let mut worst: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for &h in &hs {
        for p in PS {
            let axis: Vec<f64> = (0..=3).map(|k| fine_1d_norm(k, h, p)).collect();
            for a in 0..=3u32 {
                worst = worst.max((axis[a as usize] / lp_norm_exact(&[a], h, p, 1).unwrap() - 1.0).abs());
                for b in 0..=(3 - a) {
                    // Tensor-grid norms of product states are products of axis norms.
                    let grid = axis[a as usize] * axis[b as usize];
                    worst = worst.max((grid / lp_norm_exact(&[a, b], h, p, 2).unwrap() - 1.0).abs());
                }
            }
        }
    }
    let alphas: Vec<Vec<u32>> = (0..=3).map(|a| vec![a]).chain((0..=3).flat_map(|a| (0..=(3 - a)).map(move |b| vec![a, b]))).collect();
    for alpha in &alphas {
        let n = alpha.len();
        for p in PS {
            for (h1, h2) in [(1.0, 0.3), (0.3, 0.1), (0.1, 0.03), (1.0, 0.03)] {
                let ratio = lp_norm_exact(alpha, h1, p, n).unwrap() / lp_norm_exact(alpha, h2, p, n).unwrap();
                let law = (h1 / h2).powf(lp_scaling_exponent(n, p));
                worst_ratio = worst_ratio.max((ratio / law - 1.0).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-6 && worst_ratio <= 1e-12 && secs < 10.0,
        format!("max rel err {worst:.2e} (<= 1e-6), h-ratio err {worst_ratio:.2e} (<= 1e-12), {secs:.1} s (< 10 s)"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let h = 0.05;
    let grid = PhaseSpaceGrid::new(1, 10.0, 512, h).unwrap();
    let op = weyl_quantize(&PolySymbol::oscillator(1), &grid).unwrap();
    let pairs = eigs_near(&op, C64::new(0.0, 0.0), 6).unwrap();
    let err1 = pairs.iter().enumerate().map(|(k, p)| (p.lam.re / ((2 * k + 1) as f64 * h) - 1.0).abs() + p.lam.im.abs() / h).fold(0.0, f64::max);
    let ok1 = pairs.len() == 6;

    let grid2 = PhaseSpaceGrid::new(2, 6.0, 96, h).unwrap();
    let op2 = oscillator(2).operator(&grid2, Method::SchrodingerSpectral).unwrap();
    let opts = EigenOptions { solver: Solver::ShiftInvert, ..Default::default() };
    let pairs2 = eigs_near_with(&op2, C64::new(0.0, 0.0), 6, &opts).unwrap();
    let want = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]].map(|a| oscillator_eigenvalue(&a, h, 2));
    let err2 = pairs2.iter().zip(want).map(|(p, w)| (p.lam - w).norm() / w).fold(0.0, f64::max);
    let ok2 = pairs2.len() == 6;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ok1 && ok2 && err1 <= 1e-6 && err2 <= 1e-3 && secs < 60.0,
        format!("n=1 max rel err {err1:.2e} (<= 1e-6); n=2 shift-invert, N=96: {err2:.2e} (<= 1e-3); {secs:.1} s (< 60 s)"),
    )
}

fn criterion_3(run: &Run) -> Outcome {
    let rep = json(&run.dir, "scaling.json");
    let hs: Vec<f64> = rep["rows"].as_array().unwrap().iter().map(|r| f(&r["h"])).collect();
    let sweep_ok = (1..=6).all(|k| hs.contains(&(0.5 * 0.5f64.powi(k)))) && hs.iter().all(|h| *h <= 0.25);
    let fit = |p: f64| rep["fits"].as_array().unwrap().iter().find(|x| f(&x["p"]) == p).map(|x| f(&x["fitted"]));
    let (d_inf, d_4) = (fit(f64::INFINITY).unwrap_or(f64::NAN), fit(4.0).unwrap_or(f64::NAN));
    let ok = sweep_ok && (d_inf - 0.5).abs() <= 0.05 && (d_4 - 0.25).abs() <= 0.05 && run.seconds < 600.0;
    outcome(ok, format!("delta(inf) = {d_inf:.4} (0.5 +/- 0.05), delta(4) = {d_4:.4} (0.25 +/- 0.05), full run {:.0} s (< 600 s)", run.seconds))
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, max_degree: u32) -> PolySymbol {
    let terms: Vec<_> = (0..rng.random_range(1..=4))
        .map(|_| {
            let mut exps = vec![0u32; 2 * n];
            for _ in 0..rng.random_range(0..=max_degree) {
                exps[rng.random_range(0..2 * n)] += 1;
            }
            (Monomial::new(exps, 0), Coeff::gaussian(rng.random_range(-3..=3), rng.random_range(-3..=3)))
        })
        .collect();
    PolySymbol::from_terms(n, terms)
}

fn criterion_4() -> Outcome {
    let qs = [
        "xi1^2 + x1^2 + (1/3)*x1*xi1 + i*(2*x1^2 - x1*xi1 + (1/2)*xi1^2)",
        "xi1^2 + 2*xi2^2 + x1^2 + x2^2 + (1/2)*x1*x2 + i*(x1*xi2 - 3*x2^2 + xi1*xi2)",
    ];
    let mut commute = true;
    for (i, src) in qs.iter().enumerate() {
        let q = parse_symbol(src, i + 1).unwrap().as_poly().unwrap().clone();
        for big_n in 1..=4 {
            commute &= star_commutator(&q, &q.pow(big_n)).is_zero();
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xa55);
    let mut assoc = 0;
    for t in 0..100 {
        let n = 1 + t % 2;
        let (a, b, c) = (random_poly(&mut rng, n, 3), random_poly(&mut rng, n, 3), random_poly(&mut rng, n, 3));
        assoc += usize::from(star_product(&star_product(&a, &b), &c) == star_product(&a, &star_product(&b, &c)));
    }
    outcome(commute && assoc == 100, format!("[q, q^N] = 0 for N = 1..4: {commute}; associativity exact on {assoc}/100 triples"))
}

fn criterion_5(run: &Run) -> Outcome {
    let rep = json(&run.dir, "garding.json");
    let rows = rep["rows"].as_array().unwrap();
    let hs: Vec<f64> = rows.iter().map(|r| f(&r["h"])).collect();
    let cs: Vec<f64> = rows.iter().map(|r| f(&r["constant"])).collect();
    let bounded = rows.iter().all(|r| f(&r["min_eig"]) >= -f(&r["lower_bound_constant"]) * f(&r["h"]));
    let hi = cs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = cs.iter().copied().fold(f64::INFINITY, f64::min);
    let variation = (hi - lo) / cs.iter().map(|c| c.abs()).fold(f64::INFINITY, f64::min);
    let ok = hs == [0.2, 0.1, 0.05, 0.025] && bounded && rep["nonnegative"] == true && variation <= 0.2;
    outcome(ok, format!("fitted C over h = {hs:?}: {cs:.4?}, variation {variation:.4} (<= 0.2)"))
}

fn criterion_6(run: &Run) -> Outcome {
    let rep = json(&run.dir, "apriori.json");
    let rows = rep["rows"].as_array().unwrap();
    let hs: Vec<f64> = rows.iter().map(|r| f(&r["h"])).collect();
    let want: Vec<f64> = (1..=5).map(|k| 0.5 * 0.5f64.powi(k)).collect();
    let positive = rows.iter().all(|r| f(&r["min_eig"]) > 0.0);
    let c = rows.iter().map(|r| f(&r["eps"]) / f(&r["min_eig"])).fold(0.0, f64::max);
    outcome(
        hs == want && positive && f(&rep["h_tilde"]) == 0.5 && c <= 10.0,
        format!("min eig > 0 at all {} h; single C~ = {c:.4} (<= 10)", rows.len()),
    )
}

fn microlocal_line(run: &Run) -> (bool, String) {
    let rep = json(&run.dir, "microlocal.json");
    let rows = rep["rows"].as_array().unwrap();
    let hs: Vec<f64> = rows.iter().map(|r| f(&r["h"])).collect();
    let ok = hs == [0.05, 0.025] && f(&rep["delta"]) == 0.4 && rows.iter().all(|r| f(&r["mass"]) <= f(&r["h"]).powi(2));
    let parts: Vec<String> = rows.iter().map(|r| format!("{:.2e} <= {:.2e}", f(&r["mass"]), f(&r["h"]).powi(2))).collect();
    (ok, parts.join(", "))
}

fn criterion_7(osc: &Run, cplx: &Run) -> Outcome {
    let (a, da) = microlocal_line(osc);
    let (b, db) = microlocal_line(cplx);
    outcome(a && b, format!("oscillator {da}; perturbed {db}"))
}

fn qn_line(run: &Run) -> (bool, String) {
    let rep = json(&run.dir, "qn_bound.json");
    let rows = rep["rows"].as_array().unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for power in [1u64, 2] {
        let vals: Vec<f64> = rows.iter().filter(|r| r["power"].as_u64() == Some(power)).map(|r| f(&r["value"])).collect();
        let ratio = vals.iter().copied().fold(0.0, f64::max) / vals.iter().copied().fold(f64::INFINITY, f64::min);
        ok &= vals.len() == 6 && ratio <= 2.0;
        parts.push(format!("N={power}: {ratio:.4}"));
    }
    (ok, parts.join(" "))
}

fn criterion_8(osc: &Run, cplx: &Run) -> Outcome {
    let (a, da) = qn_line(osc);
    let (b, db) = qn_line(cplx);
    outcome(a && b, format!("max/min over the sweep (<= 2): oscillator {da}; perturbed {db}"))
}

fn derivative_line(run: &Run) -> (bool, String) {
    let rep = json(&run.dir, "derivative_bounds.json");
    let tables = rep["tables"].as_array().unwrap();
    let n = tables[0][1][0]["alpha"].as_array().unwrap().len() as f64;
    let h_max = tables.iter().map(|t| f(&t[0])).fold(0.0, f64::max);
    let base = &tables.iter().find(|t| f(&t[0]) == h_max).unwrap()[1];
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for t in tables {
        let h = f(&t[0]);
        for (e, b) in t[1].as_array().unwrap().iter().zip(base.as_array().unwrap()) {
            let allowed = f(&b["value"]) * (h / h_max).powf(-n / 4.0);
            worst = worst.max(f(&e["value"]) / allowed);
            count += usize::from(h == h_max);
        }
    }
    (rep["order"] == 2 && tables.len() == 6 && worst <= 2.0, format!("{worst:.4} over {count} pairs"))
}

fn criterion_9(osc: &Run, cplx: &Run) -> Outcome {
    let (a, da) = derivative_line(osc);
    let (b, db) = derivative_line(cplx);
    outcome(a && b, format!("worst ratio (<= 2): oscillator {da}; perturbed {db}"))
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "json")))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn criterion_10(first: &BTreeMap<&str, Run>, scratch: &Path) -> Outcome {
    let mut bad = Vec::new();
    let mut files = 0;
    for name in CONFIGS {
        let cache = scratch.join(format!("cache-{name}"));
        let again = run_config(name, &scratch.join("rerun"), Some(&cache));
        let (a, b) = (artifacts(&first[name].dir), artifacts(&again.dir));
        files += a.len();
        if a.is_empty() || a != b || first[name].status != again.status {
            bad.push(name);
        }
    }
    outcome(bad.is_empty(), format!("{files} CSV/JSON files over {} configs byte-identical on rerun; differing: {bad:?}", CONFIGS.len()))
}

fn main() {
    semiclass::pin_sequential_backend();
    let scratch = tempfile::tempdir().expect("scratch directory");
    let mut lines: Vec<(u32, Outcome)> = Vec::new();
    let mut report = |k: u32, o: Outcome| {
        println!("{} criterion {k}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        lines.push((k, o));
    };

    report(1, criterion_1());
    report(2, criterion_2());
    report(4, criterion_4());

    let first: BTreeMap<&str, Run> = CONFIGS.iter().map(|&name| (name, run_config(name, &scratch.path().join("first"), None))).collect();
    let (osc, cplx) = (&first["oscillator_n2"], &first["complex_perturbed_n2"]);
    report(3, criterion_3(cplx));
    report(5, criterion_5(&first["garding_sin"]));
    report(6, criterion_6(cplx));
    report(7, criterion_7(osc, cplx));
    report(8, criterion_8(osc, cplx));
    report(9, criterion_9(osc, cplx));
    report(10, criterion_10(&first, scratch.path()));

    let gate = &first["inverted_n2"];
    let summary = json(&gate.dir, "summary.json");
    let gated = gate.status != 0 && summary["skipped"].as_array().is_some_and(|s| !s.is_empty()) && !gate.dir.join("scaling.json").exists();
    println!("{} inverted-potential config stops at the assumption gate (exit {})", if gated { "PASS" } else { "FAIL" }, gate.status);

    let failed: Vec<u32> = lines.iter().filter(|(_, o)| !o.pass).map(|(k, _)| *k).collect();
    if !failed.is_empty() || !gated {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
