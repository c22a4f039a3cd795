use std::f64::consts::PI;
use std::sync::Arc;

use semiclass::analysis::*;
use semiclass::families::{complex_perturbed, garding_symbol, oscillator};
use semiclass::hermite::{lp_norm_exact, OscillatorState};
use semiclass::quantize::{GridPolicy, Method, PhaseSpaceGrid, ScalingParams};
use semiclass::symbols::cutoff::{apriori_cutoff, localization_cutoff, smooth_step};
use semiclass::symbols::{PolySymbol, Symbol};
use semiclass::C64;

fn sampled_ground(grid: &PhaseSpaceGrid) -> Vec<C64> {
    OscillatorState::ground(grid.n, grid.h).sample(grid).into_iter().map(|v| C64::new(v, 0.0)).collect()
}

/// `∫ (1 - ψ(|X|/s)) W₀(X) dX` for the ground-state Wigner function
/// `W₀ = (πh)^{-n} e^{-|X|²/h}`, with `ψ` equal to 1 on `|X| <= 2` and 0 beyond 3.
fn gaussian_tail(n: usize, h: f64, s: f64) -> f64 {
    let sphere = if n == 1 { 2.0 * PI } else { 2.0 * PI * PI };
    let density = |r: f64| (PI * h).powi(-(n as i32)) * (-r * r / h).exp() * sphere * r.powi(2 * n as i32 - 1);
    let (a, b) = (2.0 * s, 3.0 * s);
    let m = 4000;
    let step = (b - a) / m as f64;
    let f = |r: f64| (1.0 - smooth_step(r / s, 2.0, 3.0)) * density(r);
    let mut acc = f(a) + f(b);
    for k in 1..m {
        acc += f(a + k as f64 * step) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    let t = b * b / h;
    let outside = if n == 1 { (-t).exp() } else { (1.0 + t) * (-t).exp() };
    acc * step / 3.0 + outside
}

#[test]
fn oscillator_sweep_matches_oracle_rows() {
    let fam = oscillator(1);
    let policy = GridPolicy::Adaptive { width: 9.0, points: 128 };
    let family = |h: f64| fam.operator(&policy.grid(1, h)?, Method::SchrodingerSpectral);
    let hs: Vec<f64> = (0..6).map(|k| 0.5 * 0.5f64.powi(k)).collect();
    let ps = [2.0, 4.0, 6.0, f64::INFINITY];
    let oracle = |h: f64, p: f64| lp_norm_exact(&[0], h, p, 1);
    let rep = scaling_sweep(&family, &hs, &ps, &SweepOptions::default(), Some(&oracle)).unwrap();
    assert!(rep.diagnostic);
    for r in &rep.rows {
        let o = r.oracle_norm.unwrap();
        assert!((r.norm / o - 1.0).abs() < 1e-6, "{r:?}");
    }
    for f in &rep.fits {
        assert!(f.deviation < 1e-6, "{f:?}");
        assert_eq!(f.excluded_h, vec![0.5]);
    }
    assert!(rep.monotone_in_p);
    let csv = rep.to_csv();
    assert_eq!(csv.lines().next().unwrap(), ScalingReport::CSV_HEADER);
    assert_eq!(csv.lines().count(), 1 + hs.len() * ps.len());
    let json = serde_json::to_string(&rep).unwrap();
    assert_eq!(serde_json::from_str::<ScalingReport>(&json).unwrap(), rep);
}

#[test]
fn oscillator_n2_infinity_exponent() {
    let fam = oscillator(2);
    let policy = GridPolicy::Adaptive { width: 7.0, points: 32 };
    let family = |h: f64| fam.operator(&policy.grid(2, h)?, Method::SchrodingerSpectral);
    let hs: Vec<f64> = (1..=5).map(|k| 0.5 * 0.5f64.powi(k)).collect();
    let rep = scaling_sweep(&family, &hs, &[2.0, f64::INFINITY], &SweepOptions { jobs: 2, ..Default::default() }, None).unwrap();
    assert!(!rep.diagnostic);
    assert!((rep.fit(f64::INFINITY).unwrap().fitted - 0.5).abs() <= 0.01);
    assert!(rep.fit(2.0).unwrap().fitted.abs() <= 0.01);
    assert!(rep.all_pass());
    assert_eq!(rep.fit(f64::INFINITY).unwrap().ktz_reference, Some(0.5));
}

#[test]
fn sweep_rejects_short_ranges() {
    let fam = oscillator(1);
    let family = |h: f64| fam.operator(&PhaseSpaceGrid::new(1, 8.0, 64, h)?, Method::SchrodingerSpectral);
    assert!(scaling_sweep(&family, &[0.5, 0.25, 0.125], &[2.0], &SweepOptions::default(), None).is_err());
}

#[test]
fn microlocal_mass_matches_gaussian_tail() {
    // The 2D grids have 32 points per axis, which limits agreement to about 3e-3.
    for (n, width, points, h, tol) in [(1, 12.0, 512, 0.05, 1e-5), (1, 12.0, 512, 0.025, 1e-5), (2, 7.0, 32, 0.05, 1e-2), (2, 7.0, 32, 0.025, 1e-2)] {
        let grid = GridPolicy::Adaptive { width, points }.grid(n, h).unwrap();
        let u = sampled_ground(&grid);
        let psi: Arc<dyn Symbol> = Arc::new(localization_cutoff(n));
        let s = h.powf(0.4);
        let mass = microlocal_mass(&u, psi, 0.4, h, &grid).unwrap();
        let oracle = gaussian_tail(n, h, s);
        assert!((mass / oracle - 1.0).abs() < tol, "n={n} h={h}: {mass} vs {oracle}");
    }
}

#[test]
fn microlocal_mass_decreases_with_delta() {
    let h = 0.05;
    let grid = GridPolicy::Adaptive { width: 7.0, points: 256 }.grid(1, h).unwrap();
    let u = sampled_ground(&grid);
    let psi: Arc<dyn Symbol> = Arc::new(localization_cutoff(1));
    let masses: Vec<f64> = [0.45, 0.4, 0.3, 0.2].iter().map(|&d| microlocal_mass(&u, psi.clone(), d, h, &grid).unwrap()).collect();
    assert!(masses.windows(2).all(|w| w[1] < w[0]), "{masses:?}");
}

#[test]
fn qn_values_for_the_oscillator() {
    // Op(q(X/√ε)) u₀ = (nh/ε) u₀ and Op(q²(X/√ε)) u₀ = ((n² + n)h²/ε²) u₀.
    let q = PolySymbol::oscillator(2);
    for h in [0.125, 0.03125] {
        let grid = GridPolicy::Adaptive { width: 7.0, points: 32 }.grid(2, h).unwrap();
        let u = sampled_ground(&grid);
        let params = ScalingParams::new(h, 0.5, 0.4).unwrap();
        let one = qn_boundedness_check(&u, &q, 1, &params, &grid).unwrap();
        let two = qn_boundedness_check(&u, &q, 2, &params, &grid).unwrap();
        assert!((one - 1.0).abs() < 1e-8, "{one}");
        assert!((two - 1.5).abs() < 1e-8, "{two}");
    }
}

#[test]
fn derivative_table_reduces_to_sup_norm() {
    let h = 0.05;
    let grid = GridPolicy::Adaptive { width: 7.0, points: 32 }.grid(2, h).unwrap();
    let t = derivative_bounds_check(&sampled_ground(&grid), &grid, h, 2).unwrap();
    assert_eq!(t.len(), 15);
    assert!((t[0].value - 1.0 / (PI * h).sqrt()).abs() < 1e-10);
    assert!(t.iter().all(|e| !e.noise_floor));
    let tables: Vec<(f64, Vec<DerivativeEntry>)> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| {
            let grid = GridPolicy::Adaptive { width: 7.0, points: 32 }.grid(2, h).unwrap();
            (h, derivative_bounds_check(&sampled_ground(&grid), &grid, h, 2).unwrap())
        })
        .collect();
    // Exact states scale exactly like h^{-n/4}, up to grid sampling of the sup.
    for r in derivative_sweep_ratios(&tables, 2).unwrap() {
        assert!((r.worst_ratio - 1.0).abs() < 1e-9, "{r:?}");
    }
}

#[test]
fn garding_constant_is_stable() {
    let rep = garding_sweep(&garding_symbol(), &GridPolicy::Fixed { half_width: 6.0, points: 256 }, &[0.2, 0.1, 0.05, 0.025], 0.2).unwrap();
    assert!(rep.nonnegative);
    assert!(rep.pass, "{rep:?}");
    for r in &rep.rows {
        assert!((r.symbol_min - 0.5).abs() < 1e-12);
        assert!(r.min_eig >= -r.lower_bound_constant * r.h);
    }
}

#[test]
fn apriori_for_the_oscillator_at_twice_h() {
    let chi: Arc<dyn Symbol> = Arc::new(apriori_cutoff(2));
    let fam = oscillator(2);
    let mut worst = 0.0f64;
    for h in [0.125, 0.0625, 0.03125] {
        let op = fam.operator(&GridPolicy::Adaptive { width: 7.0, points: 32 }.grid(2, h).unwrap(), Method::SchrodingerSpectral).unwrap();
        let r = apriori_check(&op, C64::new(2.0 * h, 0.0), chi.clone(), &ScalingParams::new(h, 0.5, 0.4).unwrap()).unwrap();
        assert!(!r.violation, "{r:?}");
        worst = worst.max(r.c_tilde.unwrap());
    }
    assert!(worst < 10.0);
}

#[test]
fn complex_family_ground_state_is_localized() {
    let h = 0.05;
    let fam = complex_perturbed(2);
    let op = fam.operator(&GridPolicy::Adaptive { width: 7.0, points: 32 }.grid(2, h).unwrap(), Method::SchrodingerSpectral).unwrap();
    let g = ground_state(&op, 3.0, h, &Default::default()).unwrap();
    let second: f64 = (0..op.dim()).map(|i| op.grid.point(i).iter().map(|x| x * x).sum::<f64>() * g.vec[i].norm_sqr()).sum::<f64>() * op.grid.weight();
    assert!(second < 2.0 * h, "<|x|^2> = {second}");
    assert!(g.lam.im.abs() <= 0.01 * h.sqrt());
}
