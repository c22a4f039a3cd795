use semiclass::eigensolve::*;
use semiclass::hermite::oscillator_eigenvalue;
use semiclass::quantize::*;
use semiclass::symbols::{cutoff, parse_symbol, CallableSymbol, PolySymbol, Symbol};
use semiclass::C64;

fn oscillator(n: usize, h: f64, half_width: f64, points: usize) -> OperatorMatrix {
    let g = PhaseSpaceGrid::new(n, half_width, points, h).unwrap();
    let v = CallableSymbol::potential(n, "|x|^2", |x: &[f64]| x.iter().map(|t| t * t).sum());
    quantize_schrodinger(&v, &CallableSymbol::zero(n), &g).unwrap()
}

fn perturbed_1d(h: f64, points: usize) -> OperatorMatrix {
    let g = PhaseSpaceGrid::new(1, 10.0, points, h).unwrap();
    let v = CallableSymbol::potential(1, "x^2", |x: &[f64]| x[0] * x[0]);
    let w = CallableSymbol::potential(1, "0.2 x^2 tanh x", |x: &[f64]| 0.2 * x[0] * x[0] * x[0].tanh());
    quantize_schrodinger(&v, &w, &g).unwrap()
}

#[test]
fn identity_matrix() {
    let g = PhaseSpaceGrid::new(1, 2.0, 16, 0.1).unwrap();
    let id = weyl_quantize(&cutoff::unit(1), &g).unwrap();
    let pairs = eigs_near(&id, C64::new(0.0, 0.0), 3).unwrap();
    assert_eq!(pairs.len(), 3);
    for p in &pairs {
        assert!((p.lam - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(p.multiplicity_hint, 16);
    }
}

#[test]
fn one_dimensional_oscillator() {
    let a = oscillator(1, 0.05, 10.0, 512);
    let pairs = eigs_near(&a, C64::new(0.0, 0.0), 3).unwrap();
    for (k, p) in pairs.iter().enumerate() {
        let want = oscillator_eigenvalue(&[k as u32], 0.05, 1);
        assert!((p.lam.re - want).abs() / want < 1e-6);
        assert!(p.lam.im.abs() <= 1e-10);
        assert!(p.residual <= 1e-8);
        let norm = weighted_norm(&p.vec, a.grid.weight());
        assert!((norm - 1.0).abs() < 1e-12);
        let big = p.vec.iter().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap();
        assert!(big.im == 0.0 && big.re > 0.0);
    }
}

#[test]
fn complex_perturbation_dense_and_iterative_agree() {
    let a = perturbed_1d(0.05, 512);
    let dense = eigs_near_with(&a, C64::new(0.0, 0.0), 3, &EigenOptions { solver: Solver::Dense, ..Default::default() }).unwrap();
    let iter = eigs_near_with(&a, C64::new(0.0, 0.0), 3, &EigenOptions { solver: Solver::ShiftInvert, ..Default::default() }).unwrap();
    assert!((dense[0].lam.re - 0.05).abs() < 0.005);
    assert!(dense[0].lam.im.abs() <= 0.01);
    for (d, s) in dense.iter().zip(&iter) {
        assert!((d.lam - s.lam).norm() < 1e-8, "{} vs {}", d.lam, s.lam);
        assert!(s.residual <= 1e-6);
    }
}

#[test]
fn fd2_sparse_path_uses_sparse_lu() {
    let g = PhaseSpaceGrid::new(1, 10.0, 1024, 0.05).unwrap();
    let v = CallableSymbol::potential(1, "x^2", |x: &[f64]| x[0] * x[0]);
    let a = quantize_schrodinger_fd2(&v, &CallableSymbol::zero(1), &g).unwrap();
    let iter = eigs_near_with(&a, C64::new(0.0, 0.0), 2, &EigenOptions { solver: Solver::ShiftInvert, ..Default::default() }).unwrap();
    let dense = eigs_near_with(&a, C64::new(0.0, 0.0), 2, &EigenOptions { solver: Solver::Dense, ..Default::default() }).unwrap();
    for (d, s) in dense.iter().zip(&iter) {
        assert!((d.lam - s.lam).norm() < 1e-8);
    }
    // Second-order truncation error at Δx ≈ 0.02.
    assert!((iter[0].lam.re - 0.05).abs() / 0.05 < 1e-3);
}

#[test]
fn shift_invariance() {
    let a = perturbed_1d(0.1, 128);
    let c = C64::new(0.7, -0.2);
    let base = eigs_near(&a, C64::new(0.0, 0.0), 3).unwrap();
    let moved = eigs_near(&a.shifted(c), c, 3).unwrap();
    for (p, q) in base.iter().zip(&moved) {
        assert!((p.lam + c - q.lam).norm() < 1e-10);
        // Same vector up to the phase convention, which can flip between
        // near-equal largest components.
        let overlap: C64 = p.vec.iter().zip(&q.vec).map(|(x, y)| x.conj() * y).sum::<C64>() * a.grid.weight();
        assert!((overlap.norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn oscillator_ground_cluster_in_two_dimensions() {
    let a = oscillator(2, 0.05, 7.0 * 0.05f64.sqrt(), 32);
    let cluster = ground_cluster(&a, 5.0, 0.05).unwrap();
    let lams: Vec<f64> = cluster.iter().map(|p| p.lam.re).collect();
    assert_eq!(lams.len(), 3);
    for (got, want) in lams.iter().zip([0.1, 0.2, 0.2]) {
        assert!((got - want).abs() < 1e-8);
    }
    assert_eq!(cluster[1].multiplicity_hint, 2);
    assert!(ground_cluster(&a, 1.0, 0.05).unwrap().is_empty());
}

#[test]
fn sparse_two_dimensional_oscillator() {
    // 64² = 4096 unknowns: above the dense limit, so shift-invert with GMRES.
    let a = oscillator(2, 0.05, 3.0, 64);
    let pairs = eigs_near(&a, C64::new(0.0, 0.0), 6).unwrap();
    let want = [0.1, 0.2, 0.2, 0.3, 0.3, 0.3];
    for (p, w) in pairs.iter().zip(want) {
        assert!((p.lam.re - w).abs() / w < 1e-6, "{}", p.lam);
        assert!(p.residual <= 1e-6);
    }
}

#[test]
fn complex_perturbed_two_dimensional_ground_state() {
    let g = PhaseSpaceGrid::new(2, 7.0 * 0.05f64.sqrt(), 32, 0.05).unwrap();
    let v = CallableSymbol::potential(2, "V", |x: &[f64]| {
        x[0] * x[0] + x[1] * x[1] + 0.3 * x[0].powi(3) * semiclass::symbols::bump(x[0])
    });
    let w = CallableSymbol::potential(2, "W", |x: &[f64]| 0.2 * x[0] * x[0] * x[0].tanh());
    let a = quantize_schrodinger(&v, &w, &g).unwrap();
    let cluster = ground_cluster(&a, 3.0, 0.05).unwrap();
    assert_eq!(cluster.len(), 1);
    let u = &cluster[0].vec;
    let second: f64 = (0..g.len()).map(|i| g.point(i).iter().map(|x| x * x).sum::<f64>() * u[i].norm_sqr()).sum::<f64>() * g.weight();
    // For the oscillator ground state <|x|²> = n h / 2.
    assert!(second / 0.05 > 0.5 && second / 0.05 < 2.0, "{second}");
}

#[test]
fn quadratic_models() {
    let q1 = PolySymbol::oscillator(1);
    let s = quadratic_model_spectrum(&q1, 7.0).unwrap();
    assert_eq!(s.len(), 3);
    for (c, want) in s.iter().zip([1.0, 3.0, 5.0]) {
        assert!((c.mu - C64::new(want, 0.0)).norm() < 1e-6);
        assert_eq!(c.multiplicity, 1);
    }
    let s2 = quadratic_model_spectrum(&PolySymbol::oscillator(2), 5.0).unwrap();
    assert_eq!(s2.len(), 2);
    assert!((s2[0].mu.re - 2.0).abs() < 1e-6 && s2[0].multiplicity == 1);
    assert!((s2[1].mu.re - 4.0).abs() < 1e-6 && s2[1].multiplicity == 2);
    let qc = parse_symbol("xi1^2 + x1^2 + 0.1i*x1^2", 1).unwrap().as_poly().unwrap().clone();
    let s3 = quadratic_model_spectrum(&qc, 2.0).unwrap();
    let want = C64::new(1.0, 0.1).sqrt();
    assert!((s3[0].mu - want).norm() < 1e-6, "{}", s3[0].mu);
    let bad = parse_symbol("xi1^2 - x1^2", 1).unwrap().as_poly().unwrap().clone();
    assert!(quadratic_model_spectrum(&bad, 2.0).is_err());
}

#[test]
fn leading_order_for_exact_oscillator() {
    let family = |h: f64| -> semiclass::Result<OperatorMatrix> { Ok(oscillator(1, h, 10.0, 512)) };
    let rows = leading_order_check(&family, &PolySymbol::oscillator(1), &[0.1, 0.05], 4.0).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(r.deviation < 1e-6);
        assert!(!r.ambiguous);
    }
}

#[test]
fn rejects_oversized_requests() {
    let a = oscillator(1, 0.1, 5.0, 64);
    assert!(eigs_near(&a, C64::new(0.0, 0.0), 41).is_err());
    assert!(eigs_near(&a, C64::new(0.0, 0.0), 0).is_err());
}
