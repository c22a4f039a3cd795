//! Smooth phase-space cutoffs with values in `[0, 1]`.

use crate::symbols::CallableSymbol;
use crate::C64;

fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// `C^∞` step: 1 for `r <= inner`, 0 for `r >= outer`.
pub fn smooth_step(r: f64, inner: f64, outer: f64) -> f64 {
    if r <= inner {
        return 1.0;
    }
    if r >= outer {
        return 0.0;
    }
    let a = psi(outer - r);
    let b = psi(r - inner);
    a / (a + b)
}

/// Radial cutoff `chi(X)` on `R^{2n}`: 1 on `|X| <= inner`, supported in `|X| <= outer`.
pub fn radial_cutoff(dim: usize, inner: f64, outer: f64) -> CallableSymbol {
    assert!(0.0 <= inner && inner < outer, "cutoff radii must satisfy 0 <= inner < outer");
    let desc = format!("radial_cutoff(inner={inner}, outer={outer})");
    CallableSymbol::new(dim, desc, move |p: &[f64], _h| {
        let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        C64::new(smooth_step(r, inner, outer), 0.0)
    })
}

/// The cutoff used for the a priori estimate: 1 on `|X| <= 1`, supported in `|X| <= 2`.
pub fn apriori_cutoff(dim: usize) -> CallableSymbol {
    radial_cutoff(dim, 1.0, 2.0)
}

/// The cutoff used for microlocalization: 1 on `|X| <= 2`, supported in `|X| <= 3`.
pub fn localization_cutoff(dim: usize) -> CallableSymbol {
    radial_cutoff(dim, 2.0, 3.0)
}

/// The degenerate cutoff identically equal to 1.
pub fn unit(dim: usize) -> CallableSymbol {
    CallableSymbol::new(dim, "1", |_, _| C64::new(1.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::Symbol;

    #[test]
    fn step_is_monotone_and_bounded() {
        let mut prev = 1.0;
        for k in 0..=400 {
            let r = 0.5 + k as f64 * 0.01;
            let v = smooth_step(r, 1.0, 3.0);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        assert_eq!(smooth_step(2.0, 1.0, 3.0), 0.5);
    }

    #[test]
    fn radial_cutoff_support() {
        let chi = apriori_cutoff(2);
        assert_eq!(chi.eval(&[0.5, 0.5, 0.0, 0.0], 0.0).re, 1.0);
        assert_eq!(chi.eval(&[1.5, 1.5, 0.0, 0.0], 0.0).re, 0.0);
    }
}
