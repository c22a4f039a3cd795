//! Exact Weyl composition of polynomial symbols.
//!
//! With `sigma(D_x, D_xi; D_y, D_eta) = D_xi·D_y - D_x·D_eta` and `D = -i∂`,
//!
//! ```text
//! a # b = Σ_k (1/k!) (ih/2)^k sigma^k (a(x, xi) b(y, eta))|_{y = x, eta = xi}
//! sigma^k(a, b) = Σ_{|alpha|+|beta| = k} (-1)^{|alpha|} k!/(alpha! beta!)
//!                   (∂_xi^alpha ∂_x^beta a)(∂_x^alpha ∂_xi^beta b)
//! ```
//!
//! For polynomials the series terminates at `k = min(deg a, deg b)`. `h` is
//! kept as a formal variable so identities hold exactly.
//!
//! Bracket convention: `{a, b} = Σ_j ∂_{xi_j}a ∂_{x_j}b - ∂_{x_j}a ∂_{xi_j}b`,
//! so `{xi, x} = 1`, `sigma^1(a, b) = -{a, b}` and
//! `a # b - b # a = -ih {a, b}` up to odd terms of order `k >= 3`.

use crate::symbols::{Coeff, PolySymbol};

/// The terms `(k, (1/k!)(ih/2)^k sigma^k(a, b))` of a star product.
#[derive(Clone, Debug, PartialEq)]
pub struct StarExpansion {
    pub terms: Vec<(usize, PolySymbol)>,
    /// Always true here: coefficients are polynomials in a formal `h`.
    pub h_symbolic: bool,
}

impl StarExpansion {
    pub fn new(a: &PolySymbol, b: &PolySymbol) -> Self {
        let top = a.degree().min(b.degree()) as usize;
        let mut terms = Vec::with_capacity(top + 1);
        terms.push((0, a * b));
        let mut prefactor = PolySymbol::one(a.dim());
        let half_ih = PolySymbol::h(a.dim()).scale(&(&Coeff::i() * &Coeff::ratio(1, 2)));
        for k in 1..=top {
            prefactor = (&prefactor * &half_ih).scale(&Coeff::ratio(1, k as i64));
            terms.push((k, &prefactor * &sigma_power_term(a, b, k)));
        }
        Self { terms, h_symbolic: true }
    }

    pub fn sum(&self) -> PolySymbol {
        let dim = self.terms[0].1.dim();
        self.terms.iter().fold(PolySymbol::zero(dim), |acc, (_, t)| &acc + t)
    }

    /// Sum of the orders `<= n`; the orders dropped with non-zero terms are listed.
    pub fn truncated(&self, n: usize) -> (PolySymbol, Vec<usize>) {
        let dim = self.terms[0].1.dim();
        let mut kept = PolySymbol::zero(dim);
        let mut dropped = Vec::new();
        for (k, t) in &self.terms {
            if *k <= n {
                kept = &kept + t;
            } else if !t.is_zero() {
                dropped.push(*k);
            }
        }
        (kept, dropped)
    }
}

fn factorial(k: u32) -> i64 {
    (1..=k as i64).product()
}

/// All multi-indices in `N^len` with entries summing to `total`.
fn compositions(total: u32, len: usize) -> Vec<Vec<u32>> {
    if len == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, len - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `sigma^k(a, b)` evaluated on the diagonal, exactly. `k >= 1`.
pub fn sigma_power_term(a: &PolySymbol, b: &PolySymbol, k: usize) -> PolySymbol {
    assert!(k >= 1, "sigma power must be at least 1");
    assert_eq!(a.dim(), b.dim(), "symbol dimensions differ");
    let n = a.dim();
    let k = k as u32;
    let mut out = PolySymbol::zero(n);
    for alpha_total in 0..=k {
        let beta_total = k - alpha_total;
        for alpha in compositions(alpha_total, n) {
            for beta in compositions(beta_total, n) {
                let da = a.derivative_multi(&beta, &alpha);
                if da.is_zero() {
                    continue;
                }
                let db = b.derivative_multi(&alpha, &beta);
                if db.is_zero() {
                    continue;
                }
                let denom: i64 = alpha.iter().chain(&beta).map(|&e| factorial(e)).product();
                let mut c = factorial(k) / denom;
                if alpha_total % 2 == 1 {
                    c = -c;
                }
                out = &out + &(&da * &db).scale(&Coeff::from_int(c));
            }
        }
    }
    out
}

/// `a # b` with formal `h`.
pub fn star_product(a: &PolySymbol, b: &PolySymbol) -> PolySymbol {
    StarExpansion::new(a, b).sum()
}

/// `a # b` with `h` replaced by a number (exactly, via its rational value).
pub fn star_product_at(a: &PolySymbol, b: &PolySymbol, h: f64) -> PolySymbol {
    let h = Coeff::from_f64(h).expect("h must be finite");
    star_product(a, b).substitute_h(&h)
}

/// `a # b - b # a` with formal `h`.
pub fn star_commutator(a: &PolySymbol, b: &PolySymbol) -> PolySymbol {
    &star_product(a, b) - &star_product(b, a)
}

/// `{a, b} = Σ_j ∂_{xi_j}a ∂_{x_j}b - ∂_{x_j}a ∂_{xi_j}b`.
pub fn poisson_bracket(a: &PolySymbol, b: &PolySymbol) -> PolySymbol {
    assert_eq!(a.dim(), b.dim(), "symbol dimensions differ");
    let mut out = PolySymbol::zero(a.dim());
    for j in 0..a.dim() {
        out = &out + &(&a.d_xi(j) * &b.d_x(j));
        out = &out - &(&a.d_x(j) * &b.d_xi(j));
    }
    out
}
