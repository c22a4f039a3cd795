use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::symbols::coeff::Coeff;
use crate::symbols::Symbol;
use crate::{Error, Result, C64};

/// Exponent vector over `(x_1..x_n, xi_1..xi_n)` plus the power of the formal parameter `h`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    exps: Vec<u32>,
    h: u32,
}

impl Monomial {
    pub fn new(exps: Vec<u32>, h: u32) -> Self {
        Self { exps, h }
    }

    pub fn constant(dim: usize) -> Self {
        Self::new(vec![0; 2 * dim], 0)
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn h_power(&self) -> u32 {
        self.h
    }

    /// Total degree in the phase-space variables (`h` excluded).
    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect(),
            h: self.h + other.h,
        }
    }
}

/// Exact multivariate polynomial in the phase-space variables with complex
/// rational coefficients; `h` may appear as a formal variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolySymbol {
    dim: usize,
    terms: BTreeMap<Monomial, Coeff>,
}

impl PolySymbol {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: Coeff) -> Self {
        Self::from_terms(dim, [(Monomial::constant(dim), c)])
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, Coeff::one())
    }

    /// The coordinate `x_j` (0-based `j`).
    pub fn x(dim: usize, j: usize) -> Self {
        Self::variable(dim, j)
    }

    /// The dual coordinate `xi_j` (0-based `j`).
    pub fn xi(dim: usize, j: usize) -> Self {
        Self::variable(dim, dim + j)
    }

    /// Phase-space variable `X_v`, `v < 2·dim`.
    pub fn variable(dim: usize, v: usize) -> Self {
        assert!(v < 2 * dim, "variable index {v} out of range for dim {dim}");
        let mut exps = vec![0; 2 * dim];
        exps[v] = 1;
        Self::from_terms(dim, [(Monomial::new(exps, 0), Coeff::one())])
    }

    /// The formal semiclassical parameter.
    pub fn h(dim: usize) -> Self {
        Self::from_terms(dim, [(Monomial::new(vec![0; 2 * dim], 1), Coeff::one())])
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Monomial, Coeff)>) -> Self {
        let mut out = Self::zero(dim);
        for (m, c) in terms {
            assert_eq!(m.exps.len(), 2 * dim, "monomial length must be 2·dim");
            out.add_term(m, &c);
        }
        out
    }

    /// `|xi|^2 + |x|^2`.
    pub fn oscillator(dim: usize) -> Self {
        let mut out = Self::zero(dim);
        for v in 0..2 * dim {
            let xv = Self::variable(dim, v);
            out = &out + &(&xv * &xv);
        }
        out
    }

    fn add_term(&mut self, m: Monomial, c: &Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> Coeff {
        self.terms.get(m).cloned().unwrap_or_else(Coeff::zero)
    }

    /// Total degree in `(x, xi)`; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn h_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.h).max().unwrap_or(0)
    }

    pub fn is_h_free(&self) -> bool {
        self.terms.keys().all(|m| m.h == 0)
    }

    pub fn scale(&self, c: &Coeff) -> Self {
        Self::from_terms(self.dim, self.terms.iter().map(|(m, v)| (m.clone(), v * c)))
    }

    pub fn conj(&self) -> Self {
        Self::from_terms(self.dim, self.terms.iter().map(|(m, v)| (m.clone(), v.conj())))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.dim);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Partial derivative with respect to phase-space variable `v`.
    pub fn derivative(&self, v: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (m, c) in &self.terms {
            let e = m.exps[v];
            if e == 0 {
                continue;
            }
            let mut exps = m.exps.clone();
            exps[v] -= 1;
            out.add_term(Monomial::new(exps, m.h), &c.scale_int(e as i64));
        }
        out
    }

    pub fn d_x(&self, j: usize) -> Self {
        self.derivative(j)
    }

    pub fn d_xi(&self, j: usize) -> Self {
        self.derivative(self.dim + j)
    }

    /// `∂_x^beta ∂_xi^alpha`, multi-indices of length `dim`.
    pub fn derivative_multi(&self, x_orders: &[u32], xi_orders: &[u32]) -> Self {
        let mut out = Self::zero(self.dim);
        'terms: for (m, c) in &self.terms {
            let mut exps = m.exps.clone();
            let mut factor: i64 = 1;
            let orders = x_orders.iter().chain(xi_orders.iter());
            for (slot, &k) in exps.iter_mut().zip(orders) {
                if *slot < k {
                    continue 'terms;
                }
                for t in 0..k {
                    factor *= (*slot - t) as i64;
                }
                *slot -= k;
            }
            out.add_term(Monomial::new(exps, m.h), &c.scale_int(factor));
        }
        out
    }

    /// Replaces the formal `h` by an exact value.
    pub fn substitute_h(&self, h: &Coeff) -> Self {
        let mut out = Self::zero(self.dim);
        for (m, c) in &self.terms {
            let mono = Monomial::new(m.exps.clone(), 0);
            out.add_term(mono, &(c * &h.pow(m.h)));
        }
        out
    }

    /// `a(c·X)` computed exactly: each coefficient picks up `c^degree`.
    pub fn scale_arguments(&self, c: &Coeff) -> Self {
        Self::from_terms(
            self.dim,
            self.terms.iter().map(|(m, v)| (m.clone(), v * &c.pow(m.degree()))),
        )
    }

    /// Terms of exactly the given total degree.
    pub fn homogeneous_part(&self, degree: u32) -> Self {
        Self::from_terms(
            self.dim,
            self.terms
                .iter()
                .filter(|(m, _)| m.degree() == degree)
                .map(|(m, c)| (m.clone(), c.clone())),
        )
    }

    /// Exact Hessian at `X = 0` (only quadratic, `h`-free terms contribute).
    pub fn hessian_at_zero(&self) -> Vec<Vec<Coeff>> {
        let d = 2 * self.dim;
        let mut hess = vec![vec![Coeff::zero(); d]; d];
        for (m, c) in &self.terms {
            if m.h != 0 || m.degree() != 2 {
                continue;
            }
            let vars: Vec<usize> = (0..d).filter(|&v| m.exps[v] > 0).collect();
            match vars.as_slice() {
                [v] => hess[*v][*v] = c.scale_int(2),
                [a, b] => {
                    hess[*a][*b] = c.clone();
                    hess[*b][*a] = c.clone();
                }
                _ => unreachable!("degree-two monomial"),
            }
        }
        hess
    }

    /// Evaluation at a phase-space point with numeric `h`.
    pub fn eval_at(&self, point: &[f64], h: f64) -> C64 {
        debug_assert_eq!(point.len(), 2 * self.dim);
        let mut acc = C64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut v = h.powi(m.h as i32);
            for (x, &e) in point.iter().zip(&m.exps) {
                if e > 0 {
                    v *= x.powi(e as i32);
                }
            }
            acc += c.to_c64() * v;
        }
        acc
    }

    fn check_dim(&self, other: &Self) {
        assert_eq!(self.dim, other.dim, "polynomial dimensions differ");
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(self - other)
    }

    /// Canonical text: terms by descending phase-space degree, then ascending `h` power.
    pub fn to_canonical_string(&self) -> String {
        self.to_string()
    }

    fn variable_name(&self, v: usize) -> String {
        if v < self.dim {
            format!("x{}", v + 1)
        } else {
            format!("xi{}", v - self.dim + 1)
        }
    }

    fn display_order(a: &Monomial, b: &Monomial) -> Ordering {
        b.degree()
            .cmp(&a.degree())
            .then(a.h.cmp(&b.h))
            .then_with(|| b.exps.cmp(&a.exps))
    }

    fn format_monomial(&self, m: &Monomial) -> String {
        let mut parts = Vec::new();
        for (v, &e) in m.exps.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(self.variable_name(v)),
                _ => parts.push(format!("{}^{}", self.variable_name(v), e)),
            }
        }
        match m.h {
            0 => {}
            1 => parts.push("h".to_string()),
            e => parts.push(format!("h^{e}")),
        }
        parts.join("*")
    }
}

impl fmt::Display for PolySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ordered: Vec<_> = self.terms.iter().collect();
        ordered.sort_by(|a, b| Self::display_order(a.0, b.0));
        for (k, (m, c)) in ordered.into_iter().enumerate() {
            let mono = self.format_monomial(m);
            // Pull a leading minus out of real or imaginary coefficients so sums read "a - b".
            let zero = num_rational::BigRational::from_integer(0.into());
            let negative = c.re() < &zero || (c.re() == &zero && c.im() < &zero);
            let shown = if negative { -c } else { c.clone() };
            let body = if mono.is_empty() {
                shown.to_string()
            } else if shown.is_one() {
                mono
            } else if shown.is_minus_one() {
                format!("-{mono}")
            } else {
                let (factor, parenthesized) = shown.fmt_factor();
                if parenthesized {
                    format!("{factor}{mono}")
                } else {
                    format!("{factor}*{mono}")
                }
            };
            match (k, negative) {
                (0, true) => write!(f, "-{body}")?,
                (0, false) => write!(f, "{body}")?,
                (_, true) => write!(f, " - {body}")?,
                (_, false) => write!(f, " + {body}")?,
            }
        }
        Ok(())
    }
}

impl<'a> std::ops::Add<&'a PolySymbol> for &'a PolySymbol {
    type Output = PolySymbol;
    fn add(self, rhs: &'a PolySymbol) -> PolySymbol {
        self.check_dim(rhs);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c);
        }
        out
    }
}

impl<'a> std::ops::Sub<&'a PolySymbol> for &'a PolySymbol {
    type Output = PolySymbol;
    fn sub(self, rhs: &'a PolySymbol) -> PolySymbol {
        self.check_dim(rhs);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), &-c);
        }
        out
    }
}

impl<'a> std::ops::Mul<&'a PolySymbol> for &'a PolySymbol {
    type Output = PolySymbol;
    fn mul(self, rhs: &'a PolySymbol) -> PolySymbol {
        self.check_dim(rhs);
        let mut out = PolySymbol::zero(self.dim);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), &(ca * cb));
            }
        }
        out
    }
}

impl std::ops::Neg for &PolySymbol {
    type Output = PolySymbol;
    fn neg(self) -> PolySymbol {
        self.scale(&Coeff::from_int(-1))
    }
}

impl Symbol for PolySymbol {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, point: &[f64], h: f64) -> C64 {
        self.eval_at(point, h)
    }

    fn describe(&self) -> String {
        self.to_string()
    }

    fn as_poly(&self) -> Option<&PolySymbol> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(j: usize) -> PolySymbol {
        PolySymbol::x(1, j)
    }
    fn xi(j: usize) -> PolySymbol {
        PolySymbol::xi(1, j)
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let p = &x(0) - &x(0);
        assert!(p.is_zero());
        assert_eq!(p.num_terms(), 0);
        assert_eq!(p.to_string(), "0");
    }

    #[test]
    fn canonical_text() {
        let p = &(&x(0) * &xi(0)) + &PolySymbol::h(1).scale(&(&Coeff::i() * &Coeff::ratio(1, 2)));
        assert_eq!(p.to_string(), "x1*xi1 + (i/2)h");
        let q = &(&x(0) * &x(0)).scale(&Coeff::from_int(3)) - &xi(0);
        assert_eq!(q.to_string(), "3*x1^2 - xi1");
    }

    #[test]
    fn derivatives_and_hessian() {
        let p = &(&x(0).pow(3) * &xi(0)) + &(&x(0) * &xi(0));
        assert_eq!(p.d_x(0), &(&x(0).pow(2) * &xi(0)).scale(&Coeff::from_int(3)) + &xi(0));
        assert_eq!(p.derivative_multi(&[2], &[1]), x(0).scale(&Coeff::from_int(6)));
        let hess = p.hessian_at_zero();
        assert_eq!(hess[0][1], Coeff::one());
        assert_eq!(hess[0][0], Coeff::zero());
    }

    #[test]
    fn substitute_and_rescale() {
        let p = &(&x(0) * &x(0)) + &PolySymbol::h(1);
        let s = p.substitute_h(&Coeff::ratio(1, 10));
        assert!(s.is_h_free());
        assert!((s.eval_at(&[2.0, 0.0], 0.0).re - 4.1).abs() < 1e-15);
        let r = p.scale_arguments(&Coeff::from_int(3));
        assert!((r.eval_at(&[1.0, 0.0], 0.5).re - 9.5).abs() < 1e-15);
    }
}
