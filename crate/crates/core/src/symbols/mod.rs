//! Phase-space symbols: exact polynomials, callable symbols, the expression
//! grammar, the quadratic approximation at the double characteristic and the
//! standing-assumption checker.
//!
//! Phase-space points are ordered `X = (x_1, .., x_n, xi_1, .., xi_n)`.

mod assumptions;
mod coeff;
pub mod cutoff;
mod expr;
mod poly;

use std::fmt;
use std::sync::Arc;

pub use assumptions::{check_assumptions, check_assumptions_with, AssumptionConfig, AssumptionReport};
pub use coeff::Coeff;
pub use expr::{bump, parse_expression, parse_symbol, Expr};
pub use poly::{Monomial, PolySymbol};

use crate::{Error, Result, C64};

/// Absolute tolerance on `|p(0)|` and `|∇p(0)|` for the double-characteristic test.
pub const DOUBLE_CHARACTERISTIC_TOL: f64 = 1e-8;

/// Central finite-difference step for callable Hessians.
pub const FD_STEP: f64 = 1e-4;

/// A complex-valued function on phase space `R^{2n}`.
///
/// `h` is passed through so symbols defined at an `h`-dependent scale can be
/// evaluated; most symbols ignore it.
pub trait Symbol: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, point: &[f64], h: f64) -> C64;
    fn describe(&self) -> String;
    fn as_poly(&self) -> Option<&PolySymbol> {
        None
    }
}

type Evaluator = dyn Fn(&[f64], f64) -> C64 + Send + Sync;

/// Non-polynomial symbol backed by a pure evaluator.
#[derive(Clone)]
pub struct CallableSymbol {
    dim: usize,
    evaluator: Arc<Evaluator>,
    description: String,
}

impl CallableSymbol {
    pub fn new(
        dim: usize,
        description: impl Into<String>,
        evaluator: impl Fn(&[f64], f64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        Self { dim, evaluator: Arc::new(evaluator), description: description.into() }
    }

    /// Symbol depending on `x` only, given as a real function.
    pub fn potential(
        dim: usize,
        description: impl Into<String>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(dim, description, move |p: &[f64], _h| C64::new(f(&p[..dim]), 0.0))
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, "0", |_, _| C64::new(0.0, 0.0))
    }
}

impl fmt::Debug for CallableSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallableSymbol")
            .field("dim", &self.dim)
            .field("description", &self.description)
            .finish()
    }
}

impl Symbol for CallableSymbol {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, point: &[f64], h: f64) -> C64 {
        (self.evaluator)(point, h)
    }

    fn describe(&self) -> String {
        self.description.clone()
    }
}

/// Either flavour of symbol.
#[derive(Clone, Debug)]
pub enum AnySymbol {
    Poly(PolySymbol),
    Callable(CallableSymbol),
}

impl AnySymbol {
    pub fn shared(self) -> Arc<dyn Symbol> {
        match self {
            AnySymbol::Poly(p) => Arc::new(p),
            AnySymbol::Callable(c) => Arc::new(c),
        }
    }

    pub fn as_symbol(&self) -> &dyn Symbol {
        match self {
            AnySymbol::Poly(p) => p,
            AnySymbol::Callable(c) => c,
        }
    }
}

impl Symbol for AnySymbol {
    fn dim(&self) -> usize {
        self.as_symbol().dim()
    }
    fn eval(&self, point: &[f64], h: f64) -> C64 {
        self.as_symbol().eval(point, h)
    }
    fn describe(&self) -> String {
        self.as_symbol().describe()
    }
    fn as_poly(&self) -> Option<&PolySymbol> {
        self.as_symbol().as_poly()
    }
}

impl Symbol for Arc<dyn Symbol> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, point: &[f64], h: f64) -> C64 {
        (**self).eval(point, h)
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
    fn as_poly(&self) -> Option<&PolySymbol> {
        (**self).as_poly()
    }
}

/// `a(c·X)` for any symbol.
pub fn rescaled(a: Arc<dyn Symbol>, c: f64) -> CallableSymbol {
    let dim = a.dim();
    let desc = format!("({})(X*{c})", a.describe());
    CallableSymbol::new(dim, desc, move |p: &[f64], h| {
        let q: Vec<f64> = p.iter().map(|v| v * c).collect();
        a.eval(&q, h)
    })
}

/// Central finite-difference gradient, Richardson-extrapolated from steps
/// [`FD_STEP`] and `FD_STEP/2` so the truncation error is `O(step^4)`.
pub fn fd_gradient(a: &dyn Symbol, at: &[f64], h: f64) -> Vec<C64> {
    let d = at.len();
    let mut p = at.to_vec();
    let mut central = |v: usize, s: f64| {
        p[v] = at[v] + s;
        let up = a.eval(&p, h);
        p[v] = at[v] - s;
        let dn = a.eval(&p, h);
        p[v] = at[v];
        (up - dn) / (2.0 * s)
    };
    (0..d)
        .map(|v| {
            let coarse = central(v, FD_STEP);
            let fine = central(v, 0.5 * FD_STEP);
            (4.0 * fine - coarse) / 3.0
        })
        .collect()
}

/// Central finite-difference Hessian (step [`FD_STEP`]); truncation error `O(step^2)`.
pub fn fd_hessian(a: &dyn Symbol, at: &[f64], h: f64) -> Vec<Vec<C64>> {
    let d = at.len();
    let s = FD_STEP;
    let mut hess = vec![vec![C64::new(0.0, 0.0); d]; d];
    let mut p = at.to_vec();
    let f0 = a.eval(at, h);
    for i in 0..d {
        p[i] = at[i] + s;
        let up = a.eval(&p, h);
        p[i] = at[i] - s;
        let dn = a.eval(&p, h);
        p[i] = at[i];
        hess[i][i] = (up - 2.0 * f0 + dn) / (s * s);
        for j in 0..i {
            let mut eval_at = |di: f64, dj: f64| {
                p[i] = at[i] + di;
                p[j] = at[j] + dj;
                let v = a.eval(&p, h);
                p[i] = at[i];
                p[j] = at[j];
                v
            };
            let v = (eval_at(s, s) - eval_at(s, -s) - eval_at(-s, s) + eval_at(-s, -s)) / (4.0 * s * s);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    hess
}

fn quadratic_from_hessian(dim: usize, hess: &[Vec<Coeff>]) -> PolySymbol {
    let d = 2 * dim;
    let half = Coeff::ratio(1, 2);
    let mut terms = Vec::new();
    for i in 0..d {
        for j in i..d {
            let mut exps = vec![0; d];
            exps[i] += 1;
            exps[j] += 1;
            let c = if i == j { &hess[i][i] * &half } else { hess[i][j].clone() };
            terms.push((Monomial::new(exps, 0), c));
        }
    }
    PolySymbol::from_terms(dim, terms)
}

/// The quadratic approximation `q(X) = ½ p''(0) X·X` at the double characteristic.
///
/// Polynomial input uses the exact Hessian; callable input a central finite
/// difference with step [`FD_STEP`]. Fails unless `|p(0)|` and `|∇p(0)|` are
/// within [`DOUBLE_CHARACTERISTIC_TOL`].
pub fn quadratic_part(p: &dyn Symbol) -> Result<PolySymbol> {
    let dim = p.dim();
    let origin = vec![0.0; 2 * dim];
    if let Some(poly) = p.as_poly() {
        let value = poly.homogeneous_part(0).eval_at(&origin, 0.0).norm();
        let lin = poly.homogeneous_part(1);
        let gradient = lin
            .terms()
            .map(|(_, c)| c.to_c64().norm_sqr())
            .sum::<f64>()
            .sqrt();
        if !poly.is_h_free() || value > DOUBLE_CHARACTERISTIC_TOL || gradient > DOUBLE_CHARACTERISTIC_TOL {
            return Err(Error::NotDoublyCharacteristic { value, gradient });
        }
        return Ok(poly.homogeneous_part(2));
    }
    let value = p.eval(&origin, 0.0).norm();
    let gradient = fd_gradient(p, &origin, 0.0)
        .iter()
        .map(|g| g.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if value > DOUBLE_CHARACTERISTIC_TOL || gradient > DOUBLE_CHARACTERISTIC_TOL {
        return Err(Error::NotDoublyCharacteristic { value, gradient });
    }
    let hess = fd_hessian(p, &origin, 0.0);
    let exact: Vec<Vec<Coeff>> = hess
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| Coeff::from_c64(*v).ok_or(Error::NonFiniteSymbol { point: origin.clone() }))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(quadratic_from_hessian(dim, &exact))
}

/// `r = p - q`: exact for polynomials, pointwise otherwise.
pub fn remainder_part(p: &AnySymbol, q: &PolySymbol) -> Result<AnySymbol> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    Ok(match p {
        AnySymbol::Poly(poly) => AnySymbol::Poly(poly - q),
        AnySymbol::Callable(c) => {
            let c = c.clone();
            let q = q.clone();
            let desc = format!("({}) - ({})", c.describe(), q);
            AnySymbol::Callable(CallableSymbol::new(c.dim(), desc, move |x: &[f64], h| {
                c.eval(x, h) - q.eval_at(x, h)
            }))
        }
    })
}
