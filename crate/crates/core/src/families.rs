//! Built-in operator families.
//!
//! A Schrödinger family `|ξ|² + V(x) + iW(x)` keeps its potentials so it can
//! use the fast paths; an expression family only has a full symbol and is
//! quantized by the midpoint rule.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::quantize::{quantize_schrodinger, quantize_schrodinger_fd2, weyl_quantize, Method, OperatorMatrix, PhaseSpaceGrid};
use crate::symbols::{bump, parse_symbol, quadratic_part, AnySymbol, CallableSymbol, PolySymbol, Symbol};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyId {
    /// `|ξ|² + |x|²`.
    Oscillator,
    /// `|ξ|² + |x|² + 0.3 x₁³ bump(x₁) + 0.2i x₁² tanh(x₁)`.
    ComplexPerturbed,
    /// `|ξ|² - |x|²`; fails the assumption gate.
    Inverted,
}

impl FamilyId {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyId::Oscillator => "oscillator",
            FamilyId::ComplexPerturbed => "complex-perturbed",
            FamilyId::Inverted => "inverted",
        }
    }
}

#[derive(Clone)]
pub struct Family {
    pub name: String,
    pub n: usize,
    pub symbol: Arc<dyn Symbol>,
    /// `(V, W)` when the symbol is `|ξ|² + V + iW`.
    pub potentials: Option<(CallableSymbol, CallableSymbol)>,
}

impl std::fmt::Debug for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Family").field("name", &self.name).field("n", &self.n).field("symbol", &self.symbol.describe()).finish()
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn schrodinger(name: &str, n: usize, v: CallableSymbol, w: CallableSymbol) -> Family {
    let (vs, ws) = (v.clone(), w.clone());
    let desc = format!("|xi|^2 + {} + i({})", v.describe(), w.describe());
    let symbol = CallableSymbol::new(n, desc, move |p: &[f64], h| {
        C64::new(norm2(&p[n..]), 0.0) + vs.eval(p, h) + C64::new(0.0, ws.eval(p, h).re)
    });
    Family { name: name.into(), n, symbol: Arc::new(symbol), potentials: Some((v, w)) }
}

pub fn oscillator(n: usize) -> Family {
    let v = CallableSymbol::potential(n, "|x|^2", norm2);
    schrodinger(FamilyId::Oscillator.as_str(), n, v, CallableSymbol::zero(n))
}

pub fn complex_perturbed(n: usize) -> Family {
    let v = CallableSymbol::potential(n, "|x|^2 + 0.3*x1^3*bump(x1)", |x| norm2(x) + 0.3 * x[0].powi(3) * bump(x[0]));
    let w = CallableSymbol::potential(n, "0.2*x1^2*tanh(x1)", |x| 0.2 * x[0] * x[0] * x[0].tanh());
    schrodinger(FamilyId::ComplexPerturbed.as_str(), n, v, w)
}

pub fn inverted(n: usize) -> Family {
    let v = CallableSymbol::potential(n, "-|x|^2", |x| -norm2(x));
    schrodinger(FamilyId::Inverted.as_str(), n, v, CallableSymbol::zero(n))
}

pub fn builtin(id: FamilyId, n: usize) -> Family {
    match id {
        FamilyId::Oscillator => oscillator(n),
        FamilyId::ComplexPerturbed => complex_perturbed(n),
        FamilyId::Inverted => inverted(n),
    }
}

/// A family given by a symbol expression in `x1.., xi1..`.
pub fn from_expression(src: &str, n: usize) -> Result<Family> {
    let symbol = parse_symbol(src, n)?;
    Ok(Family { name: src.to_string(), n, symbol: symbol.shared(), potentials: None })
}

/// `|X|² + 0.5 sin(x) sin(ξ) + 0.5` on `R²`, nonnegative with minimum 0.5 at the origin.
pub fn garding_symbol() -> CallableSymbol {
    CallableSymbol::new(1, "x1^2 + xi1^2 + 0.5*sin(x1)*sin(xi1) + 0.5", |p: &[f64], _h| {
        C64::new(p[0] * p[0] + p[1] * p[1] + 0.5 * p[0].sin() * p[1].sin() + 0.5, 0.0)
    })
}

impl Family {
    /// The quadratic approximation at the origin.
    pub fn quadratic(&self) -> Result<PolySymbol> {
        quadratic_part(&self.symbol)
    }

    pub fn any_symbol(&self) -> AnySymbol {
        match self.symbol.as_poly() {
            Some(p) => AnySymbol::Poly(p.clone()),
            None => {
                let s = self.symbol.clone();
                AnySymbol::Callable(CallableSymbol::new(self.n, s.describe(), move |p: &[f64], h| s.eval(p, h)))
            }
        }
    }

    pub fn operator(&self, grid: &PhaseSpaceGrid, method: Method) -> Result<OperatorMatrix> {
        if grid.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: grid.n });
        }
        match (method, &self.potentials) {
            (Method::MidpointFft, _) => weyl_quantize(&self.symbol, grid),
            (Method::SchrodingerSpectral, Some((v, w))) => quantize_schrodinger(v, w, grid),
            (Method::SchrodingerFd2, Some((v, w))) => quantize_schrodinger_fd2(v, w, grid),
            (m, None) => Err(Error::InvalidParameter(format!(
                "method {} needs a Schrödinger family, '{}' is a general symbol",
                m.as_str(),
                self.name
            ))),
        }
    }
}
