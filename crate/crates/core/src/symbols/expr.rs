//! Expression grammar for symbol literals.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary | <juxtaposed> power)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' integer)?
//! primary := number | 'i' | 'h' | 'pi' | x<k> | xi<k> | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | exp | tanh | bump
//! ```
//!
//! Juxtaposition multiplies, so `0.2i`, `2x1` and `(i/2)h` are accepted.
//! `bump(t) = exp(1 - 1/(1 - t^2))` on `|t| < 1` and 0 elsewhere.

use std::sync::Arc;

use crate::symbols::{AnySymbol, CallableSymbol, Coeff, PolySymbol};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    Bump,
}

impl Func {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "tanh" => Func::Tanh,
            "bump" => Func::Bump,
            _ => return None,
        })
    }

    fn apply(self, z: C64) -> C64 {
        match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Exp => z.exp(),
            Func::Tanh => z.tanh(),
            Func::Bump => C64::new(bump(z.re), 0.0),
        }
    }
}

/// Smooth compactly supported bump, equal to 1 at 0 and supported in `[-1, 1]`.
pub fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Coeff),
    /// Phase-space variable index into `(x_1..x_n, xi_1..xi_n)`.
    Var(usize),
    H,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Exact polynomial form; `None` if the expression uses functions or
    /// divides by a non-constant.
    pub fn to_poly(&self, dim: usize) -> Option<PolySymbol> {
        Some(match self {
            Expr::Const(c) => PolySymbol::constant(dim, c.clone()),
            Expr::Var(v) => PolySymbol::variable(dim, *v),
            Expr::H => PolySymbol::h(dim),
            Expr::Add(a, b) => &a.to_poly(dim)? + &b.to_poly(dim)?,
            Expr::Sub(a, b) => &a.to_poly(dim)? - &b.to_poly(dim)?,
            Expr::Mul(a, b) => &a.to_poly(dim)? * &b.to_poly(dim)?,
            Expr::Div(a, b) => {
                let den = b.to_poly(dim)?;
                if den.degree() != 0 || !den.is_h_free() {
                    return None;
                }
                let c = den.coeff(&crate::symbols::Monomial::constant(dim)).recip()?;
                a.to_poly(dim)?.scale(&c)
            }
            Expr::Neg(a) => -&a.to_poly(dim)?,
            Expr::Pow(a, e) => a.to_poly(dim)?.pow(*e),
            Expr::Call(..) => return None,
        })
    }

    pub fn eval(&self, point: &[f64], h: f64) -> C64 {
        match self {
            Expr::Const(c) => c.to_c64(),
            Expr::Var(v) => C64::new(point[*v], 0.0),
            Expr::H => C64::new(h, 0.0),
            Expr::Add(a, b) => a.eval(point, h) + b.eval(point, h),
            Expr::Sub(a, b) => a.eval(point, h) - b.eval(point, h),
            Expr::Mul(a, b) => a.eval(point, h) * b.eval(point, h),
            Expr::Div(a, b) => a.eval(point, h) / b.eval(point, h),
            Expr::Neg(a) => -a.eval(point, h),
            Expr::Pow(a, e) => a.eval(point, h).powu(*e),
            Expr::Call(f, a) => f.apply(a.eval(point, h)),
        }
    }

    /// Largest phase-space variable index used, for dimension checks.
    fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(v) => Some(*v),
            Expr::Const(_) | Expr::H => None,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.max_var(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Coeff),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn decimal_to_coeff(text: &str, pos: usize) -> Result<Coeff> {
    let err = || Error::Parse { pos, msg: format!("bad number literal {text:?}") };
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(k) => (&text[..k], text[k + 1..].parse::<i32>().map_err(|_| err())?),
        None => (text, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() {
        return Err(err());
    }
    let num: num_bigint::BigInt = digits.parse().map_err(|_| err())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = num_bigint::BigInt::from(10);
    let value = if scale >= 0 {
        num_rational::BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        num_rational::BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(Coeff::new(value, num_rational::BigRational::from_integer(0.into())))
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k] as char;
        let start = k;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                k += 1;
                continue;
            }
            '+' => out.push((start, Tok::Plus)),
            '-' => out.push((start, Tok::Minus)),
            '*' => out.push((start, Tok::Star)),
            '/' => out.push((start, Tok::Slash)),
            '^' => out.push((start, Tok::Caret)),
            '(' => out.push((start, Tok::LParen)),
            ')' => out.push((start, Tok::RParen)),
            '0'..='9' | '.' => {
                while k < bytes.len() && (bytes[k].is_ascii_digit() || bytes[k] == b'.') {
                    k += 1;
                }
                // Scientific exponent, but not the imaginary unit or an identifier.
                if k + 1 < bytes.len()
                    && (bytes[k] == b'e' || bytes[k] == b'E')
                    && (bytes[k + 1].is_ascii_digit()
                        || ((bytes[k + 1] == b'-' || bytes[k + 1] == b'+')
                            && k + 2 < bytes.len()
                            && bytes[k + 2].is_ascii_digit()))
                {
                    k += 2;
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                }
                out.push((start, Tok::Num(decimal_to_coeff(&src[start..k], start)?)));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while k < bytes.len() && (bytes[k].is_ascii_alphanumeric() || bytes[k] == b'_') {
                    k += 1;
                }
                out.push((start, Tok::Ident(src[start..k].to_string())));
                continue;
            }
            other => {
                return Err(Error::Parse { pos: start, msg: format!("unexpected character {other:?}") })
            }
        }
        k += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    at: usize,
    dim: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos(), msg: msg.into() })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.at += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.at += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.at += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.at += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Num(_)) | Some(Tok::Ident(_)) | Some(Tok::LParen) => {
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.power()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.at += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Plus) => {
                self.at += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.at += 1;
            let e = match self.peek() {
                Some(Tok::Num(c)) if c.is_real() && c.re().is_integer() => {
                    let e: u32 = c.re().to_integer().try_into().or_else(|_| self.fail("exponent too large"))?;
                    e
                }
                _ => return self.fail("exponent must be a non-negative integer literal"),
            };
            self.at += 1;
            return Ok(Expr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return self.fail("unexpected end of input");
        };
        self.at += 1;
        match tok {
            Tok::Num(c) => Ok(Expr::Const(c)),
            Tok::LParen => {
                let e = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.fail("expected ')'");
                }
                self.at += 1;
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(&name),
            _ => {
                self.at -= 1;
                self.fail("expected a number, variable or '('")
            }
        }
    }

    fn identifier(&mut self, name: &str) -> Result<Expr> {
        match name {
            "i" => return Ok(Expr::Const(Coeff::i())),
            "h" => return Ok(Expr::H),
            "pi" => return Ok(Expr::Const(Coeff::from_f64(std::f64::consts::PI).expect("finite"))),
            _ => {}
        }
        if let Some(f) = Func::from_name(name) {
            if self.peek() != Some(&Tok::LParen) {
                return self.fail(format!("expected '(' after {name}"));
            }
            self.at += 1;
            let arg = self.expr()?;
            if self.peek() != Some(&Tok::RParen) {
                return self.fail("expected ')'");
            }
            self.at += 1;
            return Ok(Expr::Call(f, Box::new(arg)));
        }
        let (offset, digits) = if let Some(d) = name.strip_prefix("xi") {
            (self.dim, d)
        } else if let Some(d) = name.strip_prefix('x') {
            (0, d)
        } else {
            self.at -= 1;
            return self.fail(format!("unknown identifier {name:?}"));
        };
        match digits.parse::<usize>() {
            Ok(k) if k >= 1 && k <= self.dim => Ok(Expr::Var(offset + k - 1)),
            _ => {
                self.at -= 1;
                self.fail(format!("variable {name} outside dimension {}", self.dim))
            }
        }
    }
}

/// Parses an expression over `x1..xn, xi1..xin`.
pub fn parse_expression(src: &str, dim: usize) -> Result<Expr> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let toks = tokenize(src)?;
    let mut p = Parser { toks: &toks, at: 0, dim, end: src.len() };
    let e = p.expr()?;
    if p.at != toks.len() {
        return p.fail("trailing input");
    }
    debug_assert!(e.max_var().is_none_or(|v| v < 2 * dim));
    Ok(e)
}

/// Parses a symbol literal: polynomial expressions become [`PolySymbol`],
/// anything using functions becomes a [`CallableSymbol`].
pub fn parse_symbol(src: &str, dim: usize) -> Result<AnySymbol> {
    let e = parse_expression(src, dim)?;
    if let Some(p) = e.to_poly(dim) {
        return Ok(AnySymbol::Poly(p));
    }
    let e = Arc::new(e);
    let desc = src.trim().to_string();
    Ok(AnySymbol::Callable(CallableSymbol::new(dim, desc, move |x: &[f64], h| e.eval(x, h))))
}
