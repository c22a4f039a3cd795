use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::C64;

/// Exact complex rational `re + i·im`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Coeff {
    re: BigRational,
    im: BigRational,
}

impl Coeff {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn i() -> Self {
        Self::new(BigRational::zero(), BigRational::one())
    }

    pub fn from_int(v: i64) -> Self {
        Self::new(BigRational::from_integer(BigInt::from(v)), BigRational::zero())
    }

    pub fn gaussian(re: i64, im: i64) -> Self {
        Self::new(
            BigRational::from_integer(BigInt::from(re)),
            BigRational::from_integer(BigInt::from(im)),
        )
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::new(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            BigRational::zero(),
        )
    }

    /// Exact rational image of a finite float (every finite `f64` is a dyadic rational).
    pub fn from_f64(v: f64) -> Option<Self> {
        Some(Self::new(BigRational::from_float(v)?, BigRational::zero()))
    }

    pub fn from_c64(v: C64) -> Option<Self> {
        Some(Self::new(
            BigRational::from_float(v.re)?,
            BigRational::from_float(v.im)?,
        ))
    }

    pub fn re(&self) -> &BigRational {
        &self.re
    }

    pub fn im(&self) -> &BigRational {
        &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    pub fn to_c64(&self) -> C64 {
        C64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let norm = &self.re * &self.re + &self.im * &self.im;
        Some(Self::new(&self.re / &norm, -(&self.im / &norm)))
    }

    pub fn scale_int(&self, k: i64) -> Self {
        let k = BigRational::from_integer(BigInt::from(k));
        Self::new(&self.re * &k, &self.im * &k)
    }

    /// True when the coefficient prints as a bare token (integer, `i`, `3i`).
    fn is_simple(&self) -> bool {
        (self.im.is_zero() && self.re.is_integer()) || (self.re.is_zero() && self.im.is_integer())
    }

    pub(crate) fn is_one(&self) -> bool {
        self.im.is_zero() && self.re.is_one()
    }

    pub(crate) fn is_minus_one(&self) -> bool {
        self.im.is_zero() && (-self.re.clone()).is_one()
    }

    /// Formats as a coefficient prefix; parenthesized unless it is a bare token.
    pub(crate) fn fmt_factor(&self) -> (String, bool) {
        let s = self.to_string();
        if self.is_simple() {
            (s, false)
        } else {
            (format!("({s})"), true)
        }
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else if r.denom() < &BigInt::from(1_000_000_000i64) {
        format!("{}/{}", r.numer(), r.denom())
    } else {
        format!("{}", r.to_f64().unwrap_or(f64::NAN))
    }
}

fn fmt_imag(r: &BigRational) -> String {
    if r.is_one() {
        "i".to_string()
    } else if (-r.clone()).is_one() {
        "-i".to_string()
    } else if r.is_integer() {
        format!("{}i", r.numer())
    } else if r.denom() < &BigInt::from(1_000_000_000i64) {
        let num = r.numer();
        if num == &BigInt::from(1) {
            format!("i/{}", r.denom())
        } else if num == &BigInt::from(-1) {
            format!("-i/{}", r.denom())
        } else {
            format!("{}i/{}", num, r.denom())
        }
    } else {
        format!("{}i", r.to_f64().unwrap_or(f64::NAN))
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", fmt_rational(&self.re)),
            (true, false) => write!(f, "{}", fmt_imag(&self.im)),
            (false, false) => {
                let im = fmt_imag(&self.im.abs());
                let sign = if self.im.is_negative() { '-' } else { '+' };
                write!(f, "{}{}{}", fmt_rational(&self.re), sign, im)
            }
        }
    }
}

impl<'a> Add<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn add(self, rhs: &'a Coeff) -> Coeff {
        Coeff::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl AddAssign<&Coeff> for Coeff {
    fn add_assign(&mut self, rhs: &Coeff) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl<'a> Sub<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn sub(self, rhs: &'a Coeff) -> Coeff {
        Coeff::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl<'a> Mul<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn mul(self, rhs: &'a Coeff) -> Coeff {
        Coeff::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Neg for &Coeff {
    type Output = Coeff;
    fn neg(self) -> Coeff {
        Coeff::new(-self.re.clone(), -self.im.clone())
    }
}

impl Neg for Coeff {
    type Output = Coeff;
    fn neg(self) -> Coeff {
        Coeff::new(-self.re, -self.im)
    }
}
