//! Arbitrary-precision real and complex scalars.
//!
//! Every value carries its own binary precision. Binary operations round to
//! the larger of the two operand precisions, so there is no ambient
//! precision context anywhere in the crate.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};

/// Smallest precision accepted by the public constructors.
pub const MIN_PREC: u32 = 16;

/// Real scalar with an explicit binary precision.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct BigReal(Float);

impl BigReal {
    pub fn zero(prec: u32) -> Self {
        BigReal(Float::new(prec.max(MIN_PREC)))
    }

    pub fn one(prec: u32) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        BigReal(Float::with_val(prec.max(MIN_PREC), v))
    }

    pub fn from_u64(v: u64, prec: u32) -> Self {
        BigReal(Float::with_val(prec.max(MIN_PREC), v))
    }

    /// Exact conversion of a double (every finite double is representable
    /// at 53 bits and above).
    pub fn from_f64(v: f64, prec: u32) -> Self {
        BigReal(Float::with_val(prec.max(MIN_PREC), v))
    }

    /// Ratio of two integers rounded once at `prec`.
    pub fn from_ratio(num: i64, den: i64, prec: u32) -> Self {
        let mut f = Float::with_val(prec.max(MIN_PREC), num);
        f /= den;
        BigReal(f)
    }

    pub fn pi(prec: u32) -> Self {
        BigReal(Float::with_val(prec.max(MIN_PREC), Constant::Pi))
    }

    /// Parses a decimal (or scientific) literal at the given precision.
    pub fn parse(s: &str, prec: u32) -> Result<Self> {
        let trimmed = s.trim();
        let parsed = Float::parse(trimmed)
            .map_err(|e| Error::Parse(format!("bad number {trimmed:?}: {e}")))?;
        Ok(BigReal(Float::with_val(prec.max(MIN_PREC), parsed)))
    }

    pub fn factorial(n: u32, prec: u32) -> Self {
        BigReal(Float::with_val(prec.max(MIN_PREC), Float::factorial(n)))
    }

    pub fn prec(&self) -> u32 {
        self.0.prec()
    }

    /// Rounds (or extends) to a new precision.
    pub fn with_prec(&self, prec: u32) -> Self {
        BigReal(Float::with_val(prec.max(MIN_PREC), &self.0))
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    pub fn from_float(f: Float) -> Self {
        BigReal(f)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative() && !self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_sign_positive() && !self.0.is_zero() && !self.0.is_nan()
    }

    /// Base-2 exponent `e` with `2^(e-1) <= |x| < 2^e`; `None` for zero.
    pub fn exponent(&self) -> Option<i32> {
        self.0.get_exp()
    }

    pub fn abs(&self) -> Self {
        BigReal(self.0.clone().abs())
    }

    pub fn sqrt(&self) -> Self {
        BigReal(self.0.clone().sqrt())
    }

    pub fn ln(&self) -> Self {
        BigReal(self.0.clone().ln())
    }

    pub fn exp(&self) -> Self {
        BigReal(self.0.clone().exp())
    }

    pub fn cos(&self) -> Self {
        BigReal(self.0.clone().cos())
    }

    pub fn sin(&self) -> Self {
        BigReal(self.0.clone().sin())
    }

    pub fn recip(&self) -> Self {
        BigReal(self.0.clone().recip())
    }

    pub fn square(&self) -> Self {
        BigReal(self.0.clone().square())
    }

    pub fn powi(&self, n: u32) -> Self {
        BigReal(Float::with_val(self.prec(), (&self.0).pow(n)))
    }

    pub fn log10(&self) -> Self {
        BigReal(self.0.clone().log10())
    }

    pub fn mul_f64(&self, k: f64) -> Self {
        BigReal(Float::with_val(self.prec(), &self.0 * k))
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        BigReal(Float::with_val(self.prec(), &self.0 * k))
    }

    pub fn div_i64(&self, k: i64) -> Self {
        BigReal(Float::with_val(self.prec(), &self.0 / k))
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }

    /// Decimal rendering with `digits` significant digits in scientific form.
    pub fn to_decimal(&self, digits: usize) -> String {
        if self.0.is_zero() {
            return "0".to_string();
        }
        self.0.to_string_radix(10, Some(digits.max(1)))
    }

    /// Decimal rendering at the default `prec_bits / 4` significant digits.
    pub fn to_decimal_default(&self) -> String {
        self.to_decimal((self.prec() / 4) as usize)
    }

    /// `|self - other| <= tol * max(|self|, |other|)`.
    pub fn rel_close(&self, other: &BigReal, tol: f64) -> bool {
        let diff = (self - other).abs();
        let scale = self.abs().max(other.abs());
        if scale.is_zero() {
            return true;
        }
        diff <= scale.mul_f64(tol)
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(20))
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(d) => write!(f, "{}", self.to_decimal(d)),
            None => write!(f, "{}", self.to_decimal_default()),
        }
    }
}

macro_rules! real_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&BigReal> for &BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &BigReal) -> BigReal {
                let prec = self.prec().max(rhs.prec());
                BigReal(Float::with_val(prec, &self.0 $op &rhs.0))
            }
        }
        impl $trait<BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &BigReal) -> BigReal {
                (&self).$method(rhs)
            }
        }
    };
}

real_binop!(Add, add, +);
real_binop!(Sub, sub, -);
real_binop!(Mul, mul, *);
real_binop!(Div, div, /);

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal(-self.0)
    }
}

impl Neg for &BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal(-self.0.clone())
    }
}

/// Complex scalar stored as a pair of `BigReal`s sharing one precision.
#[derive(Clone, PartialEq)]
pub struct BigComplex {
    pub re: BigReal,
    pub im: BigReal,
}

impl BigComplex {
    pub fn new(re: BigReal, im: BigReal) -> Self {
        let prec = re.prec().max(im.prec());
        BigComplex {
            re: re.with_prec(prec),
            im: im.with_prec(prec),
        }
    }

    pub fn zero(prec: u32) -> Self {
        BigComplex {
            re: BigReal::zero(prec),
            im: BigReal::zero(prec),
        }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_real(BigReal::one(prec))
    }

    pub fn i(prec: u32) -> Self {
        BigComplex {
            re: BigReal::zero(prec),
            im: BigReal::one(prec),
        }
    }

    pub fn from_real(re: BigReal) -> Self {
        let prec = re.prec();
        BigComplex {
            re,
            im: BigReal::zero(prec),
        }
    }

    pub fn from_f64(re: f64, im: f64, prec: u32) -> Self {
        BigComplex {
            re: BigReal::from_f64(re, prec),
            im: BigReal::from_f64(im, prec),
        }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        BigComplex {
            re: self.re.with_prec(prec),
            im: self.im.with_prec(prec),
        }
    }

    pub fn conj(&self) -> Self {
        BigComplex {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn norm_sqr(&self) -> BigReal {
        &self.re.square() + &self.im.square()
    }

    pub fn abs(&self) -> BigReal {
        BigReal(Float::with_val(self.prec(), self.re.0.hypot_ref(&self.im.0)))
    }

    pub fn scale(&self, k: &BigReal) -> Self {
        BigComplex {
            re: &self.re * k,
            im: &self.im * k,
        }
    }

    pub fn scale_i64(&self, k: i64) -> Self {
        BigComplex {
            re: self.re.mul_i64(k),
            im: self.im.mul_i64(k),
        }
    }

    /// Multiplication by `i`.
    pub fn mul_i(&self) -> Self {
        BigComplex {
            re: -&self.im,
            im: self.re.clone(),
        }
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = BigComplex::one(self.prec());
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl fmt::Debug for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.re, self.im)
    }
}

impl Add<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn add(self, rhs: &BigComplex) -> BigComplex {
        BigComplex {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn sub(self, rhs: &BigComplex) -> BigComplex {
        BigComplex {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl Mul<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn mul(self, rhs: &BigComplex) -> BigComplex {
        BigComplex {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

impl Neg for &BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        BigComplex {
            re: -&self.re,
            im: -&self.im,
        }
    }
}

/// Default working precision for spectra whose deepest requested index is
/// `n_deepest`.
pub fn default_precision(n_deepest: usize) -> u32 {
    (12 * n_deepest as u32).max(256)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_precision_uses_max() {
        let a = BigReal::from_f64(1.5, 64);
        let b = BigReal::from_f64(2.0, 300);
        assert_eq!((&a + &b).prec(), 300);
        assert_eq!((&b * &a).prec(), 300);
    }

    #[test]
    fn decimal_round_trip_at_quarter_precision() {
        let prec = 512;
        let x = BigReal::from_ratio(1, 7, prec).sqrt();
        let digits = (prec / 4) as usize;
        let s = x.to_decimal(digits);
        let y = BigReal::parse(&s, prec).unwrap();
        assert!(x.rel_close(&y, 10f64.powi(-(digits as i32) + 1)));
        assert_eq!(y.to_decimal(digits), s);
    }

    #[test]
    fn complex_arithmetic() {
        let z = BigComplex::from_f64(1.0, 2.0, 128);
        let w = BigComplex::from_f64(-3.0, 0.5, 128);
        let p = &z * &w;
        assert_eq!(p.to_f64_pair(), (-4.0, -5.5));
        assert_eq!(z.powi(3).to_f64_pair(), (-11.0, -2.0));
        assert_eq!(z.conj().to_f64_pair(), (1.0, -2.0));
        assert_eq!(z.mul_i().to_f64_pair(), (-2.0, 1.0));
        assert_eq!(z.norm_sqr().to_f64(), 5.0);
    }

    #[test]
    fn default_precision_rule() {
        assert_eq!(default_precision(10), 256);
        assert_eq!(default_precision(80), 960);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(BigReal::parse("1.2.3", 64).is_err());
    }
}
