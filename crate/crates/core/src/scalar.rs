//! Scalar abstraction for Boltzmann weights and partition-function values.
//!
//! Everything that sums weights or solves linear systems is written against
//! [`Scalar`]. The exact instance is `BigRational`; floating-point instances
//! exist for quick approximate evaluation and are never used where the
//! reductions need bit-exact answers.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A field-like number type usable as a Boltzmann weight.
pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed {
    /// Whether arithmetic on this type is exact.
    const EXACT: bool;

    fn from_bigint(value: &BigInt) -> Self;

    fn from_rational(value: &BigRational) -> Self;

    fn to_f64(&self) -> f64;

    /// The integer this value represents, if it represents one.
    ///
    /// Exact types require an integral value; floating types round when the
    /// value is within a relative `1e-6` of an integer.
    fn to_integer(&self) -> Option<BigInt>;

    /// Scales a row so every entry becomes integral, when the type can.
    ///
    /// Used before fraction-free elimination so intermediate values stay in
    /// the integers.
    fn clear_denominators(_row: &mut [Self]) {}

    /// Canonical text rendering (`num/den` for rationals).
    fn render(&self) -> String;

    /// Exact integer power; zero to a negative power is an error.
    fn int_pow(&self, exp: i64) -> Result<Self> {
        if exp < 0 && self.is_zero() {
            return Err(Error::ZeroToNegativePower);
        }
        let base = if exp < 0 {
            Self::one() / self.clone()
        } else {
            self.clone()
        };
        Ok(pow_by_squaring(base, exp.unsigned_abs()))
    }
}

fn pow_by_squaring<T: Clone + One>(mut base: T, mut exp: u64) -> T {
    let mut acc = T::one();
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base.clone();
        }
        exp >>= 1;
        if exp > 0 {
            base = base.clone() * base;
        }
    }
    acc
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_bigint(value: &BigInt) -> Self {
        BigRational::from_integer(value.clone())
    }

    fn from_rational(value: &BigRational) -> Self {
        value.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_integer(&self) -> Option<BigInt> {
        self.is_integer().then(|| self.numer().clone())
    }

    fn clear_denominators(row: &mut [Self]) {
        let lcm = row
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        if lcm.is_one() {
            return;
        }
        let factor = BigRational::from_integer(lcm);
        for x in row.iter_mut() {
            *x = &*x * &factor;
        }
    }

    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}

macro_rules! impl_float_scalar {
    ($f:ty) => {
        impl Scalar for $f {
            const EXACT: bool = false;

            fn from_bigint(value: &BigInt) -> Self {
                value.to_f64().unwrap_or(<$f>::INFINITY as f64) as $f
            }

            fn from_rational(value: &BigRational) -> Self {
                ToPrimitive::to_f64(value).unwrap_or(f64::NAN) as $f
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn to_integer(&self) -> Option<BigInt> {
                let rounded = self.round();
                let tol = 1e-6 * (self.abs() as f64).max(1.0);
                if ((*self - rounded).abs() as f64) <= tol {
                    BigInt::from_f64(rounded as f64)
                } else {
                    None
                }
            }

            fn render(&self) -> String {
                format!("{}", self)
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

/// Renders a rational with `digits` digits after the decimal point
/// (truncated toward zero). Display only.
pub fn to_decimal(value: &BigRational, digits: usize) -> String {
    let negative = value.is_negative();
    let num = value.numer().abs();
    let den = value.denom().clone();
    let (int_part, mut rem) = num.div_rem(&den);
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    out.push_str(&int_part.to_string());
    if digits > 0 {
        out.push('.');
        let ten = BigInt::from(10u8);
        for _ in 0..digits {
            rem *= &ten;
            let (d, r) = rem.div_rem(&den);
            out.push_str(&d.to_string());
            rem = r;
        }
    }
    out
}

/// Parses `num/den`, a plain integer, or a finite decimal like `-0.25`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = || Error::InvalidArgument(format!("not a rational number: {text:?}"));
    if let Some((n, d)) = text.split_once('/') {
        let n = BigInt::from_str_radix(n.trim(), 10).map_err(|_| bad())?;
        let d = BigInt::from_str_radix(d.trim(), 10).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let mut n = BigInt::from_str_radix(&digits, 10).map_err(|_| bad())?;
        if negative {
            n = -n;
        }
        let d = num_traits::pow(BigInt::from(10u8), frac.len());
        return Ok(BigRational::new(n, d));
    }
    let n = BigInt::from_str_radix(text, 10).map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}
