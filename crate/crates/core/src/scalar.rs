//! Arithmetic back ends for the transition-probability engines.
//!
//! Exact rationals are used for short horizons, native doubles or
//! arbitrary-precision binary floats beyond.

use std::fmt::Debug;
use std::str::FromStr;

use dashu_float::round::mode::HalfAway;
use dashu_float::FBig;
use dashu_int::IBig;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type Ratio = BigRational;

/// Number type the convolution engines run on.
pub trait Scalar: Clone + Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn from_ratio(r: &Ratio, bits: usize) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;

    /// Exact value when the representation is exact.
    fn to_ratio(&self) -> Option<Ratio> {
        None
    }

    fn add_assign(&mut self, other: &Self) {
        *self = self.add(other);
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_ratio(r: &Ratio, _bits: usize) -> Self {
        ratio_to_f64(r)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
}

impl Scalar for Ratio {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_ratio(r: &Ratio, _bits: usize) -> Self {
        r.clone()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn to_f64(&self) -> f64 {
        ratio_to_f64(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn to_ratio(&self) -> Option<Ratio> {
        Some(self.clone())
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
}

/// Binary float with a configurable mantissa length.
#[derive(Clone, Debug)]
pub struct HiPrec(pub FBig<HalfAway, 2>);

impl Scalar for HiPrec {
    fn zero() -> Self {
        HiPrec(FBig::ZERO)
    }
    fn from_ratio(r: &Ratio, bits: usize) -> Self {
        let num = bigint_to_ibig(r.numer());
        let den = bigint_to_ibig(r.denom());
        let n = FBig::<HalfAway, 2>::from(num).with_precision(bits).value();
        let d = FBig::<HalfAway, 2>::from(den).with_precision(bits).value();
        HiPrec(n / d)
    }
    fn add(&self, other: &Self) -> Self {
        HiPrec(&self.0 + &other.0)
    }
    fn mul(&self, other: &Self) -> Self {
        HiPrec(&self.0 * &other.0)
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }
    fn is_zero(&self) -> bool {
        self.0 == FBig::<HalfAway, 2>::ZERO
    }
}

fn bigint_to_ibig(b: &BigInt) -> IBig {
    IBig::from_str(&b.to_string()).expect("decimal integer")
}

/// Which number type an engine should run on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    Exact,
    /// Mantissa bits; 64 selects native doubles.
    Float { bits: usize },
}

impl Arithmetic {
    pub const NATIVE: Arithmetic = Arithmetic::Float { bits: 64 };

    /// Exact for short horizons, native floats beyond.
    pub fn auto(n: usize) -> Self {
        if n <= 64 {
            Arithmetic::Exact
        } else {
            Arithmetic::NATIVE
        }
    }

    pub fn from_bits(bits: usize) -> Self {
        Arithmetic::Float { bits }
    }
}

/// Lossy conversion that survives numerators and denominators beyond f64 range.
pub fn ratio_to_f64(r: &Ratio) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift_n = (nb - 60).max(0);
    let shift_d = (db - 60).max(0);
    let n = (r.numer().abs() >> shift_n as usize).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d as usize).to_f64().unwrap_or(1.0);
    let v = n / d * 2f64.powi((shift_n - shift_d) as i32);
    if r.is_negative() {
        -v
    } else {
        v
    }
}

/// Parses `p/q`, an integer, or a decimal literal into an exact rational.
pub fn parse_ratio(s: &str) -> Option<Ratio> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).ok()?;
        let d = BigInt::from_str(d.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Ratio::new(n, d));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{}{}", int_part, frac_part);
    let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let d = num_traits::pow(BigInt::from(10), frac_part.len());
    Some(Ratio::new(n * sign, d))
}

pub fn ratio(n: i64, d: i64) -> Ratio {
    Ratio::new(BigInt::from(n), BigInt::from(d))
}

pub fn ratio_one() -> Ratio {
    Ratio::one()
}
