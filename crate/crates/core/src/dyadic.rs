//! Exact dyadic rationals `m / 2^k`.
//!
//! Every shortcut endpoint, grid point and cube corner used by the crate is
//! of this form, so positions are kept exact and only metric values (which
//! involve irrational powers) are floating point.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A dyadic rational `numerator / 2^exponent` in canonical form.
///
/// Canonical means `exponent == 0` or the numerator is odd, so structural
/// equality and hashing agree with equality of rational values.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigInt,
    exp: u32,
}

impl Dyadic {
    /// Builds `n / 2^k` and reduces it to canonical form.
    pub fn new(n: impl Into<BigInt>, k: u32) -> Self {
        let mut num: BigInt = n.into();
        if num.is_zero() {
            return Self { num, exp: 0 };
        }
        let tz = num.trailing_zeros().unwrap_or(0);
        let shift = tz.min(k as u64) as u32;
        if shift > 0 {
            num >>= shift;
        }
        Self { num, exp: k - shift }
    }

    pub fn zero() -> Self {
        Self { num: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Self { num: BigInt::one(), exp: 0 }
    }

    pub fn from_int(n: i64) -> Self {
        Self { num: BigInt::from(n), exp: 0 }
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u32) -> Self {
        Self { num: BigInt::one(), exp: k }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    /// Canonical exponent `k` of `m / 2^k`.
    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.exp == 0
    }

    pub fn abs(&self) -> Self {
        Self { num: self.num.abs(), exp: self.exp }
    }

    /// Multiplies by `2^k`; negative `k` divides.
    pub fn mul_pow2(&self, k: i64) -> Self {
        if k >= 0 {
            let k = k as u64;
            if k <= self.exp as u64 {
                Self::new(self.num.clone(), self.exp - k as u32)
            } else {
                Self { num: &self.num << (k - self.exp as u64), exp: 0 }
            }
        } else {
            let k = k.unsigned_abs();
            let exp = u32::try_from(self.exp as u64 + k).expect("dyadic exponent overflow");
            Self::new(self.num.clone(), exp)
        }
    }

    /// Largest integer not above the value.
    pub fn floor(&self) -> BigInt {
        if self.exp == 0 {
            return self.num.clone();
        }
        self.num.div_floor(&(BigInt::one() << self.exp))
    }

    /// Smallest integer not below the value.
    pub fn ceil(&self) -> BigInt {
        if self.exp == 0 {
            return self.num.clone();
        }
        self.num.div_ceil(&(BigInt::one() << self.exp))
    }

    /// Nearest floating point value.
    ///
    /// Exact whenever the numerator fits in 53 bits and the value is a
    /// normal double. Fails with [`Error::Overflow`] if the magnitude is
    /// beyond the double range.
    pub fn to_f64(&self) -> Result<f64> {
        let bits = self.num.bits();
        let (mantissa, shift) = if bits > 1000 {
            let drop = bits - 64;
            ((&self.num >> drop).to_f64(), drop as i64 - self.exp as i64)
        } else {
            (self.num.to_f64(), -(self.exp as i64))
        };
        let mantissa = mantissa.ok_or_else(|| Error::Overflow(self.to_string()))?;
        let value = scale_pow2(mantissa, shift);
        if !value.is_finite() {
            return Err(Error::Overflow(self.to_string()));
        }
        Ok(value)
    }

    /// Exact conversion of a finite double (every finite double is dyadic).
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Self::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 0 { 1i64 } else { -1i64 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & 0x000f_ffff_ffff_ffff;
        let (mant, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | 0x0010_0000_0000_0000, raw_exp - 1075)
        };
        let num = BigInt::from(mant) * sign;
        if e >= 0 {
            Some(Self::new(num << e as u64, 0))
        } else {
            Some(Self::new(num, (-e) as u32))
        }
    }

    /// Rounds `x` to the nearest multiple of `2^-k` (ties away from zero).
    pub fn snap(x: f64, k: u32) -> Option<Self> {
        let exact = Self::from_f64(x)?;
        if exact.exp <= k {
            return Some(exact);
        }
        let scaled = exact.mul_pow2(k as i64);
        let half = Self::new(1, 1);
        let rounded = if scaled.num.is_negative() {
            -((&(-scaled)) + &half).floor()
        } else {
            (&scaled + &half).floor()
        };
        Some(Self::new(rounded, k))
    }

    pub fn min<'a>(&'a self, other: &'a Self) -> &'a Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max<'a>(&'a self, other: &'a Self) -> &'a Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

fn scale_pow2(mut value: f64, mut shift: i64) -> f64 {
    while shift > 512 {
        value *= 2f64.powi(512);
        shift -= 512;
    }
    while shift < -512 {
        value *= 2f64.powi(-512);
        shift += 512;
    }
    value * 2f64.powi(shift as i32)
}

/// Canonical form of `n / 2^k`.
pub fn normalize(n: i64, k: u32) -> Dyadic {
    Dyadic::new(n, k)
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exp.max(other.exp);
        let a = &self.num << (e - self.exp);
        let b = &other.num << (e - other.exp);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Add<&'a Dyadic> for &'a Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &'a Dyadic) -> Dyadic {
        let e = self.exp.max(rhs.exp);
        let a = &self.num << (e - self.exp);
        let b = &rhs.num << (e - rhs.exp);
        Dyadic::new(a + b, e)
    }
}

impl<'a> Sub<&'a Dyadic> for &'a Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &'a Dyadic) -> Dyadic {
        let e = self.exp.max(rhs.exp);
        let a = &self.num << (e - self.exp);
        let b = &rhs.num << (e - rhs.exp);
        Dyadic::new(a - b, e)
    }
}

impl<'a> Mul<&'a Dyadic> for &'a Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &'a Dyadic) -> Dyadic {
        Dyadic::new(&self.num * &rhs.num, self.exp + rhs.exp)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { num: -&self.num, exp: self.exp }
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { num: -self.num, exp: self.exp }
    }
}

macro_rules! owned_binop {
    ($tr:ident, $f:ident) => {
        impl $tr<Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $f(self, rhs: Dyadic) -> Dyadic {
                (&self).$f(&rhs)
            }
        }
        impl<'a> $tr<&'a Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $f(self, rhs: &'a Dyadic) -> Dyadic {
                (&self).$f(rhs)
            }
        }
        impl<'a> $tr<Dyadic> for &'a Dyadic {
            type Output = Dyadic;
            fn $f(self, rhs: Dyadic) -> Dyadic {
                self.$f(&rhs)
            }
        }
    };
}

owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

impl From<i64> for Dyadic {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts `m`, `m/2^k`, `m/d` with `d` a power of two, and finite decimals
/// such as `0.5625` whose value is dyadic.
impl FromStr for Dyadic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::Parse(format!("not a dyadic rational: {s:?}"));
        if t.is_empty() {
            return Err(bad());
        }
        if let Some((n, d)) = t.split_once('/') {
            let num: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d = d.trim();
            let k = if let Some(k) = d.strip_prefix("2^") {
                k.trim().parse::<u32>().map_err(|_| bad())?
            } else {
                let den: BigInt = d.parse().map_err(|_| bad())?;
                if !den.is_positive() {
                    return Err(bad());
                }
                let tz = den.trailing_zeros().unwrap_or(0);
                if den != BigInt::one() << tz {
                    return Err(Error::Parse(format!("denominator of {s:?} is not a power of two")));
                }
                tz as u32
            };
            return Ok(Self::new(num, k));
        }
        if let Some((int_part, frac_part)) = t.split_once('.') {
            let negative = int_part.starts_with('-');
            let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let mut num: BigInt = digits.parse().map_err(|_| bad())?;
            let places = frac_part.len() as u32;
            let five_pow = num_traits::pow(BigInt::from(5u32), places as usize);
            let (q, r) = num.div_rem(&five_pow);
            if !r.is_zero() {
                return Err(Error::Parse(format!("{s:?} is not a dyadic rational")));
            }
            num = q;
            if negative {
                num = -num;
            }
            return Ok(Self::new(num, places));
        }
        let num: BigInt = t.parse().map_err(|_| bad())?;
        Ok(Self::new(num, 0))
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
