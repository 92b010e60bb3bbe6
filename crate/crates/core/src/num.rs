//! Scalar types used for wealth accounting.
//!
//! Ledger and settlement code is generic over [`Currency`]. Two implementations
//! ship with the crate: [`Fixed4`], a decimal fixed-point amount with four
//! fractional digits (the default for simulations, bit-reproducible on every
//! platform), and `f64`, used where wealth grows past the fixed-point range
//! (multi-epoch bound verification).

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};
use std::str::FromStr;

use num_traits::{FromPrimitive, Num, NumAssignOps, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// An amount of money.
pub trait Currency:
    Copy
    + fmt::Debug
    + fmt::Display
    + FromStr
    + PartialOrd
    + Num
    + NumAssignOps
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts a token count into an amount (`n` units of one).
    fn from_count(n: u128) -> Self;

    /// `floor(self / unit)`, or 0 when `self` is not positive.
    fn units_of(self, unit: Self) -> u128;

    /// `ceil(self / unit)`, or 0 when `self` is not positive.
    fn ceil_units_of(self, unit: Self) -> u128;

    /// Lossy conversion from a configuration value.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(|| panic!("{v} is not representable as a currency amount"))
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Currency for f64 {
    fn from_count(n: u128) -> Self {
        n as f64
    }

    fn units_of(self, unit: Self) -> u128 {
        let q = (self / unit).floor();
        if q > 0.0 {
            q as u128
        } else {
            0
        }
    }

    fn ceil_units_of(self, unit: Self) -> u128 {
        let q = (self / unit).ceil();
        if q > 0.0 {
            q as u128
        } else {
            0
        }
    }
}

const SCALE: i64 = 10_000;

/// Decimal fixed-point amount with four fractional digits.
///
/// Stored as a signed count of ten-thousandths. Arithmetic is exact for
/// addition and subtraction; multiplication and division round half away from
/// zero at the fourth decimal. Overflow panics.
#[derive(Copy, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed4(i64);

impl Fixed4 {
    pub const ZERO: Fixed4 = Fixed4(0);
    pub const MAX: Fixed4 = Fixed4(i64::MAX);

    pub const fn from_raw(raw: i64) -> Self {
        Fixed4(raw)
    }

    pub const fn raw(self) -> i64 {
        self.0
    }

    pub const fn from_int(v: i64) -> Self {
        Fixed4(v * SCALE)
    }

    fn checked(v: i128) -> Self {
        Fixed4(i64::try_from(v).expect("Fixed4 overflow"))
    }
}

fn div_round(num: i128, den: i128) -> i128 {
    let q = num / den;
    let r = num % den;
    if 2 * r.abs() >= den.abs() {
        if (num < 0) ^ (den < 0) {
            q - 1
        } else {
            q + 1
        }
    } else {
        q
    }
}

impl fmt::Debug for Fixed4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Fixed4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let s = SCALE as u64;
        write!(f, "{sign}{}.{:04}", abs / s, abs % s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseFixedError {
    #[error("empty amount")]
    Empty,
    #[error("invalid amount {0:?}")]
    Invalid(String),
    #[error("amount {0:?} has more than four fractional digits")]
    TooPrecise(String),
    #[error("amount {0:?} out of range")]
    OutOfRange(String),
}

impl FromStr for Fixed4 {
    type Err = ParseFixedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseFixedError::Empty);
        }
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        let digits_ok = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if (int_part.is_empty() && frac_part.is_empty()) || !digits_ok(int_part) || !digits_ok(frac_part) {
            return Err(ParseFixedError::Invalid(s.to_string()));
        }
        if frac_part.len() > 4 {
            return Err(ParseFixedError::TooPrecise(s.to_string()));
        }
        let int: i128 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| ParseFixedError::OutOfRange(s.to_string()))?
        };
        let mut frac: i128 = 0;
        for (i, b) in frac_part.bytes().enumerate() {
            frac += i128::from(b - b'0') * 10i128.pow(3 - i as u32);
        }
        let mut raw = int
            .checked_mul(SCALE as i128)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(|| ParseFixedError::OutOfRange(s.to_string()))?;
        if neg {
            raw = -raw;
        }
        i64::try_from(raw).map(Fixed4).map_err(|_| ParseFixedError::OutOfRange(s.to_string()))
    }
}

impl Add for Fixed4 {
    type Output = Fixed4;
    fn add(self, rhs: Self) -> Self {
        Fixed4(self.0.checked_add(rhs.0).expect("Fixed4 overflow"))
    }
}

impl Sub for Fixed4 {
    type Output = Fixed4;
    fn sub(self, rhs: Self) -> Self {
        Fixed4(self.0.checked_sub(rhs.0).expect("Fixed4 overflow"))
    }
}

impl Mul for Fixed4 {
    type Output = Fixed4;
    fn mul(self, rhs: Self) -> Self {
        Fixed4::checked(div_round(i128::from(self.0) * i128::from(rhs.0), SCALE as i128))
    }
}

impl Div for Fixed4 {
    type Output = Fixed4;
    fn div(self, rhs: Self) -> Self {
        assert!(rhs.0 != 0, "Fixed4 division by zero");
        Fixed4::checked(div_round(i128::from(self.0) * SCALE as i128, i128::from(rhs.0)))
    }
}

impl Rem for Fixed4 {
    type Output = Fixed4;
    fn rem(self, rhs: Self) -> Self {
        Fixed4(self.0 % rhs.0)
    }
}

impl Neg for Fixed4 {
    type Output = Fixed4;
    fn neg(self) -> Self {
        Fixed4(-self.0)
    }
}

macro_rules! assign_op {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for Fixed4 {
            fn $m(&mut self, rhs: Self) {
                *self = *self $op rhs;
            }
        }
    };
}
assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);
assign_op!(DivAssign, div_assign, /);
assign_op!(RemAssign, rem_assign, %);

impl Sum for Fixed4 {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Fixed4::ZERO, Add::add)
    }
}

impl Zero for Fixed4 {
    fn zero() -> Self {
        Fixed4(0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl One for Fixed4 {
    fn one() -> Self {
        Fixed4(SCALE)
    }
}

impl Num for Fixed4 {
    type FromStrRadixErr = ParseFixedError;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        if radix != 10 {
            return Err(ParseFixedError::Invalid(format!("radix {radix}")));
        }
        s.parse()
    }
}

impl Signed for Fixed4 {
    fn abs(&self) -> Self {
        Fixed4(self.0.abs())
    }
    fn abs_sub(&self, other: &Self) -> Self {
        if self <= other {
            Fixed4(0)
        } else {
            *self - *other
        }
    }
    fn signum(&self) -> Self {
        Fixed4(self.0.signum() * SCALE)
    }
    fn is_positive(&self) -> bool {
        self.0 > 0
    }
    fn is_negative(&self) -> bool {
        self.0 < 0
    }
}

impl FromPrimitive for Fixed4 {
    fn from_i64(n: i64) -> Option<Self> {
        n.checked_mul(SCALE).map(Fixed4)
    }
    fn from_u64(n: u64) -> Option<Self> {
        i64::try_from(n).ok().and_then(Self::from_i64)
    }
    fn from_f64(n: f64) -> Option<Self> {
        let scaled = (n * SCALE as f64).round();
        if scaled.is_finite() && scaled.abs() < i64::MAX as f64 {
            Some(Fixed4(scaled as i64))
        } else {
            None
        }
    }
}

impl ToPrimitive for Fixed4 {
    fn to_i64(&self) -> Option<i64> {
        Some(self.0.div_euclid(SCALE))
    }
    fn to_u64(&self) -> Option<u64> {
        u64::try_from(self.0.div_euclid(SCALE)).ok()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.0 as f64 / SCALE as f64)
    }
}

impl Currency for Fixed4 {
    fn from_count(n: u128) -> Self {
        let n = i128::try_from(n).expect("Fixed4 overflow");
        Fixed4::checked(n * SCALE as i128)
    }

    fn units_of(self, unit: Self) -> u128 {
        assert!(unit.0 > 0, "unit must be positive");
        if self.0 <= 0 {
            0
        } else {
            (self.0 / unit.0) as u128
        }
    }

    fn ceil_units_of(self, unit: Self) -> u128 {
        assert!(unit.0 > 0, "unit must be positive");
        if self.0 <= 0 {
            0
        } else {
            ((self.0 + unit.0 - 1) / unit.0) as u128
        }
    }
}

impl PartialEq<i64> for Fixed4 {
    fn eq(&self, other: &i64) -> bool {
        Fixed4::from_i64(*other).is_some_and(|o| o == *self)
    }
}

impl PartialOrd<i64> for Fixed4 {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        Fixed4::from_i64(*other).map(|o| self.cmp(&o))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fx(s: &str) -> Fixed4 {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(fx("80").to_string(), "80.0000");
        assert_eq!(fx("0.8").raw(), 8000);
        assert_eq!(fx("-12.5").to_string(), "-12.5000");
        assert_eq!(fx(".25").raw(), 2500);
        assert!(matches!("1.23456".parse::<Fixed4>(), Err(ParseFixedError::TooPrecise(_))));
        assert!(matches!("abc".parse::<Fixed4>(), Err(ParseFixedError::Invalid(_))));
        assert!(matches!("".parse::<Fixed4>(), Err(ParseFixedError::Empty)));
    }

    #[test]
    fn slippage_product_is_exact() {
        let f = Fixed4::from_f64_lossy(0.8);
        let eta = Fixed4::from_int(100);
        assert_eq!(f * eta, Fixed4::from_int(80));
        assert_eq!(eta - f * eta, Fixed4::from_int(20));
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(Fixed4::from_raw(5) * Fixed4::from_raw(5000), Fixed4::from_raw(3));
        assert_eq!(Fixed4::from_raw(-5) * Fixed4::from_raw(5000), Fixed4::from_raw(-3));
        assert_eq!(Fixed4::from_int(1) / Fixed4::from_int(3), Fixed4::from_raw(3333));
        assert_eq!(Fixed4::from_int(2) / Fixed4::from_int(3), Fixed4::from_raw(6667));
    }

    #[test]
    fn unit_counting() {
        let y = Fixed4::from_int(80);
        assert_eq!(Fixed4::from_int(170).units_of(y), 2);
        assert_eq!(Fixed4::from_int(160).units_of(y), 2);
        assert_eq!(Fixed4::from_int(-5).units_of(y), 0);
        assert_eq!(Fixed4::from_int(920).ceil_units_of(y), 12);
        assert_eq!(170.0f64.units_of(80.0), 2);
        assert_eq!(920.0f64.ceil_units_of(80.0), 12);
    }

    #[test]
    #[should_panic(expected = "overflow")]
    fn overflow_panics() {
        let _ = Fixed4::MAX + Fixed4::from_raw(1);
    }

    proptest::proptest! {
        #[test]
        fn display_parse_roundtrip(raw in -1_000_000_000_000i64..1_000_000_000_000) {
            let v = Fixed4::from_raw(raw);
            proptest::prop_assert_eq!(v.to_string().parse::<Fixed4>().unwrap(), v);
        }
    }
}
