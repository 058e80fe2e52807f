//! Scalar abstraction over the two arithmetic modes.
//!
//! Every probability-carrying structure is generic over [`Scalar`], with two
//! implementations: `f64` (tolerance `1e-9`) and [`BigRational`] (exact, zero
//! tolerance). Feasibility verdicts produced in the rational mode are exact
//! statements about the input numbers; the float mode trades that for speed
//! on large atom spaces.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Normalization / pivot tolerance used by all float-mode comparisons.
pub const FLOAT_TOL: f64 = 1e-9;

/// Arithmetic required by tables, joints and the LP engine.
///
/// `tol()` is the half-width used by `approx_eq`/`is_neg`: `1e-9` for `f64`,
/// exactly zero for rationals.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Signed
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// True for arithmetic with no rounding (rational mode).
    const EXACT: bool;

    /// Exact conversion where possible (`f64` values are dyadic rationals).
    fn from_f64(x: f64) -> Self;

    /// Nearest-float view, for reporting.
    fn to_f64(&self) -> f64;

    /// `num / den` as a scalar. Panics if `den == 0`.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Comparison tolerance.
    fn tol() -> Self;

    /// `|a - b| <= tol`.
    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tol()
    }

    /// `x < -tol`.
    fn is_neg(&self) -> bool {
        *self < -Self::tol()
    }

    /// `x > tol`.
    fn is_pos(&self) -> bool {
        *self > Self::tol()
    }

    /// Parses a probability literal, decimal or `p/q`. The rational impl is
    /// exact (`"0.1"` is one tenth); the float impl takes the nearest value.
    fn parse_text(s: &str) -> Option<Self>;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn tol() -> Self {
        FLOAT_TOL
    }

    fn parse_text(s: &str) -> Option<Self> {
        let s = s.trim();
        let value = if let Some((n, d)) = s.split_once('/') {
            let n: f64 = n.trim().parse().ok()?;
            let d: f64 = d.trim().parse().ok()?;
            if d == 0.0 {
                return None;
            }
            n / d
        } else {
            s.parse().ok()?
        };
        value.is_finite().then_some(value)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_f64(x: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(x).expect("finite float")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn tol() -> Self {
        BigRational::zero()
    }

    fn parse_text(s: &str) -> Option<Self> {
        parse_exact_rational(s)
    }
}

/// Parses a decimal or `p/q` literal into an exact rational.
///
/// `"0.5"` becomes `1/2` and `"0.1"` becomes `1/10` (not the nearest dyadic),
/// which is what the exact mode wants for hand-written CSV input.
pub fn parse_exact_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    let (sign, digits) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let joined = format!("{int_part}{frac_part}");
    let mantissa: BigInt = if joined.is_empty() { BigInt::zero() } else { joined.parse().ok()? };
    let scale = num_traits::pow(BigInt::from(10), frac_part.len());
    Some(BigRational::new(mantissa * sign, scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_rational_literals() {
        assert_eq!(parse_exact_rational("0.5").unwrap(), BigRational::from_ratio(1, 2));
        assert_eq!(parse_exact_rational("0.1").unwrap(), BigRational::from_ratio(1, 10));
        assert_eq!(parse_exact_rational("1/3").unwrap(), BigRational::from_ratio(1, 3));
        assert_eq!(parse_exact_rational("-0.25").unwrap(), BigRational::from_ratio(-1, 4));
        assert_eq!(parse_exact_rational("2").unwrap(), BigRational::from_ratio(2, 1));
        assert!(parse_exact_rational("1/0").is_none());
        assert!(parse_exact_rational("abc").is_none());
        assert!(parse_exact_rational("").is_none());
        assert!(parse_exact_rational(".").is_none());
    }

    #[test]
    fn dyadic_float_conversion_is_exact() {
        let half = <BigRational as Scalar>::from_f64(0.5);
        assert_eq!(half, BigRational::from_ratio(1, 2));
        let eighth = <BigRational as Scalar>::from_f64(0.375);
        assert_eq!(eighth, BigRational::from_ratio(3, 8));
    }

    #[test]
    fn tolerance_semantics_differ_by_mode() {
        assert!(0.5f64.approx_eq(&(0.5 + 1e-12)));
        assert!(!Scalar::approx_eq(
            &BigRational::from_ratio(1, 2),
            &BigRational::from_ratio(500_000_000_001, 1_000_000_000_000),
        ));
    }
}
