//! Exact rationals used for every memory and load value.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// `"n"` or `"n/d"`.
pub fn format(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"n"` or `"n/d"`.
pub fn parse(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rational::new(n.trim().parse().ok()?, d))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

/// Decimal rendering rounded half away from zero to `places` digits.
pub fn to_decimal(r: &Rational, places: u32) -> String {
    let scale = BigInt::from(10u32).pow(places);
    let scaled = r * Rational::from_integer(scale.clone());
    let (q, rem) = scaled.numer().div_rem(scaled.denom());
    let twice = rem.abs() * 2;
    let mut q = q;
    if twice >= *scaled.denom() {
        if scaled.is_negative() {
            q -= 1;
        } else {
            q += 1;
        }
    }
    let neg = q.is_negative();
    let digits = q.abs().to_string();
    let places = places as usize;
    let digits = if digits.len() <= places {
        format!("{}{}", "0".repeat(places + 1 - digits.len()), digits)
    } else {
        digits
    };
    let (whole, frac) = digits.split_at(digits.len() - places);
    let sign = if neg { "-" } else { "" };
    if places == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{frac}")
    }
}

/// Serde helper: writes the rational as `"n/d"`.
pub fn serialize<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format(r))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
