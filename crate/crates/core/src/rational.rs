//! Exact rationals. Values are `num_rational::BigRational`, which keeps
//! every value in lowest terms with a positive denominator; this module adds
//! the literal syntax used by the text formats.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn is_probability(value: &Rational) -> bool {
    !value.is_negative() && *value <= Rational::one()
}

/// Parses an integer (`-3`), a decimal (`0.05`, `.2`, `-1.`) or a `p/q`
/// literal. Decimals are converted exactly, so `0.05` becomes `1/20`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = |why: &str| Error::SchemaError(format!("invalid rational literal {text:?}: {why}"));
    if text.is_empty() {
        return Err(bad("empty"));
    }
    if let Some((p, q)) = text.split_once('/') {
        let numer = parse_integer(p.trim()).ok_or_else(|| bad("numerator is not an integer"))?;
        let denom = parse_integer(q.trim()).ok_or_else(|| bad("denominator is not an integer"))?;
        if denom.is_zero() {
            return Err(bad("zero denominator"));
        }
        return Ok(Rational::new(numer, denom));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        let (negative, whole) = match whole.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, whole.strip_prefix('+').unwrap_or(whole)),
        };
        let digits_ok = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
        if !digits_ok(whole) || !digits_ok(frac) || (whole.is_empty() && frac.is_empty()) {
            return Err(bad("malformed decimal"));
        }
        let mut numer: BigInt = if whole.is_empty() {
            BigInt::zero()
        } else {
            whole.parse().map_err(|_| bad("malformed decimal"))?
        };
        let mut denom = BigInt::one();
        for digit in frac.bytes() {
            numer = numer * 10 + BigInt::from(digit - b'0');
            denom *= 10;
        }
        if negative {
            numer = -numer;
        }
        return Ok(Rational::new(numer, denom));
    }
    parse_integer(text)
        .map(Rational::from_integer)
        .ok_or_else(|| bad("not a number"))
}

fn parse_integer(text: &str) -> Option<BigInt> {
    let digits = text.strip_prefix(['-', '+']).unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}
