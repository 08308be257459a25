//! Exact parsing of reported decimal figures.

use num_bigint::BigInt;
use num_traits::One;
use std::str::FromStr;
use thiserror::Error;

use crate::interval::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecimalError {
    #[error("empty decimal string")]
    Empty,
    #[error("invalid decimal {0:?}")]
    Invalid(String),
}

/// A decimal literal parsed without loss, remembering how many fractional
/// digits were written so the reporting precision can be recovered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decimal {
    pub value: Rational,
    /// Number of digits after the decimal point in the written form,
    /// adjusted by any exponent (`1.5e-3` has 4).
    pub places: u32,
}

impl Decimal {
    /// Half-width of the interval implied by `places` digits: `10^-places`
    /// when flooring or ceiling may have happened, half that under rounding.
    pub fn implied_uncertainty(&self, rounding_only: bool) -> Rational {
        let unit = Rational::new(BigInt::one(), BigInt::from(10u32).pow(self.places));
        if rounding_only {
            unit / BigInt::from(2)
        } else {
            unit
        }
    }
}

impl FromStr for Decimal {
    type Err = DecimalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(DecimalError::Empty);
        }
        let invalid = || DecimalError::Invalid(s.to_string());

        let (mantissa, exponent) = match s.find(['e', 'E']) {
            Some(pos) => {
                let exp: i32 = s[pos + 1..].parse().map_err(|_| invalid())?;
                (&s[..pos], exp)
            }
            None => (s, 0),
        };
        let (negative, digits) = match mantissa.as_bytes().first() {
            Some(b'-') => (true, &mantissa[1..]),
            Some(b'+') => (false, &mantissa[1..]),
            _ => (false, mantissa),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(invalid());
        }
        if !int_part
            .bytes()
            .chain(frac_part.bytes())
            .all(|b| b.is_ascii_digit())
        {
            return Err(invalid());
        }

        let all_digits = format!("{int_part}{frac_part}");
        let mut numer = BigInt::from_str(if all_digits.is_empty() {
            "0"
        } else {
            &all_digits
        })
        .map_err(|_| invalid())?;
        if negative {
            numer = -numer;
        }
        let scale = frac_part.len() as i64 - i64::from(exponent);
        let value = if scale >= 0 {
            Rational::new(numer, BigInt::from(10u32).pow(scale as u32))
        } else {
            Rational::from_integer(numer * BigInt::from(10u32).pow((-scale) as u32))
        };
        Ok(Decimal {
            value,
            places: scale.max(0) as u32,
        })
    }
}

/// Parses a decimal string into an exact rational.
pub fn parse_decimal(s: &str) -> Result<Rational, DecimalError> {
    s.parse::<Decimal>().map(|d| d.value)
}
