//! Exact dollar amounts as fixed-point integers.
//!
//! Accounting paths (fill prices, pnl, profit sums) must stay bit-exact,
//! so prices are stored as micro-dollars in an `i64` instead of `f64`.
//! Model code converts to floats at the boundary.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Micro-dollars per dollar.
const SCALE: i64 = 1_000_000;
const FRAC_DIGITS: u32 = 6;

/// A dollar amount with six decimal digits of precision, stored exactly.
///
/// Ordinary arithmetic (`+`, `-`, `Sum`) is integer arithmetic and never
/// loses precision. Inputs with more than six decimal places are rounded
/// half-to-even on parse; that is the only place rounding happens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Dollars(i64);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MoneyParseError {
    #[error("empty amount")]
    Empty,
    #[error("invalid character in amount '{0}'")]
    InvalidDigit(String),
    #[error("amount '{0}' out of range")]
    OutOfRange(String),
}

impl Dollars {
    pub const ZERO: Dollars = Dollars(0);

    /// Builds an amount from raw micro-dollars.
    pub const fn from_micros(micros: i64) -> Self {
        Dollars(micros)
    }

    pub const fn micros(self) -> i64 {
        self.0
    }

    /// Converts to `f64` for model-space math. Exact for any realistic price.
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    /// Rounds an `f64` dollar value to the nearest micro-dollar.
    ///
    /// Only for synthetic data; parsed market data goes through `FromStr`
    /// so the text representation is preserved exactly.
    pub fn from_f64(dollars: f64) -> Self {
        assert!(dollars.is_finite(), "non-finite dollar amount");
        Dollars((dollars * SCALE as f64).round() as i64)
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }
}

impl FromStr for Dollars {
    type Err = MoneyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (negative, digits) = match t.as_bytes().first() {
            Some(b'-') => (true, &t[1..]),
            Some(b'+') => (false, &t[1..]),
            _ => (false, t),
        };
        if digits.is_empty() {
            return Err(MoneyParseError::Empty);
        }
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(MoneyParseError::Empty);
        }
        let mut micros: i64 = 0;
        for b in int_part.bytes() {
            if !b.is_ascii_digit() {
                return Err(MoneyParseError::InvalidDigit(s.to_owned()));
            }
            micros = micros
                .checked_mul(10)
                .and_then(|m| m.checked_add((b - b'0') as i64))
                .ok_or_else(|| MoneyParseError::OutOfRange(s.to_owned()))?;
        }
        micros = micros
            .checked_mul(SCALE)
            .ok_or_else(|| MoneyParseError::OutOfRange(s.to_owned()))?;

        // Fractional digits beyond the sixth are rounded half-to-even.
        let mut frac_micros: i64 = 0;
        let mut round_up = false;
        for (pos, b) in frac_part.bytes().enumerate() {
            if !b.is_ascii_digit() {
                return Err(MoneyParseError::InvalidDigit(s.to_owned()));
            }
            let d = (b - b'0') as i64;
            if (pos as u32) < FRAC_DIGITS {
                frac_micros = frac_micros * 10 + d;
            } else if pos as u32 == FRAC_DIGITS {
                match d {
                    6..=9 => round_up = true,
                    5 => {
                        let rest_nonzero = frac_part.bytes().skip(pos + 1).any(|c| c != b'0');
                        round_up = rest_nonzero || frac_micros % 2 == 1;
                    }
                    _ => {}
                }
            }
        }
        let seen = frac_part.len().min(FRAC_DIGITS as usize) as u32;
        frac_micros *= 10_i64.pow(FRAC_DIGITS - seen);
        if round_up {
            frac_micros += 1;
        }
        micros = micros
            .checked_add(frac_micros)
            .ok_or_else(|| MoneyParseError::OutOfRange(s.to_owned()))?;
        Ok(Dollars(if negative { -micros } else { micros }))
    }
}

impl fmt::Display for Dollars {
    /// Canonical form: at least two decimal places, trailing zeros beyond
    /// the second trimmed, e.g. `110.29`, `69.046`, `-0.50`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let int = abs / SCALE as u64;
        let mut frac = format!("{:06}", abs % SCALE as u64);
        while frac.len() > 2 && frac.ends_with('0') {
            frac.pop();
        }
        write!(f, "{sign}{int}.{frac}")
    }
}

impl Add for Dollars {
    type Output = Dollars;
    fn add(self, rhs: Dollars) -> Dollars {
        Dollars(self.0.checked_add(rhs.0).expect("dollar overflow"))
    }
}

impl Sub for Dollars {
    type Output = Dollars;
    fn sub(self, rhs: Dollars) -> Dollars {
        Dollars(self.0.checked_sub(rhs.0).expect("dollar overflow"))
    }
}

impl Neg for Dollars {
    type Output = Dollars;
    fn neg(self) -> Dollars {
        Dollars(-self.0)
    }
}

impl Sum for Dollars {
    fn sum<I: Iterator<Item = Dollars>>(iter: I) -> Dollars {
        iter.fold(Dollars::ZERO, |a, b| a + b)
    }
}

impl Serialize for Dollars {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Dollars {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
