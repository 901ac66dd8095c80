//! Exact money arithmetic in integer minor units (cents).
//!
//! Golden tests on booking data must be bit-exact, so amounts are never held
//! as floating point inside the data pipeline. Model parameters (split
//! points, component means) live in `f64` currency units instead.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An amount in integer cents. May be negative (recoveries, deductibles).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(pub i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn from_cents(cents: i64) -> Money {
        Money(cents)
    }

    /// Rounds half away from zero.
    pub fn from_units(units: f64) -> Money {
        Money((units * 100.0).round() as i64)
    }

    pub fn cents(self) -> i64 {
        self.0
    }

    pub fn to_units(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn abs(self) -> Money {
        Money(self.0.abs())
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Parses `"4,087.61"`, `"-3829.99"`, `"200"`. Thousands separators are
    /// ignored; at most two decimal digits are accepted.
    pub fn parse(s: &str) -> Result<Money> {
        let raw = s.trim();
        if raw.is_empty() {
            return Err(Error::Validation("empty amount".to_string()));
        }
        let (neg, digits) = match raw.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, raw.strip_prefix('+').unwrap_or(raw)),
        };
        let cleaned: String = digits.chars().filter(|&c| c != ',').collect();
        let (int_part, frac_part) = match cleaned.split_once('.') {
            Some((i, f)) => (i, f),
            None => (cleaned.as_str(), ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(Error::Validation(format!("malformed amount {raw:?}")));
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(Error::Validation(format!("malformed amount {raw:?}")));
        }
        if frac_part.len() > 2 {
            return Err(Error::Validation(format!(
                "amount {raw:?} has more than two decimal digits"
            )));
        }
        let units: i64 = if int_part.is_empty() {
            0
        } else {
            int_part
                .parse()
                .map_err(|_| Error::Validation(format!("amount {raw:?} out of range")))?
        };
        let mut frac: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().unwrap() };
        if frac_part.len() == 1 {
            frac *= 10;
        }
        let cents = units
            .checked_mul(100)
            .and_then(|c| c.checked_add(frac))
            .ok_or_else(|| Error::Validation(format!("amount {raw:?} out of range")))?;
        Ok(Money(if neg { -cents } else { cents }))
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_booking_amounts() {
        assert_eq!(Money::parse("4,087.61").unwrap(), Money(408761));
        assert_eq!(Money::parse("4,127.11").unwrap(), Money(412711));
        assert_eq!(Money::parse("-3829.99").unwrap(), Money(-382999));
        assert_eq!(Money::parse("297.12").unwrap(), Money(29712));
        assert_eq!(Money::parse("200").unwrap(), Money(20000));
        assert_eq!(Money::parse("7.1").unwrap(), Money(710));
        assert_eq!(Money::parse(".5").unwrap(), Money(50));
    }

    #[test]
    fn rejects_garbage() {
        assert!(Money::parse("abc").is_err());
        assert!(Money::parse("").is_err());
        assert!(Money::parse("1.234").is_err());
        assert!(Money::parse("12x.00").is_err());
    }

    #[test]
    fn display_round_trips() {
        for cents in [-382999, -1, 0, 7, 29712, 412711] {
            let m = Money(cents);
            assert_eq!(Money::parse(&m.to_string()).unwrap(), m);
        }
    }

    proptest::proptest! {
        #[test]
        fn display_parse_round_trip(cents in -1_000_000_000_000i64..1_000_000_000_000) {
            let m = Money(cents);
            proptest::prop_assert_eq!(Money::parse(&m.to_string()).unwrap(), m);
        }
    }

    #[test]
    fn from_units_rounds_half_away_from_zero() {
        assert_eq!(Money::from_units(0.025), Money(3));
        assert_eq!(Money::from_units(-0.025), Money(-3));
        assert_eq!(Money::from_units(200.0), Money(20000));
    }
}
