//! Exact rational helpers: string encoding and accurate base-2 logarithms.

use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed rational {input:?}: {reason}")]
pub struct ParseRationalError {
    pub input: String,
    pub reason: &'static str,
}

/// Parses `"num/den"`, a plain integer, or a finite decimal such as `"0.85"`.
///
/// Decimals are converted exactly (`"0.1"` is `1/10`), never through a float.
pub fn parse_rational(input: &str) -> Result<BigRational, ParseRationalError> {
    let err = |reason| ParseRationalError {
        input: input.to_string(),
        reason,
    };
    let s = input.trim();
    if s.is_empty() {
        return Err(err("empty string"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| err("bad numerator"))?;
        let den = BigInt::from_str(den.trim()).map_err(|_| err("bad denominator"))?;
        if den.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.starts_with('-');
        let int_digits = int_part.trim_start_matches(['-', '+']);
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err("bad fractional digits"));
        }
        if !int_digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err("bad integer digits"));
        }
        let digits = format!("{int_digits}{frac_part}");
        let mut num = BigInt::from_str(&digits).map_err(|_| err("bad digits"))?;
        if negative {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10u32), frac_part.len());
        return Ok(BigRational::new(num, den));
    }
    BigInt::from_str(s)
        .map(BigRational::from_integer)
        .map_err(|_| err("not a number"))
}

/// Canonical `"num/den"` encoding used by every file format.
pub fn format_rational(value: &BigRational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(value: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(value))
}

/// `2^exp` for a possibly negative exponent.
pub fn pow2(exp: i64) -> BigRational {
    let magnitude = BigInt::one() << exp.unsigned_abs();
    if exp >= 0 {
        BigRational::from_integer(magnitude)
    } else {
        BigRational::new(BigInt::one(), magnitude)
    }
}

/// Integer power of a rational with a possibly negative exponent. `base` must be
/// non-zero when `exp < 0`.
pub fn pow_rational(base: &BigRational, exp: i64) -> BigRational {
    let positive = num_traits::pow(base.clone(), exp.unsigned_abs() as usize);
    if exp >= 0 {
        positive
    } else {
        positive.recip()
    }
}

/// `log2` of a positive rational, `None` for zero.
///
/// Powers of two come out exact. Otherwise the result carries about 1e-15
/// relative error, including for values very close to 1 where a naive
/// `log2(num) - log2(den)` would cancel catastrophically.
pub fn log2_rational(value: &BigRational) -> Option<f64> {
    if value.is_zero() {
        return None;
    }
    assert!(value.is_positive(), "log2 of a negative rational");
    let num = value.numer().magnitude();
    let den = value.denom().magnitude();
    Some(log2_ratio_of(num, den))
}

fn log2_ratio_of(num: &BigUint, den: &BigUint) -> f64 {
    // Write value = m * 2^exponent with m = a / b in [2/3, 4/3), then take
    // log2(m) through ln_1p of the exactly computed m - 1.
    let mut exponent = num.bits() as i64 - den.bits() as i64;
    let scaled = |e: i64| -> (BigUint, BigUint) {
        if e >= 0 {
            (num.clone(), den << e as u64)
        } else {
            (num << (-e) as u64, den.clone())
        }
    };
    let (mut a, mut b) = scaled(exponent);
    let three = BigUint::from(3u32);
    let four = BigUint::from(4u32);
    let two = BigUint::from(2u32);
    if &a * &three >= &b * &four {
        exponent += 1;
        (a, b) = scaled(exponent);
    } else if &a * &three < &b * &two {
        exponent -= 1;
        (a, b) = scaled(exponent);
    }
    let diff = BigInt::from_biguint(Sign::Plus, a) - BigInt::from_biguint(Sign::Plus, b.clone());
    let frac = ratio_to_f64(&diff, &b);
    exponent as f64 + frac.ln_1p() / std::f64::consts::LN_2
}

/// Correctly scaled `a / b` as a float, keeping full relative precision for
/// tiny quotients.
fn ratio_to_f64(a: &BigInt, b: &BigUint) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let mag = a.magnitude();
    let mut shift: i64 = 64 - (mag.bits() as i64 - b.bits() as i64);
    let mut q = scaled_quotient(mag, b, shift);
    while q.bits() > 64 {
        shift -= 1;
        q = scaled_quotient(mag, b, shift);
    }
    while q.bits() < 64 {
        shift += 1;
        q = scaled_quotient(mag, b, shift);
    }
    let mantissa = q.to_u64().expect("quotient fits in 64 bits") as f64;
    let mut value = mantissa;
    let mut remaining = shift;
    while remaining > 0 {
        let step = remaining.min(1000);
        value /= 2f64.powi(step as i32);
        remaining -= step;
    }
    while remaining < 0 {
        let step = (-remaining).min(1000);
        value *= 2f64.powi(step as i32);
        remaining += step;
    }
    if a.sign() == Sign::Minus {
        -value
    } else {
        value
    }
}

fn scaled_quotient(num: &BigUint, den: &BigUint, shift: i64) -> BigUint {
    if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    }
}

/// Serde adapter for exact rationals stored as `"num/den"` strings.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(value: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        format_rational(value).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for a list of `"num/den"` strings.
pub mod serde_rational_vec {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        values
            .iter()
            .map(format_rational)
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_rational(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

pub(crate) fn is_integer(value: &BigRational) -> bool {
    value.denom().is_one()
}

pub(crate) fn to_i64(value: &BigRational) -> Option<i64> {
    if !is_integer(value) {
        return None;
    }
    value.numer().to_i64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_accepted_forms() {
        assert_eq!(parse_rational("3/4").unwrap(), ratio(3, 4));
        assert_eq!(parse_rational("6/8").unwrap(), ratio(3, 4));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert_eq!(parse_rational("0.1").unwrap(), ratio(1, 10));
        assert_eq!(parse_rational("-1.25").unwrap(), ratio(-5, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn format_is_canonical() {
        assert_eq!(format_rational(&ratio(2, 4)), "1/2");
        assert_eq!(format_rational(&int(0)), "0/1");
    }

    #[test]
    fn log2_exact_on_powers_of_two() {
        assert_eq!(log2_rational(&int(1)), Some(0.0));
        assert_eq!(log2_rational(&pow2(19999)), Some(19999.0));
        assert_eq!(log2_rational(&pow2(-7)), Some(-7.0));
        assert_eq!(log2_rational(&int(0)), None);
    }

    #[test]
    fn log2_accurate_near_one() {
        // (2^200 + 1) / 2^200
        let big = BigInt::one() << 200u32;
        let v = BigRational::new(big.clone() + 1, big);
        let got = log2_rational(&v).unwrap();
        let want = 2f64.powi(-200) / std::f64::consts::LN_2;
        assert!(((got - want) / want).abs() < 1e-12, "{got} vs {want}");

        let v = ratio(1_000_001, 1_000_000);
        let want = (1e-6f64).ln_1p() / std::f64::consts::LN_2;
        let got = log2_rational(&v).unwrap();
        assert!(((got - want) / want).abs() < 1e-12);
    }

    #[test]
    fn log2_matches_float_on_ordinary_values() {
        for (n, d) in [(3, 1), (1, 3), (22, 7), (5, 1024), (999, 1000), (1001, 1000)] {
            let got = log2_rational(&ratio(n, d)).unwrap();
            let want = (n as f64 / d as f64).log2();
            assert!(((got - want) / want).abs() < 1e-12, "{n}/{d}: {got} vs {want}");
        }
    }

    #[test]
    fn powers() {
        assert_eq!(pow_rational(&ratio(2, 3), 2), ratio(4, 9));
        assert_eq!(pow_rational(&ratio(2, 3), -2), ratio(9, 4));
        assert_eq!(pow2(0), int(1));
    }
}
