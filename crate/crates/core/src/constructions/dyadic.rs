use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::ConstructionError;
use crate::rational::{pow2, pow_rational, ratio};

/// The `2^r + 1` rationals `z / 2^r` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicGrid {
    pub r: u32,
}

impl DyadicGrid {
    pub fn new(r: u32) -> Self {
        assert!(r >= 1, "dyadic resolution must be positive");
        DyadicGrid { r }
    }

    pub fn len(&self) -> u64 {
        (1u64 << self.r) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        let scaled = x * pow2(self.r as i64);
        scaled.is_integer() && !x.is_negative() && x <= &BigRational::one()
    }

    pub fn points(&self) -> impl Iterator<Item = BigRational> + '_ {
        let den = BigInt::one() << self.r;
        (0..self.len()).map(move |z| BigRational::new(BigInt::from(z), den.clone()))
    }

    pub fn round(&self, x: &BigRational) -> BigRational {
        round_dyadic(x, self.r)
    }
}

/// Snaps `x` onto the `r`-dyadic grid, rounding toward 1/2: up when
/// `x <= 1/2`, down otherwise.
pub fn round_dyadic(x: &BigRational, r: u32) -> BigRational {
    let scale = pow2(r as i64);
    let scaled = x * &scale;
    let snapped = if x <= &ratio(1, 2) {
        scaled.ceil()
    } else {
        scaled.floor()
    };
    snapped / scale
}

/// Smallest `r` with `1 - 2^{1-r} >= 2^{-epsilon/2}`, i.e.
/// `r = ceil(1 - log2(1 - 2^{-epsilon/2}))`, decided in exact arithmetic.
///
/// With `epsilon / 2 = a / b` the test is `(1 - 2^{1-r})^b * 2^a >= 1`.
pub fn resolution_for_epsilon(epsilon: &BigRational) -> Result<u32, ConstructionError> {
    if !epsilon.is_positive() || epsilon >= &BigRational::one() {
        return Err(ConstructionError::Epsilon(
            crate::rational::format_rational(epsilon),
        ));
    }
    let half = epsilon / BigRational::from_integer(2.into());
    let a: u64 = half
        .numer()
        .try_into()
        .map_err(|_| ConstructionError::Epsilon("numerator too large".into()))?;
    let b: i64 = half
        .denom()
        .try_into()
        .map_err(|_| ConstructionError::Epsilon("denominator too large".into()))?;
    let two_a = BigRational::from_integer(BigInt::one() << a);
    for r in 2..=256u32 {
        let keep = BigRational::one() - pow2(1 - r as i64);
        if pow_rational(&keep, b) * &two_a >= BigRational::one() {
            return Ok(r);
        }
    }
    Err(ConstructionError::Epsilon(format!(
        "{} needs a resolution above 256",
        crate::rational::format_rational(epsilon)
    )))
}
