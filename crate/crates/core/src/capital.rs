//! Gambler capital in one of two representations.
//!
//! Exact mode keeps the capital as a non-negative rational. Log mode keeps
//! `log2` of it as a float with an explicit bankrupt state standing in for
//! capital zero. Bankruptcy is absorbing in both modes.

use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::log2_rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapitalMode {
    Exact,
    Log2,
}

impl std::str::FromStr for CapitalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(CapitalMode::Exact),
            "log2" | "log" => Ok(CapitalMode::Log2),
            other => Err(format!("unknown capital mode {other:?} (exact, log2)")),
        }
    }
}

/// `log2` of a capital, or bankrupt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogCapital {
    Finite(f64),
    Bankrupt,
}

impl LogCapital {
    pub fn value(self) -> Option<f64> {
        match self {
            LogCapital::Finite(v) => Some(v),
            LogCapital::Bankrupt => None,
        }
    }

    /// Bankrupt maps to negative infinity.
    pub fn as_f64(self) -> f64 {
        self.value().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn is_bankrupt(self) -> bool {
        matches!(self, LogCapital::Bankrupt)
    }

    pub fn add(self, delta: LogCapital) -> LogCapital {
        match (self, delta) {
            (LogCapital::Finite(a), LogCapital::Finite(b)) => LogCapital::Finite(a + b),
            _ => LogCapital::Bankrupt,
        }
    }
}

impl fmt::Display for LogCapital {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogCapital::Finite(v) => write!(f, "{v}"),
            LogCapital::Bankrupt => write!(f, "-inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Capital {
    Exact(BigRational),
    Log2(LogCapital),
}

impl Capital {
    pub fn new(value: &BigRational, mode: CapitalMode) -> Capital {
        assert!(!value.is_negative(), "capital must be non-negative");
        match mode {
            CapitalMode::Exact => Capital::Exact(value.clone()),
            CapitalMode::Log2 => Capital::Log2(log2_of(value)),
        }
    }

    pub fn mode(&self) -> CapitalMode {
        match self {
            Capital::Exact(_) => CapitalMode::Exact,
            Capital::Log2(_) => CapitalMode::Log2,
        }
    }

    pub fn is_bankrupt(&self) -> bool {
        match self {
            Capital::Exact(v) => v.is_zero(),
            Capital::Log2(l) => l.is_bankrupt(),
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Capital::Exact(v) => Some(v),
            Capital::Log2(_) => None,
        }
    }

    /// `log2` of the capital in either mode.
    pub fn log2(&self) -> LogCapital {
        match self {
            Capital::Exact(v) => log2_of(v),
            Capital::Log2(l) => *l,
        }
    }

    pub fn to_log2(&self) -> Capital {
        Capital::Log2(self.log2())
    }

    /// Capital after staking fraction `p` on the realized symbol of a
    /// `k`-symbol alphabet: `c * k * p`.
    pub fn mul_bet(&self, k: usize, p: &BigRational) -> Capital {
        debug_assert!(k >= 2);
        debug_assert!(!p.is_negative());
        match self {
            Capital::Exact(v) => {
                if v.is_zero() || p.is_zero() {
                    Capital::Exact(BigRational::zero())
                } else {
                    Capital::Exact(v * p * BigRational::from_integer(k.into()))
                }
            }
            Capital::Log2(l) => {
                let factor = p * BigRational::from_integer(k.into());
                Capital::Log2(l.add(log2_of(&factor)))
            }
        }
    }

    /// Multiplies by a precomputed factor in the matching representation.
    pub(crate) fn mul_factor(&mut self, factor: &BetFactor) {
        match self {
            Capital::Exact(v) => {
                if factor.exact.is_zero() {
                    *v = BigRational::zero();
                } else if !v.is_zero() && !factor.is_one {
                    *v *= &factor.exact;
                }
            }
            Capital::Log2(l) => {
                *l = l.add(factor.log2);
            }
        }
    }
}

impl fmt::Display for Capital {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capital::Exact(v) => write!(f, "{}/{}", v.numer(), v.denom()),
            Capital::Log2(l) => write!(f, "2^{l}"),
        }
    }
}

fn log2_of(value: &BigRational) -> LogCapital {
    match log2_rational(value) {
        Some(v) => LogCapital::Finite(v),
        None => LogCapital::Bankrupt,
    }
}

/// `k * p` for one (state, symbol) pair in both representations.
#[derive(Debug, Clone)]
pub(crate) struct BetFactor {
    pub exact: BigRational,
    pub log2: LogCapital,
    pub is_one: bool,
}

impl BetFactor {
    pub fn new(k: usize, p: &BigRational) -> Self {
        let exact = p * BigRational::from_integer(k.into());
        let log2 = if exact.is_negative() {
            // Only reachable for specs that failed validation.
            LogCapital::Bankrupt
        } else {
            log2_of(&exact)
        };
        let is_one = exact == BigRational::from_integer(1.into());
        BetFactor { exact, log2, is_one }
    }
}

/// `c * k * p` in the representation of `c`.
pub fn capital_mul_bet(c: &Capital, k: usize, p: &BigRational) -> Capital {
    c.mul_bet(k, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn uniform_bet_preserves_capital() {
        let c = Capital::new(&int(1), CapitalMode::Exact);
        assert_eq!(capital_mul_bet(&c, 2, &ratio(1, 2)), Capital::Exact(int(1)));
    }

    #[test]
    fn deterministic_win_doubles() {
        let c = Capital::new(&int(1), CapitalMode::Exact);
        assert_eq!(capital_mul_bet(&c, 2, &int(1)), Capital::Exact(int(2)));
        let l = Capital::Log2(LogCapital::Finite(3.0));
        assert_eq!(capital_mul_bet(&l, 2, &int(1)), Capital::Log2(LogCapital::Finite(4.0)));
    }

    #[test]
    fn zero_bet_bankrupts_and_bankruptcy_absorbs() {
        let l = Capital::Log2(LogCapital::Finite(5.0));
        let b = capital_mul_bet(&l, 2, &int(0));
        assert_eq!(b, Capital::Log2(LogCapital::Bankrupt));
        assert!(capital_mul_bet(&b, 2, &int(1)).is_bankrupt());

        let e = capital_mul_bet(&Capital::new(&int(4), CapitalMode::Exact), 3, &int(0));
        assert!(e.is_bankrupt());
        assert!(capital_mul_bet(&e, 3, &int(1)).is_bankrupt());
    }

    #[test]
    fn conversion_exact_on_powers_of_two() {
        let c = Capital::new(&crate::rational::pow2(-12), CapitalMode::Exact);
        assert_eq!(c.log2(), LogCapital::Finite(-12.0));
    }

    #[test]
    fn conversion_relative_error_small() {
        let v = ratio(7, 3);
        let got = Capital::new(&v, CapitalMode::Exact).log2().value().unwrap();
        let want = (7.0f64 / 3.0).log2();
        assert!(((got - want) / want).abs() < 1e-12);
    }

    #[test]
    fn mode_parses() {
        assert_eq!("exact".parse::<CapitalMode>().unwrap(), CapitalMode::Exact);
        assert_eq!("log2".parse::<CapitalMode>().unwrap(), CapitalMode::Log2);
        assert!("float".parse::<CapitalMode>().is_err());
    }
}
