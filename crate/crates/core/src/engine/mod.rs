//! Running gamblers over sequences.

mod checks;
mod trace;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::capital::{BetFactor, Capital, CapitalMode, LogCapital};
use crate::gambler::{GamblerSpec, ValidationReport};
use crate::rational::{is_integer, log2_rational, pow_rational, to_i64};
use crate::sequences::{SequenceError, SymbolReader};

pub use checks::{
    check_martingale_property, check_speed_bounds, measure_speeds, positions,
    speed_bound_violation, SpeedProfile,
};
pub use trace::{
    compare_capital_modes, run_martingale, run_with, success_exponent, write_trajectory_csv, CapitalSample,
    GrowthExponent, ModeAgreement, RunOptions, RunTrace, TraceStep, DEFAULT_MAX_FULL_STEPS, EXPONENT_WINDOW, MODE_AGREEMENT_TOL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("gambler spec is invalid:\n{0}")]
    InvalidSpec(ValidationReport),
    #[error("gambler alphabet has {spec} symbols but the sequence has {source_size}")]
    AlphabetMismatch { spec: usize, source_size: usize },
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error("growth exponents need at least 100 steps, trace has {0}")]
    TraceTooShort(u64),
    #[error("k^((s-1)n) = {k}^({exponent}) is not an integer power; use log2 mode")]
    NonIntegerExponent { k: usize, exponent: String },
    #[error("s must be non-negative")]
    NegativeS,
}

/// Stepwise simulation of one gambler.
///
/// At step `n` the gambler bets with `beta(q_n)` on symbol `n`, then reads the
/// symbol vector under its heads and moves to `(t_{n+1}, q_{n+1})`. The bet is
/// fixed before symbol `n` is looked at.
pub struct Simulation<'a> {
    spec: &'a GamblerSpec,
    factors: Vec<Vec<BetFactor>>,
    t: usize,
    q: usize,
    n: u64,
    positions: Vec<u64>,
    capital: Capital,
    symbols: Vec<u8>,
}

/// What happened in one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepInfo {
    pub n: u64,
    pub positional_state: usize,
    pub betting_state: usize,
    pub realized: u8,
}

impl<'a> Simulation<'a> {
    pub fn new(spec: &'a GamblerSpec, mode: CapitalMode) -> Result<Self, EngineError> {
        let report = spec.validate();
        if !report.is_valid() {
            return Err(EngineError::InvalidSpec(report));
        }
        let k = spec.alphabet_size;
        let factors = spec
            .betting_states
            .iter()
            .map(|q| {
                q.bet
                    .weights()
                    .iter()
                    .map(|p| BetFactor::new(k, p))
                    .collect()
            })
            .collect();
        Ok(Simulation {
            spec,
            factors,
            t: spec.initial_positional,
            q: spec.initial_betting,
            n: 0,
            positions: vec![0; spec.trailing_heads()],
            capital: Capital::new(&spec.initial_capital, mode),
            symbols: vec![0; spec.head_count],
        })
    }

    pub fn spec(&self) -> &GamblerSpec {
        self.spec
    }

    /// Steps taken so far; also the leading head's position.
    pub fn steps(&self) -> u64 {
        self.n
    }

    /// Trailing-head positions `pi(n)`.
    pub fn positions(&self) -> &[u64] {
        &self.positions
    }

    pub fn positional_state(&self) -> usize {
        self.t
    }

    pub fn betting_state(&self) -> usize {
        self.q
    }

    /// `d_G` of the prefix read so far.
    pub fn capital(&self) -> &Capital {
        &self.capital
    }

    /// Symbols read at the last step, trailing heads first.
    pub fn last_symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn step<R: SymbolReader + ?Sized>(&mut self, src: &mut R) -> Result<StepInfo, EngineError> {
        let n = self.n;
        let q = self.q;
        let t = self.t;
        let realized = src.symbol(n)?;
        self.capital.mul_factor(&self.factors[q][realized as usize]);

        let trailing = self.positions.len();
        for i in 0..trailing {
            self.symbols[i] = src.symbol(self.positions[i])?;
        }
        self.symbols[trailing] = realized;
        let k = self.spec.alphabet_size;
        let index = self
            .symbols
            .iter()
            .fold(0usize, |acc, &s| acc * k + s as usize);

        self.q = self.spec.betting_states[q].transitions[index];
        let pos_state = &self.spec.positional_states[t];
        for (p, &moves) in self.positions.iter_mut().zip(&pos_state.move_bits) {
            *p += moves as u64;
        }
        self.t = pos_state.next;
        self.n += 1;
        Ok(StepInfo {
            n,
            positional_state: t,
            betting_state: q,
            realized,
        })
    }
}

/// `d^{(s)}` from `d`: multiplies by `k^{(s-1)n}`.
///
/// Exact capitals stay exact only when `(s-1)n` is an integer.
pub fn sgale_value(
    c: &Capital,
    s: &BigRational,
    n: u64,
    k: usize,
) -> Result<Capital, EngineError> {
    if s < &BigRational::zero() {
        return Err(EngineError::NegativeS);
    }
    let exponent = (s - BigRational::from_integer(1.into())) * BigRational::from_integer(n.into());
    match c {
        Capital::Exact(v) => {
            if !is_integer(&exponent) {
                return Err(EngineError::NonIntegerExponent {
                    k,
                    exponent: crate::rational::format_rational(&exponent),
                });
            }
            if v.is_zero() {
                return Ok(Capital::Exact(BigRational::zero()));
            }
            let e = to_i64(&exponent).expect("exponent fits in i64");
            let base = BigRational::from_integer(k.into());
            Ok(Capital::Exact(v * pow_rational(&base, e)))
        }
        Capital::Log2(l) => Ok(Capital::Log2(l.add(LogCapital::Finite(
            sgale_log2_shift(&exponent, k),
        )))),
    }
}

/// `(s-1) n log2 k` as a float.
pub(crate) fn sgale_log2_shift(exponent: &BigRational, k: usize) -> f64 {
    let log2k = log2_rational(&BigRational::from_integer(k.into())).expect("k >= 2");
    exponent.to_f64().expect("finite exponent") * log2k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, pow2, ratio};

    #[test]
    fn sgale_identity_at_one() {
        let c = Capital::Exact(ratio(7, 3));
        assert_eq!(sgale_value(&c, &int(1), 1234, 3).unwrap(), c);
        let l = Capital::Log2(LogCapital::Finite(2.5));
        assert_eq!(sgale_value(&l, &int(1), 99, 2).unwrap(), l);
    }

    #[test]
    fn sgale_log_shift() {
        let l = Capital::Log2(LogCapital::Finite(2.0));
        assert_eq!(
            sgale_value(&l, &ratio(9, 10), 10, 2).unwrap(),
            Capital::Log2(LogCapital::Finite(1.0))
        );
    }

    #[test]
    fn sgale_exact_needs_integer_exponent() {
        let c = Capital::Exact(pow2(10));
        assert_eq!(
            sgale_value(&c, &ratio(9, 10), 20, 2).unwrap(),
            Capital::Exact(pow2(8))
        );
        assert!(matches!(
            sgale_value(&c, &ratio(9, 10), 15, 2),
            Err(EngineError::NonIntegerExponent { .. })
        ));
        assert!(matches!(
            sgale_value(&c, &ratio(-1, 10), 15, 2),
            Err(EngineError::NegativeS)
        ));
    }

    #[test]
    fn sgale_of_bankrupt_stays_bankrupt() {
        let b = Capital::Log2(LogCapital::Bankrupt);
        assert!(sgale_value(&b, &ratio(1, 2), 10, 2).unwrap().is_bankrupt());
    }
}
