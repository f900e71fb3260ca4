//! Block-schedule parity gamblers.
//!
//! The positional component cycles through `L` states, one per offset in a
//! block of `L` symbols. Trailing head `i` advances at offsets
//! `0..advances[i]`, so after `q` full blocks it sits at `q * advances[i]`.
//! At the last offset of a block the betting component reads the trailing
//! symbols, records their parity, and at the next offset (the block
//! boundary) stakes everything on that parity. Every other bet is uniform.
//!
//! Betting states: `0..L` are the neutral offsets, `L` and `L + 1` are the
//! boundary states betting on 0 and on 1.

use crate::gambler::{BettingState, GamblerSpec, PositionalState, ProbVector};
use crate::sequences::{nth_prime, FamilyParams, FamilyVariant, MAX_FAMILY_H};

use super::ConstructionError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSchedule {
    /// Block length `L >= 2`.
    pub period: u64,
    /// Per trailing head, advances per block (`0..=L`).
    pub advances: Vec<u64>,
    /// Trailing heads whose symbols enter the parity.
    pub parity_heads: Vec<usize>,
    /// Added to the parity before betting; 1 bets on the complement.
    pub polarity: u8,
}

impl BlockSchedule {
    pub fn head_count(&self) -> usize {
        self.advances.len() + 1
    }

    pub fn build(&self) -> Result<GamblerSpec, ConstructionError> {
        let period = self.period as usize;
        if period < 2 {
            return Err(ConstructionError::Schedule(format!(
                "block length {period} < 2"
            )));
        }
        if let Some(&a) = self.advances.iter().find(|&&a| a > self.period) {
            return Err(ConstructionError::Schedule(format!(
                "head advances {a} times in a block of {period}"
            )));
        }
        if let Some(&i) = self.parity_heads.iter().find(|&&i| i >= self.advances.len()) {
            return Err(ConstructionError::Schedule(format!(
                "parity head {i} does not exist"
            )));
        }
        if self.polarity > 1 {
            return Err(ConstructionError::Schedule("polarity must be 0 or 1".into()));
        }
        let heads = self.head_count();
        let vectors = 2usize
            .checked_pow(heads as u32)
            .ok_or(ConstructionError::TooLarge)?;

        let positional_states = (0..period)
            .map(|offset| PositionalState {
                next: (offset + 1) % period,
                move_bits: self
                    .advances
                    .iter()
                    .map(|&a| (offset as u64) < a)
                    .collect(),
            })
            .collect();

        let bet_zero = period;
        let bet_one = period + 1;
        let mut betting_states = Vec::with_capacity(period + 2);
        for offset in 0..period {
            let transitions = if offset + 1 < period {
                vec![offset + 1; vectors]
            } else {
                (0..vectors)
                    .map(|index| {
                        if self.parity_of(index, heads) == 0 {
                            bet_zero
                        } else {
                            bet_one
                        }
                    })
                    .collect()
            };
            betting_states.push(BettingState {
                bet: ProbVector::uniform(2),
                transitions,
            });
        }
        for symbol in 0..2 {
            betting_states.push(BettingState {
                bet: ProbVector::point(2, symbol),
                transitions: vec![1; vectors],
            });
        }

        GamblerSpec {
            alphabet_size: 2,
            head_count: heads,
            positional_states,
            betting_states,
            initial_positional: 0,
            initial_betting: 0,
            initial_capital: num_rational::BigRational::from_integer(1.into()),
        }
        .validated()
        .map_err(ConstructionError::from)
    }

    /// Parity bet chosen for a symbol vector read at the last block offset.
    fn parity_of(&self, index: usize, heads: usize) -> u8 {
        // Trailing head i is digit i from the most significant end.
        let bit = |i: usize| ((index >> (heads - 1 - i)) & 1) as u8;
        self.parity_heads
            .iter()
            .fold(self.polarity, |acc, &i| acc ^ bit(i))
    }
}

/// Schedule reading `q * p_k` for each `k` in the variant's parity range.
pub fn family_schedule(h: usize, variant: FamilyVariant) -> Result<BlockSchedule, ConstructionError> {
    let params = FamilyParams::new(h, variant)?;
    let advances = params.parity_primes.clone();
    Ok(BlockSchedule {
        period: params.period,
        parity_heads: (0..advances.len()).collect(),
        advances,
        polarity: 0,
    })
}

/// The `(h+1)`-head gambler that wins every boundary bet on `F_{h+1}(S)`.
///
/// Trailing head `k` runs at speed `p_k / p_{h+1}`. Its log2 capital after
/// `n` symbols of any `F_{h+1}(S)` is `ceil(n / p_{h+1}) - 1`.
pub fn build_parity_gambler(h: usize) -> Result<GamblerSpec, ConstructionError> {
    if h == 0 || h > MAX_FAMILY_H {
        return Err(ConstructionError::UnsupportedH { h, min: 1, max: MAX_FAMILY_H });
    }
    family_schedule(h, FamilyVariant::F)?.build()
}

/// The `h`-head gambler for `F'_{h+1}` (trailing speeds `p_1..p_{h-1}`
/// over `p_{h+1}`) or `F''_{h+1}` (`p_2..p_h` over `p_{h+1}`).
pub fn build_variant_gambler(
    h: usize,
    variant: FamilyVariant,
) -> Result<GamblerSpec, ConstructionError> {
    if variant == FamilyVariant::F {
        return Err(ConstructionError::Variant(variant));
    }
    if !(2..=MAX_FAMILY_H).contains(&h) {
        return Err(ConstructionError::UnsupportedH { h, min: 2, max: MAX_FAMILY_H });
    }
    family_schedule(h, variant)?.build()
}

/// `p_{h+1}`, the block length of the `h` family.
pub fn block_length(h: usize) -> Result<u64, ConstructionError> {
    Ok(nth_prime(h + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{check_martingale_property, measure_speeds, positions};
    use num_rational::Ratio;

    #[test]
    fn parity_gambler_shape() {
        let g = build_parity_gambler(2).unwrap();
        assert_eq!(g.head_count, 3);
        assert_eq!(g.positional_states.len(), 5);
        assert_eq!(g.betting_states.len(), 7);
        assert!(g.validate().is_valid());
        assert!(check_martingale_property(&g, 10));
    }

    #[test]
    fn parity_gambler_heads() {
        let g = build_parity_gambler(2).unwrap();
        assert_eq!(positions(&g, 0), vec![0, 0]);
        assert_eq!(positions(&g, 5), vec![2, 3]);
        assert_eq!(positions(&g, 4), vec![2, 3]);
        assert_eq!(positions(&g, 9), vec![4, 6]);
        assert_eq!(
            measure_speeds(&g).speeds,
            vec![Ratio::new(2, 5), Ratio::new(3, 5)]
        );
        let g3 = build_parity_gambler(3).unwrap();
        assert_eq!(
            measure_speeds(&g3).speeds,
            vec![Ratio::new(2, 7), Ratio::new(3, 7), Ratio::new(5, 7)]
        );
    }

    #[test]
    fn variant_gamblers_drop_one_head() {
        let x = build_variant_gambler(2, FamilyVariant::FPrime).unwrap();
        let z = build_variant_gambler(2, FamilyVariant::FDoublePrime).unwrap();
        assert_eq!(x.head_count, 2);
        assert_eq!(measure_speeds(&x).speeds, vec![Ratio::new(2, 5)]);
        assert_eq!(measure_speeds(&z).speeds, vec![Ratio::new(3, 5)]);
        let x3 = build_variant_gambler(3, FamilyVariant::FPrime).unwrap();
        assert_eq!(
            measure_speeds(&x3).speeds,
            vec![Ratio::new(2, 7), Ratio::new(3, 7)]
        );
    }

    #[test]
    fn unsupported_arguments() {
        assert!(matches!(build_parity_gambler(0), Err(ConstructionError::UnsupportedH { .. })));
        assert!(matches!(build_parity_gambler(9), Err(ConstructionError::UnsupportedH { .. })));
        assert!(matches!(
            build_variant_gambler(1, FamilyVariant::FPrime),
            Err(ConstructionError::UnsupportedH { .. })
        ));
        assert!(matches!(
            build_variant_gambler(2, FamilyVariant::F),
            Err(ConstructionError::Variant(FamilyVariant::F))
        ));
    }

    #[test]
    fn schedule_rejects_bad_shapes() {
        let bad = BlockSchedule { period: 1, advances: vec![], parity_heads: vec![], polarity: 0 };
        assert!(bad.build().is_err());
        let bad = BlockSchedule { period: 3, advances: vec![4], parity_heads: vec![0], polarity: 0 };
        assert!(bad.build().is_err());
        let bad = BlockSchedule { period: 3, advances: vec![1], parity_heads: vec![1], polarity: 0 };
        assert!(bad.build().is_err());
    }
}
