//! Averaging two gamblers into one with `h1 + h2 - 1` heads.
//!
//! The combined gambler runs both positional components side by side and
//! keeps `(q1, q2, alpha)` as its betting state, where `alpha` is the share
//! of capital notionally allocated to the first gambler, snapped to an
//! `r`-dyadic grid so the state space stays finite.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::dyadic::{resolution_for_epsilon, round_dyadic};
use super::{ConstructionError, MAX_TABLE_ENTRIES};
use crate::engine::Simulation;
use crate::gambler::{decode_symbols, encode_symbols, BettingState, GamblerSpec, PositionalState, ProbVector};
use crate::rational::ratio;
use crate::sequences::SymbolReader;
use crate::CapitalMode;

/// Betting-state label of the combined gambler.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CombinedState {
    pub q1: usize,
    pub q2: usize,
    pub alpha: BigRational,
}

#[derive(Debug, Clone)]
pub struct CombinedGambler {
    pub spec: GamblerSpec,
    /// `labels[q]` is the `(q1, q2, alpha)` triple behind betting state `q`.
    pub labels: Vec<CombinedState>,
    pub r: u32,
    pub h1: usize,
    pub h2: usize,
}

/// Next allocation ratio after the leading symbol's bets `b1`, `b2`.
/// Both zero means the capital is gone; reset to 1/2.
pub fn update_alpha(alpha: &BigRational, b1: &BigRational, b2: &BigRational, r: u32) -> BigRational {
    let first = alpha * b1;
    let total = &first + (BigRational::one() - alpha) * b2;
    if total.is_zero() {
        ratio(1, 2)
    } else {
        round_dyadic(&(first / total), r)
    }
}

/// Builds the averaged gambler for `epsilon`, with `r` the smallest
/// resolution satisfying `1 - 2^{1-r} >= 2^{-epsilon/2}`.
///
/// Only betting states reachable from `(q1_0, q2_0, 1/2)` are materialised.
pub fn average_gamblers(
    g1: &GamblerSpec,
    g2: &GamblerSpec,
    epsilon: &BigRational,
) -> Result<CombinedGambler, ConstructionError> {
    g1.clone().validated()?;
    g2.clone().validated()?;
    if g1.alphabet_size != g2.alphabet_size {
        return Err(ConstructionError::AlphabetMismatch(g1.alphabet_size, g2.alphabet_size));
    }
    if !g1.initial_capital.is_one() || !g2.initial_capital.is_one() {
        return Err(ConstructionError::InitialCapital);
    }
    let r = resolution_for_epsilon(epsilon)?;
    let k = g1.alphabet_size;
    let (m1, m2) = (g1.trailing_heads(), g2.trailing_heads());
    let heads = m1 + m2 + 1;
    let vectors = k
        .checked_pow(heads as u32)
        .filter(|&v| v <= MAX_TABLE_ENTRIES)
        .ok_or(ConstructionError::TooLarge)?;

    let t2_count = g2.positional_states.len();
    let mut positional_states = Vec::with_capacity(g1.positional_states.len() * t2_count);
    for s1 in &g1.positional_states {
        for s2 in &g2.positional_states {
            positional_states.push(PositionalState {
                next: s1.next * t2_count + s2.next,
                move_bits: s1.move_bits.iter().chain(&s2.move_bits).copied().collect(),
            });
        }
    }

    // Component symbol-vector indices for each combined index.
    let split: Vec<(usize, usize, usize)> = (0..vectors)
        .map(|index| {
            let symbols = decode_symbols(index, heads, k);
            let lead = symbols[heads - 1];
            let mut v1 = symbols[..m1].to_vec();
            v1.push(lead);
            let mut v2 = symbols[m1..m1 + m2].to_vec();
            v2.push(lead);
            (encode_symbols(&v1, k), encode_symbols(&v2, k), lead as usize)
        })
        .collect();

    let start = CombinedState {
        q1: g1.initial_betting,
        q2: g2.initial_betting,
        alpha: ratio(1, 2),
    };
    let mut ids: HashMap<CombinedState, usize> = HashMap::new();
    let mut labels = vec![start.clone()];
    ids.insert(start, 0);
    let mut betting_states = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let CombinedState { q1, q2, alpha } = labels[id].clone();
        let beta1 = &g1.betting_states[q1];
        let beta2 = &g2.betting_states[q2];
        let one_minus = BigRational::one() - &alpha;
        let bet = ProbVector::from_weights_unchecked(
            (0..k)
                .map(|b| &alpha * beta1.bet.weight(b) + &one_minus * beta2.bet.weight(b))
                .collect(),
        );
        // alpha' depends only on the leading symbol.
        let next_alpha: Vec<BigRational> = (0..k)
            .map(|b| update_alpha(&alpha, beta1.bet.weight(b), beta2.bet.weight(b), r))
            .collect();
        let mut transitions = Vec::with_capacity(vectors);
        for &(i1, i2, lead) in &split {
            let label = CombinedState {
                q1: beta1.transitions[i1],
                q2: beta2.transitions[i2],
                alpha: next_alpha[lead].clone(),
            };
            let next = match ids.get(&label) {
                Some(&existing) => existing,
                None => {
                    let fresh = labels.len();
                    if (fresh + 1).saturating_mul(vectors) > MAX_TABLE_ENTRIES {
                        return Err(ConstructionError::TooLarge);
                    }
                    ids.insert(label.clone(), fresh);
                    labels.push(label);
                    queue.push_back(fresh);
                    fresh
                }
            };
            transitions.push(next);
        }
        debug_assert_eq!(betting_states.len(), id);
        betting_states.push(BettingState { bet, transitions });
    }

    let spec = GamblerSpec {
        alphabet_size: k,
        head_count: heads,
        positional_states,
        betting_states,
        initial_positional: g1.initial_positional * t2_count + g2.initial_positional,
        initial_betting: 0,
        initial_capital: BigRational::one(),
    }
    .validated()?;
    Ok(CombinedGambler {
        spec,
        labels,
        r,
        h1: g1.head_count,
        h2: g2.head_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Trailing positions differ from the concatenation of the components'.
    Positions,
    /// The combined state's `(q1, q2)` differs from the components' states.
    Labels,
    /// The combined `alpha` differs from the independently rounded ratio.
    Alpha,
    /// `d != (d~1 + d~2) / 2`.
    ShadowSum,
    /// `d~j < (1 - 2^{1-r})^n d_j` for the given component.
    ShadowBound(u8),
    /// `d < 2^{-epsilon n} (d1 + d2)`.
    EpsilonBound,
}

/// First step at which a check failed; `n` is the prefix length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AveragingFailure {
    pub n: u64,
    pub kind: FailureKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AveragingCheck {
    /// Prefix lengths examined, `1..=steps`.
    pub steps: u64,
    /// Prefix lengths at which the epsilon bound was checked.
    pub epsilon_checked: u64,
    pub failure: Option<AveragingFailure>,
}

impl AveragingCheck {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// `a >= b` for non-negative rationals, without normalising.
fn ge(a_num: &BigInt, a_den: &BigInt, b_num: &BigInt, b_den: &BigInt) -> bool {
    a_num * b_den >= b_num * a_den
}

/// Runs `g1`, `g2` and their combination side by side over `n` symbols in
/// exact arithmetic and checks, after every prefix:
///
/// - positions and state labels agree with the components,
/// - `alpha` is the rounded allocation ratio,
/// - `d = (d~1 + d~2) / 2` with shadows `d~1 = 2 alpha d`, `d~2 = 2 (1 - alpha) d`,
/// - `d~j >= (1 - 2^{1-r})^n d_j`,
/// - `d >= 2^{-epsilon n} (d1 + d2)` once `n >= n_min`.
///
/// Stops at the first failure.
pub fn check_averaging_bound<R: SymbolReader + ?Sized>(
    g1: &GamblerSpec,
    g2: &GamblerSpec,
    combined: &CombinedGambler,
    epsilon: &BigRational,
    reader: &mut R,
    n: u64,
    n_min: u64,
) -> Result<AveragingCheck, ConstructionError> {
    if !epsilon.is_positive() {
        return Err(ConstructionError::Epsilon(crate::rational::format_rational(epsilon)));
    }
    let mut s1 = Simulation::new(g1, CapitalMode::Exact)?;
    let mut s2 = Simulation::new(g2, CapitalMode::Exact)?;
    let mut sc = Simulation::new(&combined.spec, CapitalMode::Exact)?;
    let r = combined.r;
    // (1 - 2^{1-r})^n = keep_num^n / keep_den^n with keep = (2^{r-1} - 1) / 2^{r-1}.
    let keep_den = BigInt::one() << (r - 1);
    let keep_num = &keep_den - 1;
    let mut keep_den_n = BigInt::one();
    let mut keep_num_n = BigInt::one();
    let eps_a: u64 = epsilon
        .numer()
        .try_into()
        .map_err(|_| ConstructionError::Epsilon("numerator too large".into()))?;
    let eps_b: u32 = epsilon
        .denom()
        .try_into()
        .map_err(|_| ConstructionError::Epsilon("denominator too large".into()))?;
    let two = BigInt::from(2);
    let mut report = AveragingCheck {
        steps: 0,
        epsilon_checked: 0,
        failure: None,
    };

    for step in 0..n {
        let label = &combined.labels[sc.betting_state()];
        let (q1, q2) = (s1.betting_state(), s2.betting_state());
        let alpha = label.alpha.clone();
        let b1 = g1.betting_states[q1].bet.clone();
        let b2 = g2.betting_states[q2].bet.clone();

        s1.step(reader)?;
        s2.step(reader)?;
        let info = sc.step(reader)?;
        let len = step + 1;
        report.steps = len;
        let fail = |kind| Some(AveragingFailure { n: len, kind });

        let concat: Vec<u64> = s1.positions().iter().chain(s2.positions()).copied().collect();
        if concat != sc.positions() {
            report.failure = fail(FailureKind::Positions);
            break;
        }
        let label = &combined.labels[sc.betting_state()];
        if label.q1 != s1.betting_state() || label.q2 != s2.betting_state() {
            report.failure = fail(FailureKind::Labels);
            break;
        }
        let b = info.realized as usize;
        if label.alpha != update_alpha(&alpha, b1.weight(b), b2.weight(b), r) {
            report.failure = fail(FailureKind::Alpha);
            break;
        }

        keep_num_n *= &keep_num;
        keep_den_n *= &keep_den;
        let d = sc.capital().exact().expect("exact mode");
        let d1 = s1.capital().exact().expect("exact mode");
        let d2 = s2.capital().exact().expect("exact mode");
        let shadow1 = d * &label.alpha * BigRational::from_integer(two.clone());
        let shadow2 = d * (BigRational::one() - &label.alpha) * BigRational::from_integer(two.clone());
        if (&shadow1 + &shadow2) / BigRational::from_integer(two.clone()) != *d {
            report.failure = fail(FailureKind::ShadowSum);
            break;
        }
        // shadow_j * keep_den^n >= keep_num^n * d_j
        for (j, (shadow, dj)) in [(&shadow1, d1), (&shadow2, d2)].into_iter().enumerate() {
            let lhs_num = shadow.numer() * &keep_den_n;
            let rhs_num = dj.numer() * &keep_num_n;
            if !ge(&lhs_num, shadow.denom(), &rhs_num, dj.denom()) {
                report.failure = fail(FailureKind::ShadowBound(j as u8 + 1));
                break;
            }
        }
        if report.failure.is_some() {
            break;
        }

        if len >= n_min {
            report.epsilon_checked += 1;
            // d^b 2^{a n} >= (d1 + d2)^b
            let sum = d1 + d2;
            let lhs_num = num_traits::pow(d.numer().clone(), eps_b as usize) << (eps_a * len) as usize;
            let lhs_den = num_traits::pow(d.denom().clone(), eps_b as usize);
            let rhs_num = num_traits::pow(sum.numer().clone(), eps_b as usize);
            let rhs_den = num_traits::pow(sum.denom().clone(), eps_b as usize);
            if !ge(&lhs_num, &lhs_den, &rhs_num, &rhs_den) {
                report.failure = fail(FailureKind::EpsilonBound);
                break;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{build_parity_gambler, build_variant_gambler};
    use crate::engine::{check_martingale_property, run_martingale};
    use crate::sequences::{prng_source, FamilyVariant, SequenceSource};

    #[test]
    fn alpha_update_rounds_toward_half() {
        let half = ratio(1, 2);
        assert_eq!(update_alpha(&half, &ratio(1, 1), &ratio(0, 1), 6), ratio(1, 1));
        assert_eq!(update_alpha(&half, &ratio(3, 10), &ratio(7, 10), 6), ratio(20, 64));
        assert_eq!(update_alpha(&half, &ratio(0, 1), &ratio(0, 1), 6), half);
    }

    #[test]
    fn self_average_matches_component() {
        let g = build_variant_gambler(2, FamilyVariant::FPrime).unwrap();
        let c = average_gamblers(&g, &g, &ratio(1, 10)).unwrap();
        assert_eq!(c.spec.head_count, 3);
        assert_eq!(c.r, 6);
        let mut x = SequenceSource::family(2, FamilyVariant::FPrime, prng_source(3)).unwrap();
        let a = run_martingale(&g, &mut x, 2000, CapitalMode::Exact).unwrap();
        let b = run_martingale(&c.spec, &mut x, 2000, CapitalMode::Exact).unwrap();
        // Unreachable table rows may split alpha; visited ones never do.
        for (sa, sb) in a.steps.iter().zip(&b.steps) {
            assert_eq!(sa.capital, sb.capital);
            assert_eq!(c.labels[sb.betting_state].alpha, ratio(1, 2));
        }
    }

    #[test]
    fn combined_is_fair_and_head_count_adds() {
        let g1 = build_parity_gambler(1).unwrap();
        let g2 = build_variant_gambler(2, FamilyVariant::FDoublePrime).unwrap();
        let c = average_gamblers(&g1, &g2, &ratio(1, 4)).unwrap();
        assert_eq!(c.spec.head_count, g1.head_count + g2.head_count - 1);
        assert!(check_martingale_property(&c.spec, 8));
    }

    #[test]
    fn variant_winners_satisfy_bound() {
        let gx = build_variant_gambler(2, FamilyVariant::FPrime).unwrap();
        let gz = build_variant_gambler(2, FamilyVariant::FDoublePrime).unwrap();
        let eps = ratio(1, 10);
        let c = average_gamblers(&gx, &gz, &eps).unwrap();
        for variant in [FamilyVariant::FPrime, FamilyVariant::FDoublePrime] {
            let mut src = SequenceSource::family(2, variant, prng_source(1)).unwrap();
            let check = check_averaging_bound(&gx, &gz, &c, &eps, &mut src, 1500, 20).unwrap();
            assert!(check.passed(), "{variant:?}: {:?}", check.failure);
            assert_eq!(check.epsilon_checked, 1500 - 19);
        }
    }

    #[test]
    fn rejects_mismatch_and_scaled_capital() {
        let g = GamblerSpec::uniform(2, 1);
        assert_eq!(
            average_gamblers(&g, &GamblerSpec::uniform(3, 1), &ratio(1, 10)).unwrap_err(),
            ConstructionError::AlphabetMismatch(2, 3)
        );
        let mut rich = g.clone();
        rich.initial_capital = ratio(2, 1);
        assert_eq!(
            average_gamblers(&g, &rich, &ratio(1, 10)).unwrap_err(),
            ConstructionError::InitialCapital
        );
        assert!(average_gamblers(&g, &g, &ratio(1, 1)).is_err());
    }
}
