//! Multihead finite-state gambler specifications.
//!
//! A gambler with `h` heads is a positional component `(T, delta_T, mu)` that
//! moves `h - 1` trailing heads obliviously, and a betting component
//! `(Q, delta_Q, beta)` that reads the `h` symbols under the heads (trailing
//! heads first, leading head last) after each bet. Symbols are indices
//! `0..k`, and a symbol vector is addressed by its base-`k` value with the
//! first trailing head as the most significant digit.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{format_rational, serde_rational, serde_rational_vec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub const BINARY: Alphabet = Alphabet { size: 2 };

    pub fn new(size: usize) -> Result<Self, SpecError> {
        if size < 2 {
            return Err(SpecError::AlphabetTooSmall(size));
        }
        if size > 256 {
            return Err(SpecError::AlphabetTooLarge(size));
        }
        Ok(Alphabet { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of symbol vectors read by an `h`-head gambler, `k^h`.
    pub fn vector_count(&self, heads: usize) -> Option<usize> {
        self.size.checked_pow(heads as u32)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SpecError {
    #[error("alphabet must have at least 2 symbols, got {0}")]
    AlphabetTooSmall(usize),
    #[error("alphabet sizes above 256 are not supported, got {0}")]
    AlphabetTooLarge(usize),
    #[error("probability vector has negative weight {weight} on symbol {symbol}")]
    NegativeWeight { symbol: usize, weight: String },
    #[error("probability vector sums to {0}, not 1")]
    BadSum(String),
    #[error("gambler spec is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error("malformed gambler file: {0}")]
    Format(String),
    #[error("cannot read or write gambler file: {0}")]
    Io(String),
}

/// A bet: a rational distribution over the alphabet.
///
/// Cloning is cheap; the weights are shared.
#[derive(Clone, PartialEq, Eq)]
pub struct ProbVector(Arc<[BigRational]>);

impl ProbVector {
    /// Validating constructor: non-negative weights summing to exactly 1.
    pub fn new(weights: Vec<BigRational>) -> Result<Self, SpecError> {
        for (symbol, w) in weights.iter().enumerate() {
            if w.is_negative() {
                return Err(SpecError::NegativeWeight {
                    symbol,
                    weight: format_rational(w),
                });
            }
        }
        let sum: BigRational = weights.iter().sum();
        if !sum.is_one() {
            return Err(SpecError::BadSum(format_rational(&sum)));
        }
        Ok(ProbVector(weights.into()))
    }

    /// Wraps weights without checking them. `validate_gambler` reports any
    /// problems later.
    pub fn from_weights_unchecked(weights: Vec<BigRational>) -> Self {
        ProbVector(weights.into())
    }

    pub fn uniform(k: usize) -> Self {
        let w = BigRational::new(1.into(), (k as i64).into());
        ProbVector(vec![w; k].into())
    }

    /// All weight on `symbol`.
    pub fn point(k: usize, symbol: usize) -> Self {
        let weights = (0..k)
            .map(|b| {
                if b == symbol {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            })
            .collect::<Vec<_>>();
        ProbVector(weights.into())
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.0
    }

    pub fn weight(&self, symbol: usize) -> &BigRational {
        &self.0[symbol]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for ProbVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(format_rational).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionalState {
    pub next: usize,
    /// One bit per trailing head; `true` advances that head after this step.
    pub move_bits: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BettingState {
    pub bet: ProbVector,
    /// Successor state for each symbol vector, indexed by its base-`k` value.
    pub transitions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GamblerSpec {
    pub alphabet_size: usize,
    pub head_count: usize,
    pub positional_states: Vec<PositionalState>,
    pub betting_states: Vec<BettingState>,
    pub initial_positional: usize,
    pub initial_betting: usize,
    pub initial_capital: BigRational,
}

impl GamblerSpec {
    pub fn trailing_heads(&self) -> usize {
        self.head_count.saturating_sub(1)
    }

    /// Index of a symbol vector in a transition table.
    pub fn encode_symbols(&self, symbols: &[u8]) -> usize {
        encode_symbols(symbols, self.alphabet_size)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_gambler(self)
    }

    /// Returns `self` if it passes validation.
    pub fn validated(self) -> Result<Self, SpecError> {
        let report = validate_gambler(&self);
        if report.is_valid() {
            Ok(self)
        } else {
            Err(SpecError::Invalid(report))
        }
    }

    /// A one-head-per-trailing-slot gambler that always bets uniformly and never
    /// moves its trailing heads. Its capital is constant.
    pub fn uniform(alphabet_size: usize, head_count: usize) -> Self {
        let vectors = alphabet_size.pow(head_count as u32);
        GamblerSpec {
            alphabet_size,
            head_count,
            positional_states: vec![PositionalState {
                next: 0,
                move_bits: vec![false; head_count.saturating_sub(1)],
            }],
            betting_states: vec![BettingState {
                bet: ProbVector::uniform(alphabet_size),
                transitions: vec![0; vectors],
            }],
            initial_positional: 0,
            initial_betting: 0,
            initial_capital: BigRational::one(),
        }
    }

    /// A single-head gambler that stakes everything on `symbol` forever.
    pub fn all_in(alphabet_size: usize, symbol: usize) -> Self {
        let mut spec = GamblerSpec::uniform(alphabet_size, 1);
        spec.betting_states[0].bet = ProbVector::point(alphabet_size, symbol);
        spec
    }

    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        let file: GamblerFile =
            serde_json::from_str(text).map_err(|e| SpecError::Format(e.to_string()))?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GamblerFile::from(self)).expect("gambler file serializes")
    }

    pub fn load(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpecError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), SpecError> {
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|e| SpecError::Io(format!("{}: {e}", path.display())))
    }
}

pub fn encode_symbols(symbols: &[u8], k: usize) -> usize {
    symbols
        .iter()
        .fold(0usize, |acc, &s| acc * k + s as usize)
}

pub fn decode_symbols(mut index: usize, heads: usize, k: usize) -> Vec<u8> {
    let mut out = vec![0u8; heads];
    for slot in out.iter_mut().rev() {
        *slot = (index % k) as u8;
        index /= k;
    }
    out
}

/// One violated invariant, with enough location to find it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    AlphabetTooSmall { size: usize },
    NoHeads,
    NoPositionalStates,
    NoBettingStates,
    PositionalNextOutOfRange { state: usize, next: usize },
    MoveBitsLength { state: usize, expected: usize, found: usize },
    BetLength { state: usize, expected: usize, found: usize },
    NegativeBet { state: usize, symbol: usize, weight: String },
    BetSum { state: usize, sum: String },
    TransitionTableSize { state: usize, expected: usize, found: usize },
    TransitionOutOfRange { state: usize, symbols: Vec<u8>, target: usize },
    InitialPositionalOutOfRange { state: usize },
    InitialBettingOutOfRange { state: usize },
    InitialCapitalNotPositive { capital: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            AlphabetTooSmall { size } => write!(f, "alphabet size {size} < 2"),
            NoHeads => write!(f, "head count must be positive"),
            NoPositionalStates => write!(f, "no positional states"),
            NoBettingStates => write!(f, "no betting states"),
            PositionalNextOutOfRange { state, next } => {
                write!(f, "positional state {state}: next {next} does not exist")
            }
            MoveBitsLength {
                state,
                expected,
                found,
            } => write!(
                f,
                "positional state {state}: {found} move bits, expected {expected}"
            ),
            BetLength {
                state,
                expected,
                found,
            } => write!(f, "betting state {state}: {found} bet weights, expected {expected}"),
            NegativeBet {
                state,
                symbol,
                weight,
            } => write!(f, "betting state {state}: negative weight {weight} on symbol {symbol}"),
            BetSum { state, sum } => write!(f, "betting state {state}: bet sums to {sum}"),
            TransitionTableSize {
                state,
                expected,
                found,
            } => write!(
                f,
                "betting state {state}: {found} transitions, expected {expected}"
            ),
            TransitionOutOfRange {
                state,
                symbols,
                target,
            } => write!(
                f,
                "betting state {state}: on symbols {symbols:?} goes to missing state {target}"
            ),
            InitialPositionalOutOfRange { state } => {
                write!(f, "initial positional state {state} does not exist")
            }
            InitialBettingOutOfRange { state } => {
                write!(f, "initial betting state {state} does not exist")
            }
            InitialCapitalNotPositive { capital } => {
                write!(f, "initial capital {capital} is not positive")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Lists every violated structural invariant. Never fails; an empty report
/// means the spec is a well-formed gambler.
pub fn validate_gambler(spec: &GamblerSpec) -> ValidationReport {
    let mut violations = Vec::new();
    let k = spec.alphabet_size;
    if k < 2 {
        violations.push(Violation::AlphabetTooSmall { size: k });
    }
    if spec.head_count == 0 {
        violations.push(Violation::NoHeads);
    }
    if spec.positional_states.is_empty() {
        violations.push(Violation::NoPositionalStates);
    }
    if spec.betting_states.is_empty() {
        violations.push(Violation::NoBettingStates);
    }

    let trailing = spec.trailing_heads();
    for (id, t) in spec.positional_states.iter().enumerate() {
        if t.next >= spec.positional_states.len() {
            violations.push(Violation::PositionalNextOutOfRange {
                state: id,
                next: t.next,
            });
        }
        if t.move_bits.len() != trailing {
            violations.push(Violation::MoveBitsLength {
                state: id,
                expected: trailing,
                found: t.move_bits.len(),
            });
        }
    }

    let vectors = k.checked_pow(spec.head_count as u32).unwrap_or(usize::MAX);
    for (id, q) in spec.betting_states.iter().enumerate() {
        let weights = q.bet.weights();
        if weights.len() != k {
            violations.push(Violation::BetLength {
                state: id,
                expected: k,
                found: weights.len(),
            });
        }
        for (symbol, w) in weights.iter().enumerate() {
            if w.is_negative() {
                violations.push(Violation::NegativeBet {
                    state: id,
                    symbol,
                    weight: format_rational(w),
                });
            }
        }
        let sum: BigRational = weights.iter().sum();
        if !sum.is_one() {
            violations.push(Violation::BetSum {
                state: id,
                sum: format_rational(&sum),
            });
        }
        if q.transitions.len() != vectors {
            violations.push(Violation::TransitionTableSize {
                state: id,
                expected: vectors,
                found: q.transitions.len(),
            });
        }
        for (index, &target) in q.transitions.iter().enumerate() {
            if target >= spec.betting_states.len() {
                violations.push(Violation::TransitionOutOfRange {
                    state: id,
                    symbols: decode_symbols(index, spec.head_count, k.max(1)),
                    target,
                });
            }
        }
    }

    if spec.initial_positional >= spec.positional_states.len() && !spec.positional_states.is_empty()
    {
        violations.push(Violation::InitialPositionalOutOfRange {
            state: spec.initial_positional,
        });
    }
    if spec.initial_betting >= spec.betting_states.len() && !spec.betting_states.is_empty() {
        violations.push(Violation::InitialBettingOutOfRange {
            state: spec.initial_betting,
        });
    }
    if !spec.initial_capital.is_positive() {
        violations.push(Violation::InitialCapitalNotPositive {
            capital: format_rational(&spec.initial_capital),
        });
    }
    ValidationReport { violations }
}

// On-disk layout. Ids must equal list positions.

#[derive(Debug, Serialize, Deserialize)]
struct GamblerFile {
    alphabet_size: usize,
    head_count: usize,
    positional_states: Vec<PositionalFile>,
    betting_states: Vec<BettingFile>,
    initial: InitialFile,
    #[serde(with = "serde_rational")]
    initial_capital: BigRational,
}

#[derive(Debug, Serialize, Deserialize)]
struct PositionalFile {
    id: usize,
    next: usize,
    move_bits: Vec<u8>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BettingFile {
    id: usize,
    #[serde(with = "serde_rational_vec")]
    bets: Vec<BigRational>,
    transitions: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct InitialFile {
    t: usize,
    q: usize,
}

impl From<&GamblerSpec> for GamblerFile {
    fn from(spec: &GamblerSpec) -> Self {
        GamblerFile {
            alphabet_size: spec.alphabet_size,
            head_count: spec.head_count,
            positional_states: spec
                .positional_states
                .iter()
                .enumerate()
                .map(|(id, t)| PositionalFile {
                    id,
                    next: t.next,
                    move_bits: t.move_bits.iter().map(|&b| b as u8).collect(),
                })
                .collect(),
            betting_states: spec
                .betting_states
                .iter()
                .enumerate()
                .map(|(id, q)| BettingFile {
                    id,
                    bets: q.bet.weights().to_vec(),
                    transitions: q.transitions.clone(),
                })
                .collect(),
            initial: InitialFile {
                t: spec.initial_positional,
                q: spec.initial_betting,
            },
            initial_capital: spec.initial_capital.clone(),
        }
    }
}

impl TryFrom<GamblerFile> for GamblerSpec {
    type Error = SpecError;

    fn try_from(file: GamblerFile) -> Result<Self, SpecError> {
        let mut positional_states = Vec::with_capacity(file.positional_states.len());
        for (pos, t) in file.positional_states.into_iter().enumerate() {
            if t.id != pos {
                return Err(SpecError::Format(format!(
                    "positional state at position {pos} has id {}",
                    t.id
                )));
            }
            let move_bits = t
                .move_bits
                .iter()
                .map(|&b| match b {
                    0 => Ok(false),
                    1 => Ok(true),
                    other => Err(SpecError::Format(format!(
                        "positional state {pos}: move bit {other} is not 0 or 1"
                    ))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            positional_states.push(PositionalState {
                next: t.next,
                move_bits,
            });
        }
        let mut betting_states = Vec::with_capacity(file.betting_states.len());
        for (pos, q) in file.betting_states.into_iter().enumerate() {
            if q.id != pos {
                return Err(SpecError::Format(format!(
                    "betting state at position {pos} has id {}",
                    q.id
                )));
            }
            betting_states.push(BettingState {
                bet: ProbVector::from_weights_unchecked(q.bets),
                transitions: q.transitions,
            });
        }
        Ok(GamblerSpec {
            alphabet_size: file.alphabet_size,
            head_count: file.head_count,
            positional_states,
            betting_states,
            initial_positional: file.initial.t,
            initial_betting: file.initial.q,
            initial_capital: file.initial_capital,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn alphabet_requires_two_symbols() {
        assert!(Alphabet::new(1).is_err());
        assert_eq!(Alphabet::new(2).unwrap().vector_count(3), Some(8));
    }

    #[test]
    fn prob_vector_checks_sum_and_sign() {
        assert!(ProbVector::new(vec![ratio(1, 2), ratio(1, 2)]).is_ok());
        assert!(matches!(
            ProbVector::new(vec![ratio(1, 2), ratio(1, 4)]),
            Err(SpecError::BadSum(_))
        ));
        assert!(matches!(
            ProbVector::new(vec![ratio(3, 2), ratio(-1, 2)]),
            Err(SpecError::NegativeWeight { symbol: 1, .. })
        ));
    }

    #[test]
    fn symbol_vector_encoding_is_big_endian() {
        assert_eq!(encode_symbols(&[1, 0, 1], 2), 5);
        assert_eq!(encode_symbols(&[2, 1], 3), 7);
        assert_eq!(decode_symbols(5, 3, 2), vec![1, 0, 1]);
        assert_eq!(decode_symbols(7, 2, 3), vec![2, 1]);
    }

    #[test]
    fn uniform_and_all_in_are_valid() {
        assert!(validate_gambler(&GamblerSpec::uniform(2, 3)).is_valid());
        assert!(validate_gambler(&GamblerSpec::all_in(3, 0)).is_valid());
    }

    #[test]
    fn short_bet_row_is_reported_by_state() {
        let mut spec = GamblerSpec::uniform(2, 1);
        spec.betting_states[0].bet = ProbVector::from_weights_unchecked(vec![ratio(1, 2), ratio(1, 4)]);
        let report = validate_gambler(&spec);
        assert_eq!(
            report.violations,
            vec![Violation::BetSum {
                state: 0,
                sum: "3/4".into()
            }]
        );
    }

    #[test]
    fn wrong_move_bit_length_is_reported_by_state() {
        let mut spec = GamblerSpec::uniform(2, 2);
        spec.positional_states[0].move_bits = vec![true, false];
        let report = validate_gambler(&spec);
        assert_eq!(
            report.violations,
            vec![Violation::MoveBitsLength {
                state: 0,
                expected: 1,
                found: 2
            }]
        );
    }

    #[test]
    fn bad_transition_names_the_symbol_vector() {
        let mut spec = GamblerSpec::uniform(2, 2);
        spec.betting_states[0].transitions[2] = 9;
        let report = validate_gambler(&spec);
        assert_eq!(
            report.violations,
            vec![Violation::TransitionOutOfRange {
                state: 0,
                symbols: vec![1, 0],
                target: 9
            }]
        );
    }

    #[test]
    fn collects_several_violations() {
        let mut spec = GamblerSpec::uniform(2, 2);
        spec.initial_capital = BigRational::zero();
        spec.positional_states[0].next = 3;
        spec.betting_states[0].transitions.pop();
        assert_eq!(validate_gambler(&spec).violations.len(), 3);
    }

    #[test]
    fn json_round_trip_uses_exact_rationals() {
        let mut spec = GamblerSpec::all_in(2, 1);
        spec.initial_capital = ratio(3, 7);
        let text = spec.to_json();
        assert!(text.contains("\"3/7\""));
        assert!(text.contains("\"1/1\""));
        assert_eq!(GamblerSpec::from_json(&text).unwrap(), spec);
    }

    #[test]
    fn json_rejects_float_rationals_and_misnumbered_ids() {
        let text = GamblerSpec::uniform(2, 1).to_json();
        let floaty = text.replace("\"1/2\"", "0.5");
        assert!(GamblerSpec::from_json(&floaty).is_err());
        let renumbered = text.replace("\"id\": 0", "\"id\": 4");
        assert!(matches!(
            GamblerSpec::from_json(&renumbered),
            Err(SpecError::Format(_))
        ));
    }
}
