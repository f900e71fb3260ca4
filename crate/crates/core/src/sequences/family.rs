//! Prime-indexed parity families.
//!
//! With `P = p_{h+1}`, index `q*P + r` of the output copies inner symbol
//! `q*(P-1) + r` when `r > 0`. When `r = 0` and `q >= 1` it is the parity of
//! the output at `q*p_k` over the variant's range of `k`: `1..=h` for `F`,
//! `1..=h-1` for `F'`, `2..=h` for `F''`. Index 0 copies inner index 0.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::primes::nth_prime;
use super::source::SequenceSource;
use super::SequenceError;

/// Largest supported `h`; `p_9 = 23` is the widest block.
pub const MAX_FAMILY_H: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyVariant {
    #[serde(rename = "F")]
    F,
    #[serde(rename = "Fprime")]
    FPrime,
    #[serde(rename = "Fdoubleprime")]
    FDoublePrime,
}

impl FamilyVariant {
    pub fn name(self) -> &'static str {
        match self {
            FamilyVariant::F => "F",
            FamilyVariant::FPrime => "Fprime",
            FamilyVariant::FDoublePrime => "Fdoubleprime",
        }
    }

    /// Prime indices `k` whose `q*p_k` entries feed the parity bit.
    pub fn parity_range(self, h: usize) -> std::ops::RangeInclusive<usize> {
        match self {
            FamilyVariant::F => 1..=h,
            FamilyVariant::FPrime => 1..=h.saturating_sub(1),
            FamilyVariant::FDoublePrime => 2..=h,
        }
    }

    pub fn min_h(self) -> usize {
        match self {
            FamilyVariant::F => 1,
            FamilyVariant::FPrime | FamilyVariant::FDoublePrime => 2,
        }
    }
}

impl fmt::Display for FamilyVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "F" | "f" => Ok(FamilyVariant::F),
            "Fprime" | "fprime" | "F'" => Ok(FamilyVariant::FPrime),
            "Fdoubleprime" | "fdoubleprime" | "F''" => Ok(FamilyVariant::FDoublePrime),
            other => Err(format!(
                "unknown family variant {other:?} (F, Fprime, Fdoubleprime)"
            )),
        }
    }
}

/// Resolved constants for one `(h, variant)` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyParams {
    pub h: usize,
    pub variant: FamilyVariant,
    /// `p_{h+1}`
    pub period: u64,
    /// `p_k` for `k` in the variant's parity range.
    pub parity_primes: Vec<u64>,
}

impl FamilyParams {
    pub fn new(h: usize, variant: FamilyVariant) -> Result<Self, SequenceError> {
        if h < variant.min_h() || h > MAX_FAMILY_H {
            return Err(SequenceError::UnsupportedH {
                h,
                variant,
                min: variant.min_h(),
                max: MAX_FAMILY_H,
            });
        }
        let period = nth_prime(h + 1)?;
        let parity_primes = variant
            .parity_range(h)
            .map(nth_prime)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FamilyParams {
            h,
            variant,
            period,
            parity_primes,
        })
    }

    /// Inner index copied to output `index`, or `None` for a parity index.
    #[inline]
    pub fn source_index(&self, index: u64) -> Option<u64> {
        if index == 0 {
            return Some(0);
        }
        let q = index / self.period;
        let r = index % self.period;
        (r > 0).then(|| q * (self.period - 1) + r)
    }
}

/// Inner indices that an output index depends on after cancellation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionSet {
    pub target_index: u64,
    pub source_indices: BTreeSet<u64>,
}

impl ExpansionSet {
    /// Parity of the inner symbols at the source indices.
    pub fn evaluate(&self, inner: &[u8]) -> u8 {
        self.source_indices
            .iter()
            .fold(0, |acc, &i| acc ^ inner[i as usize])
    }
}

/// Expansion for the `F` family.
pub fn expand_index(h: usize, index: u64) -> Result<ExpansionSet, SequenceError> {
    expand_variant_index(h, FamilyVariant::F, index)
}

/// Expands the whole parity recursion tree under `index`, counting how many
/// leaves land on each inner index, and keeps the indices reached an odd
/// number of times.
pub fn expand_variant_index(
    h: usize,
    variant: FamilyVariant,
    index: u64,
) -> Result<ExpansionSet, SequenceError> {
    let params = FamilyParams::new(h, variant)?;
    let mut leaves: HashMap<u64, u32> = HashMap::new();
    walk(&params, index, &mut leaves);
    let source_indices = leaves
        .into_iter()
        .filter(|&(_, count)| count % 2 == 1)
        .map(|(i, _)| i)
        .collect();
    Ok(ExpansionSet {
        target_index: index,
        source_indices,
    })
}

fn walk(params: &FamilyParams, index: u64, leaves: &mut HashMap<u64, u32>) {
    match params.source_index(index) {
        Some(leaf) => *leaves.entry(leaf).or_default() += 1,
        None => {
            let q = index / params.period;
            for &p in &params.parity_primes {
                walk(params, q * p, leaves);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// A copied symbol differs from its inner source.
    Copy { index: u64 },
    /// A parity index disagrees with the parity of its referenced entries.
    Recurrence,
    /// A parity index disagrees with its cancelled expansion over the inner bits.
    Expansion,
}

/// First block `q` at which a claimed family sequence breaks its definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParityViolation {
    pub q: u64,
    pub kind: ViolationKind,
}

impl fmt::Display for ParityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::Copy { index } => {
                write!(f, "block q={}: copied symbol at index {index} differs", self.q)
            }
            ViolationKind::Recurrence => {
                write!(f, "block q={}: parity recurrence violated", self.q)
            }
            ViolationKind::Expansion => {
                write!(f, "block q={}: disagrees with the expanded parity", self.q)
            }
        }
    }
}

/// Checks `family` against `inner` for every block `q` with `q * p_{h+1} <= n`:
/// the copy rule inside each block, the parity recurrence at the block
/// boundary, and the independently expanded parity over inner symbols.
///
/// Both slices must already cover every index the check touches.
pub fn verify_parity_structure(
    h: usize,
    variant: FamilyVariant,
    family: &[u8],
    inner: &[u8],
    n: u64,
) -> Result<Result<(), ParityViolation>, SequenceError> {
    let params = FamilyParams::new(h, variant)?;
    let period = params.period;
    let last = n.min(family.len().saturating_sub(1) as u64);
    // Copy indices map monotonically onto inner indices.
    let need_inner = params
        .source_index(last)
        .or_else(|| params.source_index(last.saturating_sub(1)))
        .unwrap_or(0);
    if (inner.len() as u64) <= need_inner {
        return Err(SequenceError::Exhausted {
            index: need_inner,
            length: inner.len() as u64,
        });
    }
    if family.first() != inner.first() {
        return Ok(Err(ParityViolation {
            q: 0,
            kind: ViolationKind::Copy { index: 0 },
        }));
    }
    let mut q = 0u64;
    while q * period <= last {
        let start = q * period;
        if q >= 1 {
            let value = family[start as usize];
            let recurrence = params
                .parity_primes
                .iter()
                .fold(0u8, |acc, &p| acc ^ family[(q * p) as usize]);
            if value != recurrence {
                return Ok(Err(ParityViolation {
                    q,
                    kind: ViolationKind::Recurrence,
                }));
            }
            let expansion = expand_variant_index(h, variant, start)?;
            if value != expansion.evaluate(inner) {
                return Ok(Err(ParityViolation {
                    q,
                    kind: ViolationKind::Expansion,
                }));
            }
        }
        for r in 1..period {
            let index = start + r;
            if index > last {
                break;
            }
            let source = params.source_index(index).expect("r > 0 copies");
            if family[index as usize] != inner[source as usize] {
                return Ok(Err(ParityViolation {
                    q,
                    kind: ViolationKind::Copy { index },
                }));
            }
        }
        q += 1;
    }
    Ok(Ok(()))
}

/// Runs [`verify_parity_structure`] on a family source's own output, emitting
/// through index `n` first.
pub fn verify_family_source(
    source: &mut SequenceSource,
    n: u64,
) -> Result<Result<(), ParityViolation>, SequenceError> {
    let params = source
        .family_params()
        .cloned()
        .ok_or_else(|| SequenceError::InvalidArgument("not a family source".into()))?;
    source.ensure(n + 1)?;
    let inner = source.inner().expect("family sources have an inner source");
    verify_parity_structure(params.h, params.variant, source.prefix(), inner.prefix(), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::prng_source;

    fn set(items: &[u64]) -> BTreeSet<u64> {
        items.iter().copied().collect()
    }

    #[test]
    fn worked_example_cancels_index_29() {
        assert_eq!(expand_index(2, 150).unwrap().source_indices, set(&[20, 44]));
    }

    #[test]
    fn small_hand_expansions() {
        assert_eq!(expand_index(2, 25).unwrap().source_indices, set(&[4, 8]));
        assert_eq!(expand_index(2, 7).unwrap().source_indices, set(&[6]));
        assert_eq!(expand_index(2, 5).unwrap().source_indices, set(&[2, 3]));
        assert_eq!(expand_index(2, 0).unwrap().source_indices, set(&[0]));
    }

    #[test]
    fn variant_boundaries_reference_one_index_for_h2() {
        // F'_3[5q] = F'_3[2q], F''_3[5q] = F''_3[3q]
        let x = expand_variant_index(2, FamilyVariant::FPrime, 35).unwrap();
        let direct = expand_variant_index(2, FamilyVariant::FPrime, 14).unwrap();
        assert_eq!(x.source_indices, direct.source_indices);
        let z = expand_variant_index(2, FamilyVariant::FDoublePrime, 35).unwrap();
        let direct = expand_variant_index(2, FamilyVariant::FDoublePrime, 21).unwrap();
        assert_eq!(z.source_indices, direct.source_indices);
    }

    #[test]
    fn generator_matches_hand_values() {
        let mut inner = prng_source(11);
        let s = inner.take_prefix(200).unwrap().to_vec();
        let mut f = SequenceSource::family(2, FamilyVariant::F, prng_source(11)).unwrap();
        assert_eq!(f.get(150).unwrap(), s[20] ^ s[44]);
        assert_eq!(f.get(7).unwrap(), s[6]);
        assert_eq!(f.get(5).unwrap(), s[2] ^ s[3]);
        assert_eq!(f.get(0).unwrap(), s[0]);

        let mut fp = SequenceSource::family(2, FamilyVariant::FPrime, prng_source(11)).unwrap();
        let mut fpp =
            SequenceSource::family(2, FamilyVariant::FDoublePrime, prng_source(11)).unwrap();
        for q in 1..30u64 {
            assert_eq!(fp.get(5 * q).unwrap(), fp.get(2 * q).unwrap());
            assert_eq!(fpp.get(5 * q).unwrap(), fpp.get(3 * q).unwrap());
        }
    }

    #[test]
    fn unsupported_parameters() {
        assert!(FamilyParams::new(0, FamilyVariant::F).is_err());
        assert!(FamilyParams::new(9, FamilyVariant::F).is_err());
        assert!(FamilyParams::new(1, FamilyVariant::FDoublePrime).is_err());
        assert!(FamilyParams::new(1, FamilyVariant::FPrime).is_err());
        assert_eq!(FamilyParams::new(8, FamilyVariant::F).unwrap().period, 23);
    }

    #[test]
    fn non_binary_inner_is_rejected() {
        let inner = SequenceSource::constant(2, 3);
        assert_eq!(
            SequenceSource::family(2, FamilyVariant::F, inner).unwrap_err(),
            SequenceError::NotBinary(3)
        );
    }

    #[test]
    fn verification_accepts_generated_sequences() {
        for h in 1..=4 {
            let mut f = SequenceSource::family(h, FamilyVariant::F, prng_source(5)).unwrap();
            assert_eq!(verify_family_source(&mut f, 3000).unwrap(), Ok(()));
        }
        let mut f = SequenceSource::family(3, FamilyVariant::FDoublePrime, prng_source(5)).unwrap();
        assert_eq!(verify_family_source(&mut f, 3000).unwrap(), Ok(()));
    }

    #[test]
    fn verification_reports_first_flipped_block() {
        let mut f = SequenceSource::family(2, FamilyVariant::F, prng_source(1)).unwrap();
        f.ensure(1001).unwrap();
        let inner = f.inner().unwrap().prefix().to_vec();

        let mut copy_flip = f.prefix().to_vec();
        copy_flip[503] ^= 1;
        let v = verify_parity_structure(2, FamilyVariant::F, &copy_flip, &inner, 1000)
            .unwrap()
            .unwrap_err();
        // No boundary up to 1000 references 503, so only the copy rule sees it.
        assert_eq!(v.q, 100);
        assert_eq!(v.kind, ViolationKind::Copy { index: 503 });

        let mut parity_flip = f.prefix().to_vec();
        parity_flip[40] ^= 1;
        let v = verify_parity_structure(2, FamilyVariant::F, &parity_flip, &inner, 1000)
            .unwrap()
            .unwrap_err();
        assert_eq!(v, ParityViolation { q: 8, kind: ViolationKind::Recurrence });
    }
}
