//! Symbol sequences: seeded random bits, files, and the prime-indexed parity
//! families built on top of them.

mod family;
mod file;
mod primes;
mod source;

use thiserror::Error;

pub use family::{
    expand_index, expand_variant_index, verify_family_source, verify_parity_structure,
    ExpansionSet, FamilyParams, FamilyVariant, ParityViolation, ViolationKind, MAX_FAMILY_H,
};
pub use file::{read_sequence, write_sequence, write_symbols, SEQUENCE_MAGIC};
pub use primes::{multiplicity, nth_prime, PrimeTable, DEFAULT_PRIME_COUNT};
pub use source::{
    prefix_cap_from_env, prng_source, SequenceSource, SliceReader, SourceDescriptor,
    SymbolReader, DEFAULT_PREFIX_CAP, PREFIX_CAP_ENV,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequenceError {
    #[error("sequence exhausted: index {index} requested but only {length} symbols exist")]
    Exhausted { index: u64, length: u64 },
    #[error("index {index} exceeds the retained-prefix cap of {cap} symbols")]
    PrefixCap { index: u64, cap: usize },
    #[error("prime index {requested} outside the table (supported 1..={max})")]
    PrimeIndex { requested: usize, max: usize },
    #[error("parity families need a binary inner sequence, got alphabet size {0}")]
    NotBinary(usize),
    #[error("h = {h} is not supported for variant {variant} (supported {min}..={max})")]
    UnsupportedH {
        h: usize,
        variant: FamilyVariant,
        min: usize,
        max: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed sequence file: {0}")]
    Format(String),
    #[error("sequence I/O failed: {0}")]
    Io(String),
}
