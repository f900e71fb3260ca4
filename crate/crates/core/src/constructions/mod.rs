//! Explicit gamblers: block-schedule parity winners and the averaging
//! combinator.

mod averaging;
mod block;
mod dyadic;

use thiserror::Error;

use crate::engine::EngineError;
use crate::gambler::SpecError;
use crate::sequences::{FamilyVariant, SequenceError};

pub use averaging::{
    average_gamblers, check_averaging_bound, update_alpha, AveragingCheck, AveragingFailure, CombinedGambler,
    CombinedState, FailureKind,
};
pub use block::{
    block_length, build_parity_gambler, build_variant_gambler, family_schedule, BlockSchedule,
};
pub use dyadic::{resolution_for_epsilon, round_dyadic, DyadicGrid};

/// Upper bound on `|Q| * k^h` for materialised transition tables.
pub const MAX_TABLE_ENTRIES: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructionError {
    #[error("h = {h} is outside the supported range {min}..={max}")]
    UnsupportedH { h: usize, min: usize, max: usize },
    #[error("variant {} has no dedicated gambler here", .0.name())]
    Variant(FamilyVariant),
    #[error("bad block schedule: {0}")]
    Schedule(String),
    #[error("transition table would exceed {MAX_TABLE_ENTRIES} entries")]
    TooLarge,
    #[error("epsilon must be a rational in (0, 1), got {0}")]
    Epsilon(String),
    #[error("gamblers use alphabets of size {0} and {1}")]
    AlphabetMismatch(usize, usize),
    #[error("averaging needs initial capital 1 for both gamblers")]
    InitialCapital,
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}
