//! Multihead finite-state gamblers and the sequences that separate them.
//!
//! The crate is organised bottom-up:
//!
//! - [`gambler`] and [`capital`]: gambler specifications, validation, and
//!   exact or log-domain capital.
//! - [`engine`]: simulation of a gambler over a sequence prefix, s-gale
//!   values, growth exponents, and brute-force structural checks.
//! - [`sequences`]: primes, seeded sources, the parity families and their
//!   expansion oracle, and the packed file format.
//! - [`constructions`]: the explicit winning gamblers and the averaging
//!   combinator.
//! - [`analysis`]: empirical dimension bounds, adversarial sweeps, and the
//!   cross-variant instability experiment.

pub mod analysis;
pub mod capital;
pub mod constructions;
pub mod engine;
pub mod gambler;
pub mod rational;
pub mod sequences;

pub use capital::{capital_mul_bet, Capital, CapitalMode, LogCapital};
pub use gambler::{validate_gambler, Alphabet, GamblerSpec, ProbVector, ValidationReport};
pub use sequences::{FamilyVariant, SequenceSource};
