//! Empirical evidence: dimension upper bounds, adversarial sweeps and the
//! cross-variant instability experiment.

mod estimate;
mod instability;
mod sweep;

use thiserror::Error;

use crate::constructions::ConstructionError;
use crate::engine::EngineError;
use crate::sequences::SequenceError;

pub use estimate::{estimate_predim_upper, DimensionReport, GamblerEstimate, SUCCESS_THRESHOLD};
pub use instability::{instability_experiment, InstabilityReport};
pub use sweep::{
    adversarial_sweep, adversarial_sweep_with, random_gambler, structured_candidates,
    write_runs_jsonl, SweepBudget, SweepReport, SweepRun, ADVERSARY_FAMILY,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// `-inf` as a JSON string, everything else as a number.
pub(crate) mod serde_exponent {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad exponent {t:?}"))),
        }
    }
}
