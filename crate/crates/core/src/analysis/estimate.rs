use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::capital::CapitalMode;
use crate::engine::{run_with, success_exponent, RunOptions};
use crate::gambler::GamblerSpec;
use crate::sequences::SequenceSource;

/// Margin an exponent must clear before a gale counts as succeeding.
pub const SUCCESS_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamblerEstimate {
    pub gambler_id: String,
    pub h: usize,
    #[serde(with = "super::serde_exponent")]
    pub limsup: f64,
    #[serde(with = "super::serde_exponent")]
    pub liminf: f64,
    /// `1 - limsup`, clamped to `[0, 1]`.
    pub upper_bound: f64,
    /// Smallest `s` whose s-gale exponent clears the threshold, if any `s <= 1` does.
    pub succeeds_from: Option<f64>,
}

impl GamblerEstimate {
    /// Whether the `s`-gale of this gambler grows over the final window.
    pub fn succeeds_at(&self, s: f64) -> bool {
        self.limsup + s - 1.0 > SUCCESS_THRESHOLD
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub seq_id: String,
    pub n: u64,
    pub gamblers: Vec<GamblerEstimate>,
    /// Minimum over gamblers; 1 when there are none.
    pub aggregate: f64,
}

/// Upper bounds on the finite-state predimension of `src` witnessed by
/// each gambler over the first `n` symbols.
pub fn estimate_predim_upper(
    src: &mut SequenceSource,
    gamblers: &[(String, GamblerSpec)],
    n: u64,
) -> Result<DimensionReport, AnalysisError> {
    let seq_id = src.descriptor().to_string();
    let options = RunOptions::capital_only(CapitalMode::Log2);
    let mut estimates = Vec::with_capacity(gamblers.len());
    for (id, spec) in gamblers {
        let trace = run_with(spec, src, n, &options)?;
        let g = success_exponent(&trace, src.alphabet_size())?;
        let upper_bound = (1.0 - g.limsup_est).clamp(0.0, 1.0);
        let threshold_s = 1.0 + SUCCESS_THRESHOLD - g.limsup_est;
        estimates.push(GamblerEstimate {
            gambler_id: id.clone(),
            h: spec.head_count,
            limsup: g.limsup_est,
            liminf: g.liminf_est,
            upper_bound,
            succeeds_from: (threshold_s <= 1.0).then_some(threshold_s.max(0.0)),
        });
    }
    let aggregate = estimates
        .iter()
        .map(|e| e.upper_bound)
        .fold(1.0, f64::min);
    Ok(DimensionReport {
        seq_id,
        n,
        gamblers: estimates,
        aggregate,
    })
}
