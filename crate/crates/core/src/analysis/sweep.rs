use std::io::{self, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::capital::{CapitalMode, LogCapital};
use crate::constructions::{BlockSchedule, MAX_TABLE_ENTRIES};
use crate::engine::{run_with, success_exponent, RunOptions};
use crate::gambler::{BettingState, GamblerSpec, PositionalState, ProbVector};
use crate::sequences::{SequenceSource, SliceReader};

/// How the candidates are chosen. The choice of adversaries is ours, not a
/// canonical family, and reports say so.
pub const ADVERSARY_FAMILY: &str =
    "artifact-defined: uniformly sampled FSGs on a bounded bet grid, plus block-parity schedules";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepBudget {
    /// Largest positional component sampled.
    pub max_t: usize,
    /// Largest betting component sampled.
    pub max_q: usize,
    /// Bets are multiples of `1/d` for some `d <= bet_den_max`.
    pub bet_den_max: u32,
    /// Number of random gamblers.
    pub samples: usize,
    pub rng_seed: u64,
    /// Also run every block schedule with `L <= max_t` (needs `h >= 2`).
    pub include_structured: bool,
}

impl Default for SweepBudget {
    fn default() -> Self {
        SweepBudget {
            max_t: 6,
            max_q: 6,
            bet_den_max: 8,
            samples: 500,
            rng_seed: 0,
            include_structured: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub gambler_id: String,
    pub seq_id: String,
    pub n: u64,
    #[serde(with = "super::serde_exponent")]
    pub exponent: f64,
    #[serde(with = "super::serde_exponent")]
    pub log2_capital_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub h: usize,
    pub seq_id: String,
    pub n: u64,
    pub budget: SweepBudget,
    pub adversary_family: String,
    pub runs: Vec<SweepRun>,
    /// Index into `runs` of the largest exponent (first on ties).
    pub best: Option<usize>,
}

impl SweepReport {
    pub fn max_exponent(&self) -> f64 {
        self.best
            .map(|i| self.runs[i].exponent)
            .unwrap_or(f64::NEG_INFINITY)
    }

    pub fn best_run(&self) -> Option<&SweepRun> {
        self.best.map(|i| &self.runs[i])
    }
}

fn random_bet<R: Rng>(rng: &mut R, k: usize, den_max: u32) -> ProbVector {
    let den = rng.gen_range(1..=den_max);
    let mut cuts: Vec<u32> = (0..k - 1).map(|_| rng.gen_range(0..=den)).collect();
    cuts.sort_unstable();
    let mut weights = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(den)) {
        weights.push(BigRational::new(BigInt::from(c - prev), BigInt::from(den)));
        prev = c;
    }
    ProbVector::from_weights_unchecked(weights)
}

/// An `h`-head gambler with uniformly random tables, `|T| <= max_t`,
/// `|Q| <= max_q` and bets on the budget's grid.
pub fn random_gambler<R: Rng>(rng: &mut R, k: usize, h: usize, budget: &SweepBudget) -> GamblerSpec {
    let vectors = k.pow(h as u32);
    let t_count = rng.gen_range(1..=budget.max_t);
    let q_count = rng.gen_range(1..=budget.max_q);
    let positional_states = (0..t_count)
        .map(|_| PositionalState {
            next: rng.gen_range(0..t_count),
            move_bits: (0..h - 1).map(|_| rng.gen()).collect(),
        })
        .collect();
    let betting_states = (0..q_count)
        .map(|_| BettingState {
            bet: random_bet(rng, k, budget.bet_den_max),
            transitions: (0..vectors).map(|_| rng.gen_range(0..q_count)).collect(),
        })
        .collect();
    GamblerSpec {
        alphabet_size: k,
        head_count: h,
        positional_states,
        betting_states,
        initial_positional: 0,
        initial_betting: 0,
        initial_capital: BigRational::from_integer(1.into()),
    }
}

/// Every full-parity block schedule with `2 <= L <= max_t`, both
/// polarities, for `h` heads.
pub fn structured_candidates(h: usize, max_t: usize) -> Vec<(String, BlockSchedule)> {
    let mut out = Vec::new();
    if h < 2 {
        return out;
    }
    let trailing = h - 1;
    for period in 2..=max_t as u64 {
        let mut advances = vec![0u64; trailing];
        loop {
            for polarity in 0..2u8 {
                let id = format!(
                    "block:L={period},adv={},pol={polarity}",
                    advances.iter().map(u64::to_string).collect::<Vec<_>>().join("/")
                );
                out.push((
                    id,
                    BlockSchedule {
                        period,
                        advances: advances.clone(),
                        parity_heads: (0..trailing).collect(),
                        polarity,
                    },
                ));
            }
            // odometer over 0..=period
            let mut i = 0;
            while i < trailing && advances[i] == period {
                advances[i] = 0;
                i += 1;
            }
            if i == trailing {
                break;
            }
            advances[i] += 1;
        }
    }
    out
}

enum Candidate<'a> {
    Random(usize),
    Given(String, &'a GamblerSpec),
}

pub fn adversarial_sweep(
    h: usize,
    src: &mut SequenceSource,
    n: u64,
    budget: &SweepBudget,
) -> Result<SweepReport, AnalysisError> {
    adversarial_sweep_with(h, src, n, budget, &[])
}

/// Sweep that additionally runs the named `extra` gamblers.
///
/// Random gambler `i` is drawn from ChaCha20 seeded with `rng_seed` on
/// stream `i`, so reports do not depend on thread scheduling.
pub fn adversarial_sweep_with(
    h: usize,
    src: &mut SequenceSource,
    n: u64,
    budget: &SweepBudget,
    extra: &[(String, GamblerSpec)],
) -> Result<SweepReport, AnalysisError> {
    let k = src.alphabet_size();
    if h == 0 || budget.max_t == 0 || budget.max_q == 0 || budget.bet_den_max == 0 {
        return Err(AnalysisError::InvalidArgument(
            "h, max_t, max_q and bet_den_max must be positive".into(),
        ));
    }
    let fits = k
        .checked_pow(h as u32)
        .and_then(|v| v.checked_mul(budget.max_q))
        .is_some_and(|v| v <= MAX_TABLE_ENTRIES);
    if !fits {
        return Err(AnalysisError::InvalidArgument(format!(
            "{h}-head gamblers with {} betting states are too large",
            budget.max_q
        )));
    }
    if budget.include_structured && k != 2 && h >= 2 {
        return Err(AnalysisError::InvalidArgument(
            "block schedules need a binary sequence".into(),
        ));
    }
    let seq_id = src.descriptor().to_string();
    let prefix = src.take_prefix(n)?.to_vec();

    let structured: Vec<(String, GamblerSpec)> = if budget.include_structured {
        structured_candidates(h, budget.max_t)
            .into_iter()
            .map(|(id, s)| s.build().map(|g| (id, g)))
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let candidates: Vec<Candidate> = (0..budget.samples)
        .map(Candidate::Random)
        .chain(structured.iter().map(|(id, g)| Candidate::Given(id.clone(), g)))
        .chain(extra.iter().map(|(id, g)| Candidate::Given(id.clone(), g)))
        .collect();

    let options = RunOptions::capital_only(CapitalMode::Log2);
    let runs = candidates
        .par_iter()
        .map(|c| {
            let owned;
            let (id, spec) = match c {
                Candidate::Random(i) => {
                    let mut rng = ChaCha20Rng::seed_from_u64(budget.rng_seed);
                    rng.set_stream(*i as u64);
                    owned = random_gambler(&mut rng, k, h, budget);
                    (format!("random:{i}"), &owned)
                }
                Candidate::Given(id, g) => (id.clone(), *g),
            };
            let mut reader = SliceReader::new(&prefix, k);
            let trace = run_with(spec, &mut reader, n, &options)?;
            let g = success_exponent(&trace, k)?;
            Ok(SweepRun {
                gambler_id: id,
                seq_id: seq_id.clone(),
                n,
                exponent: g.limsup_est,
                log2_capital_final: match trace.final_log2() {
                    LogCapital::Finite(v) => v,
                    LogCapital::Bankrupt => f64::NEG_INFINITY,
                },
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;

    let mut best: Option<usize> = None;
    for (i, run) in runs.iter().enumerate() {
        if best.is_none_or(|b| run.exponent > runs[b].exponent) {
            best = Some(i);
        }
    }
    Ok(SweepReport {
        h,
        seq_id,
        n,
        budget: budget.clone(),
        adversary_family: ADVERSARY_FAMILY.to_string(),
        runs,
        best,
    })
}

/// One JSON object per run.
pub fn write_runs_jsonl<W: Write>(out: &mut W, runs: &[SweepRun]) -> io::Result<()> {
    for run in runs {
        serde_json::to_writer(&mut *out, run)?;
        writeln!(out)?;
    }
    Ok(())
}
