use std::io::{self, Write};

use num_rational::BigRational;

use super::{sgale_log2_shift, EngineError, Simulation};
use crate::capital::{Capital, CapitalMode, LogCapital};
use crate::gambler::{GamblerSpec, ProbVector};
use crate::rational::log2_rational;
use crate::sequences::SymbolReader;

/// Runs longer than this keep only subsampled capitals.
pub const DEFAULT_MAX_FULL_STEPS: u64 = 1_000_000;

/// Fraction of the trace, counted from the end, used for growth exponents.
pub const EXPONENT_WINDOW: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: CapitalMode,
    /// Keep a [`TraceStep`] per step (only honoured up to `max_full_steps`).
    pub record_steps: bool,
    pub max_full_steps: u64,
}

impl RunOptions {
    pub fn new(mode: CapitalMode) -> Self {
        RunOptions {
            mode,
            record_steps: true,
            max_full_steps: DEFAULT_MAX_FULL_STEPS,
        }
    }

    /// Capital samples only; what sweeps use.
    pub fn capital_only(mode: CapitalMode) -> Self {
        RunOptions {
            mode,
            record_steps: false,
            max_full_steps: DEFAULT_MAX_FULL_STEPS,
        }
    }
}

/// One step of a run: the configuration before reading symbol `n`, the bet
/// placed on it, and `d_G(S[0..=n])` afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub n: u64,
    pub leading_pos: u64,
    pub trailing_positions: Vec<u64>,
    pub positional_state: usize,
    pub betting_state: usize,
    pub bet: ProbVector,
    pub realized_symbol: u8,
    pub capital: Capital,
}

/// `log2 d_G` of the first `n` symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapitalSample {
    pub n: u64,
    pub log2: LogCapital,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub alphabet_size: usize,
    pub mode: CapitalMode,
    pub len: u64,
    pub initial_capital: Capital,
    pub final_capital: Capital,
    /// Empty unless steps were recorded.
    pub steps: Vec<TraceStep>,
    /// Every `stride`-th prefix length, always ending at `len`.
    pub samples: Vec<CapitalSample>,
    pub stride: u64,
}

impl RunTrace {
    pub fn final_log2(&self) -> LogCapital {
        self.final_capital.log2()
    }
}

/// Runs `spec` over the first `n` symbols with full per-step records when
/// `n <= 10^6`.
pub fn run_martingale<R: SymbolReader + ?Sized>(
    spec: &GamblerSpec,
    src: &mut R,
    n: u64,
    mode: CapitalMode,
) -> Result<RunTrace, EngineError> {
    run_with(spec, src, n, &RunOptions::new(mode))
}

pub fn run_with<R: SymbolReader + ?Sized>(
    spec: &GamblerSpec,
    src: &mut R,
    n: u64,
    options: &RunOptions,
) -> Result<RunTrace, EngineError> {
    if spec.alphabet_size != src.alphabet_size() {
        return Err(EngineError::AlphabetMismatch {
            spec: spec.alphabet_size,
            source_size: src.alphabet_size(),
        });
    }
    let mut sim = Simulation::new(spec, options.mode)?;
    let record = options.record_steps && n <= options.max_full_steps;
    let stride = if n <= options.max_full_steps {
        1
    } else {
        n.div_ceil(options.max_full_steps)
    };
    let mut steps = Vec::with_capacity(if record { n as usize } else { 0 });
    let mut samples = Vec::with_capacity((n / stride) as usize + 1);
    for _ in 0..n {
        let trailing = if record {
            sim.positions().to_vec()
        } else {
            Vec::new()
        };
        let info = sim.step(src)?;
        let prefix_len = info.n + 1;
        if prefix_len % stride == 0 || prefix_len == n {
            samples.push(CapitalSample {
                n: prefix_len,
                log2: sim.capital().log2(),
            });
        }
        if record {
            steps.push(TraceStep {
                n: info.n,
                leading_pos: info.n,
                trailing_positions: trailing,
                positional_state: info.positional_state,
                betting_state: info.betting_state,
                bet: spec.betting_states[info.betting_state].bet.clone(),
                realized_symbol: info.realized,
                capital: sim.capital().clone(),
            });
        }
    }
    Ok(RunTrace {
        alphabet_size: spec.alphabet_size,
        mode: options.mode,
        len: n,
        initial_capital: Capital::new(&spec.initial_capital, options.mode),
        final_capital: sim.capital().clone(),
        steps,
        samples,
        stride,
    })
}

/// Window estimates of `limsup` and `liminf` of `log_k d_G(S[0..n-1]) / n`.
///
/// Bankrupt capital contributes negative infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthExponent {
    pub limsup_est: f64,
    pub liminf_est: f64,
}

impl GrowthExponent {
    /// The predimension upper bound this run supports, `1 - limsup`.
    pub fn predimension_bound(&self) -> f64 {
        1.0 - self.limsup_est
    }
}

/// Estimates over the last 10% of the trace.
pub fn success_exponent(trace: &RunTrace, k: usize) -> Result<GrowthExponent, EngineError> {
    if trace.len < 100 {
        return Err(EngineError::TraceTooShort(trace.len));
    }
    let log2k = log2_rational(&BigRational::from_integer(k.into())).expect("k >= 2");
    let start = trace.len - (trace.len as f64 * EXPONENT_WINDOW).floor() as u64;
    let mut limsup = f64::NEG_INFINITY;
    let mut liminf = f64::INFINITY;
    for sample in trace.samples.iter().filter(|s| s.n >= start && s.n > 0) {
        let rate = match sample.log2 {
            LogCapital::Finite(v) => v / (sample.n as f64 * log2k),
            LogCapital::Bankrupt => f64::NEG_INFINITY,
        };
        limsup = limsup.max(rate);
        liminf = liminf.min(rate);
    }
    Ok(GrowthExponent {
        limsup_est: limsup,
        liminf_est: liminf,
    })
}

/// Relative tolerance for comparing exact and log-domain capitals.
pub const MODE_AGREEMENT_TOL: f64 = 1e-9;

/// Outcome of running one gambler in both capital modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeAgreement {
    pub steps: u64,
    /// Largest `|exact - log| / max(1, |exact|)` over finite prefixes.
    pub max_rel_error: f64,
    /// First prefix length where the modes disagree, bankruptcy included.
    pub first_mismatch: Option<u64>,
}

impl ModeAgreement {
    pub fn agrees(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

/// Steps exact and log2 simulations together and compares `log2 d` after
/// every symbol.
pub fn compare_capital_modes<R: SymbolReader + ?Sized>(
    spec: &GamblerSpec,
    src: &mut R,
    n: u64,
) -> Result<ModeAgreement, EngineError> {
    if spec.alphabet_size != src.alphabet_size() {
        return Err(EngineError::AlphabetMismatch {
            spec: spec.alphabet_size,
            source_size: src.alphabet_size(),
        });
    }
    let mut exact = Simulation::new(spec, CapitalMode::Exact)?;
    let mut log = Simulation::new(spec, CapitalMode::Log2)?;
    let mut report = ModeAgreement {
        steps: 0,
        max_rel_error: 0.0,
        first_mismatch: None,
    };
    for step in 0..n {
        exact.step(src)?;
        log.step(src)?;
        report.steps = step + 1;
        let ok = match (exact.capital().log2(), log.capital().log2()) {
            (LogCapital::Bankrupt, LogCapital::Bankrupt) => true,
            (LogCapital::Finite(a), LogCapital::Finite(b)) => {
                let rel = (a - b).abs() / a.abs().max(1.0);
                report.max_rel_error = report.max_rel_error.max(rel);
                rel <= MODE_AGREEMENT_TOL
            }
            _ => false,
        };
        if !ok && report.first_mismatch.is_none() {
            report.first_mismatch = Some(step + 1);
        }
    }
    Ok(report)
}

fn fmt_log(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

/// Writes `n,log2_capital,sgale_<s>...` rows, one per recorded prefix length
/// starting with the empty prefix. Bankrupt values are written as `-inf`.
pub fn write_trajectory_csv<W: Write>(
    out: &mut W,
    trace: &RunTrace,
    s_values: &[(String, BigRational)],
) -> io::Result<()> {
    write!(out, "n,log2_capital")?;
    for (label, _) in s_values {
        write!(out, ",sgale_{label}")?;
    }
    writeln!(out)?;
    let one = BigRational::from_integer(1.into());
    let mut row = |n: u64, log2: LogCapital| -> io::Result<()> {
        write!(out, "{n},{}", fmt_log(log2.as_f64()))?;
        for (_, s) in s_values {
            let exponent = (s - &one) * BigRational::from_integer(n.into());
            let shifted = log2.add(LogCapital::Finite(sgale_log2_shift(
                &exponent,
                trace.alphabet_size,
            )));
            write!(out, ",{}", fmt_log(shifted.as_f64()))?;
        }
        writeln!(out)
    };
    row(0, trace.initial_capital.log2())?;
    for sample in &trace.samples {
        row(sample.n, sample.log2)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::sequences::{prng_source, SequenceError, SequenceSource};

    #[test]
    fn uniform_bettor_keeps_initial_capital() {
        let mut spec = GamblerSpec::uniform(2, 2);
        spec.initial_capital = ratio(5, 3);
        let mut src = prng_source(4);
        let trace = run_martingale(&spec, &mut src, 500, CapitalMode::Exact).unwrap();
        assert_eq!(trace.final_capital, Capital::Exact(ratio(5, 3)));
        assert_eq!(trace.steps.len(), 500);
        let g = success_exponent(&run_martingale(&GamblerSpec::uniform(2, 1), &mut src, 500, CapitalMode::Log2).unwrap(), 2).unwrap();
        assert_eq!(g, GrowthExponent { limsup_est: 0.0, liminf_est: 0.0 });
    }

    #[test]
    fn all_in_on_zero_against_ones_goes_bankrupt_at_first_step() {
        let spec = GamblerSpec::all_in(2, 0);
        let mut ones = SequenceSource::constant(1, 2);
        let trace = run_martingale(&spec, &mut ones, 10, CapitalMode::Log2).unwrap();
        assert!(trace.steps[0].capital.is_bankrupt());
        assert_eq!(trace.samples[0].log2, LogCapital::Bankrupt);
        assert!(trace.final_capital.is_bankrupt());
    }

    #[test]
    fn all_in_on_zero_against_zeros_grows_at_rate_one() {
        let spec = GamblerSpec::all_in(3, 0);
        let mut zeros = SequenceSource::constant(0, 3);
        let trace = run_martingale(&spec, &mut zeros, 1000, CapitalMode::Log2).unwrap();
        let g = success_exponent(&trace, 3).unwrap();
        assert!((g.limsup_est - 1.0).abs() < 1e-12);
        assert!((g.liminf_est - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exhaustion_names_missing_index() {
        let spec = GamblerSpec::uniform(2, 1);
        let mut src = SequenceSource::from_symbols(vec![0; 7], 2, "short").unwrap();
        let err = run_martingale(&spec, &mut src, 10, CapitalMode::Log2).unwrap_err();
        assert_eq!(
            err,
            EngineError::Sequence(SequenceError::Exhausted { index: 7, length: 7 })
        );
    }

    #[test]
    fn alphabet_mismatch_is_rejected() {
        let spec = GamblerSpec::uniform(3, 1);
        let mut src = prng_source(1);
        assert!(matches!(
            run_martingale(&spec, &mut src, 10, CapitalMode::Log2),
            Err(EngineError::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn short_traces_have_no_exponent() {
        let spec = GamblerSpec::uniform(2, 1);
        let trace = run_martingale(&spec, &mut prng_source(1), 99, CapitalMode::Log2).unwrap();
        assert_eq!(success_exponent(&trace, 2), Err(EngineError::TraceTooShort(99)));
    }

    #[test]
    fn long_runs_subsample() {
        let spec = GamblerSpec::uniform(2, 1);
        let options = RunOptions {
            mode: CapitalMode::Log2,
            record_steps: true,
            max_full_steps: 100,
        };
        let trace = run_with(&spec, &mut prng_source(1), 1050, &options).unwrap();
        assert!(trace.steps.is_empty());
        assert_eq!(trace.stride, 11);
        assert_eq!(trace.samples.last().unwrap().n, 1050);
        assert_eq!(trace.samples[0].n, 11);
    }

    #[test]
    fn modes_agree_on_uneven_bets() {
        let mut spec = GamblerSpec::uniform(2, 1);
        spec.betting_states[0].bet = ProbVector::new(vec![ratio(5, 8), ratio(3, 8)]).unwrap();
        let a = compare_capital_modes(&spec, &mut prng_source(2), 3000).unwrap();
        assert!(a.agrees(), "{a:?}");
        assert!(a.max_rel_error < 1e-12);
        let all_in = GamblerSpec::all_in(2, 0);
        let b = compare_capital_modes(&all_in, &mut prng_source(2), 50).unwrap();
        assert!(b.agrees());
    }

    #[test]
    fn csv_layout() {
        let spec = GamblerSpec::all_in(2, 0);
        let mut zeros = SequenceSource::constant(0, 2);
        let trace = run_martingale(&spec, &mut zeros, 3, CapitalMode::Exact).unwrap();
        let mut out = Vec::new();
        write_trajectory_csv(&mut out, &trace, &[("0.5".into(), ratio(1, 2))]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "n,log2_capital,sgale_0.5\n0,0,0\n1,1,0.5\n2,2,1\n3,3,1.5\n"
        );

        let mut ones = SequenceSource::constant(1, 2);
        let trace = run_martingale(&spec, &mut ones, 1, CapitalMode::Log2).unwrap();
        let mut out = Vec::new();
        write_trajectory_csv(&mut out, &trace, &[]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "n,log2_capital\n0,0\n1,-inf\n");
    }
}
