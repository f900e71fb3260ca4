use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use galelab::analysis::{
    adversarial_sweep, estimate_predim_upper, instability_experiment, write_runs_jsonl,
    AnalysisError, SweepBudget,
};
use galelab::constructions::{
    average_gamblers, build_parity_gambler, build_variant_gambler, check_averaging_bound,
    ConstructionError,
};
use galelab::engine::{
    check_martingale_property, compare_capital_modes, run_martingale, speed_bound_violation,
    success_exponent, write_trajectory_csv, EngineError,
};
use galelab::gambler::SpecError;
use galelab::rational::{format_rational, parse_rational};
use galelab::sequences::{
    prefix_cap_from_env, prng_source, read_sequence, verify_parity_structure, write_sequence,
    SequenceError,
};
use galelab::{CapitalMode, FamilyVariant, GamblerSpec, SequenceSource};
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::config::{Resolver, CONFIG_PREFIX};
use crate::{CliError, Common, SeqArgs};

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        match e {
            SpecError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SequenceError> for CliError {
    fn from(e: SequenceError) -> Self {
        match e {
            SequenceError::Io(_) => CliError::Io(e.to_string()),
            SequenceError::Format(_) => CliError::Validation(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Sequence(s) => s.into(),
            EngineError::InvalidSpec(_) => CliError::Validation(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ConstructionError> for CliError {
    fn from(e: ConstructionError) -> Self {
        match e {
            ConstructionError::Spec(s) => s.into(),
            ConstructionError::Sequence(s) => s.into(),
            ConstructionError::Engine(s) => s.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Engine(s) => s.into(),
            AnalysisError::Construction(s) => s.into(),
            AnalysisError::Sequence(s) => s.into(),
            AnalysisError::InvalidArgument(m) => CliError::Usage(m),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn check_input(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Io(format!("{}: no such file", path.display())))
    }
}

fn check_output(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(CliError::Io(format!(
            "{}: directory does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".config.json");
    PathBuf::from(name)
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json");
    s.push('\n');
    s
}

fn check_n(n: u64) -> Result<u64, CliError> {
    let cap = prefix_cap_from_env() as u64;
    if n > cap {
        return Err(CliError::Usage(format!(
            "n = {n} exceeds the prefix cap {cap} (set GALELAB_MAX_PREFIX to raise it)"
        )));
    }
    Ok(n)
}

fn rational_arg(text: &str, what: &str) -> Result<BigRational, CliError> {
    parse_rational(text).map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

/// Resolves sequence flags and opens the source. Returns the source and,
/// for files, the number of stored symbols.
fn open_sequence(r: &mut Resolver, seq: SeqArgs) -> Result<(SequenceSource, Option<u64>), CliError> {
    if let Some(path) = r.get::<PathBuf>("seq", seq.seq, None)? {
        check_input(&path)?;
        let src = read_sequence(&path)?;
        let len = src.emitted();
        return Ok((src, Some(len)));
    }
    let variant = r.or("variant", seq.variant, "F".to_string())?;
    let seed = r.or("seed", seq.seed, 1u64)?;
    let inner = prng_source(seed);
    if variant == "raw" {
        return Ok((inner, None));
    }
    let variant = FamilyVariant::from_str(&variant).map_err(|e| CliError::Usage(e.to_string()))?;
    let h = r.or("h", seq.h, 2usize)?;
    Ok((SequenceSource::family(h, variant, inner)?, None))
}

/// Gambler from a JSON file, or shorthand `kind:key=value,...` with kinds
/// `parity`, `Fprime`, `Fdoubleprime` (key `h`), `uniform` (keys `h`, `k`)
/// and `allin` (keys `symbol`, `k`).
pub fn load_gambler(reference: &str) -> Result<GamblerSpec, CliError> {
    let path = Path::new(reference);
    if path.exists() {
        return Ok(GamblerSpec::load(path)?);
    }
    let Some((kind, params)) = reference.split_once(':') else {
        return Err(CliError::Io(format!("{reference}: no such gambler file")));
    };
    let mut h = None;
    let mut k = None;
    let mut symbol = None;
    for pair in params.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("bad gambler parameter `{pair}`")))?;
        let value: usize = value
            .parse()
            .map_err(|_| CliError::Usage(format!("bad value in `{pair}`")))?;
        match key {
            "h" => h = Some(value),
            "k" => k = Some(value),
            "symbol" => symbol = Some(value),
            _ => return Err(CliError::Usage(format!("unknown gambler parameter `{key}`"))),
        }
    }
    let need_h = || h.ok_or_else(|| CliError::Usage(format!("{kind} gambler needs h")));
    Ok(match kind {
        "parity" => build_parity_gambler(need_h()?)?,
        "Fprime" | "Fdoubleprime" => {
            let variant = FamilyVariant::from_str(kind).map_err(|e| CliError::Usage(e.to_string()))?;
            build_variant_gambler(need_h()?, variant)?
        }
        "uniform" => GamblerSpec::uniform(k.unwrap_or(2), h.unwrap_or(1)),
        "allin" => {
            let k = k.unwrap_or(2);
            let s = symbol.unwrap_or(0);
            if s >= k {
                return Err(CliError::Usage(format!("symbol {s} outside alphabet of size {k}")));
            }
            GamblerSpec::all_in(k, s)
        }
        _ => return Err(CliError::Usage(format!("unknown gambler kind `{kind}`"))),
    })
}

fn gambler_arg(r: &mut Resolver, key: &str, flag: Option<String>) -> Result<GamblerSpec, CliError> {
    let reference: String = r.require(key, flag)?;
    load_gambler(&reference)
}

pub fn gen_seq(common: &Common, seq: SeqArgs, n: Option<u64>, out: Option<PathBuf>) -> Result<(), CliError> {
    let mut r = Resolver::new("gen-seq", common.config.as_deref())?;
    if seq.seq.is_some() {
        return Err(CliError::Usage("gen-seq generates sequences; --seq is not accepted".into()));
    }
    let n = check_n(r.require("n", n)?)?;
    let out: PathBuf = r.require("out", out)?;
    check_output(&out)?;
    let (mut src, _) = open_sequence(&mut r, seq)?;
    println!("{}", r.line());
    write_sequence(&mut src, n, &out)?;
    let meta = json!({
        "config": r.config(),
        "descriptor": src.descriptor().to_string(),
        "length": n,
    });
    write_text(&sidecar(&out), &pretty(&meta))?;
    println!("wrote {n} symbols of {} to {}", src.descriptor(), out.display());
    Ok(())
}

pub fn build_gambler(
    common: &Common,
    kind: Option<String>,
    h: Option<usize>,
    k: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut r = Resolver::new("build-gambler", common.config.as_deref())?;
    let kind: String = r.require("kind", kind)?;
    let out: PathBuf = r.require("out", out)?;
    check_output(&out)?;
    let spec = match kind.as_str() {
        "parity" => build_parity_gambler(r.require("h", h)?)?,
        "Fprime" | "Fdoubleprime" => {
            let variant = FamilyVariant::from_str(&kind).map_err(|e| CliError::Usage(e.to_string()))?;
            build_variant_gambler(r.require("h", h)?, variant)?
        }
        "uniform" => {
            let k = r.or("k", k, 2usize)?;
            let h = r.or("h", h, 1usize)?;
            GamblerSpec::uniform(k, h).validated()?
        }
        other => return Err(CliError::Usage(format!("unknown gambler kind `{other}`"))),
    };
    println!("{}", r.line());
    spec.save(&out)?;
    write_text(&sidecar(&out), &pretty(&json!({ "config": r.config() })))?;
    println!(
        "{kind}: {} heads, |T| = {}, |Q| = {} -> {}",
        spec.head_count,
        spec.positional_states.len(),
        spec.betting_states.len(),
        out.display()
    );
    Ok(())
}

pub fn combine(
    common: &Common,
    g1: Option<String>,
    g2: Option<String>,
    epsilon: Option<String>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut r = Resolver::new("combine", common.config.as_deref())?;
    let a = gambler_arg(&mut r, "g1", g1)?;
    let b = gambler_arg(&mut r, "g2", g2)?;
    let eps = rational_arg(&r.or("epsilon", epsilon, "1/10".to_string())?, "epsilon")?;
    let out: PathBuf = r.require("out", out)?;
    check_output(&out)?;
    println!("{}", r.line());
    let c = average_gamblers(&a, &b, &eps)?;
    c.spec.save(&out)?;
    write_text(&sidecar(&out), &pretty(&json!({ "config": r.config(), "r": c.r })))?;
    println!(
        "combined: {} heads, r = {}, |T| = {}, |Q| = {} (reachable) -> {}",
        c.spec.head_count,
        c.r,
        c.spec.positional_states.len(),
        c.spec.betting_states.len(),
        out.display()
    );
    Ok(())
}

pub fn simulate(
    common: &Common,
    gambler: Option<String>,
    seq: SeqArgs,
    n: Option<u64>,
    mode: Option<String>,
    s: Option<String>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut r = Resolver::new("simulate", common.config.as_deref())?;
    let spec = gambler_arg(&mut r, "gambler", gambler)?;
    let (mut src, stored) = open_sequence(&mut r, seq)?;
    let n = check_n(r.get("n", n, stored)?.ok_or_else(|| {
        CliError::Usage("missing required option --n".into())
    })?)?;
    let mode = CapitalMode::from_str(&r.or("mode", mode, "log2".to_string())?)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let s_values: Vec<(String, BigRational)> = match r.get::<String>("s", s, None)? {
        Some(list) => list
            .split(',')
            .map(|t| Ok((t.trim().to_string(), rational_arg(t.trim(), "s")?)))
            .collect::<Result<_, CliError>>()?,
        None => Vec::new(),
    };
    let out = r.get::<PathBuf>("out", out, None)?;
    if let Some(out) = &out {
        check_output(out)?;
    }
    println!("{}", r.line());
    let trace = run_martingale(&spec, &mut src, n, mode)?;
    if let Some(out) = &out {
        let mut buf = Vec::new();
        writeln!(buf, "{}", r.line()).expect("in memory");
        write_trajectory_csv(&mut buf, &trace, &s_values).expect("in memory");
        fs::write(out, buf).map_err(|e| io_err(out, e))?;
    }
    println!("final log2 capital after {n} symbols: {}", trace.final_log2());
    if n >= 100 {
        let g = success_exponent(&trace, spec.alphabet_size)?;
        println!(
            "growth exponent over the last 10%: limsup {} liminf {}",
            g.limsup_est, g.liminf_est
        );
    }
    Ok(())
}

pub struct VerifyArgs {
    pub check: Option<String>,
    pub gambler: Option<String>,
    pub depth: Option<u32>,
    pub n: Option<u64>,
    pub seq: SeqArgs,
    pub g1: Option<String>,
    pub g2: Option<String>,
    pub epsilon: Option<String>,
}

pub fn verify(common: &Common, args: VerifyArgs) -> Result<(), CliError> {
    let mut r = Resolver::new("verify", common.config.as_deref())?;
    let check: String = r.require("check", args.check)?;
    let outcome: Result<String, String> = match check.as_str() {
        "validate" => {
            let spec = gambler_arg(&mut r, "gambler", args.gambler)?;
            println!("{}", r.line());
            let report = spec.validate();
            if report.is_valid() {
                Ok("gambler is valid".into())
            } else {
                Err(report.to_string())
            }
        }
        "martingale" => {
            let spec = gambler_arg(&mut r, "gambler", args.gambler)?;
            let depth = r.or("depth", args.depth, 10u32)?;
            if depth > 20 {
                return Err(CliError::Usage(format!("depth {depth} exceeds 20")));
            }
            println!("{}", r.line());
            if check_martingale_property(&spec, depth) {
                Ok(format!("fair on every word shorter than {depth}"))
            } else {
                Err(format!("martingale property fails within depth {depth}"))
            }
        }
        "speeds" => {
            let spec = gambler_arg(&mut r, "gambler", args.gambler)?;
            let n = r.or("n", args.n, 100_000u64)?;
            println!("{}", r.line());
            match speed_bound_violation(&spec, n) {
                None => Ok(format!("every head within |T| of its speed line for n <= {n}")),
                Some((at, head)) => Err(format!("head {head} strays beyond |T| at n = {at}")),
            }
        }
        "family" => {
            let n = check_n(r.or("n", args.n, 10_000u64)?)?;
            let variant: String = r.or("variant", args.seq.variant.clone(), "F".into())?;
            let variant = FamilyVariant::from_str(&variant).map_err(|e| CliError::Usage(e.to_string()))?;
            let h = r.or("h", args.seq.h, 2usize)?;
            let seed = r.or("seed", args.seq.seed, 1u64)?;
            let claimed = match r.get::<PathBuf>("seq", args.seq.seq.clone(), None)? {
                Some(path) => {
                    check_input(&path)?;
                    read_sequence(&path)?
                }
                None => SequenceSource::family(h, variant, prng_source(seed))?,
            };
            println!("{}", r.line());
            let mut claimed = claimed;
            let symbols = claimed.take_prefix(n)?.to_vec();
            let mut inner = prng_source(seed);
            let inner = inner.take_prefix(n)?;
            match verify_parity_structure(h, variant, &symbols, inner, n)? {
                Ok(()) => Ok(format!("first {n} symbols follow the {} rule for h = {h}", variant.name())),
                Err(v) => Err(v.to_string()),
            }
        }
        "averaging" => {
            let a = gambler_arg(&mut r, "g1", args.g1)?;
            let b = gambler_arg(&mut r, "g2", args.g2)?;
            let eps = rational_arg(&r.or("epsilon", args.epsilon, "1/10".to_string())?, "epsilon")?;
            let n = check_n(r.or("n", args.n, 10_000u64)?)?;
            let (mut src, _) = open_sequence(&mut r, args.seq)?;
            println!("{}", r.line());
            let c = average_gamblers(&a, &b, &eps)?;
            let report = check_averaging_bound(&a, &b, &c, &eps, &mut src, n, 20)?;
            match report.failure {
                None => Ok(format!(
                    "averaging bounds hold for every prefix up to {n} (epsilon {})",
                    format_rational(&eps)
                )),
                Some(f) => Err(format!("{:?} fails at n = {}", f.kind, f.n)),
            }
        }
        "modes" => {
            let spec = gambler_arg(&mut r, "gambler", args.gambler)?;
            let n = check_n(r.or("n", args.n, 10_000u64)?)?;
            let (mut src, _) = open_sequence(&mut r, args.seq)?;
            println!("{}", r.line());
            let a = compare_capital_modes(&spec, &mut src, n)?;
            match a.first_mismatch {
                None => Ok(format!("exact and log2 agree, worst relative error {:e}", a.max_rel_error)),
                Some(at) => Err(format!("exact and log2 capitals disagree at n = {at}")),
            }
        }
        other => return Err(CliError::Usage(format!("unknown check `{other}`"))),
    };
    match outcome {
        Ok(msg) => {
            println!("ok: {msg}");
            Ok(())
        }
        Err(msg) => Err(CliError::Validation(msg)),
    }
}

pub struct SweepArgs {
    pub heads: Option<usize>,
    pub seq: SeqArgs,
    pub n: Option<u64>,
    pub samples: Option<usize>,
    pub max_t: Option<usize>,
    pub max_q: Option<usize>,
    pub bet_den: Option<u32>,
    pub rng_seed: Option<u64>,
    pub structured: Option<bool>,
    pub out: Option<PathBuf>,
}

pub fn sweep(common: &Common, args: SweepArgs) -> Result<(), CliError> {
    let mut r = Resolver::new("sweep", common.config.as_deref())?;
    let defaults = SweepBudget::default();
    let heads: usize = r.require("heads", args.heads)?;
    let n = check_n(r.or("n", args.n, 100_000u64)?)?;
    let budget = SweepBudget {
        max_t: r.or("max_t", args.max_t, defaults.max_t)?,
        max_q: r.or("max_q", args.max_q, defaults.max_q)?,
        bet_den_max: r.or("bet_den", args.bet_den, defaults.bet_den_max)?,
        samples: r.or("samples", args.samples, defaults.samples)?,
        rng_seed: r.or("rng_seed", args.rng_seed, defaults.rng_seed)?,
        include_structured: r.or("structured", args.structured, true)?,
    };
    let out = r.get::<PathBuf>("out", args.out, None)?;
    if let Some(out) = &out {
        check_output(out)?;
    }
    let (mut src, _) = open_sequence(&mut r, args.seq)?;
    println!("{}", r.line());
    let report = adversarial_sweep(heads, &mut src, n, &budget)?;
    let best = report.best_run();
    let summary = json!({
        "summary": {
            "runs": report.runs.len(),
            "max_exponent": best.map(|b| exponent_json(b.exponent)),
            "best_gambler_id": best.map(|b| b.gambler_id.clone()),
        }
    });
    if let Some(out) = &out {
        let mut buf = Vec::new();
        serde_json::to_writer(
            &mut buf,
            &json!({ "config": r.config(), "adversary_family": report.adversary_family }),
        )
        .expect("in memory");
        buf.push(b'\n');
        write_runs_jsonl(&mut buf, &report.runs).expect("in memory");
        serde_json::to_writer(&mut buf, &summary).expect("in memory");
        buf.push(b'\n');
        fs::write(out, buf).map_err(|e| io_err(out, e))?;
    }
    println!("adversaries: {}", report.adversary_family);
    match best {
        Some(b) => println!(
            "{} runs on {}; max exponent {} by {}",
            report.runs.len(),
            report.seq_id,
            b.exponent,
            b.gambler_id
        ),
        None => println!("no gamblers were run"),
    }
    Ok(())
}

fn exponent_json(v: f64) -> Value {
    if v == f64::NEG_INFINITY {
        Value::String("-inf".into())
    } else {
        json!(v)
    }
}

pub fn instability(
    common: &Common,
    h: Option<usize>,
    seed: Option<u64>,
    n: Option<u64>,
    epsilon: Option<String>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut r = Resolver::new("instability", common.config.as_deref())?;
    let h = r.or("h", h, 2usize)?;
    let seed = r.or("seed", seed, 1u64)?;
    let n = check_n(r.or("n", n, 100_000u64)?)?;
    let eps = rational_arg(&r.or("epsilon", epsilon, "1/10".to_string())?, "epsilon")?;
    let out = r.get::<PathBuf>("out", out, None)?;
    if let Some(out) = &out {
        check_output(out)?;
    }
    println!("{}", r.line());
    let report = instability_experiment(h, seed, n, &eps)?;
    if let Some(out) = &out {
        let value = json!({ "config": r.config(), "report": report });
        write_text(out, &pretty(&value))?;
    }
    println!("gambler \\ sequence      F'          F''");
    for (name, row) in ["F' winner ", "F'' winner"].iter().zip(report.matrix) {
        println!("{name}      {:>10.6}  {:>10.6}", row[0], row[1]);
    }
    println!(
        "averaged ({} heads, {} states): {:.6} on F', {:.6} on F''",
        report.averaged_heads, report.averaged_states, report.averaged[0], report.averaged[1]
    );
    Ok(())
}

pub fn estimate_dim(
    common: &Common,
    gamblers: Vec<String>,
    seq: SeqArgs,
    n: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut r = Resolver::new("estimate-dim", common.config.as_deref())?;
    let flag = if gamblers.is_empty() { None } else { Some(gamblers) };
    let refs: Vec<String> = r.require("gambler", flag)?;
    let n = check_n(r.or("n", n, 100_000u64)?)?;
    let out = r.get::<PathBuf>("out", out, None)?;
    if let Some(out) = &out {
        check_output(out)?;
    }
    let specs = refs
        .iter()
        .map(|g| Ok((g.clone(), load_gambler(g)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let (mut src, _) = open_sequence(&mut r, seq)?;
    println!("{}", r.line());
    let report = estimate_predim_upper(&mut src, &specs, n)?;
    if let Some(out) = &out {
        write_text(out, &pretty(&json!({ "config": r.config(), "report": report })))?;
    }
    for e in &report.gamblers {
        println!("{}: h = {}, upper bound {:.6}", e.gambler_id, e.h, e.upper_bound);
    }
    println!("predimension upper bound on {}: {:.6}", report.seq_id, report.aggregate);
    Ok(())
}

pub fn report(input: &Path) -> Result<(), CliError> {
    check_input(input)?;
    let text = fs::read_to_string(input).map_err(|e| io_err(input, e))?;
    let first = text.lines().next().unwrap_or("");
    if let Some(config) = first.strip_prefix(CONFIG_PREFIX) {
        // trajectory CSV
        println!("config: {config}");
        let rows: Vec<&str> = text.lines().skip(1).collect();
        if let (Some(header), Some(last)) = (rows.first(), rows.last()) {
            println!("{} rows", rows.len() - 1);
            for (h, v) in header.split(',').zip(last.split(',')) {
                println!("  final {h} = {v}");
            }
        }
        return Ok(());
    }
    if let Ok(value) = serde_json::from_str::<Value>(&text) {
        println!("config: {}", value.get("config").cloned().unwrap_or(Value::Null));
        if let Some(report) = value.get("report") {
            println!("{}", serde_json::to_string_pretty(report).expect("json"));
        }
        return Ok(());
    }
    // JSON lines: config record, runs, summary
    let mut runs = 0usize;
    let mut bankrupt = 0usize;
    for (i, line) in text.lines().enumerate() {
        let value: Value = serde_json::from_str(line)
            .map_err(|e| CliError::Validation(format!("{} line {}: {e}", input.display(), i + 1)))?;
        if let Some(config) = value.get("config") {
            println!("config: {config}");
        } else if let Some(summary) = value.get("summary") {
            println!("summary: {summary}");
        } else if value.get("gambler_id").is_some() {
            runs += 1;
            bankrupt += (value["exponent"] == Value::String("-inf".into())) as usize;
        }
    }
    println!("{runs} runs, {bankrupt} ended bankrupt");
    Ok(())
}
