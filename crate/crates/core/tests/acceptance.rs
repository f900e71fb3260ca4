//! Acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL` line before asserting.

use std::time::{Duration, Instant};

use galelab::analysis::{adversarial_sweep_with, instability_experiment, SweepBudget};
use galelab::constructions::{
    average_gamblers, build_parity_gambler, build_variant_gambler, check_averaging_bound,
};
use galelab::engine::{
    check_martingale_property, compare_capital_modes, run_with, sgale_value, speed_bound_violation,
    success_exponent, RunOptions,
};
use galelab::rational::{int, pow2, ratio};
use galelab::sequences::{expand_index, prng_source, SequenceSource};
use galelab::{Capital, CapitalMode, FamilyVariant, GamblerSpec};

fn verdict(criterion: u32, pass: bool, detail: &str) {
    println!(
        "{} criterion {criterion}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion}: {detail}");
}

fn family(h: usize, variant: FamilyVariant, seed: u64) -> SequenceSource {
    SequenceSource::family(h, variant, prng_source(seed)).unwrap()
}

/// Every gambler the constructions module can hand out at desk scale.
fn constructed() -> Vec<(String, GamblerSpec)> {
    let mut out = Vec::new();
    for h in 1..=4 {
        out.push((format!("parity:h={h}"), build_parity_gambler(h).unwrap()));
    }
    for h in 2..=4 {
        for v in [FamilyVariant::FPrime, FamilyVariant::FDoublePrime] {
            out.push((format!("{}:h={h}", v.name()), build_variant_gambler(h, v).unwrap()));
        }
    }
    let gx = build_variant_gambler(2, FamilyVariant::FPrime).unwrap();
    let gz = build_variant_gambler(2, FamilyVariant::FDoublePrime).unwrap();
    out.push((
        "average:h=2,eps=1/10".into(),
        average_gamblers(&gx, &gz, &ratio(1, 10)).unwrap().spec,
    ));
    out
}

#[test]
fn criterion_1_capital_identity() {
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    for (h, n, p) in [(1usize, 100_000u64, 3u64), (2, 100_000, 5), (3, 70_000, 7)] {
        let g = build_parity_gambler(h).unwrap();
        for seed in 1..=3 {
            let mut y = family(h, FamilyVariant::F, seed);
            let start = Instant::now();
            let trace = run_with(&g, &mut y, n, &RunOptions::capital_only(CapitalMode::Exact)).unwrap();
            slowest = slowest.max(start.elapsed());
            let expected = n.div_ceil(p) - 1;
            if trace.final_capital != Capital::Exact(pow2(expected as i64)) {
                failures.push(format!("h={h} seed={seed}: got {:?}", trace.final_log2()));
            }
            // within one doubling of floor(n / p)
            assert!((expected as i64 - (n / p) as i64).abs() <= 1);
        }
    }
    let pass = failures.is_empty() && slowest < Duration::from_secs(10);
    verdict(
        1,
        pass,
        &format!("log2 d = ceil(n/p)-1 for h in 1..=3, seeds 1..=3; slowest run {slowest:?}; {failures:?}"),
    );
}

#[test]
fn criterion_2_gale_success_rate() {
    let n = 100_000u64;
    let g = build_parity_gambler(2).unwrap();
    let trace = run_with(&g, &mut family(2, FamilyVariant::F, 1), n, &RunOptions::capital_only(CapitalMode::Exact)).unwrap();
    let eps = ratio(1, 20);
    let s = int(1) - ratio(1, 5) + &eps;
    let gale = sgale_value(&trace.final_capital, &s, n, 2).unwrap();
    // eps n - 2 = 4998
    let bound = pow2(5000 - 2);
    let value = gale.exact().unwrap().clone();
    let pass = value >= bound;
    verdict(
        2,
        pass,
        &format!("log2 d^(17/20)(n=1e5) = {} >= eps n - 2 = 4998", gale.log2()),
    );
}

#[test]
fn criterion_3_expansion_oracle() {
    let start = Instant::now();
    let fig = expand_index(2, 150).unwrap();
    let fig_ok = fig.source_indices.iter().copied().collect::<Vec<_>>() == vec![20, 44];
    let max_index = 10_000u64;
    let mut mismatches = Vec::new();
    for h in 1..=4 {
        let sets: Vec<_> = (0..=max_index).map(|i| expand_index(h, i).unwrap()).collect();
        for seed in 1..=3 {
            let mut y = family(h, FamilyVariant::F, seed);
            let generated = y.take_prefix(max_index + 1).unwrap().to_vec();
            let mut inner = prng_source(seed);
            let inner = inner.take_prefix(max_index + 1).unwrap();
            for (i, set) in sets.iter().enumerate() {
                if set.evaluate(inner) != generated[i] {
                    mismatches.push((h, seed, i));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = fig_ok && mismatches.is_empty() && elapsed < Duration::from_secs(30);
    verdict(
        3,
        pass,
        &format!(
            "expand_index(2,150) = {:?}; {} mismatches over i <= 1e4, h <= 4, 3 seeds; {elapsed:?}",
            fig.source_indices,
            mismatches.len()
        ),
    );
}

#[test]
fn criterion_4_martingale_property() {
    let start = Instant::now();
    let failing: Vec<String> = constructed()
        .into_iter()
        .filter(|(_, g)| !check_martingale_property(g, 12))
        .map(|(id, _)| id)
        .collect();
    let elapsed = start.elapsed();
    let pass = failing.is_empty() && elapsed < Duration::from_secs(60);
    verdict(
        4,
        pass,
        &format!("depth-12 exact tree check on every constructed gambler; failing {failing:?}; {elapsed:?}"),
    );
}

#[test]
fn criterion_5_speed_bounds() {
    let failing: Vec<_> = constructed()
        .into_iter()
        .filter_map(|(id, g)| speed_bound_violation(&g, 100_000).map(|v| (id, v)))
        .collect();
    verdict(
        5,
        failing.is_empty(),
        &format!("|pi_i(n) - sigma_i n| <= |T| for n <= 1e5 on every constructed gambler; violations {failing:?}"),
    );
}

#[test]
fn criterion_6_averaging_bound() {
    let gx = build_variant_gambler(2, FamilyVariant::FPrime).unwrap();
    let gz = build_variant_gambler(2, FamilyVariant::FDoublePrime).unwrap();
    let eps = ratio(1, 10);
    let combined = average_gamblers(&gx, &gz, &eps).unwrap();
    let mut details = vec![format!("r = {}", combined.r)];
    let mut pass = combined.r == 6;
    for variant in [FamilyVariant::FPrime, FamilyVariant::FDoublePrime] {
        let mut src = family(2, variant, 1);
        let check = check_averaging_bound(&gx, &gz, &combined, &eps, &mut src, 10_000, 20).unwrap();
        pass &= check.passed() && check.steps == 10_000 && check.epsilon_checked == 10_000 - 19;
        details.push(format!("{}: {:?}", variant.name(), check.failure));
    }
    verdict(
        6,
        pass,
        &format!("d >= 2^(-n/10)(d1+d2) for 20 <= n <= 1e4, shadow identities exact; {}", details.join("; ")),
    );
}

#[test]
fn criterion_7_separation_evidence() {
    let start = Instant::now();
    let n = 100_000;
    let budget = SweepBudget {
        max_t: 6,
        max_q: 6,
        bet_den_max: 8,
        samples: 500,
        rng_seed: 1,
        include_structured: true,
    };
    let mut y = family(1, FamilyVariant::F, 1);
    let sweep = adversarial_sweep_with(1, &mut y, n, &budget, &[]).unwrap();
    let sampled_max = sweep.max_exponent();

    let parity = build_parity_gambler(1).unwrap();
    let trace = run_with(&parity, &mut y, n, &RunOptions::capital_only(CapitalMode::Log2)).unwrap();
    let winner = success_exponent(&trace, 2).unwrap().limsup_est;
    let elapsed = start.elapsed();

    let pass = sweep.runs.len() == 500
        && sampled_max <= 0.02
        && (winner - 1.0 / 3.0).abs() <= 0.01
        && winner >= 10.0 * sampled_max.max(0.0)
        && elapsed < Duration::from_secs(600);
    verdict(
        7,
        pass,
        &format!(
            "500 sampled 1-FSGs on F_2: max exponent {sampled_max:.5} ({}); 2-head parity gambler {winner:.5}; {elapsed:?}",
            sweep.best_run().map(|r| r.gambler_id.as_str()).unwrap_or("-")
        ),
    );
}

#[test]
fn criterion_8_instability_evidence() {
    let mut rows = Vec::new();
    let mut pass = true;
    for seed in 1..=5 {
        let r = instability_experiment(2, seed, 100_000, &ratio(1, 10)).unwrap();
        let diag_ok = r.diagonal().iter().all(|d| (d - 0.2).abs() <= 0.01);
        let off_ok = r.off_diagonal().iter().all(|d| (-0.02..=0.02).contains(d));
        pass &= diag_ok && off_ok;
        rows.push(format!(
            "seed {seed}: diag {:?} off {:?} averaged {:?}",
            r.diagonal(),
            r.off_diagonal(),
            r.averaged
        ));
    }
    verdict(8, pass, &rows.join("; "));
}

#[test]
fn criterion_9_mode_agreement() {
    let mut runs = 0;
    let mut worst = 0.0f64;
    let mut mismatches = Vec::new();
    let n = 10_000;
    let mut cases: Vec<(String, GamblerSpec, SequenceSource)> = Vec::new();
    for (id, g) in constructed() {
        for seed in [1, 2] {
            let src = if id.starts_with("parity") {
                family(g.head_count - 1, FamilyVariant::F, seed)
            } else if id.starts_with("Fdoubleprime") {
                family(g.head_count, FamilyVariant::FDoublePrime, seed)
            } else if id.starts_with("Fprime") {
                family(g.head_count, FamilyVariant::FPrime, seed)
            } else {
                family(2, FamilyVariant::FDoublePrime, seed)
            };
            cases.push((format!("{id}/seed={seed}"), g.clone(), src));
        }
    }
    // Gamblers with non-dyadic bets, where the log domain actually rounds.
    let mut skewed = GamblerSpec::uniform(2, 2);
    skewed.betting_states[0].bet =
        galelab::ProbVector::new(vec![ratio(5, 7), ratio(2, 7)]).unwrap();
    cases.push(("skewed/prng".into(), skewed, prng_source(3)));
    let mut ternary = GamblerSpec::uniform(3, 1);
    ternary.betting_states[0].bet =
        galelab::ProbVector::new(vec![ratio(1, 6), ratio(1, 3), ratio(1, 2)]).unwrap();
    cases.push((
        "ternary/constant".into(),
        ternary,
        SequenceSource::constant(2, 3),
    ));
    for (id, g, mut src) in cases {
        let a = compare_capital_modes(&g, &mut src, n).unwrap();
        runs += 1;
        worst = worst.max(a.max_rel_error);
        if let Some(at) = a.first_mismatch {
            mismatches.push(format!("{id} at n={at}"));
        }
    }
    verdict(
        9,
        mismatches.is_empty(),
        &format!("{runs} runs of n = 1e4 in both modes; worst relative log2 error {worst:e}; mismatches {mismatches:?}"),
    );
}
