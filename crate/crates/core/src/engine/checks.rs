use num_rational::{BigRational, Ratio};

use crate::gambler::{GamblerSpec, Violation};

/// Trailing-head positions `pi(n)` by direct recursion from `pi(0) = 0`.
pub fn positions(spec: &GamblerSpec, n: u64) -> Vec<u64> {
    let mut pi = vec![0u64; spec.trailing_heads()];
    let mut t = spec.initial_positional;
    for _ in 0..n {
        let state = &spec.positional_states[t];
        for (p, &moves) in pi.iter_mut().zip(&state.move_bits) {
            *p += moves as u64;
        }
        t = state.next;
    }
    pi
}

/// Asymptotic head speeds read off the `delta_T` orbit of `t_0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeedProfile {
    /// Exact speed of each trailing head.
    pub speeds: Vec<Ratio<u64>>,
    /// Advances of each trailing head during one cycle.
    pub advances_per_cycle: Vec<u64>,
    pub cycle_length: u64,
    pub preperiod_length: u64,
}

pub fn measure_speeds(spec: &GamblerSpec) -> SpeedProfile {
    let mut first_visit = vec![None; spec.positional_states.len()];
    let mut orbit = Vec::new();
    let mut t = spec.initial_positional;
    let preperiod = loop {
        if let Some(at) = first_visit[t] {
            break at;
        }
        first_visit[t] = Some(orbit.len());
        orbit.push(t);
        t = spec.positional_states[t].next;
    };
    let cycle = &orbit[preperiod..];
    let advances: Vec<u64> = (0..spec.trailing_heads())
        .map(|i| {
            cycle
                .iter()
                .filter(|&&s| spec.positional_states[s].move_bits[i])
                .count() as u64
        })
        .collect();
    let len = cycle.len() as u64;
    SpeedProfile {
        speeds: advances.iter().map(|&a| Ratio::new(a, len)).collect(),
        advances_per_cycle: advances,
        cycle_length: len,
        preperiod_length: preperiod as u64,
    }
}

/// First `(n, head)` with `|pi_i(n) - sigma_i n| > |T|`, if any, for `n <= n_max`.
pub fn speed_bound_violation(spec: &GamblerSpec, n_max: u64) -> Option<(u64, usize)> {
    let profile = measure_speeds(spec);
    let states = spec.positional_states.len() as i128;
    let len = profile.cycle_length as i128;
    let mut pi = vec![0u64; spec.trailing_heads()];
    let mut t = spec.initial_positional;
    for n in 0..=n_max {
        for (i, (&p, &adv)) in pi.iter().zip(&profile.advances_per_cycle).enumerate() {
            // |p - adv n / L| <= |T|  <=>  |p L - adv n| <= |T| L
            let gap = (p as i128 * len - adv as i128 * n as i128).abs();
            if gap > states * len {
                return Some((n, i));
            }
        }
        let state = &spec.positional_states[t];
        for (p, &moves) in pi.iter_mut().zip(&state.move_bits) {
            *p += moves as u64;
        }
        t = state.next;
    }
    None
}

/// Whether every trailing head stays within `|T|` of `sigma_i n` for all
/// `n <= n_max`, in exact integer arithmetic.
pub fn check_speed_bounds(spec: &GamblerSpec, n_max: u64) -> bool {
    speed_bound_violation(spec, n_max).is_none()
}

/// Brute-force fairness check over the whole tree of words shorter than
/// `depth`: `sum_b d(wb) = k d(w)` in exact arithmetic, with the trailing
/// symbols for each node read from the word itself.
///
/// Specs whose tables are structurally broken (missing states, wrong table
/// sizes) fail. Bet rows are not pre-checked; the tree finds bad ones.
///
/// # Panics
///
/// If `depth > 20`.
pub fn check_martingale_property(spec: &GamblerSpec, depth: u32) -> bool {
    assert!(depth <= 20, "tree depth {depth} exceeds 20");
    let structural = spec.validate().violations.into_iter().all(|v| {
        matches!(
            v,
            Violation::BetSum { .. }
                | Violation::NegativeBet { .. }
                | Violation::InitialCapitalNotPositive { .. }
        )
    });
    if !structural {
        return false;
    }
    let mut word = Vec::with_capacity(depth as usize);
    let root = Node {
        t: spec.initial_positional,
        q: spec.initial_betting,
        positions: vec![0; spec.trailing_heads()],
        capital: spec.initial_capital.clone(),
    };
    visit(spec, &root, &mut word, depth as usize)
}

struct Node {
    t: usize,
    q: usize,
    positions: Vec<u64>,
    capital: BigRational,
}

fn visit(spec: &GamblerSpec, node: &Node, word: &mut Vec<u8>, depth: usize) -> bool {
    if word.len() >= depth {
        return true;
    }
    let k = spec.alphabet_size;
    let k_big = BigRational::from_integer(k.into());
    let bet = &spec.betting_states[node.q].bet;
    let scaled = &node.capital * &k_big;
    let children: Vec<BigRational> = (0..k).map(|b| &scaled * bet.weight(b)).collect();
    let total: BigRational = children.iter().sum();
    if total != scaled {
        return false;
    }
    if word.len() + 1 >= depth {
        return true;
    }
    let pos_state = &spec.positional_states[node.t];
    let next_positions: Vec<u64> = node
        .positions
        .iter()
        .zip(&pos_state.move_bits)
        .map(|(&p, &m)| p + m as u64)
        .collect();
    for (b, capital) in children.into_iter().enumerate() {
        word.push(b as u8);
        let mut index = 0usize;
        for &p in &node.positions {
            index = index * k + word[p as usize] as usize;
        }
        index = index * k + b;
        let child = Node {
            t: pos_state.next,
            q: spec.betting_states[node.q].transitions[index],
            positions: next_positions.clone(),
            capital,
        };
        let ok = visit(spec, &child, word, depth);
        word.pop();
        if !ok {
            return false;
        }
    }
    true
}
