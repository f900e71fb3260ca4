use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::capital::CapitalMode;
use crate::constructions::{average_gamblers, build_variant_gambler};
use crate::engine::{run_with, success_exponent, RunOptions};
use crate::gambler::GamblerSpec;
use crate::rational::serde_rational;
use crate::sequences::{prng_source, FamilyVariant, SequenceSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstabilityReport {
    pub h: usize,
    pub seed: u64,
    pub n: u64,
    #[serde(with = "serde_rational")]
    pub epsilon: BigRational,
    /// `matrix[g][s]`: exponent of gambler `g` on sequence `s`, with index
    /// 0 for the primed variant and 1 for the double-primed one.
    #[serde(with = "matrix_serde")]
    pub matrix: [[f64; 2]; 2],
    /// Exponent of the averaged gambler on each sequence.
    #[serde(with = "pair_serde")]
    pub averaged: [f64; 2],
    pub averaged_heads: usize,
    pub averaged_states: usize,
    pub resolution: u32,
}

impl InstabilityReport {
    pub fn diagonal(&self) -> [f64; 2] {
        [self.matrix[0][0], self.matrix[1][1]]
    }

    pub fn off_diagonal(&self) -> [f64; 2] {
        [self.matrix[0][1], self.matrix[1][0]]
    }
}

mod pair_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrapped(#[serde(with = "crate::analysis::serde_exponent")] f64);

    pub fn serialize<S: Serializer>(v: &[f64; 2], s: S) -> Result<S::Ok, S::Error> {
        [Wrapped(v[0]), Wrapped(v[1])].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; 2], D::Error> {
        let [a, b] = <[Wrapped; 2]>::deserialize(d)?;
        Ok([a.0, b.0])
    }
}

mod matrix_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row(#[serde(with = "super::pair_serde")] [f64; 2]);

    pub fn serialize<S: Serializer>(v: &[[f64; 2]; 2], s: S) -> Result<S::Ok, S::Error> {
        [Row(v[0]), Row(v[1])].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[[f64; 2]; 2], D::Error> {
        let [a, b] = <[Row; 2]>::deserialize(d)?;
        Ok([a.0, b.0])
    }
}

fn exponent(spec: &GamblerSpec, src: &mut SequenceSource, n: u64) -> Result<f64, AnalysisError> {
    let trace = run_with(spec, src, n, &RunOptions::capital_only(CapitalMode::Log2))?;
    Ok(success_exponent(&trace, 2)?.limsup_est)
}

/// Runs both variant winners and their average on `F'_{h+1}(R)` and
/// `F''_{h+1}(R)` for the seeded source `R`.
pub fn instability_experiment(
    h: usize,
    seed: u64,
    n: u64,
    epsilon: &BigRational,
) -> Result<InstabilityReport, AnalysisError> {
    let variants = [FamilyVariant::FPrime, FamilyVariant::FDoublePrime];
    let gamblers = [
        build_variant_gambler(h, variants[0])?,
        build_variant_gambler(h, variants[1])?,
    ];
    let combined = average_gamblers(&gamblers[0], &gamblers[1], epsilon)?;
    let mut sources = [
        SequenceSource::family(h, variants[0], prng_source(seed))?,
        SequenceSource::family(h, variants[1], prng_source(seed))?,
    ];
    let mut matrix = [[0.0; 2]; 2];
    let mut averaged = [0.0; 2];
    for (s, src) in sources.iter_mut().enumerate() {
        for (g, spec) in gamblers.iter().enumerate() {
            matrix[g][s] = exponent(spec, src, n)?;
        }
        averaged[s] = exponent(&combined.spec, src, n)?;
    }
    Ok(InstabilityReport {
        h,
        seed,
        n,
        epsilon: epsilon.clone(),
        matrix,
        averaged,
        averaged_heads: combined.spec.head_count,
        averaged_states: combined.spec.betting_states.len(),
        resolution: combined.r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn diagonal_wins_and_average_covers_both() {
        let r = instability_experiment(2, 1, 5000, &ratio(1, 10)).unwrap();
        for d in r.diagonal() {
            assert!((d - 0.2).abs() < 0.01, "{d}");
        }
        for a in r.averaged {
            assert!(a >= 0.2 - 0.1 - 0.01, "{a}");
        }
        assert_eq!(r.averaged_heads, 3);
        assert_eq!(r.resolution, 6);
        let json = serde_json::to_string(&r).unwrap();
        let back: InstabilityReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
