use std::sync::OnceLock;

use super::SequenceError;

/// Number of primes held by the shared default table.
pub const DEFAULT_PRIME_COUNT: usize = 1024;

/// The first `m` primes, ascending: `p_1 = 2, p_2 = 3, ...`.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn with_len(m: usize) -> Self {
        let mut limit = 16usize;
        loop {
            let primes = sieve(limit);
            if primes.len() >= m {
                return PrimeTable {
                    primes: primes[..m].to_vec(),
                };
            }
            limit *= 2;
        }
    }

    pub fn shared() -> &'static PrimeTable {
        static TABLE: OnceLock<PrimeTable> = OnceLock::new();
        TABLE.get_or_init(|| PrimeTable::with_len(DEFAULT_PRIME_COUNT))
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// `p_i`, 1-based.
    pub fn nth(&self, i: usize) -> Result<u64, SequenceError> {
        if i == 0 || i > self.primes.len() {
            return Err(SequenceError::PrimeIndex {
                requested: i,
                max: self.primes.len(),
            });
        }
        Ok(self.primes[i - 1])
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.primes
    }
}

fn sieve(limit: usize) -> Vec<u64> {
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for n in 2..=limit {
        if composite[n] {
            continue;
        }
        primes.push(n as u64);
        let mut m = n * n;
        while m <= limit {
            composite[m] = true;
            m += n;
        }
    }
    primes
}

/// The `i`-th prime from the shared table.
pub fn nth_prime(i: usize) -> Result<u64, SequenceError> {
    PrimeTable::shared().nth(i)
}

/// Largest `e` with `p_i^e | x`.
pub fn multiplicity(i: usize, x: u64) -> Result<u32, SequenceError> {
    if x == 0 {
        return Err(SequenceError::InvalidArgument(
            "multiplicity is undefined for x = 0".into(),
        ));
    }
    let p = nth_prime(i)?;
    let mut x = x;
    let mut e = 0;
    while x % p == 0 {
        x /= p;
        e += 1;
    }
    Ok(e)
}
