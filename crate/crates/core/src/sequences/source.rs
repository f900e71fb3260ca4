use std::fmt;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::family::{FamilyParams, FamilyVariant};
use super::SequenceError;

pub const DEFAULT_PREFIX_CAP: usize = 100_000_000;
pub const PREFIX_CAP_ENV: &str = "GALELAB_MAX_PREFIX";

/// Retained-prefix cap, overridable through `GALELAB_MAX_PREFIX`.
pub fn prefix_cap_from_env() -> usize {
    std::env::var(PREFIX_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_PREFIX_CAP)
}

/// Random access to symbols by index.
pub trait SymbolReader {
    fn alphabet_size(&self) -> usize;
    fn symbol(&mut self, index: u64) -> Result<u8, SequenceError>;
}

/// Reader over a fully materialised prefix. Shareable across threads.
#[derive(Debug, Clone, Copy)]
pub struct SliceReader<'a> {
    symbols: &'a [u8],
    alphabet_size: usize,
}

impl<'a> SliceReader<'a> {
    pub fn new(symbols: &'a [u8], alphabet_size: usize) -> Self {
        SliceReader {
            symbols,
            alphabet_size,
        }
    }
}

impl SymbolReader for SliceReader<'_> {
    fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    #[inline]
    fn symbol(&mut self, index: u64) -> Result<u8, SequenceError> {
        self.symbols
            .get(index as usize)
            .copied()
            .ok_or(SequenceError::Exhausted {
                index,
                length: self.symbols.len() as u64,
            })
    }
}

/// Where a source's symbols come from. Recorded in reports for reproducibility.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceDescriptor {
    Prng {
        seed: u64,
    },
    File {
        path: String,
    },
    Memory {
        label: String,
    },
    Constant {
        symbol: u8,
        alphabet_size: usize,
    },
    Family {
        variant: FamilyVariant,
        h: usize,
        inner: Box<SourceDescriptor>,
    },
}

impl fmt::Display for SourceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceDescriptor::Prng { seed } => write!(f, "prng(seed={seed})"),
            SourceDescriptor::File { path } => write!(f, "file({path})"),
            SourceDescriptor::Memory { label } => write!(f, "memory({label})"),
            SourceDescriptor::Constant { symbol, .. } => write!(f, "constant({symbol})"),
            SourceDescriptor::Family { variant, h, inner } => {
                write!(f, "{}(h={h},{inner})", variant.name())
            }
        }
    }
}

enum SourceKind {
    Prng {
        seed: u64,
        rng: ChaCha20Rng,
        word: u64,
        bits_left: u32,
    },
    /// Everything is already in the prefix.
    Finite { descriptor: SourceDescriptor },
    Constant { symbol: u8 },
    Family(Box<FamilyState>),
}

struct FamilyState {
    params: FamilyParams,
    inner: SequenceSource,
}

/// An indexed symbol stream that retains everything it has emitted.
///
/// Emission is strictly sequential; `get(i)` emits up to `i` on demand and
/// afterwards any index below the horizon reads back the same value.
pub struct SequenceSource {
    kind: SourceKind,
    prefix: Vec<u8>,
    alphabet_size: usize,
    cap: usize,
}

impl fmt::Debug for SequenceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SequenceSource")
            .field("descriptor", &self.descriptor().to_string())
            .field("emitted", &self.prefix.len())
            .finish()
    }
}

/// Seeded binary source. ChaCha20 keystream bits, least significant first.
pub fn prng_source(seed: u64) -> SequenceSource {
    SequenceSource::prng(seed)
}

impl SequenceSource {
    pub fn prng(seed: u64) -> Self {
        SequenceSource {
            kind: SourceKind::Prng {
                seed,
                rng: ChaCha20Rng::seed_from_u64(seed),
                word: 0,
                bits_left: 0,
            },
            prefix: Vec::new(),
            alphabet_size: 2,
            cap: prefix_cap_from_env(),
        }
    }

    /// A finite source over explicit symbols.
    pub fn from_symbols(
        symbols: Vec<u8>,
        alphabet_size: usize,
        label: impl Into<String>,
    ) -> Result<Self, SequenceError> {
        Self::finite(
            symbols,
            alphabet_size,
            SourceDescriptor::Memory {
                label: label.into(),
            },
        )
    }

    pub(crate) fn finite(
        symbols: Vec<u8>,
        alphabet_size: usize,
        descriptor: SourceDescriptor,
    ) -> Result<Self, SequenceError> {
        if !(2..=256).contains(&alphabet_size) {
            return Err(SequenceError::InvalidArgument(format!(
                "alphabet size {alphabet_size} outside 2..=256"
            )));
        }
        if let Some(pos) = symbols.iter().position(|&s| s as usize >= alphabet_size) {
            return Err(SequenceError::InvalidArgument(format!(
                "symbol {} at index {pos} is outside an alphabet of size {alphabet_size}",
                symbols[pos]
            )));
        }
        Ok(SequenceSource {
            kind: SourceKind::Finite { descriptor },
            prefix: symbols,
            alphabet_size,
            cap: usize::MAX,
        })
    }

    /// The infinite sequence `symbol symbol symbol ...`.
    pub fn constant(symbol: u8, alphabet_size: usize) -> Self {
        assert!((symbol as usize) < alphabet_size);
        SequenceSource {
            kind: SourceKind::Constant { symbol },
            prefix: Vec::new(),
            alphabet_size,
            cap: prefix_cap_from_env(),
        }
    }

    /// `F_{h+1}(inner)`, `F'_{h+1}(inner)` or `F''_{h+1}(inner)`.
    pub fn family(
        h: usize,
        variant: FamilyVariant,
        inner: SequenceSource,
    ) -> Result<Self, SequenceError> {
        if inner.alphabet_size != 2 {
            return Err(SequenceError::NotBinary(inner.alphabet_size));
        }
        let params = FamilyParams::new(h, variant)?;
        let cap = inner.cap;
        Ok(SequenceSource {
            kind: SourceKind::Family(Box::new(FamilyState { params, inner })),
            prefix: Vec::new(),
            alphabet_size: 2,
            cap,
        })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        if let SourceKind::Family(state) = &mut self.kind {
            state.inner.cap = cap;
        }
        self
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn descriptor(&self) -> SourceDescriptor {
        match &self.kind {
            SourceKind::Prng { seed, .. } => SourceDescriptor::Prng { seed: *seed },
            SourceKind::Finite { descriptor } => descriptor.clone(),
            SourceKind::Constant { symbol } => SourceDescriptor::Constant {
                symbol: *symbol,
                alphabet_size: self.alphabet_size,
            },
            SourceKind::Family(state) => SourceDescriptor::Family {
                variant: state.params.variant,
                h: state.params.h,
                inner: Box::new(state.inner.descriptor()),
            },
        }
    }

    pub fn family_params(&self) -> Option<&FamilyParams> {
        match &self.kind {
            SourceKind::Family(state) => Some(&state.params),
            _ => None,
        }
    }

    /// The sequence a family source is derived from.
    pub fn inner(&self) -> Option<&SequenceSource> {
        match &self.kind {
            SourceKind::Family(state) => Some(&state.inner),
            _ => None,
        }
    }

    /// Everything emitted so far.
    pub fn prefix(&self) -> &[u8] {
        &self.prefix
    }

    pub fn emitted(&self) -> u64 {
        self.prefix.len() as u64
    }

    /// Symbol at `index`, emitting forward as needed.
    #[inline]
    pub fn get(&mut self, index: u64) -> Result<u8, SequenceError> {
        if let Some(&s) = self.prefix.get(index as usize) {
            return Ok(s);
        }
        self.ensure(index + 1)?;
        Ok(self.prefix[index as usize])
    }

    /// Emits until at least `len` symbols are retained.
    pub fn ensure(&mut self, len: u64) -> Result<(), SequenceError> {
        if len as u128 > self.cap as u128 {
            return Err(SequenceError::PrefixCap {
                index: len - 1,
                cap: self.cap,
            });
        }
        while (self.prefix.len() as u64) < len {
            let next = self.emit_next()?;
            self.prefix.push(next);
        }
        Ok(())
    }

    /// The first `n` symbols.
    pub fn take_prefix(&mut self, n: u64) -> Result<&[u8], SequenceError> {
        self.ensure(n)?;
        Ok(&self.prefix[..n as usize])
    }

    fn emit_next(&mut self) -> Result<u8, SequenceError> {
        let index = self.prefix.len() as u64;
        match &mut self.kind {
            SourceKind::Prng {
                rng,
                word,
                bits_left,
                ..
            } => {
                if *bits_left == 0 {
                    *word = rng.next_u64();
                    *bits_left = 64;
                }
                let bit = (*word & 1) as u8;
                *word >>= 1;
                *bits_left -= 1;
                Ok(bit)
            }
            SourceKind::Finite { .. } => Err(SequenceError::Exhausted {
                index,
                length: index,
            }),
            SourceKind::Constant { symbol } => Ok(*symbol),
            SourceKind::Family(state) => {
                let params = &state.params;
                match params.source_index(index) {
                    Some(inner_index) => state.inner.get(inner_index),
                    None => {
                        // Boundary index q * p_{h+1}, q >= 1: parity of already
                        // emitted values at q * p_k.
                        let q = index / params.period;
                        let mut bit = 0u8;
                        for &p in &params.parity_primes {
                            bit ^= self.prefix[(q * p) as usize];
                        }
                        Ok(bit)
                    }
                }
            }
        }
    }
}

impl SymbolReader for SequenceSource {
    fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    #[inline]
    fn symbol(&mut self, index: u64) -> Result<u8, SequenceError> {
        self.get(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prng_is_deterministic() {
        let mut a = prng_source(42);
        let mut b = prng_source(42);
        assert_eq!(
            a.take_prefix(100_000).unwrap(),
            b.take_prefix(100_000).unwrap()
        );
    }

    #[test]
    fn random_access_is_reproducible() {
        let mut a = prng_source(3);
        let late = a.get(5000).unwrap();
        let early = a.get(17).unwrap();
        let mut b = prng_source(3);
        b.ensure(6000).unwrap();
        assert_eq!(b.get(5000).unwrap(), late);
        assert_eq!(b.get(17).unwrap(), early);
    }

    #[test]
    fn finite_source_reports_missing_index() {
        let mut s = SequenceSource::from_symbols(vec![0, 1, 1], 2, "tiny").unwrap();
        assert_eq!(s.get(2).unwrap(), 1);
        assert_eq!(
            s.get(3),
            Err(SequenceError::Exhausted {
                index: 3,
                length: 3
            })
        );
    }

    #[test]
    fn finite_source_rejects_out_of_alphabet_symbols() {
        assert!(SequenceSource::from_symbols(vec![0, 2], 2, "bad").is_err());
    }

    #[test]
    fn prefix_cap_is_enforced() {
        let mut s = prng_source(1).with_cap(10);
        assert!(s.get(9).is_ok());
        assert_eq!(
            s.get(10),
            Err(SequenceError::PrefixCap { index: 10, cap: 10 })
        );
    }

    #[test]
    fn descriptors_nest() {
        let s = SequenceSource::family(2, FamilyVariant::F, prng_source(1)).unwrap();
        assert_eq!(s.descriptor().to_string(), "F(h=2,prng(seed=1))");
    }
}
