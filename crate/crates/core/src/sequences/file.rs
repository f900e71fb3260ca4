//! Packed sequence files.
//!
//! Layout, all integers little-endian:
//!
//! | bytes  | field                                  |
//! |--------|----------------------------------------|
//! | 0..4   | magic `GSEQ`                           |
//! | 4..6   | alphabet size (u16)                    |
//! | 6      | bits per symbol                        |
//! | 7      | reserved, zero                         |
//! | 8..16  | symbol count (u64)                     |
//! | 16..   | symbols packed LSB-first, zero padding |

use std::fs;
use std::path::Path;

use super::source::{SequenceSource, SourceDescriptor};
use super::SequenceError;

pub const SEQUENCE_MAGIC: [u8; 4] = *b"GSEQ";
const HEADER_LEN: usize = 16;

fn width_for(alphabet_size: usize) -> u8 {
    (usize::BITS - (alphabet_size - 1).leading_zeros()) as u8
}

/// Encodes symbols into the packed file layout.
pub fn write_symbols(symbols: &[u8], alphabet_size: usize) -> Result<Vec<u8>, SequenceError> {
    if !(2..=256).contains(&alphabet_size) {
        return Err(SequenceError::InvalidArgument(format!(
            "alphabet size {alphabet_size} outside 2..=256"
        )));
    }
    let width = width_for(alphabet_size) as usize;
    let payload_len = (symbols.len() * width).div_ceil(8);
    let mut out = Vec::with_capacity(HEADER_LEN + payload_len);
    out.extend_from_slice(&SEQUENCE_MAGIC);
    out.extend_from_slice(&(alphabet_size as u16).to_le_bytes());
    out.push(width as u8);
    out.push(0);
    out.extend_from_slice(&(symbols.len() as u64).to_le_bytes());
    out.resize(HEADER_LEN + payload_len, 0);
    let payload = &mut out[HEADER_LEN..];
    for (i, &s) in symbols.iter().enumerate() {
        let bit = i * width;
        let value = (s as u16) << (bit % 8);
        payload[bit / 8] |= value as u8;
        if bit % 8 + width > 8 {
            payload[bit / 8 + 1] |= (value >> 8) as u8;
        }
    }
    Ok(out)
}

fn read_symbols(bytes: &[u8]) -> Result<(Vec<u8>, usize), SequenceError> {
    let bad = |msg: String| SequenceError::Format(msg);
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if bytes[0..4] != SEQUENCE_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let alphabet_size = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
    if !(2..=256).contains(&alphabet_size) {
        return Err(bad(format!("alphabet size {alphabet_size} outside 2..=256")));
    }
    let width = bytes[6] as usize;
    if width != width_for(alphabet_size) as usize {
        return Err(bad(format!(
            "bit width {width} does not match alphabet size {alphabet_size}"
        )));
    }
    if bytes[7] != 0 {
        return Err(bad("reserved header byte is not zero".into()));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let payload = &bytes[HEADER_LEN..];
    let expected = len
        .checked_mul(width)
        .map(|bits| bits.div_ceil(8))
        .ok_or_else(|| bad("symbol count overflows".into()))?;
    if payload.len() != expected {
        return Err(bad(format!(
            "payload is {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    let mask = (1u16 << width) - 1;
    let mut symbols = Vec::with_capacity(len);
    for i in 0..len {
        let bit = i * width;
        let lo = payload[bit / 8] as u16;
        let hi = if bit % 8 + width > 8 {
            (payload[bit / 8 + 1] as u16) << 8
        } else {
            0
        };
        let s = ((lo | hi) >> (bit % 8)) & mask;
        if s as usize >= alphabet_size {
            return Err(bad(format!("symbol {s} at index {i} outside the alphabet")));
        }
        symbols.push(s as u8);
    }
    Ok((symbols, alphabet_size))
}

/// Writes the first `n` symbols of `src`.
pub fn write_sequence(src: &mut SequenceSource, n: u64, path: &Path) -> Result<(), SequenceError> {
    let k = src.alphabet_size();
    let bytes = write_symbols(src.take_prefix(n)?, k)?;
    fs::write(path, bytes).map_err(|e| SequenceError::Io(format!("{}: {e}", path.display())))
}

/// Loads a sequence file as a finite source.
pub fn read_sequence(path: &Path) -> Result<SequenceSource, SequenceError> {
    let bytes = fs::read(path).map_err(|e| SequenceError::Io(format!("{}: {e}", path.display())))?;
    let (symbols, k) = read_symbols(&bytes)?;
    SequenceSource::finite(
        symbols,
        k,
        SourceDescriptor::File {
            path: path.display().to_string(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::prng_source;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let bytes = write_symbols(&[1, 0, 1, 1, 0, 0, 0, 0, 1], 2).unwrap();
        assert_eq!(&bytes[0..4], b"GSEQ");
        assert_eq!(&bytes[4..8], &[2, 0, 1, 0]);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 9);
        assert_eq!(&bytes[16..], &[0b0000_1101, 0b0000_0001]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.seq");
        let mut src = prng_source(9);
        write_sequence(&mut src, 100_000, &path).unwrap();
        let mut back = read_sequence(&path).unwrap();
        assert_eq!(back.take_prefix(100_000).unwrap(), src.take_prefix(100_000).unwrap());
        assert!(back.get(100_000).is_err());
    }

    #[test]
    fn malformed_headers_are_rejected() {
        let good = write_symbols(&[0, 1, 2, 1], 3).unwrap();
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(read_symbols(&bad_magic), Err(SequenceError::Format(_))));
        let mut bad_width = good.clone();
        bad_width[6] = 3;
        assert!(read_symbols(&bad_width).is_err());
        assert!(read_symbols(&good[..10]).is_err());
        let mut truncated = good.clone();
        truncated.pop();
        assert!(read_symbols(&truncated).is_err());
        let mut out_of_alphabet = good;
        out_of_alphabet[16] |= 0b11;
        assert!(read_symbols(&out_of_alphabet).is_err());
    }

    proptest! {
        #[test]
        fn packing_round_trips(k in 2usize..=256, raw in proptest::collection::vec(any::<u8>(), 0..300)) {
            let symbols: Vec<u8> = raw.iter().map(|&s| (s as usize % k) as u8).collect();
            let bytes = write_symbols(&symbols, k).unwrap();
            let (back, k2) = read_symbols(&bytes).unwrap();
            prop_assert_eq!(k2, k);
            prop_assert_eq!(back, symbols);
        }
    }
}
