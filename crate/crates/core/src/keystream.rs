//! Seed keys, the Fibonacci LFSR and running-key expansion.
//!
//! The LFSR is a plain linear keystream generator. It gives a deterministic,
//! reproducible running key for simulation and is not cryptographically
//! strong: a few hundred output bits reveal the register state.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximal-length tap sets for common register lengths.
const MAXIMAL_TAPS: &[(u32, &[u32])] = &[
    (8, &[8, 6, 5, 4]),
    (12, &[12, 6, 4, 1]),
    (16, &[16, 14, 13, 11]),
    (20, &[20, 17]),
    (24, &[24, 23, 22, 17]),
    (32, &[32, 22, 2, 1]),
    (48, &[48, 47, 21, 20]),
    (64, &[64, 63, 61, 60]),
];

pub const DEFAULT_KEY_BITS: u32 = 16;

/// Known maximal-length taps for a register of `len` bits.
pub fn default_taps(len: u32) -> Option<&'static [u32]> {
    MAXIMAL_TAPS
        .iter()
        .find(|(l, _)| *l == len)
        .map(|(_, taps)| *taps)
}

/// Fibonacci linear-feedback shift register of up to 64 bits.
///
/// Tap `t` reads bit `len - t` (counted from the least-significant end). Each
/// step outputs the least-significant bit, shifts right and inserts the XOR of
/// the tapped bits at the top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lfsr {
    state: u64,
    len: u32,
    mask: u64,
}

impl Lfsr {
    pub fn new(state: u64, len: u32, taps: &[u32]) -> Result<Self> {
        if !(2..=64).contains(&len) {
            return Err(Error::param(format!("register length {len} outside 2..=64")));
        }
        if taps.is_empty() {
            return Err(Error::param("LFSR taps must be nonempty"));
        }
        let width_mask = width_mask(len);
        if state & width_mask == 0 || state & !width_mask != 0 {
            return Err(Error::param(format!(
                "LFSR state {state:#x} must be nonzero and fit in {len} bits"
            )));
        }
        let mut mask = 0u64;
        for &t in taps {
            if t == 0 || t > len {
                return Err(Error::param(format!("tap {t} outside 1..={len}")));
            }
            mask |= 1 << (len - t);
        }
        Ok(Lfsr { state, len, mask })
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u32 {
        self.len
    }

    #[inline]
    pub fn next_bit(&mut self) -> u8 {
        let out = (self.state & 1) as u8;
        let fb = (self.state & self.mask).count_ones() as u64 & 1;
        self.state = (self.state >> 1) | (fb << (self.len - 1));
        out
    }

    /// Next `count` output bits; the register advances by `count` steps.
    pub fn next_bits(&mut self, count: usize) -> Vec<u8> {
        (0..count).map(|_| self.next_bit()).collect()
    }

    /// Reads `width` bits as an unsigned word, first bit most significant.
    #[inline]
    pub fn next_word(&mut self, width: u32) -> u64 {
        (0..width).fold(0u64, |w, _| (w << 1) | self.next_bit() as u64)
    }
}

fn width_mask(len: u32) -> u64 {
    if len == 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// The short shared secret `K`: an LFSR initial state plus its taps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedKey {
    value: u64,
    len: u32,
    taps: Vec<u32>,
}

impl SeedKey {
    pub const MIN_BITS: u32 = 8;
    pub const MAX_BITS: u32 = 64;

    pub fn new(value: u64, len: u32, taps: Vec<u32>) -> Result<Self> {
        if !(Self::MIN_BITS..=Self::MAX_BITS).contains(&len) {
            return Err(Error::param(format!(
                "seed key length {len} outside {}..={}",
                Self::MIN_BITS,
                Self::MAX_BITS
            )));
        }
        // Validates state and taps.
        Lfsr::new(value, len, &taps)?;
        Ok(SeedKey { value, len, taps })
    }

    /// Key with the built-in maximal-length taps for `len`.
    pub fn with_default_taps(value: u64, len: u32) -> Result<Self> {
        let taps = default_taps(len).ok_or_else(|| {
            Error::param(format!("no built-in taps for a {len}-bit key; pass taps explicitly"))
        })?;
        Self::new(value, len, taps.to_vec())
    }

    /// Parses a hexadecimal key, most significant bit first. The key length is
    /// four bits per hex digit.
    pub fn from_hex(hex: &str, taps: Option<Vec<u32>>) -> Result<Self> {
        let hex = hex.trim().trim_start_matches("0x");
        if hex.is_empty() || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(Error::param(format!("seed key {hex:?} is not a hex string")));
        }
        let len = 4 * hex.len() as u32;
        if len > Self::MAX_BITS {
            return Err(Error::param(format!("seed key of {len} bits exceeds 64")));
        }
        let value = u64::from_str_radix(hex, 16)
            .map_err(|e| Error::param(format!("seed key {hex:?}: {e}")))?;
        match taps {
            Some(t) => Self::new(value, len, t),
            None => Self::with_default_taps(value, len),
        }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn taps(&self) -> &[u32] {
        &self.taps
    }

    pub fn to_hex(&self) -> String {
        format!("{:0width$x}", self.value, width = self.len.div_ceil(4) as usize)
    }

    /// Same taps and length, different register value.
    pub fn with_value(&self, value: u64) -> Result<Self> {
        Self::new(value, self.len, self.taps.clone())
    }

    pub fn lfsr(&self) -> Lfsr {
        Lfsr::new(self.value, self.len, &self.taps).expect("validated at construction")
    }
}

impl fmt::Display for SeedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

/// The expanded running key `K'`: one basis index in `[0, M/2)` per symbol.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunningKey {
    basis_indices: Vec<u32>,
    m: u32,
}

impl RunningKey {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn bases(&self) -> &[u32] {
        &self.basis_indices
    }

    pub fn len(&self) -> usize {
        self.basis_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis_indices.is_empty()
    }

    /// Writes `symbol_index,basis_index` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["symbol_index", "basis_index"])?;
        for (i, r) in self.basis_indices.iter().enumerate() {
            w.write_record([i.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn check_alphabet(m: u32) -> Result<()> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::param(format!("M = {m} must be even and >= 2")));
    }
    Ok(())
}

/// Bits drawn per candidate word: `ceil(log2(M/2))`.
pub fn bits_per_word(m: u32) -> u32 {
    let half = m / 2;
    if half <= 1 {
        0
    } else {
        32 - (half - 1).leading_zeros()
    }
}

/// Expands `key` into `n_symbols` basis indices for an alphabet of `m` points.
///
/// Words of `ceil(log2(M/2))` bits at or above `M/2` are discarded, so each
/// index is exactly uniform when the keystream bits are.
pub fn expand_running_key(key: &SeedKey, m: u32, n_symbols: usize) -> Result<RunningKey> {
    check_alphabet(m)?;
    let mut lfsr = key.lfsr();
    let basis_indices = expand_with(&mut lfsr, m, n_symbols);
    Ok(RunningKey { basis_indices, m })
}

pub(crate) fn expand_with(lfsr: &mut Lfsr, m: u32, n_symbols: usize) -> Vec<u32> {
    let half = (m / 2) as u64;
    let width = bits_per_word(m);
    let mut out = Vec::with_capacity(n_symbols);
    while out.len() < n_symbols {
        let w = lfsr.next_word(width);
        if w < half {
            out.push(w as u32);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn bits_str(bits: &[u8]) -> String {
        bits.iter().map(|b| char::from(b'0' + b)).collect()
    }

    #[test]
    fn four_bit_register_prefix_and_cycle() {
        let mut r = Lfsr::new(0b0001, 4, &[4, 3]).unwrap();
        assert_eq!(bits_str(&r.next_bits(7)), "1000100");

        let mut r = Lfsr::new(0b0001, 4, &[4, 3]).unwrap();
        let mut seen = HashSet::new();
        for _ in 0..15 {
            assert!(seen.insert(r.state()));
            r.next_bit();
        }
        assert_eq!(seen.len(), 15);
        assert_eq!(r.state(), 0b0001);
        // Reference m-sequence for x^4 + x^3 + 1, brute-forced by hand.
        let mut r = Lfsr::new(0b0001, 4, &[4, 3]).unwrap();
        assert_eq!(bits_str(&r.next_bits(15)), "100010011010111");
    }

    #[test]
    fn zero_count_is_identity() {
        let mut r = Lfsr::new(0xace1, 16, &[16, 14, 13, 11]).unwrap();
        assert!(r.next_bits(0).is_empty());
        assert_eq!(r.state(), 0xace1);
    }

    #[test]
    fn default_sixteen_bit_polynomial_is_maximal() {
        for seed in [1u64, 0xace1, 0xffff] {
            let mut r = Lfsr::new(seed, 16, default_taps(16).unwrap()).unwrap();
            let mut period = 0u64;
            loop {
                r.next_bit();
                period += 1;
                if r.state() == seed {
                    break;
                }
            }
            assert_eq!(period, (1 << 16) - 1);
        }
    }

    #[test]
    fn eight_bit_default_taps_are_maximal() {
        let mut r = Lfsr::new(1, 8, default_taps(8).unwrap()).unwrap();
        let mut period = 0;
        loop {
            r.next_bit();
            period += 1;
            if r.state() == 1 {
                break;
            }
        }
        assert_eq!(period, 255);
    }

    #[test]
    fn rejects_bad_registers() {
        assert!(Lfsr::new(0, 16, &[16, 14]).is_err());
        assert!(Lfsr::new(1, 16, &[]).is_err());
        assert!(Lfsr::new(1, 16, &[17]).is_err());
        assert!(Lfsr::new(0x1_0000, 16, &[16]).is_err());
        assert!(SeedKey::new(1, 4, vec![4, 3]).is_err());
        assert!(SeedKey::from_hex("0000", None).is_err());
        assert!(SeedKey::from_hex("zz", None).is_err());
        // 28 bits: no built-in taps
        assert!(SeedKey::from_hex("abcdef0", None).is_err());
    }

    #[test]
    fn hex_is_msb_first() {
        let k = SeedKey::from_hex("ace1", None).unwrap();
        assert_eq!(k.value(), 0xace1);
        assert_eq!(k.len(), 16);
        assert_eq!(k.taps(), &[16, 14, 13, 11]);
        assert_eq!(k.to_hex(), "ace1");
        let k = SeedKey::from_hex("0x01", Some(vec![8, 6, 5, 4])).unwrap();
        assert_eq!(k.len(), 8);
        assert_eq!(k.to_hex(), "01");
    }

    #[test]
    fn word_widths() {
        assert_eq!(bits_per_word(2), 0);
        assert_eq!(bits_per_word(4), 1);
        assert_eq!(bits_per_word(6), 2);
        assert_eq!(bits_per_word(50), 5);
        assert_eq!(bits_per_word(64), 5);
        assert_eq!(bits_per_word(66), 6);
        assert_eq!(bits_per_word(200), 7);
    }

    #[test]
    fn single_basis_consumes_no_key() {
        let k = SeedKey::from_hex("ace1", None).unwrap();
        let rk = expand_running_key(&k, 2, 100).unwrap();
        assert!(rk.bases().iter().all(|&r| r == 0));
        assert_eq!(rk.len(), 100);
    }

    #[test]
    fn odd_or_tiny_alphabet_rejected() {
        let k = SeedKey::from_hex("ace1", None).unwrap();
        assert!(matches!(expand_running_key(&k, 49, 1), Err(Error::Parameter(_))));
        assert!(matches!(expand_running_key(&k, 0, 1), Err(Error::Parameter(_))));
        assert!(expand_running_key(&k, 50, 0).unwrap().is_empty());
    }

    #[test]
    fn expansion_is_deterministic() {
        let k = SeedKey::from_hex("beef", None).unwrap();
        assert_eq!(
            expand_running_key(&k, 50, 500).unwrap(),
            expand_running_key(&k, 50, 500).unwrap()
        );
    }

    #[test]
    fn csv_export() {
        let k = SeedKey::from_hex("ace1", None).unwrap();
        let rk = expand_running_key(&k, 50, 3).unwrap();
        let mut buf = Vec::new();
        rk.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "symbol_index,basis_index");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], format!("0,{}", rk.bases()[0]));
    }
}
