//! The random-binning enrollment ensemble: sampling codes, enrolling source
//! vectors, and bin-occupancy statistics.
//!
//! An enrollment code assigns every source vector in `X^n` an independent
//! uniform pair `(w, s)` of helper and key indices. The number of bins at
//! rate `r` (nats/symbol) is `max(1, round(e^{n·r}))`, the symmetric-rounding
//! discretization of the continuous rate: `(1/n)·ln m − r = O(1/n)` and
//! `m = 1` at `r = 0`.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::measures::joint_counts;
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Guard on materialized source-vector enumerations: `|X|^n <= 2^24`.
pub const MAX_VECTORS: u64 = 1 << 24;

/// Stream-id salt for per-vector bin draws.
const STREAM_BIN: u64 = 0x01;

/// Secret-key and helper-message rates in nats per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r_s: f64,
    pub r_w: f64,
}

impl RatePair {
    pub fn new(r_s: f64, r_w: f64) -> Result<Self> {
        for (name, r) in [("r_s", r_s), ("r_w", r_w)] {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {r} must be finite and non-negative"
                )));
            }
        }
        Ok(Self { r_s, r_w })
    }
}

/// Number of bins for rate `r` at blocklength `n`.
pub fn bin_count(n: u32, rate: f64) -> u64 {
    ((n as f64 * rate).exp().round() as u64).max(1)
}

/// A realized random-binning enrollment encoder.
///
/// `f_table` maps each source vector (by lexicographic rank, first symbol
/// most significant) to its helper index, `g_table` to its key index.
/// Reconstruction from `(seed, n, rates)` is bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct BinningCode {
    n: u32,
    x_alphabet: u32,
    m_s: u64,
    m_w: u64,
    f_table: Vec<u32>,
    g_table: Vec<u32>,
    seed: u64,
}

impl BinningCode {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn x_alphabet(&self) -> u32 {
        self.x_alphabet
    }

    pub fn num_keys(&self) -> u64 {
        self.m_s
    }

    pub fn num_helpers(&self) -> u64 {
        self.m_w
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_vectors(&self) -> u64 {
        self.f_table.len() as u64
    }

    #[inline]
    pub fn helper_of(&self, rank: u64) -> u32 {
        self.f_table[rank as usize]
    }

    #[inline]
    pub fn key_of(&self, rank: u64) -> u32 {
        self.g_table[rank as usize]
    }

    /// Lexicographic rank of a source vector.
    pub fn rank_of(&self, x: &[usize]) -> Result<u64> {
        if x.len() != self.n as usize {
            return Err(Error::LengthMismatch(x.len(), self.n as usize));
        }
        let mut rank: u64 = 0;
        for &sym in x {
            if sym >= self.x_alphabet as usize {
                return Err(Error::SymbolOutOfRange {
                    symbol: sym,
                    alphabet: self.x_alphabet as usize,
                });
            }
            rank = rank * self.x_alphabet as u64 + sym as u64;
        }
        Ok(rank)
    }

    /// Decode a lexicographic rank back into symbols.
    pub fn vector_of(&self, mut rank: u64, out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.n as usize);
        for slot in out.iter_mut().rev() {
            *slot = (rank % self.x_alphabet as u64) as usize;
            rank /= self.x_alphabet as u64;
        }
    }
}

/// Draw a full random-binning code: every source vector gets an i.i.d.
/// uniform (helper, key) pair, deterministically from `seed`.
///
/// Vector `i` draws from the sub-stream `(seed, i)`, so table construction
/// parallelizes without changing the result.
pub fn sample_code(n: u32, x_alphabet: u32, rates: RatePair, seed: u64) -> Result<BinningCode> {
    if n == 0 || x_alphabet == 0 {
        return Err(Error::InvalidArgument(
            "blocklength and alphabet must be positive".into(),
        ));
    }
    let size = (x_alphabet as u128).pow(n);
    if size > MAX_VECTORS as u128 {
        return Err(Error::GuardExceeded {
            what: "source vector enumeration",
            count: size,
            limit: MAX_VECTORS as u128,
        });
    }
    let size = size as u64;
    let m_s = bin_count(n, rates.r_s);
    let m_w = bin_count(n, rates.r_w);
    if m_s > u32::MAX as u64 || m_w > u32::MAX as u64 {
        return Err(Error::GuardExceeded {
            what: "bin count",
            count: m_s.max(m_w) as u128,
            limit: u32::MAX as u128,
        });
    }

    let pairs: Vec<(u32, u32)> = (0..size)
        .into_par_iter()
        .map(|i| {
            let mut rng = SplitMix64::from_path(seed, &[STREAM_BIN, i]);
            let w = rng.next_below(m_w) as u32;
            let s = rng.next_below(m_s) as u32;
            (w, s)
        })
        .collect();
    let f_table = pairs.iter().map(|&(w, _)| w).collect();
    let g_table = pairs.iter().map(|&(_, s)| s).collect();

    Ok(BinningCode {
        n,
        x_alphabet,
        m_s,
        m_w,
        f_table,
        g_table,
        seed,
    })
}

/// Enroll a source vector: returns `(key index, helper index)`.
pub fn enroll(code: &BinningCode, x: &[usize]) -> Result<(u32, u32)> {
    let rank = code.rank_of(x)?;
    Ok((code.key_of(rank), code.helper_of(rank)))
}

/// Count the members of the conditional type class `T(Q_{X|Y}|y)` that the
/// code maps to helper bin `w`.
///
/// The class is specified by the joint counts of `(x', y)` (flattened with
/// `y` fastest): `x'` belongs iff its joint empirical counts with `y` equal
/// `joint`. Enumeration runs over all of `X^n`, so the code guard applies.
pub fn bin_occupancy(
    code: &BinningCode,
    joint: &[u64],
    y: &[usize],
    y_alphabet: usize,
    w: u32,
) -> Result<u64> {
    if y.len() != code.n as usize {
        return Err(Error::LengthMismatch(y.len(), code.n as usize));
    }
    let x_alphabet = code.x_alphabet as usize;
    if joint.len() != x_alphabet * y_alphabet {
        return Err(Error::ShapeMismatch(format!(
            "joint counts have {} cells, expected {}",
            joint.len(),
            x_alphabet * y_alphabet
        )));
    }
    let size = code.num_vectors();
    let count = (0..size)
        .into_par_iter()
        .filter(|&rank| {
            if code.helper_of(rank) != w {
                return false;
            }
            let mut x = vec![0usize; code.n as usize];
            code.vector_of(rank, &mut x);
            match joint_counts(&x, y, x_alphabet, y_alphabet) {
                Ok(c) => c == joint,
                Err(_) => false,
            }
        })
        .count();
    Ok(count as u64)
}

const MAGIC: &[u8; 4] = b"BINC";
const FORMAT_VERSION: u16 = 1;

/// Serialize a code: header `(magic, version, n, |X|, m_s, m_w, seed)`
/// followed by the `f` and `g` tables as little-endian `u32` in
/// lexicographic vector order.
pub fn write_code<W: Write>(code: &BinningCode, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&code.n.to_le_bytes())?;
    out.write_all(&code.x_alphabet.to_le_bytes())?;
    out.write_all(&(code.m_s as u32).to_le_bytes())?;
    out.write_all(&(code.m_w as u32).to_le_bytes())?;
    out.write_all(&code.seed.to_le_bytes())?;
    for &w in &code.f_table {
        out.write_all(&w.to_le_bytes())?;
    }
    for &s in &code.g_table {
        out.write_all(&s.to_le_bytes())?;
    }
    Ok(())
}

/// Deserialize a code written by [`write_code`].
pub fn read_code<R: Read>(mut input: R) -> Result<BinningCode> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::MalformedCodeFile("bad magic".into()));
    }
    let version = read_u16(&mut input)?;
    if version != FORMAT_VERSION {
        return Err(Error::MalformedCodeFile(format!(
            "unsupported version {version}"
        )));
    }
    let n = read_u32(&mut input)?;
    let x_alphabet = read_u32(&mut input)?;
    let m_s = read_u32(&mut input)? as u64;
    let m_w = read_u32(&mut input)? as u64;
    let seed = read_u64(&mut input)?;
    if n == 0 || x_alphabet == 0 || m_s == 0 || m_w == 0 {
        return Err(Error::MalformedCodeFile("zero dimension".into()));
    }
    let size = (x_alphabet as u128).pow(n);
    if size > MAX_VECTORS as u128 {
        return Err(Error::MalformedCodeFile("table too large".into()));
    }
    let size = size as usize;
    let mut read_table = |m: u64| -> Result<Vec<u32>> {
        let mut table = Vec::with_capacity(size);
        for _ in 0..size {
            let v = read_u32(&mut input)?;
            if v as u64 >= m {
                return Err(Error::MalformedCodeFile(format!(
                    "bin index {v} out of range {m}"
                )));
            }
            table.push(v);
        }
        Ok(table)
    };
    let f_table = read_table(m_w)?;
    let g_table = read_table(m_s)?;
    Ok(BinningCode {
        n,
        x_alphabet,
        m_s,
        m_w,
        f_table,
        g_table,
        seed,
    })
}

/// Write a code to a file path.
pub fn write_code_file<P: AsRef<Path>>(code: &BinningCode, path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_code(code, std::io::BufWriter::new(file))
}

/// Read a code from a file path.
pub fn read_code_file<P: AsRef<Path>>(path: P) -> Result<BinningCode> {
    let file = std::fs::File::open(path)?;
    read_code(std::io::BufReader::new(file))
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rates(r_s: f64, r_w: f64) -> RatePair {
        RatePair::new(r_s, r_w).unwrap()
    }

    #[test]
    fn bin_count_rounding() {
        assert_eq!(bin_count(4, 0.0), 1);
        // e^{2 ln 2} = 4 exactly.
        assert_eq!(bin_count(2, std::f64::consts::LN_2), 4);
        // e^{1.6} = 4.953... rounds to 5.
        assert_eq!(bin_count(4, 0.4), 5);
    }

    #[test]
    fn degenerate_single_bin() {
        let code = sample_code(1, 2, rates(0.0, 0.0), 7).unwrap();
        assert_eq!(code.num_keys(), 1);
        assert_eq!(code.num_helpers(), 1);
        for rank in 0..code.num_vectors() {
            assert_eq!(code.helper_of(rank), 0);
            assert_eq!(code.key_of(rank), 0);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_code(4, 2, rates(0.3, 0.5), 1234).unwrap();
        let b = sample_code(4, 2, rates(0.3, 0.5), 1234).unwrap();
        assert_eq!(a, b);
        let c = sample_code(4, 2, rates(0.3, 0.5), 1235).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn golden_table_hash() {
        // Frozen fingerprint of the full table stream; regenerating the code
        // from (seed, n, rates) must stay bit-identical across releases.
        let code = sample_code(3, 2, rates(std::f64::consts::LN_2, 0.4), 99).unwrap();
        let mut h = 0xcbf29ce484222325u64;
        for rank in 0..code.num_vectors() {
            for v in [code.helper_of(rank) as u64, code.key_of(rank) as u64] {
                h ^= v;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        assert_eq!(h, 1797549857578626387);
    }

    #[test]
    fn enroll_matches_tables() {
        let code = sample_code(3, 2, rates(0.4, 0.6), 5).unwrap();
        let x = [1usize, 0, 1];
        let rank = code.rank_of(&x).unwrap();
        assert_eq!(rank, 5);
        let (s, w) = enroll(&code, &x).unwrap();
        assert_eq!(s, code.key_of(rank));
        assert_eq!(w, code.helper_of(rank));
        // Repeated calls are identical, and a rebuilt code agrees.
        assert_eq!(enroll(&code, &x).unwrap(), (s, w));
        let rebuilt = sample_code(3, 2, rates(0.4, 0.6), 5).unwrap();
        assert_eq!(enroll(&rebuilt, &x).unwrap(), (s, w));
        assert!(enroll(&code, &[0, 2, 0]).is_err());
        assert!(enroll(&code, &[0, 1]).is_err());
    }

    #[test]
    fn guard_rejects_large_enumerations() {
        assert!(matches!(
            sample_code(32, 4, rates(0.1, 0.1), 1).err().unwrap(),
            Error::GuardExceeded { .. }
        ));
    }

    #[test]
    fn occupancy_single_bin_counts_whole_class() {
        // m_w = 1: occupancy equals the size of the conditional type class.
        let code = sample_code(4, 2, rates(0.5, 0.0), 3).unwrap();
        let y = [0usize, 0, 1, 1];
        // Class: one 1 among positions with y=0, one 1 among positions with
        // y=1 -> C(2,1) * C(2,1) = 4 members.
        let joint = vec![1u64, 1, 1, 1];
        let occ = bin_occupancy(&code, &joint, &y, 2, 0).unwrap();
        assert_eq!(occ, 4);
    }

    #[test]
    fn occupancy_empty_class_is_zero() {
        let code = sample_code(3, 2, rates(0.0, 0.4), 3).unwrap();
        let y = [0usize, 0, 0];
        // Joint counts referencing y = 1 cells cannot match this y.
        let joint = vec![1u64, 1, 1, 0];
        assert_eq!(bin_occupancy(&code, &joint, &y, 2, 0).unwrap(), 0);
    }

    #[test]
    fn dump_roundtrip_and_golden_header() {
        let code = sample_code(2, 2, rates(0.3, 0.6), 77).unwrap();
        let mut buf = Vec::new();
        write_code(&code, &mut buf).unwrap();
        assert_eq!(&buf[0..4], b"BINC");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
        assert_eq!(buf.len(), 4 + 2 + 4 + 4 + 4 + 4 + 8 + 2 * 4 * 4);
        let back = read_code(&buf[..]).unwrap();
        assert_eq!(back, code);

        // Corrupt magic.
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_code(&bad[..]).is_err());
    }
}
