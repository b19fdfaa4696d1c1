use std::io::{Read, Write};

use super::SievingSet;
use crate::{Error, Result};

/// Magic bytes opening an exported segment bitmap.
pub const BITMAP_MAGIC: [u8; 4] = *b"BFS1";

/// Exact B-free sieve over arbitrary ranges below a fixed end.
///
/// Only generators `b ≤ end` can divide an integer in the range, so the
/// generator list is cut there and no truncation error exists.
#[derive(Clone, Debug)]
pub struct SegmentSieve {
    generators: Vec<u64>,
    end: u64,
}

impl SegmentSieve {
    /// Prepares a sieve able to handle any range inside `[1, end]`.
    pub fn new(set: &SievingSet, end: u64) -> Self {
        Self {
            generators: set.elements_upto(end),
            end,
        }
    }

    pub fn end(&self) -> u64 {
        self.end
    }

    /// Writes `1` into `out[i]` iff `start + i` is B-free.
    pub fn fill(&self, start: u64, out: &mut [u8]) {
        debug_assert!(start >= 1);
        out.fill(1);
        if out.is_empty() {
            return;
        }
        let last = start + out.len() as u64 - 1;
        debug_assert!(last <= self.end);
        for &b in &self.generators {
            if b > last {
                break;
            }
            let first = start.div_ceil(b) * b;
            let mut i = (first - start) as usize;
            let step = b as usize;
            while i < out.len() {
                out[i] = 0;
                i += step;
            }
        }
    }
}

/// Bitmap of the B-free indicator over `[start, start + len)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BFreeSegment {
    start: u64,
    len: u64,
    words: Vec<u64>,
}

impl BFreeSegment {
    fn from_bytes(start: u64, bytes: &[u8]) -> Self {
        let mut words = vec![0u64; bytes.len().div_ceil(64)];
        for (i, &v) in bytes.iter().enumerate() {
            words[i / 64] |= (v as u64) << (i % 64);
        }
        Self {
            start,
            len: bytes.len() as u64,
            words,
        }
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Indicator at offset `i` (the integer `start + i`).
    pub fn bit(&self, i: u64) -> bool {
        assert!(i < self.len, "offset {i} outside segment of length {}", self.len);
        (self.words[(i / 64) as usize] >> (i % 64)) & 1 == 1
    }

    /// Indicator of the integer `n`, which must lie in the segment.
    pub fn contains_bfree(&self, n: u64) -> bool {
        self.bit(n - self.start)
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// The B-free integers in the segment, ascending.
    pub fn iter_bfree(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).filter(|&i| self.bit(i)).map(move |i| self.start + i)
    }

    /// Appends `other`, which must start right where `self` ends.
    pub fn concat(&self, other: &BFreeSegment) -> Result<BFreeSegment> {
        if self.start + self.len != other.start {
            return Err(Error::Precondition(format!(
                "segments [{}, +{}) and [{}, +{}) are not adjacent",
                self.start, self.len, other.start, other.len
            )));
        }
        let bytes: Vec<u8> = (0..self.len)
            .map(|i| self.bit(i) as u8)
            .chain((0..other.len).map(|i| other.bit(i) as u8))
            .collect();
        Ok(Self::from_bytes(self.start, &bytes))
    }

    /// Raw export: 16-byte header (`BFS1`, start as `u64` LE, len as `u32`
    /// LE) followed by the bitmap as little-endian `u64` words, bit `i` of
    /// the stream being offset `i`.
    pub fn write_bitmap<W: Write>(&self, mut w: W) -> Result<()> {
        let len32 = u32::try_from(self.len)
            .map_err(|_| Error::Overflow(format!("segment length {} exceeds u32", self.len)))?;
        w.write_all(&BITMAP_MAGIC)?;
        w.write_all(&self.start.to_le_bytes())?;
        w.write_all(&len32.to_le_bytes())?;
        for word in &self.words {
            w.write_all(&word.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_bitmap<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if header[..4] != BITMAP_MAGIC {
            return Err(Error::Parse {
                line: 0,
                msg: "bad bitmap magic".into(),
            });
        }
        let start = u64::from_le_bytes(header[4..12].try_into().expect("8 bytes"));
        let len = u32::from_le_bytes(header[12..16].try_into().expect("4 bytes")) as u64;
        let mut words = vec![0u64; len.div_ceil(64) as usize];
        let mut buf = [0u8; 8];
        for word in &mut words {
            r.read_exact(&mut buf)?;
            *word = u64::from_le_bytes(buf);
        }
        Ok(Self { start, len, words })
    }
}

/// Exact B-free bitmap of `[start, start + len)`.
pub fn bfree_segment(set: &SievingSet, start: u64, len: u64) -> Result<BFreeSegment> {
    if start == 0 || len == 0 {
        return Err(Error::Precondition(format!(
            "segment needs start ≥ 1 and len ≥ 1, got start={start}, len={len}"
        )));
    }
    let last = start
        .checked_add(len - 1)
        .ok_or_else(|| Error::Overflow(format!("start {start} + len {len} exceeds u64")))?;
    let len_usize = usize::try_from(len)
        .map_err(|_| Error::Overflow(format!("segment length {len} exceeds usize")))?;
    let sieve = SegmentSieve::new(set, last);
    let mut bytes = vec![0u8; len_usize];
    sieve.fill(start, &mut bytes);
    Ok(BFreeSegment::from_bytes(start, &bytes))
}

/// `N_{B-free}(x)`: the number of B-free `n ≤ x`.
pub fn count_bfree(set: &SievingSet, x: u64) -> u64 {
    const BLOCK: u64 = 1 << 20;
    if x == 0 {
        return 0;
    }
    let sieve = SegmentSieve::new(set, x);
    let mut buf = vec![0u8; BLOCK as usize];
    let mut total = 0u64;
    let mut start = 1;
    while start <= x {
        let len = BLOCK.min(x - start + 1) as usize;
        sieve.fill(start, &mut buf[..len]);
        total += buf[..len].iter().map(|&b| b as u64).sum::<u64>();
        start += len as u64;
    }
    total
}
