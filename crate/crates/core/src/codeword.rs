//! Binary codewords (SP algebra) and small-integer count vectors (ASP algebra).

use std::fmt;

use crate::error::{Error, Result};

/// Fixed-length bit vector. Digit `i` is the occupancy of pilot subcarrier `i`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryCodeword {
    words: Vec<u64>,
    len: usize,
}

impl BinaryCodeword {
    pub fn zeros(len: usize) -> Self {
        BinaryCodeword {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut w = Self::zeros(len);
        w.words.iter_mut().for_each(|x| *x = !0);
        w.clear_tail();
        w
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut w = Self::zeros(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            if b {
                w.set(i, true);
            }
        }
        w
    }

    /// Builds from a `0`/`1` slice; any nonzero byte counts as 1.
    pub fn from_digits(digits: &[u8]) -> Self {
        Self::from_bits(digits.iter().map(|&d| d != 0))
    }

    pub fn from_positions(len: usize, positions: &[usize]) -> Self {
        let mut w = Self::zeros(len);
        for &p in positions {
            w.set(p, true);
        }
        w
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        if v {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn flip(&mut self, i: usize) {
        let v = self.get(i);
        self.set(i, !v);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_all_ones(&self) -> bool {
        self.weight() == self.len
    }

    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// In-place OR; caller guarantees equal lengths.
    pub fn or_assign(&mut self, other: &BinaryCodeword) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// `true` iff `self ∨ other == self`.
    pub fn covers_unchecked(&self, other: &BinaryCodeword) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| b & !a == 0)
    }

    /// Number of positions where the two words differ.
    pub fn hamming(&self, other: &BinaryCodeword) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    fn clear_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }
}

impl fmt::Debug for BinaryCodeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

impl fmt::Display for BinaryCodeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Digit-wise Boolean sum.
pub fn sp_sum(a: &BinaryCodeword, b: &BinaryCodeword) -> Result<BinaryCodeword> {
    check_len(a.len, b.len)?;
    let mut out = a.clone();
    out.or_assign(b);
    Ok(out)
}

/// SP sum of any number of words of length `len`.
pub fn sp_sum_all<'a, I>(len: usize, words: I) -> Result<BinaryCodeword>
where
    I: IntoIterator<Item = &'a BinaryCodeword>,
{
    let mut out = BinaryCodeword::zeros(len);
    for w in words {
        check_len(len, w.len)?;
        out.or_assign(w);
    }
    Ok(out)
}

/// `x` covers `y` iff `y ∨ x = x`.
pub fn covers(x: &BinaryCodeword, y: &BinaryCodeword) -> Result<bool> {
    check_len(x.len, y.len)?;
    Ok(x.covers_unchecked(y))
}

/// Per-subcarrier signal counts.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct AspVector {
    counts: Vec<u16>,
}

impl AspVector {
    pub fn zeros(len: usize) -> Self {
        AspVector {
            counts: vec![0; len],
        }
    }

    pub fn from_counts(counts: Vec<u16>) -> Self {
        AspVector { counts }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[u16] {
        &self.counts
    }

    pub fn get(&self, i: usize) -> u16 {
        self.counts[i]
    }

    /// Binary indicator `counts[i] >= 1`.
    pub fn support(&self) -> BinaryCodeword {
        BinaryCodeword::from_bits(self.counts.iter().map(|&c| c >= 1))
    }

    /// Adds a binary word digit-wise (the paired-code view of a codeword).
    pub fn add_word(&mut self, w: &BinaryCodeword) -> Result<()> {
        check_len(self.len(), w.len())?;
        for i in w.ones_iter() {
            self.counts[i] += 1;
        }
        Ok(())
    }

    /// Subtracts a binary word; `None` if any digit would go negative.
    pub fn checked_sub_word(&self, w: &BinaryCodeword) -> Option<AspVector> {
        if self.len() != w.len() {
            return None;
        }
        let mut out = self.clone();
        for i in w.ones_iter() {
            out.counts[i] = out.counts[i].checked_sub(1)?;
        }
        Some(out)
    }

    /// Elementwise `self - other`; `None` on length mismatch or a negative digit.
    pub fn checked_sub(&self, other: &AspVector) -> Option<AspVector> {
        if self.len() != other.len() {
            return None;
        }
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(&a, &b)| a.checked_sub(b))
            .collect::<Option<Vec<_>>>()?;
        Some(AspVector { counts })
    }

    /// The vector as a binary word, if every digit is 0 or 1.
    pub fn as_binary(&self) -> Option<BinaryCodeword> {
        self.counts
            .iter()
            .all(|&c| c <= 1)
            .then(|| self.support())
    }
}

impl From<&BinaryCodeword> for AspVector {
    fn from(w: &BinaryCodeword) -> Self {
        AspVector {
            counts: w.bits().map(u16::from).collect(),
        }
    }
}

impl fmt::Debug for AspVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.counts)
    }
}

/// Digit-wise integer sum.
pub fn asp_sum(a: &AspVector, b: &AspVector) -> Result<AspVector> {
    check_len(a.len(), b.len())?;
    Ok(AspVector {
        counts: a.counts.iter().zip(&b.counts).map(|(x, y)| x + y).collect(),
    })
}

/// ASP sum of binary words, each contributing 1 per set digit.
pub fn asp_sum_words<'a, I>(len: usize, words: I) -> Result<AspVector>
where
    I: IntoIterator<Item = &'a BinaryCodeword>,
{
    let mut out = AspVector::zeros(len);
    for w in words {
        out.add_word(w)?;
    }
    Ok(out)
}
