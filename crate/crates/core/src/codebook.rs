//! H2DF-(K,1,B) codebooks built from Reed-Solomon words (Kautz-Singleton).
//!
//! Column `j` is the RS codeword of the polynomial whose coefficients are the
//! base-`q` digits of `j`, evaluated at the first `n0` field elements. Each
//! q-ary symbol `s` in block `t` sets bit `t*q + s`, so every column has
//! weight exactly `n0`. When `n0 = q + 1` the last block evaluates at the
//! point at infinity (the coefficient of `x^(k-1)`), i.e. the doubly-extended
//! RS code, which is still MDS.
//!
//! Columns are then handed out to LUs in contiguous submatrices of
//! `floor(C/K)` columns, each cut into `N` contiguous segments of
//! `floor(C/(K*N))` columns. Leftover columns belong to no segment and are
//! never used for signalling.

use std::io::{BufRead, Write};

use crate::codeword::{asp_sum_words, sp_sum_all, AspVector, BinaryCodeword};
use crate::error::{Error, Result};
use crate::gf::{is_prime_power, FieldElement, FieldSpec};

/// Upper limit on `C = q^k`; columns are materialized.
pub const MAX_CODEBOOK_SIZE: u64 = 1 << 22;

/// Default work budget (cover tests) for [`H2dfCodebook::verify_cover_free`].
pub const DEFAULT_VERIFY_BUDGET: u128 = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeParams {
    users: usize,
    dim: usize,
    q: u32,
    segments: usize,
}

impl CodeParams {
    /// Validates `(K, k, q, N)`.
    pub fn new(users: usize, dim: usize, q: u32, segments: usize) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if users < 2 {
            return bad(format!("K = {users} < 2"));
        }
        if dim < 2 || users * (dim - 1) < 3 {
            return bad(format!("K(k-1) = {} < 3", users * dim.saturating_sub(1)));
        }
        if (q as usize) < users * (dim - 1) {
            return bad(format!("q = {q} < K(k-1) = {}", users * (dim - 1)));
        }
        if !is_prime_power(q) {
            return bad(format!("q = {q} is not a prime power"));
        }
        let size = (q as u64).checked_pow(dim as u32).unwrap_or(u64::MAX);
        if size > MAX_CODEBOOK_SIZE {
            return bad(format!("C = q^k = {q}^{dim} is too large to materialize"));
        }
        let max_n = optimal_segments(size as usize, users);
        if segments < 1 || segments > max_n {
            return bad(format!("N = {segments} outside [1, {max_n}]"));
        }
        Ok(CodeParams {
            users,
            dim,
            q,
            segments,
        })
    }

    /// Number of LUs `K`.
    pub fn users(&self) -> usize {
        self.users
    }

    /// RS dimension `k`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// RS length `n0 = 1 + K(k-1)`.
    pub fn rs_len(&self) -> usize {
        1 + self.users * (self.dim - 1)
    }

    /// Binary length `B = q * n0`.
    pub fn len(&self) -> usize {
        self.q as usize * self.rs_len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Codebook size `C = q^k`.
    pub fn size(&self) -> usize {
        (self.q as usize).pow(self.dim as u32)
    }

    /// Segments per submatrix `N`.
    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn submatrix_size(&self) -> usize {
        self.size() / self.users
    }

    pub fn segment_size(&self) -> usize {
        self.size() / (self.users * self.segments)
    }
}

/// Columns covered by a word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    /// Ascending column indices.
    pub members: Vec<usize>,
    /// The OR of the members reproduces the word.
    pub complete: bool,
}

#[derive(Debug, Clone)]
pub struct H2dfCodebook {
    params: CodeParams,
    columns: Vec<BinaryCodeword>,
    positions: Vec<Vec<u32>>,
    submatrix_of: Vec<Option<usize>>,
    segment_of: Vec<Option<usize>>,
}

/// Largest `N` with `2 K N^2 <= C`, at least 1.
pub fn optimal_segments(size: usize, users: usize) -> usize {
    let mut n = ((size as f64 / (2.0 * users as f64)).sqrt()) as usize + 1;
    while n > 1 && 2 * users * n * n > size {
        n -= 1;
    }
    n.max(1)
}

impl H2dfCodebook {
    /// MDS construction for validated parameters.
    pub fn construct(params: CodeParams) -> Result<Self> {
        let field = FieldSpec::new(params.q())?;
        let q = params.q() as usize;
        let n0 = params.rs_len();
        let dim = params.dim();
        if n0 > q + 1 {
            return Err(Error::InvalidParams(format!(
                "RS length {n0} exceeds q + 1 = {}",
                q + 1
            )));
        }
        let len = params.len();
        let columns = (0..params.size())
            .map(|j| {
                let mut digits = j;
                let coeffs: Vec<FieldElement> = (0..dim)
                    .map(|_| {
                        let d = digits % q;
                        digits /= q;
                        field.element(d as u32)
                    })
                    .collect();
                let mut w = BinaryCodeword::zeros(len);
                for t in 0..n0 {
                    let symbol = if t < q {
                        field.poly_eval(&coeffs, field.element(t as u32))
                    } else {
                        coeffs[dim - 1]
                    };
                    w.set(t * q + symbol.repr() as usize, true);
                }
                w
            })
            .collect();
        Self::from_columns(params, columns)
    }

    /// Wraps arbitrary columns with the partition implied by `params`.
    pub fn from_columns(params: CodeParams, columns: Vec<BinaryCodeword>) -> Result<Self> {
        if columns.len() != params.size() {
            return Err(Error::InvalidParams(format!(
                "expected {} columns, got {}",
                params.size(),
                columns.len()
            )));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != params.len()) {
            return Err(Error::LengthMismatch {
                left: c.len(),
                right: params.len(),
            });
        }
        let sub = params.submatrix_size();
        let seg = params.segment_size();
        let mut submatrix_of = vec![None; columns.len()];
        let mut segment_of = vec![None; columns.len()];
        for lu in 0..params.users() {
            for s in 0..params.segments() {
                for p in 0..seg {
                    segment_of[lu * sub + s * seg + p] = Some(s);
                }
            }
            for slot in submatrix_of.iter_mut().skip(lu * sub).take(sub) {
                *slot = Some(lu);
            }
        }
        let positions = columns
            .iter()
            .map(|c| c.ones_iter().map(|i| i as u32).collect())
            .collect();
        Ok(H2dfCodebook {
            params,
            columns,
            positions,
            submatrix_of,
            segment_of,
        })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn size(&self) -> usize {
        self.columns.len()
    }

    pub fn users(&self) -> usize {
        self.params.users()
    }

    pub fn column(&self, j: usize) -> &BinaryCodeword {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[BinaryCodeword] {
        &self.columns
    }

    pub fn submatrix_of(&self, j: usize) -> Option<usize> {
        self.submatrix_of[j]
    }

    pub fn segment_of(&self, j: usize) -> Option<usize> {
        self.segment_of[j]
    }

    /// Column range of LU `lu`'s submatrix.
    pub fn submatrix(&self, lu: usize) -> std::ops::Range<usize> {
        let s = self.params.submatrix_size();
        lu * s..(lu + 1) * s
    }

    /// Column range of a segment within LU `lu`'s submatrix.
    pub fn segment(&self, lu: usize, segment: usize) -> std::ops::Range<usize> {
        let start = self.submatrix(lu).start + segment * self.params.segment_size();
        start..start + self.params.segment_size()
    }

    pub fn sp_of(&self, set: &[usize]) -> BinaryCodeword {
        sp_sum_all(self.len(), set.iter().map(|&j| &self.columns[j]))
            .expect("codebook columns share one length")
    }

    pub fn asp_of(&self, set: &[usize]) -> AspVector {
        asp_sum_words(self.len(), set.iter().map(|&j| &self.columns[j]))
            .expect("codebook columns share one length")
    }

    fn column_covered_by(&self, j: usize, w: &BinaryCodeword) -> bool {
        self.positions[j].iter().all(|&i| w.get(i as usize))
    }

    /// All columns covered by `w`, ascending.
    pub fn decompose(&self, w: &BinaryCodeword) -> Decomposition {
        let members: Vec<usize> = (0..self.size())
            .filter(|&j| self.column_covered_by(j, w))
            .collect();
        let complete = w.len() == self.len() && self.sp_of(&members) == *w;
        Decomposition { members, complete }
    }

    /// If `w` is the SP sum of exactly one column per LU submatrix, returns
    /// those columns in LU order. This is the membership test `w ∈ B̄_K`.
    pub fn mucd_set(&self, w: &BinaryCodeword) -> Option<Vec<usize>> {
        if w.len() != self.len() {
            return None;
        }
        let d = self.decompose(w);
        if !d.complete || d.members.len() != self.users() {
            return None;
        }
        let mut seen = vec![false; self.users()];
        for &j in &d.members {
            let lu = self.submatrix_of[j]?;
            if std::mem::replace(&mut seen[lu], true) {
                return None;
            }
        }
        // contiguous submatrices: ascending column order is LU order
        Some(d.members)
    }

    /// Every column has the same weight `n0`.
    pub fn is_constant_weight(&self) -> bool {
        let n0 = self.params.rs_len();
        self.columns.iter().all(|c| c.weight() == n0)
    }

    /// Exhaustive cover-free check of order `K`: no SP sum of `K` columns
    /// covers a column outside the sum.
    pub fn verify_cover_free(&self, budget: u128) -> Result<bool> {
        let c = self.size();
        let k = self.users();
        let needed = binomial(c as u128, k as u128).saturating_mul((c - k) as u128);
        if needed > budget {
            return Err(Error::TooLarge { needed, budget });
        }
        let mut ok = true;
        for_each_subset(c, k, &mut |subset| {
            let or = self.sp_of(subset);
            let bad = (0..c).any(|j| !subset.contains(&j) && self.column_covered_by(j, &or));
            if bad {
                ok = false;
            }
            !bad
        });
        Ok(ok)
    }

    /// Checks `decompose(sp_sum(P)) == P` for every subset `P` of size
    /// `1..=K` (exhaustive). Returns the first failing subset.
    pub fn check_decompose_roundtrip(&self, budget: u128) -> Result<Option<Vec<usize>>> {
        let c = self.size() as u128;
        let k = self.users();
        let needed: u128 = (1..=k as u128).map(|s| binomial(c, s)).sum::<u128>() * c;
        if needed > budget {
            return Err(Error::TooLarge { needed, budget });
        }
        let mut failing = None;
        for size in 1..=k {
            for_each_subset(self.size(), size, &mut |subset| {
                let d = self.decompose(&self.sp_of(subset));
                if d.members != subset || !d.complete {
                    failing = Some(subset.to_vec());
                    return false;
                }
                true
            });
            if failing.is_some() {
                break;
            }
        }
        Ok(failing)
    }

    /// Maps a pilot phase index to a column of LU `lu`'s chosen segment.
    pub fn phase_to_codeword(&self, lu: usize, segment: usize, phase: usize) -> Result<usize> {
        if lu >= self.users() {
            return Err(Error::OutOfRange {
                index: lu,
                limit: self.users(),
            });
        }
        if segment >= self.params.segments() {
            return Err(Error::OutOfRange {
                index: segment,
                limit: self.params.segments(),
            });
        }
        let g = self.params.segment_size();
        if phase >= g {
            return Err(Error::OutOfRange {
                index: phase,
                limit: g,
            });
        }
        Ok(self.segment(lu, segment).start + phase)
    }

    /// Inverse of [`phase_to_codeword`](Self::phase_to_codeword): `(lu, segment, phase)`.
    pub fn codeword_to_phase(&self, column: usize) -> Result<(usize, usize, usize)> {
        let out_of_range = Error::OutOfRange {
            index: column,
            limit: self.size(),
        };
        let lu = self
            .submatrix_of
            .get(column)
            .copied()
            .flatten()
            .ok_or(out_of_range.clone())?;
        let segment = self.segment_of[column].ok_or(out_of_range)?;
        Ok((lu, segment, column - self.segment(lu, segment).start))
    }

    /// Writes the text matrix format (see README).
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let p = &self.params;
        writeln!(out, "H2DF-CODEBOOK 1")?;
        writeln!(
            out,
            "K={} k={} q={} N={} B={} C={}",
            p.users(),
            p.dim(),
            p.q(),
            p.segments(),
            p.len(),
            p.size()
        )?;
        let mut row = String::with_capacity(self.size());
        for i in 0..self.len() {
            row.clear();
            row.extend(self.columns.iter().map(|c| if c.get(i) { '1' } else { '0' }));
            writeln!(out, "{row}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let fmt_err = |m: &str| Error::Format(m.to_string());
        let mut lines = input.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| fmt_err("unexpected end of file"))?
                .map_err(|e| Error::Format(e.to_string()))
        };
        if next()?.trim() != "H2DF-CODEBOOK 1" {
            return Err(fmt_err("missing 'H2DF-CODEBOOK 1' magic line"));
        }
        let header = next()?;
        let mut fields = std::collections::HashMap::new();
        for kv in header.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| fmt_err("bad header field"))?;
            let v: u64 = v.parse().map_err(|_| fmt_err("non-numeric header value"))?;
            fields.insert(k.to_string(), v);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::Format(format!("header lacks {k}")))
        };
        let params = CodeParams::new(
            get("K")? as usize,
            get("k")? as usize,
            get("q")? as u32,
            get("N")? as usize,
        )?;
        if get("B")? as usize != params.len() || get("C")? as usize != params.size() {
            return Err(fmt_err("B/C in header inconsistent with K, k, q"));
        }
        let mut columns = vec![BinaryCodeword::zeros(params.len()); params.size()];
        for i in 0..params.len() {
            let row = next()?;
            let row = row.trim();
            if row.len() != params.size() {
                return Err(Error::Format(format!("row {i} has {} digits", row.len())));
            }
            for (j, ch) in row.chars().enumerate() {
                match ch {
                    '1' => columns[j].set(i, true),
                    '0' => {}
                    _ => return Err(Error::Format(format!("bad digit {ch:?} in row {i}"))),
                }
            }
        }
        Self::from_columns(params, columns)
    }
}

pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Visits every `k`-subset of `0..n` in lexicographic order until `f` returns false.
pub fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize]) -> bool) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !f(&idx) {
            return;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for t in i + 1..k {
            idx[t] = idx[t - 1] + 1;
        }
    }
}
