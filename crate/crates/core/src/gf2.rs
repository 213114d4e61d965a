//! Dense bit-packed linear algebra over GF(2).
//!
//! Rows are stored as little-endian `u64` words: column `j` lives in word
//! `j / 64`, bit `j % 64`. Bits past `cols` in the last word of a row are
//! always zero, so derived equality is bitwise equality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[inline]
pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BitMatrixJson", into = "BitMatrixJson")]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    bits: Vec<u64>,
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let s: String = (0..self.cols)
                .map(|c| if self.get(r, c) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {s}")?;
        }
        Ok(())
    }
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        let words = words_for(cols);
        Ok(BitMatrix {
            rows,
            cols,
            words,
            bits: vec![0; rows * words],
        })
    }

    pub fn identity(k: usize) -> Result<Self> {
        let mut m = Self::zeros(k, k)?;
        for i in 0..k {
            m.set(i, i, true);
        }
        Ok(m)
    }

    /// Builds a matrix from rows written as `'0'`/`'1'` strings.
    pub fn from_bit_strings(rows: &[&str]) -> Result<Self> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut m = Self::zeros(rows.len(), cols)?;
        for (r, s) in rows.iter().enumerate() {
            if s.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: s.len(),
                });
            }
            for (c, ch) in s.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => m.set(r, c, true),
                    _ => {
                        return Err(Error::InvalidArgument(format!(
                            "invalid bit character {ch:?}"
                        )))
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut m = Self::zeros(rows.len(), cols)?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            for (c, &b) in row.iter().enumerate() {
                m.set(r, c, b);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of `u64` words per packed row.
    #[inline]
    pub fn row_words(&self) -> usize {
        self.words
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.bits[r * self.words + c / 64] >> (c % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = &mut self.bits[r * self.words + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u64] {
        &self.bits[r * self.words..(r + 1) * self.words]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.bits[r * self.words..(r + 1) * self.words]
    }

    /// Bits `start..start + len` of row `r`, packed from bit 0.
    pub fn row_segment(&self, r: usize, start: usize, len: usize) -> Vec<u64> {
        let mut out = vec![0u64; words_for(len).max(1)];
        if len > 0 {
            copy_bits(self.row(r), start, len, &mut out);
        }
        out
    }

    pub fn row_bits(&self, r: usize) -> Vec<bool> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        let w = self.words;
        for i in 0..w {
            let v = self.bits[src * w + i];
            self.bits[dst * w + i] ^= v;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let w = self.words;
        for i in 0..w {
            self.bits.swap(a * w + i, b * w + i);
        }
    }

    /// Returns the matrix whose column `j` is column `perm.map()[j]` of `self`.
    pub fn permute_columns(&self, perm: &Permutation) -> Result<BitMatrix> {
        if perm.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: perm.len(),
            });
        }
        let mut out = BitMatrix::zeros(self.rows, self.cols)?;
        for r in 0..self.rows {
            for (j, &src) in perm.map().iter().enumerate() {
                if self.get(r, src) {
                    out.set(r, j, true);
                }
            }
        }
        Ok(out)
    }

    /// Submatrix made of columns `start..end`.
    pub fn column_slice(&self, start: usize, end: usize) -> Result<BitMatrix> {
        if start >= end || end > self.cols {
            return Err(Error::InvalidArgument(format!(
                "column range {start}..{end} out of 0..{}",
                self.cols
            )));
        }
        let mut out = BitMatrix::zeros(self.rows, end - start)?;
        for r in 0..self.rows {
            for c in start..end {
                if self.get(r, c) {
                    out.set(r, c - start, true);
                }
            }
        }
        Ok(out)
    }
}

/// Row vector times matrix: `result_j = XOR_i v_i * M[i][j]`.
pub fn mat_vec_mod2(m: &BitMatrix, v: &[bool]) -> Result<Vec<bool>> {
    if v.len() != m.rows {
        return Err(Error::DimensionMismatch {
            expected: m.rows,
            got: v.len(),
        });
    }
    let mut acc = vec![0u64; m.words];
    for (i, _) in v.iter().enumerate().filter(|(_, &b)| b) {
        for (a, w) in acc.iter_mut().zip(m.row(i)) {
            *a ^= w;
        }
    }
    Ok((0..m.cols)
        .map(|c| (acc[c / 64] >> (c % 64)) & 1 == 1)
        .collect())
}

pub fn rank_mod2(m: &BitMatrix) -> usize {
    let mut work = m.clone();
    let mut rank = 0;
    for c in 0..work.cols {
        if rank == work.rows {
            break;
        }
        let Some(p) = (rank..work.rows).find(|&r| work.get(r, c)) else {
            continue;
        };
        work.swap_rows(rank, p);
        for r in 0..work.rows {
            if r != rank && work.get(r, c) {
                work.xor_row_into(rank, r);
            }
        }
        rank += 1;
    }
    rank
}

/// A bijection on `0..n`.
///
/// Applying it forward gathers: `out[i] = v[map[i]]`. The inverse scatters
/// back, so `inverse(forward(v)) == v`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;
    fn try_from(map: Vec<usize>) -> Result<Self> {
        Permutation::new(map)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.map
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &m in &map {
            if m >= map.len() || seen[m] {
                return Err(Error::InvalidPermutation(format!(
                    "{map:?} is not a bijection on 0..{}",
                    map.len()
                )));
            }
            seen[m] = true;
        }
        Ok(Permutation { map })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            map: (0..n).collect(),
        }
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn inverse_map(&self) -> Vec<usize> {
        let mut inv = vec![0; self.map.len()];
        for (i, &m) in self.map.iter().enumerate() {
            inv[m] = i;
        }
        inv
    }

    pub fn apply<T: Clone>(&self, v: &[T], direction: Direction) -> Result<Vec<T>> {
        if v.len() != self.map.len() {
            return Err(Error::DimensionMismatch {
                expected: self.map.len(),
                got: v.len(),
            });
        }
        Ok(match direction {
            Direction::Forward => self.map.iter().map(|&m| v[m].clone()).collect(),
            Direction::Inverse => {
                let mut out = v.to_vec();
                for (i, &m) in self.map.iter().enumerate() {
                    out[m] = v[i].clone();
                }
                out
            }
        })
    }
}

pub fn apply_permutation<T: Clone>(
    v: &[T],
    perm: &Permutation,
    direction: Direction,
) -> Result<Vec<T>> {
    perm.apply(v, direction)
}

/// Systematic form `G_k = [I_k | P]` of a generator matrix together with the
/// column permutation and the row transform that produced it.
#[derive(Clone, Debug)]
pub struct SystematicForm {
    /// `[I_k | P]` in permuted column order.
    pub generator: BitMatrix,
    pub permutation: Permutation,
    /// `k x k` matrix `T` with `generator = (T * G)` column-permuted.
    pub transform: BitMatrix,
    /// Row XORs performed during elimination.
    pub row_ops: usize,
}

/// Gauss-Jordan elimination following a column preference order.
///
/// Columns are visited in `preference` order. A column becomes a pivot when
/// it is independent of the pivots already chosen; otherwise it is deferred
/// to the non-pivot segment. The returned permutation lists the pivots in
/// preference order followed by the non-pivots in preference order.
pub fn systematic_form(g: &BitMatrix, preference: &Permutation) -> Result<SystematicForm> {
    let (k, n) = (g.rows, g.cols);
    if preference.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: preference.len(),
        });
    }
    if k > n {
        return Err(Error::RankDeficient { rank: n, k });
    }
    // Column-major copy of [G | I_k]: column j holds its k row bits. A pivot
    // on (row p, column c) then updates every column with one masked XOR, and
    // rows are never swapped; pivot rows are relabelled at the end.
    let cw = words_for(k);
    let total = n + k;
    let mut cols = vec![0u64; total * cw];
    for r in 0..k {
        for (wi, &word) in g.row(r).iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let c = wi * 64 + w.trailing_zeros() as usize;
                cols[c * cw + r / 64] |= 1 << (r % 64);
                w &= w - 1;
            }
        }
        cols[(n + r) * cw + r / 64] |= 1 << (r % 64);
    }
    let mut unused = vec![0u64; cw];
    for r in 0..k {
        unused[r / 64] |= 1 << (r % 64);
    }

    let mut pivots = Vec::with_capacity(k);
    let mut pivot_rows = Vec::with_capacity(k);
    let mut rest = Vec::with_capacity(n - k);
    let mut mask = vec![0u64; cw];
    let mut row_ops = 0;
    for &c in preference.map() {
        if pivots.len() == k {
            rest.push(c);
            continue;
        }
        let col = &cols[c * cw..(c + 1) * cw];
        let Some(p) = (0..cw).find_map(|w| {
            let hit = col[w] & unused[w];
            (hit != 0).then(|| w * 64 + hit.trailing_zeros() as usize)
        }) else {
            rest.push(c);
            continue;
        };
        mask.copy_from_slice(col);
        mask[p / 64] &= !(1 << (p % 64));
        let flips: u32 = mask.iter().map(|w| w.count_ones()).sum();
        row_ops += flips as usize;
        if flips > 0 && cw == 1 {
            let m = mask[0];
            for cj in cols.iter_mut() {
                *cj ^= m & 0u64.wrapping_sub((*cj >> p) & 1);
            }
        } else if flips > 0 {
            let (pw, pb) = (p / 64, p % 64);
            for j in 0..total {
                let cj = &mut cols[j * cw..(j + 1) * cw];
                if (cj[pw] >> pb) & 1 == 1 {
                    for (a, m) in cj.iter_mut().zip(&mask) {
                        *a ^= m;
                    }
                }
            }
        }
        unused[p / 64] &= !(1 << (p % 64));
        pivots.push(c);
        pivot_rows.push(p);
    }
    if pivots.len() < k {
        return Err(Error::RankDeficient {
            rank: pivots.len(),
            k,
        });
    }
    pivots.extend(rest);

    let order: Vec<usize> = pivots.iter().copied().chain(n..total).collect();
    let rows_by_origin = columns_to_rows(&cols, cw, k, &order);
    let ow = words_for(order.len());
    let mut generator = BitMatrix::zeros(k, n)?;
    let mut transform = BitMatrix::zeros(k, k)?;
    for (i, &p) in pivot_rows.iter().enumerate() {
        let src = &rows_by_origin[p * ow..(p + 1) * ow];
        copy_bits(src, 0, n, generator.row_mut(i));
        copy_bits(src, n, k, transform.row_mut(i));
    }
    Ok(SystematicForm {
        generator,
        permutation: Permutation { map: pivots },
        transform,
        row_ops,
    })
}

/// Transposes a 64x64 bit block: afterwards bit `t` of `a[s]` is the former
/// bit `s` of `a[t]`.
pub(crate) fn transpose64(a: &mut [u64; 64]) {
    let mut j = 32;
    let mut m: u64 = 0x0000_0000_ffff_ffff;
    while j != 0 {
        let mut k = 0;
        while k < 64 {
            let t = ((a[k] >> j) ^ a[k + j]) & m;
            a[k] ^= t << j;
            a[k + j] ^= t;
            k = (k + j + 1) & !j;
        }
        j >>= 1;
        m ^= m << j;
    }
}

/// Row-major image of the selected columns: row `r` bit `t` is bit `r` of
/// column `order[t]`. Columns are `cw` words each.
fn columns_to_rows(cols: &[u64], cw: usize, rows: usize, order: &[usize]) -> Vec<u64> {
    let ow = words_for(order.len());
    let mut out = vec![0u64; rows * ow];
    let mut tile = [0u64; 64];
    for jb in 0..ow {
        for rb in 0..cw {
            for (t, slot) in tile.iter_mut().enumerate() {
                *slot = order.get(jb * 64 + t).map_or(0, |&c| cols[c * cw + rb]);
            }
            transpose64(&mut tile);
            for (t, &word) in tile.iter().enumerate() {
                let r = rb * 64 + t;
                if r < rows {
                    out[r * ow + jb] = word;
                }
            }
        }
    }
    out
}

/// Copies `len` bits starting at bit `start` of `src` into `dst` from bit 0.
fn copy_bits(src: &[u64], start: usize, len: usize, dst: &mut [u64]) {
    let (w0, sh) = (start / 64, start % 64);
    for (i, d) in dst.iter_mut().enumerate().take(words_for(len)) {
        let lo = src.get(w0 + i).copied().unwrap_or(0) >> sh;
        let hi = if sh == 0 {
            0
        } else {
            src.get(w0 + i + 1).copied().unwrap_or(0) << (64 - sh)
        };
        *d = lo | hi;
    }
    let tail = len % 64;
    if tail != 0 {
        dst[words_for(len) - 1] &= (1u64 << tail) - 1;
    }
}

/// Returns `(G_k, k)` with `G_k = [I_k | P]`.
pub fn gauss_jordan_systematic(
    g: &BitMatrix,
    preference: &Permutation,
) -> Result<(BitMatrix, Permutation)> {
    let f = systematic_form(g, preference)?;
    Ok((f.generator, f.permutation))
}

#[derive(Serialize, Deserialize)]
struct BitMatrixJson {
    rows: usize,
    cols: usize,
    row_hex: Vec<String>,
}

impl From<BitMatrix> for BitMatrixJson {
    fn from(m: BitMatrix) -> Self {
        let digits = m.cols.div_ceil(4);
        let row_hex = (0..m.rows)
            .map(|r| {
                (0..digits)
                    .map(|d| {
                        let mut nib = 0u32;
                        for b in 0..4 {
                            let c = d * 4 + b;
                            if c < m.cols && m.get(r, c) {
                                nib |= 8 >> b;
                            }
                        }
                        char::from_digit(nib, 16).unwrap()
                    })
                    .collect()
            })
            .collect();
        BitMatrixJson {
            rows: m.rows,
            cols: m.cols,
            row_hex,
        }
    }
}

impl TryFrom<BitMatrixJson> for BitMatrix {
    type Error = Error;
    fn try_from(j: BitMatrixJson) -> Result<Self> {
        if j.row_hex.len() != j.rows {
            return Err(Error::DimensionMismatch {
                expected: j.rows,
                got: j.row_hex.len(),
            });
        }
        let mut m = BitMatrix::zeros(j.rows, j.cols)?;
        let digits = j.cols.div_ceil(4);
        for (r, hex) in j.row_hex.iter().enumerate() {
            if hex.len() != digits {
                return Err(Error::InvalidArgument(format!(
                    "row {r}: expected {digits} hex digits, got {}",
                    hex.len()
                )));
            }
            for (d, ch) in hex.chars().enumerate() {
                let nib = ch.to_digit(16).ok_or_else(|| {
                    Error::InvalidArgument(format!("row {r}: invalid hex digit {ch:?}"))
                })?;
                for b in 0..4 {
                    if nib & (8 >> b) != 0 {
                        let c = d * 4 + b;
                        if c >= j.cols {
                            return Err(Error::InvalidArgument(format!(
                                "row {r}: padding bits must be zero"
                            )));
                        }
                        m.set(r, c, true);
                    }
                }
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Textbook row-swapping elimination.
    fn reference_form(g: &BitMatrix, preference: &Permutation) -> Option<SystematicForm> {
        let k = g.rows;
        let mut work = g.clone();
        let mut transform = BitMatrix::identity(k).unwrap();
        let (mut pivots, mut rest, mut row_ops) = (Vec::new(), Vec::new(), 0);
        for &c in preference.map() {
            let r = pivots.len();
            let Some(p) = (r..k).find(|&i| work.get(i, c)) else {
                rest.push(c);
                continue;
            };
            work.swap_rows(r, p);
            transform.swap_rows(r, p);
            for i in 0..k {
                if i != r && work.get(i, c) {
                    work.xor_row_into(r, i);
                    transform.xor_row_into(r, i);
                    row_ops += 1;
                }
            }
            pivots.push(c);
        }
        if pivots.len() < k {
            return None;
        }
        pivots.extend(rest);
        let permutation = Permutation { map: pivots };
        Some(SystematicForm {
            generator: work.permute_columns(&permutation).unwrap(),
            permutation,
            transform,
            row_ops,
        })
    }

    #[test]
    fn transpose_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: [u64; 64] = std::array::from_fn(|_| rng.gen());
        let mut b = a;
        transpose64(&mut b);
        for s in 0..64 {
            for t in 0..64 {
                assert_eq!((b[s] >> t) & 1, (a[t] >> s) & 1);
            }
        }
    }

    #[test]
    fn column_elimination_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for &(k, n) in &[(1, 1), (3, 7), (8, 16), (64, 128), (70, 140), (130, 200)] {
            for _ in 0..4 {
                let g = random_matrix(&mut rng, k, n);
                let mut pref: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    pref.swap(i, rng.gen_range(0..=i));
                }
                let pref = Permutation::new(pref).unwrap();
                match (systematic_form(&g, &pref), reference_form(&g, &pref)) {
                    (Ok(a), Some(b)) => {
                        assert_eq!(a.generator, b.generator);
                        assert_eq!(a.permutation, b.permutation);
                        assert_eq!(a.transform, b.transform);
                    }
                    (Err(Error::RankDeficient { .. }), None) => {}
                    (a, b) => panic!("disagree: {:?} vs {:?}", a.is_ok(), b.is_some()),
                }
            }
        }
    }

    #[test]
    fn row_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_matrix(&mut rng, 3, 150);
        for &(start, len) in &[(0, 150), (64, 64), (7, 100), (149, 1), (70, 80)] {
            let seg = m.row_segment(1, start, len);
            for j in 0..len {
                assert_eq!((seg[j / 64] >> (j % 64)) & 1 == 1, m.get(1, start + j));
            }
            for j in len..seg.len() * 64 {
                assert_eq!((seg[j / 64] >> (j % 64)) & 1, 0);
            }
        }
    }

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn mat_vec_examples() {
        let m = BitMatrix::from_bit_strings(&["110", "011"]).unwrap();
        assert_eq!(mat_vec_mod2(&m, &bits("11")).unwrap(), bits("101"));
        assert_eq!(mat_vec_mod2(&m, &bits("00")).unwrap(), bits("000"));
        let id = BitMatrix::identity(4).unwrap();
        assert_eq!(mat_vec_mod2(&id, &bits("1011")).unwrap(), bits("1011"));
        assert!(matches!(
            mat_vec_mod2(&m, &bits("1")),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rank_examples() {
        let z = BitMatrix::zeros(3, 5).unwrap();
        assert_eq!(rank_mod2(&z), 0);
        assert_eq!(rank_mod2(&BitMatrix::identity(5).unwrap()), 5);
        let m = BitMatrix::from_bit_strings(&["110", "011", "101"]).unwrap();
        assert_eq!(rank_mod2(&m), 2);
    }

    #[test]
    fn systematic_input_is_fixed_point() {
        let g = BitMatrix::from_bit_strings(&["1000110", "0100011", "0010111", "0001101"]).unwrap();
        let (gk, perm) = gauss_jordan_systematic(&g, &Permutation::identity(7)).unwrap();
        assert_eq!(gk, g);
        assert_eq!(perm, Permutation::identity(7));
    }

    #[test]
    fn hand_elimination() {
        // rows 1100, 0110: pivot rows reduce to 1010 and 0110
        let g = BitMatrix::from_bit_strings(&["1100", "0110"]).unwrap();
        let (gk, perm) = gauss_jordan_systematic(&g, &Permutation::identity(4)).unwrap();
        assert_eq!(perm.map(), &[0, 1, 2, 3]);
        assert_eq!(gk, BitMatrix::from_bit_strings(&["1010", "0110"]).unwrap());
    }

    #[test]
    fn dependent_preferred_column_is_deferred() {
        // columns 0 and 1 are identical
        let g = BitMatrix::from_bit_strings(&["1100", "1111"]).unwrap();
        let (gk, perm) = gauss_jordan_systematic(&g, &Permutation::identity(4)).unwrap();
        assert_eq!(perm.map(), &[0, 2, 1, 3]);
        assert_eq!(gk, BitMatrix::from_bit_strings(&["1010", "0101"]).unwrap());

        let pref = Permutation::new(vec![1, 0, 3, 2]).unwrap();
        let (_, perm) = gauss_jordan_systematic(&g, &pref).unwrap();
        assert_eq!(perm.map(), &[1, 3, 0, 2]);
    }

    #[test]
    fn rank_deficient_generator_is_rejected() {
        let g = BitMatrix::from_bit_strings(&["1100", "1100"]).unwrap();
        assert!(matches!(
            gauss_jordan_systematic(&g, &Permutation::identity(4)),
            Err(Error::RankDeficient { rank: 1, k: 2 })
        ));
    }

    #[test]
    fn permutation_examples() {
        let v = vec!['a', 'b', 'c'];
        let id = Permutation::identity(3);
        assert_eq!(id.apply(&v, Direction::Forward).unwrap(), v);
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert_eq!(p.apply(&v, Direction::Forward).unwrap(), vec!['c', 'a', 'b']);
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(p.apply(&v[..2], Direction::Inverse).is_err());
    }

    #[test]
    fn json_round_trip_and_layout() {
        let m = BitMatrix::from_bit_strings(&["110001", "000011"]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"rows":2,"cols":6,"row_hex":["c4","0c"]}"#);
        let back: BitMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"rows":1,"cols":6,"row_hex":["c6"]}"#;
        assert!(serde_json::from_str::<BitMatrix>(bad).is_err());
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> BitMatrix {
        let mut m = BitMatrix::zeros(rows, cols).unwrap();
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, rng.gen());
            }
        }
        m
    }

    // Fraction-free elimination over the integers, reducing mod 2 at each
    // step; independent of the packed implementation.
    fn naive_rank(m: &BitMatrix) -> usize {
        let mut a: Vec<Vec<u8>> = (0..m.rows())
            .map(|r| (0..m.cols()).map(|c| m.get(r, c) as u8).collect())
            .collect();
        let mut rank = 0;
        for c in 0..m.cols() {
            if let Some(p) = (rank..a.len()).find(|&r| a[r][c] % 2 == 1) {
                a.swap(rank, p);
                for r in 0..a.len() {
                    if r != rank && a[r][c] % 2 == 1 {
                        let pivot = a[rank].clone();
                        for (x, y) in a[r].iter_mut().zip(pivot) {
                            *x = (*x + y) % 2;
                        }
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    #[test]
    fn rank_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let rows = rng.gen_range(1..=32);
            let cols = rng.gen_range(1..=32);
            let mut m = random_matrix(&mut rng, rows, cols);
            // force some dependencies
            if rows > 2 && rng.gen_bool(0.5) {
                for c in 0..cols {
                    let v = m.get(0, c) ^ m.get(1, c);
                    m.set(rows - 1, c, v);
                }
            }
            assert_eq!(rank_mod2(&m), naive_rank(&m));
        }
    }

    fn codebook(g: &BitMatrix) -> std::collections::BTreeSet<Vec<bool>> {
        let k = g.rows();
        (0u32..1 << k)
            .map(|u| {
                let v: Vec<bool> = (0..k).map(|i| (u >> i) & 1 == 1).collect();
                mat_vec_mod2(g, &v).unwrap()
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn systematic_form_preserves_code(seed in any::<u64>(), k in 1usize..=10, extra in 0usize..=8) {
            let n = k + extra;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = loop {
                let g = random_matrix(&mut rng, k, n);
                if rank_mod2(&g) == k { break g; }
            };
            let mut pref: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() { pref.swap(i, rng.gen_range(0..=i)); }
            let pref = Permutation::new(pref).unwrap();
            let f = systematic_form(&g, &pref).unwrap();

            for i in 0..k {
                for j in 0..k {
                    prop_assert_eq!(f.generator.get(i, j), i == j);
                }
            }
            let permuted: std::collections::BTreeSet<Vec<bool>> = codebook(&g)
                .into_iter()
                .map(|c| f.permutation.apply(&c, Direction::Forward).unwrap())
                .collect();
            prop_assert_eq!(permuted, codebook(&f.generator));

            // pivots and non-pivots each keep the preference order
            let rank_of = pref.inverse_map();
            let m = f.permutation.map();
            prop_assert!(m[..k].windows(2).all(|w| rank_of[w[0]] < rank_of[w[1]]));
            prop_assert!(m[k..].windows(2).all(|w| rank_of[w[0]] < rank_of[w[1]]));

            // transform maps original rows onto the reduced rows
            let tg: Vec<Vec<bool>> = (0..k)
                .map(|i| mat_vec_mod2(&g, &f.transform.row_bits(i)).unwrap())
                .collect();
            for (i, row) in tg.iter().enumerate() {
                let permuted = f.permutation.apply(row, Direction::Forward).unwrap();
                prop_assert_eq!(permuted, f.generator.row_bits(i));
            }
        }

        #[test]
        fn permutation_round_trip(seed in any::<u64>(), n in 1usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut map: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() { map.swap(i, rng.gen_range(0..=i)); }
            let p = Permutation::new(map).unwrap();
            let v: Vec<u32> = (0..n).map(|_| rng.gen()).collect();
            let f = p.apply(&v, Direction::Forward).unwrap();
            prop_assert_eq!(p.apply(&f, Direction::Inverse).unwrap(), v);
        }
    }
}
