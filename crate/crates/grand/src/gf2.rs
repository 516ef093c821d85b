//! Dense GF(2) linear algebra on bit-packed storage.
//!
//! Vectors and matrices store 64 logical bits per machine word, row-major,
//! so syndrome computation and row reduction run as word-wide XORs. All
//! types are immutable in normal use and safe to share across threads.
//!
//! Zero-row matrices are allowed: the parity-check matrix of a rate-1 code
//! has no rows, and every vector then has an empty (all-zero) syndrome.

use std::fmt;

use thiserror::Error;

const WORD_BITS: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Gf2Error {
    /// The matrix does not have full row rank where the operation requires it.
    #[error("matrix is rank-deficient: rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
}

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// A packed binary vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// Builds a vector from 0/1 entries.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            debug_assert!(b <= 1, "entries must be 0 or 1");
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_binary_str(s: &str) -> Option<Self> {
        let mut v = Self::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => return None,
            }
        }
        Some(v)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {} out of range {}", i, self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {} out of range {}", i, self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {} out of range {}", i, self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    /// In-place XOR with another vector of the same length.
    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "length mismatch in xor");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of the set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD_BITS + b)
                }
            })
        })
    }

    /// Lexicographic order on the bit string `b_0 b_1 ... b_{len-1}`,
    /// with `0 < 1` at the first differing position.
    pub fn lex_cmp(&self, other: &BitVector) -> std::cmp::Ordering {
        assert_eq!(self.len, other.len, "length mismatch in lex_cmp");
        for (a, b) in self.words.iter().zip(&other.words) {
            let diff = a ^ b;
            if diff != 0 {
                let pos = diff.trailing_zeros();
                // the vector with 0 at the first differing bit is smaller
                return if (a >> pos) & 1 == 0 {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Greater
                };
            }
        }
        std::cmp::Ordering::Equal
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            write!(f, "{}", u8::from(b))?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({})", self)
    }
}

/// A packed binary matrix, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = words_for(cols);
        Self {
            rows,
            cols,
            words_per_row,
            words: vec![0; rows * words_per_row],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[BitVector]) -> Self {
        assert!(!rows.is_empty(), "from_rows needs at least one row");
        let cols = rows[0].len();
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged rows");
            let start = r * m.words_per_row;
            m.words[start..start + m.words_per_row].copy_from_slice(row.words());
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "index out of range");
        let w = self.words[r * self.words_per_row + c / WORD_BITS];
        (w >> (c % WORD_BITS)) & 1 != 0
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols, "index out of range");
        let idx = r * self.words_per_row + c / WORD_BITS;
        let mask = 1u64 << (c % WORD_BITS);
        if value {
            self.words[idx] |= mask;
        } else {
            self.words[idx] &= !mask;
        }
    }

    #[inline]
    fn row_words(&self, r: usize) -> &[u64] {
        &self.words[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    /// Copies row `r` out as a vector.
    pub fn row(&self, r: usize) -> BitVector {
        assert!(r < self.rows, "row index out of range");
        BitVector {
            len: self.cols,
            words: self.row_words(r).to_vec(),
        }
    }

    /// Copies column `c` out as a vector of length `rows`.
    pub fn column(&self, c: usize) -> BitVector {
        assert!(c < self.cols, "column index out of range");
        let mut v = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            if self.get(r, c) {
                v.set(r, true);
            }
        }
        v
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row(r).ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        let (a, b) = if src < dst {
            let (lo, hi) = self.words.split_at_mut(dst * self.words_per_row);
            (
                &lo[src * self.words_per_row..(src + 1) * self.words_per_row],
                &mut hi[..self.words_per_row],
            )
        } else {
            let (lo, hi) = self.words.split_at_mut(src * self.words_per_row);
            (
                &hi[..self.words_per_row],
                &mut lo[dst * self.words_per_row..(dst + 1) * self.words_per_row],
            )
        };
        for (d, s) in b.iter_mut().zip(a) {
            *d ^= s;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.words_per_row {
            self.words.swap(a * self.words_per_row + w, b * self.words_per_row + w);
        }
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row(r))?;
        }
        write!(f, "]")
    }
}

/// `H · v^T` over GF(2): one parity bit per row of `H`.
pub fn mat_vec_mul(h: &BitMatrix, v: &BitVector) -> BitVector {
    assert_eq!(h.cols, v.len(), "matrix columns must match vector length");
    let mut out = BitVector::zeros(h.rows);
    for r in 0..h.rows {
        let parity: u32 = h
            .row_words(r)
            .iter()
            .zip(v.words())
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        if parity & 1 != 0 {
            out.set(r, true);
        }
    }
    out
}

/// `u · G` over GF(2): XOR of the rows of `G` selected by `u`.
pub fn encode(g: &BitMatrix, u: &BitVector) -> BitVector {
    assert_eq!(g.rows, u.len(), "message length must match generator rows");
    let mut out = BitVector::zeros(g.cols);
    for r in u.ones() {
        for (d, s) in out.words.iter_mut().zip(g.row_words(r)) {
            *d ^= s;
        }
    }
    out
}

/// `A · B` over GF(2).
pub fn mat_mul(a: &BitMatrix, b: &BitMatrix) -> BitMatrix {
    assert_eq!(a.cols, b.rows, "inner dimensions must match");
    let mut out = BitMatrix::zeros(a.rows, b.cols);
    for r in 0..a.rows {
        for c in a.row(r).ones() {
            let (dst_start, src_start) = (r * out.words_per_row, c * b.words_per_row);
            for w in 0..out.words_per_row {
                out.words[dst_start + w] ^= b.words[src_start + w];
            }
        }
    }
    out
}

/// Result of [`rref`].
#[derive(Debug, Clone)]
pub struct Rref {
    pub matrix: BitMatrix,
    /// Pivot column indices, strictly increasing.
    pub pivots: Vec<usize>,
    pub rank: usize,
}

/// Reduced row-echelon form over GF(2).
pub fn rref(m: &BitMatrix) -> Rref {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut pivot_row = 0;
    for col in 0..a.cols {
        if pivot_row == a.rows {
            break;
        }
        let found = (pivot_row..a.rows).find(|&r| a.get(r, col));
        let Some(r) = found else { continue };
        a.swap_rows(pivot_row, r);
        for other in 0..a.rows {
            if other != pivot_row && a.get(other, col) {
                a.xor_row_into(pivot_row, other);
            }
        }
        pivots.push(col);
        pivot_row += 1;
    }
    let rank = pivots.len();
    Rref { matrix: a, pivots, rank }
}

/// Derives a parity-check matrix from a full-rank generator.
///
/// Column-permutes `G` to systematic form `[I_k | P]`, forms
/// `H = [P^T | I_{n-k}]`, then undoes the permutation so `H` is in
/// transmitted-bit order. Satisfies `G · H^T = 0` and `rank(H) = n - k`.
pub fn parity_from_generator(g: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
    let (k, n) = (g.rows, g.cols);
    let reduced = rref(g);
    if reduced.rank < k {
        return Err(Gf2Error::RankDeficient {
            rank: reduced.rank,
            expected: k,
        });
    }
    // perm[j] = original column index of the j-th systematic column
    let mut perm: Vec<usize> = reduced.pivots.clone();
    perm.extend((0..n).filter(|c| !reduced.pivots.contains(c)));

    let mut h = BitMatrix::zeros(n - k, n);
    for r in 0..n - k {
        // identity block lands on the non-pivot columns
        h.set(r, perm[k + r], true);
        // P^T block: P[i][r] = rref[i][non-pivot column r]
        for i in 0..k {
            if reduced.matrix.get(i, perm[k + r]) {
                h.set(r, perm[i], true);
            }
        }
    }
    Ok(h)
}

/// Reorders bits so that `out[j] = v[perm[j]]`.
pub fn permute_bits(v: &BitVector, perm: &[usize]) -> BitVector {
    assert_eq!(v.len(), perm.len(), "permutation length mismatch");
    let mut out = BitVector::zeros(v.len());
    for (j, &src) in perm.iter().enumerate() {
        if v.get(src) {
            out.set(j, true);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> BitMatrix {
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, rng.random::<bool>());
            }
        }
        m
    }

    fn random_vector(len: usize, rng: &mut ChaCha8Rng) -> BitVector {
        let mut v = BitVector::zeros(len);
        for i in 0..len {
            v.set(i, rng.random::<bool>());
        }
        v
    }

    /// Standard [7,4] Hamming parity check: column c+1 spelled in binary.
    fn hamming74_h() -> BitMatrix {
        let rows = [
            BitVector::from_binary_str("0001111").unwrap(),
            BitVector::from_binary_str("0110011").unwrap(),
            BitVector::from_binary_str("1010101").unwrap(),
        ];
        BitMatrix::from_rows(&rows)
    }

    /// All length-n words with zero syndrome, by exhaustive enumeration.
    fn kernel_words(h: &BitMatrix) -> Vec<BitVector> {
        let n = h.cols();
        (0u64..1 << n)
            .map(|bits| {
                let mut v = BitVector::zeros(n);
                for i in 0..n {
                    if (bits >> i) & 1 != 0 {
                        v.set(i, true);
                    }
                }
                v
            })
            .filter(|v| mat_vec_mul(h, v).is_zero())
            .collect()
    }

    #[test]
    fn mat_vec_mul_hamming_codeword() {
        let h = hamming74_h();
        let v = BitVector::from_binary_str("1010101").unwrap();
        // independent check that v really is in the code
        assert!(kernel_words(&h).contains(&v));
        assert!(mat_vec_mul(&h, &v).is_zero());
    }

    #[test]
    fn mat_vec_mul_identity_passthrough() {
        let h = BitMatrix::identity(3);
        let v = BitVector::from_binary_str("101").unwrap();
        assert_eq!(mat_vec_mul(&h, &v), v);
    }

    #[test]
    fn mat_vec_mul_zero_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_matrix(5, 9, &mut rng);
        let z = BitVector::zeros(9);
        assert!(mat_vec_mul(&h, &z).is_zero());
    }

    #[test]
    fn mat_vec_mul_distributes_over_xor() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let h = random_matrix(6, 17, &mut rng);
            let a = random_vector(17, &mut rng);
            let b = random_vector(17, &mut rng);
            let mut ab = a.clone();
            ab.xor_assign(&b);
            let mut lhs = mat_vec_mul(&h, &a);
            lhs.xor_assign(&mat_vec_mul(&h, &b));
            assert_eq!(mat_vec_mul(&h, &ab), lhs);
        }
    }

    #[test]
    fn rref_identity_fixed_point() {
        let m = BitMatrix::identity(4);
        let r = rref(&m);
        assert_eq!(r.matrix, m);
        assert_eq!(r.pivots, vec![0, 1, 2, 3]);
        assert_eq!(r.rank, 4);
    }

    #[test]
    fn rref_duplicate_rows_cancel() {
        let rows = [
            BitVector::from_binary_str("11").unwrap(),
            BitVector::from_binary_str("11").unwrap(),
        ];
        let r = rref(&BitMatrix::from_rows(&rows));
        assert_eq!(r.matrix.row(0), BitVector::from_binary_str("11").unwrap());
        assert!(r.matrix.row(1).is_zero());
        assert_eq!(r.pivots, vec![0]);
        assert_eq!(r.rank, 1);
    }

    /// Row space of a matrix, by brute-force span enumeration.
    fn row_space(m: &BitMatrix) -> std::collections::HashSet<String> {
        let k = m.rows();
        (0u64..1 << k)
            .map(|mask| {
                let mut acc = BitVector::zeros(m.cols());
                for r in 0..k {
                    if (mask >> r) & 1 != 0 {
                        acc.xor_assign(&m.row(r));
                    }
                }
                acc.to_string()
            })
            .collect()
    }

    #[test]
    fn rref_preserves_row_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = loop {
            let cand = random_matrix(6, 10, &mut rng);
            if rref(&cand).rank == 6 {
                break cand;
            }
        };
        let r = rref(&m);
        assert_eq!(r.rank, 6);
        assert_eq!(row_space(&m), row_space(&r.matrix));
    }

    #[test]
    fn rref_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m = random_matrix(5, 8, &mut rng);
            let once = rref(&m);
            let twice = rref(&once.matrix);
            assert_eq!(once.matrix, twice.matrix);
        }
    }

    #[test]
    fn parity_from_systematic_hamming() {
        // G = [I_4 | P] with P rows = non-unit columns of the Hamming check
        let g_rows = [
            BitVector::from_binary_str("1000011").unwrap(),
            BitVector::from_binary_str("0100101").unwrap(),
            BitVector::from_binary_str("0010110").unwrap(),
            BitVector::from_binary_str("0001111").unwrap(),
        ];
        let g = BitMatrix::from_rows(&g_rows);
        let h = parity_from_generator(&g).unwrap();
        assert_eq!(h.rows(), 3);
        // H = [P^T | I_3]
        for r in 0..3 {
            for c in 0..4 {
                assert_eq!(h.get(r, c), g.get(c, 4 + r));
            }
            for c in 0..3 {
                assert_eq!(h.get(r, 4 + c), r == c);
            }
        }
        for r in 0..4 {
            assert!(mat_vec_mul(&h, &g.row(r)).is_zero());
        }
    }

    #[test]
    fn parity_of_rate_one_code_is_empty() {
        let g = BitMatrix::identity(4);
        let h = parity_from_generator(&g).unwrap();
        assert_eq!(h.rows(), 0);
        let v = BitVector::from_binary_str("1011").unwrap();
        assert!(mat_vec_mul(&h, &v).is_zero());
    }

    #[test]
    fn parity_annihilates_all_codewords() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = loop {
            let cand = random_matrix(5, 10, &mut rng);
            if rref(&cand).rank == 5 {
                break cand;
            }
        };
        let h = parity_from_generator(&g).unwrap();
        assert_eq!(rref(&h).rank, 5);
        for u_bits in 0u64..32 {
            let mut u = BitVector::zeros(5);
            for i in 0..5 {
                if (u_bits >> i) & 1 != 0 {
                    u.set(i, true);
                }
            }
            assert!(mat_vec_mul(&h, &encode(&g, &u)).is_zero());
        }
    }

    #[test]
    fn parity_rejects_rank_deficient_generator() {
        let rows = [
            BitVector::from_binary_str("1100").unwrap(),
            BitVector::from_binary_str("1100").unwrap(),
        ];
        let g = BitMatrix::from_rows(&rows);
        assert!(matches!(
            parity_from_generator(&g),
            Err(Gf2Error::RankDeficient { rank: 1, expected: 2 })
        ));
    }

    #[test]
    fn encode_zero_message_gives_zero_codeword() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g = random_matrix(4, 9, &mut rng);
        assert!(encode(&g, &BitVector::zeros(4)).is_zero());
    }

    #[test]
    fn encode_unit_vector_selects_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let g = random_matrix(4, 9, &mut rng);
        for j in 0..4 {
            let mut u = BitVector::zeros(4);
            u.set(j, true);
            assert_eq!(encode(&g, &u), g.row(j));
        }
    }

    #[test]
    fn encode_then_syndrome_closed_loop() {
        let g_rows = [
            BitVector::from_binary_str("1000011").unwrap(),
            BitVector::from_binary_str("0100101").unwrap(),
            BitVector::from_binary_str("0010110").unwrap(),
            BitVector::from_binary_str("0001111").unwrap(),
        ];
        let g = BitMatrix::from_rows(&g_rows);
        let h = parity_from_generator(&g).unwrap();
        let u = BitVector::from_binary_str("1011").unwrap();
        assert!(mat_vec_mul(&h, &encode(&g, &u)).is_zero());
    }

    #[test]
    fn nonmembers_have_nonzero_syndrome() {
        // exhaustive over all 2^n words: syndrome is zero iff in the row space
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = loop {
            let cand = random_matrix(4, 9, &mut rng);
            if rref(&cand).rank == 4 {
                break cand;
            }
        };
        let h = parity_from_generator(&g).unwrap();
        let members = row_space(&g);
        for word in kernel_words(&h) {
            assert!(members.contains(&word.to_string()));
        }
        assert_eq!(kernel_words(&h).len(), members.len());
    }

    #[test]
    fn random_generator_messages_annihilated() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let g = loop {
                let cand = random_matrix(6, 14, &mut rng);
                if rref(&cand).rank == 6 {
                    break cand;
                }
            };
            let h = parity_from_generator(&g).unwrap();
            for _ in 0..16 {
                let u = random_vector(6, &mut rng);
                assert!(mat_vec_mul(&h, &encode(&g, &u)).is_zero());
            }
        }
    }

    #[test]
    fn lex_cmp_orders_bit_strings() {
        let a = BitVector::from_binary_str("011").unwrap();
        let b = BitVector::from_binary_str("100").unwrap();
        assert_eq!(a.lex_cmp(&b), std::cmp::Ordering::Less);
        assert_eq!(b.lex_cmp(&a), std::cmp::Ordering::Greater);
        assert_eq!(a.lex_cmp(&a), std::cmp::Ordering::Equal);
    }

    #[test]
    fn permute_bits_roundtrip() {
        let v = BitVector::from_binary_str("10110").unwrap();
        let perm = [4, 2, 0, 1, 3];
        let p = permute_bits(&v, &perm);
        assert_eq!(p.to_string(), "01101");
        let mut inverse = vec![0; 5];
        for (j, &src) in perm.iter().enumerate() {
            inverse[src] = j;
        }
        assert_eq!(permute_bits(&p, &inverse), v);
    }

    #[test]
    fn mat_mul_matches_elementwise_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = random_matrix(4, 6, &mut rng);
        let b = random_matrix(6, 5, &mut rng);
        let c = mat_mul(&a, &b);
        for i in 0..4 {
            for j in 0..5 {
                let mut acc = false;
                for t in 0..6 {
                    acc ^= a.get(i, t) && b.get(t, j);
                }
                assert_eq!(c.get(i, j), acc);
            }
        }
    }
}
