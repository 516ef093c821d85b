//! Linear block code constructors and persistence.
//!
//! A [`LinearCode`] bundles a full-rank generator `G` (k×n), the matching
//! parity-check matrix `H` ((n-k)×n) and a label. Constructors cover the
//! codes used throughout: Hamming, systematic CRC, polar, a simplified
//! CRC-aided polar concatenation, and seeded random codes for oracle tests.
//!
//! Codes round-trip through a line-oriented text format (see [`save_code`] /
//! [`load_code`]):
//!
//! ```text
//! grandcode v1
//! <n> <k> <label>
//! G
//! <k rows of n '0'/'1' chars>
//! H
//! <n-k rows of n '0'/'1' chars>
//! ```
//!
//! CRC convention: a polynomial is given as coefficient bits from the
//! highest degree down to x^0 with the leading bit explicit (x^3+x+1 is
//! `1011`); the d parity bits are the remainder of u(x)·x^d mod poly(x),
//! appended after the message with the highest-degree coefficient first.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gf2::{self, encode, mat_mul, mat_vec_mul, parity_from_generator, rref, BitMatrix, BitVector};

/// 5G CRC-11 polynomial x^11 + x^10 + x^9 + x^5 + 1, highest degree first.
pub const CRC11_POLY: &[u8] = &[1, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1];

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("invalid code parameters: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Gf2(#[from] gf2::Gf2Error),
    #[error("malformed code file: {0}")]
    Parse(String),
    #[error("inconsistent code: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A binary linear block code [n, k] with generator and parity-check matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCode {
    n: usize,
    k: usize,
    generator: BitMatrix,
    parity: BitMatrix,
    label: String,
}

impl LinearCode {
    /// Validates and bundles a generator/parity pair.
    ///
    /// Requires `G` full rank k, `H` full rank n-k, and `G · H^T = 0`.
    pub fn new(generator: BitMatrix, parity: BitMatrix, label: impl Into<String>) -> Result<Self, CodeError> {
        let (k, n) = (generator.rows(), generator.cols());
        if k == 0 || k > n {
            return Err(CodeError::InvalidParameter(format!(
                "need 1 <= k <= n, got k={k}, n={n}"
            )));
        }
        if parity.rows() != n - k || parity.cols() != n {
            return Err(CodeError::Inconsistent(format!(
                "parity matrix is {}x{}, expected {}x{}",
                parity.rows(),
                parity.cols(),
                n - k,
                n
            )));
        }
        if rref(&generator).rank != k {
            return Err(CodeError::Inconsistent("generator is rank-deficient".into()));
        }
        if rref(&parity).rank != n - k {
            return Err(CodeError::Inconsistent("parity matrix is rank-deficient".into()));
        }
        for r in 0..k {
            if !mat_vec_mul(&parity, &generator.row(r)).is_zero() {
                return Err(CodeError::Inconsistent("G . H^T is nonzero".into()));
            }
        }
        Ok(Self {
            n,
            k,
            generator,
            parity,
            label: label.into(),
        })
    }

    /// Derives the parity-check matrix from a full-rank generator.
    pub fn from_generator(generator: BitMatrix, label: impl Into<String>) -> Result<Self, CodeError> {
        let parity = parity_from_generator(&generator)?;
        Self::new(generator, parity, label)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn generator(&self) -> &BitMatrix {
        &self.generator
    }

    pub fn parity(&self) -> &BitMatrix {
        &self.parity
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Encodes a k-bit message into an n-bit codeword.
    pub fn encode(&self, u: &BitVector) -> BitVector {
        encode(&self.generator, u)
    }

    /// True iff the word has an all-zero syndrome.
    pub fn contains(&self, word: &BitVector) -> bool {
        mat_vec_mul(&self.parity, word).is_zero()
    }
}

/// The [2^r - 1, 2^r - 1 - r] Hamming code.
///
/// The parity-check columns are the 2^r - 1 nonzero r-bit patterns,
/// arranged so H = [P^T | I_r]; G = [I_k | P] follows directly.
pub fn hamming_code(r: usize) -> Result<LinearCode, CodeError> {
    if r < 2 {
        return Err(CodeError::InvalidParameter(format!("need r >= 2, got r={r}")));
    }
    if r >= 16 {
        return Err(CodeError::InvalidParameter(format!("r={r} too large")));
    }
    let n = (1usize << r) - 1;
    let k = n - r;
    // non-unit-weight column values, ascending, then unit weights for the identity block
    let weights: Vec<usize> = (1..=n).filter(|v| !v.is_power_of_two()).collect();
    let mut g = BitMatrix::zeros(k, n);
    let mut h = BitMatrix::zeros(r, n);
    for (i, &v) in weights.iter().enumerate() {
        g.set(i, i, true);
        for t in 0..r {
            if (v >> t) & 1 != 0 {
                g.set(i, k + t, true);
                h.set(t, i, true);
            }
        }
    }
    for t in 0..r {
        h.set(t, k + t, true);
    }
    LinearCode::new(g, h, format!("hamming[{n},{k}]"))
}

/// Remainder of `message(x) · x^d mod poly(x)` by shift-register division.
///
/// The first message bit is the highest-degree coefficient.
pub fn crc_remainder(message: &BitVector, poly: &[u8]) -> BitVector {
    let d = poly.len() - 1;
    let mut reg: Vec<u8> = message.iter().map(u8::from).collect();
    reg.extend(std::iter::repeat(0).take(d));
    for i in 0..message.len() {
        if reg[i] != 0 {
            for (t, &p) in poly.iter().enumerate() {
                reg[i + t] ^= p;
            }
        }
    }
    BitVector::from_bits(&reg[message.len()..])
}

/// Systematic CRC generator: maps u to `[u | crc(u)]` as a k×(k+d) matrix.
pub fn crc_generator(k: usize, poly: &[u8]) -> Result<BitMatrix, CodeError> {
    if k == 0 {
        return Err(CodeError::InvalidParameter("need k >= 1".into()));
    }
    if poly.len() < 2 {
        return Err(CodeError::InvalidParameter(
            "CRC polynomial must have degree >= 1".into(),
        ));
    }
    if poly[0] != 1 {
        return Err(CodeError::InvalidParameter(
            "CRC polynomial must include the explicit leading coefficient".into(),
        ));
    }
    if poly.iter().any(|&b| b > 1) {
        return Err(CodeError::InvalidParameter("CRC coefficients must be 0 or 1".into()));
    }
    let d = poly.len() - 1;
    let mut g = BitMatrix::zeros(k, k + d);
    for i in 0..k {
        let mut e = BitVector::zeros(k);
        e.set(i, true);
        let rem = crc_remainder(&e, poly);
        g.set(i, i, true);
        for t in 0..d {
            if rem.get(t) {
                g.set(i, k + t, true);
            }
        }
    }
    Ok(g)
}

/// Polar generator: the k most reliable rows of the n×n Arikan transform
/// F^{⊗log2 n}, F = [[1,0],[1,1]].
///
/// Reliability is ranked with the Bhattacharyya recursion z → {2z−z², z²}
/// initialized at z = exp(-10^(design_snr_db/10)); smaller z is more
/// reliable, ties broken toward the higher channel index. Returns the
/// generator (rows in ascending channel order) and the frozen index set.
pub fn polar_generator(n: usize, k: usize, design_snr_db: f64) -> Result<(BitMatrix, Vec<usize>), CodeError> {
    if !n.is_power_of_two() {
        return Err(CodeError::InvalidParameter(format!("n={n} is not a power of 2")));
    }
    if k == 0 || k > n {
        return Err(CodeError::InvalidParameter(format!(
            "need 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let mut z = vec![(-10f64.powf(design_snr_db / 10.0)).exp()];
    while z.len() < n {
        let mut next = Vec::with_capacity(z.len() * 2);
        for &zi in &z {
            next.push(2.0 * zi - zi * zi);
            next.push(zi * zi);
        }
        z = next;
    }
    let mut by_reliability: Vec<usize> = (0..n).collect();
    by_reliability.sort_by(|&a, &b| z[a].partial_cmp(&z[b]).unwrap().then(b.cmp(&a)));
    let mut info: Vec<usize> = by_reliability[..k].to_vec();
    info.sort_unstable();
    let mut frozen: Vec<usize> = by_reliability[k..].to_vec();
    frozen.sort_unstable();

    let mut g = BitMatrix::zeros(k, n);
    for (row, &i) in info.iter().enumerate() {
        for j in 0..n {
            // F^{⊗m}[i][j] = 1 iff the support of j is contained in that of i
            if j & !i & (n - 1) == 0 {
                g.set(row, j, true);
            }
        }
    }
    Ok((g, frozen))
}

/// Simplified CRC-aided polar code: `G = G_CRC · M_interleave · G_Polar`,
/// a single [n, k] linear code. The interleaver maps the CRC-appended word
/// w to v with `v[j] = w[perm[j]]`; `None` means identity.
pub fn ca_polar_code(
    n: usize,
    k: usize,
    poly: &[u8],
    interleave: Option<&[usize]>,
    design_snr_db: f64,
) -> Result<LinearCode, CodeError> {
    let d = poly.len().saturating_sub(1);
    if k + d > n {
        return Err(CodeError::InvalidParameter(format!(
            "k + crc degree = {} exceeds n = {n}",
            k + d
        )));
    }
    let g_crc = crc_generator(k, poly)?;
    let g_pre = match interleave {
        None => g_crc,
        Some(perm) => {
            if !is_permutation(perm, k + d) {
                return Err(CodeError::InvalidParameter(format!(
                    "interleaver is not a permutation of 0..{}",
                    k + d
                )));
            }
            // column c of G·M is column perm[c] of G
            let mut m = BitMatrix::zeros(k, k + d);
            for r in 0..k {
                for c in 0..k + d {
                    if g_crc.get(r, perm[c]) {
                        m.set(r, c, true);
                    }
                }
            }
            m
        }
    };
    let (g_polar, _) = polar_generator(n, k + d, design_snr_db)?;
    let g = mat_mul(&g_pre, &g_polar);
    LinearCode::from_generator(g, format!("capolar[{n},{k}]crc{d}"))
}

fn is_permutation(perm: &[usize], len: usize) -> bool {
    if perm.len() != len {
        return false;
    }
    let mut seen = vec![false; len];
    for &p in perm {
        if p >= len || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

/// Systematic code `G = [I_k | R]` with `R` drawn from a seeded generator.
/// Deterministic in (n, k, seed).
pub fn random_linear_code(n: usize, k: usize, seed: u64) -> Result<LinearCode, CodeError> {
    if k == 0 || k > n {
        return Err(CodeError::InvalidParameter(format!(
            "need 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = BitMatrix::zeros(k, n);
    for i in 0..k {
        g.set(i, i, true);
    }
    for i in 0..k {
        for j in k..n {
            if rng.random::<bool>() {
                g.set(i, j, true);
            }
        }
    }
    LinearCode::from_generator(g, format!("random[{n},{k}]#{seed}"))
}

const FORMAT_HEADER: &str = "grandcode v1";

/// Serializes a code in the `grandcode v1` text format.
pub fn save_code(code: &LinearCode, sink: &mut dyn Write) -> Result<(), CodeError> {
    let mut text = String::new();
    text.push_str(FORMAT_HEADER);
    text.push('\n');
    if code.label.is_empty() {
        text.push_str(&format!("{} {}\n", code.n, code.k));
    } else {
        text.push_str(&format!("{} {} {}\n", code.n, code.k, code.label));
    }
    text.push_str("G\n");
    for r in 0..code.k {
        text.push_str(&code.generator.row(r).to_string());
        text.push('\n');
    }
    text.push_str("H\n");
    for r in 0..code.n - code.k {
        text.push_str(&code.parity.row(r).to_string());
        text.push('\n');
    }
    sink.write_all(text.as_bytes())?;
    Ok(())
}

/// Parses the `grandcode v1` text format, validating all code invariants.
/// Trailing garbage after the last parity row is rejected.
pub fn load_code(source: &mut dyn Read) -> Result<LinearCode, CodeError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    code_from_text(&text)
}

fn code_from_text(text: &str) -> Result<LinearCode, CodeError> {
    let mut lines = text.lines();
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| CodeError::Parse(format!("unexpected end of file, expected {what}")))
    };
    if next("header")? != FORMAT_HEADER {
        return Err(CodeError::Parse(format!("missing `{FORMAT_HEADER}` header")));
    }
    let dims = next("dimensions")?;
    let mut parts = dims.splitn(3, ' ');
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CodeError::Parse("bad code length".into()))?;
    let k: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CodeError::Parse("bad code dimension".into()))?;
    let label = parts.next().unwrap_or("").to_string();
    if k == 0 || k > n {
        return Err(CodeError::Parse(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    let mut read_matrix = |marker: &str, rows: usize| -> Result<Vec<BitVector>, CodeError> {
        let line = next(&format!("`{marker}` marker"))?;
        if line != marker {
            return Err(CodeError::Parse(format!("expected `{marker}` marker, got `{line}`")));
        }
        (0..rows)
            .map(|_| {
                let row = next("matrix row")?;
                if row.len() != n {
                    return Err(CodeError::Parse(format!(
                        "row has {} chars, expected {n}",
                        row.len()
                    )));
                }
                BitVector::from_binary_str(row)
                    .ok_or_else(|| CodeError::Parse("row contains non-binary characters".into()))
            })
            .collect()
    };
    let g_rows = read_matrix("G", k)?;
    let h_rows = read_matrix("H", n - k)?;
    if let Some(extra) = lines.next() {
        return Err(CodeError::Parse(format!("trailing garbage: `{extra}`")));
    }
    let generator = BitMatrix::from_rows(&g_rows);
    let parity = if n == k {
        BitMatrix::zeros(0, n)
    } else {
        BitMatrix::from_rows(&h_rows)
    };
    LinearCode::new(generator, parity, label)
}
