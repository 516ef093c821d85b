//! Modulation, AWGN channel, and posterior computation.
//!
//! BPSK maps bit b to 1-2b on the real axis; QPSK Gray-maps bit pairs to
//! (±1/√2, ±1/√2) with bit 0 on I, bit 1 on Q, and 0 mapping to the
//! positive sign. Both constellations have unit average symbol energy, so
//! SNR = 1/σ² with σ² the noise variance per real dimension.
//!
//! All probability arithmetic is done in the log domain: a word's score is
//! the sum of per-bit log posteriors, which stays finite where a product of
//! a hundred posteriors would underflow.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::gf2::BitVector;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModemError {
    #[error("symbol-level posteriors require QPSK, got {0:?}")]
    UnsupportedModulation(Modulation),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modulation {
    Bpsk,
    Qpsk,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
        }
    }
}

/// Channel parameters: modulation plus noise variance per real dimension.
#[derive(Clone, Copy, Debug)]
pub struct ChannelSpec {
    pub modulation: Modulation,
    pub sigma2: f64,
}

impl ChannelSpec {
    pub fn new(modulation: Modulation, sigma2: f64) -> Self {
        assert!(sigma2 > 0.0, "noise variance must be positive");
        Self { modulation, sigma2 }
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.modulation.bits_per_symbol()
    }
}

/// Channel output with hard decisions and per-bit log posteriors.
///
/// For each bit i, `exp(bit_logp0[i]) + exp(bit_logp1[i]) = 1` (uniform
/// prior over the two hypotheses), `hard[i]` is the more likely value with
/// ties resolved to 0, and `govern[i]` names the channel-output symbol the
/// posterior was computed from.
#[derive(Clone, Debug)]
pub struct SoftObservation {
    pub symbols: Vec<Complex64>,
    pub hard: BitVector,
    pub bit_logp0: Vec<f64>,
    pub bit_logp1: Vec<f64>,
    pub govern: Vec<usize>,
}

impl SoftObservation {
    pub fn n(&self) -> usize {
        self.hard.len()
    }

    /// Log posterior of the hypothesis `bit` at position i.
    pub fn logp(&self, i: usize, bit: bool) -> f64 {
        if bit {
            self.bit_logp1[i]
        } else {
            self.bit_logp0[i]
        }
    }

    /// Builds an observation from per-bit LLRs, llr = log(p0/p1).
    ///
    /// Used when soft values arrive from outside the modem (e.g. the CLI);
    /// `symbols` is left empty and each bit governs itself.
    pub fn from_llrs(llrs: &[f64]) -> Self {
        let n = llrs.len();
        let mut hard = BitVector::zeros(n);
        let mut logp0 = Vec::with_capacity(n);
        let mut logp1 = Vec::with_capacity(n);
        for (i, &llr) in llrs.iter().enumerate() {
            logp0.push(-softplus(-llr));
            logp1.push(-softplus(llr));
            if llr < 0.0 {
                hard.set(i, true);
            }
        }
        Self {
            symbols: Vec::new(),
            hard,
            bit_logp0: logp0,
            bit_logp1: logp1,
            govern: (0..n).collect(),
        }
    }
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

const QPSK_AMP: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// QPSK constellation point for symbol value v in 0..4.
///
/// The value encodes the bit pair big-endian: v = 2*b0 + b1 with b0 the I
/// bit and b1 the Q bit; a 0 bit takes the positive sign.
pub fn qpsk_point(v: u8) -> Complex64 {
    debug_assert!(v < 4);
    let b0 = (v >> 1) & 1;
    let b1 = v & 1;
    Complex64::new(
        QPSK_AMP * (1.0 - 2.0 * f64::from(b0)),
        QPSK_AMP * (1.0 - 2.0 * f64::from(b1)),
    )
}

/// The t-th bit (t = 0 first) of an m-bit symbol value, big-endian.
pub fn symbol_bit(v: u8, m: usize, t: usize) -> bool {
    debug_assert!(t < m);
    (v >> (m - 1 - t)) & 1 != 0
}

/// Maps a codeword to channel symbols. The word length must be a multiple
/// of the modulation's bits per symbol.
pub fn modulate(c: &BitVector, spec: &ChannelSpec) -> Vec<Complex64> {
    let m = spec.bits_per_symbol();
    assert!(
        c.len() % m == 0,
        "word length {} not divisible by bits per symbol {}",
        c.len(),
        m
    );
    match spec.modulation {
        Modulation::Bpsk => c
            .iter()
            .map(|b| Complex64::new(1.0 - 2.0 * f64::from(u8::from(b)), 0.0))
            .collect(),
        Modulation::Qpsk => (0..c.len() / 2)
            .map(|j| {
                let v = 2 * u8::from(c.get(2 * j)) + u8::from(c.get(2 * j + 1));
                qpsk_point(v)
            })
            .collect(),
    }
}

/// Adds circularly symmetric Gaussian noise with variance `sigma2` per real
/// dimension. Deterministic for a fixed seed: per symbol, the real draw
/// precedes the imaginary draw.
pub fn add_awgn(x: &[Complex64], sigma2: f64, seed: u64) -> Vec<Complex64> {
    assert!(sigma2 > 0.0, "noise variance must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma2.sqrt()).unwrap();
    x.iter()
        .map(|&s| {
            let re = normal.sample(&mut rng);
            let im = normal.sample(&mut rng);
            s + Complex64::new(re, im)
        })
        .collect()
}

/// Demodulates channel outputs into hard bits and per-bit log posteriors.
///
/// BPSK: bit i is governed by symbol i with p(bit=0 | y) =
/// 1/(1 + exp(-2 Re(y)/σ²)). QPSK: bits 2j and 2j+1 are governed by symbol
/// j through its I and Q components with amplitude 1/√2; Gray mapping makes
/// the two bits independent binary observations.
pub fn observe(y: &[Complex64], spec: &ChannelSpec) -> SoftObservation {
    let m = spec.bits_per_symbol();
    let n = y.len() * m;
    let mut hard = BitVector::zeros(n);
    let mut logp0 = vec![0.0; n];
    let mut logp1 = vec![0.0; n];
    let mut govern = vec![0usize; n];

    let mut put = |i: usize, component: f64, amp: f64, symbol: usize| {
        let t = 2.0 * amp * component / spec.sigma2; // log(p0/p1)
        logp0[i] = -softplus(-t);
        logp1[i] = -softplus(t);
        if t < 0.0 {
            hard.set(i, true);
        }
        govern[i] = symbol;
    };

    match spec.modulation {
        Modulation::Bpsk => {
            for (j, &s) in y.iter().enumerate() {
                put(j, s.re, 1.0, j);
            }
        }
        Modulation::Qpsk => {
            for (j, &s) in y.iter().enumerate() {
                put(2 * j, s.re, QPSK_AMP, j);
                put(2 * j + 1, s.im, QPSK_AMP, j);
            }
        }
    }
    SoftObservation {
        symbols: y.to_vec(),
        hard,
        bit_logp0: logp0,
        bit_logp1: logp1,
        govern,
    }
}

/// Per-symbol log posteriors over the q = 4 QPSK constellation points,
/// normalized under a uniform prior. Row j, entry v is the log posterior of
/// symbol value v given output j.
pub fn symbol_posteriors(y: &[Complex64], spec: &ChannelSpec) -> Result<Vec<Vec<f64>>, ModemError> {
    if spec.modulation != Modulation::Qpsk {
        return Err(ModemError::UnsupportedModulation(spec.modulation));
    }
    Ok(y.iter()
        .map(|&s| {
            let loglik: Vec<f64> = (0..4u8)
                .map(|v| {
                    let d = s - qpsk_point(v);
                    -(d.re * d.re + d.im * d.im) / (2.0 * spec.sigma2)
                })
                .collect();
            let max = loglik.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + loglik.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
            loglik.iter().map(|&l| l - lse).collect()
        })
        .collect())
}

/// σ² from SNR in dB: SNR = -10 log10(σ²).
pub fn snr_to_sigma2(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Rate convention for the Eb/N0 conversion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EbN0Convention {
    /// Eb/N0 = SNR - 10 log10(k/n) - 10 log10(m).
    Plain,
    /// Substitutes (k + crc_len)/n for the rate, as 3GPP tooling does for
    /// CRC-aided codes.
    ThreeGpp { crc_len: usize },
}

/// Converts channel SNR (dB) to Eb/N0 (dB) for an [n, k] code with m bits
/// per symbol.
pub fn ebn0_db(snr_db: f64, n: usize, k: usize, m: usize, convention: EbN0Convention) -> f64 {
    let rate = match convention {
        EbN0Convention::Plain => k as f64 / n as f64,
        EbN0Convention::ThreeGpp { crc_len } => (k + crc_len) as f64 / n as f64,
    };
    snr_db - 10.0 * rate.log10() - 10.0 * (m as f64).log10()
}
