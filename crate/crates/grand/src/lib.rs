//! Guessing Random Additive Noise Decoding (GRAND) for binary linear block codes.
//!
//! Instead of searching the codebook for the transmitted word, GRAND guesses
//! the noise: putative error patterns are subtracted from the hard-demodulated
//! word in most-likely-first order and the first result that passes the
//! syndrome check is returned. Because patterns are visited in non-increasing
//! likelihood order, the returned word is a maximum-likelihood codeword for
//! any linear code, with no code-specific machinery.
//!
//! The crate provides:
//!
//! - [`gf2`]: packed bit vectors/matrices and GF(2) linear algebra,
//! - [`codebook`]: code constructors (Hamming, CRC, polar, CRC-aided polar,
//!   random) and a text persistence format,
//! - [`modem`]: BPSK/QPSK modulation, a seeded AWGN channel, and per-bit /
//!   per-symbol posterior computation,
//! - [`sequencer`]: most-likely-first error-pattern generators (Hamming-weight
//!   order for hard decoding, max-heap soft orders at bit and symbol level),
//! - [`decoder`]: GRANDAB, SGRANDAB, symbol-level SGRANDAB, and a brute-force
//!   ML oracle,
//! - [`simulator`]: a deterministic Monte Carlo harness producing BLER /
//!   erasure-rate / query-count sweeps as CSV.

pub mod codebook;
pub mod decoder;
pub mod gf2;
pub mod modem;
pub mod sequencer;
pub mod simulator;

pub use num_complex;

pub use codebook::LinearCode;
pub use decoder::DecodeOutcome;
pub use gf2::{BitMatrix, BitVector};
pub use modem::{ChannelSpec, Modulation, SoftObservation};
