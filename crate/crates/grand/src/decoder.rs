//! The decoding algorithms.
//!
//! All three GRAND variants share one loop: draw putative error patterns
//! most-likely-first from a sequencer, subtract each from the hard word,
//! and return the first result whose syndrome is zero. The query counter g
//! counts syndrome checks; with a finite abandonment threshold b the
//! decoder gives up after b checks and reports an erasure.
//!
//! Syndromes are updated incrementally: the hard word's syndrome is
//! computed once and each candidate XORs in the parity-check columns of
//! its flipped bits, which is equivalent to the full product (see the
//! equivalence test) at a fraction of the cost.

use thiserror::Error;

use crate::codebook::LinearCode;
use crate::gf2::{mat_vec_mul, BitMatrix, BitVector};
use crate::modem::{symbol_bit, SoftObservation};
use crate::sequencer::{
    clamp_log_prob, compute_osi, hard_sequence, BitSequencer, OeiVector, SymbolSequencer,
};

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("brute-force ML needs k <= {max}, got k = {k}")]
    MessageTooLong { k: usize, max: usize },
}

/// Maximum code dimension the brute-force oracle will enumerate.
pub const BRUTE_FORCE_MAX_K: usize = 20;

/// Result of a decode: the codeword found, or an erasure when the query
/// budget ran out first.
#[derive(Clone, Debug)]
pub struct DecodeOutcome {
    /// The decoded codeword; `None` marks an erasure.
    pub result: Option<BitVector>,
    /// Number of syndrome checks performed (the paper's g).
    pub queries: u64,
    /// Log score of the returned word; absent for erasures and for hard
    /// decoding, which has no soft scores.
    pub logscore: Option<f64>,
}

impl DecodeOutcome {
    pub fn is_erasure(&self) -> bool {
        self.result.is_none()
    }
}

/// Parity-check columns packed for incremental syndrome updates.
struct SyndromeColumns {
    cols: Vec<BitVector>,
}

impl SyndromeColumns {
    fn new(h: &BitMatrix) -> Self {
        Self {
            cols: (0..h.cols()).map(|c| h.column(c)).collect(),
        }
    }

    /// Syndrome of `hard ⊕ pattern` given the syndrome of `hard`.
    fn apply(&self, base: &BitVector, pattern: &BitVector) -> BitVector {
        let mut syn = base.clone();
        for j in pattern.ones() {
            syn.xor_assign(&self.cols[j]);
        }
        syn
    }
}

/// Hard-detection GRAND with abandonment: queries patterns in
/// non-decreasing Hamming weight. `max_queries = None` runs unbounded.
pub fn grandab(hard: &BitVector, h: &BitMatrix, max_queries: Option<u64>) -> DecodeOutcome {
    assert_eq!(hard.len(), h.cols(), "word length must match parity columns");
    assert!(max_queries.is_none_or(|b| b >= 1), "need at least one query");
    let base = mat_vec_mul(h, hard);
    let columns = SyndromeColumns::new(h);
    let mut g = 0u64;
    for z in hard_sequence(hard.len()) {
        g += 1;
        if columns.apply(&base, &z).is_zero() {
            let mut word = hard.clone();
            word.xor_assign(&z);
            return DecodeOutcome {
                result: Some(word),
                queries: g,
                logscore: None,
            };
        }
        if Some(g) == max_queries {
            break;
        }
    }
    DecodeOutcome {
        result: None,
        queries: g,
        logscore: None,
    }
}

/// Soft-detection GRAND with abandonment: queries patterns in exact
/// non-increasing likelihood order, so a returned word is an ML codeword.
pub fn sgrandab(obs: &SoftObservation, h: &BitMatrix, max_queries: Option<u64>) -> DecodeOutcome {
    sgrandab_traced(obs, h, max_queries, |_, _| {})
}

/// [`sgrandab`] with a per-query callback receiving each queried pattern
/// and its log score, for instrumentation.
pub fn sgrandab_traced(
    obs: &SoftObservation,
    h: &BitMatrix,
    max_queries: Option<u64>,
    mut on_query: impl FnMut(&BitVector, f64),
) -> DecodeOutcome {
    assert_eq!(obs.n(), h.cols(), "observation length must match parity columns");
    assert!(max_queries.is_none_or(|b| b >= 1), "need at least one query");
    let oei = OeiVector::from_observation(obs);
    let mut seq = BitSequencer::new(&oei);
    let base = mat_vec_mul(h, &obs.hard);
    let columns = SyndromeColumns::new(h);
    let mut g = 0u64;
    while let Some(cand) = seq.next_candidate() {
        g += 1;
        on_query(&cand.pattern, cand.logscore);
        if columns.apply(&base, &cand.pattern).is_zero() {
            let mut word = obs.hard.clone();
            word.xor_assign(&cand.pattern);
            return DecodeOutcome {
                result: Some(word),
                queries: g,
                logscore: Some(cand.logscore),
            };
        }
        if Some(g) == max_queries {
            break;
        }
    }
    DecodeOutcome {
        result: None,
        queries: g,
        logscore: None,
    }
}

/// Symbol-level SGRANDAB for modulations whose bits share a channel output.
///
/// `symbol_logp[j][v]` is the log posterior of symbol value v at position
/// j (from [`crate::modem::symbol_posteriors`]); q must be a power of two
/// and the word length q's bit width times the symbol count. Candidates
/// are rank assignments over the per-symbol orderings; each is mapped to a
/// bit word before the syndrome check.
pub fn sgrandab_symbol(
    obs: &SoftObservation,
    symbol_logp: &[Vec<f64>],
    h: &BitMatrix,
    max_queries: Option<u64>,
) -> DecodeOutcome {
    assert!(!symbol_logp.is_empty(), "need at least one symbol");
    assert!(max_queries.is_none_or(|b| b >= 1), "need at least one query");
    let q = symbol_logp[0].len();
    assert!(q.is_power_of_two() && q >= 2, "q must be a power of two");
    let m = q.trailing_zeros() as usize;
    let ns = symbol_logp.len();
    assert_eq!(obs.n(), ns * m, "bit count must be symbols times bits-per-symbol");
    assert_eq!(obs.n(), h.cols(), "observation length must match parity columns");

    let osi = compute_osi(symbol_logp);
    let mut seq = SymbolSequencer::new(&osi);

    // hard word implied by the rank-0 symbols
    let mut hard = BitVector::zeros(obs.n());
    for p in 0..ns {
        let v = osi.hard_symbol(p);
        for t in 0..m {
            if symbol_bit(v, m, t) {
                hard.set(p * m + t, true);
            }
        }
    }
    let base = mat_vec_mul(h, &hard);
    let columns = SyndromeColumns::new(h);
    // syndrome delta of moving symbol p to rank r
    let deltas: Vec<Vec<BitVector>> = (0..ns)
        .map(|p| {
            (0..q)
                .map(|r| {
                    let flips = osi.value(p, r) ^ osi.hard_symbol(p);
                    let mut d = BitVector::zeros(h.rows());
                    for t in 0..m {
                        if symbol_bit(flips, m, t) {
                            d.xor_assign(&columns.cols[p * m + t]);
                        }
                    }
                    d
                })
                .collect()
        })
        .collect();

    let mut g = 0u64;
    while let Some(cand) = seq.next_candidate() {
        g += 1;
        let mut syn = base.clone();
        for (p, &r) in cand.ranks.iter().enumerate() {
            if r != 0 {
                syn.xor_assign(&deltas[p][r as usize]);
            }
        }
        if syn.is_zero() {
            let mut word = BitVector::zeros(obs.n());
            for (p, &r) in cand.ranks.iter().enumerate() {
                let v = osi.value(p, r as usize);
                for t in 0..m {
                    if symbol_bit(v, m, t) {
                        word.set(p * m + t, true);
                    }
                }
            }
            return DecodeOutcome {
                result: Some(word),
                queries: g,
                logscore: Some(cand.logscore),
            };
        }
        if Some(g) == max_queries {
            break;
        }
    }
    DecodeOutcome {
        result: None,
        queries: g,
        logscore: None,
    }
}

/// Exhaustive soft ML decoding: scores every one of the 2^k codewords and
/// returns the best, ties broken toward the lexicographically smallest
/// codeword. The independent oracle the GRAND decoders are checked against.
pub fn brute_force_ml(obs: &SoftObservation, code: &LinearCode) -> Result<(BitVector, f64), DecodeError> {
    let k = code.k();
    if k > BRUTE_FORCE_MAX_K {
        return Err(DecodeError::MessageTooLong {
            k,
            max: BRUTE_FORCE_MAX_K,
        });
    }
    assert_eq!(obs.n(), code.n(), "observation length must match code length");
    let mut best: Option<(BitVector, f64)> = None;
    for bits in 0u64..1 << k {
        let mut u = BitVector::zeros(k);
        for i in 0..k {
            if (bits >> i) & 1 != 0 {
                u.set(i, true);
            }
        }
        let c = code.encode(&u);
        let score: f64 = (0..code.n())
            .map(|i| clamp_log_prob(obs.logp(i, c.get(i))))
            .sum();
        let better = match &best {
            None => true,
            Some((bc, bs)) => {
                score > *bs || (score == *bs && c.lex_cmp(bc) == std::cmp::Ordering::Less)
            }
        };
        if better {
            best = Some((c, score));
        }
    }
    Ok(best.expect("codebook is nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{hamming_code, random_linear_code};
    use crate::modem::{
        add_awgn, modulate, observe, snr_to_sigma2, symbol_posteriors, ChannelSpec, Modulation,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn random_message(k: usize, rng: &mut ChaCha8Rng) -> BitVector {
        let mut u = BitVector::zeros(k);
        for i in 0..k {
            if rng.random::<bool>() {
                u.set(i, true);
            }
        }
        u
    }

    #[test]
    fn grandab_returns_codeword_immediately() {
        let code = hamming_code(3).unwrap();
        let mut u = BitVector::zeros(4);
        u.set(1, true);
        let c = code.encode(&u);
        let out = grandab(&c, code.parity(), None);
        assert_eq!(out.result.unwrap(), c);
        assert_eq!(out.queries, 1);
    }

    #[test]
    fn grandab_corrects_single_flip() {
        let code = hamming_code(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let u = random_message(4, &mut rng);
            let c = code.encode(&u);
            let mut received = c.clone();
            received.flip(rng.random_range(0..7));
            let out = grandab(&received, code.parity(), None);
            assert_eq!(out.result.unwrap(), c);
            assert!(out.queries <= 8, "weight-1 search is at most 1 + 7 checks");
        }
    }

    #[test]
    fn grandab_abandons_at_budget() {
        let code = hamming_code(3).unwrap();
        let mut word = code.encode(&BitVector::zeros(4));
        word.flip(0); // not a codeword
        let out = grandab(&word, code.parity(), Some(1));
        assert!(out.is_erasure());
        assert_eq!(out.queries, 1);
    }

    #[test]
    fn grandab_queries_have_non_decreasing_weight() {
        // grandab draws patterns straight from hard_sequence, so the weight
        // profile of its first g queries is the stream's first g weights
        let code = random_linear_code(10, 4, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let word = random_message(10, &mut rng);
        let out = grandab(&word, code.parity(), Some(50));
        let mut last = 0;
        for (g, z) in hard_sequence(10).take(out.queries as usize).enumerate() {
            assert!(z.weight() >= last, "weight dropped at query {}", g + 1);
            last = z.weight();
        }
    }

    fn bpsk_observation(
        code: &LinearCode,
        snr_db: f64,
        rng: &mut ChaCha8Rng,
    ) -> (BitVector, SoftObservation) {
        let sigma2 = snr_to_sigma2(snr_db);
        let spec = ChannelSpec::new(Modulation::Bpsk, sigma2);
        let u = random_message(code.k(), rng);
        let c = code.encode(&u);
        let y = add_awgn(&modulate(&c, &spec), sigma2, rng.random());
        (c, observe(&y, &spec))
    }

    #[test]
    fn sgrandab_noiseless_takes_one_query() {
        let code = random_linear_code(12, 6, 1).unwrap();
        let spec = ChannelSpec::new(Modulation::Bpsk, 1e-6);
        let c = code.encode(&BitVector::from_binary_str("101101").unwrap());
        let y = add_awgn(&modulate(&c, &spec), 1e-6, 3);
        let out = sgrandab(&observe(&y, &spec), code.parity(), Some(100));
        assert_eq!(out.result.unwrap(), c);
        assert_eq!(out.queries, 1);
    }

    #[test]
    fn sgrandab_matches_brute_force_oracle() {
        let code = random_linear_code(12, 6, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let (_, obs) = bpsk_observation(&code, 2.0, &mut rng);
            let out = sgrandab(&obs, code.parity(), Some(100_000));
            let (_, oracle_score) = brute_force_ml(&obs, &code).unwrap();
            let got = out.logscore.expect("no erasures expected at this budget");
            assert!(
                (got - oracle_score).abs() <= 1e-9 * got.abs().max(1.0),
                "score {got} vs oracle {oracle_score}"
            );
        }
    }

    #[test]
    fn sgrandab_rate_one_code_returns_hard_word() {
        let code = random_linear_code(6, 6, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (_, obs) = bpsk_observation(&code, 0.0, &mut rng);
        let out = sgrandab(&obs, code.parity(), Some(10));
        assert_eq!(out.result.unwrap(), obs.hard);
        assert_eq!(out.queries, 1);
    }

    #[test]
    fn sgrandab_query_scores_non_increasing_and_unique() {
        let code = random_linear_code(12, 6, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (_, obs) = bpsk_observation(&code, 0.0, &mut rng);
            let mut scores = Vec::new();
            let mut seen = HashSet::new();
            sgrandab_traced(&obs, code.parity(), Some(10_000), |pattern, score| {
                scores.push(score);
                assert!(seen.insert(pattern.to_string()), "repeated query");
            });
            for w in scores.windows(2) {
                assert!(w[0] >= w[1] - 1e-12);
            }
        }
    }

    #[test]
    fn sgrandab_erasure_iff_budget_exhausted() {
        let code = random_linear_code(12, 6, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for budget in [1u64, 2, 5, 50, 5000] {
            let (_, obs) = bpsk_observation(&code, 0.0, &mut rng);
            let out = sgrandab(&obs, code.parity(), Some(budget));
            if out.is_erasure() {
                assert_eq!(out.queries, budget);
            } else {
                assert!(out.queries <= budget);
                assert!(mat_vec_mul(code.parity(), &out.result.unwrap()).is_zero());
            }
        }
    }

    #[test]
    fn incremental_syndrome_matches_full_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let code = random_linear_code(14, 6, 3).unwrap();
        let columns = SyndromeColumns::new(code.parity());
        for _ in 0..200 {
            let word = random_message(14, &mut rng);
            let pattern = random_message(14, &mut rng);
            let base = mat_vec_mul(code.parity(), &word);
            let mut flipped = word.clone();
            flipped.xor_assign(&pattern);
            assert_eq!(columns.apply(&base, &pattern), mat_vec_mul(code.parity(), &flipped));
        }
    }

    #[test]
    fn bsc_posteriors_follow_weight_classes() {
        // constant crossover probability: soft order must sweep the same
        // weight classes as the hard enumeration, in the same class order
        let crossover: f64 = 0.1;
        let n = 8;
        let llr = (1.0 - crossover).ln() - crossover.ln();
        let obs = SoftObservation::from_llrs(&vec![llr; n]);
        let oei = OeiVector::from_observation(&obs);
        let soft_weights: Vec<usize> = BitSequencer::new(&oei).map(|c| c.pattern.weight()).collect();
        let hard_weights: Vec<usize> = hard_sequence(n).map(|z| z.weight()).collect();
        assert_eq!(soft_weights, hard_weights);
    }

    fn qpsk_observation(
        code: &LinearCode,
        snr_db: f64,
        rng: &mut ChaCha8Rng,
    ) -> (BitVector, SoftObservation, Vec<Vec<f64>>) {
        let sigma2 = snr_to_sigma2(snr_db);
        let spec = ChannelSpec::new(Modulation::Qpsk, sigma2);
        let u = random_message(code.k(), rng);
        let c = code.encode(&u);
        let y = add_awgn(&modulate(&c, &spec), sigma2, rng.random());
        let table = symbol_posteriors(&y, &spec).unwrap();
        (c, observe(&y, &spec), table)
    }

    #[test]
    fn symbol_decoder_noiseless_takes_one_query() {
        let code = random_linear_code(12, 6, 1).unwrap();
        let spec = ChannelSpec::new(Modulation::Qpsk, 1e-6);
        let c = code.encode(&BitVector::from_binary_str("110010").unwrap());
        let y = add_awgn(&modulate(&c, &spec), 1e-6, 17);
        let obs = observe(&y, &spec);
        let table = symbol_posteriors(&y, &spec).unwrap();
        let out = sgrandab_symbol(&obs, &table, code.parity(), Some(100));
        assert_eq!(out.result.unwrap(), c);
        assert_eq!(out.queries, 1);
    }

    #[test]
    fn symbol_decoder_matches_brute_force_oracle() {
        let code = random_linear_code(12, 6, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..1000 {
            let (_, obs, table) = qpsk_observation(&code, 2.0, &mut rng);
            let out = sgrandab_symbol(&obs, &table, code.parity(), Some(100_000));
            let (_, oracle_score) = brute_force_ml(&obs, &code).unwrap();
            let got = out.logscore.expect("no erasures expected at this budget");
            assert!(
                (got - oracle_score).abs() <= 1e-9 * got.abs().max(1.0),
                "score {got} vs oracle {oracle_score}"
            );
        }
    }

    #[test]
    fn symbol_decoder_abandons_at_budget() {
        let code = random_linear_code(12, 6, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        loop {
            let (_, obs, table) = qpsk_observation(&code, 0.0, &mut rng);
            if code.contains(&obs.hard) {
                continue;
            }
            let out = sgrandab_symbol(&obs, &table, code.parity(), Some(1));
            assert!(out.is_erasure());
            assert_eq!(out.queries, 1);
            break;
        }
    }

    #[test]
    fn brute_force_repetition_example() {
        // [3,1] repetition, kept-bit posteriors p(bit=0) = (0.9, 0.9, 0.8)
        let code = hamming_code(2).unwrap();
        let llrs: Vec<f64> = [0.9f64, 0.9, 0.8]
            .iter()
            .map(|&p0| p0.ln() - (1.0 - p0).ln())
            .collect();
        let obs = SoftObservation::from_llrs(&llrs);
        let (word, score) = brute_force_ml(&obs, &code).unwrap();
        assert!(word.is_zero());
        assert!((score - (0.9f64 * 0.9 * 0.8).ln()).abs() < 1e-12);
        // and the runner-up is the all-ones word
        assert!(((0.1f64 * 0.1 * 0.2).ln()) < score);
    }

    #[test]
    fn brute_force_noiseless_returns_transmitted() {
        let code = random_linear_code(10, 5, 4).unwrap();
        let spec = ChannelSpec::new(Modulation::Bpsk, 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let u = random_message(5, &mut rng);
            let c = code.encode(&u);
            let y = add_awgn(&modulate(&c, &spec), 1e-6, rng.random());
            let (word, _) = brute_force_ml(&observe(&y, &spec), &code).unwrap();
            assert_eq!(word, c);
        }
    }

    #[test]
    fn brute_force_rejects_large_k() {
        let code = random_linear_code(30, 25, 1).unwrap();
        let obs = SoftObservation::from_llrs(&vec![1.0; 30]);
        assert!(matches!(
            brute_force_ml(&obs, &code),
            Err(DecodeError::MessageTooLong { k: 25, .. })
        ));
    }

    #[test]
    fn decoded_word_always_satisfies_syndrome() {
        let code = random_linear_code(12, 6, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..100 {
            let (_, obs) = bpsk_observation(&code, 1.0, &mut rng);
            let out = sgrandab(&obs, code.parity(), Some(1000));
            if let Some(word) = out.result {
                assert!(mat_vec_mul(code.parity(), &word).is_zero());
            }
        }
    }
}
