//! Most-likely-first error-pattern generation.
//!
//! Three orders are provided:
//!
//! - [`hard_sequence`]: all 2^n patterns in non-decreasing Hamming weight,
//!   for hard-detection decoding;
//! - [`BitSequencer`]: exact per-bit likelihood order via a max-heap of
//!   candidates and a two-child parent rule, so each pattern is enqueued
//!   exactly once and popped in non-increasing score order;
//! - [`SymbolSequencer`]: the same scheme at symbol granularity for
//!   modulations whose bits share a channel output, with up to n/m children
//!   per candidate.
//!
//! Reliability ordering lives in an [`OeiVector`]: bit positions sorted
//! least-reliable first, each carrying the score delta a flip at that
//! position contributes. A candidate caches `j_star`, the highest occupied
//! rank in that order, which makes child generation O(1) per child.
//!
//! Tie-breaking is deterministic everywhere: reliability sorts fall back to
//! the position index, heap pops fall back to the lexicographically
//! smallest pattern. The ordering theory treats ties as measure-zero;
//! pinning them keeps golden tests reproducible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::gf2::BitVector;
use crate::modem::SoftObservation;

/// Floor for log probabilities; a posterior of exactly 0 contributes this
/// instead of -inf, keeping scores finite without disturbing the order.
pub const LOG_PROB_FLOOR: f64 = -700.0;

/// Clamps a log probability to the finite floor.
pub fn clamp_log_prob(x: f64) -> f64 {
    if x < LOG_PROB_FLOOR {
        LOG_PROB_FLOOR
    } else {
        x
    }
}

/// Ordered Error Indices: bit positions sorted least reliable first.
#[derive(Clone, Debug)]
pub struct OeiVector {
    order: Vec<usize>,
    delta: Vec<f64>,
    base_score: f64,
}

impl OeiVector {
    /// Builds the order from per-position log posteriors of the kept (hard)
    /// and flipped hypotheses. Expects `exp(keep) + exp(flip) = 1` per
    /// position; sorts by ascending kept posterior with ties broken by
    /// ascending position.
    pub fn from_log_posteriors(logp_keep: &[f64], logp_flip: &[f64]) -> Self {
        assert_eq!(logp_keep.len(), logp_flip.len());
        let keep: Vec<f64> = logp_keep.iter().map(|&x| clamp_log_prob(x)).collect();
        let flip: Vec<f64> = logp_flip.iter().map(|&x| clamp_log_prob(x)).collect();
        let mut order: Vec<usize> = (0..keep.len()).collect();
        order.sort_by(|&a, &b| keep[a].partial_cmp(&keep[b]).unwrap().then(a.cmp(&b)));
        let delta: Vec<f64> = order.iter().map(|&i| flip[i] - keep[i]).collect();
        debug_assert!(delta.windows(2).all(|w| w[0] >= w[1]), "deltas must be non-increasing");
        let base_score = keep.iter().sum();
        Self { order, delta, base_score }
    }

    /// Builds the order from a demodulated observation.
    pub fn from_observation(obs: &SoftObservation) -> Self {
        let n = obs.n();
        let mut keep = Vec::with_capacity(n);
        let mut flip = Vec::with_capacity(n);
        for i in 0..n {
            let hard = obs.hard.get(i);
            keep.push(obs.logp(i, hard));
            flip.push(obs.logp(i, !hard));
        }
        Self::from_log_posteriors(&keep, &flip)
    }

    /// Convenience constructor from plain probabilities of the kept bit.
    pub fn from_keep_probabilities(p_keep: &[f64]) -> Self {
        let keep: Vec<f64> = p_keep.iter().map(|&p| p.ln()).collect();
        let flip: Vec<f64> = p_keep.iter().map(|&p| (1.0 - p).ln()).collect();
        Self::from_log_posteriors(&keep, &flip)
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    /// Bit position at rank j (0-indexed, least reliable first).
    pub fn position(&self, rank: usize) -> usize {
        self.order[rank]
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Score change from flipping the bit at rank j: log p_flip - log p_keep.
    pub fn delta(&self, rank: usize) -> f64 {
        self.delta[rank]
    }

    /// Score of the zero pattern: the hard word's summed log posteriors.
    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    /// Score of an arbitrary pattern, recomputed from scratch.
    pub fn score_of(&self, pattern: &BitVector) -> f64 {
        let mut s = self.base_score;
        for (rank, &pos) in self.order.iter().enumerate() {
            if pattern.get(pos) {
                s += self.delta[rank];
            }
        }
        s
    }

    /// Highest occupied rank of a pattern (1-based), 0 for the zero pattern.
    pub fn j_star(&self, pattern: &BitVector) -> usize {
        (1..=self.n())
            .rev()
            .find(|&j| pattern.get(self.order[j - 1]))
            .unwrap_or(0)
    }
}

/// A putative error pattern with its cached score and highest occupied
/// OEI rank.
#[derive(Clone, Debug)]
pub struct ErrorCandidate {
    pub pattern: BitVector,
    pub logscore: f64,
    pub j_star: usize,
}

impl ErrorCandidate {
    fn zero(oei: &OeiVector) -> Self {
        Self {
            pattern: BitVector::zeros(oei.n()),
            logscore: oei.base_score(),
            j_star: 0,
        }
    }
}

struct HeapEntry(ErrorCandidate);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap on score; on ties the lexicographically smaller pattern
        // must pop first, so it compares as the greater entry
        self.0
            .logscore
            .partial_cmp(&other.0.logscore)
            .unwrap()
            .then_with(|| other.0.pattern.lex_cmp(&self.0.pattern))
    }
}

/// The candidate set S: a max-heap keyed by score with a deterministic
/// tie-break.
pub struct CandidateHeap {
    heap: BinaryHeap<HeapEntry>,
}

impl CandidateHeap {
    pub fn new() -> Self {
        Self { heap: BinaryHeap::new() }
    }

    pub fn push(&mut self, cand: ErrorCandidate) {
        self.heap.push(HeapEntry(cand));
    }

    pub fn pop(&mut self) -> Option<ErrorCandidate> {
        self.heap.pop().map(|e| e.0)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Snapshot of the patterns currently held (unordered).
    pub fn patterns(&self) -> Vec<BitVector> {
        self.heap.iter().map(|e| e.0.pattern.clone()).collect()
    }
}

impl Default for CandidateHeap {
    fn default() -> Self {
        Self::new()
    }
}

/// Children of a bit-level candidate: extend the occupied prefix by one
/// rank, and (if the candidate is nonzero) also the variant with the old
/// top rank cleared. Scores update incrementally via the affected deltas.
pub fn children_bit(e: &ErrorCandidate, oei: &OeiVector) -> Vec<ErrorCandidate> {
    let js = e.j_star;
    if js == oei.n() {
        return Vec::new();
    }
    let mut extended = e.clone();
    extended.pattern.set(oei.position(js), true);
    extended.logscore += oei.delta(js);
    extended.j_star = js + 1;
    if js == 0 {
        return vec![extended];
    }
    let mut shifted = extended.clone();
    shifted.pattern.set(oei.position(js - 1), false);
    shifted.logscore -= oei.delta(js - 1);
    vec![extended, shifted]
}

/// The parent of a nonzero pattern: clear the bit at rank j*, set the bit
/// at rank j*-1.
///
/// # Panics
///
/// Panics on the zero pattern, whose parent is undefined.
pub fn parent_bit(pattern: &BitVector, oei: &OeiVector) -> BitVector {
    let js = oei.j_star(pattern);
    assert!(js > 0, "the zero pattern has no parent");
    let mut parent = pattern.clone();
    parent.set(oei.position(js - 1), false);
    if js >= 2 {
        parent.set(oei.position(js - 2), true);
    }
    parent
}

/// Pops bit-level candidates in non-increasing score order, each exactly
/// once, starting from the zero pattern.
pub struct BitSequencer<'a> {
    oei: &'a OeiVector,
    heap: CandidateHeap,
}

impl<'a> BitSequencer<'a> {
    pub fn new(oei: &'a OeiVector) -> Self {
        let mut heap = CandidateHeap::new();
        heap.push(ErrorCandidate::zero(oei));
        Self { oei, heap }
    }

    /// Pops the best candidate, inserting its children in its place.
    pub fn next_candidate(&mut self) -> Option<ErrorCandidate> {
        let best = self.heap.pop()?;
        for child in children_bit(&best, self.oei) {
            self.heap.push(child);
        }
        Some(best)
    }

    pub fn heap(&self) -> &CandidateHeap {
        &self.heap
    }
}

impl Iterator for BitSequencer<'_> {
    type Item = ErrorCandidate;

    fn next(&mut self) -> Option<ErrorCandidate> {
        self.next_candidate()
    }
}

/// All 2^n patterns in non-decreasing Hamming weight; within a weight
/// class, combinations of flipped positions in lexicographic order.
pub fn hard_sequence(n: usize) -> HardSequence {
    HardSequence {
        n,
        weight: 0,
        positions: Vec::new(),
        fresh_class: true,
        done: false,
    }
}

pub struct HardSequence {
    n: usize,
    weight: usize,
    positions: Vec<usize>,
    fresh_class: bool,
    done: bool,
}

impl HardSequence {
    fn emit(&self) -> BitVector {
        let mut v = BitVector::zeros(self.n);
        for &p in &self.positions {
            v.set(p, true);
        }
        v
    }

    /// Advances to the next combination within the weight class; false when
    /// the class is exhausted.
    fn next_combination(&mut self) -> bool {
        let w = self.weight;
        let mut i = w;
        while i > 0 {
            i -= 1;
            if self.positions[i] < self.n - (w - i) {
                self.positions[i] += 1;
                for j in i + 1..w {
                    self.positions[j] = self.positions[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for HardSequence {
    type Item = BitVector;

    fn next(&mut self) -> Option<BitVector> {
        if self.done {
            return None;
        }
        if self.fresh_class {
            self.fresh_class = false;
            return Some(self.emit());
        }
        if self.next_combination() {
            return Some(self.emit());
        }
        if self.weight == self.n {
            self.done = true;
            return None;
        }
        self.weight += 1;
        self.positions = (0..self.weight).collect();
        Some(self.emit())
    }
}

/// Ordered Symbol Indices: per symbol position, all q symbol values sorted
/// most likely first with their (clamped) log posteriors.
#[derive(Clone, Debug)]
pub struct OsiTable {
    q: usize,
    values: Vec<Vec<u8>>,
    logp: Vec<Vec<f64>>,
}

impl OsiTable {
    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of symbol positions.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Symbol value at the given rank (rank 0 = hard decision).
    pub fn value(&self, sym: usize, rank: usize) -> u8 {
        self.values[sym][rank]
    }

    pub fn logp(&self, sym: usize, rank: usize) -> f64 {
        self.logp[sym][rank]
    }

    pub fn hard_symbol(&self, sym: usize) -> u8 {
        self.values[sym][0]
    }
}

/// Sorts each symbol's values by descending log posterior, ties broken by
/// ascending symbol value.
pub fn compute_osi(symbol_logp: &[Vec<f64>]) -> OsiTable {
    assert!(!symbol_logp.is_empty(), "need at least one symbol");
    let q = symbol_logp[0].len();
    assert!(q >= 2, "need q >= 2");
    let mut values = Vec::with_capacity(symbol_logp.len());
    let mut logp = Vec::with_capacity(symbol_logp.len());
    for row in symbol_logp {
        assert_eq!(row.len(), q, "ragged symbol table");
        let mut idx: Vec<u8> = (0..q as u8).collect();
        idx.sort_by(|&a, &b| {
            row[b as usize]
                .partial_cmp(&row[a as usize])
                .unwrap()
                .then(a.cmp(&b))
        });
        logp.push(idx.iter().map(|&v| clamp_log_prob(row[v as usize])).collect());
        values.push(idx);
    }
    OsiTable { q, values, logp }
}

/// A symbol-level candidate: per symbol position, the OSI rank queried
/// (rank 0 means the hard decision). `j_star` is the highest OEI rank with
/// a nonzero entry.
#[derive(Clone, Debug)]
pub struct SymbolCandidate {
    pub ranks: Vec<u8>,
    pub logscore: f64,
    pub j_star: usize,
}

struct SymbolHeapEntry(SymbolCandidate);

impl PartialEq for SymbolHeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for SymbolHeapEntry {}
impl PartialOrd for SymbolHeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for SymbolHeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .logscore
            .partial_cmp(&other.0.logscore)
            .unwrap()
            .then_with(|| other.0.ranks.cmp(&self.0.ranks))
    }
}

/// Children of a symbol-level candidate: advance the symbol at rank j* one
/// OSI rank (when possible), and move each later position from rank 0 to
/// rank 1. At most n/m children in total.
pub fn children_symbol(e: &SymbolCandidate, order: &[usize], osi: &OsiTable) -> Vec<SymbolCandidate> {
    let ns = order.len();
    let js = e.j_star;
    let mut out = Vec::new();
    if js > 0 {
        let p = order[js - 1];
        let r = e.ranks[p] as usize;
        if r + 1 < osi.q() {
            let mut c = e.clone();
            c.ranks[p] = (r + 1) as u8;
            c.logscore += osi.logp(p, r + 1) - osi.logp(p, r);
            out.push(c);
        }
    }
    for j in js + 1..=ns {
        let p = order[j - 1];
        debug_assert_eq!(e.ranks[p], 0, "positions above j_star must be at rank 0");
        let mut c = e.clone();
        c.ranks[p] = 1;
        c.logscore += osi.logp(p, 1) - osi.logp(p, 0);
        c.j_star = j;
        out.push(c);
    }
    out
}

/// The parent of a nonzero symbol candidate: step the symbol at rank j*
/// back one OSI rank.
///
/// # Panics
///
/// Panics on the all-rank-0 candidate, whose parent is undefined.
pub fn parent_symbol(ranks: &[u8], order: &[usize]) -> Vec<u8> {
    let js = (1..=order.len())
        .rev()
        .find(|&j| ranks[order[j - 1]] != 0)
        .expect("the zero candidate has no parent");
    let mut parent = ranks.to_vec();
    parent[order[js - 1]] -= 1;
    parent
}

/// Pops symbol-level candidates in non-increasing score order, each exactly
/// once, starting from the all-hard-decision candidate.
pub struct SymbolSequencer<'a> {
    osi: &'a OsiTable,
    order: Vec<usize>,
    heap: BinaryHeap<SymbolHeapEntry>,
}

impl<'a> SymbolSequencer<'a> {
    /// Orders symbol positions by ascending posterior of the hard symbol
    /// (ties by ascending position), mirroring the bit-level rule.
    pub fn new(osi: &'a OsiTable) -> Self {
        let ns = osi.len();
        let mut order: Vec<usize> = (0..ns).collect();
        order.sort_by(|&a, &b| osi.logp(a, 0).partial_cmp(&osi.logp(b, 0)).unwrap().then(a.cmp(&b)));
        let base: f64 = (0..ns).map(|p| osi.logp(p, 0)).sum();
        let mut heap = BinaryHeap::new();
        heap.push(SymbolHeapEntry(SymbolCandidate {
            ranks: vec![0; ns],
            logscore: base,
            j_star: 0,
        }));
        Self { osi, order, heap }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn next_candidate(&mut self) -> Option<SymbolCandidate> {
        let best = self.heap.pop()?.0;
        for child in children_symbol(&best, &self.order, self.osi) {
            self.heap.push(SymbolHeapEntry(child));
        }
        Some(best)
    }

    pub fn heap_len(&self) -> usize {
        self.heap.len()
    }

    /// Score of a rank assignment, recomputed from scratch.
    pub fn score_of(&self, ranks: &[u8]) -> f64 {
        ranks
            .iter()
            .enumerate()
            .map(|(p, &r)| self.osi.logp(p, r as usize))
            .sum()
    }
}

impl Iterator for SymbolSequencer<'_> {
    type Item = SymbolCandidate;

    fn next(&mut self) -> Option<SymbolCandidate> {
        self.next_candidate()
    }
}
