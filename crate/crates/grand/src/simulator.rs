//! Monte Carlo evaluation: SNR sweeps of BLER, erasure rate, and query
//! counts.
//!
//! Every trial seed is derived from (master seed, SNR index, trial index),
//! so parallel and sequential sweeps produce identical results and a rerun
//! with the same configuration is byte-identical.
//!
//! Query statistics are reported over all trials, with abandoned trials
//! contributing g = b; a second set over completed (non-erasure) decodes
//! only is carried alongside but not serialized into the CSV.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::codebook::LinearCode;
use crate::decoder::{self, DecodeOutcome, BRUTE_FORCE_MAX_K};
use crate::gf2::BitVector;
use crate::modem::{
    add_awgn, ebn0_db, modulate, observe, snr_to_sigma2, symbol_posteriors, ChannelSpec,
    EbN0Convention, Modulation,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),
}

/// Which decoder a sweep exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderKind {
    Grandab,
    Sgrandab,
    SgrandabSymbol,
    Ml,
}

impl DecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Grandab => "grandab",
            DecoderKind::Sgrandab => "sgrandab",
            DecoderKind::SgrandabSymbol => "sgrandab-symbol",
            DecoderKind::Ml => "ml",
        }
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "grandab" => Ok(DecoderKind::Grandab),
            "sgrandab" => Ok(DecoderKind::Sgrandab),
            "sgrandab-symbol" => Ok(DecoderKind::SgrandabSymbol),
            "ml" => Ok(DecoderKind::Ml),
            other => Err(format!("unknown decoder `{other}`")),
        }
    }
}

/// Sweep parameters; the code itself is passed to [`run_sweep`].
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub modulation: Modulation,
    pub decoder: DecoderKind,
    pub snrs_db: Vec<f64>,
    pub trials: u64,
    /// Abandonment threshold b; `None` runs unbounded.
    pub max_queries: Option<u64>,
    pub seed: u64,
    pub ebn0: EbN0Convention,
    /// Run trials across threads; results are identical either way.
    pub parallel: bool,
}

/// Query-count summary. Median and p90 use the nearest-rank convention.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryStats {
    pub mean: f64,
    pub median: u64,
    pub p90: u64,
    pub max: u64,
}

/// Aggregate results for one SNR point.
#[derive(Clone, Debug)]
pub struct SweepRecord {
    pub snr_db: f64,
    pub ebn0_db: f64,
    pub trials: u64,
    pub block_errors: u64,
    pub erasures: u64,
    /// (block_errors + erasures) / trials.
    pub bler: f64,
    pub erasure_rate: f64,
    /// Over all trials; erasures contribute g = b.
    pub queries: QueryStats,
    /// Over completed (non-erasure) decodes; `None` when every trial erased.
    pub completed_queries: Option<QueryStats>,
}

/// Outcome of a single encode-modulate-corrupt-decode trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    /// The decoder returned a codeword different from the transmitted one.
    pub is_error: bool,
    /// The decoder gave up within the query budget.
    pub is_erasure: bool,
    pub queries: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-trial seed, independent of execution order.
pub fn trial_seed(master: u64, snr_index: usize, trial: u64) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ snr_index as u64);
    splitmix64(b ^ trial)
}

/// Draws a uniform message, runs it through the channel, and decodes it.
pub fn run_trial(
    code: &LinearCode,
    modulation: Modulation,
    decoder: DecoderKind,
    sigma2: f64,
    max_queries: Option<u64>,
    seed: u64,
) -> TrialOutcome {
    let spec = ChannelSpec::new(modulation, sigma2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = BitVector::zeros(code.k());
    for i in 0..code.k() {
        if rng.random::<bool>() {
            u.set(i, true);
        }
    }
    let c = code.encode(&u);
    let y = add_awgn(&modulate(&c, &spec), sigma2, rng.next_u64());
    let obs = observe(&y, &spec);
    let outcome = match decoder {
        DecoderKind::Grandab => decoder::grandab(&obs.hard, code.parity(), max_queries),
        DecoderKind::Sgrandab => decoder::sgrandab(&obs, code.parity(), max_queries),
        DecoderKind::SgrandabSymbol => {
            let table = symbol_posteriors(&y, &spec).expect("symbol decoding requires QPSK");
            decoder::sgrandab_symbol(&obs, &table, code.parity(), max_queries)
        }
        DecoderKind::Ml => {
            let (word, score) = decoder::brute_force_ml(&obs, code).expect("k within oracle bound");
            DecodeOutcome {
                result: Some(word),
                queries: 1 << code.k(), // likelihood evaluations
                logscore: Some(score),
            }
        }
    };
    TrialOutcome {
        is_error: outcome.result.as_ref().is_some_and(|w| *w != c),
        is_erasure: outcome.is_erasure(),
        queries: outcome.queries,
    }
}

fn validate(code: &LinearCode, cfg: &SweepConfig) -> Result<(), SimError> {
    if cfg.trials == 0 {
        return Err(SimError::InvalidConfig("need trials >= 1".into()));
    }
    if cfg.snrs_db.is_empty() {
        return Err(SimError::InvalidConfig("need at least one SNR point".into()));
    }
    if cfg.max_queries == Some(0) {
        return Err(SimError::InvalidConfig("need max queries >= 1".into()));
    }
    let m = cfg.modulation.bits_per_symbol();
    if code.n() % m != 0 {
        return Err(SimError::InvalidConfig(format!(
            "modulation needs {} | n, got n = {}",
            m,
            code.n()
        )));
    }
    if cfg.decoder == DecoderKind::SgrandabSymbol && cfg.modulation != Modulation::Qpsk {
        return Err(SimError::InvalidConfig(
            "symbol-level decoding requires QPSK".into(),
        ));
    }
    if cfg.decoder == DecoderKind::Ml && code.k() > BRUTE_FORCE_MAX_K {
        return Err(SimError::InvalidConfig(format!(
            "ml decoder needs k <= {BRUTE_FORCE_MAX_K}, got k = {}",
            code.k()
        )));
    }
    Ok(())
}

fn summarize(mut queries: Vec<u64>) -> QueryStats {
    queries.sort_unstable();
    let n = queries.len();
    let nearest_rank = |p: f64| -> u64 {
        let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
        queries[rank - 1]
    };
    QueryStats {
        mean: queries.iter().sum::<u64>() as f64 / n as f64,
        median: nearest_rank(0.50),
        p90: nearest_rank(0.90),
        max: queries[n - 1],
    }
}

fn aggregate(snr_db: f64, ebn0: f64, outcomes: &[TrialOutcome]) -> SweepRecord {
    let trials = outcomes.len() as u64;
    let block_errors = outcomes.iter().filter(|o| o.is_error).count() as u64;
    let erasures = outcomes.iter().filter(|o| o.is_erasure).count() as u64;
    let completed: Vec<u64> = outcomes
        .iter()
        .filter(|o| !o.is_erasure)
        .map(|o| o.queries)
        .collect();
    SweepRecord {
        snr_db,
        ebn0_db: ebn0,
        trials,
        block_errors,
        erasures,
        bler: (block_errors + erasures) as f64 / trials as f64,
        erasure_rate: erasures as f64 / trials as f64,
        queries: summarize(outcomes.iter().map(|o| o.queries).collect()),
        completed_queries: if completed.is_empty() {
            None
        } else {
            Some(summarize(completed))
        },
    }
}

/// Runs the configured sweep, one record per SNR point.
pub fn run_sweep(code: &LinearCode, cfg: &SweepConfig) -> Result<Vec<SweepRecord>, SimError> {
    validate(code, cfg)?;
    let m = cfg.modulation.bits_per_symbol();
    let mut records = Vec::with_capacity(cfg.snrs_db.len());
    for (si, &snr_db) in cfg.snrs_db.iter().enumerate() {
        let sigma2 = snr_to_sigma2(snr_db);
        let one = |t: u64| {
            run_trial(
                code,
                cfg.modulation,
                cfg.decoder,
                sigma2,
                cfg.max_queries,
                trial_seed(cfg.seed, si, t),
            )
        };
        let outcomes: Vec<TrialOutcome> = if cfg.parallel {
            (0..cfg.trials).into_par_iter().map(one).collect()
        } else {
            (0..cfg.trials).map(one).collect()
        };
        let ebn0 = ebn0_db(snr_db, code.n(), code.k(), m, cfg.ebn0);
        records.push(aggregate(snr_db, ebn0, &outcomes));
    }
    Ok(records)
}

/// Column header of the sweep CSV.
pub const CSV_HEADER: &str = "snr_db,ebn0_db,trials,block_errors,erasures,bler,erasure_rate,\
mean_queries,median_queries,p90_queries,max_queries";

/// Serializes sweep records as CSV, header included. Formatting is fixed,
/// so identical records give byte-identical output.
pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{:.6},{:.6},{},{},{},{:.6},{:.6},{:.6},{},{},{}\n",
            r.snr_db,
            r.ebn0_db,
            r.trials,
            r.block_errors,
            r.erasures,
            r.bler,
            r.erasure_rate,
            r.queries.mean,
            r.queries.median,
            r.queries.p90,
            r.queries.max,
        ));
    }
    out
}
