//! `grand`: generate codes, encode, decode, and run BLER sweeps.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (malformed files,
//! inconsistent dimensions, parameter guards).

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use grand::codebook::{self, LinearCode, CRC11_POLY};
use grand::decoder;
use grand::gf2::BitVector;
use grand::modem::{EbN0Convention, Modulation, SoftObservation};
use grand::simulator::{self, DecoderKind, SweepConfig};

#[derive(Parser)]
#[command(
    name = "grand",
    version,
    about = "Guessing-random-additive-noise decoding toolkit",
    after_help = "Code specs: hamming:R | random:N:K:SEED | polar:N:K | capolar:N:K[:CRC]\n\
                  CRC specs:  crc11 | poly:<bits, highest degree first, e.g. 1011>"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a code and write it in the grandcode v1 text format
    GenCode(GenCodeArgs),
    /// Encode a message with a code
    Encode(EncodeArgs),
    /// Decode one received word
    Decode(DecodeArgs),
    /// Monte Carlo BLER/query sweep over an SNR grid, written as CSV
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct GenCodeArgs {
    /// Code family: hamming | random | polar | capolar
    #[arg(long)]
    kind: String,
    /// Parity bits r for hamming
    #[arg(long)]
    r: Option<usize>,
    /// Code length n
    #[arg(long)]
    n: Option<usize>,
    /// Code dimension k (message bits)
    #[arg(long)]
    k: Option<usize>,
    /// Seed for random codes
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CRC for capolar: crc11 or poly:<bits>
    #[arg(long, default_value = "crc11")]
    crc: String,
    /// Design SNR (dB) for the polar reliability ranking
    #[arg(long, default_value_t = 0.0)]
    design_snr: f64,
    /// Override the stored label
    #[arg(long)]
    label: Option<String>,
    /// Output path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CodeSource {
    /// Built-in code spec, e.g. hamming:3 or capolar:64:46:crc11
    #[arg(long, conflicts_with = "code_file")]
    code: Option<String>,
    /// Path to a grandcode v1 file
    #[arg(long)]
    code_file: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    source: CodeSource,
    /// Message bits as a 0/1 string of length k
    #[arg(long)]
    bits: String,
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    source: CodeSource,
    /// Decoder: grandab | sgrandab | sgrandab-symbol | ml
    #[arg(long)]
    decoder: DecoderKind,
    /// Hard received word as a 0/1 string (grandab)
    #[arg(long)]
    bits: Option<String>,
    /// Per-bit LLRs log(p0/p1), comma-separated (sgrandab, ml)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    llrs: Option<Vec<f64>>,
    /// QPSK channel outputs as re:im pairs, comma-separated (sgrandab-symbol)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    symbols: Option<Vec<String>>,
    /// Noise variance per real dimension (with --symbols)
    #[arg(long)]
    sigma2: Option<f64>,
    /// Abandonment threshold: a count or `inf`
    #[arg(long, default_value = "1000000")]
    max_queries: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: CodeSource,
    /// Modulation: bpsk | qpsk
    #[arg(long = "mod", default_value = "bpsk")]
    modulation: String,
    /// Decoder: grandab | sgrandab | sgrandab-symbol | ml
    #[arg(long)]
    decoder: DecoderKind,
    /// SNR grid start:stop:step in dB, inclusive
    #[arg(long, conflicts_with = "snr_list", allow_hyphen_values = true)]
    snr: Option<String>,
    /// Explicit SNR list in dB, comma-separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_list: Option<Vec<f64>>,
    /// Monte Carlo trials per SNR point
    #[arg(long)]
    trials: u64,
    /// Abandonment threshold b: a count or `inf`
    #[arg(long, default_value = "1000000")]
    max_queries: String,
    /// Master seed; per-trial seeds derive from it deterministically
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Eb/N0 rate convention: plain | threegpp
    #[arg(long, default_value = "plain")]
    ebn0_convention: String,
    /// CRC length used by the threegpp convention
    #[arg(long, default_value_t = 0)]
    crc_len: usize,
    /// Run trials sequentially (results are identical to parallel)
    #[arg(long)]
    sequential: bool,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Usage(String),
    Data(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl From<codebook::CodeError> for CliError {
    fn from(e: codebook::CodeError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn data(msg: impl Into<String>) -> CliError {
    CliError::Data(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}"); // --help / --version
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Usage(_) => ExitCode::from(1),
                CliError::Data(_) => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenCode(args) => gen_code(args),
        Command::Encode(args) => encode(args),
        Command::Decode(args) => decode(args),
        Command::Simulate(args) => simulate(args),
    }
}

fn parse_crc(spec: &str) -> Result<Vec<u8>, CliError> {
    if spec == "crc11" {
        return Ok(CRC11_POLY.to_vec());
    }
    if let Some(bits) = spec.strip_prefix("poly:") {
        let poly: Option<Vec<u8>> = bits
            .chars()
            .map(|c| match c {
                '0' => Some(0),
                '1' => Some(1),
                _ => None,
            })
            .collect();
        return poly
            .filter(|p| p.len() >= 2 && p[0] == 1)
            .ok_or_else(|| usage(format!("bad CRC polynomial `{bits}`")));
    }
    Err(usage(format!("unknown CRC spec `{spec}` (try crc11 or poly:1011)")))
}

fn parse_code_spec(spec: &str) -> Result<LinearCode, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let int = |s: &str, what: &str| -> Result<usize, CliError> {
        s.parse().map_err(|_| usage(format!("bad {what} `{s}` in code spec")))
    };
    let code = match parts.as_slice() {
        ["hamming", r] => codebook::hamming_code(int(r, "r")?)?,
        ["random", n, k, seed] => {
            let seed: u64 = seed
                .parse()
                .map_err(|_| usage(format!("bad seed `{seed}` in code spec")))?;
            codebook::random_linear_code(int(n, "n")?, int(k, "k")?, seed)?
        }
        ["polar", n, k] => {
            let (g, _) = codebook::polar_generator(int(n, "n")?, int(k, "k")?, 0.0)?;
            LinearCode::from_generator(g, format!("polar[{n},{k}]"))?
        }
        ["capolar", n, k] => codebook::ca_polar_code(int(n, "n")?, int(k, "k")?, CRC11_POLY, None, 0.0)?,
        ["capolar", n, k, crc] => {
            codebook::ca_polar_code(int(n, "n")?, int(k, "k")?, &parse_crc(crc)?, None, 0.0)?
        }
        _ => {
            return Err(usage(format!(
                "unknown code spec `{spec}` (try hamming:3, random:12:6:1, polar:8:4, capolar:64:46:crc11)"
            )))
        }
    };
    Ok(code)
}

fn load_source(source: &CodeSource) -> Result<LinearCode, CliError> {
    match (&source.code, &source.code_file) {
        (Some(spec), None) => parse_code_spec(spec),
        (None, Some(path)) => {
            let mut file = File::open(path)
                .map_err(|e| data(format!("cannot open {}: {e}", path.display())))?;
            Ok(codebook::load_code(&mut file)?)
        }
        _ => Err(usage("exactly one of --code or --code-file is required")),
    }
}

fn parse_max_queries(s: &str) -> Result<Option<u64>, CliError> {
    if s == "inf" {
        return Ok(None);
    }
    match s.parse::<u64>() {
        Ok(b) if b >= 1 => Ok(Some(b)),
        _ => Err(usage(format!("bad --max-queries `{s}` (a positive count or `inf`)"))),
    }
}

fn parse_bits(s: &str, expect_len: usize, what: &str) -> Result<BitVector, CliError> {
    let v = BitVector::from_binary_str(s)
        .ok_or_else(|| data(format!("{what} must be a 0/1 string")))?;
    if v.len() != expect_len {
        return Err(data(format!("{what} has {} bits, expected {expect_len}", v.len())));
    }
    Ok(v)
}

fn gen_code(args: GenCodeArgs) -> Result<(), CliError> {
    let need = |opt: Option<usize>, flag: &str| {
        opt.ok_or_else(|| usage(format!("--{flag} is required for --kind {}", args.kind)))
    };
    let code = match args.kind.as_str() {
        "hamming" => codebook::hamming_code(need(args.r, "r")?)?,
        "random" => codebook::random_linear_code(need(args.n, "n")?, need(args.k, "k")?, args.seed)?,
        "polar" => {
            let (n, k) = (need(args.n, "n")?, need(args.k, "k")?);
            let (g, _) = codebook::polar_generator(n, k, args.design_snr)?;
            LinearCode::from_generator(g, format!("polar[{n},{k}]"))?
        }
        "capolar" => codebook::ca_polar_code(
            need(args.n, "n")?,
            need(args.k, "k")?,
            &parse_crc(&args.crc)?,
            None,
            args.design_snr,
        )?,
        other => return Err(usage(format!("unknown code kind `{other}`"))),
    };
    let code = match args.label {
        Some(label) => code.with_label(label),
        None => code,
    };
    let mut file = File::create(&args.out)
        .map_err(|e| data(format!("cannot create {}: {e}", args.out.display())))?;
    codebook::save_code(&code, &mut file)?;
    eprintln!("wrote {} [{},{}] to {}", code.label(), code.n(), code.k(), args.out.display());
    Ok(())
}

fn encode(args: EncodeArgs) -> Result<(), CliError> {
    let code = load_source(&args.source)?;
    let u = parse_bits(&args.bits, code.k(), "--bits")?;
    println!("{}", code.encode(&u));
    Ok(())
}

fn decode(args: DecodeArgs) -> Result<(), CliError> {
    let code = load_source(&args.source)?;
    let b = parse_max_queries(&args.max_queries)?;
    let outcome = match args.decoder {
        DecoderKind::Grandab => {
            let bits = args
                .bits
                .as_deref()
                .ok_or_else(|| usage("--decoder grandab needs --bits"))?;
            let word = parse_bits(bits, code.n(), "--bits")?;
            decoder::grandab(&word, code.parity(), b)
        }
        DecoderKind::Sgrandab | DecoderKind::Ml => {
            let llrs = args
                .llrs
                .as_deref()
                .ok_or_else(|| usage(format!("--decoder {} needs --llrs", args.decoder.name())))?;
            if llrs.len() != code.n() {
                return Err(data(format!(
                    "--llrs has {} values, expected {}",
                    llrs.len(),
                    code.n()
                )));
            }
            let obs = SoftObservation::from_llrs(llrs);
            if args.decoder == DecoderKind::Ml {
                let (word, score) = decoder::brute_force_ml(&obs, &code)
                    .map_err(|e| data(e.to_string()))?;
                decoder::DecodeOutcome {
                    result: Some(word),
                    queries: 1 << code.k(),
                    logscore: Some(score),
                }
            } else {
                decoder::sgrandab(&obs, code.parity(), b)
            }
        }
        DecoderKind::SgrandabSymbol => {
            let raw = args
                .symbols
                .as_deref()
                .ok_or_else(|| usage("--decoder sgrandab-symbol needs --symbols"))?;
            let sigma2 = args
                .sigma2
                .ok_or_else(|| usage("--decoder sgrandab-symbol needs --sigma2"))?;
            if sigma2 <= 0.0 {
                return Err(usage("--sigma2 must be positive"));
            }
            let symbols: Vec<grand::num_complex::Complex64> = raw
                .iter()
                .map(|pair| {
                    let (re, im) = pair
                        .split_once(':')
                        .ok_or_else(|| data(format!("bad symbol `{pair}`, expected re:im")))?;
                    let re: f64 = re.parse().map_err(|_| data(format!("bad symbol `{pair}`")))?;
                    let im: f64 = im.parse().map_err(|_| data(format!("bad symbol `{pair}`")))?;
                    Ok(grand::num_complex::Complex64::new(re, im))
                })
                .collect::<Result<_, CliError>>()?;
            if symbols.len() * 2 != code.n() {
                return Err(data(format!(
                    "--symbols has {} outputs, expected {}",
                    symbols.len(),
                    code.n() / 2
                )));
            }
            let spec = grand::modem::ChannelSpec::new(Modulation::Qpsk, sigma2);
            let obs = grand::modem::observe(&symbols, &spec);
            let table = grand::modem::symbol_posteriors(&symbols, &spec)
                .map_err(|e| data(e.to_string()))?;
            decoder::sgrandab_symbol(&obs, &table, code.parity(), b)
        }
    };
    match outcome.result {
        Some(word) => println!("{word}"),
        None => println!("ERASURE"),
    }
    println!("queries={}", outcome.queries);
    Ok(())
}

fn parse_snr_grid(args: &SimulateArgs) -> Result<Vec<f64>, CliError> {
    if let Some(list) = &args.snr_list {
        if list.is_empty() {
            return Err(usage("--snr-list needs at least one value"));
        }
        return Ok(list.clone());
    }
    let Some(range) = &args.snr else {
        return Err(usage("one of --snr or --snr-list is required"));
    };
    let parts: Vec<&str> = range.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(usage(format!("bad --snr `{range}`, expected start:stop:step")));
    };
    let parse = |s: &str| -> Result<f64, CliError> {
        s.parse().map_err(|_| usage(format!("bad number `{s}` in --snr")))
    };
    let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
    if step <= 0.0 {
        return Err(usage("--snr step must be positive"));
    }
    let mut grid = Vec::new();
    let mut point = start;
    while point <= stop + 1e-9 {
        grid.push(point);
        point += step;
    }
    if grid.is_empty() {
        return Err(usage("--snr range is empty"));
    }
    Ok(grid)
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let code = load_source(&args.source)?;
    let modulation = match args.modulation.as_str() {
        "bpsk" => Modulation::Bpsk,
        "qpsk" => Modulation::Qpsk,
        other => return Err(usage(format!("unknown modulation `{other}`"))),
    };
    let ebn0 = match args.ebn0_convention.as_str() {
        "plain" => EbN0Convention::Plain,
        "threegpp" => EbN0Convention::ThreeGpp { crc_len: args.crc_len },
        other => return Err(usage(format!("unknown Eb/N0 convention `{other}`"))),
    };
    let cfg = SweepConfig {
        modulation,
        decoder: args.decoder,
        snrs_db: parse_snr_grid(&args)?,
        trials: args.trials,
        max_queries: parse_max_queries(&args.max_queries)?,
        seed: args.seed,
        ebn0,
        parallel: !args.sequential,
    };
    let records = simulator::run_sweep(&code, &cfg).map_err(|e| data(e.to_string()))?;
    let mut file = File::create(&args.out)
        .map_err(|e| data(format!("cannot create {}: {e}", args.out.display())))?;
    file.write_all(simulator::records_to_csv(&records).as_bytes())?;
    // all-trials stats count erasures at g = b; completed-only stats go here
    for r in &records {
        let completed = match &r.completed_queries {
            Some(c) => format!(
                "completed mean={:.3} median={} p90={} max={}",
                c.mean, c.median, c.p90, c.max
            ),
            None => "no completed decodes".to_string(),
        };
        println!(
            "snr={} dB ebn0={:.3} dB bler={:.6} erasures={} {}",
            r.snr_db, r.ebn0_db, r.bler, r.erasures, completed
        );
    }
    eprintln!("wrote {} rows to {}", records.len(), args.out.display());
    Ok(())
}
