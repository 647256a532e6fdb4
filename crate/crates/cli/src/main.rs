mod channel_file;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;
use typebound::bounds::BoundEngine;
use typebound::codesim::{estimate_error_batches, generate_codebook};
use typebound::selftest::{run_selftest, SelftestOptions};
use typebound::{capacity, BoundsError, Channel, ChannelError, CodesimError, Decoder, InputType, Variant};

use channel_file::ChannelFile;
use output::{write_json_line, Format, ResultRow, RowWriter};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("infeasible cost budget: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Internal(String),
    #[error("self-test failed")]
    CheckFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input(_) | CliError::Infeasible(_) => 2,
            CliError::Internal(_) | CliError::CheckFailed => 1,
        }
    }
}

impl From<ChannelError> for CliError {
    fn from(e: ChannelError) -> Self {
        match e {
            ChannelError::InfeasibleBudget { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            BoundsError::InvalidQuery(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<CodesimError> for CliError {
    fn from(e: CodesimError) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Finite-blocklength error bounds for discrete memoryless channels.
///
/// Rates are in bits per channel use.
#[derive(Debug, Parser)]
#[command(name = "typebound", version)]
struct Cli {
    /// Channel description (TOML with input_alphabet, output_alphabet,
    /// matrix and optional cost).
    #[arg(long, global = true, value_name = "FILE")]
    channel: Option<PathBuf>,
    /// Maximum number of worker threads.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Write results here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Capacity under an optional cost budget.
    Capacity {
        /// Cost budget; omitted means unconstrained.
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Converse and achievability bounds at one (n, R).
    Bounds {
        #[arg(long)]
        n: u32,
        /// Rate in bits per channel use.
        #[arg(long)]
        rate: f64,
        #[command(flatten)]
        common: BoundArgs,
    },
    /// Bounds over a grid of blocklengths or rates.
    Sweep {
        /// "n=a:b:step" or "R=a:b:step".
        #[arg(long)]
        grid: String,
        /// Blocklength, for a rate grid.
        #[arg(long)]
        n: Option<u32>,
        /// Rate in bits per channel use, for a blocklength grid.
        #[arg(long)]
        rate: Option<f64>,
        #[command(flatten)]
        common: BoundArgs,
    },
    /// Monte Carlo error of a random constant-composition code.
    Simulate {
        #[arg(long)]
        n: u32,
        /// Input type as comma-separated symbol counts, e.g. "8,8".
        #[arg(long)]
        composition: String,
        /// Rate in bits per channel use; the code has 2^floor(nR) words.
        #[arg(long)]
        rate: f64,
        /// Threshold offset for the threshold-j decoder.
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, value_enum, default_value_t = DecoderArg::ThresholdJ)]
        decoder: DecoderArg,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the built-in invariant suites.
    Selftest {
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Debug, Args)]
struct BoundArgs {
    /// Cost budget; omitted means unconstrained.
    #[arg(long)]
    budget: Option<f64>,
    /// Comma-separated subset of converse_underline, converse_J,
    /// achievability_J, achievability_I.
    #[arg(long, value_delimiter = ',', value_parser = parse_variant)]
    variants: Option<Vec<Variant>>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl BoundArgs {
    fn variants(&self) -> Vec<Variant> {
        self.variants.clone().unwrap_or_else(|| Variant::ALL.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DecoderArg {
    ThresholdJ,
    Mmi,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse::<Variant>().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::CheckFailed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let mut out: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            CliError::Input(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => Box::new(io::stdout().lock()),
    };
    let load = || -> Result<(ChannelFile, Channel), CliError> {
        let path = cli
            .channel
            .as_ref()
            .ok_or_else(|| CliError::Usage("--channel is required for this command".into()))?;
        let file = ChannelFile::load(path)?;
        let channel = file.to_channel()?;
        Ok((file, channel))
    };
    match &cli.command {
        Command::Capacity { budget } => {
            let (file, w) = load()?;
            let c = capacity(&w, *budget)?;
            let dist: Vec<String> = file
                .input_alphabet
                .iter()
                .zip(c.input.probs())
                .map(|(label, p)| format!("{label}={p:.6}"))
                .collect();
            writeln!(out, "{:.6}", c.bits).map_err(internal)?;
            writeln!(out, "{}", dist.join(" ")).map_err(internal)?;
        }
        Command::Bounds { n, rate, common } => {
            let (_, w) = load()?;
            let engine = BoundEngine::new(&w, *n, common.budget)?;
            let mut writer = RowWriter::new(&mut out, common.format)?;
            for v in common.variants() {
                writer.write(&timed(&engine, *rate, v)?)?;
            }
        }
        Command::Sweep { grid, n, rate, common } => {
            let (_, w) = load()?;
            let grid = parse_grid(grid)?;
            let variants = common.variants();
            let mut writer = RowWriter::new(&mut out, common.format)?;
            match grid {
                GridSpec::Rate(rates) => {
                    let n = n.ok_or_else(|| CliError::Usage("a rate grid needs --n".into()))?;
                    let engine = BoundEngine::new(&w, n, common.budget)?;
                    for r in rates {
                        for &v in &variants {
                            writer.write(&timed(&engine, r, v)?)?;
                        }
                    }
                }
                GridSpec::Blocklength(ns) => {
                    let r = rate.ok_or_else(|| CliError::Usage("a blocklength grid needs --rate".into()))?;
                    for n in ns {
                        let engine = BoundEngine::new(&w, n, common.budget)?;
                        for &v in &variants {
                            writer.write(&timed(&engine, r, v)?)?;
                        }
                    }
                }
            }
        }
        Command::Simulate {
            n,
            composition,
            rate,
            gamma,
            decoder,
            trials,
            seed,
        } => {
            let (_, w) = load()?;
            let p = parse_composition(composition, *n, w.input_size())?;
            if !(rate.is_finite() && *rate >= 0.0) {
                return Err(CliError::Usage(format!("rate must be nonnegative, got {rate}")));
            }
            let bits = (*n as f64 * rate).floor() as u32;
            if bits > 24 {
                return Err(CliError::Usage(format!("2^{bits} codewords is too many to simulate")));
            }
            let decoder = match decoder {
                DecoderArg::ThresholdJ => Decoder::ThresholdJ { gamma: *gamma },
                DecoderArg::Mmi => Decoder::Mmi,
            };
            let cb = generate_codebook(&p, 1usize << bits, *seed)?;
            for r in estimate_error_batches(&cb, &w, &decoder, *trials, seed.wrapping_add(1))? {
                write_json_line(&mut out, &r)?;
            }
        }
        Command::Selftest { inject_fault } => {
            let reports = run_selftest(&SelftestOptions {
                corrupt_kappa: *inject_fault,
            });
            for r in &reports {
                writeln!(out, "{r}").map_err(internal)?;
            }
            let ok = reports.iter().all(|r| r.ok());
            writeln!(out, "selftest: {}", if ok { "passed" } else { "FAILED" }).map_err(internal)?;
            out.flush().map_err(internal)?;
            if !ok {
                return Err(CliError::CheckFailed);
            }
        }
    }
    out.flush().map_err(internal)
}

fn internal(e: io::Error) -> CliError {
    CliError::Internal(e.to_string())
}

fn timed(engine: &BoundEngine<'_>, rate: f64, v: Variant) -> Result<ResultRow, CliError> {
    let start = Instant::now();
    let r = engine.evaluate(rate, v)?;
    Ok(ResultRow::new(&r, start.elapsed().as_secs_f64() * 1e3))
}

#[derive(Debug, Clone, PartialEq)]
enum GridSpec {
    Blocklength(Vec<u32>),
    Rate(Vec<f64>),
}

fn parse_grid(spec: &str) -> Result<GridSpec, CliError> {
    let bad = || CliError::Usage(format!("malformed grid {spec:?}; expected n=a:b:step or R=a:b:step"));
    let (key, range) = spec.split_once('=').ok_or_else(bad)?;
    let parts: Vec<f64> = range
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [a, b, step] = parts[..] else {
        return Err(bad());
    };
    if !(a.is_finite() && b.is_finite() && step.is_finite() && step > 0.0 && b >= a) {
        return Err(bad());
    }
    let count = ((b - a) / step).round() as usize + 1;
    let values = (0..count).map(|i| a + i as f64 * step);
    match key.trim() {
        "R" => Ok(GridSpec::Rate(
            values.map(|r| (r * 1e12).round() / 1e12).collect(),
        )),
        "n" => {
            let ns: Vec<u32> = values.map(|v| v.round() as u32).collect();
            if a < 1.0 || a.fract() != 0.0 || step.fract() != 0.0 {
                return Err(bad());
            }
            Ok(GridSpec::Blocklength(ns))
        }
        _ => Err(bad()),
    }
}

fn parse_composition(spec: &str, n: u32, inputs: usize) -> Result<InputType, CliError> {
    let counts: Vec<u32> = spec
        .split(',')
        .map(|s| s.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("malformed composition {spec:?}")))?;
    if counts.len() != inputs {
        return Err(CliError::Usage(format!(
            "composition has {} counts but the channel has {inputs} inputs",
            counts.len()
        )));
    }
    let total: u32 = counts.iter().sum();
    if total != n || n == 0 {
        return Err(CliError::Usage(format!("composition counts sum to {total}, expected n = {n}")));
    }
    Ok(InputType::new(counts))
}
