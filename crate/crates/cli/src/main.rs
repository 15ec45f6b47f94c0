//! Command-line driver: BER sweeps, diversity-criterion checks and
//! pairwise-error-probability bound tables.
//!
//! Every flag can also live in a plain `key = value` config file passed via
//! `--config`; command-line flags override file values. Exit codes: 0 on
//! success, 1 for invalid configuration, 2 when an enumeration guard trips,
//! 3 on IO failures.

mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand};

use icstbc::analysis::{full_rank_check_with, pep_upper_bound};
use icstbc::codebook::{CodeKind, CodeSpec};
use icstbc::error::{Error, Result};
use icstbc::modulation::make_qam;
use icstbc::simulator::{run_sweep, write_csv, ReceiverKind, SimConfig};

use config::FileConfig;

#[derive(Parser)]
#[command(name = "icstbc", version, about = "Space-time block codes for two-user interference channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo BER sweep and emit CSV
    Simulate(SimulateArgs),
    /// Exhaustively check the full-rank diversity criterion
    VerifyRank(VerifyRankArgs),
    /// Tabulate the closed-form pairwise-error-probability bound
    PepBound(PepBoundArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Config file with `key = value` lines; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Transmit antennas per user
    #[arg(long = "M")]
    m: Option<usize>,
    /// Receive antennas per receiver
    #[arg(long = "N")]
    n: Option<usize>,
    /// Layers per codeword
    #[arg(long = "L")]
    l: Option<usize>,
    /// Constellation order: 4, 16 or 64
    #[arg(long = "mod")]
    modulation: Option<usize>,
    /// Code family: proposed | multilayer
    #[arg(long)]
    code: Option<String>,
    /// Receiver: zf | ao | genie
    #[arg(long)]
    receiver: Option<String>,
    /// SNR grid in dB: start:step:end or a comma-separated list
    #[arg(long)]
    snr: Option<String>,
    /// Stop a point after this many bit errors
    #[arg(long = "target-errors")]
    target_errors: Option<u64>,
    /// Hard trial cap per point
    #[arg(long = "max-trials")]
    max_trials: Option<u64>,
    /// Master seed; every record carries it
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to the number of cores)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct VerifyRankArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long = "L")]
    l: Option<usize>,
    /// Constellation order: 4, 16 or 64
    #[arg(long = "mod")]
    modulation: Option<usize>,
    /// Code family: proposed | multilayer
    #[arg(long)]
    code: Option<String>,
    /// Channel draws to sample
    #[arg(long)]
    draws: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Stop early after this many recorded deficiencies
    #[arg(long = "max-witnesses")]
    max_witnesses: Option<usize>,
    /// JSON report path (stdout when omitted)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PepBoundArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Diversity constant
    #[arg(long)]
    alpha: Option<f64>,
    /// Energy normalization factor
    #[arg(long)]
    mu: Option<f64>,
    /// Diversity order M*N
    #[arg(long = "MN")]
    mn: Option<usize>,
    /// SNR grid in dB: start:step:end or a comma-separated list
    #[arg(long)]
    snr: Option<String>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses "start:step:end" (inclusive) or a comma-separated list.
fn parse_snr_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::InvalidConfig(msg);
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| bad(format!("bad SNR value `{s}`")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.len() {
        3 => {
            let (start, step, end) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
            if step <= 0.0 || end < start {
                return Err(bad(format!("bad SNR range `{text}`")));
            }
            let count = ((end - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|k| start + step * k as f64).collect()
        }
        1 => text.split(',').map(parse).collect::<Result<Vec<f64>>>()?,
        _ => return Err(bad(format!("bad SNR grid `{text}`"))),
    };
    if grid.is_empty() {
        return Err(bad("empty SNR grid".into()));
    }
    Ok(grid)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let file = FileConfig::load(
        args.config.as_deref(),
        &[
            "M", "N", "L", "mod", "code", "receiver", "snr", "target-errors", "max-trials",
            "seed", "out", "workers",
        ],
    )?;
    let code = args
        .code
        .or_else(|| file.get_str("code").map(str::to_string));
    let receiver = args
        .receiver
        .or_else(|| file.get_str("receiver").map(str::to_string));
    let snr = args.snr.or_else(|| file.get_str("snr").map(str::to_string));
    let out = args
        .out
        .or_else(|| file.get_str("out").map(PathBuf::from));
    let cfg = SimConfig {
        m: args.m.or(file.get("M")?).unwrap_or(2),
        n: args.n.or(file.get("N")?).unwrap_or(1),
        l: args.l.or(file.get("L")?).unwrap_or(4),
        constellation_order: args.modulation.or(file.get("mod")?).unwrap_or(4),
        code: CodeKind::parse(code.as_deref().unwrap_or("proposed"))?,
        receiver: ReceiverKind::parse(receiver.as_deref().unwrap_or("zf"))?,
        snr_db_grid: parse_snr_grid(snr.as_deref().unwrap_or("0:2:26"))?,
        target_bit_errors: args.target_errors.or(file.get("target-errors")?).unwrap_or(200),
        max_trials_per_point: args.max_trials.or(file.get("max-trials")?).unwrap_or(10_000_000),
        master_seed: args.seed.or(file.get("seed")?).unwrap_or(42),
    };
    if let Some(workers) = args.workers.or(file.get("workers")?) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    let records = run_sweep(&cfg)?;
    match out {
        Some(path) => write_csv(&records, &path),
        None => {
            let mut stdout = std::io::stdout().lock();
            icstbc::simulator::emit_csv(&records, &mut stdout).map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })
        }
    }
}

fn verify_rank(args: VerifyRankArgs) -> Result<()> {
    let file = FileConfig::load(
        args.config.as_deref(),
        &["M", "N", "L", "mod", "code", "draws", "seed", "max-witnesses", "report"],
    )?;
    let code = args
        .code
        .or_else(|| file.get_str("code").map(str::to_string));
    let report_path = args
        .report
        .or_else(|| file.get_str("report").map(PathBuf::from));
    let m = args.m.or(file.get("M")?).unwrap_or(2);
    let n = args.n.or(file.get("N")?).unwrap_or(1);
    let l = args.l.or(file.get("L")?).unwrap_or(2);
    let order = args.modulation.or(file.get("mod")?).unwrap_or(4);
    let draws = args.draws.or(file.get("draws")?).unwrap_or(100);
    let seed = args.seed.or(file.get("seed")?).unwrap_or(7);
    let max_witnesses = args.max_witnesses.or(file.get("max-witnesses")?);

    let spec = CodeSpec::new(m, l, CodeKind::parse(code.as_deref().unwrap_or("proposed"))?)?;
    let constellation = make_qam(order)?;
    let report = full_rank_check_with(&spec, n, &constellation, draws, seed, max_witnesses)?;
    eprintln!(
        "checked {} draws x {} error vectors: {} (min lambda {:.6e}, {} witnesses)",
        report.samples,
        report.error_vectors_per_draw,
        if report.passed { "PASSED" } else { "FAILED" },
        report.min_lambda_min,
        report.deficient_witnesses.len()
    );
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::InvalidConfig(format!("serializing report: {e}")))?;
    match report_path {
        Some(path) => std::fs::write(&path, json + "\n").map_err(|source| Error::Io {
            path,
            source,
        }),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn pep_bound(args: PepBoundArgs) -> Result<()> {
    let file = FileConfig::load(
        args.config.as_deref(),
        &["alpha", "mu", "MN", "snr", "out"],
    )?;
    let alpha = args.alpha.or(file.get("alpha")?).unwrap_or(1.0);
    let mu = args.mu.or(file.get("mu")?).unwrap_or(1.0);
    let mn = args.mn.or(file.get("MN")?).unwrap_or(2);
    let snr = args.snr.or_else(|| file.get_str("snr").map(str::to_string));
    let out = args
        .out
        .or_else(|| file.get_str("out").map(PathBuf::from));
    let grid = parse_snr_grid(snr.as_deref().unwrap_or("0:2:40"))?;

    let mut body = String::from("snr_db,rho,bound\n");
    for snr_db in grid {
        let rho = 10f64.powf(snr_db / 10.0);
        let point = pep_upper_bound(rho, alpha, mu, mn, 1)?;
        body.push_str(&format!("{snr_db},{rho},{}\n", point.bound));
    }
    match out {
        Some(path) => std::fs::write(&path, body).map_err(|source| Error::Io { path, source }),
        None => {
            std::io::stdout()
                .lock()
                .write_all(body.as_bytes())
                .map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion) =>
        {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let outcome = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::VerifyRank(args) => verify_rank(args),
        Command::PepBound(args) => pep_bound(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
