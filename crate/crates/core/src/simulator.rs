//! Monte-Carlo bit-error-rate sweeps over SNR grids.
//!
//! Every trial is a pure function of `(master_seed, trial_index)`: draw both
//! users' bits, one quasi-static channel block and the receiver noise; form
//! the vectorized receive signal through the lifted model; cancel the
//! interference per the configured receiver; decode by exhaustive ML; count
//! bit errors for user 1. Trials run in fixed-size batches so results are
//! byte-identical regardless of worker count.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{self, Stream};
use crate::codebook::{CodeKind, CodeSpec, User};
use crate::error::{Error, Result};
use crate::modulation::{make_qam, Constellation};
use crate::numerics::{projection_complement, span_complement, C64, CMat, CVec};
use crate::receiver::{ao_mmse_whitened, ml_decode, ProjectedSystem};

/// Trials dispatched between stop-condition checks. Fixed so that the total
/// trial count per point depends only on the configuration.
const TRIAL_BATCH: u64 = 1024;

/// Redraw cap for degenerate channel draws within one trial.
const MAX_REDRAWS: u64 = 64;

/// Interference handling at receiver 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiverKind {
    /// Group zero-forcing projection.
    GroupZf,
    /// MMSE-regularized cancellation.
    AoMmse,
    /// Interference-free genie baseline.
    Genie,
}

impl ReceiverKind {
    pub fn token(self) -> &'static str {
        match self {
            ReceiverKind::GroupZf => "zf",
            ReceiverKind::AoMmse => "ao",
            ReceiverKind::Genie => "genie",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "zf" => Ok(ReceiverKind::GroupZf),
            "ao" => Ok(ReceiverKind::AoMmse),
            "genie" => Ok(ReceiverKind::Genie),
            _ => Err(Error::InvalidConfig(format!("unknown receiver `{s}`"))),
        }
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Full description of one BER sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub constellation_order: usize,
    pub code: CodeKind,
    pub receiver: ReceiverKind,
    pub snr_db_grid: Vec<f64>,
    /// Per-point stop condition: accumulate at least this many bit errors.
    pub target_bit_errors: u64,
    /// Hard per-point trial cap.
    pub max_trials_per_point: u64,
    pub master_seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "SNR grid must be strictly increasing".into(),
            ));
        }
        if self.target_bit_errors == 0 || self.max_trials_per_point == 0 {
            return Err(Error::InvalidConfig(
                "target bit errors and trial cap must be positive".into(),
            ));
        }
        let spec = CodeSpec::new(self.m, self.l, self.code)?;
        let constellation = make_qam(self.constellation_order)?;
        let search = (constellation.order() as u128)
            .checked_pow(spec.symbols_per_codeword() as u32)
            .unwrap_or(u128::MAX);
        if search > 1_000_000 {
            return Err(Error::GuardExceeded {
                size: search,
                guard: 1_000_000,
            });
        }
        Ok(())
    }
}

/// One measured point of a sweep. `wallclock_seconds` is informational and
/// never written to CSV, keeping emitted files reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub snr_db: f64,
    pub receiver: ReceiverKind,
    pub code: CodeKind,
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub trials: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub seed: u64,
    pub wallclock_seconds: f64,
}

/// Precomputed state shared by every trial of a sweep.
struct SweepContext {
    cfg: SimConfig,
    spec: CodeSpec,
    constellation: Constellation,
}

impl SweepContext {
    fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            spec: CodeSpec::new(cfg.m, cfg.l, cfg.code)?,
            constellation: make_qam(cfg.constellation_order)?,
        })
    }

    fn bits_per_trial(&self) -> u64 {
        (self.spec.symbols_per_codeword() * self.constellation.bits_per_symbol()) as u64
    }

    /// Runs one trial and returns user 1's bit error count.
    ///
    /// `user1_amp` and `noise_amp` scale the desired signal and the noise;
    /// both are 1 in production and exist for limiting-case tests
    /// (noise-free transmission, interference-only chance level).
    fn run_trial(&self, rho: f64, trial_index: u64, user1_amp: f64, noise_amp: f64) -> Result<u64> {
        let cfg = &self.cfg;
        let spec = &self.spec;
        let qam = &self.constellation;
        let mut rng = Stream::new(cfg.master_seed, trial_index).rng();

        let n_bits = self.bits_per_trial() as usize;
        let bits1: Vec<u8> = (0..n_bits).map(|_| rng.gen_range(0..=1u8)).collect();
        let bits2: Vec<u8> = (0..n_bits).map(|_| rng.gen_range(0..=1u8)).collect();
        let s = qam.map_bits(&bits1)?;
        let c = qam.map_bits(&bits2)?;
        let scale = (rho / spec.mu()).sqrt();

        // channel draw plus canceller; degenerate draws redraw the block
        let mut redraws = 0u64;
        let (h_eq, g_eq, canceller) = loop {
            let real = channel::draw_channel(cfg.m, cfg.n, &mut rng);
            let h_eq = spec.lift_channel(&real.h1, User::One)?;
            let g_eq = spec.lift_channel(&real.g1, User::Two)?;
            let canceller = match cfg.receiver {
                ReceiverKind::Genie => None,
                ReceiverKind::AoMmse => None,
                ReceiverKind::GroupZf => match spec.kind() {
                    CodeKind::Proposed => match projection_complement(g_eq.matrix()) {
                        Ok(q) => Some(q),
                        Err(Error::RankDeficient { .. }) => {
                            redraws += 1;
                            log::warn!(
                                "degenerate channel draw in trial {trial_index}; redrawing"
                            );
                            if redraws > MAX_REDRAWS {
                                return Err(Error::InvalidArgument(
                                    "persistently degenerate channel".into(),
                                ));
                            }
                            continue;
                        }
                        Err(e) => return Err(e),
                    },
                    // the multilayer code's lifted interference is
                    // structurally rank-deficient; cancel its span instead
                    CodeKind::Multilayer => Some(span_complement(g_eq.matrix())?),
                },
            };
            break (h_eq, g_eq, canceller);
        };

        let tn = h_eq.matrix().nrows();
        let noise = channel::draw_noise(tn, &mut rng).n;
        let amp = C64::new(scale * user1_amp, 0.0);
        let mut y = h_eq.matrix() * CVec::from_column_slice(&s) * amp;
        if cfg.receiver != ReceiverKind::Genie {
            y += g_eq.matrix() * CVec::from_column_slice(&c) * C64::new(scale, 0.0);
        }
        y += &noise * C64::new(noise_amp, 0.0);

        let sys = match cfg.receiver {
            ReceiverKind::GroupZf => {
                ProjectedSystem::project(canceller.expect("projector built above"), &y, &h_eq)?
            }
            ReceiverKind::AoMmse => ao_mmse_whitened(&y, &h_eq, &g_eq, rho, spec.mu())?,
            ReceiverKind::Genie => ProjectedSystem {
                z: y,
                a: h_eq.matrix().clone(),
                q: CMat::identity(tn, tn),
            },
        };
        let decoded = ml_decode(&sys, qam, spec.symbols_per_codeword(), scale)?;
        let bits_hat = qam.demap_hard(&decoded.symbols);
        Ok(bits1
            .iter()
            .zip(&bits_hat)
            .filter(|(a, b)| a != b)
            .count() as u64)
    }
}

/// Runs a single trial of `cfg` at linear SNR `rho`. Deterministic in
/// `(cfg.master_seed, trial_index)`.
pub fn run_trial(cfg: &SimConfig, rho: f64, trial_index: u64) -> Result<u64> {
    SweepContext::new(cfg)?.run_trial(rho, trial_index, 1.0, 1.0)
}

/// Runs the full sweep: per grid point, trials accumulate in fixed batches
/// until the target bit-error count or the trial cap is reached.
pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<BerRecord>> {
    let ctx = SweepContext::new(cfg)?;
    let bits_per_trial = ctx.bits_per_trial();
    let mut records = Vec::with_capacity(cfg.snr_db_grid.len());
    for &snr_db in &cfg.snr_db_grid {
        let rho = 10f64.powf(snr_db / 10.0);
        let started = Instant::now();
        let mut trials = 0u64;
        let mut bit_errors = 0u64;
        while trials < cfg.max_trials_per_point && bit_errors < cfg.target_bit_errors {
            let batch = TRIAL_BATCH.min(cfg.max_trials_per_point - trials);
            let sum = (trials..trials + batch)
                .into_par_iter()
                .map(|t| ctx.run_trial(rho, t, 1.0, 1.0))
                .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
            bit_errors += sum;
            trials += batch;
        }
        let ber = bit_errors as f64 / (trials * bits_per_trial) as f64;
        log::info!(
            "snr {snr_db} dB: {bit_errors} errors / {trials} trials, ber {ber:.3e}"
        );
        records.push(BerRecord {
            snr_db,
            receiver: cfg.receiver,
            code: cfg.code,
            m: cfg.m,
            n: cfg.n,
            l: cfg.l,
            trials,
            bit_errors,
            ber,
            seed: cfg.master_seed,
            wallclock_seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok(records)
}

/// CSV column header shared by the emitter and the parser.
pub const CSV_HEADER: &str = "snr_db,receiver,code,M,N,L,trials,bit_errors,ber,seed";

/// Writes records as CSV. Numeric fields use shortest-round-trip decimal
/// formatting, which is locale-independent and parses back exactly.
pub fn emit_csv<W: Write>(records: &[BerRecord], out: &mut W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.snr_db,
            r.receiver,
            r.code,
            r.m,
            r.n,
            r.l,
            r.trials,
            r.bit_errors,
            r.ber,
            r.seed
        )?;
    }
    Ok(())
}

/// Renders records to an in-memory CSV string.
pub fn csv_string(records: &[BerRecord]) -> String {
    let mut buf = Vec::new();
    emit_csv(records, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

/// Writes records to a file, surfacing IO failures with the path attached.
pub fn write_csv(records: &[BerRecord], path: &Path) -> Result<()> {
    let wrap = |source: io::Error| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(wrap)?;
    let mut out = BufWriter::new(file);
    emit_csv(records, &mut out).map_err(wrap)?;
    out.flush().map_err(wrap)
}

/// Parses CSV produced by [`emit_csv`]. The wallclock field is not part of
/// the format and comes back as zero.
pub fn parse_csv<R: BufRead>(reader: R) -> Result<Vec<BerRecord>> {
    let bad = |msg: String| Error::InvalidConfig(msg);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| bad("empty CSV input".into()))?
        .map_err(|e| bad(format!("read error: {e}")))?;
    if header.trim_end() != CSV_HEADER {
        return Err(bad(format!("unexpected CSV header `{header}`")));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| bad(format!("read error: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(bad(format!(
                "line {}: expected 10 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_f64 = |s: &str, what: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| bad(format!("line {}: bad {what} `{s}`", lineno + 2)))
        };
        let parse_u64 = |s: &str, what: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| bad(format!("line {}: bad {what} `{s}`", lineno + 2)))
        };
        let parse_usize = |s: &str, what: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| bad(format!("line {}: bad {what} `{s}`", lineno + 2)))
        };
        records.push(BerRecord {
            snr_db: parse_f64(fields[0], "snr_db")?,
            receiver: ReceiverKind::parse(fields[1])?,
            code: CodeKind::parse(fields[2])?,
            m: parse_usize(fields[3], "M")?,
            n: parse_usize(fields[4], "N")?,
            l: parse_usize(fields[5], "L")?,
            trials: parse_u64(fields[6], "trials")?,
            bit_errors: parse_u64(fields[7], "bit_errors")?,
            ber: parse_f64(fields[8], "ber")?,
            seed: parse_u64(fields[9], "seed")?,
            wallclock_seconds: 0.0,
        });
    }
    Ok(records)
}
