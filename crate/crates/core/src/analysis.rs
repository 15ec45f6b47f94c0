//! Mechanical verification of the full-diversity design criterion.
//!
//! A code retains full diversity under group zero-forcing reception exactly
//! when `Q (I_N ⊗ ΔS)` keeps full column rank `M*N` for every nonzero error
//! vector, where `Q` is the canceller built from the interferer's lifted
//! channel and `ΔS` the codeword difference. This module scans that
//! criterion exhaustively over the finite error alphabet for sampled channel
//! draws, estimates the diversity constant (the smallest Gram eigenvalue
//! seen anywhere in the scan), evaluates the closed-form pairwise error
//! probability bound, and fits diversity orders to measured BER curves.
//!
//! Throughout, "lambda" denotes eigenvalues of the Gram matrix, i.e. squared
//! singular values of `Q (I_N ⊗ ΔS)`; reports state per-draw minima as well
//! as the minimum over draws and never claim a constant uniform over the
//! interferer's channel.

use serde::{Deserialize, Serialize};

use crate::channel::{self, Stream};
use crate::codebook::{CodeKind, CodeSpec, User};
use crate::error::{Error, Result};
use crate::modulation::Constellation;
use crate::numerics::{
    kron, projection_complement, span_complement, svd_singular_values, C64, CMat,
    DEFAULT_RANK_TOL,
};

/// Cap on `|difference set|^symbols` enumerations.
const ENUMERATION_GUARD: u128 = 10_000_000;

/// Redraw cap for degenerate interferer channels before giving up.
const MAX_REDRAWS: u64 = 64;

/// A recorded rank deficiency: the channel draw is reproducible from
/// `(master_seed, draw_index)` and `delta` is the offending error vector as
/// `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub master_seed: u64,
    pub draw_index: u64,
    pub delta: Vec<[f64; 2]>,
    pub rank: usize,
    pub lambda_min: f64,
}

/// Outcome of an exhaustive full-rank scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub m: usize,
    pub n: usize,
    pub layers: usize,
    pub constellation_order: usize,
    pub code: String,
    pub master_seed: u64,
    /// Channel draws examined.
    pub samples: u64,
    /// Nonzero error vectors enumerated per draw.
    pub error_vectors_per_draw: u64,
    /// Smallest Gram eigenvalue seen anywhere in the scan.
    pub min_lambda_min: f64,
    pub deficient_witnesses: Vec<Witness>,
    pub passed: bool,
    pub degenerate_redraws: u64,
    /// True when the scan stopped at a witness quota before finishing.
    pub early_stopped: bool,
}

/// Empirical diversity constant: the minimum Gram eigenvalue over all
/// sampled cancellers and the whole error alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub alpha: f64,
    /// Total (draw, error-vector) pairs inspected.
    pub over_samples: u64,
    /// Per-draw minima, in draw order.
    pub per_draw_min: Vec<f64>,
}

/// One point of the pairwise-error-probability upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PepPoint {
    pub rho: f64,
    pub bound: f64,
}

/// Smallest eigenvalue of `a† a`, i.e. the squared smallest singular value.
pub fn min_gram_eigenvalue(a: &CMat) -> Result<f64> {
    let sv = svd_singular_values(a)?;
    let sigma_min = sv.last().copied().unwrap_or(0.0);
    Ok(sigma_min * sigma_min)
}

struct ScanOutcome {
    min_lambda: f64,
    per_draw_min: Vec<f64>,
    witnesses: Vec<Witness>,
    redraws: u64,
    error_vectors_per_draw: u64,
    checked: u64,
    early_stopped: bool,
}

/// Shared scan behind [`full_rank_check`] and [`estimate_alpha`].
///
/// For each draw the interferer projector is rebuilt; the Toeplitz code uses
/// the strict full-column-rank projector (degenerate draws are redrawn and
/// counted), while the multilayer comparison code tolerates its structural
/// rank deficiency through the span-complement projector.
fn scan_criterion(
    spec: &CodeSpec,
    n: usize,
    constellation: &Constellation,
    draws: u64,
    master_seed: u64,
    stop_after_witnesses: Option<usize>,
) -> Result<ScanOutcome> {
    if n == 0 || draws == 0 {
        return Err(Error::InvalidArgument(
            "need at least one receive antenna and one draw".into(),
        ));
    }
    let diffs = constellation.difference_set();
    let symbols = spec.symbols_per_codeword();
    let space = (diffs.len() as u128)
        .checked_pow(symbols as u32)
        .unwrap_or(u128::MAX);
    if space > ENUMERATION_GUARD {
        return Err(Error::GuardExceeded {
            size: space,
            guard: ENUMERATION_GUARD,
        });
    }
    let deltas = diffs.deltas();
    let zero = diffs.zero_index();
    let full_rank = spec.antennas() * n;
    let identity_n = CMat::identity(n, n);

    let mut outcome = ScanOutcome {
        min_lambda: f64::INFINITY,
        per_draw_min: Vec::with_capacity(draws as usize),
        witnesses: Vec::new(),
        redraws: 0,
        error_vectors_per_draw: (space - 1) as u64,
        checked: 0,
        early_stopped: false,
    };
    let mut delta_vec = vec![C64::new(0.0, 0.0); symbols];
    let mut digits = vec![0usize; symbols];

    'draws: for draw in 0..draws {
        let mut rng = Stream::new(master_seed, draw).rng();
        let q = loop {
            let real = channel::draw_channel(spec.antennas(), n, &mut rng);
            let g_eq = spec.lift_channel(&real.g1, User::Two)?;
            match spec.kind() {
                CodeKind::Proposed => match projection_complement(g_eq.matrix()) {
                    Ok(q) => break q,
                    Err(Error::RankDeficient { .. }) => {
                        outcome.redraws += 1;
                        log::warn!(
                            "degenerate interferer draw (seed {master_seed}, draw {draw}); redrawing"
                        );
                        if outcome.redraws > MAX_REDRAWS {
                            return Err(Error::InvalidArgument(
                                "persistently degenerate interferer channel".into(),
                            ));
                        }
                    }
                    Err(e) => return Err(e),
                },
                CodeKind::Multilayer => break span_complement(g_eq.matrix())?,
            }
        };

        let mut draw_min = f64::INFINITY;
        digits.iter_mut().for_each(|d| *d = 0);
        loop {
            if !digits.iter().all(|&d| d == zero) {
                for (slot, &digit) in delta_vec.iter_mut().zip(digits.iter()) {
                    *slot = deltas[digit];
                }
                let delta_cw = spec.encode(&delta_vec, User::One)?;
                let lifted_delta = if n == 1 {
                    &q * delta_cw.matrix()
                } else {
                    &q * kron(&identity_n, delta_cw.matrix())
                };
                let sv = svd_singular_values(&lifted_delta)?;
                let sigma_max = sv.first().copied().unwrap_or(0.0);
                let rank = if sigma_max == 0.0 {
                    0
                } else {
                    sv.iter().filter(|&&s| s > DEFAULT_RANK_TOL * sigma_max).count()
                };
                let sigma_min = sv.last().copied().unwrap_or(0.0);
                let lambda = sigma_min * sigma_min;
                draw_min = draw_min.min(lambda);
                outcome.checked += 1;
                if rank < full_rank {
                    outcome.witnesses.push(Witness {
                        master_seed,
                        draw_index: draw,
                        delta: delta_vec.iter().map(|z| [z.re, z.im]).collect(),
                        rank,
                        lambda_min: lambda,
                    });
                    if let Some(limit) = stop_after_witnesses {
                        if outcome.witnesses.len() >= limit {
                            outcome.min_lambda = outcome.min_lambda.min(draw_min);
                            outcome.per_draw_min.push(draw_min);
                            outcome.early_stopped = true;
                            break 'draws;
                        }
                    }
                }
            }
            // next mixed-radix digit vector
            let mut pos = symbols;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < deltas.len() {
                    break;
                }
                digits[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX {
                break;
            }
        }
        outcome.min_lambda = outcome.min_lambda.min(draw_min);
        outcome.per_draw_min.push(draw_min);
    }
    if !outcome.min_lambda.is_finite() {
        outcome.min_lambda = 0.0;
    }
    Ok(outcome)
}

/// Exhaustively checks the full-rank criterion over `draws` sampled
/// interferer channels and every nonzero error vector of the constellation.
pub fn full_rank_check(
    spec: &CodeSpec,
    n: usize,
    constellation: &Constellation,
    draws: u64,
    master_seed: u64,
) -> Result<RankReport> {
    full_rank_check_with(spec, n, constellation, draws, master_seed, None)
}

/// [`full_rank_check`] with an optional witness quota: once that many
/// deficiencies are recorded the scan stops early, which keeps negative
/// controls cheap.
pub fn full_rank_check_with(
    spec: &CodeSpec,
    n: usize,
    constellation: &Constellation,
    draws: u64,
    master_seed: u64,
    stop_after_witnesses: Option<usize>,
) -> Result<RankReport> {
    let outcome = scan_criterion(
        spec,
        n,
        constellation,
        draws,
        master_seed,
        stop_after_witnesses,
    )?;
    Ok(RankReport {
        m: spec.antennas(),
        n,
        layers: spec.layers(),
        constellation_order: constellation.order(),
        code: spec.kind().token().to_string(),
        master_seed,
        samples: outcome.per_draw_min.len() as u64,
        error_vectors_per_draw: outcome.error_vectors_per_draw,
        min_lambda_min: outcome.min_lambda,
        passed: outcome.witnesses.is_empty(),
        deficient_witnesses: outcome.witnesses,
        degenerate_redraws: outcome.redraws,
        early_stopped: outcome.early_stopped,
    })
}

/// Estimates the diversity constant over sampled cancellers: the minimum
/// Gram eigenvalue of `Q (I_N ⊗ ΔS)` over all draws and all nonzero error
/// vectors.
pub fn estimate_alpha(
    spec: &CodeSpec,
    n: usize,
    constellation: &Constellation,
    draws: u64,
    master_seed: u64,
) -> Result<AlphaEstimate> {
    let outcome = scan_criterion(spec, n, constellation, draws, master_seed, None)?;
    Ok(AlphaEstimate {
        alpha: outcome.min_lambda,
        over_samples: outcome.checked,
        per_draw_min: outcome.per_draw_min,
    })
}

/// Closed-form pairwise-error-probability upper bound
/// `(1/2) * (2*mu / (2*mu + alpha*rho))^(M*N)`.
///
/// At `rho = 0` the bound is exactly one half; for large `rho` it decays
/// like `rho^-(M*N)`, matching the asymptote
/// `2^(MN-1) * mu^MN / alpha^MN * rho^-MN`.
pub fn pep_upper_bound(rho: f64, alpha: f64, mu: f64, m: usize, n: usize) -> Result<PepPoint> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be >= 0, got {rho}")));
    }
    if !(alpha > 0.0) || !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha and mu must be positive, got alpha={alpha}, mu={mu}"
        )));
    }
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "antenna counts must be positive".into(),
        ));
    }
    let mn = (m * n) as i32;
    let bound = 0.5 * (2.0 * mu / (2.0 * mu + alpha * rho)).powi(mn);
    Ok(PepPoint { rho, bound })
}

/// Least-squares diversity order of a measured BER curve: the negated slope
/// of `log10(ber)` against `snr_db / 10`.
///
/// Zero-BER points carry no slope information (insufficient trials) and are
/// excluded with a warning.
pub fn diversity_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points
        .windows(2)
        .any(|w| w[1].0 <= w[0].0)
    {
        return Err(Error::InvalidArgument(
            "SNR grid must be strictly increasing".into(),
        ));
    }
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(snr, ber)| {
            if ber > 0.0 {
                true
            } else {
                log::warn!("excluding zero-BER point at {snr} dB from slope fit");
                false
            }
        })
        .map(|&(snr, ber)| (snr / 10.0, ber.log10()))
        .collect();
    if usable.len() < 2 {
        return Err(Error::InvalidArgument(
            "slope fit needs at least two nonzero-BER points".into(),
        ));
    }
    let n = usable.len() as f64;
    let mean_x = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, y) in &usable {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    Ok(-(num / den))
}
