//! Code construction for both users: algebraic rotations, the Toeplitz
//! space-time block codewords, a non-Toeplitz multilayer comparison code,
//! and the lifted (equivalent) channel matrices.
//!
//! A codeword spans `T = L + 2M - 1` symbol periods over `M` transmit
//! antennas. User 1 occupies the leading band and leaves the last `M` rows
//! zero; user 2 is delayed by `M` rows and leaves the first `M` rows zero.
//! The trailing/leading zero blocks are what make the two users' lifted
//! interference separable at the receiver.

use std::fmt;

use crate::error::{Error, Result};
use crate::modulation::DifferenceSet;
use crate::numerics::{frob_norm, require_finite, C64, CMat, CVec};

/// Enumeration guard for product-distance searches.
const PRODUCT_DISTANCE_GUARD: u128 = 10_000_000;

/// Which code family a spec describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeKind {
    /// Toeplitz construction: every column repeats the same rotated symbol
    /// vector, shifted down one row per antenna.
    Proposed,
    /// Multilayer comparison code: layer `l` carries its own rotated
    /// sub-vector spread along the `l`-th diagonal, so entries differ across
    /// columns. Used as a negative control for the diversity criterion.
    Multilayer,
}

impl CodeKind {
    pub fn token(self) -> &'static str {
        match self {
            CodeKind::Proposed => "proposed",
            CodeKind::Multilayer => "multilayer",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(CodeKind::Proposed),
            "multilayer" => Ok(CodeKind::Multilayer),
            _ => Err(Error::InvalidConfig(format!("unknown code kind `{s}`"))),
        }
    }
}

impl fmt::Display for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Transmitting user; user 2's codeword is delayed by `M` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum User {
    One,
    Two,
}

/// Unitary rotation applied to each symbol vector before placement.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix {
    theta: CMat,
}

impl RotationMatrix {
    /// Wraps an arbitrary unitary matrix (checked to 1e-10 in Frobenius
    /// norm).
    pub fn new(theta: CMat) -> Result<Self> {
        if theta.nrows() != theta.ncols() || theta.nrows() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "rotation must be square and non-empty, got {}x{}",
                theta.nrows(),
                theta.ncols()
            )));
        }
        require_finite(&theta)?;
        let dim = theta.nrows();
        let gram = theta.adjoint() * &theta;
        let defect = frob_norm(&(gram - CMat::identity(dim, dim)));
        if defect > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "rotation is not unitary (defect {defect:.3e})"
            )));
        }
        Ok(Self { theta })
    }

    /// Identity rotation, mostly useful for tests and negative controls.
    pub fn identity(dim: usize) -> Self {
        Self {
            theta: CMat::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.theta
    }

    /// Applies the rotation to a symbol vector.
    pub fn rotate(&self, symbols: &[C64]) -> Result<CVec> {
        if symbols.len() != self.dim() {
            return Err(Error::SymbolLength {
                got: symbols.len(),
                expected: self.dim(),
            });
        }
        Ok(&self.theta * CVec::from_column_slice(symbols))
    }
}

/// Vandermonde algebraic rotation of size `dim`.
///
/// Row `k` evaluates the symbol polynomial at `theta_k = exp(i*pi*(4k+1) /
/// (2*dim))`, the roots of `x^dim = i`, scaled by `dim^-1/2`. The roots
/// generate a degree-`dim` extension of the Gaussian rationals when `dim`
/// is a power of two, which makes every coordinate of a rotated nonzero
/// QAM difference vector nonzero; `verify_product_distance` checks this
/// exhaustively rather than taking it on faith.
pub fn make_rotation(dim: usize) -> RotationMatrix {
    assert!(dim >= 1, "rotation dimension must be at least 1");
    let scale = 1.0 / (dim as f64).sqrt();
    let theta = CMat::from_fn(dim, dim, |k, p| {
        let angle = std::f64::consts::PI * (4 * k + 1) as f64 / (2 * dim) as f64;
        C64::from_polar(scale, angle * p as f64)
    });
    RotationMatrix { theta }
}

/// Minimum of `prod_l |(theta * ds)_l|` over every nonzero difference
/// vector `ds` in `diffs^len`. Zero means the rotated code loses diversity
/// on some error event.
pub fn verify_product_distance(
    rot: &RotationMatrix,
    diffs: &DifferenceSet,
    len: usize,
) -> Result<f64> {
    if len != rot.dim() {
        return Err(Error::ShapeMismatch(format!(
            "vector length {len} does not match rotation dimension {}",
            rot.dim()
        )));
    }
    let size = (diffs.len() as u128)
        .checked_pow(len as u32)
        .unwrap_or(u128::MAX);
    if size > PRODUCT_DISTANCE_GUARD {
        return Err(Error::GuardExceeded {
            size,
            guard: PRODUCT_DISTANCE_GUARD,
        });
    }
    let deltas = diffs.deltas();
    let zero = diffs.zero_index();
    let theta = rot.matrix();
    // depth-first over digit vectors, maintaining partial rotated sums
    let mut digits = vec![0usize; len];
    let mut partial = vec![vec![C64::new(0.0, 0.0); len]; len + 1];
    let mut min_pd = f64::INFINITY;
    fn descend(
        depth: usize,
        len: usize,
        deltas: &[C64],
        zero: usize,
        theta: &CMat,
        digits: &mut [usize],
        partial: &mut [Vec<C64>],
        min_pd: &mut f64,
    ) {
        if depth == len {
            if digits.iter().all(|&d| d == zero) {
                return;
            }
            let pd: f64 = partial[len].iter().map(|z| z.norm()).product();
            if pd < *min_pd {
                *min_pd = pd;
            }
            return;
        }
        for d in 0..deltas.len() {
            digits[depth] = d;
            let delta = deltas[d];
            for row in 0..len {
                let base = partial[depth][row];
                partial[depth + 1][row] = base + theta[(row, depth)] * delta;
            }
            descend(depth + 1, len, deltas, zero, theta, digits, partial, min_pd);
        }
    }
    descend(
        0, len, deltas, zero, theta, &mut digits, &mut partial, &mut min_pd,
    );
    Ok(if min_pd.is_finite() { min_pd } else { 0.0 })
}

/// Parameters of one space-time block code family for the two-user channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    m: usize,
    layers: usize,
    kind: CodeKind,
    rotation: RotationMatrix,
    mu: f64,
}

impl CodeSpec {
    /// Builds a spec with the standard algebraic rotation (dimension `L`
    /// for the Toeplitz code, `M` for the multilayer code).
    pub fn new(m: usize, layers: usize, kind: CodeKind) -> Result<Self> {
        let dim = match kind {
            CodeKind::Proposed => layers,
            CodeKind::Multilayer => m,
        };
        Self::with_rotation(m, layers, kind, make_rotation(dim))
    }

    /// Builds a spec with a caller-supplied rotation.
    pub fn with_rotation(
        m: usize,
        layers: usize,
        kind: CodeKind,
        rotation: RotationMatrix,
    ) -> Result<Self> {
        if m == 0 || layers == 0 {
            return Err(Error::InvalidArgument(format!(
                "antennas and layers must be positive, got M={m}, L={layers}"
            )));
        }
        let expected_dim = match kind {
            CodeKind::Proposed => layers,
            CodeKind::Multilayer => m,
        };
        if rotation.dim() != expected_dim {
            return Err(Error::ShapeMismatch(format!(
                "rotation dimension {} does not match {expected_dim}",
                rotation.dim()
            )));
        }
        let t = layers + 2 * m - 1;
        // expected codeword energy is M*L for both families, spread over T
        // symbol periods
        let mu = (m * layers) as f64 / t as f64;
        Ok(Self {
            m,
            layers,
            kind,
            rotation,
            mu,
        })
    }

    pub fn antennas(&self) -> usize {
        self.m
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    pub fn rotation(&self) -> &RotationMatrix {
        &self.rotation
    }

    /// Codeword length in symbol periods: `L + 2M - 1`.
    pub fn block_len(&self) -> usize {
        self.layers + 2 * self.m - 1
    }

    /// Independent symbols carried by one codeword.
    pub fn symbols_per_codeword(&self) -> usize {
        match self.kind {
            CodeKind::Proposed => self.layers,
            CodeKind::Multilayer => self.layers * self.m,
        }
    }

    /// Symbols per channel use.
    pub fn rate(&self) -> f64 {
        self.symbols_per_codeword() as f64 / self.block_len() as f64
    }

    /// Energy normalization factor: transmitting `codeword / sqrt(mu)`
    /// makes the average energy radiated per symbol period equal to one.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    fn row_offset(&self, user: User) -> usize {
        match user {
            User::One => 0,
            User::Two => self.m,
        }
    }

    /// Encodes a symbol vector into the `T x M` codeword for `user`.
    ///
    /// The map is linear, so encoding a difference of two symbol vectors
    /// yields the difference of their codewords.
    pub fn encode(&self, symbols: &[C64], user: User) -> Result<Codeword> {
        if symbols.len() != self.symbols_per_codeword() {
            return Err(Error::SymbolLength {
                got: symbols.len(),
                expected: self.symbols_per_codeword(),
            });
        }
        let t = self.block_len();
        let off = self.row_offset(user);
        let mut w = CMat::zeros(t, self.m);
        match self.kind {
            CodeKind::Proposed => {
                let rotated = self.rotation.rotate(symbols)?;
                for col in 0..self.m {
                    for p in 0..self.layers {
                        w[(off + p + col, col)] = rotated[p];
                    }
                }
            }
            CodeKind::Multilayer => {
                for layer in 0..self.layers {
                    let chunk = &symbols[layer * self.m..(layer + 1) * self.m];
                    let rotated = self.rotation.rotate(chunk)?;
                    for col in 0..self.m {
                        w[(off + layer + col, col)] = rotated[col];
                    }
                }
            }
        }
        Ok(Codeword { matrix: w, user })
    }

    /// Lifts a physical `M x N` channel into the `TN x S` equivalent matrix
    /// satisfying `vec_by_antenna(codeword(s) * phys) = lifted * s` for every
    /// symbol vector `s`.
    ///
    /// For the Toeplitz code the per-antenna factor has the same banded
    /// structure as the codeword with channel coefficients in place of
    /// symbols, multiplied by the rotation; the per-antenna blocks are
    /// stacked vertically. The multilayer code is lifted column-by-column
    /// through the encoder, which works for any linear code map.
    pub fn lift_channel(&self, phys: &CMat, user: User) -> Result<EquivalentChannel> {
        if phys.nrows() != self.m {
            return Err(Error::ShapeMismatch(format!(
                "channel has {} rows, expected M={}",
                phys.nrows(),
                self.m
            )));
        }
        let n = phys.ncols();
        if n == 0 {
            return Err(Error::ShapeMismatch("channel has zero columns".into()));
        }
        let t = self.block_len();
        let matrix = match self.kind {
            CodeKind::Proposed => {
                let off = self.row_offset(user);
                let mut lifted = CMat::zeros(t * n, self.layers);
                for j in 0..n {
                    // banded coefficient matrix: column p carries the j-th
                    // antenna's channel taps starting at row off + p
                    let mut band = CMat::zeros(t, self.layers);
                    for p in 0..self.layers {
                        for i in 0..self.m {
                            band[(off + p + i, p)] = phys[(i, j)];
                        }
                    }
                    let block = band * self.rotation.matrix();
                    lifted.view_mut((j * t, 0), (t, self.layers)).copy_from(&block);
                }
                lifted
            }
            CodeKind::Multilayer => {
                let s = self.symbols_per_codeword();
                let mut lifted = CMat::zeros(t * n, s);
                let mut basis = vec![C64::new(0.0, 0.0); s];
                for k in 0..s {
                    basis[k] = C64::new(1.0, 0.0);
                    let cw = self.encode(&basis, user)?;
                    basis[k] = C64::new(0.0, 0.0);
                    let received = cw.matrix() * phys;
                    lifted.set_column(k, &vec_by_antenna(&received));
                }
                lifted
            }
        };
        Ok(EquivalentChannel { matrix, user })
    }

    /// Plain-text config section describing this spec plus the constellation
    /// it runs with.
    pub fn config_section(&self, constellation_order: usize) -> String {
        format!(
            "M = {}\nL = {}\nconstellation_order = {}\ncode = {}\n",
            self.m, self.layers, constellation_order, self.kind
        )
    }

    /// Parses a config section written by [`CodeSpec::config_section`].
    /// Returns the spec and the constellation order.
    pub fn from_config_section(text: &str) -> Result<(Self, usize)> {
        let mut m = None;
        let mut layers = None;
        let mut order = None;
        let mut kind = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let parse_usize = |what: &str, v: &str| -> Result<usize> {
                v.parse().map_err(|_| {
                    Error::InvalidConfig(format!("{what} must be an integer, got `{v}`"))
                })
            };
            match key {
                "M" => m = Some(parse_usize("M", value)?),
                "L" => layers = Some(parse_usize("L", value)?),
                "constellation_order" => {
                    order = Some(parse_usize("constellation_order", value)?)
                }
                "code" => kind = Some(CodeKind::parse(value)?),
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown key `{key}` in code section"
                    )))
                }
            }
        }
        let m = m.ok_or_else(|| Error::InvalidConfig("missing key M".into()))?;
        let layers = layers.ok_or_else(|| Error::InvalidConfig("missing key L".into()))?;
        let order =
            order.ok_or_else(|| Error::InvalidConfig("missing key constellation_order".into()))?;
        let kind = kind.ok_or_else(|| Error::InvalidConfig("missing key code".into()))?;
        Ok((Self::new(m, layers, kind)?, order))
    }
}

/// One transmitted space-time block codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    matrix: CMat,
    user: User,
}

impl Codeword {
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn user(&self) -> User {
        self.user
    }
}

/// Lifted channel: the `TN x S` matrix relating a user's symbol vector to
/// that user's contribution to the vectorized receive block.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentChannel {
    matrix: CMat,
    user: User,
}

impl EquivalentChannel {
    /// Wraps a raw lifted matrix. [`CodeSpec::lift_channel`] is the primary
    /// constructor; this exists for synthetic systems in tests and negative
    /// controls.
    pub fn from_matrix(matrix: CMat, user: User) -> Self {
        Self { matrix, user }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn user(&self) -> User {
        self.user
    }
}

/// Stacks a `T x N` receive-block matrix antenna by antenna: antenna 0's
/// `T` samples first, then antenna 1's, and so on.
pub fn vec_by_antenna(block: &CMat) -> CVec {
    CVec::from_column_slice(block.as_slice())
}
