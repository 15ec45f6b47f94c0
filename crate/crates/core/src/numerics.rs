//! Complex dense-matrix primitives shared by every other module.
//!
//! A thin, contract-checked layer over `nalgebra`: construction validates
//! finiteness, rank decisions are relative to the largest singular value, and
//! the interference projector is formed from an orthonormal basis of the
//! column space instead of the normal-equations formula, which keeps it
//! well-conditioned close to rank deficiency.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;
/// Dense complex matrix in column-major storage.
pub type CMat = DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = DVector<C64>;

/// Default relative singular-value threshold below which a direction is
/// treated as numerically null.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Iteration cap handed to the SVD; small dense matrices converge in a
/// handful of sweeps, so hitting this signals genuine non-convergence.
const SVD_MAX_ITER: usize = 4096;

/// Builds a matrix from row-major entries, rejecting NaN/Inf values.
pub fn matrix_from_rows(rows: usize, cols: usize, entries: &[C64]) -> Result<CMat> {
    if entries.len() != rows * cols {
        return Err(Error::ShapeMismatch(format!(
            "{} entries for a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    let m = CMat::from_fn(rows, cols, |i, j| entries[i * cols + j]);
    require_finite(&m)?;
    Ok(m)
}

/// Checks every entry for NaN/Inf.
pub fn require_finite(m: &CMat) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Kronecker product `a ⊗ b`: block (i, j) of the result equals `a[i,j] * b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Conjugate transpose.
pub fn conj_transpose(a: &CMat) -> CMat {
    a.adjoint()
}

/// Frobenius norm.
pub fn frob_norm(a: &CMat) -> f64 {
    a.norm()
}

/// All `min(rows, cols)` singular values in descending order.
pub fn svd_singular_values(a: &CMat) -> Result<Vec<f64>> {
    let svd = a
        .clone()
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::SvdNonConvergence)?;
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_unstable_by(|x, y| y.partial_cmp(x).expect("singular values are finite"));
    Ok(sv)
}

/// Number of singular values above `tol * sigma_max`; zero for a zero matrix.
pub fn numeric_rank(a: &CMat, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rank tolerance must be positive, got {tol}"
        )));
    }
    let sv = svd_singular_values(a)?;
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol * sigma_max).count())
}

/// Orthogonal projector onto the complement of the column space of `g`,
/// requiring `g` to have full column rank.
///
/// Computed as `I - U U†` with `U` an orthonormal basis of the column space,
/// which agrees with `I - g (g†g)^{-1} g†` on well-conditioned inputs. A
/// numerically rank-deficient `g` is rejected; simulation treats such a
/// channel draw as degenerate and redraws it.
pub fn projection_complement(g: &CMat) -> Result<CMat> {
    if g.nrows() < g.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "projector needs rows >= cols, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    let (q, rank) = complement_from_basis(g, DEFAULT_RANK_TOL)?;
    if rank < g.ncols() {
        let sv = svd_singular_values(g)?;
        let ratio = match (sv.first(), sv.last()) {
            (Some(&max), Some(&min)) if max > 0.0 => min / max,
            _ => 0.0,
        };
        return Err(Error::RankDeficient { ratio });
    }
    Ok(q)
}

/// Orthogonal projector onto the complement of the column *span* of `g`.
///
/// Unlike [`projection_complement`] this tolerates rank deficiency: only the
/// numerically significant directions are cancelled. It is the right
/// canceller for codes whose lifted interference matrix is structurally
/// rank-deficient, such as the multilayer comparison code.
pub fn span_complement(g: &CMat) -> Result<CMat> {
    let (q, _) = complement_from_basis(g, DEFAULT_RANK_TOL)?;
    Ok(q)
}

/// Shared basis route: `I - U_r U_r†` over the singular directions with
/// `sigma > tol * sigma_max`. Returns the projector and the numeric rank.
fn complement_from_basis(g: &CMat, tol: f64) -> Result<(CMat, usize)> {
    let n = g.nrows();
    let svd = g
        .clone()
        .try_svd(true, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::SvdNonConvergence)?;
    let u = svd.u.expect("u requested");
    let sv = &svd.singular_values;
    let sigma_max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let mut q = CMat::identity(n, n);
    if sigma_max == 0.0 {
        return Ok((q, 0));
    }
    let mut rank = 0;
    for k in 0..sv.len() {
        if sv[k] > tol * sigma_max {
            rank += 1;
            let col = u.column(k);
            // q -= col * col†, accumulated column by column
            for j in 0..n {
                let cj = col[j].conj();
                for i in 0..n {
                    q[(i, j)] -= col[i] * cj;
                }
            }
        }
    }
    Ok((q, rank))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
        CMat::from_fn(rows, cols, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    /// Gaussian-elimination rank, independent of the SVD route.
    fn elimination_rank(a: &CMat, tol: f64) -> usize {
        let mut m = a.clone();
        let (rows, cols) = (m.nrows(), m.ncols());
        let scale = m.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        if scale == 0.0 {
            return 0;
        }
        let mut rank = 0;
        let mut pivot_row = 0;
        for col in 0..cols {
            // partial pivoting
            let mut best = pivot_row;
            for r in pivot_row..rows {
                if m[(r, col)].norm() > m[(best, col)].norm() {
                    best = r;
                }
            }
            if pivot_row >= rows || m[(best, col)].norm() <= tol * scale {
                continue;
            }
            m.swap_rows(pivot_row, best);
            let pivot = m[(pivot_row, col)];
            for r in (pivot_row + 1)..rows {
                let factor = m[(r, col)] / pivot;
                for cc in col..cols {
                    let sub = factor * m[(pivot_row, cc)];
                    m[(r, cc)] -= sub;
                }
            }
            rank += 1;
            pivot_row += 1;
        }
        rank
    }

    #[test]
    fn kron_identity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_matrix(&mut rng, 3, 2);
        let i1 = CMat::identity(1, 1);
        assert_eq!(kron(&i1, &b), b);

        let i2 = CMat::identity(2, 2);
        let one = CMat::from_element(1, 1, c(1.0, 0.0));
        assert_eq!(kron(&i2, &one), i2);
    }

    #[test]
    fn kron_matches_block_diagonal_placement() {
        // I_N ⊗ B laid out block-diagonally by direct placement, N = 2.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = random_matrix(&mut rng, 5, 2); // T x M shape for M=2, L=2
        let i2 = CMat::identity(2, 2);
        let k = kron(&i2, &b);
        assert_eq!(k.nrows(), 10);
        assert_eq!(k.ncols(), 4);
        let mut direct = CMat::zeros(10, 4);
        for blk in 0..2 {
            for i in 0..5 {
                for j in 0..2 {
                    direct[(blk * 5 + i, blk * 2 + j)] = b[(i, j)];
                }
            }
        }
        assert_eq!(k, direct);
    }

    #[test]
    fn kron_is_bilinear_in_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = random_matrix(&mut rng, 3, 2);
            let b = random_matrix(&mut rng, 2, 4);
            let alpha = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let lhs = kron(&(&a * alpha), &b);
            let rhs = kron(&a, &b) * alpha;
            let denom = frob_norm(&rhs).max(1.0);
            assert!(frob_norm(&(lhs - rhs)) <= 1e-12 * denom);
        }
    }

    #[test]
    fn conj_transpose_basics() {
        let m = matrix_from_rows(1, 1, &[c(0.0, 1.0)]).unwrap();
        assert_eq!(conj_transpose(&m)[(0, 0)], c(0.0, -1.0));

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 3, 3);
        let b = random_matrix(&mut rng, 3, 3);
        let lhs = conj_transpose(&(&a * &b));
        let rhs = conj_transpose(&b) * conj_transpose(&a);
        assert!(frob_norm(&(lhs - rhs)) <= 1e-12);

        let d = CMat::from_diagonal(&CVec::from_vec(vec![c(2.0, 0.0), c(-3.0, 0.0)]));
        assert_eq!(conj_transpose(&d), d);

        let involutive = conj_transpose(&conj_transpose(&a));
        assert_eq!(involutive, a);
    }

    #[test]
    fn singular_values_diagonal_and_zero() {
        let d = CMat::from_diagonal(&CVec::from_vec(vec![c(3.0, 0.0), c(1.0, 0.0)]));
        let sv = svd_singular_values(&d).unwrap();
        assert!((sv[0] - 3.0).abs() < 1e-12);
        assert!((sv[1] - 1.0).abs() < 1e-12);

        let z = CMat::zeros(3, 2);
        let sv = svd_singular_values(&z).unwrap();
        assert!(sv.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn singular_values_satisfy_frobenius_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 4, 2);
        let sv = svd_singular_values(&a).unwrap();
        let sum_sq: f64 = sv.iter().map(|s| s * s).sum();
        let frob_sq = frob_norm(&a).powi(2);
        assert!((sum_sq - frob_sq).abs() <= 1e-10 * frob_sq);
        // descending order
        assert!(sv.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn numeric_rank_basics() {
        let i3 = CMat::identity(3, 3);
        assert_eq!(numeric_rank(&i3, 1e-9).unwrap(), 3);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = random_matrix(&mut rng, 4, 1);
        let v = random_matrix(&mut rng, 1, 4);
        let outer = &u * &v;
        assert_eq!(numeric_rank(&outer, 1e-9).unwrap(), 1);

        assert!(matches!(
            numeric_rank(&i3, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert_eq!(numeric_rank(&CMat::zeros(2, 2), 1e-9).unwrap(), 0);
    }

    #[test]
    fn numeric_rank_agrees_with_elimination_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..500 {
            let rows = rng.gen_range(1..=12);
            let cols = rng.gen_range(1..=12);
            // integer entries, occasionally forced low-rank by row duplication
            let mut m = CMat::from_fn(rows, cols, |_, _| {
                c(rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64)
            });
            if rows > 1 && trial % 3 == 0 {
                let src = rng.gen_range(0..rows);
                let dst = rng.gen_range(0..rows);
                let src_row: Vec<C64> = m.row(src).iter().copied().collect();
                for (j, v) in src_row.into_iter().enumerate() {
                    m[(dst, j)] = v;
                }
            }
            let svd_rank = numeric_rank(&m, 1e-9).unwrap();
            let elim_rank = elimination_rank(&m, 1e-8);
            assert_eq!(svd_rank, elim_rank, "disagreement on trial {trial}");
        }
    }

    #[test]
    fn projector_kills_basis_column() {
        let g = matrix_from_rows(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let q = projection_complement(&g).unwrap();
        let expected = matrix_from_rows(
            2,
            2,
            &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        assert!(frob_norm(&(q - expected)) <= 1e-12);
    }

    #[test]
    fn projector_properties_over_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for &(rows, cols) in &[(7usize, 4usize), (5, 2), (9, 3)] {
            for _ in 0..1000 {
                let g = random_matrix(&mut rng, rows, cols);
                let q = projection_complement(&g).unwrap();
                let herm = frob_norm(&(&q - conj_transpose(&q)));
                assert!(herm <= 1e-9 * frob_norm(&q).max(1.0));
                let idem = frob_norm(&(&q * &q - &q));
                assert!(idem <= 1e-9 * frob_norm(&q).max(1.0));
                let nulled = frob_norm(&(&q * &g));
                assert!(nulled <= 1e-10 * frob_norm(&g));
            }
        }
    }

    #[test]
    fn projector_trace_equals_codimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_matrix(&mut rng, 7, 4);
        let q = projection_complement(&g).unwrap();
        let trace: C64 = (0..7).map(|i| q[(i, i)]).sum();
        assert!((trace.re - 3.0).abs() <= 1e-9);
        assert!(trace.im.abs() <= 1e-12);
        // eigenvalue-count oracle: a Hermitian projector's eigenvalues equal
        // its singular values, so counting entries near 1 gives the rank
        let sv = svd_singular_values(&q).unwrap();
        let near_one = sv.iter().filter(|&&s| (s - 1.0).abs() < 1e-9).count();
        let near_zero = sv.iter().filter(|&&s| s.abs() < 1e-9).count();
        assert_eq!(near_one, 3);
        assert_eq!(near_zero, 4);
    }

    #[test]
    fn projector_agrees_with_normal_equations_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let g = random_matrix(&mut rng, 6, 3);
            let q = projection_complement(&g).unwrap();
            let gram = conj_transpose(&g) * &g;
            let inv = gram.try_inverse().expect("well-conditioned Gram");
            let literal = CMat::identity(6, 6) - &g * inv * conj_transpose(&g);
            assert!(frob_norm(&(q - literal)) <= 1e-8);
        }
    }

    #[test]
    fn projector_rejects_rank_deficiency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let col = random_matrix(&mut rng, 5, 1);
        let mut g = CMat::zeros(5, 2);
        g.set_column(0, &col.column(0));
        g.set_column(1, &(col.column(0) * c(2.0, 1.0)));
        assert!(matches!(
            projection_complement(&g),
            Err(Error::RankDeficient { .. })
        ));

        let wide = random_matrix(&mut rng, 2, 4);
        assert!(matches!(
            projection_complement(&wide),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn span_complement_tolerates_deficiency() {
        let q = span_complement(&CMat::zeros(4, 2)).unwrap();
        assert!(frob_norm(&(&q - CMat::identity(4, 4))) == 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let col = random_matrix(&mut rng, 5, 1);
        let mut g = CMat::zeros(5, 3);
        g.set_column(0, &col.column(0));
        g.set_column(1, &(col.column(0) * c(-1.0, 3.0)));
        g.set_column(2, &(col.column(0) * c(0.5, 0.0)));
        let q = span_complement(&g).unwrap();
        // span is one-dimensional: projector has rank 4 and still nulls g
        let trace: C64 = (0..5).map(|i| q[(i, i)]).sum();
        assert!((trace.re - 4.0).abs() <= 1e-9);
        assert!(frob_norm(&(&q * &g)) <= 1e-10 * frob_norm(&g));
    }

    #[test]
    fn matrix_from_rows_validates() {
        assert!(matches!(
            matrix_from_rows(2, 2, &[c(1.0, 0.0)]),
            Err(Error::ShapeMismatch(_))
        ));
        let entries = [c(1.0, 0.0), c(f64::NAN, 0.0)];
        assert!(matches!(
            matrix_from_rows(1, 2, &entries),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        // row-major order lands in the right slots
        let m = matrix_from_rows(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)])
            .unwrap();
        assert_eq!(m[(0, 1)], c(2.0, 0.0));
        assert_eq!(m[(1, 0)], c(3.0, 0.0));
    }
}
