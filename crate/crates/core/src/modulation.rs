//! Gray-labeled square QAM constellations with unit average energy.
//!
//! Both users draw their symbols from constellations built here; the
//! difference set feeds the exhaustive enumeration in the codebook and
//! analysis layers.

use crate::error::{Error, Result};
use crate::numerics::C64;

/// A square QAM alphabet. `points[label]` is the symbol carrying the bit
/// pattern `label`; the labeling is Gray along both grid axes and the mean
/// of `|point|^2` is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits_per_symbol: usize,
    points: Vec<C64>,
}

/// Distinct values `{a - b : a, b in points}`, sorted deterministically.
/// Contains zero and is closed under negation.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceSet {
    deltas: Vec<C64>,
}

fn gray_encode(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Builds the square QAM constellation of the given order (4, 16 or 64).
pub fn make_qam(order: usize) -> Result<Constellation> {
    let bits_per_symbol = match order {
        4 => 2,
        16 => 4,
        64 => 6,
        _ => return Err(Error::UnsupportedOrder(order)),
    };
    let side = 1usize << (bits_per_symbol / 2);
    // amplitude levels 2i - (side - 1), scaled so the mean of |p|^2 is 1
    let mean_axis_energy = ((side * side - 1) as f64) / 3.0;
    let alpha = 1.0 / (2.0 * mean_axis_energy).sqrt();
    let half_bits = bits_per_symbol / 2;
    let mut points = vec![C64::new(0.0, 0.0); order];
    for gi in 0..side {
        for gq in 0..side {
            let label = (gray_encode(gi) << half_bits) | gray_encode(gq);
            let re = (2 * gi as i64 - (side as i64 - 1)) as f64 * alpha;
            let im = (2 * gq as i64 - (side as i64 - 1)) as f64 * alpha;
            points[label] = C64::new(re, im);
        }
    }
    Ok(Constellation {
        order,
        bits_per_symbol,
        points,
    })
}

impl Constellation {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Symbol carrying the bit pattern `label`.
    pub fn point(&self, label: usize) -> C64 {
        self.points[label]
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    /// Maps a bit string (one bit per entry, values 0/1) to symbols,
    /// consuming `bits_per_symbol` bits per symbol, first bit most
    /// significant.
    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<C64>> {
        if bits.len() % self.bits_per_symbol != 0 {
            return Err(Error::BitLength {
                len: bits.len(),
                bits_per_symbol: self.bits_per_symbol,
            });
        }
        let mut symbols = Vec::with_capacity(bits.len() / self.bits_per_symbol);
        for chunk in bits.chunks(self.bits_per_symbol) {
            let mut label = 0usize;
            for &b in chunk {
                if b > 1 {
                    return Err(Error::InvalidArgument(format!(
                        "bit value {b} is not 0 or 1"
                    )));
                }
                label = (label << 1) | b as usize;
            }
            symbols.push(self.points[label]);
        }
        Ok(symbols)
    }

    /// Nearest-point decision per symbol followed by inverse labeling.
    /// Distance ties go to the lowest constellation index.
    pub fn demap_hard(&self, symbols: &[C64]) -> Vec<u8> {
        let mut bits = Vec::with_capacity(symbols.len() * self.bits_per_symbol);
        for &z in symbols {
            let label = self.nearest_label(z);
            for k in (0..self.bits_per_symbol).rev() {
                bits.push(((label >> k) & 1) as u8);
            }
        }
        bits
    }

    fn nearest_label(&self, z: C64) -> usize {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (idx, &p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = idx;
            }
        }
        best
    }

    /// Distinct pairwise differences of the alphabet.
    ///
    /// Built directly on the amplitude grid: axis differences are
    /// `2k * alpha` for `k in -(side-1)..=(side-1)`, which reproduces
    /// `{a - b}` exactly and keeps the set closed under negation without any
    /// floating-point dedup.
    pub fn difference_set(&self) -> DifferenceSet {
        let side = 1usize << (self.bits_per_symbol / 2);
        let step = 2.0 * self.points.iter().map(|p| p.re).fold(0.0_f64, f64::max)
            / (side as f64 - 1.0).max(1.0);
        let span = side as i64 - 1;
        let mut deltas = Vec::with_capacity(((2 * span + 1) * (2 * span + 1)) as usize);
        for k in -span..=span {
            for l in -span..=span {
                deltas.push(C64::new(k as f64 * step, l as f64 * step));
            }
        }
        DifferenceSet { deltas }
    }
}

impl DifferenceSet {
    pub fn deltas(&self) -> &[C64] {
        &self.deltas
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    /// Index of the zero difference within `deltas`.
    pub fn zero_index(&self) -> usize {
        self.deltas
            .iter()
            .position(|d| d.re == 0.0 && d.im == 0.0)
            .expect("difference set contains zero by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn qpsk_points_and_energy() {
        let c = make_qam(4).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expected: HashSet<(i64, i64)> = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
            .iter()
            .map(|&(a, b)| (a, b))
            .collect();
        let got: HashSet<(i64, i64)> = c
            .points()
            .iter()
            .map(|p| ((p.re / s).round() as i64, (p.im / s).round() as i64))
            .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn unit_average_energy_all_orders() {
        for order in [4usize, 16, 64] {
            let c = make_qam(order).unwrap();
            let mean: f64 =
                c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert!((mean - 1.0).abs() <= 1e-12, "order {order}: mean {mean}");
            // points distinct
            let distinct: HashSet<(u64, u64)> = c
                .points()
                .iter()
                .map(|p| (p.re.to_bits(), p.im.to_bits()))
                .collect();
            assert_eq!(distinct.len(), order);
        }
    }

    #[test]
    fn gray_labeling_adjacent_points_differ_in_one_bit() {
        for order in [4usize, 16, 64] {
            let c = make_qam(order).unwrap();
            let side = 1usize << (c.bits_per_symbol() / 2);
            let alpha = c.points().iter().map(|p| p.re).fold(0.0_f64, f64::max)
                / (side as f64 - 1.0).max(1.0);
            let label_at = |gi: usize, gq: usize| -> usize {
                let re = (2 * gi as i64 - (side as i64 - 1)) as f64 * alpha;
                let im = (2 * gq as i64 - (side as i64 - 1)) as f64 * alpha;
                c.points()
                    .iter()
                    .position(|p| (p.re - re).abs() < 1e-12 && (p.im - im).abs() < 1e-12)
                    .unwrap()
            };
            let mut pairs = 0usize;
            let mut bit_diffs = 0usize;
            for gi in 0..side {
                for gq in 0..side {
                    if gi + 1 < side {
                        pairs += 1;
                        bit_diffs +=
                            (label_at(gi, gq) ^ label_at(gi + 1, gq)).count_ones() as usize;
                    }
                    if gq + 1 < side {
                        pairs += 1;
                        bit_diffs +=
                            (label_at(gi, gq) ^ label_at(gi, gq + 1)).count_ones() as usize;
                    }
                }
            }
            assert_eq!(bit_diffs, pairs, "order {order}");
        }
    }

    #[test]
    fn map_demap_round_trip_all_labels() {
        for order in [4usize, 16, 64] {
            let c = make_qam(order).unwrap();
            for label in 0..order {
                let bits: Vec<u8> = (0..c.bits_per_symbol())
                    .rev()
                    .map(|k| ((label >> k) & 1) as u8)
                    .collect();
                let syms = c.map_bits(&bits).unwrap();
                assert_eq!(c.demap_hard(&syms), bits);
            }
        }
    }

    #[test]
    fn map_demap_round_trip_random_bits() {
        use rand::Rng;
        use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let c = make_qam(4).unwrap();
        let bits: Vec<u8> = (0..128).map(|_| rng.gen_range(0..=1u8)).collect();
        let syms = c.map_bits(&bits).unwrap();
        assert_eq!(c.demap_hard(&syms), bits);
    }

    #[test]
    fn demap_is_robust_to_small_perturbations() {
        let c = make_qam(16).unwrap();
        for label in 0..16 {
            let p = c.point(label) + C64::new(1e-6, -1e-6);
            let bits = c.demap_hard(&[p]);
            let mut expect = Vec::new();
            for k in (0..4).rev() {
                expect.push(((label >> k) & 1) as u8);
            }
            assert_eq!(bits, expect);
        }
    }

    #[test]
    fn demap_ties_resolve_to_lowest_index() {
        let c = make_qam(4).unwrap();
        // midpoint between the two points sharing the upper half-plane:
        // equidistant in exact floating point, so the first index wins
        let a = c.point(0);
        let candidates: Vec<usize> = (1..4)
            .filter(|&l| (c.point(l).im - a.im).abs() < 1e-15)
            .collect();
        let b_idx = candidates[0];
        let mid = C64::new((a.re + c.point(b_idx).re) / 2.0, a.im);
        let expected_label = 0.min(b_idx);
        for _ in 0..3 {
            let bits = c.demap_hard(&[mid]);
            let mut expect = Vec::new();
            for k in (0..2).rev() {
                expect.push(((expected_label >> k) & 1) as u8);
            }
            assert_eq!(bits, expect);
        }
    }

    #[test]
    fn map_bits_edge_cases() {
        let c = make_qam(4).unwrap();
        assert!(c.map_bits(&[]).unwrap().is_empty());
        assert!(matches!(
            c.map_bits(&[1]),
            Err(Error::BitLength { len: 1, .. })
        ));
        assert!(matches!(
            c.map_bits(&[1, 2]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(make_qam(8), Err(Error::UnsupportedOrder(8))));
    }

    /// Brute-force oracle: enumerate all ordered pairs and dedup on a fine
    /// grid. Differences of mathematically equal value can differ by an ulp
    /// depending on which pair produced them, hence the quantization.
    fn brute_force_differences(c: &Constellation) -> HashSet<(i64, i64)> {
        let mut set = HashSet::new();
        for &a in c.points() {
            for &b in c.points() {
                let d = a - b;
                set.insert((
                    (d.re / 1e-12).round() as i64,
                    (d.im / 1e-12).round() as i64,
                ));
            }
        }
        set
    }

    #[test]
    fn difference_set_matches_pair_enumeration() {
        for order in [4usize, 16] {
            let c = make_qam(order).unwrap();
            let ds = c.difference_set();
            let oracle = brute_force_differences(&c);
            assert_eq!(ds.len(), oracle.len(), "order {order}");
            for d in ds.deltas() {
                let key = (
                    (d.re / 1e-12).round() as i64,
                    (d.im / 1e-12).round() as i64,
                );
                assert!(oracle.contains(&key));
            }
        }
    }

    #[test]
    fn sixteen_qam_difference_counts() {
        let c = make_qam(16).unwrap();
        // ordered nonzero pairs
        let mut nonzero_pairs = 0usize;
        for (i, &a) in c.points().iter().enumerate() {
            for (j, &b) in c.points().iter().enumerate() {
                if i != j {
                    assert!((a - b).norm() > 1e-12);
                    nonzero_pairs += 1;
                }
            }
        }
        assert_eq!(nonzero_pairs, 240);
        // distinct values including zero: 7 axis differences per dimension
        let ds = c.difference_set();
        assert_eq!(ds.len(), 49);
        assert_eq!(brute_force_differences(&c).len(), 49);
    }

    #[test]
    fn difference_set_contains_zero_and_negations() {
        for order in [4usize, 16, 64] {
            let c = make_qam(order).unwrap();
            let ds = c.difference_set();
            let zero = ds.deltas()[ds.zero_index()];
            assert_eq!(zero, C64::new(0.0, 0.0));
            for &d in ds.deltas() {
                assert!(
                    ds.deltas().iter().any(|&e| e == -d),
                    "missing negation of {d} at order {order}"
                );
            }
        }
    }
}
