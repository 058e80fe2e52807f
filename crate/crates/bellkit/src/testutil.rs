//! Random instance generators shared by test suites. Not part of the public
//! API surface.

use num_rational::BigRational;
use rand::Rng;

use crate::scalar::Scalar;
use crate::types::{MarginalFamily, PairwiseTable, SignedJoint};

/// A random valid three-variable family with every pair covered, exact over
/// denominator `den`: single marginals are consistent by construction and the
/// pair correlations are drawn inside their cell-nonnegativity bounds.
pub fn random_rational_family(den: i64, rng: &mut impl Rng) -> MarginalFamily<BigRational> {
    let q = |n: i64| BigRational::from_ratio(n, den);
    let m: Vec<i64> = (0..3).map(|_| rng.gen_range(-den..=den)).collect();

    let mut tables = Vec::new();
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let (mi, mj) = (m[i], m[j]);
        // Numerators of the correlation bounds over the same denominator:
        // c >= -1 + |m_i + m_j|, c <= 1 - |m_i - m_j|.
        let lo = -den + (mi + mj).abs();
        let hi = den - (mi - mj).abs();
        let c = rng.gen_range(lo..=hi);
        let cell = |alpha: i64, beta: i64| {
            (q(den) + q(alpha * mi) + q(beta * mj) + q(alpha * beta * c))
                / BigRational::from_ratio(4, 1)
        };
        tables.push(PairwiseTable::from_indices(
            i,
            j,
            [cell(1, 1), cell(1, -1), cell(-1, 1), cell(-1, -1)],
        ));
    }
    MarginalFamily::new(3, tables)
}

/// A random nonnegative rational joint over `n` variables.
pub fn random_rational_joint(n: usize, rng: &mut impl Rng) -> SignedJoint<BigRational> {
    let atoms = 1usize << n;
    let mut numerators: Vec<i64> = (0..atoms).map(|_| rng.gen_range(0..=32)).collect();
    if numerators.iter().all(|&k| k == 0) {
        numerators[0] = 1;
    }
    let total: i64 = numerators.iter().sum();
    let weights = numerators.into_iter().map(|k| BigRational::from_ratio(k, total)).collect();
    SignedJoint { n, weights }
}

/// A random nonnegative float joint over `n` variables.
pub fn random_float_joint(n: usize, rng: &mut impl Rng) -> SignedJoint<f64> {
    let atoms = 1usize << n;
    let raw: Vec<f64> = (0..atoms).map(|_| rng.gen_range(0.0..1.0) + 1e-6).collect();
    let total: f64 = raw.iter().sum();
    SignedJoint { n, weights: raw.into_iter().map(|w| w / total).collect() }
}
