//! Quantum predictions for the two-photon singlet experiment under the
//! perfect-correlation convention: `P(+,+) = P(-,-) = cos^2(d)/2`,
//! `P(+,-) = P(-,+) = sin^2(d)/2`, `E = cos 2d` with `d = theta1 - theta2`.
//! Angles are radians everywhere inside the library; degree input is
//! converted at the CLI/file boundary.

use crate::types::{MarginalFamily, PairwiseTable, VariableId};

/// Settings differing by less than this (mod pi) count as the same analyzer
/// orientation.
const ANGLE_TOL: f64 = 1e-9;

/// An ordered set of 2 to 4 analyzer settings, pairwise distinct modulo pi.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleSet {
    angles: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AngleSetError {
    #[error("expected 2 to 4 angles, got {0}")]
    WrongCount(usize),
    #[error("angle {0} is not finite")]
    NotFinite(usize),
    #[error("angles {i} and {j} coincide modulo pi")]
    DuplicateModuloPi { i: usize, j: usize },
}

impl AngleSet {
    pub fn new(angles: Vec<f64>) -> Result<Self, AngleSetError> {
        if !(2..=4).contains(&angles.len()) {
            return Err(AngleSetError::WrongCount(angles.len()));
        }
        if let Some(bad) = angles.iter().position(|a| !a.is_finite()) {
            return Err(AngleSetError::NotFinite(bad));
        }
        for i in 0..angles.len() {
            for j in (i + 1)..angles.len() {
                let mut d = (angles[i] - angles[j]).rem_euclid(std::f64::consts::PI);
                if d > std::f64::consts::PI / 2.0 {
                    d = std::f64::consts::PI - d;
                }
                if d < ANGLE_TOL {
                    return Err(AngleSetError::DuplicateModuloPi { i, j });
                }
            }
        }
        Ok(Self { angles })
    }

    pub fn from_degrees(degrees: &[f64]) -> Result<Self, AngleSetError> {
        Self::new(degrees.iter().map(|d| d.to_radians()).collect())
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Which variable pairs a four-angle family covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Pairing {
    /// Every unordered pair gets a table.
    #[default]
    AllPairs,
    /// Four angles read as `(a, a', b, b')`; tables only across stations:
    /// `(a,b), (a,b'), (a',b), (a',b')`.
    ChshCross,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FamilyBuildError {
    #[error("CHSH pairing needs exactly 4 angles, got {0}")]
    ChshNeedsFourAngles(usize),
}

/// Singlet pair distribution at settings `(theta1, theta2)`.
pub fn singlet_pair_table(theta1: f64, theta2: f64) -> PairwiseTable<f64> {
    let d = theta1 - theta2;
    let same = 0.5 * d.cos().powi(2);
    let diff = 0.5 * d.sin().powi(2);
    PairwiseTable::from_indices(0, 1, [same, diff, diff, same])
}

/// Singlet correlation `cos 2(theta1 - theta2)`.
pub fn singlet_correlation(theta1: f64, theta2: f64) -> f64 {
    (2.0 * (theta1 - theta2)).cos()
}

fn labeled(index: usize, angle: f64) -> VariableId {
    VariableId::labeled(index, format!("theta={:.6}deg", angle.to_degrees()))
}

/// One variable per angle, one singlet table per covered pair.
pub fn singlet_family(
    angles: &AngleSet,
    pairing: Pairing,
) -> Result<MarginalFamily<f64>, FamilyBuildError> {
    let a = angles.angles();
    let pairs: Vec<(usize, usize)> = match pairing {
        Pairing::AllPairs => {
            let mut pairs = Vec::new();
            for i in 0..a.len() {
                for j in (i + 1)..a.len() {
                    pairs.push((i, j));
                }
            }
            pairs
        }
        Pairing::ChshCross => {
            if a.len() != 4 {
                return Err(FamilyBuildError::ChshNeedsFourAngles(a.len()));
            }
            vec![(0, 2), (0, 3), (1, 2), (1, 3)]
        }
    };

    let tables = pairs
        .into_iter()
        .map(|(i, j)| {
            let mut table = singlet_pair_table(a[i], a[j]);
            table.pair = (labeled(i, a[i]), labeled(j, a[j]));
            table
        })
        .collect();
    Ok(MarginalFamily::new(a.len(), tables))
}
