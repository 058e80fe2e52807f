//! Domain types shared by every module: dichotomous variables, pairwise
//! tables, marginal families, signed joints over the atom space, verdicts,
//! and coincidence records.
//!
//! All types are immutable values after construction and safe to share
//! across threads.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Default cap on the number of variables (atom space `2^20`).
pub const DEFAULT_VAR_CAP: usize = 20;

/// A `+1`/`-1` measurement value. The only thing allowed inside probability
/// tables and joints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => write!(f, "+1"),
            Sign::Minus => write!(f, "-1"),
        }
    }
}

/// A detector-level event: a sign, or no registration at all.
///
/// `NoClick` lives only in simulator event streams. It can never enter a
/// [`PairwiseTable`]; the one conversion path is post-selection, which counts
/// and discards it explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Click(Sign),
    NoClick,
}

impl Outcome {
    pub fn sign(self) -> Option<Sign> {
        match self {
            Outcome::Click(s) => Some(s),
            Outcome::NoClick => None,
        }
    }
}

/// One dichotomous variable in a family: a dense index plus an optional
/// human-readable label such as `"theta=60deg"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableId {
    pub index: usize,
    pub label: Option<String>,
}

impl VariableId {
    pub fn new(index: usize) -> Self {
        Self { index, label: None }
    }

    pub fn labeled(index: usize, label: impl Into<String>) -> Self {
        Self { index, label: Some(label.into()) }
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.label {
            Some(l) => write!(f, "a{} ({l})", self.index),
            None => write!(f, "a{}", self.index),
        }
    }
}

/// Joint distribution of one pair of dichotomous variables: four cells
/// indexed by `(alpha, beta)` in the fixed order `(+,+), (+,-), (-,+), (-,-)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTable<T> {
    pub pair: (VariableId, VariableId),
    pub cells: [T; 4],
}

pub(crate) fn cell_slot(alpha: Sign, beta: Sign) -> usize {
    match (alpha, beta) {
        (Sign::Plus, Sign::Plus) => 0,
        (Sign::Plus, Sign::Minus) => 1,
        (Sign::Minus, Sign::Plus) => 2,
        (Sign::Minus, Sign::Minus) => 3,
    }
}

pub(crate) const CELL_SIGNS: [(Sign, Sign); 4] = [
    (Sign::Plus, Sign::Plus),
    (Sign::Plus, Sign::Minus),
    (Sign::Minus, Sign::Plus),
    (Sign::Minus, Sign::Minus),
];

impl<T: Scalar> PairwiseTable<T> {
    pub fn new(i: VariableId, j: VariableId, cells: [T; 4]) -> Self {
        Self { pair: (i, j), cells }
    }

    pub fn from_indices(i: usize, j: usize, cells: [T; 4]) -> Self {
        Self::new(VariableId::new(i), VariableId::new(j), cells)
    }

    pub fn p(&self, alpha: Sign, beta: Sign) -> &T {
        &self.cells[cell_slot(alpha, beta)]
    }

    /// Marginal of the first variable: `P(a_i = alpha)`.
    pub fn marginal_first(&self, alpha: Sign) -> T {
        self.p(alpha, Sign::Plus).clone() + self.p(alpha, Sign::Minus).clone()
    }

    /// Marginal of the second variable: `P(a_j = beta)`.
    pub fn marginal_second(&self, beta: Sign) -> T {
        self.p(Sign::Plus, beta).clone() + self.p(Sign::Minus, beta).clone()
    }

    pub fn total(&self) -> T {
        self.cells.iter().cloned().fold(T::zero(), |acc, c| acc + c)
    }

    /// Cell-level validity: nonnegative entries summing to one.
    pub fn validate(&self) -> Result<(), TableError> {
        if self.pair.0.index == self.pair.1.index {
            return Err(TableError::SelfPair { index: self.pair.0.index });
        }
        for (slot, cell) in self.cells.iter().enumerate() {
            if cell.is_neg() {
                return Err(TableError::NegativeCell { slot, value: cell.to_f64() });
            }
        }
        let total = self.total();
        if !total.approx_eq(&T::one()) {
            return Err(TableError::NotNormalized {
                total: total.to_f64(),
                deviation: (total - T::one()).to_f64(),
            });
        }
        Ok(())
    }

    /// Converts the scalar type cell-by-cell via `f64`.
    pub fn map_scalar<U: Scalar>(&self) -> PairwiseTable<U> {
        PairwiseTable {
            pair: self.pair.clone(),
            cells: [
                U::from_f64(self.cells[0].to_f64()),
                U::from_f64(self.cells[1].to_f64()),
                U::from_f64(self.cells[2].to_f64()),
                U::from_f64(self.cells[3].to_f64()),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TableError {
    #[error("pair references variable a{index} twice")]
    SelfPair { index: usize },
    #[error("cell {slot} is negative ({value})")]
    NegativeCell { slot: usize, value: f64 },
    #[error("cells sum to {total} (off by {deviation:e})")]
    NotNormalized { total: f64, deviation: f64 },
}

/// `P(+,+) - P(+,-) - P(-,+) + P(-,-)` for a valid table. Always in `[-1, 1]`.
pub fn correlation_of<T: Scalar>(table: &PairwiseTable<T>) -> Result<T, TableError> {
    table.validate()?;
    let c = &table.cells;
    Ok(c[0].clone() - c[1].clone() - c[2].clone() + c[3].clone())
}

/// A set of variables plus pairwise tables over some of the pairs — the
/// input of the compatibility question.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalFamily<T> {
    pub n: usize,
    pub tables: Vec<PairwiseTable<T>>,
}

impl<T: Scalar> MarginalFamily<T> {
    pub fn new(n: usize, tables: Vec<PairwiseTable<T>>) -> Self {
        Self { n, tables }
    }

    pub fn map_scalar<U: Scalar>(&self) -> MarginalFamily<U> {
        MarginalFamily {
            n: self.n,
            tables: self.tables.iter().map(|t| t.map_scalar()).collect(),
        }
    }
}

/// One violation found by [`validate_family`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum FamilyViolation {
    /// A table failed its own cell-level invariants.
    Table { pair: (usize, usize), message: String },
    /// A variable index is outside `0..n`.
    IndexOutOfRange { pair: (usize, usize), index: usize },
    /// Two tables cover the same unordered pair.
    DuplicatePair { pair: (usize, usize) },
    /// Two tables disagree on a shared single-variable marginal.
    MarginalMismatch {
        variable: usize,
        pair_a: (usize, usize),
        pair_b: (usize, usize),
        p_plus_a: f64,
        p_plus_b: f64,
        deviation: f64,
    },
}

impl fmt::Display for FamilyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyViolation::Table { pair, message } => {
                write!(f, "table ({},{}): {message}", pair.0, pair.1)
            }
            FamilyViolation::IndexOutOfRange { pair, index } => {
                write!(f, "table ({},{}): variable index {index} out of range", pair.0, pair.1)
            }
            FamilyViolation::DuplicatePair { pair } => {
                write!(f, "pair ({},{}) appears more than once", pair.0, pair.1)
            }
            FamilyViolation::MarginalMismatch {
                variable,
                pair_a,
                pair_b,
                p_plus_a,
                p_plus_b,
                deviation,
            } => write!(
                f,
                "variable a{variable}: P(+) is {p_plus_a} in table ({},{}) but {p_plus_b} in table ({},{}) (off by {deviation:e})",
                pair_a.0, pair_a.1, pair_b.0, pair_b.1
            ),
        }
    }
}

/// Checks every table- and family-level invariant, returning all violations
/// found (empty report means the family is valid).
pub fn validate_family<T: Scalar>(family: &MarginalFamily<T>) -> Vec<FamilyViolation> {
    let mut violations = Vec::new();
    let mut seen_pairs: Vec<(usize, usize)> = Vec::new();

    for table in &family.tables {
        let pair = (table.pair.0.index, table.pair.1.index);
        if let Err(e) = table.validate() {
            violations.push(FamilyViolation::Table { pair, message: e.to_string() });
        }
        for index in [pair.0, pair.1] {
            if index >= family.n {
                violations.push(FamilyViolation::IndexOutOfRange { pair, index });
            }
        }
        let unordered = (pair.0.min(pair.1), pair.0.max(pair.1));
        if seen_pairs.contains(&unordered) {
            violations.push(FamilyViolation::DuplicatePair { pair });
        } else {
            seen_pairs.push(unordered);
        }
    }

    // Single-variable marginals must agree across every table covering the
    // same variable.
    for (a, ta) in family.tables.iter().enumerate() {
        for tb in family.tables.iter().skip(a + 1) {
            let pa = (ta.pair.0.index, ta.pair.1.index);
            let pb = (tb.pair.0.index, tb.pair.1.index);
            for var in [pa.0, pa.1] {
                if var != pb.0 && var != pb.1 {
                    continue;
                }
                let ma = if var == pa.0 { ta.marginal_first(Sign::Plus) } else { ta.marginal_second(Sign::Plus) };
                let mb = if var == pb.0 { tb.marginal_first(Sign::Plus) } else { tb.marginal_second(Sign::Plus) };
                if !ma.approx_eq(&mb) {
                    violations.push(FamilyViolation::MarginalMismatch {
                        variable: var,
                        pair_a: pa,
                        pair_b: pb,
                        p_plus_a: ma.to_f64(),
                        p_plus_b: mb.to_f64(),
                        deviation: (ma - mb).to_f64(),
                    });
                }
            }
        }
    }

    violations
}

// ---------------------------------------------------------------------------
// Atom encoding
// ---------------------------------------------------------------------------

/// Encodes a sign vector as an atom index: bit `k` is set iff variable `k`
/// came out `+1`.
pub fn encode_atom(signs: &[Sign]) -> usize {
    signs.iter().enumerate().fold(0usize, |acc, (k, s)| match s {
        Sign::Plus => acc | (1 << k),
        Sign::Minus => acc,
    })
}

/// Inverse of [`encode_atom`] for `n` variables.
pub fn decode_atom(atom: usize, n: usize) -> Vec<Sign> {
    (0..n).map(|k| atom_sign(atom, k)).collect()
}

/// Sign of variable `k` inside atom `atom`.
pub fn atom_sign(atom: usize, k: usize) -> Sign {
    if atom & (1 << k) != 0 {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// A real-weighted measure on the `2^n` atom space. Nonnegative instances
/// are ordinary joint distributions; signed ones are quasi-probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedJoint<T> {
    pub n: usize,
    pub weights: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum JointError {
    #[error("{n} variables exceeds the cap of {cap}")]
    TooManyVariables { n: usize, cap: usize },
    #[error("expected {expected} weights for n={n}, got {got}")]
    WrongLength { n: usize, expected: usize, got: usize },
    #[error("weights sum to {total}, not 1")]
    NotNormalized { total: f64 },
}

impl<T: Scalar> SignedJoint<T> {
    /// Builds a joint over `n <= cap` variables; weights must sum to one.
    pub fn new(n: usize, weights: Vec<T>) -> Result<Self, JointError> {
        Self::with_cap(n, weights, DEFAULT_VAR_CAP)
    }

    pub fn with_cap(n: usize, weights: Vec<T>, cap: usize) -> Result<Self, JointError> {
        if n > cap {
            return Err(JointError::TooManyVariables { n, cap });
        }
        let expected = 1usize << n;
        if weights.len() != expected {
            return Err(JointError::WrongLength { n, expected, got: weights.len() });
        }
        let joint = Self { n, weights };
        let total = joint.total();
        if !total.approx_eq(&T::one()) {
            return Err(JointError::NotNormalized { total: total.to_f64() });
        }
        Ok(joint)
    }

    /// A point mass on one atom.
    pub fn point_mass(n: usize, atom: usize) -> Self {
        let mut weights = vec![T::zero(); 1 << n];
        weights[atom] = T::one();
        Self { n, weights }
    }

    pub fn total(&self) -> T {
        self.weights.iter().cloned().fold(T::zero(), |acc, w| acc + w)
    }

    /// `sum over atoms of max(0, -w)`. Zero iff the joint is a probability
    /// distribution.
    pub fn negativity(&self) -> T {
        self.weights
            .iter()
            .filter(|w| w.is_negative())
            .fold(T::zero(), |acc, w| acc - w.clone())
    }

    pub fn is_nonnegative(&self) -> bool {
        !self.weights.iter().any(|w| w.is_neg())
    }

    /// Pairwise marginal of variables `(i, j)`.
    pub fn marginal_pair(&self, i: usize, j: usize) -> PairwiseTable<T> {
        let mut cells = [T::zero(), T::zero(), T::zero(), T::zero()];
        for (atom, w) in self.weights.iter().enumerate() {
            let slot = cell_slot(atom_sign(atom, i), atom_sign(atom, j));
            cells[slot] = cells[slot].clone() + w.clone();
        }
        PairwiseTable::from_indices(i, j, cells)
    }

    /// Restricts to the pairs present in `family` (used to re-check
    /// witnesses against their inputs).
    pub fn marginal_family_like(&self, family: &MarginalFamily<T>) -> MarginalFamily<T> {
        let tables = family
            .tables
            .iter()
            .map(|t| self.marginal_pair(t.pair.0.index, t.pair.1.index))
            .collect();
        MarginalFamily::new(self.n, tables)
    }
}

/// Did a joint distribution reproducing the family exist?
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feasibility {
    Feasible,
    Infeasible,
}

/// Label of one equality row in the marginal constraint system.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ConstraintLabel {
    /// `sum of all atom weights = 1`.
    Normalization,
    /// One cell of one table: variables `(i, j)` at outcomes `(alpha, beta)`.
    Cell { i: usize, j: usize, alpha: Sign, beta: Sign },
}

/// A Farkas-style certificate of infeasibility: one multiplier per
/// constraint row such that the combined row is nonpositive on every atom
/// while the combined right-hand side is strictly positive.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfeasibilityCertificate<T> {
    pub labels: Vec<ConstraintLabel>,
    pub multipliers: Vec<T>,
}

/// Outcome of a compatibility decision, with the evidence attached:
/// a nonnegative witness joint when feasible, a dual certificate when not.
#[derive(Clone, Debug, PartialEq)]
pub struct CompatibilityVerdict<T> {
    pub status: Feasibility,
    pub witness: Option<SignedJoint<T>>,
    pub certificate: Option<InfeasibilityCertificate<T>>,
}

impl<T: Scalar> CompatibilityVerdict<T> {
    pub fn feasible(witness: SignedJoint<T>) -> Self {
        Self { status: Feasibility::Feasible, witness: Some(witness), certificate: None }
    }

    pub fn infeasible(certificate: InfeasibilityCertificate<T>) -> Self {
        Self { status: Feasibility::Infeasible, witness: None, certificate: Some(certificate) }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == Feasibility::Feasible
    }
}

/// Per-angle-pair event counts, from file or from simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceRecord {
    /// Analyzer settings, radians.
    pub theta1: f64,
    pub theta2: f64,
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
}

impl CoincidenceRecord {
    /// Total event count; widened so adversarial counts cannot overflow.
    pub fn total(&self) -> u128 {
        u128::from(self.n_pp) + u128::from(self.n_pm) + u128::from(self.n_mp) + u128::from(self.n_mm)
    }

    pub fn counts(&self) -> [u64; 4] {
        [self.n_pp, self.n_pm, self.n_mp, self.n_mm]
    }
}
