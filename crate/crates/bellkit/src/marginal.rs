//! Deciding whether a family of pairwise tables admits a joint distribution,
//! and computing minimal-negativity signed joints when it does not.
//!
//! Both questions are linear programs over the `2^n` atom weights with one
//! equality row per table cell plus normalization. The rational mode answers
//! them exactly; `brute_force_compatibility` answers the same question by
//! Fourier-Motzkin elimination and exists so the two routes can check each
//! other.

use num_rational::BigRational;

use crate::elimination::{eliminate_feasibility, EliminationOutcome};
use crate::scalar::Scalar;
use crate::simplex::{solve_equality_lp, LpResult};
use crate::types::{
    atom_sign, cell_slot, validate_family, CompatibilityVerdict, ConstraintLabel, FamilyViolation,
    InfeasibilityCertificate, MarginalFamily, SignedJoint, CELL_SIGNS, DEFAULT_VAR_CAP,
};

/// Upper bound on `n` for the brute-force oracle.
pub const BRUTE_FORCE_CAP: usize = 4;

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Variable cap (atom space `2^cap`).
    pub cap: usize,
    /// Lexicographic canonicalization of quasi-solutions runs only for
    /// `n <= lex_cap` in exact mode; above it (and in float mode) the
    /// deterministic pivoting order already fixes the answer.
    pub lex_cap: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_VAR_CAP, lex_cap: 8 }
    }
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid family: {}", format_violations(.0))]
    InvalidFamily(Vec<FamilyViolation>),
    #[error("{n} variables exceeds the solver cap of {cap}")]
    OverCap { n: usize, cap: usize },
    #[error("brute-force oracle supports at most {BRUTE_FORCE_CAP} variables, got {n}")]
    OverBruteForceCap { n: usize },
    #[error("no signed measure matches the family (inconsistent single-variable marginals)")]
    NoSignedSolution,
    #[error("objective unbounded; constraint system is malformed")]
    Unbounded,
}

fn format_violations(violations: &[FamilyViolation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// A signed joint reproducing every input table together with its
/// negativity `sum of max(0, -w)`; negativity zero iff the family is
/// compatible.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiSolution<T> {
    pub joint: SignedJoint<T>,
    pub negativity: T,
}

/// Equality system `A w = b` over atom weights, with row labels.
struct ConstraintSystem<T> {
    labels: Vec<ConstraintLabel>,
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    n_atoms: usize,
}

fn build_system<T: Scalar>(family: &MarginalFamily<T>) -> ConstraintSystem<T> {
    let n_atoms = 1usize << family.n;
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();

    labels.push(ConstraintLabel::Normalization);
    rows.push(vec![T::one(); n_atoms]);
    rhs.push(T::one());

    for table in &family.tables {
        let (i, j) = (table.pair.0.index, table.pair.1.index);
        for (alpha, beta) in CELL_SIGNS {
            let mut row = vec![T::zero(); n_atoms];
            for (atom, slot) in row.iter_mut().enumerate() {
                if atom_sign(atom, i) == alpha && atom_sign(atom, j) == beta {
                    *slot = T::one();
                }
            }
            labels.push(ConstraintLabel::Cell { i, j, alpha, beta });
            rows.push(row);
            rhs.push(table.cells[cell_slot(alpha, beta)].clone());
        }
    }

    ConstraintSystem { labels, rows, rhs, n_atoms }
}

fn check_input<T: Scalar>(family: &MarginalFamily<T>, cap: usize) -> Result<(), SolverError> {
    let violations = validate_family(family);
    if !violations.is_empty() {
        return Err(SolverError::InvalidFamily(violations));
    }
    if family.n > cap {
        return Err(SolverError::OverCap { n: family.n, cap });
    }
    Ok(())
}

/// Decides existence of a joint distribution over `2^n` atoms whose pair
/// marginals equal every table in the family.
pub fn check_compatibility<T: Scalar>(
    family: &MarginalFamily<T>,
    options: &SolverOptions,
) -> Result<CompatibilityVerdict<T>, SolverError> {
    check_input(family, options.cap)?;
    if family.tables.is_empty() {
        // Vacuous constraints: any point mass will do; we fix the all-plus atom.
        let atom = (1usize << family.n) - 1;
        return Ok(CompatibilityVerdict::feasible(SignedJoint::point_mass(family.n, atom)));
    }

    let system = build_system(family);
    let costs = vec![T::zero(); system.n_atoms];
    match solve_equality_lp(&system.rows, &system.rhs, &costs) {
        LpResult::Optimal { x, .. } => {
            let joint = SignedJoint { n: family.n, weights: x };
            Ok(CompatibilityVerdict::feasible(joint))
        }
        LpResult::Infeasible { farkas } => Ok(CompatibilityVerdict::infeasible(
            InfeasibilityCertificate { labels: system.labels, multipliers: farkas },
        )),
        LpResult::Unbounded => Err(SolverError::Unbounded),
    }
}

/// Checks a Farkas certificate against the family's constraint system.
///
/// Returns the positive lower bound `y'b` when the certificate is valid
/// (`y'A <= 0` on every atom and `y'b > 0`), `None` otherwise.
pub fn certificate_gap<T: Scalar>(
    family: &MarginalFamily<T>,
    certificate: &InfeasibilityCertificate<T>,
) -> Option<T> {
    let system = build_system(family);
    if system.labels != certificate.labels || system.rows.len() != certificate.multipliers.len() {
        return None;
    }
    for atom in 0..system.n_atoms {
        let mut combined = T::zero();
        for (row, y) in system.rows.iter().zip(&certificate.multipliers) {
            combined = combined + row[atom].clone() * y.clone();
        }
        if combined.is_pos() {
            return None;
        }
    }
    let mut gap = T::zero();
    for (b, y) in system.rhs.iter().zip(&certificate.multipliers) {
        gap = gap + b.clone() * y.clone();
    }
    if gap.is_pos() {
        Some(gap)
    } else {
        None
    }
}

/// Minimizes `sum of max(0, -w)` over signed joints reproducing the family.
///
/// The weight is split into nonnegative parts `w = u - v` and the objective
/// is `sum v`. In exact mode the optimum is then canonicalized to the
/// lexicographically smallest weight vector under the atom encoding.
pub fn solve_quasi<T: Scalar>(
    family: &MarginalFamily<T>,
    options: &SolverOptions,
) -> Result<QuasiSolution<T>, SolverError> {
    check_input(family, options.cap)?;
    let n_atoms = 1usize << family.n;
    if family.tables.is_empty() {
        let atom = n_atoms - 1;
        return Ok(QuasiSolution {
            joint: SignedJoint::point_mass(family.n, atom),
            negativity: T::zero(),
        });
    }

    let system = build_system(family);
    // Columns: u_0..u_{N-1}, v_0..v_{N-1}; each equality row gets +u, -v.
    let split_rows: Vec<Vec<T>> = system
        .rows
        .iter()
        .map(|row| {
            let mut split = Vec::with_capacity(2 * n_atoms);
            split.extend(row.iter().cloned());
            split.extend(row.iter().map(|c| -c.clone()));
            split
        })
        .collect();
    let mut costs = vec![T::zero(); 2 * n_atoms];
    for slot in costs.iter_mut().skip(n_atoms) {
        *slot = T::one();
    }

    let (mut weights, negativity) = match solve_equality_lp(&split_rows, &system.rhs, &costs) {
        LpResult::Optimal { x, objective } => {
            let weights: Vec<T> =
                (0..n_atoms).map(|a| x[a].clone() - x[n_atoms + a].clone()).collect();
            (weights, objective)
        }
        LpResult::Infeasible { .. } => return Err(SolverError::NoSignedSolution),
        LpResult::Unbounded => return Err(SolverError::Unbounded),
    };

    if T::EXACT && family.n <= options.lex_cap {
        weights = lexicographic_refine(&split_rows, &system.rhs, n_atoms, &negativity)?;
    }

    let joint = SignedJoint { n: family.n, weights };
    debug_assert!(joint.negativity().approx_eq(&negativity));
    Ok(QuasiSolution { joint, negativity })
}

/// Re-solves with the optimal negativity pinned, minimizing each atom weight
/// in turn and freezing it, so ties among optimal quasi-solutions always
/// resolve to the same vector.
fn lexicographic_refine<T: Scalar>(
    split_rows: &[Vec<T>],
    rhs: &[T],
    n_atoms: usize,
    negativity: &T,
) -> Result<Vec<T>, SolverError> {
    let mut rows: Vec<Vec<T>> = split_rows.to_vec();
    let mut rhs: Vec<T> = rhs.to_vec();

    // Pin the objective: sum of v equals the optimal negativity.
    let mut pin = vec![T::zero(); 2 * n_atoms];
    for slot in pin.iter_mut().skip(n_atoms) {
        *slot = T::one();
    }
    rows.push(pin);
    rhs.push(negativity.clone());

    let mut fixed = Vec::with_capacity(n_atoms);
    for atom in 0..n_atoms {
        let mut costs = vec![T::zero(); 2 * n_atoms];
        costs[atom] = T::one();
        costs[n_atoms + atom] = -T::one();
        let value = match solve_equality_lp(&rows, &rhs, &costs) {
            LpResult::Optimal { objective, .. } => objective,
            LpResult::Infeasible { .. } => return Err(SolverError::NoSignedSolution),
            LpResult::Unbounded => return Err(SolverError::Unbounded),
        };
        let mut freeze = vec![T::zero(); 2 * n_atoms];
        freeze[atom] = T::one();
        freeze[n_atoms + atom] = -T::one();
        rows.push(freeze);
        rhs.push(value.clone());
        fixed.push(value);
    }
    Ok(fixed)
}

/// Same decision as [`check_compatibility`], by exhaustive rational
/// elimination instead of pivoting. Restricted to `n <= 4`.
pub fn brute_force_compatibility(
    family: &MarginalFamily<BigRational>,
) -> Result<CompatibilityVerdict<BigRational>, SolverError> {
    if family.n > BRUTE_FORCE_CAP {
        return Err(SolverError::OverBruteForceCap { n: family.n });
    }
    check_input(family, BRUTE_FORCE_CAP)?;
    if family.tables.is_empty() {
        let atom = (1usize << family.n) - 1;
        return Ok(CompatibilityVerdict::feasible(SignedJoint::point_mass(family.n, atom)));
    }

    let system = build_system(family);
    match eliminate_feasibility(&system.rows, &system.rhs) {
        EliminationOutcome::Feasible { witness } => {
            let joint = SignedJoint { n: family.n, weights: witness };
            Ok(CompatibilityVerdict::feasible(joint))
        }
        EliminationOutcome::Infeasible { eq_multipliers } => {
            Ok(CompatibilityVerdict::infeasible(InfeasibilityCertificate {
                labels: system.labels,
                multipliers: eq_multipliers,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Feasibility, PairwiseTable};

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    /// The three-variable family with perfectly correlated (0,1) and (0,2)
    /// pairs but a perfectly anticorrelated (1,2) pair.
    pub(crate) fn contradictory_family() -> MarginalFamily<BigRational> {
        let corr = [q(1, 2), q(0, 1), q(0, 1), q(1, 2)];
        let anti = [q(0, 1), q(1, 2), q(1, 2), q(0, 1)];
        MarginalFamily::new(
            3,
            vec![
                PairwiseTable::from_indices(0, 1, corr.clone()),
                PairwiseTable::from_indices(0, 2, corr),
                PairwiseTable::from_indices(1, 2, anti),
            ],
        )
    }

    fn uniform_family() -> MarginalFamily<BigRational> {
        let u = [q(1, 4), q(1, 4), q(1, 4), q(1, 4)];
        MarginalFamily::new(
            3,
            vec![
                PairwiseTable::from_indices(0, 1, u.clone()),
                PairwiseTable::from_indices(0, 2, u.clone()),
                PairwiseTable::from_indices(1, 2, u),
            ],
        )
    }

    #[test]
    fn contradictory_family_is_infeasible_with_valid_certificate() {
        let family = contradictory_family();
        let verdict = check_compatibility(&family, &SolverOptions::default()).unwrap();
        assert_eq!(verdict.status, Feasibility::Infeasible);
        let cert = verdict.certificate.expect("certificate present");
        let gap = certificate_gap(&family, &cert).expect("certificate verifies");
        assert!(gap > q(0, 1));
    }

    #[test]
    fn contradictory_family_infeasible_in_float_mode_too() {
        let family = contradictory_family().map_scalar::<f64>();
        let verdict = check_compatibility(&family, &SolverOptions::default()).unwrap();
        assert_eq!(verdict.status, Feasibility::Infeasible);
    }

    #[test]
    fn uniform_family_is_feasible_and_witness_reproduces_tables() {
        let family = uniform_family();
        let verdict = check_compatibility(&family, &SolverOptions::default()).unwrap();
        assert_eq!(verdict.status, Feasibility::Feasible);
        let witness = verdict.witness.unwrap();
        assert!(witness.is_nonnegative());
        let back = witness.marginal_family_like(&family);
        for (got, want) in back.tables.iter().zip(&family.tables) {
            assert_eq!(got.cells, want.cells);
        }
    }

    #[test]
    fn degenerate_family_returns_all_plus_point_mass() {
        let family = MarginalFamily::<BigRational>::new(2, vec![]);
        let verdict = check_compatibility(&family, &SolverOptions::default()).unwrap();
        let witness = verdict.witness.unwrap();
        assert_eq!(witness.weights[3], q(1, 1));
        let quasi = solve_quasi(&family, &SolverOptions::default()).unwrap();
        assert_eq!(quasi.negativity, q(0, 1));
    }

    #[test]
    fn quasi_negativity_of_contradictory_family_is_exactly_one_half() {
        let family = contradictory_family();
        let quasi = solve_quasi(&family, &SolverOptions::default()).unwrap();
        assert_eq!(quasi.negativity, q(1, 2));
        // Canonical (lexicographically smallest) representative.
        let expected = vec![
            q(0, 1),
            q(0, 1),
            q(1, 2),
            q(0, 1),
            q(1, 2),
            q(0, 1),
            q(-1, 2),
            q(1, 2),
        ];
        assert_eq!(quasi.joint.weights, expected);
        // It still reproduces all three tables.
        let back = quasi.joint.marginal_family_like(&family);
        for (got, want) in back.tables.iter().zip(&family.tables) {
            assert_eq!(got.cells, want.cells);
        }
    }

    #[test]
    fn quasi_on_feasible_family_has_zero_negativity() {
        let family = uniform_family();
        let quasi = solve_quasi(&family, &SolverOptions::default()).unwrap();
        assert_eq!(quasi.negativity, q(0, 1));
        assert!(quasi.joint.is_nonnegative());
    }

    #[test]
    fn brute_force_matches_on_the_two_named_families() {
        let contradictory = contradictory_family();
        let verdict = brute_force_compatibility(&contradictory).unwrap();
        assert_eq!(verdict.status, Feasibility::Infeasible);
        let cert = verdict.certificate.unwrap();
        assert!(certificate_gap(&contradictory, &cert).is_some());

        let uniform = uniform_family();
        let verdict = brute_force_compatibility(&uniform).unwrap();
        assert_eq!(verdict.status, Feasibility::Feasible);
        let witness = verdict.witness.unwrap();
        assert!(witness.is_nonnegative());
        let back = witness.marginal_family_like(&uniform);
        for (got, want) in back.tables.iter().zip(&uniform.tables) {
            assert_eq!(got.cells, want.cells);
        }
    }

    #[test]
    fn brute_force_rejects_large_families() {
        let family = MarginalFamily::<BigRational>::new(5, vec![]);
        assert!(matches!(
            brute_force_compatibility(&family),
            Err(SolverError::OverBruteForceCap { n: 5 })
        ));
    }

    #[test]
    fn invalid_family_is_rejected() {
        let bad = MarginalFamily::new(
            2,
            vec![PairwiseTable::from_indices(0, 1, [q(3, 5), q(1, 2), q(0, 1), q(0, 1)])],
        );
        assert!(matches!(
            check_compatibility(&bad, &SolverOptions::default()),
            Err(SolverError::InvalidFamily(_))
        ));
    }

    #[test]
    fn over_cap_family_is_rejected() {
        let family = MarginalFamily::<f64>::new(3, vec![]);
        let options = SolverOptions { cap: 2, lex_cap: 8 };
        assert!(matches!(
            check_compatibility(&family, &options),
            Err(SolverError::OverCap { n: 3, cap: 2 })
        ));
    }
}
