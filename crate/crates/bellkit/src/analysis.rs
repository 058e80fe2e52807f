//! Coincidence-data analysis: empirical tables with standard errors,
//! deviation-compensation reports against the singlet predictions, and
//! Bell-type inequalities assembled by mixing estimates across contexts.

use serde::Serialize;

use crate::inequality::{bell_covariance, chsh, wigner, InequalityKindError, InequalityReport};
use crate::singlet::{singlet_correlation, singlet_pair_table};
use crate::types::{CoincidenceRecord, PairwiseTable};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("record has zero total count")]
    ZeroTotal,
    #[error("record counts overflow")]
    CountOverflow,
    #[error("no record for settings ({theta1_deg}, {theta2_deg}) degrees")]
    MissingContext { theta1_deg: f64, theta2_deg: f64 },
    #[error("{kind} needs {expected} role angles, got {got}")]
    WrongAngleCount { kind: &'static str, expected: usize, got: usize },
    #[error(transparent)]
    Domain(#[from] crate::inequality::DomainError),
}

fn bounded_total(record: &CoincidenceRecord) -> Result<u64, AnalysisError> {
    let total = u64::try_from(record.total()).map_err(|_| AnalysisError::CountOverflow)?;
    if total == 0 {
        return Err(AnalysisError::ZeroTotal);
    }
    Ok(total)
}

/// Frequencies `n_xy / N` plus the per-cell standard error
/// `sqrt(p(1-p)/N)`.
pub fn empirical_table(
    record: &CoincidenceRecord,
) -> Result<(PairwiseTable<f64>, [f64; 4]), AnalysisError> {
    let total = bounded_total(record)?;
    let n = total as f64;
    let freqs = record.counts().map(|c| c as f64 / n);
    let errors = freqs.map(|p| (p * (1.0 - p) / n).sqrt());
    Ok((PairwiseTable::from_indices(0, 1, freqs), errors))
}

fn empirical_correlation(record: &CoincidenceRecord) -> Result<(f64, f64, u64), AnalysisError> {
    let total = bounded_total(record)?;
    let n = total as f64;
    let signed =
        record.n_pp as i64 - record.n_pm as i64 - record.n_mp as i64 + record.n_mm as i64;
    let e = signed as f64 / n;
    let se = ((1.0 - e * e).max(0.0) / n).sqrt();
    Ok((e, se, total))
}

/// A caller-chosen linear combination of the four cell deviations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComboDeviation {
    /// Coefficients over `(pp, pm, mp, mm)`.
    pub coefficients: [f64; 4],
    /// `sum of c_xy * (f_xy - P_xy)`.
    pub value: f64,
    /// Multinomial standard error of `sum c_xy f_xy`.
    pub std_error: f64,
}

/// Per-record deviations from the singlet predictions.
///
/// `compensation_residual` recomputes `d_pp - d_pm - d_mp + d_mm` from the
/// cell deviations; it equals `delta_e` identically, which is exactly the
/// compensation built into the correlation expression. Linear combinations
/// without that sign pattern do not compensate, which is what
/// `combinations` is for.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnomalyReport {
    pub theta1: f64,
    pub theta2: f64,
    pub total: u64,
    /// `f_xy - P_xy` over `(pp, pm, mp, mm)`.
    pub deviations: [f64; 4],
    pub cell_std_errors: [f64; 4],
    /// `E_exp - E_qm`.
    pub delta_e: f64,
    pub delta_e_std_error: f64,
    /// `d_pp - d_pm - d_mp + d_mm`; equal to `delta_e` by arithmetic.
    pub compensation_residual: f64,
    /// Deviation of `P(a=+1)` from its uniform prediction `1/2`.
    pub marginal_a_deviation: f64,
    /// Deviation of `P(b=+1)` from `1/2`.
    pub marginal_b_deviation: f64,
    pub combinations: Vec<ComboDeviation>,
    /// Quantities exceeding `sigma_k` standard errors.
    pub flags: Vec<String>,
}

/// Multinomial standard error of `sum c_xy f_xy` at the empirical
/// frequencies: `sqrt((sum c^2 p - (sum c p)^2) / N)`.
fn combo_std_error(coefficients: &[f64; 4], freqs: &[f64; 4], n: f64) -> f64 {
    let mean: f64 = coefficients.iter().zip(freqs).map(|(c, p)| c * p).sum();
    let square: f64 = coefficients.iter().zip(freqs).map(|(c, p)| c * c * p).sum();
    ((square - mean * mean).max(0.0) / n).sqrt()
}

/// Compares each record against the singlet prediction at its own settings.
/// `combos` adds caller-chosen linear combinations of the cell deviations;
/// `sigma_k` controls which deviations get flagged.
pub fn anomaly_analysis(
    records: &[CoincidenceRecord],
    combos: &[[f64; 4]],
    sigma_k: f64,
) -> Result<Vec<AnomalyReport>, AnalysisError> {
    records
        .iter()
        .map(|record| {
            let (table, cell_std_errors) = empirical_table(record)?;
            let n = bounded_total(record)? as f64;
            let reference = singlet_pair_table(record.theta1, record.theta2);
            let freqs = &table.cells;
            let deviations = [
                freqs[0] - reference.cells[0],
                freqs[1] - reference.cells[1],
                freqs[2] - reference.cells[2],
                freqs[3] - reference.cells[3],
            ];
            let e_exp = freqs[0] - freqs[1] - freqs[2] + freqs[3];
            let e_qm = singlet_correlation(record.theta1, record.theta2);
            let delta_e = e_exp - e_qm;
            let compensation_residual =
                deviations[0] - deviations[1] - deviations[2] + deviations[3];
            let delta_e_std_error = combo_std_error(&[1.0, -1.0, -1.0, 1.0], freqs, n);
            let marginal_a_deviation = deviations[0] + deviations[1];
            let marginal_b_deviation = deviations[0] + deviations[2];

            let combinations = combos
                .iter()
                .map(|c| ComboDeviation {
                    coefficients: *c,
                    value: c.iter().zip(&deviations).map(|(ci, di)| ci * di).sum(),
                    std_error: combo_std_error(c, freqs, n),
                })
                .collect();

            let mut flags = Vec::new();
            let cell_names = ["pp", "pm", "mp", "mm"];
            for (slot, name) in cell_names.iter().enumerate() {
                if deviations[slot].abs() > sigma_k * cell_std_errors[slot] {
                    flags.push(format!("cell {name} deviates by {:+.6}", deviations[slot]));
                }
            }
            if delta_e.abs() > sigma_k * delta_e_std_error {
                flags.push(format!("correlation deviates by {delta_e:+.6}"));
            }
            let marginal_se = combo_std_error(&[1.0, 1.0, 0.0, 0.0], freqs, n);
            if marginal_a_deviation.abs() > sigma_k * marginal_se {
                flags.push(format!(
                    "first-station marginal deviates by {marginal_a_deviation:+.6}"
                ));
            }
            let marginal_se = combo_std_error(&[1.0, 0.0, 1.0, 0.0], freqs, n);
            if marginal_b_deviation.abs() > sigma_k * marginal_se {
                flags.push(format!(
                    "second-station marginal deviates by {marginal_b_deviation:+.6}"
                ));
            }

            Ok(AnomalyReport {
                theta1: record.theta1,
                theta2: record.theta2,
                total: bounded_total(record)?,
                deviations,
                cell_std_errors,
                delta_e,
                delta_e_std_error,
                compensation_residual,
                marginal_a_deviation,
                marginal_b_deviation,
                combinations,
                flags,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Cross-context evaluation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InequalityKind {
    BellCovariance,
    Wigner,
    Chsh,
}

impl InequalityKind {
    pub fn role_count(self) -> usize {
        match self {
            InequalityKind::BellCovariance | InequalityKind::Wigner => 3,
            InequalityKind::Chsh => 4,
        }
    }

    fn name(self) -> &'static str {
        match self {
            InequalityKind::BellCovariance => "bell-covariance",
            InequalityKind::Wigner => "wigner",
            InequalityKind::Chsh => "chsh",
        }
    }
}

impl std::str::FromStr for InequalityKind {
    type Err = InequalityKindError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bell" | "bell-covariance" => Ok(InequalityKind::BellCovariance),
            "wigner" => Ok(InequalityKind::Wigner),
            "chsh" => Ok(InequalityKind::Chsh),
            other => Err(InequalityKindError(other.to_string())),
        }
    }
}

/// One estimate feeding the inequality, with its provenance spelled out:
/// which record it came from and whether the record stored the pair in the
/// transposed orientation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateTrace {
    pub role: String,
    pub record_index: usize,
    pub theta1_deg: f64,
    pub theta2_deg: f64,
    pub transposed: bool,
    pub value: f64,
    pub std_error: f64,
    pub total: u64,
}

/// An inequality assembled from per-context estimates, with the cross-context
/// data mixing made explicit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossContextEvaluation {
    pub kind: InequalityKind,
    /// Role angles in radians: `(a, b, c)` or `(a, a', b, b')`.
    pub role_angles: Vec<f64>,
    pub estimates: Vec<EstimateTrace>,
    pub report: InequalityReport,
    /// Propagated standard error of the margin.
    pub margin_std_error: f64,
    pub sigma_k: f64,
    /// `margin > sigma_k * margin_std_error`.
    pub statistically_violated: bool,
}

fn angle_distance_mod_pi(a: f64, b: f64) -> f64 {
    let mut d = (a - b).rem_euclid(std::f64::consts::PI);
    if d > std::f64::consts::PI / 2.0 {
        d = std::f64::consts::PI - d;
    }
    d
}

/// Finds the record measuring the unordered settings pair `(x, y)`.
fn find_record(
    records: &[CoincidenceRecord],
    x: f64,
    y: f64,
) -> Result<(usize, bool), AnalysisError> {
    const TOL: f64 = 1e-9;
    for (i, r) in records.iter().enumerate() {
        if angle_distance_mod_pi(r.theta1, x) < TOL && angle_distance_mod_pi(r.theta2, y) < TOL {
            return Ok((i, false));
        }
        if angle_distance_mod_pi(r.theta1, y) < TOL && angle_distance_mod_pi(r.theta2, x) < TOL {
            return Ok((i, true));
        }
    }
    Err(AnalysisError::MissingContext { theta1_deg: x.to_degrees(), theta2_deg: y.to_degrees() })
}

fn correlation_trace(
    records: &[CoincidenceRecord],
    role: &str,
    x: f64,
    y: f64,
) -> Result<EstimateTrace, AnalysisError> {
    let (index, transposed) = find_record(records, x, y)?;
    let record = &records[index];
    let (value, std_error, total) = empirical_correlation(record)?;
    Ok(EstimateTrace {
        role: role.to_string(),
        record_index: index,
        theta1_deg: record.theta1.to_degrees(),
        theta2_deg: record.theta2.to_degrees(),
        transposed,
        value,
        std_error,
        total,
    })
}

/// `P(first = s1, second = s2)` with the record's orientation honored.
fn probability_trace(
    records: &[CoincidenceRecord],
    role: &str,
    x: f64,
    y: f64,
    s1: crate::types::Sign,
    s2: crate::types::Sign,
) -> Result<EstimateTrace, AnalysisError> {
    let (index, transposed) = find_record(records, x, y)?;
    let record = &records[index];
    let total = bounded_total(record)?;
    let (a, b) = if transposed { (s2, s1) } else { (s1, s2) };
    let count = record.counts()[crate::types::cell_slot(a, b)];
    let p = count as f64 / total as f64;
    let std_error = (p * (1.0 - p) / total as f64).sqrt();
    Ok(EstimateTrace {
        role: role.to_string(),
        record_index: index,
        theta1_deg: record.theta1.to_degrees(),
        theta2_deg: record.theta2.to_degrees(),
        transposed,
        value: p,
        std_error,
        total,
    })
}

/// Assembles the chosen inequality from per-context records. `role_angles`
/// fixes which measured setting plays which role: `(a, b, c)` for the
/// three-term inequalities, `(a, a', b, b')` for CHSH. Every estimate traces
/// to exactly one record.
pub fn evaluate_cross_context(
    records: &[CoincidenceRecord],
    kind: InequalityKind,
    role_angles: &[f64],
    sigma_k: f64,
) -> Result<CrossContextEvaluation, AnalysisError> {
    if role_angles.len() != kind.role_count() {
        return Err(AnalysisError::WrongAngleCount {
            kind: kind.name(),
            expected: kind.role_count(),
            got: role_angles.len(),
        });
    }

    let (estimates, report): (Vec<EstimateTrace>, InequalityReport) = match kind {
        InequalityKind::BellCovariance => {
            let (a, b, c) = (role_angles[0], role_angles[1], role_angles[2]);
            let e_ab = correlation_trace(records, "E(a,b)", a, b)?;
            let e_cb = correlation_trace(records, "E(c,b)", c, b)?;
            let e_ac = correlation_trace(records, "E(a,c)", a, c)?;
            let report = bell_covariance(e_ab.value, e_cb.value, e_ac.value)?;
            (vec![e_ab, e_cb, e_ac], report)
        }
        InequalityKind::Wigner => {
            use crate::types::Sign::{Minus, Plus};
            let (a, b, c) = (role_angles[0], role_angles[1], role_angles[2]);
            let p_ab = probability_trace(records, "P(a+,b+)", a, b, Plus, Plus)?;
            let p_bc = probability_trace(records, "P(b-,c+)", b, c, Minus, Plus)?;
            let p_ac = probability_trace(records, "P(a+,c+)", a, c, Plus, Plus)?;
            let report = wigner(p_ab.value, p_bc.value, p_ac.value)?;
            (vec![p_ab, p_bc, p_ac], report)
        }
        InequalityKind::Chsh => {
            let (a, a2, b, b2) =
                (role_angles[0], role_angles[1], role_angles[2], role_angles[3]);
            let e_ab = correlation_trace(records, "E(a,b)", a, b)?;
            let e_ab2 = correlation_trace(records, "E(a,b')", a, b2)?;
            let e_a2b = correlation_trace(records, "E(a',b)", a2, b)?;
            let e_a2b2 = correlation_trace(records, "E(a',b')", a2, b2)?;
            let report = chsh(e_ab.value, e_ab2.value, e_a2b.value, e_a2b2.value)?;
            (vec![e_ab, e_ab2, e_a2b, e_a2b2], report)
        }
    };

    let margin_std_error =
        estimates.iter().map(|t| t.std_error * t.std_error).sum::<f64>().sqrt();
    let statistically_violated = report.margin > sigma_k * margin_std_error;

    Ok(CrossContextEvaluation {
        kind,
        role_angles: role_angles.to_vec(),
        estimates,
        report,
        margin_std_error,
        sigma_k,
        statistically_violated,
    })
}
