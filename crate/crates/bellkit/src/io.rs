//! File ingestion and persistence: the coincidence-count CSV format and the
//! pairwise-family CSV format.
//!
//! Both parsers are strict: exact headers, per-line error reporting, no
//! quoting or escaping. Angles are degrees in files and radians in memory.

use std::path::Path;

use crate::scalar::Scalar;
use crate::types::{CoincidenceRecord, MarginalFamily, PairwiseTable};

pub const COINCIDENCE_HEADER: &str = "theta1_deg,theta2_deg,n_pp,n_pm,n_mp,n_mm";
pub const FAMILY_HEADER: &str = "var_i,var_j,p_pp,p_pm,p_mp,p_mm";

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CsvError {
    #[error("empty file")]
    Empty,
    #[error("line 1: expected header `{expected}`, got `{got}`")]
    BadHeader { expected: &'static str, got: String },
    #[error("line {line}: expected {expected} fields, got {got}")]
    FieldCount { line: usize, expected: usize, got: usize },
    #[error("line {line}: field `{field}`: {message}")]
    BadField { line: usize, field: &'static str, message: String },
    #[error("line {line}: total count is zero")]
    ZeroTotal { line: usize },
    #[error("line {line}: counts sum beyond {}", u64::MAX)]
    CountOverflow { line: usize },
}

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] CsvError),
}

fn read_to_string(path: &Path) -> Result<String, FileError> {
    std::fs::read_to_string(path)
        .map_err(|source| FileError::Io { path: path.display().to_string(), source })
}

/// Lines with 1-based numbers, tolerating CRLF and skipping blank tails.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
}

fn parse_count(line: usize, field: &'static str, raw: &str) -> Result<u64, CsvError> {
    let raw = raw.trim();
    if raw.starts_with('-') {
        return Err(CsvError::BadField { line, field, message: format!("negative count `{raw}`") });
    }
    raw.parse::<u64>().map_err(|_| CsvError::BadField {
        line,
        field,
        message: format!("`{raw}` is not a nonnegative integer"),
    })
}

fn parse_angle_deg(line: usize, field: &'static str, raw: &str) -> Result<f64, CsvError> {
    let raw = raw.trim();
    let value: f64 = raw.parse().map_err(|_| CsvError::BadField {
        line,
        field,
        message: format!("`{raw}` is not a number"),
    })?;
    if !value.is_finite() {
        return Err(CsvError::BadField { line, field, message: format!("`{raw}` is not finite") });
    }
    Ok(value.to_radians())
}

/// Parses coincidence records from CSV text with the exact header
/// `theta1_deg,theta2_deg,n_pp,n_pm,n_mp,n_mm`. Rows whose four counts sum
/// to zero are rejected, since they carry no frequency information.
pub fn parse_coincidence_csv_str(text: &str) -> Result<Vec<CoincidenceRecord>, CsvError> {
    let mut lines = numbered_lines(text);
    let Some((_, header)) = lines.next() else { return Err(CsvError::Empty) };
    if header != COINCIDENCE_HEADER {
        return Err(CsvError::BadHeader {
            expected: COINCIDENCE_HEADER,
            got: header.to_string(),
        });
    }

    let mut records = Vec::new();
    for (line, raw) in lines {
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 6 {
            return Err(CsvError::FieldCount { line, expected: 6, got: fields.len() });
        }
        let record = CoincidenceRecord {
            theta1: parse_angle_deg(line, "theta1_deg", fields[0])?,
            theta2: parse_angle_deg(line, "theta2_deg", fields[1])?,
            n_pp: parse_count(line, "n_pp", fields[2])?,
            n_pm: parse_count(line, "n_pm", fields[3])?,
            n_mp: parse_count(line, "n_mp", fields[4])?,
            n_mm: parse_count(line, "n_mm", fields[5])?,
        };
        if record.total() == 0 {
            return Err(CsvError::ZeroTotal { line });
        }
        if record.total() > u128::from(u64::MAX) {
            return Err(CsvError::CountOverflow { line });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn parse_coincidence_csv(path: &Path) -> Result<Vec<CoincidenceRecord>, FileError> {
    Ok(parse_coincidence_csv_str(&read_to_string(path)?)?)
}

/// Radian-to-degree conversion wobbles near-integer angles by an ulp or
/// two; snap those for clean files (well inside the matching tolerance).
fn degrees_for_file(radians: f64) -> f64 {
    let deg = radians.to_degrees();
    if (deg - deg.round()).abs() < 1e-9 {
        deg.round()
    } else {
        deg
    }
}

/// Serializes records back to the same format and header (angles converted
/// to degrees).
pub fn write_coincidence_csv(records: &[CoincidenceRecord]) -> String {
    let mut out = String::from(COINCIDENCE_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            degrees_for_file(r.theta1),
            degrees_for_file(r.theta2),
            r.n_pp,
            r.n_pm,
            r.n_mp,
            r.n_mm
        ));
    }
    out
}

fn parse_index(line: usize, field: &'static str, raw: &str) -> Result<usize, CsvError> {
    raw.trim().parse::<usize>().map_err(|_| CsvError::BadField {
        line,
        field,
        message: format!("`{}` is not a variable index", raw.trim()),
    })
}

fn parse_cell<T: Scalar>(line: usize, field: &'static str, raw: &str) -> Result<T, CsvError> {
    T::parse_text(raw).ok_or_else(|| CsvError::BadField {
        line,
        field,
        message: format!("`{}` is not a probability literal", raw.trim()),
    })
}

/// Parses a pairwise family from CSV text with the exact header
/// `var_i,var_j,p_pp,p_pm,p_mp,p_mm`. The variable count is one more than
/// the largest index seen. Family-level invariants are checked separately
/// by `validate_family`.
pub fn parse_family_csv_str<T: Scalar>(text: &str) -> Result<MarginalFamily<T>, CsvError> {
    let mut lines = numbered_lines(text);
    let Some((_, header)) = lines.next() else { return Err(CsvError::Empty) };
    if header != FAMILY_HEADER {
        return Err(CsvError::BadHeader { expected: FAMILY_HEADER, got: header.to_string() });
    }

    let mut tables = Vec::new();
    let mut max_index = 0usize;
    for (line, raw) in lines {
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 6 {
            return Err(CsvError::FieldCount { line, expected: 6, got: fields.len() });
        }
        let i = parse_index(line, "var_i", fields[0])?;
        let j = parse_index(line, "var_j", fields[1])?;
        let cells = [
            parse_cell::<T>(line, "p_pp", fields[2])?,
            parse_cell::<T>(line, "p_pm", fields[3])?,
            parse_cell::<T>(line, "p_mp", fields[4])?,
            parse_cell::<T>(line, "p_mm", fields[5])?,
        ];
        max_index = max_index.max(i).max(j);
        tables.push(PairwiseTable::from_indices(i, j, cells));
    }
    let n = if tables.is_empty() { 0 } else { max_index + 1 };
    Ok(MarginalFamily::new(n, tables))
}

pub fn parse_family_csv<T: Scalar>(path: &Path) -> Result<MarginalFamily<T>, FileError> {
    Ok(parse_family_csv_str(&read_to_string(path)?)?)
}
