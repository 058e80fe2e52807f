//! Exhaustive rational elimination over exact rationals.
//!
//! This is the independent feasibility oracle behind
//! `brute_force_compatibility`, structurally unrelated to the simplex path:
//! no pivoting rules, no ratio tests. It decides whether `Ax = b, x >= 0`
//! has a solution in two stages:
//!
//! 1. Gauss-Jordan reduction of the equality system, tracking the row
//!    operations so an inconsistent row carries its own certificate;
//! 2. Fourier-Motzkin elimination of the remaining free parameters from the
//!    substituted nonnegativity constraints.
//!
//! A feasible system yields a witness by back-substitution; an infeasible
//! one yields Farkas multipliers over the equality rows.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::scalar::Scalar;

type Q = BigRational;

#[derive(Clone, Debug)]
struct Inequality {
    /// `coeffs . t <= rhs` over the free parameters.
    coeffs: Vec<Q>,
    rhs: Q,
    /// Signed multipliers over the original equality rows whose combination
    /// (together with nonnegativity rows) produced this inequality.
    eq_mult: Vec<Q>,
}

pub(crate) enum EliminationOutcome {
    Feasible { witness: Vec<Q> },
    /// `y` over the equality rows with `y'A <= 0` componentwise and
    /// `y'b > 0`.
    Infeasible { eq_multipliers: Vec<Q> },
}

/// Scales so the largest absolute coefficient is one; returns false for an
/// all-zero coefficient row.
fn canonicalize(ineq: &mut Inequality) -> bool {
    let mut max: Option<Q> = None;
    for c in &ineq.coeffs {
        let a = c.abs();
        if !a.is_zero() && max.as_ref().is_none_or(|m| &a > m) {
            max = Some(a);
        }
    }
    let Some(scale) = max else { return false };
    for c in ineq.coeffs.iter_mut() {
        *c = c.clone() / scale.clone();
    }
    ineq.rhs = ineq.rhs.clone() / scale.clone();
    for m in ineq.eq_mult.iter_mut() {
        *m = m.clone() / scale.clone();
    }
    true
}

/// Keeps, for each distinct coefficient vector, only the tightest rhs.
/// A row `0 <= negative` short-circuits as the contradiction.
fn compress(system: Vec<Inequality>) -> Result<Vec<Inequality>, Inequality> {
    let mut tightest: HashMap<Vec<Q>, Inequality> = HashMap::new();
    let mut order: Vec<Vec<Q>> = Vec::new();
    for mut ineq in system {
        if !canonicalize(&mut ineq) {
            if ineq.rhs.is_negative() {
                return Err(ineq);
            }
            continue;
        }
        match tightest.get_mut(&ineq.coeffs) {
            Some(existing) => {
                if ineq.rhs < existing.rhs {
                    *existing = ineq;
                }
            }
            None => {
                order.push(ineq.coeffs.clone());
                tightest.insert(ineq.coeffs.clone(), ineq);
            }
        }
    }
    Ok(order.into_iter().map(|k| tightest.remove(&k).unwrap()).collect())
}

/// Greedy elimination order: the parameter whose positive/negative row
/// counts produce the fewest new combinations, ties to the smallest index.
fn pick_variable(system: &[Inequality], remaining: &[usize]) -> usize {
    let mut best = remaining[0];
    let mut best_score: Option<i64> = None;
    for &v in remaining {
        let mut pos = 0i64;
        let mut neg = 0i64;
        for ineq in system {
            if ineq.coeffs[v].is_positive() {
                pos += 1;
            } else if ineq.coeffs[v].is_negative() {
                neg += 1;
            }
        }
        let score = pos * neg - pos - neg;
        if best_score.is_none_or(|b| score < b) {
            best_score = Some(score);
            best = v;
        }
    }
    best
}

/// The reduced equality system: `x[pivot_col[i]] = particular[i] -
/// sum over free f of reduced[i][f] * t_f`, plus the row-operation matrix
/// taking original rows to reduced rows.
struct ReducedEqualities {
    pivot_cols: Vec<usize>,
    free_cols: Vec<usize>,
    /// Per reduced row: coefficients over the free columns.
    reduced: Vec<Vec<Q>>,
    particular: Vec<Q>,
    /// Per reduced row: multipliers over the original rows.
    row_ops: Vec<Vec<Q>>,
}

enum GaussOutcome {
    Reduced(ReducedEqualities),
    /// Multipliers combining the original rows into `0 = nonzero`.
    Inconsistent { eq_multipliers: Vec<Q> },
}

fn gauss_reduce(eq_rows: &[Vec<Q>], eq_rhs: &[Q]) -> GaussOutcome {
    let m = eq_rows.len();
    let n = eq_rows.first().map_or(0, Vec::len);

    let mut mat: Vec<Vec<Q>> = eq_rows.to_vec();
    let mut rhs: Vec<Q> = eq_rhs.to_vec();
    let mut ops: Vec<Vec<Q>> = (0..m)
        .map(|i| {
            let mut row = vec![Q::zero(); m];
            row[i] = Q::from_ratio(1, 1);
            row
        })
        .collect();

    let mut pivot_cols = Vec::new();
    let mut pivot_row = 0usize;
    for col in 0..n {
        let Some(src) = (pivot_row..m).find(|&r| !mat[r][col].is_zero()) else { continue };
        mat.swap(pivot_row, src);
        rhs.swap(pivot_row, src);
        ops.swap(pivot_row, src);

        let inv = mat[pivot_row][col].clone();
        for v in mat[pivot_row].iter_mut() {
            *v = v.clone() / inv.clone();
        }
        rhs[pivot_row] = rhs[pivot_row].clone() / inv.clone();
        for v in ops[pivot_row].iter_mut() {
            *v = v.clone() / inv.clone();
        }

        let pivot_mat = mat[pivot_row].clone();
        let pivot_rhs = rhs[pivot_row].clone();
        let pivot_ops = ops[pivot_row].clone();
        for r in 0..m {
            if r == pivot_row || mat[r][col].is_zero() {
                continue;
            }
            let factor = mat[r][col].clone();
            for (k, v) in mat[r].iter_mut().enumerate() {
                if !pivot_mat[k].is_zero() {
                    *v = v.clone() - factor.clone() * pivot_mat[k].clone();
                }
            }
            rhs[r] = rhs[r].clone() - factor.clone() * pivot_rhs.clone();
            for (k, v) in ops[r].iter_mut().enumerate() {
                if !pivot_ops[k].is_zero() {
                    *v = v.clone() - factor.clone() * pivot_ops[k].clone();
                }
            }
        }

        pivot_cols.push(col);
        pivot_row += 1;
        if pivot_row == m {
            break;
        }
    }

    // Rows below the rank must have zero rhs, else the system contradicts
    // itself and the row operations are the certificate.
    for r in pivot_row..m {
        if !rhs[r].is_zero() {
            let sign = if rhs[r].is_positive() { 1 } else { -1 };
            let eq_multipliers =
                ops[r].iter().map(|v| v.clone() * Q::from_ratio(sign, 1)).collect();
            return GaussOutcome::Inconsistent { eq_multipliers };
        }
    }

    let free_cols: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    let rank = pivot_cols.len();
    let reduced = mat[..rank]
        .iter()
        .map(|row| free_cols.iter().map(|&f| row[f].clone()).collect())
        .collect();
    GaussOutcome::Reduced(ReducedEqualities {
        pivot_cols,
        free_cols,
        reduced,
        particular: rhs[..rank].to_vec(),
        row_ops: ops[..rank].to_vec(),
    })
}

pub(crate) fn eliminate_feasibility(eq_rows: &[Vec<Q>], eq_rhs: &[Q]) -> EliminationOutcome {
    let m = eq_rows.len();
    let n = eq_rows.first().map_or(0, Vec::len);

    let eq = match gauss_reduce(eq_rows, eq_rhs) {
        GaussOutcome::Reduced(eq) => eq,
        GaussOutcome::Inconsistent { eq_multipliers } => {
            // Orientation: we need y'b > 0 with y'A = 0 <= 0, and the
            // combination already reads 0 = positive.
            return EliminationOutcome::Infeasible { eq_multipliers };
        }
    };

    let nf = eq.free_cols.len();

    // Nonnegativity in terms of the free parameters.
    let mut system: Vec<Inequality> = Vec::with_capacity(n);
    // Free variable f: -t_f <= 0, no equality content.
    for (slot, _) in eq.free_cols.iter().enumerate() {
        let mut coeffs = vec![Q::zero(); nf];
        coeffs[slot] = Q::from_ratio(-1, 1);
        system.push(Inequality { coeffs, rhs: Q::zero(), eq_mult: vec![Q::zero(); m] });
    }
    // Pivot variable p_i = particular_i - reduced_i . t >= 0, i.e.
    // -reduced_i? No: reversed sign: reduced_i . t <= particular_i. The
    // combination equals [-x_{p_i} <= 0] plus row_ops_i applied to the
    // equalities.
    for i in 0..eq.pivot_cols.len() {
        system.push(Inequality {
            coeffs: eq.reduced[i].clone(),
            rhs: eq.particular[i].clone(),
            eq_mult: eq.row_ops[i].clone(),
        });
    }

    let infeasible = |ineq: Inequality| EliminationOutcome::Infeasible {
        eq_multipliers: ineq.eq_mult.iter().map(|mu| -mu.clone()).collect(),
    };

    system = match compress(system) {
        Ok(s) => s,
        Err(contradiction) => return infeasible(contradiction),
    };

    // stages[k] = (parameter eliminated, system state before eliminating it).
    let mut stages: Vec<(usize, Vec<Inequality>)> = Vec::with_capacity(nf);
    let mut remaining: Vec<usize> = (0..nf).collect();

    while !remaining.is_empty() {
        let v = pick_variable(&system, &remaining);
        remaining.retain(|&u| u != v);
        stages.push((v, system.clone()));

        let mut next = Vec::new();
        let mut pos_rows = Vec::new();
        let mut neg_rows = Vec::new();
        for ineq in system {
            if ineq.coeffs[v].is_positive() {
                pos_rows.push(ineq);
            } else if ineq.coeffs[v].is_negative() {
                neg_rows.push(ineq);
            } else {
                next.push(ineq);
            }
        }

        for p in &pos_rows {
            for q in &neg_rows {
                let lp = -q.coeffs[v].clone();
                let lq = p.coeffs[v].clone();
                let coeffs = p
                    .coeffs
                    .iter()
                    .zip(&q.coeffs)
                    .map(|(a, b)| lp.clone() * a.clone() + lq.clone() * b.clone())
                    .collect();
                let rhs = lp.clone() * p.rhs.clone() + lq.clone() * q.rhs.clone();
                let eq_mult = p
                    .eq_mult
                    .iter()
                    .zip(&q.eq_mult)
                    .map(|(a, b)| lp.clone() * a.clone() + lq.clone() * b.clone())
                    .collect();
                next.push(Inequality { coeffs, rhs, eq_mult });
            }
        }

        system = match compress(next) {
            Ok(s) => s,
            Err(contradiction) => return infeasible(contradiction),
        };
    }

    // Feasible: assign free parameters backwards through the stages.
    let mut free_values: Vec<Option<Q>> = vec![None; nf];
    for (v, stage) in stages.iter().rev() {
        let mut lower: Option<Q> = None;
        let mut upper: Option<Q> = None;
        for ineq in stage {
            let cv = &ineq.coeffs[*v];
            if cv.is_zero() {
                continue;
            }
            let mut residual = ineq.rhs.clone();
            for (u, c) in ineq.coeffs.iter().enumerate() {
                if u == *v || c.is_zero() {
                    continue;
                }
                let value = free_values[u].as_ref().expect("later parameter already assigned");
                residual -= c.clone() * value.clone();
            }
            let bound = residual / cv.clone();
            if cv.is_positive() {
                if upper.as_ref().is_none_or(|u| &bound < u) {
                    upper = Some(bound);
                }
            } else if lower.as_ref().is_none_or(|l| &bound > l) {
                lower = Some(bound);
            }
        }
        let value = match (lower, upper) {
            (Some(lo), Some(hi)) => {
                debug_assert!(lo <= hi, "elimination guarantees a nonempty interval");
                (lo + hi) / Q::from_ratio(2, 1)
            }
            (Some(lo), None) => lo,
            (None, Some(hi)) => hi,
            (None, None) => Q::zero(),
        };
        free_values[*v] = Some(value);
    }
    let free_values: Vec<Q> = free_values.into_iter().map(Option::unwrap).collect();

    // Substitute back into the pivot expressions.
    let mut witness = vec![Q::zero(); n];
    for (slot, &f) in eq.free_cols.iter().enumerate() {
        witness[f] = free_values[slot].clone();
    }
    for (i, &p) in eq.pivot_cols.iter().enumerate() {
        let mut value = eq.particular[i].clone();
        for (slot, c) in eq.reduced[i].iter().enumerate() {
            if !c.is_zero() {
                value -= c.clone() * free_values[slot].clone();
            }
        }
        witness[p] = value;
    }

    EliminationOutcome::Feasible { witness }
}
