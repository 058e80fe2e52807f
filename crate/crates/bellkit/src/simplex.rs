//! Dense two-phase simplex for small equality-form problems:
//! minimize `c'x` subject to `Ax = b`, `x >= 0`.
//!
//! Pivoting uses Bland's rule, so runs are deterministic and cannot cycle.
//! In the rational mode every comparison is exact; in the float mode zero
//! tests use the shared `1e-9` tolerance. When phase 1 ends above zero the
//! solver returns the dual multipliers of the artificial objective, which
//! form a Farkas certificate of infeasibility.

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum LpResult<T> {
    Optimal {
        x: Vec<T>,
        objective: T,
    },
    /// `farkas[i]` multiplies original row `i`; the combination satisfies
    /// `y'A <= 0` componentwise with `y'b > 0`.
    Infeasible {
        farkas: Vec<T>,
    },
    Unbounded,
}

struct Tableau<T> {
    /// `rows[i]` has `ncols` coefficients followed by the rhs.
    rows: Vec<Vec<T>>,
    /// Reduced-cost row, last entry = minus current objective.
    cost: Vec<T>,
    /// Basic variable of each row.
    basis: Vec<usize>,
    n_struct: usize,
    ncols: usize,
}

impl<T: Scalar> Tableau<T> {
    fn pivot(&mut self, row: usize, col: usize) {
        let pivot_val = self.rows[row][col].clone();
        for v in self.rows[row].iter_mut() {
            if !v.is_zero() {
                *v = v.clone() / pivot_val.clone();
            }
        }
        let pivot_row = self.rows[row].clone();
        for (r, other) in self.rows.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let factor = other[col].clone();
            if factor.is_zero() {
                continue;
            }
            for (k, v) in other.iter_mut().enumerate() {
                if !pivot_row[k].is_zero() {
                    *v = v.clone() - factor.clone() * pivot_row[k].clone();
                }
            }
        }
        let factor = self.cost[col].clone();
        if !factor.is_zero() {
            for (k, v) in self.cost.iter_mut().enumerate() {
                if !pivot_row[k].is_zero() {
                    *v = v.clone() - factor.clone() * pivot_row[k].clone();
                }
            }
        }
        self.basis[row] = col;
    }

    /// Bland: smallest eligible column index, columns limited to `0..limit`.
    fn entering(&self, limit: usize) -> Option<usize> {
        (0..limit).find(|&j| self.cost[j].is_neg())
    }

    /// Ratio test with Bland tie-breaking on the basic variable index.
    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for (r, row) in self.rows.iter().enumerate() {
            let coeff = &row[col];
            if !coeff.is_pos() {
                continue;
            }
            let ratio = row[self.ncols].clone() / coeff.clone();
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    if ratio < bratio
                        || (ratio.approx_eq(&bratio) && self.basis[r] < self.basis[br])
                    {
                        Some((r, ratio))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    /// Runs simplex until optimal or unbounded. Returns `false` on unbounded.
    fn optimize(&mut self, limit: usize) -> bool {
        loop {
            let Some(col) = self.entering(limit) else { return true };
            let Some(row) = self.leaving(col) else { return false };
            self.pivot(row, col);
        }
    }

    fn objective(&self) -> T {
        -self.cost[self.ncols].clone()
    }

    fn solution(&self) -> Vec<T> {
        let mut x = vec![T::zero(); self.n_struct];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = self.rows[r][self.ncols].clone();
            }
        }
        x
    }
}

/// Solves `min c'x, Ax = b, x >= 0` for dense `a` (one inner vec per row).
pub fn solve_equality_lp<T: Scalar>(a: &[Vec<T>], b: &[T], c: &[T]) -> LpResult<T> {
    let m = a.len();
    let n_struct = c.len();
    assert_eq!(b.len(), m);
    assert!(a.iter().all(|row| row.len() == n_struct));

    let ncols = n_struct + m;
    let mut row_sign = vec![false; m];
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i].is_neg();
        row_sign[i] = flip;
        let mut row = Vec::with_capacity(ncols + 1);
        for v in &a[i][..n_struct] {
            let v = v.clone();
            row.push(if flip { -v } else { v });
        }
        for k in 0..m {
            row.push(if k == i { T::one() } else { T::zero() });
        }
        let rhs = b[i].clone();
        row.push(if flip { -rhs } else { rhs });
        rows.push(row);
    }

    // Phase-1 reduced costs: cost of artificials is 1, of structurals 0,
    // priced out against the all-artificial starting basis.
    let mut cost = vec![T::zero(); ncols + 1];
    for j in 0..=ncols {
        let mut s = T::zero();
        for row in &rows {
            s = s + row[j].clone();
        }
        if (n_struct..ncols).contains(&j) {
            cost[j] = T::one() - s;
        } else {
            cost[j] = -s;
        }
    }

    let mut t = Tableau { rows, cost, basis: (n_struct..ncols).collect(), n_struct, ncols };

    // Phase 1 minimizes the artificial sum over all columns.
    let bounded = t.optimize(ncols);
    debug_assert!(bounded, "phase 1 is bounded below by zero");
    // Feasibility is judged per constraint: the basic artificials hold the
    // row residuals, so the system counts as infeasible only when some row
    // cannot be met within tolerance (exact mode: not at all).
    let max_residual = t
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= n_struct)
        .map(|(r, _)| t.rows[r][ncols].clone())
        .fold(T::zero(), |acc, v| if v > acc { v } else { acc });
    if t.objective().is_pos() && max_residual.is_pos() {
        // Dual of the artificial objective: y_i = 1 - rc(artificial_i),
        // un-flipping the rows that were negated to make b nonnegative.
        let farkas = (0..m)
            .map(|i| {
                let y = T::one() - t.cost[n_struct + i].clone();
                if row_sign[i] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        return LpResult::Infeasible { farkas };
    }

    // Drive zero-level artificials out of the basis where a structural pivot
    // exists; rows without one are redundant and stay inert.
    for r in 0..m {
        if t.basis[r] >= n_struct {
            if let Some(col) = (0..n_struct).find(|&j| !t.rows[r][j].approx_eq(&T::zero())) {
                t.pivot(r, col);
            }
        }
    }

    // Phase-2 reduced costs from the real objective (artificials cost 0 and
    // are barred from entering). Pricing the rhs column leaves the cost row's
    // last slot at minus the current objective, as the pivots maintain.
    let mut cost = vec![T::zero(); ncols + 1];
    for (j, slot) in cost.iter_mut().enumerate() {
        let mut priced = T::zero();
        for (r, row) in t.rows.iter().enumerate() {
            let basic = t.basis[r];
            if basic < n_struct && !c[basic].is_zero() {
                priced = priced + c[basic].clone() * row[j].clone();
            }
        }
        let own = if j < n_struct { c[j].clone() } else { T::zero() };
        *slot = own - priced;
    }
    t.cost = cost;

    if !t.optimize(n_struct) {
        return LpResult::Unbounded;
    }

    LpResult::Optimal { x: t.solution(), objective: t.objective() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    #[test]
    fn feasibility_only_problem() {
        // x0 + x1 = 1, x0 - x1 = 0 -> x = (1/2, 1/2).
        let a = vec![vec![q(1, 1), q(1, 1)], vec![q(1, 1), q(-1, 1)]];
        let b = vec![q(1, 1), q(0, 1)];
        let c = vec![q(0, 1), q(0, 1)];
        match solve_equality_lp(&a, &b, &c) {
            LpResult::Optimal { x, .. } => {
                assert_eq!(x, vec![q(1, 2), q(1, 2)]);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn minimization_reaches_the_right_vertex() {
        // min x0 s.t. x0 + x1 = 1 -> x = (0, 1).
        let a = vec![vec![q(1, 1), q(1, 1)]];
        let b = vec![q(1, 1)];
        let c = vec![q(1, 1), q(0, 1)];
        match solve_equality_lp(&a, &b, &c) {
            LpResult::Optimal { x, objective } => {
                assert_eq!(x, vec![q(0, 1), q(1, 1)]);
                assert_eq!(objective, q(0, 1));
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_system_yields_valid_farkas() {
        // x0 = 1 and x0 = 2 cannot both hold.
        let a = vec![vec![q(1, 1)], vec![q(1, 1)]];
        let b = vec![q(1, 1), q(2, 1)];
        let c = vec![q(0, 1)];
        match solve_equality_lp(&a, &b, &c) {
            LpResult::Infeasible { farkas } => {
                // y'A <= 0 componentwise, y'b > 0.
                let col = farkas[0].clone() + farkas[1].clone();
                let rhs = farkas[0].clone() + farkas[1].clone() * q(2, 1);
                assert!(col <= q(0, 1));
                assert!(rhs > q(0, 1));
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn negative_rhs_rows_are_handled() {
        // -x0 = -3 -> x0 = 3.
        let a = vec![vec![q(-1, 1), q(0, 1)]];
        let b = vec![q(-3, 1)];
        let c = vec![q(1, 1), q(1, 1)];
        match solve_equality_lp(&a, &b, &c) {
            LpResult::Optimal { x, objective } => {
                assert_eq!(x[0], q(3, 1));
                assert_eq!(objective, q(3, 1));
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_detected() {
        // min -x0 s.t. x0 - x1 = 0: x0 can grow with x1.
        let a = vec![vec![q(1, 1), q(-1, 1)]];
        let b = vec![q(0, 1)];
        let c = vec![q(-1, 1), q(0, 1)];
        assert_eq!(solve_equality_lp(&a, &b, &c), LpResult::Unbounded);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        // Same row twice: rank-deficient but consistent.
        let a = vec![vec![q(1, 1), q(1, 1)], vec![q(1, 1), q(1, 1)]];
        let b = vec![q(1, 1), q(1, 1)];
        let c = vec![q(0, 1), q(1, 1)];
        match solve_equality_lp(&a, &b, &c) {
            LpResult::Optimal { x, objective } => {
                assert_eq!(x, vec![q(1, 1), q(0, 1)]);
                assert_eq!(objective, q(0, 1));
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn float_mode_agrees_on_small_problem() {
        let a = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        let b = vec![1.0, 0.0];
        let c = vec![0.0, 1.0];
        match solve_equality_lp(&a, &b, &c) {
            LpResult::Optimal { x, .. } => {
                assert!((x[0] - 0.5).abs() < 1e-12);
                assert!((x[1] - 0.5).abs() < 1e-12);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }
}
