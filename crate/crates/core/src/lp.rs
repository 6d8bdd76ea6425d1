//! Phase-1 simplex feasibility for small dense systems over free variables.
//!
//! Used to certify constraint implications during polyhedral reduction and
//! to check that projected rate points lift back to the extended space.
//! Sizes here are small (hundreds of rows at most), so a plain dense
//! tableau suffices. Pricing is Dantzig's rule for speed — the systems are
//! heavily degenerate and Bland's rule alone stalls — with a permanent
//! switch to Bland's rule after a stretch of no objective progress, which
//! restores the termination guarantee.

/// One linear condition `coeffs · x >= rhs` (or `= rhs`) over free `x`.
#[derive(Clone, Debug)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub eq: bool,
}

impl LpRow {
    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        LpRow { coeffs, rhs, eq: false }
    }

    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        LpRow { coeffs, rhs, eq: true }
    }
}

const FEAS_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-9;

/// Whether some `x ∈ R^n` satisfies every row.
///
/// Free variables are split into nonnegative pairs and a phase-1 objective
/// over artificial variables is minimized; feasible iff the optimum is
/// (numerically) zero. Bland's rule guarantees termination.
pub fn feasible(n: usize, rows: &[LpRow]) -> bool {
    let m = rows.len();
    if m == 0 {
        return true;
    }
    // Columns: u (n), v (n) with x = u − v, then one slack/surplus per
    // inequality, then artificials as needed.
    let n_split = 2 * n;
    let n_slack = rows.iter().filter(|r| !r.eq).count();
    let mut width = n_split + n_slack;
    // Worst case every row needs an artificial.
    let art_start = width;
    width += m;

    let mut t = vec![vec![0.0f64; width + 1]; m];
    let mut basis = vec![usize::MAX; m];
    let mut slack_idx = 0usize;
    let mut n_art = 0usize;
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.coeffs.len(), n, "row width mismatch");
        let flip = row.rhs < 0.0;
        let s = if flip { -1.0 } else { 1.0 };
        for (j, &c) in row.coeffs.iter().enumerate() {
            t[i][j] = s * c;
            t[i][n + j] = -s * c;
        }
        t[i][width] = s * row.rhs;
        if !row.eq {
            // a·x >= b becomes a·x − surplus = b (sign-adjusted).
            let col = n_split + slack_idx;
            slack_idx += 1;
            t[i][col] = -s;
            if s < 0.0 {
                // Row flipped: surplus enters with +1, usable as basis.
                basis[i] = col;
                continue;
            }
        }
        let a = art_start + n_art;
        n_art += 1;
        t[i][a] = 1.0;
        basis[i] = a;
    }

    // Phase-1 objective: minimize the sum of artificials. Maintain the
    // reduced-cost row explicitly; price out basic artificials.
    let mut obj = vec![0.0f64; width + 1];
    for a in art_start..art_start + n_art {
        obj[a] = 1.0;
    }
    for i in 0..m {
        if basis[i] >= art_start {
            for j in 0..=width {
                obj[j] -= t[i][j];
            }
        }
    }

    let max_iters = 200 * (m + width);
    let mut bland = false;
    let mut stalled = 0usize;
    let mut last_cost = f64::INFINITY;
    for _ in 0..max_iters {
        let enter = if bland {
            // Bland: smallest index with negative reduced cost.
            (0..width).find(|&j| obj[j] < -PIVOT_TOL)
        } else {
            // Dantzig: most negative reduced cost.
            (0..width)
                .filter(|&j| obj[j] < -PIVOT_TOL)
                .min_by(|&a, &b| obj[a].partial_cmp(&obj[b]).unwrap())
        };
        let Some(enter) = enter else {
            return -obj[width] <= FEAS_TOL;
        };
        let cost = -obj[width];
        if cost < last_cost - 1e-12 {
            last_cost = cost;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 2 * (m + 4) {
                bland = true;
            }
        }
        // Ratio test, Bland tie-break on basis index.
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > PIVOT_TOL {
                let ratio = t[i][width] / t[i][enter];
                if ratio < best - 1e-12
                    || (ratio < best + 1e-12
                        && leave.map_or(true, |l| basis[i] < basis[l]))
                {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            // Phase-1 cost is bounded below by zero; an unbounded ray only
            // occurs through numerical noise. Report feasible (safe side).
            return true;
        };
        let piv = t[leave][enter];
        for j in 0..=width {
            t[leave][j] /= piv;
        }
        for i in 0..m {
            if i != leave && t[i][enter].abs() > 0.0 {
                let f = t[i][enter];
                for j in 0..=width {
                    t[i][j] -= f * t[leave][j];
                }
            }
        }
        let f = obj[enter];
        if f.abs() > 0.0 {
            for j in 0..=width {
                obj[j] -= f * t[leave][j];
            }
        }
        basis[leave] = enter;
    }
    // Did not converge within the cap; claim feasible so callers that prune
    // on infeasibility stay conservative.
    true
}

/// Whether `rows` provably imply `c · x >= needed`, by exhibiting a Farkas
/// certificate: nonnegative weights on the `>=` rows and free weights on the
/// `=` rows whose combination reproduces `c` with right-hand side at least
/// `needed`. The certificate LP has only `n` constraint rows, so it stays
/// cheap no matter how many rows there are.
///
/// When no combination reproduces `c` at all, or the best reachable bound
/// falls short, the answer is `false` — the conservative side for callers
/// that prune on implication. An unbounded certificate value means the rows
/// are inconsistent, which also certifies the implication.
pub fn implies(n: usize, rows: &[LpRow], c: &[f64], needed: f64) -> bool {
    // Standard-form columns: one weight per row (>= rows nonnegative; = rows
    // split into two signs), then `n` artificials for phase 1.
    let m = rows.len();
    let n_split: usize = m + rows.iter().filter(|r| r.eq).count();
    let width = n_split + n;
    let mut col_row: Vec<(usize, f64)> = Vec::with_capacity(n_split);
    for (i, row) in rows.iter().enumerate() {
        col_row.push((i, 1.0));
        if row.eq {
            col_row.push((i, -1.0));
        }
    }

    // Constraint j: sum of weighted row coefficients equals c[j].
    let mut t = vec![vec![0.0f64; width + 1]; n];
    let mut basis = vec![usize::MAX; n];
    for (j, trow) in t.iter_mut().enumerate() {
        let flip = c[j] < 0.0;
        let s = if flip { -1.0 } else { 1.0 };
        for (k, &(i, sign)) in col_row.iter().enumerate() {
            trow[k] = s * sign * rows[i].coeffs[j];
        }
        trow[n_split + j] = 1.0;
        trow[width] = s * c[j];
        basis[j] = n_split + j;
    }
    // Objective value of each weight column is the row's rhs; artificials
    // carry a phase-1 cost instead.
    let mut value: Vec<f64> = col_row
        .iter()
        .map(|&(i, sign)| sign * rows[i].rhs)
        .collect();
    value.extend(std::iter::repeat_n(0.0, n));

    // Phase 1: drive the artificials out. Its objective is bounded below by
    // zero, so an apparently unbounded ray is numerical noise; answer on the
    // retaining side.
    let mut obj = vec![0.0f64; width + 1];
    for j in 0..n {
        for k in 0..=width {
            obj[k] -= t[j][k];
        }
    }
    for a in n_split..width {
        obj[a] = 0.0;
    }
    if !standard_min(&mut t, &mut basis, &mut obj, n_split) {
        return false;
    }
    if -obj[width] > FEAS_TOL {
        // No combination reproduces `c`.
        return false;
    }

    // Pivot out any artificial still basic at zero level so phase 2 cannot
    // push it positive; a row whose real part is all zeros is inert.
    for j in 0..n {
        if basis[j] >= n_split {
            let Some(enter) = (0..n_split).find(|&k| t[j][k].abs() > PIVOT_TOL) else {
                continue;
            };
            let piv = t[j][enter];
            for k in 0..=width {
                t[j][k] /= piv;
            }
            for i in 0..n {
                if i != j && t[i][enter] != 0.0 {
                    let f = t[i][enter];
                    for k in 0..=width {
                        t[i][k] -= f * t[j][k];
                    }
                }
            }
            basis[j] = enter;
        }
    }

    // Phase 2: maximize the certified bound (minimize its negation) over the
    // real columns only; artificials stay priced out at zero.
    let mut obj = vec![0.0f64; width + 1];
    for (k, &v) in value.iter().enumerate().take(n_split) {
        obj[k] = -v;
    }
    for j in 0..n {
        if basis[j] < n_split {
            let f = obj[basis[j]];
            if f != 0.0 {
                for k in 0..=width {
                    obj[k] -= f * t[j][k];
                }
            }
        }
    }
    if !standard_min(&mut t, &mut basis, &mut obj, n_split) {
        // Unbounded bound: the rows are inconsistent.
        return true;
    }
    // The reduced-cost row carries the negated minimization value, and the
    // minimized objective is the negated bound, so the bound is obj[width].
    obj[width] + 1e-12 >= needed
}

/// Simplex iterations on a standard-form tableau, minimizing the reduced
/// cost row in place. Columns at or beyond `limit` are never entered (the
/// phase-1 artificials). Returns `false` when the objective is unbounded.
fn standard_min(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    obj: &mut [f64],
    limit: usize,
) -> bool {
    let n = t.len();
    let width = obj.len() - 1;
    let max_iters = 100 * (n + width);
    let mut bland = false;
    let mut stalled = 0usize;
    let mut last = f64::NEG_INFINITY;
    for _ in 0..max_iters {
        let enter = if bland {
            (0..limit).find(|&j| obj[j] < -PIVOT_TOL)
        } else {
            (0..limit)
                .filter(|&j| obj[j] < -PIVOT_TOL)
                .min_by(|&a, &b| obj[a].partial_cmp(&obj[b]).unwrap())
        };
        let Some(enter) = enter else {
            return true;
        };
        // The tableau rhs carries the negated objective, so progress under
        // minimization pushes it upward.
        if obj[width] > last + 1e-12 {
            last = obj[width];
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 2 * (n + 4) {
                bland = true;
            }
        }
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..n {
            if t[i][enter] > PIVOT_TOL {
                let ratio = t[i][width] / t[i][enter];
                if ratio < best - 1e-12
                    || (ratio < best + 1e-12 && leave.map_or(true, |l| basis[i] < basis[l]))
                {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            return false;
        };
        let piv = t[leave][enter];
        for k in 0..=width {
            t[leave][k] /= piv;
        }
        for i in 0..n {
            if i != leave && t[i][enter] != 0.0 {
                let f = t[i][enter];
                for k in 0..=width {
                    t[i][k] -= f * t[leave][k];
                }
            }
        }
        let f = obj[enter];
        if f != 0.0 {
            for k in 0..=width {
                obj[k] -= f * t[leave][k];
            }
        }
        basis[leave] = enter;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_feasible_and_infeasible() {
        // x >= 1, -x >= -2  (1 <= x <= 2): feasible.
        assert!(feasible(
            1,
            &[LpRow::ge(vec![1.0], 1.0), LpRow::ge(vec![-1.0], -2.0)]
        ));
        // x >= 2, -x >= -1 (x <= 1): infeasible.
        assert!(!feasible(
            1,
            &[LpRow::ge(vec![1.0], 2.0), LpRow::ge(vec![-1.0], -1.0)]
        ));
    }

    #[test]
    fn equalities_and_free_variables() {
        // x + y = 1, x - y = 3  → x = 2, y = -1 (needs negative values).
        assert!(feasible(
            2,
            &[
                LpRow::eq(vec![1.0, 1.0], 1.0),
                LpRow::eq(vec![1.0, -1.0], 3.0)
            ]
        ));
        // Same plus y >= 0: infeasible.
        assert!(!feasible(
            2,
            &[
                LpRow::eq(vec![1.0, 1.0], 1.0),
                LpRow::eq(vec![1.0, -1.0], 3.0),
                LpRow::ge(vec![0.0, 1.0], 0.0)
            ]
        ));
    }

    #[test]
    fn redundant_rows_do_not_confuse() {
        let rows = vec![
            LpRow::ge(vec![1.0, 1.0], 2.0),
            LpRow::ge(vec![1.0, 0.0], 1.0),
            LpRow::ge(vec![0.0, 1.0], 1.0),
            LpRow::ge(vec![1.0, 1.0], 2.0),
        ];
        assert!(feasible(2, &rows));
    }

    #[test]
    fn tight_equality_chain() {
        // x = y, y = z, z = 5, x >= 5, -x >= -5.
        let rows = vec![
            LpRow::eq(vec![1.0, -1.0, 0.0], 0.0),
            LpRow::eq(vec![0.0, 1.0, -1.0], 0.0),
            LpRow::eq(vec![0.0, 0.0, 1.0], 5.0),
            LpRow::ge(vec![1.0, 0.0, 0.0], 5.0),
            LpRow::ge(vec![-1.0, 0.0, 0.0], -5.0),
        ];
        assert!(feasible(3, &rows));
        let mut rows = rows;
        rows.push(LpRow::ge(vec![1.0, 0.0, 0.0], 5.1));
        assert!(!feasible(3, &rows));
    }

    #[test]
    fn degenerate_zero_rows() {
        assert!(feasible(2, &[LpRow::ge(vec![0.0, 0.0], 0.0)]));
        assert!(!feasible(2, &[LpRow::ge(vec![0.0, 0.0], 1.0)]));
        assert!(feasible(2, &[]));
    }

    #[test]
    fn implies_certifies_conic_sums() {
        let rows = vec![
            LpRow::ge(vec![1.0, 0.0], 1.0),
            LpRow::ge(vec![0.0, 1.0], 1.0),
        ];
        // x + y >= 2 is the weight-(1,1) combination, tight at the corner.
        assert!(implies(2, &rows, &[1.0, 1.0], 2.0));
        assert!(implies(2, &rows, &[1.0, 1.0], 1.5));
        // Nothing reaches past the corner.
        assert!(!implies(2, &rows, &[1.0, 1.0], 2.5));
        // No nonnegative combination produces a negated coefficient.
        assert!(!implies(2, &rows, &[-1.0, 0.0], -2.0));
    }

    #[test]
    fn implies_uses_equalities_with_free_sign() {
        // x = 3 together with y >= 1 gives y - x >= -2 (weight -1 on the
        // equality) and x + y >= 4 (weight +1).
        let rows = vec![
            LpRow::eq(vec![1.0, 0.0], 3.0),
            LpRow::ge(vec![0.0, 1.0], 1.0),
        ];
        assert!(implies(2, &rows, &[-1.0, 1.0], -2.0));
        assert!(implies(2, &rows, &[1.0, 1.0], 4.0));
        assert!(!implies(2, &rows, &[1.0, 1.0], 4.5));
    }

    #[test]
    fn implies_detects_inconsistent_rows() {
        // An empty system certifies anything with value 0 only.
        assert!(!implies(1, &[], &[1.0], 1.0));
        // Contradictory bounds certify everything.
        let rows = vec![
            LpRow::ge(vec![1.0], 2.0),
            LpRow::ge(vec![-1.0], -1.0),
        ];
        assert!(implies(1, &rows, &[1.0], 100.0));
    }
}
