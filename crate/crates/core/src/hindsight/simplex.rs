//! Dense bounded-variable dual simplex for
//!
//! ```text
//! max  <c, x>   s.t.  A x + s = b,  0 <= x <= u,  s >= 0
//! ```
//!
//! with `A` of size `m x n`, `m` small and `n` large. The basis is `m x m`
//! and is refactored from scratch every iteration. Starting from the slack
//! basis with every profitable column at its upper bound is dual feasible,
//! so no phase one is needed. The ratio test is the bound-flipping (long
//! step) variant: all breakpoints that keep the dual objective increasing
//! are passed in one iteration by flipping those columns between bounds,
//! which turns a single-row problem into one sort.
//!
//! Anti-cycling: ties in the ratio test break by lowest variable index, and
//! after a run of degenerate iterations the leaving row switches from
//! largest infeasibility to lowest basic index (Bland's rule).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Minimum `|alpha|` for a column to take part in the ratio test.
    pub pivot_tol: f64,
    /// Primal feasibility tolerance on basic values.
    pub feas_tol: f64,
    pub max_iterations: usize,
    /// Consecutive degenerate iterations before Bland's rule takes over.
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { pivot_tol: 1e-10, feas_tol: 1e-9, max_iterations: 50_000, bland_after: 25 }
    }
}

/// Problem data; column `j` of `A` is `cols[j*m..(j+1)*m]`.
#[derive(Debug, Clone, Copy)]
pub struct BoundedLp<'a> {
    pub m: usize,
    pub cost: &'a [f64],
    pub cols: &'a [f64],
    pub upper: &'a [f64],
    pub b: &'a [f64],
}

impl BoundedLp<'_> {
    fn n(&self) -> usize {
        self.cost.len()
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.m..(j + 1) * self.m]
    }

    /// `<v, A_var>` for structural or slack variables.
    fn dot_col(&self, v: &[f64], var: usize) -> f64 {
        let n = self.n();
        if var < n {
            self.col(var).iter().zip(v).map(|(a, b)| a * b).sum()
        } else {
            v[var - n]
        }
    }

    fn upper_of(&self, var: usize) -> f64 {
        if var < self.n() {
            self.upper[var]
        } else {
            f64::INFINITY
        }
    }

    fn min_cost(&self, var: usize) -> f64 {
        if var < self.n() {
            -self.cost[var]
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic(usize),
    AtLower,
    AtUpper,
}

#[derive(Debug, Clone)]
pub struct SimplexSolution {
    pub x: Vec<f64>,
    pub slack: Vec<f64>,
    pub y: Vec<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    pub status: Vec<VarStatus>,
    /// Basic variable per row; indices `>= n` are slacks.
    pub basis: Vec<usize>,
    pub iterations: usize,
}

/// Solves the LP; fails on negative `b`, numerical breakdown, or when the
/// iteration cap is hit.
pub fn solve_bounded(lp: BoundedLp<'_>, opts: &SimplexOptions) -> Result<SimplexSolution> {
    let m = lp.m;
    let n = lp.n();
    if lp.b.iter().any(|v| *v < 0.0) {
        return Err(Error::Infeasible(format!("b = {:?}", lp.b)));
    }
    let total = n + m;
    let mut status: Vec<VarStatus> = (0..n)
        .map(|j| if lp.cost[j] > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower })
        .collect();
    status.extend((0..m).map(VarStatus::Basic));
    let mut basis: Vec<usize> = (n..total).collect();
    let mut binv = identity(m);

    let mut pi = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut x_b = vec![0.0; m];
    let mut rho = vec![0.0; m];
    let mut candidates: Vec<(f64, usize, f64)> = Vec::new();
    let mut degenerate_run = 0usize;
    let mut bland = false;
    let mut iterations = 0usize;

    loop {
        // duals and basic values for the current basis
        for k in 0..m {
            pi[k] = (0..m).map(|r| lp.min_cost(basis[r]) * binv[r * m + k]).sum();
        }
        rhs.copy_from_slice(lp.b);
        for j in 0..n {
            if status[j] == VarStatus::AtUpper {
                let u = lp.upper[j];
                for (ri, ai) in rhs.iter_mut().zip(lp.col(j)) {
                    *ri -= u * ai;
                }
            }
        }
        for r in 0..m {
            x_b[r] = (0..m).map(|k| binv[r * m + k] * rhs[k]).sum();
        }

        // leaving row
        let mut leave: Option<(usize, f64, bool)> = None; // (row, infeasibility, below)
        for r in 0..m {
            let var = basis[r];
            let ub = lp.upper_of(var);
            let (inf, below) = if x_b[r] < -opts.feas_tol {
                (-x_b[r], true)
            } else if x_b[r] > ub + opts.feas_tol * ub.max(1.0) {
                (x_b[r] - ub, false)
            } else {
                continue;
            };
            let better = match leave {
                None => true,
                Some((r0, inf0, _)) => {
                    if bland {
                        var < basis[r0]
                    } else {
                        inf > inf0
                    }
                }
            };
            if better {
                leave = Some((r, inf, below));
            }
        }
        let Some((row, infeas, below)) = leave else {
            break;
        };

        iterations += 1;
        if iterations > opts.max_iterations {
            return Err(simplex_error(lp, "iteration limit reached (numerical degeneracy?)"));
        }

        // bound-flipping ratio test along row `row`
        rho.copy_from_slice(&binv[row * m..(row + 1) * m]);
        candidates.clear();
        for var in 0..total {
            let st = status[var];
            if matches!(st, VarStatus::Basic(_)) {
                continue;
            }
            let alpha = lp.dot_col(&rho, var);
            if alpha.abs() <= opts.pivot_tol {
                continue;
            }
            let eligible = match (st, below) {
                (VarStatus::AtLower, true) => alpha < 0.0,
                (VarStatus::AtUpper, true) => alpha > 0.0,
                (VarStatus::AtLower, false) => alpha > 0.0,
                (VarStatus::AtUpper, false) => alpha < 0.0,
                (VarStatus::Basic(_), _) => false,
            };
            if !eligible {
                continue;
            }
            let d = lp.min_cost(var) - lp.dot_col(&pi, var);
            let ratio = d.abs() / alpha.abs();
            candidates.push((ratio, var, alpha));
        }
        if candidates.is_empty() {
            return Err(Error::Infeasible("dual ray found: no candidate to enter".into()));
        }
        candidates.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut slope = infeas;
        let mut entering = None;
        let mut flips = Vec::new();
        for &(ratio, var, alpha) in &candidates {
            let range = lp.upper_of(var);
            let next = slope - alpha.abs() * range;
            if range.is_finite() && next > opts.feas_tol {
                flips.push(var);
                slope = next;
            } else {
                entering = Some((var, ratio));
                break;
            }
        }
        let Some((enter, step)) = entering else {
            return Err(Error::Infeasible("dual unbounded after passing all breakpoints".into()));
        };
        for var in flips {
            status[var] = match status[var] {
                VarStatus::AtLower => VarStatus::AtUpper,
                VarStatus::AtUpper => VarStatus::AtLower,
                basic => basic,
            };
        }

        if step <= opts.pivot_tol {
            degenerate_run += 1;
            if degenerate_run >= opts.bland_after {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }

        let leaving = basis[row];
        status[leaving] = if below { VarStatus::AtLower } else { VarStatus::AtUpper };
        status[enter] = VarStatus::Basic(row);
        basis[row] = enter;
        binv = invert_basis(lp, &basis)
            .ok_or_else(|| simplex_error(lp, "singular basis after pivot"))?;
    }

    // assemble
    let mut x = vec![0.0; n];
    for j in 0..n {
        x[j] = match status[j] {
            VarStatus::AtLower => 0.0,
            VarStatus::AtUpper => lp.upper[j],
            VarStatus::Basic(r) => x_b[r].clamp(0.0, lp.upper[j]),
        };
    }
    let mut slack = vec![0.0; m];
    for (r, &var) in basis.iter().enumerate() {
        if var >= n {
            slack[var - n] = x_b[r].max(0.0);
        }
    }
    let y: Vec<f64> = pi.iter().map(|p| (-p).max(0.0)).collect();
    let primal_value: f64 = lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    let dual_value = lp.b.iter().zip(&y).map(|(b, y)| b * y).sum::<f64>()
        + (0..n)
            .map(|j| {
                let red = lp.cost[j] - lp.col(j).iter().zip(&y).map(|(a, v)| a * v).sum::<f64>();
                lp.upper[j] * red.max(0.0)
            })
            .sum::<f64>();
    let scale = primal_value.abs().max(dual_value.abs()).max(1.0);
    if (primal_value - dual_value).abs() > 1e-8 * scale {
        return Err(simplex_error(
            lp,
            &format!("duality gap {:.3e} after {iterations} iterations", primal_value - dual_value),
        ));
    }
    Ok(SimplexSolution { x, slack, y, primal_value, dual_value, status, basis, iterations })
}

fn identity(m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        out[i * m + i] = 1.0;
    }
    out
}

/// Gauss–Jordan inverse of the basis matrix with partial pivoting.
fn invert_basis(lp: BoundedLp<'_>, basis: &[usize]) -> Option<Vec<f64>> {
    let m = lp.m;
    let n = lp.n();
    // B[i][r] = A_{basis[r]}[i]
    let mut a = vec![0.0; m * m];
    for (r, &var) in basis.iter().enumerate() {
        if var < n {
            for (i, v) in lp.col(var).iter().enumerate() {
                a[i * m + r] = *v;
            }
        } else {
            a[(var - n) * m + r] = 1.0;
        }
    }
    let mut inv = identity(m);
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))?;
        if a[piv * m + col].abs() < 1e-13 {
            return None;
        }
        if piv != col {
            for k in 0..m {
                a.swap(piv * m + k, col * m + k);
                inv.swap(piv * m + k, col * m + k);
            }
        }
        let p = a[col * m + col];
        for k in 0..m {
            a[col * m + k] /= p;
            inv[col * m + k] /= p;
        }
        for i in 0..m {
            if i != col {
                let f = a[i * m + col];
                if f != 0.0 {
                    for k in 0..m {
                        a[i * m + k] -= f * a[col * m + k];
                        inv[i * m + k] -= f * inv[col * m + k];
                    }
                }
            }
        }
    }
    Some(inv)
}

fn simplex_error(lp: BoundedLp<'_>, reason: &str) -> Error {
    Error::Simplex { reason: reason.to_string(), dump: dump_bounded(lp) }
}

/// Plain-text dump: a header line `n m`, the line `b ...`, then one line
/// per column `c u a_1 .. a_m`.
pub fn dump_bounded(lp: BoundedLp<'_>) -> String {
    let mut out = format!("# olplab bounded LP dump\n{} {}\n", lp.n(), lp.m);
    out.push('b');
    for v in lp.b {
        out.push_str(&format!(" {v:e}"));
    }
    out.push('\n');
    for j in 0..lp.n() {
        out.push_str(&format!("{:e} {:e}", lp.cost[j], lp.upper[j]));
        for v in lp.col(j) {
            out.push_str(&format!(" {v:e}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(cost: &[f64], cols: &[f64], upper: &[f64], b: &[f64]) -> SimplexSolution {
        let lp = BoundedLp { m: b.len(), cost, cols, upper, b };
        solve_bounded(lp, &SimplexOptions::default()).unwrap()
    }

    #[test]
    fn single_row_is_greedy() {
        let s = solve(&[3.0, 2.0, 1.0], &[1.0, 1.0, 1.0], &[1.0; 3], &[2.0]);
        assert!((s.primal_value - 5.0).abs() < 1e-12);
        assert_eq!(s.x, vec![1.0, 1.0, 0.0]);

        let s = solve(&[3.0, 2.0], &[2.0, 2.0], &[1.0; 2], &[3.0]);
        assert!((s.primal_value - 4.0).abs() < 1e-12);
        assert!((s.x[1] - 0.5).abs() < 1e-12);
        assert!((s.y[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_budget_blocks_consuming_columns() {
        let s = solve(&[1.0, 2.0], &[1.0, 0.5, 2.0, 1.0], &[1.0; 2], &[0.0, 0.0]);
        assert!(s.primal_value.abs() < 1e-12);
        assert!(s.x.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn two_rows_small() {
        // max x1 + x2 s.t. x1 + 2 x2 <= 2, 2 x1 + x2 <= 2 -> x = (2/3, 2/3)
        let s = solve(&[1.0, 1.0], &[1.0, 2.0, 2.0, 1.0], &[1.0; 2], &[2.0, 2.0]);
        assert!((s.primal_value - 4.0 / 3.0).abs() < 1e-12);
        assert!((s.y[0] - 1.0 / 3.0).abs() < 1e-12 && (s.y[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn negative_budget_is_infeasible() {
        let lp = BoundedLp { m: 1, cost: &[1.0], cols: &[1.0], upper: &[1.0], b: &[-1.0] };
        assert!(matches!(solve_bounded(lp, &SimplexOptions::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn dump_has_header_and_rows() {
        let lp = BoundedLp { m: 1, cost: &[1.0, 2.0], cols: &[1.0, 3.0], upper: &[1.0, 1.0], b: &[1.0] };
        let d = dump_bounded(lp);
        assert_eq!(d.lines().count(), 5);
        assert!(d.lines().nth(1).unwrap().starts_with("2 1"));
    }
}
