//! Exact offline optima: the hindsight LP, its dual price, and the dual of
//! the expected problem for finite-support laws.

mod knapsack;
mod simplex;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use knapsack::solve_knapsack_m1;
pub use simplex::{dump_bounded, solve_bounded, BoundedLp, SimplexOptions, SimplexSolution, VarStatus};

use crate::distributions::FiniteSupport;
use crate::dual_geometry::{ConvexSet, OptimalFace};
use crate::domain::Instance;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineSolution {
    pub value: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub status: SolveStatus,
    /// Simplex pivots (0 for the greedy path).
    pub iterations: usize,
}

/// Hindsight optimum for `b = T d`: the greedy knapsack when `m = 1` with
/// nonnegative weights, the simplex otherwise.
pub fn solve(instance: &Instance) -> Result<OfflineSolution> {
    let b = instance.budget();
    if instance.m == 1 && instance.a.iter().all(|v| *v >= 0.0) {
        solve_knapsack_m1(&instance.c, &instance.a, b[0])
    } else {
        solve_simplex(instance, &b, &SimplexOptions::default())
    }
}

/// Bounded-variable simplex on `max <c,x> s.t. Ax <= b, 0 <= x <= 1`.
/// Identical columns are merged into one variable with upper bound equal to
/// their multiplicity, which makes finite-support instances tiny.
pub fn solve_simplex(instance: &Instance, b: &[f64], opts: &SimplexOptions) -> Result<OfflineSolution> {
    let m = instance.m;
    if b.len() != m {
        return Err(Error::InvalidArgument(format!("b has length {}, expected {m}", b.len())));
    }
    let horizon = instance.horizon();
    let mut group_of = Vec::with_capacity(horizon);
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut cost = Vec::new();
    let mut cols = Vec::new();
    let mut upper: Vec<f64> = Vec::new();
    for arr in instance.iter() {
        let mut key = Vec::with_capacity(m + 1);
        key.push(arr.c.to_bits());
        key.extend(arr.a.iter().map(|v| v.to_bits()));
        let g = *index.entry(key).or_insert_with(|| {
            cost.push(arr.c);
            cols.extend_from_slice(arr.a);
            upper.push(0.0);
            upper.len() - 1
        });
        upper[g] += 1.0;
        group_of.push(g);
    }
    let lp = BoundedLp { m, cost: &cost, cols: &cols, upper: &upper, b };
    let sol = solve_bounded(lp, opts).map_err(|e| match e {
        Error::Simplex { reason, .. } => Error::Simplex { reason, dump: dump_instance(instance, b) },
        other => other,
    })?;
    let x: Vec<f64> = group_of.iter().map(|&g| sol.x[g] / upper[g]).collect();
    let value = instance.c.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(OfflineSolution { value, x, y: sol.y, status: SolveStatus::Optimal, iterations: sol.iterations })
}

/// Optimum of the expected dual `min <d,y> + sum_k p_k [c_k - <a_k,y>]_+`
/// over `y >= 0`, together with the full optimal set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedDual {
    /// `value` is `f(y*)`; `x` holds the per-atom acceptance probabilities.
    pub solution: OfflineSolution,
    pub face: OptimalFace,
}

pub fn solve_expected_dual_finite(support: &FiniteSupport, d: &[f64]) -> Result<ExpectedDual> {
    solve_expected_dual_finite_with(support, d, &SimplexOptions::default())
}

pub fn solve_expected_dual_finite_with(
    support: &FiniteSupport,
    d: &[f64],
    opts: &SimplexOptions,
) -> Result<ExpectedDual> {
    let m = support.dim();
    if d.len() != m {
        return Err(Error::InvalidArgument(format!("d has length {}, expected {m}", d.len())));
    }
    let k = support.len();
    let mut cost = Vec::with_capacity(k);
    let mut cols = Vec::with_capacity(k * m);
    for (atom, p) in support.atoms.iter().zip(&support.probs) {
        cost.push(p * atom.c);
        cols.extend(atom.a.iter().map(|v| p * v));
    }
    let upper = vec![1.0; k];
    let lp = BoundedLp { m, cost: &cost, cols: &cols, upper: &upper, b: d };
    let sol = solve_bounded(lp, opts)?;

    let tol = opts.feas_tol;
    let mut constraints = Vec::new();
    let mut equalities: Vec<Vec<f64>> = Vec::new();
    for i in 0..m {
        if sol.slack[i] > tol * d[i].abs().max(1.0) {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            equalities.push(e.clone());
            constraints.push(ConvexSet::HyperPlane { normal: e, rhs: 0.0 });
        }
    }
    for (atom, z) in support.atoms.iter().zip(&sol.x) {
        let normal = atom.a.clone();
        if *z > tol && *z < 1.0 - tol {
            equalities.push(normal.clone());
            constraints.push(ConvexSet::HyperPlane { normal, rhs: atom.c });
        } else if *z >= 1.0 - tol {
            constraints.push(ConvexSet::HalfSpace { normal, rhs: atom.c });
        } else {
            constraints.push(ConvexSet::HalfSpace {
                normal: normal.iter().map(|v| -v).collect(),
                rhs: -atom.c,
            });
        }
    }
    let singleton = rank(&equalities, m) == m;
    let face = OptimalFace { constraints, vertex: sol.y.clone(), singleton };
    Ok(ExpectedDual {
        solution: OfflineSolution {
            value: sol.primal_value,
            x: sol.x,
            y: sol.y,
            status: SolveStatus::Optimal,
            iterations: sol.iterations,
        },
        face,
    })
}

fn rank(rows: &[Vec<f64>], m: usize) -> usize {
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut r = 0;
    for col in 0..m {
        let Some(p) = (r..a.len()).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())) else {
            break;
        };
        if a[p][col].abs() < 1e-9 {
            continue;
        }
        a.swap(r, p);
        for i in r + 1..a.len() {
            let f = a[i][col] / a[r][col];
            for k in col..m {
                a[i][k] -= f * a[r][k];
            }
        }
        r += 1;
    }
    r
}

/// Largest violation of the optimality conditions `c_t < <a_t,y> => x_t = 0`
/// and `c_t > <a_t,y> => x_t = 1`, plus `y_i (b_i - (Ax)_i)`.
pub fn complementary_slackness_residual(instance: &Instance, b: &[f64], sol: &OfflineSolution) -> f64 {
    let m = instance.m;
    let mut worst: f64 = 0.0;
    let mut used = vec![0.0; m];
    for (arr, x) in instance.iter().zip(&sol.x) {
        let red = arr.c - arr.a.iter().zip(&sol.y).map(|(a, y)| a * y).sum::<f64>();
        if red < 0.0 {
            worst = worst.max(-red * x);
        } else {
            worst = worst.max(red * (1.0 - x));
        }
        for (u, a) in used.iter_mut().zip(arr.a) {
            *u += a * x;
        }
    }
    for i in 0..m {
        worst = worst.max((sol.y[i] * (b[i] - used[i])).abs());
    }
    worst
}

/// Plain-text instance dump: `T m`, then `b b_1 .. b_m`, then one row
/// `c_t a_t1 .. a_tm` per arrival.
pub fn dump_instance(instance: &Instance, b: &[f64]) -> String {
    let mut out = format!("# olplab instance dump\n{} {}\nb", instance.horizon(), instance.m);
    for v in b {
        out.push_str(&format!(" {v:e}"));
    }
    out.push('\n');
    for arr in instance.iter() {
        out.push_str(&format!("{:e}", arr.c));
        for v in arr.a {
            out.push_str(&format!(" {v:e}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Arrival;

    #[test]
    fn single_atom_expected_dual() {
        let support = FiniteSupport::new(vec![Arrival::new(1.0, vec![2.0])], vec![1.0]).unwrap();
        let sol = solve_expected_dual_finite(&support, &[1.0]).unwrap();
        assert!((sol.solution.y[0] - 0.5).abs() < 1e-12);
        assert!((sol.solution.value - 0.5).abs() < 1e-12);
        assert!(sol.face.singleton);
    }

    #[test]
    fn slack_resources_give_zero_price() {
        let support = FiniteSupport::new(
            vec![Arrival::new(1.0, vec![0.5, 0.1]), Arrival::new(2.0, vec![0.2, 0.3])],
            vec![0.4, 0.6],
        )
        .unwrap();
        let sol = solve_expected_dual_finite(&support, &[5.0, 5.0]).unwrap();
        assert_eq!(sol.solution.y, vec![0.0, 0.0]);
    }

    #[test]
    fn duplicates_are_merged_and_expanded() {
        let arrivals: Vec<Arrival> =
            (0..10).map(|t| Arrival::new(1.0 + (t % 2) as f64, vec![1.0, 1.0])).collect();
        let inst = Instance::from_arrivals(&arrivals, vec![0.35, 0.5]).unwrap();
        let sol = solve_simplex(&inst, &inst.budget(), &SimplexOptions::default()).unwrap();
        // 3.5 units: all five c=2 items would need 5 > 3.5
        assert!((sol.value - 7.0).abs() < 1e-12);
        assert!((sol.y[0] - 2.0).abs() < 1e-12);
        assert!(complementary_slackness_residual(&inst, &inst.budget(), &sol) < 1e-9);
    }

    #[test]
    fn dump_format() {
        let inst = Instance::from_arrivals(&[Arrival::new(1.0, vec![2.0])], vec![0.5]).unwrap();
        let d = dump_instance(&inst, &inst.budget());
        assert!(d.starts_with("# olplab instance dump\n1 1\nb 5e-1\n"));
    }
}
