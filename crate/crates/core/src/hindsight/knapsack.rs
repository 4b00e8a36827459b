//! Exact fractional knapsack for the single-resource case.

use super::{OfflineSolution, SolveStatus};
use crate::error::{Error, Result};

/// Greedy by ratio `c/a` (zero-weight profitable items first, ties by
/// index). The dual is the ratio of the first item that did not fully fit,
/// or zero when every profitable item fits.
pub fn solve_knapsack_m1(c: &[f64], a: &[f64], b: f64) -> Result<OfflineSolution> {
    if c.len() != a.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rewards but {} weights",
            c.len(),
            a.len()
        )));
    }
    if a.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidArgument("knapsack weights must be nonnegative".into()));
    }
    if b < 0.0 {
        return Err(Error::Infeasible(format!("negative capacity {b}")));
    }
    let mut order: Vec<usize> = (0..c.len()).filter(|&t| c[t] > 0.0).collect();
    // a = 0 sorts as +inf ratio; stable sort keeps index order on ties
    order.sort_by(|&i, &j| ratio(c[j], a[j]).total_cmp(&ratio(c[i], a[i])));

    let mut x = vec![0.0; c.len()];
    let mut remaining = b;
    let mut y = 0.0;
    let mut value = 0.0;
    for t in order {
        if a[t] <= remaining {
            x[t] = 1.0;
            remaining -= a[t];
            value += c[t];
        } else {
            x[t] = remaining / a[t];
            value += c[t] * x[t];
            y = c[t] / a[t];
            break;
        }
    }
    Ok(OfflineSolution { value, x, y: vec![y], status: SolveStatus::Optimal, iterations: 0 })
}

fn ratio(c: f64, a: f64) -> f64 {
    if a == 0.0 {
        f64::INFINITY
    } else {
        c / a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_examples() {
        let s = solve_knapsack_m1(&[3.0, 2.0, 1.0], &[1.0, 1.0, 1.0], 2.0).unwrap();
        assert_eq!(s.value, 5.0);
        assert_eq!(s.x, vec![1.0, 1.0, 0.0]);

        let s = solve_knapsack_m1(&[3.0, 2.0], &[2.0, 2.0], 3.0).unwrap();
        assert_eq!(s.value, 4.0);
        assert_eq!(s.x, vec![1.0, 0.5]);
        assert_eq!(s.y, vec![1.0]);
    }

    #[test]
    fn slack_capacity_accepts_all_profitable() {
        let s = solve_knapsack_m1(&[1.0, -1.0, 0.5], &[1.0, 1.0, 1.0], 10.0).unwrap();
        assert_eq!(s.x, vec![1.0, 0.0, 1.0]);
        assert_eq!(s.y, vec![0.0]);
    }

    #[test]
    fn free_items_come_first() {
        let s = solve_knapsack_m1(&[0.1, 5.0], &[0.0, 1.0], 0.0).unwrap();
        assert_eq!(s.x, vec![1.0, 0.0]);
        assert_eq!(s.y, vec![5.0]);
    }
}
