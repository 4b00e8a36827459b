//! LP-resolving baseline (a stand-in for the LP-based methods, flagged as a
//! proxy in every report): periodically re-solve the hindsight LP on the
//! arrivals seen so far, scaled to the remaining average budget, and price
//! the following arrivals with its dual.

use crate::domain::{DecisionTrace, Instance, MarketConfig};
use crate::dual_geometry::decide;
use crate::error::{Error, Result};
use crate::hindsight;

#[derive(Debug, Clone)]
pub struct ResolvingRun {
    pub trace: DecisionTrace,
    pub last_price: Vec<f64>,
    pub resolves: usize,
    /// Set when a resolve point found a negative remaining budget; prices
    /// from the last successful solve were kept.
    pub infeasible: bool,
}

/// At period `t` (1-based) with `(t - 1) % resolve_every == 0`, solve
/// `max sum_{s<=t} c_s x_s` s.t. `sum_{s<=t} a_s x_s <= t (b - used) / (T - t + 1)`
/// and adopt its dual. An arrival is accepted when it clears the price and
/// fits in the remaining budget.
pub fn resolving_baseline(instance: &Instance, resolve_every: usize) -> Result<ResolvingRun> {
    if resolve_every < 1 {
        return Err(Error::InvalidArgument("resolve_every must be >= 1".into()));
    }
    let horizon = instance.horizon();
    let m = instance.m;
    let b = instance.budget();
    let mut trace = DecisionTrace::with_capacity(m, horizon);
    let mut y = vec![0.0; m];
    let mut resolves = 0;
    let mut infeasible = false;
    for t in 0..horizon {
        let remaining: Vec<f64> = b.iter().zip(&trace.consumption).map(|(b, u)| b - u).collect();
        if t % resolve_every == 0 {
            if remaining.iter().any(|r| *r < 0.0) {
                infeasible = true;
            } else {
                let left = (horizon - t) as f64;
                let mut seen = instance.prefix(t + 1);
                seen.d = remaining.iter().map(|r| r / left).collect();
                y = hindsight::solve(&seen)?.y;
                resolves += 1;
            }
        }
        let arr = instance.arrival(t);
        let fits = arr.a.iter().zip(&remaining).all(|(a, r)| *a <= *r);
        let accept = fits && decide(&y, arr);
        trace.push(arr, if accept { 1.0 } else { 0.0 });
    }
    Ok(ResolvingRun { trace, last_price: y, resolves, infeasible })
}

pub fn run_resolving_baseline(config: &MarketConfig, resolve_every: usize) -> Result<DecisionTrace> {
    Ok(resolving_baseline(&config.generate(), resolve_every)?.trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Arrival;

    #[test]
    fn single_resolve_uses_first_arrival_price() {
        // first LP: one item c = 0.8, a = 1, capacity 0.5 -> price 0.8
        let arrivals: Vec<Arrival> =
            [0.8, 0.5, 0.9, 0.1].iter().map(|&c| Arrival::new(c, vec![1.0])).collect();
        let inst = Instance::from_arrivals(&arrivals, vec![0.5]).unwrap();
        let run = resolving_baseline(&inst, 4).unwrap();
        assert_eq!(run.resolves, 1);
        assert_eq!(run.last_price, vec![0.8]);
        assert_eq!(run.trace.x, vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn stationary_single_atom_gives_constant_price() {
        let arrivals = vec![Arrival::new(1.0, vec![2.0]); 50];
        let inst = Instance::from_arrivals(&arrivals, vec![0.5]).unwrap();
        let run = resolving_baseline(&inst, 1).unwrap();
        assert_eq!(run.resolves, 50);
        assert!(!run.infeasible);
        assert!((run.last_price[0] - 0.5).abs() < 1e-12);
    }
}
