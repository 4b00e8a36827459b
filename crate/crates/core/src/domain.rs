//! Instance, trace and score types shared by every policy.
//!
//! An OLP instance is a horizon of `T` arrivals `(c_t, a_t)` with a
//! per-period resource vector `d`; the total budget is `b = T * d`.
//! Policies produce a [`DecisionTrace`] which is scored against the
//! hindsight LP optimum by [`regret`] and [`violation`].

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, StreamRng};
use crate::error::{Error, Result};

/// One customer: a reward and a resource-request vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub c: f64,
    pub a: Vec<f64>,
}

impl Arrival {
    pub fn new(c: f64, a: Vec<f64>) -> Self {
        Self { c, a }
    }

    pub fn view(&self) -> ArrivalView<'_> {
        ArrivalView { c: self.c, a: &self.a }
    }
}

/// Borrowed arrival, usually a row of an [`Instance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalView<'a> {
    pub c: f64,
    pub a: &'a [f64],
}

impl ArrivalView<'_> {
    pub fn to_owned(&self) -> Arrival {
        Arrival::new(self.c, self.a.to_vec())
    }
}

/// Bounds from the standing assumptions: `|c| <= c_max`, `|a_i| <= a_max`,
/// `d_lo <= d_i <= d_hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsSpec {
    pub m: usize,
    pub a_max: f64,
    pub c_max: f64,
    pub d_lo: f64,
    pub d_hi: f64,
    /// Set when a bound is a 99.999th-percentile envelope of an unbounded law
    /// rather than an almost-sure bound.
    pub envelope: bool,
}

impl BoundsSpec {
    pub fn new(m: usize, a_max: f64, c_max: f64, d_lo: f64, d_hi: f64) -> Result<Self> {
        let all_positive = [a_max, c_max, d_lo, d_hi].iter().all(|v| *v > 0.0 && v.is_finite());
        if m == 0 || !all_positive || d_lo > d_hi {
            return Err(Error::InvalidArgument(format!(
                "bounds must be positive with d_lo <= d_hi (m={m}, a_max={a_max}, \
                 c_max={c_max}, d_lo={d_lo}, d_hi={d_hi})"
            )));
        }
        Ok(Self { m, a_max, c_max, d_lo, d_hi, envelope: false })
    }

    pub fn with_envelope(mut self, envelope: bool) -> Self {
        self.envelope = envelope;
        self
    }

    /// Subgradient norm bound `sqrt(m) * (a_max + d_hi)`.
    pub fn subgradient_bound(&self) -> f64 {
        (self.m as f64).sqrt() * (self.a_max + self.d_hi)
    }

    /// Radius `c_max / d_lo` of the ball containing every optimal dual.
    pub fn dual_radius(&self) -> f64 {
        self.c_max / self.d_lo
    }

    /// `m (a_max + d_hi)^2`, the recurring second-moment constant.
    pub fn sq_spread(&self) -> f64 {
        self.m as f64 * (self.a_max + self.d_hi).powi(2)
    }
}

/// One OLP instance family member: horizon, resources, arrival law and seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketConfig {
    pub horizon: usize,
    pub m: usize,
    pub d: Vec<f64>,
    pub dist: DistributionSpec,
    pub seed: u64,
}

impl MarketConfig {
    pub fn new(horizon: usize, d: Vec<f64>, dist: DistributionSpec, seed: u64) -> Result<Self> {
        let m = dist.dim();
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be >= 1".into()));
        }
        if d.len() != m {
            return Err(Error::InvalidArgument(format!(
                "resource vector has length {} but the distribution has m = {m}",
                d.len()
            )));
        }
        if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("resources must be positive: {d:?}")));
        }
        Ok(Self { horizon, m, d, dist, seed })
    }

    pub fn budget(&self) -> Vec<f64> {
        self.d.iter().map(|di| di * self.horizon as f64).collect()
    }

    /// Draws the arrival sequence from the arrival substream of `seed`.
    pub fn generate(&self) -> Instance {
        let mut rng = StreamRng::arrivals(self.seed);
        let mut c = Vec::with_capacity(self.horizon);
        let mut a = vec![0.0; self.horizon * self.m];
        for row in a.chunks_exact_mut(self.m) {
            c.push(self.dist.sample_into(&mut rng, row));
        }
        Instance { m: self.m, d: self.d.clone(), c, a }
    }
}

/// A realized arrival sequence stored row-major, plus the resource vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub m: usize,
    pub d: Vec<f64>,
    pub c: Vec<f64>,
    /// `T x m`, row `t` is `a_t`.
    pub a: Vec<f64>,
}

impl Instance {
    pub fn from_arrivals(arrivals: &[Arrival], d: Vec<f64>) -> Result<Self> {
        let m = d.len();
        if m == 0 {
            return Err(Error::InvalidArgument("m must be >= 1".into()));
        }
        let mut c = Vec::with_capacity(arrivals.len());
        let mut a = Vec::with_capacity(arrivals.len() * m);
        for arr in arrivals {
            if arr.a.len() != m {
                return Err(Error::InvalidArgument(format!(
                    "arrival has {} resources, expected {m}",
                    arr.a.len()
                )));
            }
            c.push(arr.c);
            a.extend_from_slice(&arr.a);
        }
        Ok(Self { m, d, c, a })
    }

    pub fn horizon(&self) -> usize {
        self.c.len()
    }

    pub fn arrival(&self, t: usize) -> ArrivalView<'_> {
        ArrivalView { c: self.c[t], a: &self.a[t * self.m..(t + 1) * self.m] }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = ArrivalView<'_>> + Clone + '_ {
        self.c
            .iter()
            .zip(self.a.chunks_exact(self.m))
            .map(|(&c, a)| ArrivalView { c, a })
    }

    pub fn budget(&self) -> Vec<f64> {
        let t = self.horizon() as f64;
        self.d.iter().map(|di| di * t).collect()
    }

    /// First `len` arrivals with the same `d`.
    pub fn prefix(&self, len: usize) -> Instance {
        let len = len.min(self.horizon());
        Instance {
            m: self.m,
            d: self.d.clone(),
            c: self.c[..len].to_vec(),
            a: self.a[..len * self.m].to_vec(),
        }
    }
}

/// Decisions of one policy over the horizon with running aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTrace {
    pub x: Vec<f64>,
    pub revenue: f64,
    pub consumption: Vec<f64>,
    /// Number of leading periods that belong to the exploration phase (0 when
    /// the policy has a single phase).
    pub explore_len: usize,
    pub explore_revenue: f64,
    pub explore_consumption: Vec<f64>,
}

impl DecisionTrace {
    pub fn with_capacity(m: usize, horizon: usize) -> Self {
        Self {
            x: Vec::with_capacity(horizon),
            revenue: 0.0,
            consumption: vec![0.0; m],
            explore_len: 0,
            explore_revenue: 0.0,
            explore_consumption: vec![0.0; m],
        }
    }

    /// Appends decision `x` for `arrival`.
    pub fn push(&mut self, arrival: ArrivalView<'_>, x: f64) {
        debug_assert!((0.0..=1.0).contains(&x), "decision {x} outside [0, 1]");
        self.x.push(x);
        if x != 0.0 {
            self.revenue += arrival.c * x;
            for (acc, ai) in self.consumption.iter_mut().zip(arrival.a) {
                *acc += ai * x;
            }
        }
    }

    /// Freezes the current totals as the exploration-phase split.
    pub fn mark_exploration_end(&mut self) {
        self.explore_len = self.x.len();
        self.explore_revenue = self.revenue;
        self.explore_consumption = self.consumption.clone();
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Recomputes `(revenue, consumption)` straight from the decisions.
    pub fn recompute(&self, instance: &Instance) -> (f64, Vec<f64>) {
        let mut revenue = 0.0;
        let mut consumption = vec![0.0; instance.m];
        for (arr, &x) in instance.iter().zip(&self.x) {
            if x != 0.0 {
                revenue += arr.c * x;
                for (acc, ai) in consumption.iter_mut().zip(arr.a) {
                    *acc += ai * x;
                }
            }
        }
        (revenue, consumption)
    }
}

/// Offline optimum minus collected revenue. Negative when the policy
/// over-consumed its way past the hindsight value.
pub fn regret(trace: &DecisionTrace, hindsight_value: f64) -> f64 {
    hindsight_value - trace.revenue
}

/// `|| [consumption - b]_+ ||_2`.
pub fn violation(trace: &DecisionTrace, b: &[f64]) -> f64 {
    positive_part_norm(trace.consumption.iter().zip(b).map(|(u, bi)| u - bi))
}

/// Single-trial sample of the exploration-phase score
/// `||[sum_{t<=T_e} (a_t x_t - d)]_+|| + sum_{t<=T_e} (f_star - c_t x_t)`.
pub fn exploration_score(
    trace: &DecisionTrace,
    instance: &Instance,
    f_star: f64,
    t_e: usize,
) -> Result<f64> {
    if t_e == 0 || t_e > trace.len() {
        return Err(Error::PhaseOutOfRange { t_e, horizon: trace.len() });
    }
    let m = instance.m;
    let mut over = vec![0.0; m];
    let mut gap = 0.0;
    for (arr, &x) in instance.iter().zip(&trace.x).take(t_e) {
        for i in 0..m {
            over[i] += arr.a[i] * x - instance.d[i];
        }
        gap += f_star - arr.c * x;
    }
    Ok(positive_part_norm(over.into_iter()) + gap)
}

fn positive_part_norm(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|v| v.max(0.0).powi(2)).sum::<f64>().sqrt()
}

/// Header of the per-trial CSV emitted by the bench harness.
pub const REPORT_CSV_HEADER: &str =
    "trial_id,algo,dist,T,m,seed,regret,violation,r_plus_v,hindsight,T_e,wall_time_s";

/// Scored outcome of one policy run on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub trial_id: usize,
    pub algo: String,
    pub dist: String,
    pub horizon: usize,
    pub m: usize,
    pub seed: u64,
    pub regret: f64,
    pub violation: f64,
    pub hindsight_value: f64,
    /// Exploration-phase score; `None` when `f(y*)` is unknown or the policy
    /// has no exploration phase.
    pub v_te: Option<f64>,
    pub t_e: usize,
    /// Policy-loop seconds; `None` when timing is not recorded.
    pub wall_time: Option<f64>,
    pub total_time: Option<f64>,
    pub dual_samples: Vec<(usize, Vec<f64>)>,
    /// Policy is a stand-in for an externally specified method.
    pub proxy: bool,
    pub bounds_envelope: bool,
    /// Resolved policy parameters as JSON, for auditability.
    pub resolved_config: String,
}

impl RunReport {
    pub fn r_plus_v(&self) -> f64 {
        self.regret + self.violation
    }

    pub fn csv_row(&self) -> String {
        let wall = self.wall_time.map(|w| format!("{w}")).unwrap_or_else(|| "NA".into());
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.trial_id,
            self.algo,
            self.dist,
            self.horizon,
            self.m,
            self.seed,
            self.regret,
            self.violation,
            self.r_plus_v(),
            self.hindsight_value,
            self.t_e,
            wall
        )
    }
}

/// Sparse dual trajectory log: powers of two plus explicitly requested
/// checkpoints, so memory stays `O(log T)`.
#[derive(Debug, Clone, Default)]
pub struct DualLog {
    samples: Vec<(usize, Vec<f64>)>,
    extra: Vec<usize>,
}

impl DualLog {
    pub fn with_checkpoints(extra: Vec<usize>) -> Self {
        Self { samples: Vec::new(), extra }
    }

    /// Offers `y^t`; it is kept if `t` is a power of two or a checkpoint.
    pub fn offer(&mut self, t: usize, y: &[f64]) {
        if t.is_power_of_two() || self.extra.contains(&t) {
            self.samples.push((t, y.to_vec()));
        }
    }

    pub fn force(&mut self, t: usize, y: &[f64]) {
        if self.samples.last().map(|(s, _)| *s) != Some(t) {
            self.samples.push((t, y.to_vec()));
        }
    }

    pub fn into_samples(self) -> Vec<(usize, Vec<f64>)> {
        self.samples
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_with(revenue: f64, consumption: Vec<f64>) -> DecisionTrace {
        let m = consumption.len();
        let mut tr = DecisionTrace::with_capacity(m, 0);
        tr.revenue = revenue;
        tr.consumption = consumption;
        tr
    }

    #[test]
    fn regret_is_hindsight_minus_revenue() {
        assert_eq!(regret(&trace_with(2.0, vec![0.0]), 1.0), -1.0);
        assert_eq!(regret(&trace_with(0.0, vec![0.0]), 5.0), 5.0);
        assert_eq!(regret(&trace_with(3.25, vec![0.0]), 3.25), 0.0);
    }

    #[test]
    fn violation_takes_positive_part() {
        assert_eq!(violation(&trace_with(0.0, vec![2.0]), &[1.0]), 1.0);
        assert_eq!(violation(&trace_with(0.0, vec![0.5, 3.0]), &[1.0, 1.0]), 2.0);
        assert_eq!(violation(&trace_with(0.0, vec![0.5, 1.0]), &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn exploration_score_examples() {
        let inst = Instance::from_arrivals(&[Arrival::new(1.0, vec![1.0])], vec![0.5]).unwrap();
        let mut reject = DecisionTrace::with_capacity(1, 1);
        reject.push(inst.arrival(0), 0.0);
        assert_eq!(exploration_score(&reject, &inst, 0.375, 1).unwrap(), 0.375);

        let mut accept = DecisionTrace::with_capacity(1, 1);
        accept.push(inst.arrival(0), 1.0);
        assert_eq!(exploration_score(&accept, &inst, 0.375, 1).unwrap(), -0.125);

        assert!(matches!(
            exploration_score(&accept, &inst, 0.375, 2),
            Err(Error::PhaseOutOfRange { .. })
        ));
        assert!(exploration_score(&accept, &inst, 0.375, 0).is_err());
    }

    #[test]
    fn trace_aggregates_match_recomputation() {
        let arrivals: Vec<Arrival> = (0..50)
            .map(|i| Arrival::new(0.1 * i as f64, vec![0.3 * i as f64, 1.0 / (1 + i) as f64]))
            .collect();
        let inst = Instance::from_arrivals(&arrivals, vec![1.0, 1.0]).unwrap();
        let mut tr = DecisionTrace::with_capacity(2, 50);
        for (t, arr) in inst.iter().enumerate() {
            tr.push(arr, if t % 3 == 0 { 1.0 } else { 0.25 });
        }
        let (rev, cons) = tr.recompute(&inst);
        assert!((rev - tr.revenue).abs() <= 1e-12 * rev.abs().max(1.0));
        for (u, v) in cons.iter().zip(&tr.consumption) {
            assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0));
        }
    }

    #[test]
    fn dual_log_keeps_powers_of_two_and_checkpoints() {
        let mut log = DualLog::with_checkpoints(vec![6]);
        for t in 1..=9 {
            log.offer(t, &[t as f64]);
        }
        let ts: Vec<usize> = log.into_samples().into_iter().map(|(t, _)| t).collect();
        assert_eq!(ts, vec![1, 2, 4, 6, 8]);
    }

    #[test]
    fn bounds_reject_nonpositive() {
        assert!(BoundsSpec::new(1, 0.0, 1.0, 0.3, 0.6).is_err());
        assert!(BoundsSpec::new(1, 1.0, 1.0, 0.7, 0.6).is_err());
        let b = BoundsSpec::new(4, 2.0, 1.0, 0.5, 1.0).unwrap();
        assert_eq!(b.subgradient_bound(), 6.0);
        assert_eq!(b.dual_radius(), 2.0);
    }
}
