//! Online policies: the constant-step dual subgradient method, the ASSG and
//! RASSG learners, the decoupled two-phase framework, the 1/(mu t) learner
//! used as a decider, and an LP-resolving baseline.

mod assg;
mod resolving;
mod two_phase;

use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use assg::{
    run_assg, run_rassg, AssgConfig, AssgLearner, DualLearner, InverseTimeLearner, RassgConfig,
    RassgLearner,
};
pub use resolving::{resolving_baseline, run_resolving_baseline, ResolvingRun};
pub use two_phase::{
    configure_two_phase_experiment, configure_two_phase_theorem, run_two_phase, two_phase,
    ExperimentSetting, LearnerSpec, TwoPhaseConfig, TwoPhaseRun,
};

use crate::domain::{BoundsSpec, DecisionTrace, DualLog, Instance, MarketConfig};
use crate::dual_geometry::{decide, DualPrice};
use crate::error::{Error, Result};

/// Stepsize rule `alpha_t`, with `t` counted from 1 at the first update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepsizeSchedule {
    Constant { alpha: f64 },
    /// `1 / (mu t)`
    InverseTime { mu: f64 },
    /// `1 / (mu (t + 1))`
    InverseTimeShift { mu: f64 },
}

impl StepsizeSchedule {
    /// The `O(1/sqrt T)` constant rule
    /// `sqrt(2 c_max / (m d_lo (a_max + d_hi)^2)) / sqrt(T)`.
    pub fn benchmark(bounds: &BoundsSpec, horizon: usize) -> Self {
        let alpha = (2.0 * bounds.c_max / (bounds.d_lo * bounds.sq_spread())).sqrt()
            / (horizon as f64).sqrt();
        Self::Constant { alpha }
    }

    pub fn validate(&self) -> Result<()> {
        let v = match self {
            Self::Constant { alpha } => *alpha,
            Self::InverseTime { mu } | Self::InverseTimeShift { mu } => *mu,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("stepsize parameter must be positive, got {self:?}")))
        }
    }

    pub fn alpha(&self, t: usize) -> f64 {
        match *self {
            Self::Constant { alpha } => alpha,
            Self::InverseTime { mu } => 1.0 / (mu * t as f64),
            Self::InverseTimeShift { mu } => 1.0 / (mu * (t + 1) as f64),
        }
    }
}

/// Output of a single-path policy.
#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub trace: DecisionTrace,
    pub y_final: DualPrice,
    pub dual_log: Vec<(usize, Vec<f64>)>,
}

/// Core loop: for each arrival in `range`, decide with the current price,
/// record the decision, and take a projected subgradient step. `on_step`
/// sees the global period index (1-based) and the price used for it.
pub(crate) fn subgradient_path(
    instance: &Instance,
    range: Range<usize>,
    schedule: StepsizeSchedule,
    y: &mut [f64],
    trace: &mut DecisionTrace,
    mut on_step: impl FnMut(usize, &[f64]),
) {
    let d = &instance.d;
    for (k, t) in range.enumerate() {
        let arr = instance.arrival(t);
        on_step(t + 1, y);
        let accept = decide(y, arr);
        trace.push(arr, if accept { 1.0 } else { 0.0 });
        let alpha = schedule.alpha(k + 1);
        for i in 0..y.len() {
            let g = d[i] - if accept { arr.a[i] } else { 0.0 };
            y[i] = (y[i] - alpha * g).max(0.0);
        }
    }
}

/// Dual subgradient policy from `y_init` on a realized instance.
pub fn benchmark_subgradient(
    instance: &Instance,
    schedule: StepsizeSchedule,
    y_init: &DualPrice,
) -> Result<PolicyRun> {
    benchmark_subgradient_observed(instance, schedule, y_init, |_, _| {})
}

/// As [`benchmark_subgradient`], calling `observer(t, y^t)` before every
/// decision.
pub fn benchmark_subgradient_observed(
    instance: &Instance,
    schedule: StepsizeSchedule,
    y_init: &DualPrice,
    mut observer: impl FnMut(usize, &[f64]),
) -> Result<PolicyRun> {
    schedule.validate()?;
    if y_init.dim() != instance.m {
        return Err(Error::InvalidArgument(format!(
            "initial price has dimension {}, expected {}",
            y_init.dim(),
            instance.m
        )));
    }
    let horizon = instance.horizon();
    let mut y = y_init.as_slice().to_vec();
    let mut trace = DecisionTrace::with_capacity(instance.m, horizon);
    let mut log = DualLog::default();
    subgradient_path(instance, 0..horizon, schedule, &mut y, &mut trace, |t, y| {
        log.offer(t, y);
        observer(t, y);
    });
    log.force(horizon + 1, &y);
    Ok(PolicyRun { trace, y_final: DualPrice::new(y)?, dual_log: log.into_samples() })
}

/// Generates the instance of `config` and runs [`benchmark_subgradient`].
pub fn run_benchmark_subgradient(
    config: &MarketConfig,
    schedule: StepsizeSchedule,
    y_init: &DualPrice,
) -> Result<(DecisionTrace, DualPrice)> {
    let run = benchmark_subgradient(&config.generate(), schedule, y_init)?;
    Ok((run.trace, run.y_final))
}

/// The `1/(mu t)` estimator used directly for decisions, starting at zero.
pub fn learner_as_decider(instance: &Instance, mu: f64) -> Result<PolicyRun> {
    benchmark_subgradient(instance, StepsizeSchedule::InverseTime { mu }, &DualPrice::zeros(instance.m))
}

pub fn run_learner_as_decider(config: &MarketConfig, mu: f64) -> Result<(DecisionTrace, DualPrice)> {
    let run = learner_as_decider(&config.generate(), mu)?;
    Ok((run.trace, run.y_final))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionSpec;
    use crate::domain::Arrival;

    #[test]
    fn benchmark_alpha_matches_hand_value() {
        let bounds = BoundsSpec::new(1, 2.0, 1.0, 1.0 / 3.0, 2.0 / 3.0).unwrap();
        let StepsizeSchedule::Constant { alpha } = StepsizeSchedule::benchmark(&bounds, 10_000) else {
            unreachable!()
        };
        assert!((alpha - 0.0091856).abs() < 1e-7, "{alpha}");
    }

    #[test]
    fn slack_resources_accept_everything_nonnegative() {
        let cfg = MarketConfig::new(500, vec![10.0], DistributionSpec::MultiSecretary, 3).unwrap();
        let (trace, y) = run_benchmark_subgradient(
            &cfg,
            StepsizeSchedule::Constant { alpha: 0.01 },
            &DualPrice::zeros(1),
        )
        .unwrap();
        assert!(trace.x.iter().all(|x| *x == 1.0));
        assert_eq!(y.as_slice(), &[0.0]);
    }

    #[test]
    fn single_period_uses_initial_price() {
        let inst = Instance::from_arrivals(&[Arrival::new(0.4, vec![1.0])], vec![0.5]).unwrap();
        let run = learner_as_decider(&inst, 0.5).unwrap();
        assert_eq!(run.trace.x, vec![1.0]);
        // y = [0 - 2 * (0.5 - 1)]_+ = 1
        assert_eq!(run.y_final.as_slice(), &[1.0]);
    }

    #[test]
    fn schedules() {
        assert_eq!(StepsizeSchedule::InverseTime { mu: 0.5 }.alpha(4), 0.5);
        assert_eq!(StepsizeSchedule::InverseTimeShift { mu: 0.5 }.alpha(3), 0.5);
        assert!(StepsizeSchedule::Constant { alpha: 0.0 }.validate().is_err());
    }
}
