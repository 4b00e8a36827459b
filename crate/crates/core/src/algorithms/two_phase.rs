//! Decoupled exploration–exploitation: during the first `T_e` periods a
//! constant-step subgradient path makes the decisions while a separate
//! learner consumes the same arrivals; afterwards the decision path restarts
//! from the learner's estimate with a much smaller stepsize.

use serde::{Deserialize, Serialize};

use super::assg::{AssgConfig, AssgLearner, DualLearner, InverseTimeLearner, RassgConfig, RassgLearner};
use super::{subgradient_path, StepsizeSchedule};
use crate::domain::{ArrivalView, BoundsSpec, DecisionTrace, DualLog, Instance, MarketConfig};
use crate::dual_geometry::{project_ball_orthant, DualPrice, ErrorBoundSpec};
use crate::error::{Error, Result};

/// Learner run in parallel with the exploration-phase decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    InverseTime { mu: f64 },
    Assg(AssgConfig),
    Rassg(RassgConfig),
    /// Ignores the data and hands `y` to the exploitation phase; used to
    /// separate learning error from the cost of the decision paths.
    Oracle { y: Vec<f64> },
}

impl LearnerSpec {
    fn build(&self, m: usize) -> Result<Box<dyn DualLearner>> {
        Ok(match self {
            Self::InverseTime { mu } => Box::new(InverseTimeLearner::new(m, *mu, false)?),
            Self::Assg(cfg) => Box::new(AssgLearner::new(cfg.clone(), &DualPrice::zeros(m))?),
            Self::Rassg(cfg) => Box::new(RassgLearner::new(cfg.clone(), &DualPrice::zeros(m))?),
            Self::Oracle { y } => {
                if y.len() != m {
                    return Err(Error::InvalidArgument(format!("oracle price has dimension {}, expected {m}", y.len())));
                }
                Box::new(OracleLearner { y: DualPrice::new(y.clone())?.into_vec(), consumed: 0 })
            }
        })
    }
}

struct OracleLearner {
    y: Vec<f64>,
    consumed: usize,
}

impl DualLearner for OracleLearner {
    fn observe(&mut self, _: ArrivalView<'_>, _: &[f64]) {
        self.consumed += 1;
    }

    fn estimate(&self) -> Vec<f64> {
        self.y.clone()
    }

    fn consumed(&self) -> usize {
        self.consumed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPhaseConfig {
    pub t_e: usize,
    pub alpha_e: f64,
    pub alpha_p: f64,
    pub learner: LearnerSpec,
    /// Target accuracy `dist(y, Y*)` the exploration length was sized for.
    pub delta_target: Option<f64>,
}

impl TwoPhaseConfig {
    pub fn validate(&self, horizon: usize) -> Result<()> {
        if self.t_e < 1 || self.t_e >= horizon {
            return Err(Error::PhaseOutOfRange { t_e: self.t_e, horizon });
        }
        if !(self.alpha_e > 0.0 && self.alpha_p > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "stepsizes must be positive (alpha_e = {}, alpha_p = {})",
                self.alpha_e, self.alpha_p
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentSetting {
    Continuous,
    Finite,
}

/// Failure probability handed to ASSG configurations.
const ASSG_DELTA: f64 = 0.05;

/// Parameters used in the growth experiments.
///
/// * continuous: `T_e = ceil(T^(2/3))`, `alpha_e = T^(-1/3)`,
///   `alpha_p = T^(-2/3)`, learner `1/t` subgradient (`mu = 1`);
/// * finite: `T_e = ceil(50 ln T)`, `alpha_e = T^(-1/2)`, `alpha_p = 1/T`,
///   learner ASSG sized for the budget `T_e` with target `c_max / T`.
pub fn configure_two_phase_experiment(
    horizon: usize,
    setting: ExperimentSetting,
    bounds: &BoundsSpec,
) -> Result<TwoPhaseConfig> {
    let t = horizon as f64;
    let cfg = match setting {
        ExperimentSetting::Continuous => {
            let root = t.cbrt();
            TwoPhaseConfig {
                t_e: (root * root).ceil() as usize,
                alpha_e: 1.0 / root,
                alpha_p: 1.0 / (root * root),
                learner: LearnerSpec::InverseTime { mu: 1.0 },
                delta_target: None,
            }
        }
        ExperimentSetting::Finite => {
            let t_e = (50.0 * t.ln()).ceil() as usize;
            let assg = AssgConfig::from_budget(
                t_e.max(1),
                bounds.c_max,
                bounds.c_max / t,
                bounds.subgradient_bound(),
                1.0,
                None,
                ASSG_DELTA,
                bounds.dual_radius(),
                0.0,
            )?;
            TwoPhaseConfig {
                t_e,
                alpha_e: 1.0 / t.sqrt(),
                alpha_p: 1.0 / t,
                learner: LearnerSpec::Assg(assg),
                delta_target: None,
            }
        }
    };
    cfg.validate(horizon)?;
    Ok(cfg)
}

/// Parameters from the regret theorem for error-bound exponent `gamma`.
///
/// Singleton `Y*`: `T_e = ceil(scale T^((2g-2)/(2g-1)) ln^2 T)`,
/// `alpha_e = T^(-(g-1)/(2g-1)) / ln T`, `alpha_p = T^(-g/(2g-1))`.
/// Otherwise, with `D = diam(Y*)`: `T_e = 2D/(2D+1) T` and
/// `alpha_e, alpha_p = sqrt(2 c / (m (a+d)^2 d_lo) * {(2D+1)/(2DT), 2D(2D+1)/T})`.
///
/// `alpha_e` must not exceed `2 d_lo / (3 m (a+d)^2)`, the largest constant
/// stepsize for which the decision iterates provably stay bounded.
pub fn configure_two_phase_theorem(
    horizon: usize,
    eb: &ErrorBoundSpec,
    bounds: &BoundsSpec,
    scale: f64,
) -> Result<TwoPhaseConfig> {
    if !(eb.gamma >= 1.0) {
        return Err(Error::InvalidArgument(format!("gamma must be >= 1, got {}", eb.gamma)));
    }
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("T_e scale must be > 0, got {scale}")));
    }
    let t = horizon as f64;
    let g = eb.gamma;
    let spread = bounds.sq_spread();
    let (t_e, alpha_e, alpha_p, delta) = if eb.diam_ystar == 0.0 {
        let ln = t.ln();
        let t_e = (scale * t.powf((2.0 * g - 2.0) / (2.0 * g - 1.0)) * ln * ln).ceil() as usize;
        let alpha_e = t.powf(-(g - 1.0) / (2.0 * g - 1.0)) / ln;
        let alpha_p = t.powf(-g / (2.0 * g - 1.0));
        (t_e, alpha_e, alpha_p, t.powf(-1.0 / (2.0 * g - 1.0)))
    } else {
        let dd = 2.0 * eb.diam_ystar;
        let base = 2.0 * bounds.c_max / (spread * bounds.d_lo);
        let t_e = (dd / (dd + 1.0) * t).ceil() as usize;
        let alpha_e = (base * (dd + 1.0) / (dd * t)).sqrt();
        let alpha_p = (base * dd * (dd + 1.0) / t).sqrt();
        (t_e, alpha_e, alpha_p, eb.diam_ystar)
    };
    let bound = 2.0 * bounds.d_lo / (3.0 * spread);
    if alpha_e > bound {
        return Err(Error::HorizonTooSmall { horizon, alpha_e, bound });
    }
    if t_e < 1 || t_e >= horizon {
        return Err(Error::PhaseOutOfRange { t_e, horizon });
    }
    let eps = (eb.mu * delta.powf(g)).min(bounds.c_max);
    let assg = AssgConfig::from_budget(
        t_e,
        bounds.c_max,
        eps,
        bounds.subgradient_bound(),
        1.0 / g,
        Some(eb.mu),
        ASSG_DELTA,
        bounds.dual_radius(),
        0.0,
    )?;
    Ok(TwoPhaseConfig { t_e, alpha_e, alpha_p, learner: LearnerSpec::Assg(assg), delta_target: Some(delta) })
}

#[derive(Debug, Clone)]
pub struct TwoPhaseRun {
    pub trace: DecisionTrace,
    pub y_final: DualPrice,
    /// Learner output after projection onto `{y >= 0, ||y|| <= c_max/d_lo}`;
    /// the exploitation phase starts here.
    pub learned: DualPrice,
    pub dual_log: Vec<(usize, Vec<f64>)>,
}

pub fn two_phase(instance: &Instance, tp: &TwoPhaseConfig, bounds: &BoundsSpec) -> Result<TwoPhaseRun> {
    let horizon = instance.horizon();
    tp.validate(horizon)?;
    let m = instance.m;
    let mut learner = tp.learner.build(m)?;
    let mut trace = DecisionTrace::with_capacity(m, horizon);
    let mut log = DualLog::with_checkpoints(vec![tp.t_e + 1]);

    let mut y = vec![0.0; m];
    subgradient_path(
        instance,
        0..tp.t_e,
        StepsizeSchedule::Constant { alpha: tp.alpha_e },
        &mut y,
        &mut trace,
        |t, y| log.offer(t, y),
    );
    // the learner sees the same arrivals but never touches the decision path
    for arr in instance.iter().take(tp.t_e) {
        learner.observe(arr, &instance.d);
    }
    trace.mark_exploration_end();

    let learned = project_ball_orthant(&learner.estimate(), bounds.dual_radius(), None)?;
    let mut y = learned.as_slice().to_vec();
    subgradient_path(
        instance,
        tp.t_e..horizon,
        StepsizeSchedule::Constant { alpha: tp.alpha_p },
        &mut y,
        &mut trace,
        |t, y| log.offer(t, y),
    );
    log.force(horizon + 1, &y);
    Ok(TwoPhaseRun { trace, y_final: DualPrice::new(y)?, learned, dual_log: log.into_samples() })
}

pub fn run_two_phase(config: &MarketConfig, tp: &TwoPhaseConfig, bounds: &BoundsSpec) -> Result<TwoPhaseRun> {
    two_phase(&config.generate(), tp, bounds)
}
