//! Dual learners fed one arrival at a time: the `1/(mu t)` subgradient
//! estimator, ASSG (stagewise averaged subgradient with halving stepsizes
//! and shrinking localization balls) and its restarted variant RASSG.

use serde::{Deserialize, Serialize};

use crate::domain::ArrivalView;
use crate::dual_geometry::{project_stage_region, subgradient_into, DualPrice};
use crate::error::{Error, Result};

/// A dual estimator that learns from the arrival stream but never decides.
pub trait DualLearner {
    fn observe(&mut self, arrival: ArrivalView<'_>, d: &[f64]);
    /// Current best estimate of `y*`.
    fn estimate(&self) -> Vec<f64>;
    /// Samples consumed so far.
    fn consumed(&self) -> usize;
}

/// Projected subgradient with `alpha_t = 1/(mu t)` (or `1/(mu (t+1))`).
#[derive(Debug, Clone)]
pub struct InverseTimeLearner {
    y: Vec<f64>,
    g: Vec<f64>,
    mu: f64,
    shift: bool,
    t: usize,
}

impl InverseTimeLearner {
    pub fn new(m: usize, mu: f64, shift: bool) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidArgument(format!("mu must be > 0, got {mu}")));
        }
        Ok(Self { y: vec![0.0; m], g: vec![0.0; m], mu, shift, t: 0 })
    }
}

impl DualLearner for InverseTimeLearner {
    fn observe(&mut self, arrival: ArrivalView<'_>, d: &[f64]) {
        self.t += 1;
        let denom = if self.shift { self.t + 1 } else { self.t };
        let alpha = 1.0 / (self.mu * denom as f64);
        subgradient_into(&self.y, arrival, d, &mut self.g);
        for (y, g) in self.y.iter_mut().zip(&self.g) {
            *y = (*y - alpha * g).max(0.0);
        }
    }

    fn estimate(&self) -> Vec<f64> {
        self.y.clone()
    }

    fn consumed(&self) -> usize {
        self.t
    }
}

/// ASSG parameters. Stage `k` runs `t_inner` steps (the last stage also
/// takes `tail` extra steps) with stepsize `eta1 / 2^(k-1)` inside
/// `{y >= 0, ||y|| <= radius} ∩ B(y_{k-1}, D1 / 2^(k-1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssgConfig {
    pub k: usize,
    pub t_inner: usize,
    pub tail: usize,
    pub eps0: f64,
    pub d1: f64,
    /// Almost-sure bound on stochastic subgradient norms.
    pub g: f64,
    pub eta1: f64,
    pub theta: f64,
    pub lambda: Option<f64>,
    pub delta: f64,
    /// Radius of the outer feasible ball, `c_max / d_lo`.
    pub radius: f64,
}

impl AssgConfig {
    /// `ceil(log2(2 eps0 / eps))`, at least 1.
    pub fn outer_iterations(eps0: f64, eps: f64) -> usize {
        ((2.0 * eps0 / eps).log2().ceil()).max(1.0) as usize
    }

    /// Initial localization radius `2^(1-theta) lambda^(-theta) eps0 / eps^(1-theta)`,
    /// capped by the diameter of the region reachable from `y0`.
    pub fn initial_radius(eps0: f64, eps: f64, theta: f64, lambda: Option<f64>, cap: f64) -> f64 {
        match lambda {
            Some(l) => {
                let d1 = 2f64.powf(1.0 - theta) * l.powf(-theta) * eps0 / eps.powf(1.0 - theta);
                d1.min(cap)
            }
            None => cap,
        }
    }

    /// Fully explicit configuration with `eta1 = eps0 / (3 G^2)`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        k: usize,
        t_inner: usize,
        eps0: f64,
        d1: f64,
        g: f64,
        theta: f64,
        lambda: Option<f64>,
        delta: f64,
        radius: f64,
    ) -> Result<Self> {
        let cfg = Self {
            k,
            t_inner,
            tail: 0,
            eps0,
            d1,
            g,
            eta1: eps0 / (3.0 * g * g),
            theta,
            lambda,
            delta,
            radius,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration for a fixed sample budget aimed at accuracy `eps`:
    /// `K` from the accuracy target, then the budget is split evenly across
    /// stages with the remainder going to the last one.
    #[allow(clippy::too_many_arguments)]
    pub fn from_budget(
        budget: usize,
        eps0: f64,
        eps: f64,
        g: f64,
        theta: f64,
        lambda: Option<f64>,
        delta: f64,
        radius: f64,
        y0_norm: f64,
    ) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidArgument("ASSG needs a positive sample budget".into()));
        }
        if !(eps > 0.0 && eps0 > 0.0) {
            return Err(Error::InvalidArgument(format!("need eps0, eps > 0 (got {eps0}, {eps})")));
        }
        let k = Self::outer_iterations(eps0, eps).min(budget);
        let d1 = Self::initial_radius(eps0, eps, theta, lambda, radius + y0_norm);
        let mut cfg = Self::new(k, budget / k, eps0, d1, g, theta, lambda, delta, radius)?;
        cfg.tail = budget % k;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.eps0, self.d1, self.g, self.eta1, self.theta, self.delta, self.radius];
        if self.k < 1 || self.t_inner < 1 || positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("invalid ASSG configuration {self:?}")));
        }
        if self.lambda.is_some_and(|l| !(l > 0.0)) {
            return Err(Error::InvalidArgument("lambda must be > 0".into()));
        }
        Ok(())
    }

    /// Total samples consumed.
    pub fn budget(&self) -> usize {
        self.k * self.t_inner + self.tail
    }

    fn stage_len(&self, stage: usize) -> usize {
        if stage + 1 == self.k {
            self.t_inner + self.tail
        } else {
            self.t_inner
        }
    }
}

/// Streaming ASSG. Each stage averages its post-step iterates; the stage
/// average becomes the next centre.
#[derive(Debug, Clone)]
pub struct AssgLearner {
    cfg: AssgConfig,
    stage: usize,
    step: usize,
    center: Vec<f64>,
    y: Vec<f64>,
    sum: Vec<f64>,
    g: Vec<f64>,
    eta: f64,
    radius: f64,
    consumed: usize,
}

impl AssgLearner {
    pub fn new(cfg: AssgConfig, y0: &DualPrice) -> Result<Self> {
        cfg.validate()?;
        if y0.norm() > cfg.radius * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "ASSG start has norm {} > {}",
                y0.norm(),
                cfg.radius
            )));
        }
        let m = y0.dim();
        Ok(Self {
            stage: 0,
            step: 0,
            center: y0.as_slice().to_vec(),
            y: y0.as_slice().to_vec(),
            sum: vec![0.0; m],
            g: vec![0.0; m],
            eta: cfg.eta1,
            radius: cfg.d1,
            consumed: 0,
            cfg,
        })
    }

    pub fn is_done(&self) -> bool {
        self.stage >= self.cfg.k
    }

    pub fn config(&self) -> &AssgConfig {
        &self.cfg
    }
}

impl DualLearner for AssgLearner {
    fn observe(&mut self, arrival: ArrivalView<'_>, d: &[f64]) {
        if self.is_done() {
            return;
        }
        self.consumed += 1;
        subgradient_into(&self.y, arrival, d, &mut self.g);
        let trial: Vec<f64> = self.y.iter().zip(&self.g).map(|(y, g)| y - self.eta * g).collect();
        self.y = project_stage_region(&trial, self.cfg.radius, &self.center, self.radius).into_vec();
        for (s, y) in self.sum.iter_mut().zip(&self.y) {
            *s += y;
        }
        self.step += 1;
        let len = self.cfg.stage_len(self.stage);
        if self.step == len {
            let avg: Vec<f64> = self.sum.iter().map(|s| s / len as f64).collect();
            self.center = avg.clone();
            self.y = avg;
            self.sum.iter_mut().for_each(|s| *s = 0.0);
            self.step = 0;
            self.stage += 1;
            self.eta *= 0.5;
            self.radius *= 0.5;
        }
    }

    /// Output of the last completed stage (the start point before any).
    fn estimate(&self) -> Vec<f64> {
        self.center.clone()
    }

    fn consumed(&self) -> usize {
        self.consumed
    }
}

/// Runs ASSG over `stream`, which must supply at least `cfg.budget()` arrivals.
pub fn run_assg<'a>(
    stream: impl IntoIterator<Item = ArrivalView<'a>>,
    cfg: &AssgConfig,
    y0: &DualPrice,
    d: &[f64],
) -> Result<DualPrice> {
    let mut learner = AssgLearner::new(cfg.clone(), y0)?;
    feed(&mut learner, stream, cfg.budget(), d)?;
    DualPrice::new(learner.estimate())
}

fn feed<'a>(
    learner: &mut impl DualLearner,
    stream: impl IntoIterator<Item = ArrivalView<'a>>,
    required: usize,
    d: &[f64],
) -> Result<()> {
    for arr in stream.into_iter().take(required) {
        learner.observe(arr, d);
    }
    if learner.consumed() < required {
        return Err(Error::StreamExhausted { consumed: learner.consumed(), required });
    }
    Ok(())
}

/// RASSG: `s` ASSG rounds, each warm-started at the previous output, with
/// `t_{s+1} = t_s 2^(2(1 - 1/gamma))`, `D1 <- D1 2^(1 - 1/gamma)` and
/// `eps0 <- omega eps0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RassgConfig {
    pub rounds: usize,
    /// First-round ASSG configuration (`k`, `t_inner`, `d1`, `eps0`, ...).
    pub first: AssgConfig,
    pub omega: f64,
    pub gamma: f64,
}

impl RassgConfig {
    pub fn new(rounds: usize, first: AssgConfig, omega: f64, gamma: f64) -> Result<Self> {
        first.validate()?;
        if rounds < 1 || !(omega > 0.0 && omega <= 1.0) || !(gamma >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need rounds >= 1, omega in (0, 1], gamma >= 1 (got {rounds}, {omega}, {gamma})"
            )));
        }
        Ok(Self { rounds, first, omega, gamma })
    }

    /// ASSG configuration of round `s` (0-based).
    pub fn round(&self, s: usize) -> AssgConfig {
        let e = 1.0 - 1.0 / self.gamma;
        let mut cfg = self.first.clone();
        if s > 0 {
            let t = self.first.t_inner as f64 * 2f64.powf(2.0 * e * s as f64);
            cfg.t_inner = t.ceil() as usize;
            cfg.d1 = self.first.d1 * 2f64.powf(e * s as f64);
            cfg.eps0 = self.first.eps0 * self.omega.powi(s as i32);
            cfg.eta1 = cfg.eps0 / (3.0 * cfg.g * cfg.g);
        }
        cfg
    }

    pub fn budget(&self) -> usize {
        (0..self.rounds).map(|s| self.round(s).budget()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct RassgLearner {
    cfg: RassgConfig,
    round: usize,
    current: AssgLearner,
    consumed: usize,
}

impl RassgLearner {
    pub fn new(cfg: RassgConfig, y0: &DualPrice) -> Result<Self> {
        let current = AssgLearner::new(cfg.round(0), y0)?;
        Ok(Self { cfg, round: 0, current, consumed: 0 })
    }
}

impl DualLearner for RassgLearner {
    fn observe(&mut self, arrival: ArrivalView<'_>, d: &[f64]) {
        if self.current.is_done() {
            return;
        }
        self.consumed += 1;
        self.current.observe(arrival, d);
        if self.current.is_done() && self.round + 1 < self.cfg.rounds {
            self.round += 1;
            let start = DualPrice::new(self.current.estimate()).expect("stage averages stay in the orthant");
            self.current = AssgLearner::new(self.cfg.round(self.round), &start)
                .expect("round configurations inherit validity");
        }
    }

    fn estimate(&self) -> Vec<f64> {
        self.current.estimate()
    }

    fn consumed(&self) -> usize {
        self.consumed
    }
}

pub fn run_rassg<'a>(
    stream: impl IntoIterator<Item = ArrivalView<'a>>,
    cfg: &RassgConfig,
    y0: &DualPrice,
    d: &[f64],
) -> Result<DualPrice> {
    let mut learner = RassgLearner::new(cfg.clone(), y0)?;
    feed(&mut learner, stream, cfg.budget(), d)?;
    DualPrice::new(learner.estimate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Arrival;

    #[test]
    fn outer_iterations_formula() {
        assert_eq!(AssgConfig::outer_iterations(1.0, 0.25), 3);
        assert_eq!(AssgConfig::outer_iterations(1.0, 4.0), 1);
    }

    #[test]
    fn minimal_configuration_is_one_projected_step() {
        let cfg = AssgConfig::new(1, 1, 1.0, 10.0, 1.0, 1.0, None, 0.1, 10.0).unwrap();
        let arr = Arrival::new(1.0, vec![1.0]);
        let y = run_assg([arr.view()], &cfg, &DualPrice::new(vec![0.5]).unwrap(), &[0.25]).unwrap();
        // accept at y = 0.5, g = 0.25 - 1, eta = 1/3
        assert!((y.as_slice()[0] - (0.5 + 0.75 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn short_stream_is_an_error() {
        let cfg = AssgConfig::new(2, 3, 1.0, 1.0, 1.0, 1.0, None, 0.1, 10.0).unwrap();
        let arr = Arrival::new(1.0, vec![1.0]);
        let err = run_assg(vec![arr.view(); 5], &cfg, &DualPrice::zeros(1), &[0.5]).unwrap_err();
        assert!(matches!(err, Error::StreamExhausted { consumed: 5, required: 6 }));
    }

    #[test]
    fn budget_split_sends_remainder_to_last_stage() {
        let cfg = AssgConfig::from_budget(100, 1.0, 1e-3, 1.0, 1.0, None, 0.1, 3.0, 0.0).unwrap();
        assert_eq!(cfg.k, 11);
        assert_eq!(cfg.t_inner, 9);
        assert_eq!(cfg.tail, 1);
        assert_eq!(cfg.budget(), 100);
    }

    #[test]
    fn rassg_growth_is_flat_when_gamma_is_one() {
        let first = AssgConfig::new(2, 5, 1.0, 2.0, 1.0, 1.0, None, 0.1, 3.0).unwrap();
        let r = RassgConfig::new(3, first, 0.5, 1.0).unwrap();
        assert_eq!(r.round(2).t_inner, 5);
        assert_eq!(r.round(2).d1, 2.0);
        assert_eq!(r.round(2).eps0, 0.25);
    }
}
