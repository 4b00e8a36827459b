//! Experiment harness: plans, trial execution, aggregation, slope fits,
//! timing tables and plot data.

mod aggregate;
mod plot;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use aggregate::{
    aggregate, aggregate_csv, fit_growth_slope, fit_log_linear, fit_loglog_slope, parse_aggregate_csv,
    render_timing_table, timing_rows, AggregateRow, TimingRow, AGGREGATE_CSV_HEADER,
};
pub use plot::{emit_plot_data, render_svg};

use crate::algorithms::{
    benchmark_subgradient, configure_two_phase_experiment, configure_two_phase_theorem,
    learner_as_decider, resolving_baseline, two_phase, ExperimentSetting, StepsizeSchedule,
};
use crate::distributions::{
    derive_bounds, finite_support_build, mix_seed, AtomRecipe, DistributionSpec, ResourceLaw, StreamRng,
};
use crate::domain::{
    exploration_score, regret, violation, BoundsSpec, DecisionTrace, Instance, MarketConfig, RunReport,
    REPORT_CSV_HEADER,
};
use crate::dual_geometry::{multisecretary_dual, multisecretary_optimum, DualPrice, ErrorBoundSpec};
use crate::error::{Error, Result};
use crate::hindsight;

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "OLPLAB_WORKERS";

/// Arrival law of a plan. Finite supports are redrawn per trial from the
/// trial's atom stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalPlan {
    Fixed { spec: DistributionSpec },
    RandomFinite { m: usize, k: usize, recipe: AtomRecipe },
}

impl ArrivalPlan {
    pub fn dim(&self) -> usize {
        match self {
            Self::Fixed { spec } => spec.dim(),
            Self::RandomFinite { m, .. } => *m,
        }
    }

    /// Law used by the trial with master seed `seed`.
    pub fn realize(&self, seed: u64) -> Result<DistributionSpec> {
        match self {
            Self::Fixed { spec } => Ok(spec.clone()),
            Self::RandomFinite { m, k, recipe } => {
                let mut support = finite_support_build(*m, *k, *recipe, &mut StreamRng::atoms(seed))?;
                support.recipe = Some(*recipe);
                Ok(DistributionSpec::Finite(support))
            }
        }
    }
}

/// A policy in a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgoSpec {
    /// Constant-step subgradient with the `O(1/sqrt T)` stepsize.
    M1,
    /// Two-phase framework with the experiment parameters of the plan's setting.
    M2,
    /// Two-phase framework with the theorem parameters.
    M2Theorem { gamma: f64, mu: f64, #[serde(default)] diam: f64, #[serde(default = "one")] scale: f64 },
    /// `1/(mu t)` learner used for decisions.
    LearnerAsDecider { #[serde(default = "half")] mu: f64 },
    /// LP-resolving proxy; resolves every `ceil(sqrt T)` periods by default.
    Resolving { #[serde(default)] every: Option<usize> },
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

impl AlgoSpec {
    pub fn label(&self) -> &'static str {
        match self {
            Self::M1 => "M1",
            Self::M2 => "M2",
            Self::M2Theorem { .. } => "M2-theorem",
            Self::LearnerAsDecider { .. } => "LAD",
            Self::Resolving { .. } => "MLP-proxy",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub name: String,
    /// Label written in the `dist` column.
    pub dist_label: String,
    pub arrivals: ArrivalPlan,
    #[serde(default = "default_resources")]
    pub resources: ResourceLaw,
    pub setting: ExperimentSetting,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<AlgoSpec>,
    /// Defaults to 10 log-spaced points on `[1e2, 1e5]` (continuous) or
    /// `[1e3, 1e5]` (finite).
    #[serde(default)]
    pub horizons: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Record policy wall times (makes CSVs run-dependent).
    #[serde(default)]
    pub timing: bool,
    /// Keep sparse dual trajectories in the reports.
    #[serde(default)]
    pub keep_duals: bool,
}

fn default_resources() -> ResourceLaw {
    ResourceLaw::Uniform
}

fn default_algorithms() -> Vec<AlgoSpec> {
    vec![AlgoSpec::M1, AlgoSpec::M2]
}

fn default_trials() -> usize {
    100
}

/// `n` points evenly spaced on a log scale over `[lo, hi]`, rounded.
pub fn log_grid(lo: usize, hi: usize, n: usize) -> Vec<usize> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> =
        (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp().round() as usize).collect();
    out.dedup();
    out
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut plan: Self = serde_json::from_str(text)?;
        plan.fill_defaults();
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plans serialize")
    }

    fn fill_defaults(&mut self) {
        if self.horizons.is_empty() {
            self.horizons = match self.setting {
                ExperimentSetting::Continuous => log_grid(100, 100_000, 10),
                ExperimentSetting::Finite => log_grid(1_000, 100_000, 10),
            };
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.horizons.is_empty() || self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("horizon grid must be nonempty and strictly increasing".into()));
        }
        if self.horizons[0] < 1 {
            return Err(Error::Config("horizons must be >= 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("at least one algorithm is required".into()));
        }
        Ok(())
    }

    /// Named scenarios: `continuous-1..4`, `finite-1..4`, `dilemma`,
    /// `theorem-gamma`, `timing`.
    pub fn preset(name: &str) -> Result<Self> {
        use ArrivalPlan::*;
        let continuous = |spec: DistributionSpec| Fixed { spec };
        let (arrivals, resources, setting, algorithms) = match name {
            "continuous-1" => (continuous(DistributionSpec::ContinuousU1 { m: 1 }), ResourceLaw::Uniform, ExperimentSetting::Continuous, default_algorithms()),
            "continuous-2" => (continuous(DistributionSpec::MultiSecretary), ResourceLaw::Uniform, ExperimentSetting::Continuous, default_algorithms()),
            "continuous-3" => (continuous(DistributionSpec::BetaCont), ResourceLaw::Uniform, ExperimentSetting::Continuous, default_algorithms()),
            "continuous-4" => (continuous(DistributionSpec::WideUniform), ResourceLaw::Uniform, ExperimentSetting::Continuous, default_algorithms()),
            "finite-1" => (RandomFinite { m: 2, k: 5, recipe: AtomRecipe::Uniform }, ResourceLaw::Uniform, ExperimentSetting::Finite, default_algorithms()),
            "finite-2" => (RandomFinite { m: 5, k: 5, recipe: AtomRecipe::FoldedNormal }, ResourceLaw::FoldedNormal, ExperimentSetting::Finite, default_algorithms()),
            "finite-3" => (RandomFinite { m: 5, k: 10, recipe: AtomRecipe::Exponential }, ResourceLaw::Exponential, ExperimentSetting::Finite, default_algorithms()),
            "finite-4" => (RandomFinite { m: 2, k: 10, recipe: AtomRecipe::Gamma }, ResourceLaw::Uniform, ExperimentSetting::Finite, default_algorithms()),
            "dilemma" => (
                continuous(DistributionSpec::MultiSecretary),
                ResourceLaw::Fixed(vec![0.5]),
                ExperimentSetting::Continuous,
                vec![AlgoSpec::M1, AlgoSpec::M2, AlgoSpec::LearnerAsDecider { mu: 0.5 }],
            ),
            "theorem-gamma" => (
                continuous(DistributionSpec::MultiSecretary),
                ResourceLaw::Fixed(vec![0.5]),
                ExperimentSetting::Continuous,
                vec![AlgoSpec::M1, AlgoSpec::M2Theorem { gamma: 2.0, mu: 0.5, diam: 0.0, scale: 0.05 }],
            ),
            "timing" => {
                let mut plan = Self::preset("continuous-1")?;
                plan.name = "timing".into();
                plan.arrivals = continuous(DistributionSpec::ContinuousU1 { m: 2 });
                plan.algorithms = vec![AlgoSpec::M1, AlgoSpec::M2, AlgoSpec::Resolving { every: None }];
                plan.horizons = vec![1_000, 10_000, 100_000];
                plan.trials = 10;
                plan.timing = true;
                return Ok(plan);
            }
            other => return Err(Error::Config(format!("unknown scenario {other:?}"))),
        };
        let mut plan = Self {
            name: name.into(),
            dist_label: name.into(),
            arrivals,
            resources,
            setting,
            algorithms,
            horizons: Vec::new(),
            trials: default_trials(),
            seed: 0,
            timing: false,
            keep_duals: false,
        };
        plan.fill_defaults();
        Ok(plan)
    }
}

/// Everything one plan run produced.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    /// Sorted by `(T, trial, algorithm order)`.
    pub reports: Vec<RunReport>,
    pub rows: Vec<AggregateRow>,
    /// `(T, trial, error)` of excluded trials.
    pub failures: Vec<(usize, usize, String)>,
}

impl PlanOutcome {
    pub fn trials_csv(&self) -> String {
        let mut out = String::from(REPORT_CSV_HEADER);
        out.push('\n');
        for r in &self.reports {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    /// Writes `trials.csv`, `aggregate.csv` and plot data into `dir`.
    pub fn write(&self, dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let trials = dir.join("trials.csv");
        std::fs::write(&trials, self.trials_csv())?;
        let agg = dir.join("aggregate.csv");
        std::fs::write(&agg, aggregate_csv(&self.rows))?;
        let mut files = vec![trials, agg];
        files.extend(emit_plot_data(&self.rows, dir, svg)?);
        Ok(files)
    }
}

/// `f(y*)` when it is available in closed form or from the expected LP.
fn expected_optimum(dist: &DistributionSpec, d: &[f64]) -> Option<f64> {
    match dist {
        DistributionSpec::MultiSecretary if d[0] <= 1.0 => {
            Some(multisecretary_dual(multisecretary_optimum(d[0]), d[0]))
        }
        DistributionSpec::Finite(s) => hindsight::solve_expected_dual_finite(s, d).ok().map(|e| e.solution.value),
        _ => None,
    }
}

/// Inputs of one `(T, trial)` job, as the harness builds them.
#[derive(Debug, Clone)]
pub struct Trial {
    pub instance: Instance,
    pub dist: DistributionSpec,
    pub bounds: BoundsSpec,
    pub seed: u64,
}

pub fn build_trial(plan: &ExperimentPlan, horizon: usize, trial: usize) -> Result<Trial> {
    let seed = mix_seed(plan.seed, trial as u64);
    let dist = plan.arrivals.realize(seed)?;
    let d = plan.resources.sample(plan.arrivals.dim(), &mut StreamRng::resources(seed));
    let bounds = derive_bounds(&dist, &plan.resources)?;
    let instance = MarketConfig::new(horizon, d, dist.clone(), seed)?.generate();
    Ok(Trial { instance, dist, bounds, seed })
}

struct PolicyOutput {
    trace: DecisionTrace,
    t_e: usize,
    duals: Vec<(usize, Vec<f64>)>,
    config: String,
}

fn run_policy(algo: &AlgoSpec, plan: &ExperimentPlan, trial: &Trial) -> Result<PolicyOutput> {
    let inst = &trial.instance;
    let horizon = inst.horizon();
    let zeros = DualPrice::zeros(inst.m);
    Ok(match algo {
        AlgoSpec::M1 => {
            let schedule = StepsizeSchedule::benchmark(&trial.bounds, horizon);
            let run = benchmark_subgradient(inst, schedule, &zeros)?;
            PolicyOutput { trace: run.trace, t_e: 0, duals: run.dual_log, config: json(&schedule) }
        }
        AlgoSpec::M2 | AlgoSpec::M2Theorem { .. } => {
            let tp = match algo {
                AlgoSpec::M2Theorem { gamma, mu, diam, scale } => {
                    let eb = ErrorBoundSpec::new(*gamma, *mu, *diam)?;
                    configure_two_phase_theorem(horizon, &eb, &trial.bounds, *scale)?
                }
                _ => configure_two_phase_experiment(horizon, plan.setting, &trial.bounds)?,
            };
            let run = two_phase(inst, &tp, &trial.bounds)?;
            PolicyOutput { trace: run.trace, t_e: tp.t_e, duals: run.dual_log, config: json(&tp) }
        }
        AlgoSpec::LearnerAsDecider { mu } => {
            let run = learner_as_decider(inst, *mu)?;
            let schedule = StepsizeSchedule::InverseTime { mu: *mu };
            PolicyOutput { trace: run.trace, t_e: 0, duals: run.dual_log, config: json(&schedule) }
        }
        AlgoSpec::Resolving { every } => {
            let every = every.unwrap_or_else(|| (horizon as f64).sqrt().ceil() as usize);
            let run = resolving_baseline(inst, every)?;
            let config = format!("{{\"resolve_every\":{every},\"infeasible\":{}}}", run.infeasible);
            PolicyOutput { trace: run.trace, t_e: 0, duals: vec![(horizon + 1, run.last_price)], config }
        }
    })
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("configs serialize")
}

fn run_trial(plan: &ExperimentPlan, horizon: usize, trial_id: usize) -> Result<Vec<RunReport>> {
    let started = Instant::now();
    let trial = build_trial(plan, horizon, trial_id)?;
    let inst = &trial.instance;
    let b = inst.budget();
    let hindsight_value = hindsight::solve(inst)?.value;
    let f_star = expected_optimum(&trial.dist, &inst.d);
    let mut out = Vec::with_capacity(plan.algorithms.len());
    for algo in &plan.algorithms {
        let t0 = Instant::now();
        let policy = run_policy(algo, plan, &trial)?;
        let wall = t0.elapsed().as_secs_f64();
        let v_te = match (f_star, policy.t_e) {
            (Some(f), t_e) if t_e > 0 => Some(exploration_score(&policy.trace, inst, f, t_e)?),
            _ => None,
        };
        out.push(RunReport {
            trial_id,
            algo: algo.label().into(),
            dist: plan.dist_label.clone(),
            horizon,
            m: inst.m,
            seed: trial.seed,
            regret: regret(&policy.trace, hindsight_value),
            violation: violation(&policy.trace, &b),
            hindsight_value,
            v_te,
            t_e: policy.t_e,
            wall_time: plan.timing.then_some(wall),
            total_time: plan.timing.then(|| started.elapsed().as_secs_f64()),
            dual_samples: if plan.keep_duals { policy.duals } else { Vec::new() },
            proxy: matches!(algo, AlgoSpec::Resolving { .. }),
            bounds_envelope: trial.bounds.envelope,
            resolved_config: policy.config,
        });
    }
    Ok(out)
}

/// Worker count from [`WORKERS_ENV`], if set.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()).filter(|n| *n >= 1)
}

/// Runs every `(T, trial)` pair across a worker pool and aggregates.
/// Results do not depend on the number of workers.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanOutcome> {
    run_plan_with_workers(plan, workers_from_env())
}

pub fn run_plan_with_workers(plan: &ExperimentPlan, workers: Option<usize>) -> Result<PlanOutcome> {
    plan.validate()?;
    let jobs: Vec<(usize, usize)> = plan
        .horizons
        .iter()
        .flat_map(|&t| (0..plan.trials).map(move |i| (t, i)))
        .collect();
    type JobResult = ((usize, usize), Result<Vec<RunReport>>);
    let work = || -> Vec<JobResult> {
        jobs.par_iter().map(|&(t, i)| ((t, i), run_trial(plan, t, i))).collect()
    };
    let results = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for ((t, i), res) in results {
        match res {
            Ok(rs) => reports.extend(rs),
            Err(e) => failures.push((t, i, e.to_string())),
        }
    }
    if failures.len() * 100 > jobs.len() {
        let (t, i, e) = &failures[0];
        return Err(Error::Config(format!(
            "{} of {} trials failed (first: T={t}, trial {i}: {e})",
            failures.len(),
            jobs.len()
        )));
    }
    let order = |label: &str| plan.algorithms.iter().position(|a| a.label() == label).unwrap_or(usize::MAX);
    reports.sort_by(|a, b| {
        (a.horizon, a.trial_id, order(&a.algo)).cmp(&(b.horizon, b.trial_id, order(&b.algo)))
    });
    failures.sort_by_key(|f| (f.0, f.1));
    let labels: Vec<&str> = plan.algorithms.iter().map(AlgoSpec::label).collect();
    let rows = aggregate(&reports, &labels);
    Ok(PlanOutcome { reports, rows, failures })
}
