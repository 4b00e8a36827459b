//! Dual-side machinery: the threshold decision rule, the stochastic
//! subgradient oracle, projections, dual evaluations and the distance
//! diagnostics used to measure the error-bound behaviour empirically.

use serde::{Deserialize, Serialize};

use crate::distributions::mix_seed;
use crate::domain::{ArrivalView, Instance, MarketConfig};
use crate::error::{Error, Result};
use crate::hindsight;

/// Convergence tolerance of the alternating projection schemes.
pub const PROJECTION_TOL: f64 = 1e-12;
const PROJECTION_MAX_SWEEPS: usize = 200_000;

pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

pub(crate) fn dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Nonnegative vector of resource prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPrice(Vec<f64>);

impl DualPrice {
    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    /// Fails on negative or non-finite entries.
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("dual price must be >= 0: {y:?}")));
        }
        Ok(Self(y))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// `y <- [y - step * g]_+` in place.
    pub fn step(&mut self, step: f64, g: &[f64]) {
        for (yi, gi) in self.0.iter_mut().zip(g) {
            *yi = (*yi - step * gi).max(0.0);
        }
    }
}

impl AsRef<[f64]> for DualPrice {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Accept iff `c >= <a, y>`; ties accept.
pub fn decide(y: &[f64], arrival: ArrivalView<'_>) -> bool {
    arrival.c >= dot(arrival.a, y)
}

/// Writes `g = d - a * x(y)` into `g` and returns the decision.
pub fn subgradient_into(y: &[f64], arrival: ArrivalView<'_>, d: &[f64], g: &mut [f64]) -> bool {
    let accept = decide(y, arrival);
    if accept {
        for ((gi, di), ai) in g.iter_mut().zip(d).zip(arrival.a) {
            *gi = di - ai;
        }
    } else {
        g.copy_from_slice(d);
    }
    accept
}

/// Stochastic subgradient of the sample dual at `y`: `d - a * 1{c >= <a, y>}`.
pub fn stochastic_subgradient(y: &[f64], arrival: ArrivalView<'_>, d: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; d.len()];
    subgradient_into(y, arrival, d, &mut g);
    g
}

/// Componentwise `max(y, 0)`.
pub fn project_nonneg(y: &[f64]) -> DualPrice {
    DualPrice(y.iter().map(|v| v.max(0.0)).collect())
}

/// Euclidean projection onto `{y >= 0 : ||y - center|| <= radius}`
/// (`center = None` means the origin).
///
/// Origin-centred balls use the closed form clip-then-scale. Other centres
/// use Dykstra's alternating projections between the orthant and the ball.
pub fn project_ball_orthant(y: &[f64], radius: f64, center: Option<&[f64]>) -> Result<DualPrice> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("ball radius must be > 0, got {radius}")));
    }
    match center {
        None => Ok(DualPrice(clip_then_scale(y, radius))),
        Some(c) if c.iter().all(|v| *v == 0.0) => Ok(DualPrice(clip_then_scale(y, radius))),
        Some(c) => {
            let sets = [ConvexSet::Orthant, ConvexSet::Ball { center: c.to_vec(), radius }];
            Ok(DualPrice(dykstra(y, &sets)))
        }
    }
}

/// Projection onto `{y >= 0, ||y|| <= outer} ∩ B(center, radius)`, the
/// feasible region of one ASSG stage.
pub fn project_stage_region(y: &[f64], outer: f64, center: &[f64], radius: f64) -> DualPrice {
    let sets = [
        ConvexSet::Orthant,
        ConvexSet::Ball { center: vec![0.0; y.len()], radius: outer },
        ConvexSet::Ball { center: center.to_vec(), radius },
    ];
    DualPrice(dykstra(y, &sets))
}

fn clip_then_scale(y: &[f64], radius: f64) -> Vec<f64> {
    let mut out: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
    let n = norm(&out);
    if n > radius {
        let s = radius / n;
        out.iter_mut().for_each(|v| *v *= s);
    }
    out
}

/// Closed convex sets with explicit projections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConvexSet {
    Orthant,
    Ball { center: Vec<f64>, radius: f64 },
    /// `<normal, y> <= rhs`
    HalfSpace { normal: Vec<f64>, rhs: f64 },
    /// `<normal, y> = rhs`
    HyperPlane { normal: Vec<f64>, rhs: f64 },
}

impl ConvexSet {
    fn project(&self, y: &mut [f64]) {
        match self {
            Self::Orthant => y.iter_mut().for_each(|v| *v = v.max(0.0)),
            Self::Ball { center, radius } => {
                let r = dist(y, center);
                if r > *radius {
                    let s = radius / r;
                    for (v, c) in y.iter_mut().zip(center) {
                        *v = c + (*v - c) * s;
                    }
                }
            }
            Self::HalfSpace { normal, rhs } => {
                let excess = dot(normal, y) - rhs;
                let nn = dot(normal, normal);
                if excess > 0.0 && nn > 0.0 {
                    for (v, n) in y.iter_mut().zip(normal) {
                        *v -= excess / nn * n;
                    }
                }
            }
            Self::HyperPlane { normal, rhs } => {
                let excess = dot(normal, y) - rhs;
                let nn = dot(normal, normal);
                if nn > 0.0 {
                    for (v, n) in y.iter_mut().zip(normal) {
                        *v -= excess / nn * n;
                    }
                }
            }
        }
    }

    fn contains(&self, y: &[f64], tol: f64) -> bool {
        match self {
            Self::Orthant => y.iter().all(|v| *v >= -tol),
            Self::Ball { center, radius } => dist(y, center) <= radius + tol,
            Self::HalfSpace { normal, rhs } => dot(normal, y) <= rhs + tol,
            Self::HyperPlane { normal, rhs } => (dot(normal, y) - rhs).abs() <= tol,
        }
    }
}

/// Dykstra's algorithm: converges to the projection of `y` onto the
/// intersection of `sets`. Stops once a full sweep moves the iterate by
/// less than [`PROJECTION_TOL`].
pub fn dykstra(y: &[f64], sets: &[ConvexSet]) -> Vec<f64> {
    let n = y.len();
    // fast path: the first set's projection may already be feasible
    let mut x = y.to_vec();
    if let Some(first) = sets.first() {
        first.project(&mut x);
        if sets.iter().all(|s| s.contains(&x, 0.0)) {
            return x;
        }
    }
    let mut x = y.to_vec();
    let mut incr = vec![vec![0.0; n]; sets.len()];
    let mut prev = vec![0.0; n];
    let mut buf = vec![0.0; n];
    for _ in 0..PROJECTION_MAX_SWEEPS {
        prev.copy_from_slice(&x);
        for (set, p) in sets.iter().zip(incr.iter_mut()) {
            for i in 0..n {
                buf[i] = x[i] + p[i];
            }
            let before = buf.clone();
            set.project(&mut buf);
            for i in 0..n {
                p[i] = before[i] - buf[i];
                x[i] = buf[i];
            }
        }
        let moved = dist(&x, &prev);
        if moved <= PROJECTION_TOL * (1.0 + norm(&x)) {
            break;
        }
    }
    x
}

/// `f_T(y) = <d, y> + (1/T) sum_t [c_t - <a_t, y>]_+`.
pub fn sample_dual_value(y: &[f64], instance: &Instance) -> Result<f64> {
    if instance.horizon() == 0 {
        return Err(Error::InvalidArgument("dual value needs at least one arrival".into()));
    }
    let hinge: f64 = instance.iter().map(|arr| (arr.c - dot(arr.a, y)).max(0.0)).sum();
    Ok(dot(&instance.d, y) + hinge / instance.horizon() as f64)
}

/// Expected dual of the multi-secretary law (`a = 1`, `c ~ U[0, 1]`):
/// `f(y) = d y + E[c - y]_+`.
pub fn multisecretary_dual(y: f64, d: f64) -> f64 {
    let hinge = if y <= 0.0 {
        0.5 - y
    } else if y >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 - y).powi(2)
    };
    d * y + hinge
}

/// `f'(y) = d - P(c >= y)` for the multi-secretary law.
pub fn multisecretary_dual_derivative(y: f64, d: f64) -> f64 {
    d - (1.0 - y).clamp(0.0, 1.0)
}

/// Minimizer `1 - d` of [`multisecretary_dual`] (for `d in (0, 1]`).
pub fn multisecretary_optimum(d: f64) -> f64 {
    (1.0 - d).max(0.0)
}

/// Polyhedral description of an optimal dual set
/// `{y >= 0, <n_j, y> (<=|=) r_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalFace {
    pub constraints: Vec<ConvexSet>,
    /// A vertex of the face (the simplex solution).
    pub vertex: Vec<f64>,
    pub singleton: bool,
}

impl OptimalFace {
    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        if self.singleton {
            return self.vertex.clone();
        }
        let mut sets = vec![ConvexSet::Orthant];
        sets.extend(self.constraints.iter().cloned());
        dykstra(y, &sets)
    }

    /// Minimum-norm element.
    pub fn min_norm(&self) -> Vec<f64> {
        self.project(&vec![0.0; self.vertex.len()])
    }
}

/// Dual error-bound parameters `f(y) - f(y*) >= mu * dist(y, Y*)^gamma`,
/// with an optional description of `Y*` for distance diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBoundSpec {
    pub gamma: f64,
    pub mu: f64,
    pub diam_ystar: f64,
    pub y_star: Option<Vec<f64>>,
    pub face: Option<OptimalFace>,
}

impl ErrorBoundSpec {
    pub fn new(gamma: f64, mu: f64, diam_ystar: f64) -> Result<Self> {
        if !(gamma >= 1.0) || !(mu > 0.0) || !(diam_ystar >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "error bound needs gamma >= 1, mu > 0, diam >= 0 (got {gamma}, {mu}, {diam_ystar})"
            )));
        }
        Ok(Self { gamma, mu, diam_ystar, y_star: None, face: None })
    }

    pub fn with_optimum(mut self, y_star: Vec<f64>) -> Self {
        self.y_star = Some(y_star);
        self
    }

    pub fn with_face(mut self, face: OptimalFace) -> Self {
        if self.y_star.is_none() {
            self.y_star = Some(face.min_norm());
        }
        self.face = Some(face);
        self
    }

    /// The multi-secretary law with `d = 1/2`: `gamma = 2`, `mu = 1/2`,
    /// `y* = 1/2`.
    pub fn multisecretary() -> Self {
        Self { gamma: 2.0, mu: 0.5, diam_ystar: 0.0, y_star: Some(vec![0.5]), face: None }
    }
}

/// `dist(y, Y*)`: projection onto the optimal face when one is known,
/// otherwise distance to the recorded optimum.
pub fn dist_to_optimal(y: &[f64], eb: &ErrorBoundSpec) -> Result<f64> {
    if let Some(face) = &eb.face {
        return Ok(dist(y, &face.project(y)));
    }
    match &eb.y_star {
        Some(ys) if ys.len() == y.len() => Ok(dist(y, ys)),
        Some(ys) => Err(Error::InvalidArgument(format!(
            "optimum has dimension {}, point has {}",
            ys.len(),
            y.len()
        ))),
        None => Err(Error::InvalidArgument("error bound spec carries no optimum".into())),
    }
}

/// Mean of `dist(y*_T, Y*)^gamma` over independent trials at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualConvergenceStat {
    pub horizon: usize,
    pub trials: usize,
    pub mean: f64,
}

/// Hindsight-dual convergence statistic. Trial `i` uses master seed
/// `mix_seed(config.seed, i)`.
pub fn empirical_dual_convergence(
    config: &MarketConfig,
    eb: &ErrorBoundSpec,
    trials: usize,
) -> Result<DualConvergenceStat> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let mut total = 0.0;
    for i in 0..trials {
        let mut cfg = config.clone();
        cfg.seed = mix_seed(config.seed, i as u64);
        let inst = cfg.generate();
        let sol = hindsight::solve(&inst)?;
        total += dist_to_optimal(&sol.y, eb)?.powf(eb.gamma);
    }
    Ok(DualConvergenceStat { horizon: config.horizon, trials, mean: total / trials as f64 })
}

/// Empirical first and second moments of the subgradient oracle at a fixed
/// `y`: returns `(mean g, mean ||g||^2)`.
pub fn subgradient_moments(y: &[f64], instance: &Instance) -> (Vec<f64>, f64) {
    let m = instance.m;
    let mut mean = vec![0.0; m];
    let mut second = 0.0;
    let mut g = vec![0.0; m];
    for arr in instance.iter() {
        subgradient_into(y, arr, &instance.d, &mut g);
        for (acc, gi) in mean.iter_mut().zip(&g) {
            *acc += gi;
        }
        second += dot(&g, &g);
    }
    let n = instance.horizon().max(1) as f64;
    mean.iter_mut().for_each(|v| *v /= n);
    (mean, second / n)
}
