//! Seeded arrival and resource generators.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`), a
//! counter-based generator. A master seed is expanded with
//! `SeedableRng::seed_from_u64` and every consumer reads its own stream
//! (`set_stream`): arrivals, resource vector, finite-support atoms. Streams
//! are independent, so the arrival sequence of a trial does not depend on
//! whether its resource vector was drawn first.
//!
//! Samplers (so alternate implementations can match distributions):
//! * uniform `U[lo, hi]`: `lo + (hi - lo) * u` with a 53-bit `u in [0, 1)`;
//! * normal: ziggurat (`rand_distr::StandardNormal`);
//! * exponential: ziggurat on `Exp(1)` divided by the rate;
//! * gamma: Marsaglia–Tsang squeeze/rejection (`rand_distr::Gamma`);
//! * beta: Cheng's BB/BC rejection (`rand_distr::Beta`);
//! * finite support: inversion of the cumulative probability vector with
//!   one uniform;
//! * random probability vector: normalized i.i.d. `Exp(1)` draws (uniform
//!   on the simplex).

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{Arrival, BoundsSpec};
use crate::error::{Error, Result};

const ARRIVAL_STREAM: u64 = 1;
const RESOURCE_STREAM: u64 = 2;
const ATOM_STREAM: u64 = 3;

/// 99.999th percentile of `|Z|`, `Z ~ N(0, 1)`.
const FOLDED_NORMAL_Q: f64 = 4.417_173_413_469_02;
/// 99.999th percentile of `Exp(1)`, i.e. `ln(1e5)`.
const EXP_Q: f64 = 11.512_925_464_970_229;

/// A ChaCha8 substream of a master seed.
#[derive(Debug, Clone)]
pub struct StreamRng(ChaCha8Rng);

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self(rng)
    }

    pub fn arrivals(seed: u64) -> Self {
        Self::new(seed, ARRIVAL_STREAM)
    }

    pub fn resources(seed: u64) -> Self {
        Self::new(seed, RESOURCE_STREAM)
    }

    pub fn atoms(seed: u64) -> Self {
        Self::new(seed, ATOM_STREAM)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    pub fn exp(&mut self, rate: f64) -> f64 {
        let e: f64 = Exp1.sample(&mut self.0);
        e / rate
    }

    pub fn gamma(&mut self, shape: f64, scale: f64) -> f64 {
        Gamma::new(shape, scale).expect("gamma parameters are positive").sample(&mut self.0)
    }

    pub fn beta(&mut self, alpha: f64, beta: f64) -> f64 {
        Beta::new(alpha, beta).expect("beta parameters are positive").sample(&mut self.0)
    }

    pub fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.0
    }
}

/// Deterministic 64-bit mixer (SplitMix64 finalizer) for deriving disjoint
/// per-trial master seeds.
pub fn mix_seed(master: u64, salt: u64) -> u64 {
    let mut z = master ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// User-supplied arrival law.
pub trait ArrivalSampler: Send + Sync {
    fn dim(&self) -> usize;
    /// Writes `a` into `a_out` and returns `c`.
    fn sample_into(&self, rng: &mut StreamRng, a_out: &mut [f64]) -> f64;
    /// `(a_max, c_max)`.
    fn bounds(&self) -> (f64, f64);
    fn name(&self) -> String {
        "custom".into()
    }
}

/// Arrival law of one instance family.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// `a_i, c ~ U[0, 2]` i.i.d.; `m = 1` in the growth experiments, `m = 2`
    /// in the timing table.
    ContinuousU1 { m: usize },
    /// `a = 1`, `c ~ U[0, 1]`.
    MultiSecretary,
    /// `m = 5`, `a_i ~ Beta(1, 8)`, `c ~ U[0, 3]`.
    BetaCont,
    /// `m = 5`, `a_i ~ U[1, 6]`, `c ~ U[0, 3]`.
    WideUniform,
    Finite(FiniteSupport),
    #[serde(skip)]
    Custom(Arc<dyn ArrivalSampler>),
}

impl fmt::Debug for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ContinuousU1 { m } => write!(f, "ContinuousU1 {{ m: {m} }}"),
            Self::MultiSecretary => write!(f, "MultiSecretary"),
            Self::BetaCont => write!(f, "BetaCont"),
            Self::WideUniform => write!(f, "WideUniform"),
            Self::Finite(s) => f.debug_tuple("Finite").field(s).finish(),
            Self::Custom(s) => write!(f, "Custom({})", s.name()),
        }
    }
}

impl DistributionSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::ContinuousU1 { m } => *m,
            Self::MultiSecretary => 1,
            Self::BetaCont | Self::WideUniform => 5,
            Self::Finite(s) => s.dim(),
            Self::Custom(s) => s.dim(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::ContinuousU1 { .. } => "continuous-1".into(),
            Self::MultiSecretary => "multi-secretary".into(),
            Self::BetaCont => "beta".into(),
            Self::WideUniform => "wide-uniform".into(),
            Self::Finite(s) => format!("finite-K{}", s.len()),
            Self::Custom(s) => s.name(),
        }
    }

    /// Writes `a` into `a_out` (length `dim()`) and returns `c`.
    pub fn sample_into(&self, rng: &mut StreamRng, a_out: &mut [f64]) -> f64 {
        match self {
            Self::ContinuousU1 { .. } => {
                for ai in a_out.iter_mut() {
                    *ai = rng.uniform(0.0, 2.0);
                }
                rng.uniform(0.0, 2.0)
            }
            Self::MultiSecretary => {
                a_out[0] = 1.0;
                rng.uniform(0.0, 1.0)
            }
            Self::BetaCont => {
                for ai in a_out.iter_mut() {
                    *ai = rng.beta(1.0, 8.0);
                }
                rng.uniform(0.0, 3.0)
            }
            Self::WideUniform => {
                for ai in a_out.iter_mut() {
                    *ai = rng.uniform(1.0, 6.0);
                }
                rng.uniform(0.0, 3.0)
            }
            Self::Finite(s) => {
                let k = s.draw_index(rng);
                a_out.copy_from_slice(&s.atoms[k].a);
                s.atoms[k].c
            }
            Self::Custom(s) => s.sample_into(rng, a_out),
        }
    }

    /// `(a_max, c_max)`: almost-sure bounds on `|a_i|` and `|c|`.
    pub fn request_bounds(&self) -> (f64, f64) {
        match self {
            Self::ContinuousU1 { .. } => (2.0, 2.0),
            Self::MultiSecretary => (1.0, 1.0),
            Self::BetaCont => (1.0, 3.0),
            Self::WideUniform => (6.0, 3.0),
            Self::Finite(s) => s.request_bounds(),
            Self::Custom(s) => s.bounds(),
        }
    }

    /// Whether the law's bounds are envelopes of an unbounded recipe.
    pub fn is_envelope(&self) -> bool {
        match self {
            Self::Finite(s) => s.recipe.is_some_and(|r| r.is_unbounded()),
            _ => false,
        }
    }
}

/// One arrival from `spec`.
pub fn sample_arrival(spec: &DistributionSpec, rng: &mut StreamRng) -> Arrival {
    let mut a = vec![0.0; spec.dim()];
    let c = spec.sample_into(rng, &mut a);
    Arrival::new(c, a)
}

/// Law of the per-period resource vector `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ResourceLaw {
    Fixed(Vec<f64>),
    /// `d_i ~ U[1/3, 2/3]`.
    Uniform,
    /// `d_i = (1 + |X|) / 3`, `X ~ N(0, 1)`.
    FoldedNormal,
    /// `d_i = (1 + |X|) / 3`, `X ~ Exp(1)`.
    Exponential,
}

impl ResourceLaw {
    pub fn sample(&self, m: usize, rng: &mut StreamRng) -> Vec<f64> {
        match self {
            Self::Fixed(d) => d.clone(),
            Self::Uniform => (0..m).map(|_| rng.uniform(1.0 / 3.0, 2.0 / 3.0)).collect(),
            Self::FoldedNormal => (0..m).map(|_| (1.0 + rng.normal().abs()) / 3.0).collect(),
            Self::Exponential => (0..m).map(|_| (1.0 + rng.exp(1.0)) / 3.0).collect(),
        }
    }

    /// `(d_lo, d_hi, envelope)`.
    pub fn bounds(&self) -> (f64, f64, bool) {
        match self {
            Self::Fixed(d) => {
                let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi, false)
            }
            Self::Uniform => (1.0 / 3.0, 2.0 / 3.0, false),
            Self::FoldedNormal => (1.0 / 3.0, (1.0 + FOLDED_NORMAL_Q) / 3.0, true),
            Self::Exponential => (1.0 / 3.0, (1.0 + EXP_Q) / 3.0, true),
        }
    }
}

/// `d` for a trial, drawn from the resource substream of `seed`.
pub fn sample_resources(law: &ResourceLaw, m: usize, rng: &mut StreamRng) -> Vec<f64> {
    law.sample(m, rng)
}

/// Bounds for an arrival law paired with a resource law.
pub fn derive_bounds(dist: &DistributionSpec, law: &ResourceLaw) -> Result<BoundsSpec> {
    let (a_max, c_max) = dist.request_bounds();
    let (d_lo, d_hi, env) = law.bounds();
    Ok(BoundsSpec::new(dist.dim(), a_max, c_max, d_lo, d_hi)?
        .with_envelope(env || dist.is_envelope()))
}

/// Atom recipes for finite-support laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomRecipe {
    /// `c_k ~ U[0, 1]`, `a_ki ~ U[0, 3]`.
    Uniform,
    /// `c_k = |N(0, 1)|`, `a_ki = |N(1, 1)|`.
    FoldedNormal,
    /// `c_k ~ Exp(rate 1)`, `a_ki ~ Exp(rate 2)`.
    Exponential,
    /// `c_k ~ U[1, 2]`, `a_ki ~ Gamma(shape 2, scale 3)`.
    Gamma,
}

impl AtomRecipe {
    pub fn is_unbounded(self) -> bool {
        matches!(self, Self::FoldedNormal | Self::Exponential | Self::Gamma)
    }

    fn draw(self, rng: &mut StreamRng, m: usize) -> Arrival {
        let (c, a) = match self {
            Self::Uniform => {
                let c = rng.uniform(0.0, 1.0);
                (c, (0..m).map(|_| rng.uniform(0.0, 3.0)).collect())
            }
            Self::FoldedNormal => {
                let c = rng.normal().abs();
                (c, (0..m).map(|_| (1.0 + rng.normal()).abs()).collect())
            }
            Self::Exponential => {
                let c = rng.exp(1.0);
                (c, (0..m).map(|_| rng.exp(2.0)).collect())
            }
            Self::Gamma => {
                let c = rng.uniform(1.0, 2.0);
                (c, (0..m).map(|_| rng.gamma(2.0, 3.0)).collect())
            }
        };
        Arrival::new(c, a)
    }
}

/// A finite support: `K` atoms with a probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSupport {
    pub atoms: Vec<Arrival>,
    pub probs: Vec<f64>,
    #[serde(default)]
    pub recipe: Option<AtomRecipe>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl FiniteSupport {
    pub fn new(atoms: Vec<Arrival>, probs: Vec<f64>) -> Result<Self> {
        let mut s = Self { atoms, probs, recipe: None, cumulative: Vec::new() };
        s.validate()?;
        s.rebuild_cumulative();
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() || self.atoms.len() != self.probs.len() {
            return Err(Error::InvalidArgument(format!(
                "finite support needs K >= 1 atoms with matching probabilities ({} atoms, {} probs)",
                self.atoms.len(),
                self.probs.len()
            )));
        }
        let m = self.atoms[0].a.len();
        if m == 0 || self.atoms.iter().any(|a| a.a.len() != m) {
            return Err(Error::InvalidArgument("atoms must share a positive dimension".into()));
        }
        if self.probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidArgument("probabilities must be nonnegative".into()));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}, not 1")));
        }
        for (i, x) in self.atoms.iter().enumerate() {
            if self.atoms[..i].contains(x) {
                return Err(Error::InvalidArgument(format!("atom {i} duplicates an earlier atom")));
            }
        }
        Ok(())
    }

    fn rebuild_cumulative(&mut self) {
        let mut acc = 0.0;
        self.cumulative = self
            .probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
    }

    /// Parses the JSON replay format (`{"atoms": [...], "probs": [...]}`).
    pub fn from_json(text: &str) -> Result<Self> {
        let mut s: FiniteSupport = serde_json::from_str(text)?;
        s.validate()?;
        s.rebuild_cumulative();
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("finite support serializes")
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].a.len()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn draw_index(&self, rng: &mut StreamRng) -> usize {
        if self.cumulative.len() != self.probs.len() {
            // deserialized without going through from_json
            let mut acc = 0.0;
            let u = rng.uniform(0.0, 1.0);
            for (k, p) in self.probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return k;
                }
            }
            return self.last_positive();
        }
        let u = rng.uniform(0.0, 1.0);
        let k = self.cumulative.partition_point(|&cum| cum <= u);
        if k < self.len() && self.probs[k] > 0.0 {
            k
        } else {
            self.last_positive()
        }
    }

    fn last_positive(&self) -> usize {
        self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(self.len() - 1)
    }

    pub fn request_bounds(&self) -> (f64, f64) {
        let a_max = self
            .atoms
            .iter()
            .flat_map(|x| x.a.iter().map(|v| v.abs()))
            .fold(0.0, f64::max);
        let c_max = self.atoms.iter().map(|x| x.c.abs()).fold(0.0, f64::max);
        (a_max.max(f64::MIN_POSITIVE), c_max.max(f64::MIN_POSITIVE))
    }
}

/// Draws `K` distinct atoms from `recipe` and a uniform random probability
/// vector over them.
pub fn finite_support_build(
    m: usize,
    k: usize,
    recipe: AtomRecipe,
    rng: &mut StreamRng,
) -> Result<FiniteSupport> {
    if k < 1 {
        return Err(Error::InvalidArgument("support size K must be >= 1".into()));
    }
    if m < 1 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    let mut atoms: Vec<Arrival> = Vec::with_capacity(k);
    while atoms.len() < k {
        let atom = recipe.draw(rng, m);
        if !atoms.contains(&atom) {
            atoms.push(atom);
        }
    }
    let weights: Vec<f64> = (0..k).map(|_| rng.exp(1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    // absorb rounding so the vector sums to 1 within an ulp or two
    let drift: f64 = 1.0 - probs.iter().sum::<f64>();
    let last = probs.len() - 1;
    probs[last] = (probs[last] + drift).max(0.0);
    let mut support = FiniteSupport::new(atoms, probs)?;
    support.recipe = Some(recipe);
    Ok(support)
}
