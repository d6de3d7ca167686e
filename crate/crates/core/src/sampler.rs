//! Monte Carlo samplers used to cross-check the exact computations.
//!
//! All randomness flows through [`RngSpec`]: a `(seed, stream_id)` pair mapped
//! onto an independent ChaCha8 stream. Bulk runs split their replications into
//! fixed-size chunks, each on its own substream, and merge chunks in order, so
//! results do not depend on the number of worker threads.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{self, ConditionedDist, Family, OffspringModel};
use crate::rational::{self, Rational};
use crate::tree::PlaneTree;

/// Replications handled by one substream in bulk runs.
pub const CHUNK: usize = 4096;

/// Two-sided confidence level of every reported half-width.
pub const CONFIDENCE: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Stream for chunk `index` of a bulk run on this spec.
    pub fn substream(&self, index: u64) -> Self {
        Self { seed: self.seed, stream_id: (self.stream_id << 32) | index }
    }
}

/// Floating-point sampler for an offspring law.
#[derive(Clone, Debug)]
pub enum OffspringLaw {
    /// Inversion over cumulative probabilities.
    Table(Vec<f64>),
    /// Ge(1/2) on {0, 1, ...}.
    Geometric,
    /// Poisson(1).
    Poisson,
    /// `1 + Ge(1/2) + Ge(1/2)`: size-biased Ge(1/2).
    GeometricSizeBiased,
    /// `1 + Poisson(1)`: size-biased Poisson(1).
    PoissonSizeBiased,
}

impl OffspringLaw {
    fn table(probs: impl IntoIterator<Item = (usize, Rational)>) -> Self {
        let mut cdf = Vec::new();
        let mut acc = Rational::zero();
        for (j, p) in probs {
            cdf.resize(j, rational::to_f64(&acc));
            acc += p;
            cdf.push(rational::to_f64(&acc));
        }
        Self::Table(cdf)
    }

    /// Law of `xi`; the weights must already be a probability law.
    pub fn offspring(model: &OffspringModel) -> Result<Self> {
        if !model.is_normalized() {
            let total = model
                .total_weight()
                .map_or_else(|| "a tilted infinite series".to_string(), |t| t.to_string());
            return Err(Error::NotNormalized { total });
        }
        Ok(match (model.family(), model.max_degree()) {
            (Family::GeometricHalf, _) => Self::Geometric,
            (Family::PoissonOne, _) => Self::Poisson,
            (_, Some(m)) => Self::table((0..=m).map(|j| (j, model.weight(j)))),
            _ => unreachable!("only the geometric and Poisson families have infinite support"),
        })
    }

    /// Law of the size-biased `xi_hat` with `P(xi_hat = j) = j p_j`.
    pub fn size_biased(model: &OffspringModel) -> Result<Self> {
        match model.family() {
            Family::GeometricHalf | Family::PoissonOne if !model.is_tilted() => {
                Ok(if matches!(model.family(), Family::GeometricHalf) {
                    Self::GeometricSizeBiased
                } else {
                    Self::PoissonSizeBiased
                })
            }
            _ => Ok(Self::table(model::size_biased(model)?)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let geometric = || Geometric::new(0.5).expect("valid parameter");
        let poisson = || Poisson::new(1.0).expect("valid parameter");
        match self {
            Self::Table(cdf) => {
                let u: f64 = rng.random();
                cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
            }
            Self::Geometric => geometric().sample(rng) as usize,
            Self::Poisson => poisson().sample(rng) as usize,
            Self::GeometricSizeBiased => {
                let g = geometric();
                1 + g.sample(rng) as usize + g.sample(rng) as usize
            }
            Self::PoissonSizeBiased => 1 + poisson().sample(rng) as usize,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GwSample {
    Tree(PlaneTree),
    /// Generation stopped once the vertex count exceeded the cap.
    Overflow,
}

/// Unconditioned Galton-Watson sampler.
#[derive(Clone, Debug)]
pub struct GwSampler {
    law: OffspringLaw,
}

impl GwSampler {
    pub fn new(model: &OffspringModel) -> Result<Self> {
        Ok(Self { law: OffspringLaw::offspring(model)? })
    }

    /// Breadth-first generation with early abort above `size_cap` vertices.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, size_cap: usize) -> GwSample {
        let mut degrees = Vec::new();
        let mut count = 1;
        while degrees.len() < count {
            let d = self.law.sample(rng);
            count += d;
            if count > size_cap {
                return GwSample::Overflow;
            }
            degrees.push(d);
        }
        GwSample::Tree(PlaneTree::from_bfs_degrees(&degrees).expect("breadth-first generation is valid"))
    }
}

pub fn sample_gw<R: Rng + ?Sized>(model: &OffspringModel, rng: &mut R, size_cap: usize) -> Result<GwSample> {
    if size_cap == 0 {
        return Err(Error::InvalidArgument("size_cap must be >= 1".into()));
    }
    Ok(GwSampler::new(model)?.sample(rng, size_cap))
}

/// Uniform integer in `[0, bound)`, by rejection on the bit length.
fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    assert!(!bound.is_zero());
    let bits = bound.bits();
    let bytes = bits.div_ceil(8) as usize;
    let excess = (bytes as u64 * 8 - bits) as u32;
    let mut buf = vec![0u8; bytes];
    loop {
        rng.fill_bytes(&mut buf);
        if let Some(top) = buf.last_mut() {
            *top &= 0xffu8 >> excess;
        }
        let v = BigUint::from_bytes_le(&buf);
        if &v < bound {
            return v;
        }
    }
}

/// Exact inversion sampler over a conditioned distribution in canonical order.
#[derive(Clone, Debug)]
pub struct TableSampler {
    trees: Vec<PlaneTree>,
    cumulative: Vec<BigUint>,
    denominator: BigUint,
}

impl TableSampler {
    pub fn new(dist: &ConditionedDist) -> Self {
        let denominator = rational::common_denominator(dist.probs.values());
        let mut acc = BigInt::zero();
        let mut trees = Vec::with_capacity(dist.probs.len());
        let mut cumulative = Vec::with_capacity(dist.probs.len());
        for (t, p) in &dist.probs {
            acc += (p * Rational::from_integer(denominator.clone())).to_integer();
            trees.push(t.clone());
            cumulative.push(acc.to_biguint().expect("probabilities are nonnegative"));
        }
        let denominator = denominator.to_biguint().expect("denominators are positive");
        debug_assert_eq!(cumulative.last(), Some(&denominator));
        Self { trees, cumulative, denominator }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> PlaneTree {
        let u = uniform_below(rng, &self.denominator);
        let i = self.cumulative.partition_point(|c| c <= &u);
        self.trees[i].clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditionedMethod {
    ExactTable,
    Rejection { max_attempts: u64 },
}

/// Sampler for `T_n`, prepared once and reused across draws.
#[derive(Clone, Debug)]
pub enum ConditionedSampler {
    Table(TableSampler),
    Rejection { gw: GwSampler, n: usize, max_attempts: u64 },
}

impl ConditionedSampler {
    pub fn new(model: &OffspringModel, n: usize, method: ConditionedMethod) -> Result<Self> {
        match method {
            ConditionedMethod::ExactTable => {
                Ok(Self::Table(TableSampler::new(&model::conditioned_dist(model, n)?)))
            }
            ConditionedMethod::Rejection { max_attempts } => {
                if n == 0 {
                    return Err(Error::InvalidArgument("tree size must be >= 1".into()));
                }
                Ok(Self::Rejection { gw: GwSampler::new(model)?, n, max_attempts })
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PlaneTree> {
        match self {
            Self::Table(table) => Ok(table.sample(rng)),
            Self::Rejection { gw, n, max_attempts } => {
                for _ in 0..*max_attempts {
                    if let GwSample::Tree(t) = gw.sample(rng, *n) {
                        if t.size() == *n {
                            return Ok(t);
                        }
                    }
                }
                Err(Error::Exhausted { n: *n, attempts: *max_attempts })
            }
        }
    }
}

pub fn sample_conditioned<R: Rng + ?Sized>(
    model: &OffspringModel,
    n: usize,
    rng: &mut R,
    method: ConditionedMethod,
) -> Result<PlaneTree> {
    ConditionedSampler::new(model, n, method)?.sample(rng)
}

/// Uniform plane tree with `n` vertices in linear time.
///
/// A uniformly shuffled word with `n - 1` up-steps and `n` down-steps has
/// exactly one rotation whose proper prefixes stay nonnegative (the one
/// starting right after the first minimum of the prefix sums). Dropping the
/// final down-step of that rotation leaves a uniform Dyck path.
pub fn sample_uniform_plane<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PlaneTree> {
    if n == 0 {
        return Err(Error::InvalidArgument("tree size must be >= 1".into()));
    }
    let mut word: Vec<bool> = std::iter::repeat_n(true, n - 1).chain(std::iter::repeat_n(false, n)).collect();
    word.shuffle(rng);

    let mut height: i64 = 0;
    let mut min = (0i64, 0usize);
    for (i, &up) in word.iter().enumerate() {
        height += if up { 1 } else { -1 };
        if height < min.0 {
            min = (height, i);
        }
    }
    let start = min.1 + 1;
    let path: Vec<bool> = word[start..].iter().chain(&word[..start]).copied().take(2 * n - 2).collect();
    PlaneTree::from_dyck(&path)
}

/// Truncated simulation of the size-biased tree.
#[derive(Clone, Debug)]
pub struct SpineConfig {
    pub model: OffspringModel,
    /// Levels `0..depth` are simulated.
    pub depth: usize,
    pub replications: usize,
    pub rng: RngSpec,
}

impl SpineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 1 {
            return Err(Error::InvalidArgument("spine depth must be >= 1".into()));
        }
        if self.replications < 1 {
            return Err(Error::InvalidArgument("replications must be >= 1".into()));
        }
        if !self.model.is_critical() {
            return Err(Error::NotCritical {
                mean: self.model.mean().map_or_else(|| "infinite".into(), |m| m.to_string()),
            });
        }
        Ok(())
    }
}

/// Sample mean with a normal-approximation half-width at [`CONFIDENCE`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateRow {
    pub k: usize,
    pub mean: f64,
    pub half_width: f64,
    pub reps: usize,
    #[serde(with = "rational::serde_str_opt", skip_serializing_if = "Option::is_none")]
    pub target: Option<Rational>,
}

impl EstimateRow {
    pub fn from_values(k: usize, values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        let reps = values.len();
        let mean = values.iter().sum::<f64>() / reps as f64;
        let var = if reps > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64
        } else {
            0.0
        };
        Self { k, mean, half_width: z_score() * (var / reps as f64).sqrt(), reps, target: None }
    }

    pub fn with_target(mut self, target: Option<Rational>) -> Self {
        self.target = target;
        self
    }

    /// Whether `value` lies within `multiple` half-widths of the mean.
    pub fn covers(&self, value: f64, multiple: f64) -> bool {
        (self.mean - value).abs() <= multiple * self.half_width
    }
}

pub fn z_score() -> f64 {
    Normal::standard().inverse_cdf(0.5 + CONFIDENCE / 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpineEstimate {
    pub depth: usize,
    pub rows: Vec<EstimateRow>,
}

#[derive(Clone, Debug)]
pub struct SpineRun {
    /// `(W_0, ..., W_{depth-1})` per replication.
    pub profiles: Vec<Vec<u64>>,
    pub estimate: SpineEstimate,
}

fn spine_replication<R: Rng + ?Sized>(
    offspring: &OffspringLaw,
    biased: &OffspringLaw,
    depth: usize,
    rng: &mut R,
) -> Vec<u64> {
    let mut widths = Vec::with_capacity(depth);
    widths.push(1);
    // mortal vertices on the current level, excluding the spine vertex
    let mut mortal: u64 = 0;
    for _ in 1..depth {
        let mut next = biased.sample(rng) as u64 - 1;
        for _ in 0..mortal {
            next += offspring.sample(rng) as u64;
        }
        mortal = next;
        widths.push(mortal + 1);
    }
    widths
}

pub fn sample_spine(config: &SpineConfig) -> Result<SpineRun> {
    config.validate()?;
    let offspring = OffspringLaw::offspring(&config.model)?;
    let biased = OffspringLaw::size_biased(&config.model)?;
    let chunks = config.replications.div_ceil(CHUNK);
    let profiles: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = config.rng.substream(c as u64).rng();
            let len = CHUNK.min(config.replications - c * CHUNK);
            (0..len)
                .map(|_| spine_replication(&offspring, &biased, config.depth, &mut rng))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let targets = config.model.sigma2().ok();
    let rows = (0..config.depth)
        .map(|k| {
            let target = targets.as_ref().map(|s2| Rational::one() + rational::int(k as i64) * s2);
            EstimateRow::from_values(k, profiles.iter().map(|w| w[k] as f64)).with_target(target)
        })
        .collect();
    Ok(SpineRun { estimate: SpineEstimate { depth: config.depth, rows }, profiles })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BulkMethod {
    Conditioned(ConditionedMethod),
    /// Uniform plane trees; only valid for the Ge(1/2) family.
    UniformPlane,
}

/// `reps` independent draws of `T_n`, deterministic for a fixed `rng`.
pub fn sample_many(
    model: &OffspringModel,
    n: usize,
    reps: usize,
    rng: RngSpec,
    method: BulkMethod,
) -> Result<Vec<PlaneTree>> {
    let conditioned = match method {
        BulkMethod::Conditioned(m) => Some(ConditionedSampler::new(model, n, m)?),
        BulkMethod::UniformPlane => {
            if model.family() != &Family::GeometricHalf {
                return Err(Error::InvalidArgument(
                    "the uniform plane-tree sampler only applies to the Ge(1/2) family".into(),
                ));
            }
            None
        }
    };
    let chunks = reps.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<PlaneTree>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng.substream(c as u64).rng();
            let len = CHUNK.min(reps - c * CHUNK);
            (0..len)
                .map(|_| match &conditioned {
                    Some(s) => s.sample(&mut r),
                    None => sample_uniform_plane(n, &mut r),
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(reps);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Estimates `E W_k` for `k <= kmax` from sampled trees.
pub fn estimate_profile(trees: &[PlaneTree], kmax: usize) -> Vec<EstimateRow> {
    let profiles: Vec<Vec<usize>> = trees.iter().map(|t| t.profile()).collect();
    (0..=kmax)
        .map(|k| EstimateRow::from_values(k, profiles.iter().map(|p| p.get(k).copied().unwrap_or(0) as f64)))
        .collect()
}
