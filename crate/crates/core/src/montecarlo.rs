//! Chunked Monte Carlo estimation of the outage probability.
//!
//! Trials are split into chunks of `chunk_size`. Chunk `k` draws from the
//! ChaCha8 stream `k` of a generator seeded with `base_seed`, so the counts
//! depend only on `(base_seed, chunk_size, n_trials)` and never on how many
//! workers run the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::link::{ChannelDraw, CombiningScheme, LinkModel};
use crate::params::{ParamError, SystemParams};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

pub const DEFAULT_CHUNK_SIZE: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("n_trials must be at least 1")]
    NoTrials,
    #[error("chunk_size must be at least 1")]
    ZeroChunk,
    #[error("cannot merge estimates with different {0}")]
    Mismatch(&'static str),
    #[error("sample size must be at least 1")]
    NoSamples,
    #[error("failed to build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationPlan {
    pub params: SystemParams,
    pub scheme: CombiningScheme,
    pub n_trials: u64,
    pub base_seed: u64,
    pub chunk_size: u64,
}

impl SimulationPlan {
    pub fn new(
        params: SystemParams,
        scheme: CombiningScheme,
        n_trials: u64,
        base_seed: u64,
    ) -> Self {
        Self {
            params,
            scheme,
            n_trials,
            base_seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn with_chunk_size(self, chunk_size: u64) -> Self {
        Self { chunk_size, ..self }
    }

    pub fn validate(&self) -> Result<(), McError> {
        if self.n_trials == 0 {
            return Err(McError::NoTrials);
        }
        if self.chunk_size == 0 {
            return Err(McError::ZeroChunk);
        }
        self.params.validate()?;
        Ok(())
    }

    pub fn n_chunks(&self) -> u64 {
        self.n_trials.div_ceil(self.chunk_size)
    }

    /// Number of trials in chunk `index`; the last chunk may be short.
    pub fn chunk_len(&self, index: u64) -> u64 {
        let start = index * self.chunk_size;
        self.chunk_size.min(self.n_trials.saturating_sub(start))
    }
}

/// Monte Carlo outage estimate with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub p_hat: f64,
    pub n_trials: u64,
    pub n_outages: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub scheme: CombiningScheme,
    pub params: SystemParams,
}

/// 95% Wilson score interval for `k` successes in `n` trials. Returns `(0, 1)`
/// when `n = 0`.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z_95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

impl OutageEstimate {
    pub fn from_counts(
        n_outages: u64,
        n_trials: u64,
        seed: u64,
        scheme: CombiningScheme,
        params: SystemParams,
    ) -> Self {
        let p_hat = if n_trials == 0 {
            0.0
        } else {
            n_outages as f64 / n_trials as f64
        };
        let (ci_low, ci_high) = wilson_interval(n_outages, n_trials);
        Self {
            p_hat,
            n_trials,
            n_outages,
            ci_low,
            ci_high,
            seed,
            scheme,
            params,
        }
    }

    /// Zero-trial estimate; the identity of [`OutageEstimate::merge`].
    pub fn empty(seed: u64, scheme: CombiningScheme, params: SystemParams) -> Self {
        Self::from_counts(0, 0, seed, scheme, params)
    }

    /// Half-width of the interval divided by the normal quantile.
    pub fn standard_error(&self) -> f64 {
        (self.ci_high - self.ci_low) / (2.0 * Z_95)
    }

    /// Sums the counts of two estimates from the same lineage.
    pub fn merge(&self, other: &Self) -> Result<Self, McError> {
        if self.scheme != other.scheme {
            return Err(McError::Mismatch("schemes"));
        }
        if self.params != other.params {
            return Err(McError::Mismatch("parameters"));
        }
        if self.seed != other.seed {
            return Err(McError::Mismatch("seeds"));
        }
        Ok(Self::from_counts(
            self.n_outages + other.n_outages,
            self.n_trials + other.n_trials,
            self.seed,
            self.scheme,
            self.params,
        ))
    }
}

fn chunk_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// Counts draws of chunk `index` for which `event` holds.
pub fn count_chunk<F>(model: &LinkModel, plan: &SimulationPlan, index: u64, event: &F) -> u64
where
    F: Fn(&LinkModel, &ChannelDraw) -> bool,
{
    let mut rng = chunk_rng(plan.base_seed, index);
    let mut hits = 0;
    for _ in 0..plan.chunk_len(index) {
        let draw = model.sample_draw(&mut rng);
        hits += u64::from(event(model, &draw));
    }
    hits
}

fn outage_event(scheme: CombiningScheme) -> impl Fn(&LinkModel, &ChannelDraw) -> bool + Sync {
    move |model, draw| model.outage_event(draw, scheme)
}

/// Estimates the probability of an arbitrary per-draw event with the plan's
/// chunking. The scheme field of the result is copied from the plan.
pub fn estimate_event<F>(plan: &SimulationPlan, event: F) -> Result<OutageEstimate, McError>
where
    F: Fn(&LinkModel, &ChannelDraw) -> bool + Sync,
{
    plan.validate()?;
    let model = LinkModel::new(&plan.params)?;
    let hits = (0..plan.n_chunks())
        .into_par_iter()
        .map(|k| count_chunk(&model, plan, k, &event))
        .sum();
    Ok(finish(plan, hits))
}

fn finish(plan: &SimulationPlan, hits: u64) -> OutageEstimate {
    OutageEstimate::from_counts(
        hits,
        plan.n_trials,
        plan.base_seed,
        plan.scheme,
        plan.params,
    )
}

/// Parallel estimate on the global rayon pool.
pub fn estimate_outage(plan: &SimulationPlan) -> Result<OutageEstimate, McError> {
    estimate_event(plan, outage_event(plan.scheme))
}

/// Parallel estimate on a dedicated pool of `workers` threads.
pub fn estimate_outage_with_workers(
    plan: &SimulationPlan,
    workers: usize,
) -> Result<OutageEstimate, McError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| McError::Pool(e.to_string()))?;
    pool.install(|| estimate_outage(plan))
}

/// Single-threaded estimate, chunk by chunk in order.
pub fn estimate_outage_sequential(plan: &SimulationPlan) -> Result<OutageEstimate, McError> {
    plan.validate()?;
    let model = LinkModel::new(&plan.params)?;
    let event = outage_event(plan.scheme);
    let hits = (0..plan.n_chunks())
        .map(|k| count_chunk(&model, plan, k, &event))
        .sum();
    Ok(finish(plan, hits))
}

/// Random variable of a draw whose distribution has a closed-form CDF.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    /// `Y_A + Y_B`
    X,
    /// `1 / (Y_A Y_B)`
    Y,
    /// Direct-link gain.
    Z,
}

/// `n` samples of `variable`, sorted ascending.
pub fn empirical_cdf(
    variable: Variable,
    params: &SystemParams,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, McError> {
    if n == 0 {
        return Err(McError::NoSamples);
    }
    let model = LinkModel::new(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<f64> = (0..n)
        .map(|_| {
            let g = model.link_gains(&model.sample_draw(&mut rng));
            match variable {
                Variable::X => g.y_a + g.y_b,
                Variable::Y => 1.0 / (g.y_a * g.y_b),
                Variable::Z => g.z,
            }
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    Ok(samples)
}

/// Kolmogorov-Smirnov distance between sorted samples and a CDF.
pub fn ks_distance<F>(sorted: &[f64], mut cdf: F) -> f64
where
    F: FnMut(f64) -> f64,
{
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}
