//! Monte-Carlo significance test for portmanteau statistics.
//!
//! The fitted VAR is simulated `N` times, each replicate is refitted and
//! rescored, and the p-value at each lag is `(#{replicate ≥ observed} + 1) /
//! (N + 1)`. Replicates are independent tasks seeded from
//! `(master_seed, replicate, attempt)`, and the only aggregation is a count,
//! so the report does not depend on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    residual_transform, statistics_for_lags, ResidualTransform, StatValue, Statistic,
};
use crate::error::{Error, Result};
use crate::estimate::{fit_var, FittedVar};
use crate::matrix::Matrix;
use crate::varma::{
    burn_in, simulate_with_innovations, simulate_with_rng, validate_model, ModelSpec, Series,
};

/// Retry budget for a replicate whose simulated path cannot be refitted.
pub const MAX_ATTEMPTS: u32 = 10;

/// Smallest accepted number of replicates.
pub const MIN_REPLICATES: usize = 19;

/// Seed of one ChaCha8 random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedState([u8; 32]);

impl SeedState {
    pub fn from_u64(seed: u64) -> Self {
        derive_seed(seed, 0, 0)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.0)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

/// SplitMix64 output function; a bijection on `u64`.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replicate `index`, retry `attempt`. Each input occupies its own
/// 64-bit word of the 256-bit seed after a bijective mix, so distinct
/// triples give distinct streams.
pub fn derive_seed(master: u64, index: u64, attempt: u32) -> SeedState {
    let words = [
        mix64(master),
        mix64(index ^ 0xA076_1D64_78BD_642F),
        mix64(u64::from(attempt) ^ 0xE703_7ED1_A0B4_28DB),
        0x8EBC_6AF0_9C88_C6E3,
    ];
    let mut bytes = [0u8; 32];
    for (chunk, w) in bytes.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    SeedState(bytes)
}

/// Child master seed for a labelled sub-experiment.
pub fn sub_master(master: u64, label: u64) -> u64 {
    mix64(mix64(master) ^ mix64(label.wrapping_add(0x2545_F491_4F6C_DD1D)))
}

/// `(exceedances + 1) / (N + 1)`.
pub fn p_hat(exceedances: usize, n_reps: usize) -> f64 {
    debug_assert!(exceedances <= n_reps);
    (exceedances as f64 + 1.0) / (n_reps as f64 + 1.0)
}

/// Approximate 95% margin of error `1.96 √(p̂(1 − p̂)/N)`.
pub fn margin_of_error(p_hat: f64, n_reps: usize) -> f64 {
    1.96 * (p_hat * (1.0 - p_hat) / n_reps as f64).sqrt()
}

/// Number of replicate values `≥ observed`. Ties count, and `+∞` ties with
/// `+∞`.
pub fn count_exceedances(observed: f64, replicates: impl IntoIterator<Item = f64>) -> usize {
    replicates.into_iter().filter(|&v| v >= observed).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Innovations {
    /// Normal innovations with the fitted residual covariance.
    Gaussian,
    /// Rows of the centered residuals drawn with replacement.
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub replicates: usize,
    pub master_seed: u64,
    pub innovations: Innovations,
    pub transform: ResidualTransform,
    pub statistic: Statistic,
    pub lags: Vec<usize>,
    /// Requested parallelism; never affects results.
    pub workers: usize,
    pub with_intercept: bool,
}

impl McConfig {
    pub fn new(statistic: Statistic, lags: Vec<usize>) -> Self {
        McConfig {
            replicates: 999,
            master_seed: 1,
            innovations: Innovations::Gaussian,
            transform: ResidualTransform::Identity,
            statistic,
            lags,
            workers: 1,
            with_intercept: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates < MIN_REPLICATES {
            return Err(Error::InvalidConfig(format!(
                "at least {MIN_REPLICATES} replicates required, got {}",
                self.replicates
            )));
        }
        validate_lags(&self.lags)?;
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// Lags must be nonempty, positive and strictly ascending.
pub fn validate_lags(lags: &[usize]) -> Result<()> {
    if lags.is_empty() {
        return Err(Error::InvalidConfig("no lags given".into()));
    }
    if lags[0] == 0 || lags.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(format!(
            "lags must be positive and strictly ascending, got {lags:?}"
        )));
    }
    Ok(())
}

/// Monte-Carlo result at one lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagResult {
    pub lag: usize,
    #[serde(with = "crate::serde_inf")]
    pub observed: f64,
    pub observed_non_pd: bool,
    pub p_hat: f64,
    pub margin_of_error: f64,
    pub exceedances: usize,
    pub non_pd_replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: Statistic,
    pub replicates: usize,
    pub seed: u64,
    pub innovations: Innovations,
    pub transform: ResidualTransform,
    pub with_intercept: bool,
    pub n: usize,
    pub n_eff: usize,
    pub order: usize,
    /// Replicates that needed more than one attempt.
    pub retried_replicates: usize,
    pub lags: Vec<LagResult>,
}

/// Everything a replicate needs, shared read-only across tasks.
struct ReplicateContext<'a> {
    spec: ModelSpec,
    order: usize,
    n: usize,
    with_intercept: bool,
    innovations: Innovations,
    /// Centered residual rows for bootstrap draws.
    pool: &'a Matrix,
    transform: ResidualTransform,
    lags: &'a [usize],
    stats: &'a [Statistic],
    master: u64,
}

struct ReplicateOutcome {
    values: Vec<Vec<StatValue>>,
    attempts: u32,
}

impl ReplicateContext<'_> {
    fn simulate(&self, rng: &mut ChaCha8Rng) -> Result<Series> {
        match self.innovations {
            Innovations::Gaussian => simulate_with_rng(&self.spec, self.n, rng),
            Innovations::Bootstrap => {
                let total = burn_in(&self.spec) + self.n;
                let rows = self.pool.rows();
                let mut innov = Matrix::zeros(total, self.spec.k);
                for t in 0..total {
                    let src = rng.random_range(0..rows);
                    innov.row_mut(t).copy_from_slice(self.pool.row(src));
                }
                simulate_with_innovations(&self.spec, &innov, self.n)
            }
        }
    }

    fn run(&self, index: usize) -> Result<ReplicateOutcome> {
        let mut last = None;
        for attempt in 0..MAX_ATTEMPTS {
            let mut rng = derive_seed(self.master, index as u64, attempt).rng();
            let outcome = self.simulate(&mut rng).and_then(|s| {
                let fit = fit_var(&s, self.order, self.with_intercept)?;
                let resid = residual_transform(&fit.residuals, self.transform);
                statistics_for_lags(&resid, self.lags, self.stats)
            });
            match outcome {
                Ok(values) => {
                    return Ok(ReplicateOutcome {
                        values,
                        attempts: attempt + 1,
                    })
                }
                Err(e) => last = Some(e),
            }
        }
        Err(Error::ReplicateFailure {
            replicate: index,
            attempts: MAX_ATTEMPTS,
            reason: last.map(|e| e.to_string()).unwrap_or_default(),
        })
    }
}

/// Settings of a multi-statistic Monte-Carlo run (see [`mc_run`]).
#[derive(Debug, Clone)]
pub struct McRunSpec<'a> {
    pub order: usize,
    pub with_intercept: bool,
    pub innovations: Innovations,
    pub transform: ResidualTransform,
    pub lags: &'a [usize],
    pub stats: &'a [Statistic],
    pub replicates: usize,
    pub master_seed: u64,
}

/// Result of [`mc_run`] for one statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct McStatResult {
    pub statistic: Statistic,
    pub lags: Vec<LagResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McRun {
    pub fit: FittedVar,
    pub n: usize,
    pub retried_replicates: usize,
    pub results: Vec<McStatResult>,
}

/// Monte-Carlo test of several statistics on shared replicates, executed on
/// the current rayon pool. Results are independent of the pool size.
pub fn mc_run(series: &Series, run: &McRunSpec<'_>) -> Result<McRun> {
    validate_lags(run.lags)?;
    if run.replicates < MIN_REPLICATES {
        return Err(Error::InvalidConfig(format!(
            "at least {MIN_REPLICATES} replicates required, got {}",
            run.replicates
        )));
    }
    let fit = fit_var(series, run.order, run.with_intercept)?;
    let observed_resid = residual_transform(&fit.residuals, run.transform);
    let observed = statistics_for_lags(&observed_resid, run.lags, run.stats)?;

    let spec = fit.to_model_spec()?;
    let validity = validate_model(&spec)?;
    if !validity.stationary {
        return Err(Error::InvalidModel(format!(
            "fitted VAR({}) is not stationary (spectral radius {:.6}); cannot simulate it",
            run.order, validity.spectral_radius_ar
        )));
    }

    let means = fit.residuals.column_means();
    let pool = Matrix::from_fn(fit.n_eff(), fit.k(), |t, j| {
        fit.residuals.values()[(t, j)] - means[j]
    });
    let ctx = ReplicateContext {
        spec,
        order: run.order,
        n: series.n(),
        with_intercept: run.with_intercept,
        innovations: run.innovations,
        pool: &pool,
        transform: run.transform,
        lags: run.lags,
        stats: run.stats,
        master: run.master_seed,
    };

    let outcomes: Vec<ReplicateOutcome> = (0..run.replicates)
        .into_par_iter()
        .map(|i| ctx.run(i))
        .collect::<Result<_>>()?;

    let n_reps = run.replicates;
    let results = run
        .stats
        .iter()
        .enumerate()
        .map(|(si, &statistic)| {
            let lags = run
                .lags
                .iter()
                .enumerate()
                .map(|(li, &lag)| {
                    let obs = observed[si][li];
                    let reps = outcomes.iter().map(|o| o.values[si][li]);
                    let exceedances = count_exceedances(obs.value, reps.clone().map(|v| v.value));
                    let non_pd_replicates = reps.filter(|v| v.non_pd).count();
                    let p = p_hat(exceedances, n_reps);
                    LagResult {
                        lag,
                        observed: obs.value,
                        observed_non_pd: obs.non_pd,
                        p_hat: p,
                        margin_of_error: margin_of_error(p, n_reps),
                        exceedances,
                        non_pd_replicates,
                    }
                })
                .collect();
            McStatResult { statistic, lags }
        })
        .collect();

    Ok(McRun {
        fit,
        n: series.n(),
        retried_replicates: outcomes.iter().filter(|o| o.attempts > 1).count(),
        results,
    })
}

/// Builds a rayon pool with exactly `workers` threads.
pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))
}

/// Monte-Carlo significance test of a VAR(`order`) fit to `series`.
pub fn mc_test(series: &Series, order: usize, config: &McConfig) -> Result<TestReport> {
    config.validate()?;
    let stats = [config.statistic];
    let spec = McRunSpec {
        order,
        with_intercept: config.with_intercept,
        innovations: config.innovations,
        transform: config.transform,
        lags: &config.lags,
        stats: &stats,
        replicates: config.replicates,
        master_seed: config.master_seed,
    };
    let run = thread_pool(config.workers)?.install(|| mc_run(series, &spec))?;
    let McRun {
        fit,
        n,
        retried_replicates,
        mut results,
    } = run;
    Ok(TestReport {
        statistic: config.statistic,
        replicates: config.replicates,
        seed: config.master_seed,
        innovations: config.innovations,
        transform: config.transform,
        with_intercept: config.with_intercept,
        n,
        n_eff: fit.n_eff(),
        order,
        retried_replicates,
        lags: results.remove(0).lags,
    })
}
