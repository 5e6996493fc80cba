//! Monte Carlo drivers for the type-1-error and power protocols.
//!
//! Replication `i` of an experiment with seed `s` draws all of its randomness
//! from ChaCha8 stream `i` keyed by `s`, so a report depends only on
//! `(seed, config)`: not on the worker count or on scheduling. Rejection
//! counts are integers, so the parallel reduction is exact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Open01;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combiners::{Method, PValueVector};
use crate::copulas::CopulaFamily;
use crate::datagen::{DatasetGenerator, DatasetSpec};
use crate::error::{Error, Result};
use crate::ztest::{two_sided_pvalues, z_statistics, NullSpec};

pub const MIN_REPLICATIONS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Type1,
    Power,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Protocol::Type1 => "type1",
            Protocol::Power => "power",
        })
    }
}

/// One simulation cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub dataset: DatasetSpec,
    pub null: NullSpec,
    pub replications: u64,
    pub alpha_levels: Vec<f64>,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Accept a type-1 run whose null means differ from the data means.
    pub allow_misspecified: bool,
}

impl ExperimentConfig {
    pub fn validate(&self, protocol: Protocol) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(format!("{}: {msg}", self.id)));
        if self.replications < MIN_REPLICATIONS {
            return fail(format!(
                "replications M must be >= {MIN_REPLICATIONS}, got {}",
                self.replications
            ));
        }
        if self.alpha_levels.is_empty() {
            return fail("at least one significance level is required".into());
        }
        if let Some(a) = self.alpha_levels.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return fail(format!("significance levels must lie in (0, 1), got {a}"));
        }
        if self.methods.is_empty() {
            return fail("at least one combination method is required".into());
        }
        if self.null.len() != self.dataset.m() {
            return fail(format!(
                "null specification has {} variables but the dataset has {}",
                self.null.len(),
                self.dataset.m()
            ));
        }
        let differs = self
            .dataset
            .marginals()
            .iter()
            .zip(self.null.mu0())
            .any(|(law, &mu0)| (law.mean() - mu0).abs() > 1e-9 * mu0.abs().max(1.0));
        match protocol {
            Protocol::Type1 if differs && !self.allow_misspecified => fail(
                "null means differ from the data-generating means; the global null does not hold \
                 (set allow_misspecified to run anyway)"
                    .into(),
            ),
            Protocol::Power if !differs => fail(
                "power run needs at least one variable whose mean differs from its null".into(),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RejectionRate {
    pub method: Method,
    pub alpha: f64,
    pub rejections: u64,
    pub replications: u64,
    pub rate: f64,
    pub se: f64,
}

impl RejectionRate {
    pub fn new(method: Method, alpha: f64, rejections: u64, replications: u64) -> Self {
        let rate = rejections as f64 / replications as f64;
        Self {
            method,
            alpha,
            rejections,
            replications,
            rate,
            se: binomial_se(rate, replications),
        }
    }
}

pub fn binomial_se(rate: f64, replications: u64) -> f64 {
    (rate * (1.0 - rate) / replications as f64).sqrt()
}

/// Rejection rates of one cell, ordered by method then alpha as configured.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionReport {
    pub experiment_id: String,
    pub protocol: Protocol,
    pub m: usize,
    /// `r` and `p` of the first (baseline) marginal.
    pub r: u32,
    pub p: f64,
    pub n: usize,
    pub copula_family: CopulaFamily,
    pub theta: Option<f64>,
    pub replications: u64,
    pub rates: Vec<RejectionRate>,
}

impl RejectionReport {
    pub fn rate(&self, method: Method, alpha: f64) -> Option<&RejectionRate> {
        self.rates
            .iter()
            .find(|r| r.method == method && (r.alpha - alpha).abs() < 1e-12)
    }

    pub fn rows(&self) -> impl Iterator<Item = ReportRow<'_>> {
        self.rates.iter().map(move |r| ReportRow {
            experiment_id: &self.experiment_id,
            method: r.method.to_string(),
            alpha: r.alpha,
            m: self.m,
            r: self.r,
            p: self.p,
            n: self.n,
            copula_family: self.copula_family.name(),
            theta: self.theta,
            replications: self.replications,
            rate: r.rate,
            se: r.se,
        })
    }
}

/// One output line: `experiment_id, method, alpha, m, r, p, n, copula_family, theta, M, rate, se`.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow<'a> {
    pub experiment_id: &'a str,
    pub method: String,
    pub alpha: f64,
    pub m: usize,
    pub r: u32,
    pub p: f64,
    pub n: usize,
    pub copula_family: &'static str,
    pub theta: Option<f64>,
    #[serde(rename = "M")]
    pub replications: u64,
    pub rate: f64,
    pub se: f64,
}

/// RNG for replication `index` of an experiment seeded with `seed`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mixes a base seed with a cell index (SplitMix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counts rejections over `replications` draws of a p-value vector; slot
/// `i * alphas.len() + j` holds method `i` at level `j`.
fn count_rejections<F>(
    replications: u64,
    methods: &[Method],
    alphas: &[f64],
    draw: F,
) -> Result<Vec<u64>>
where
    F: Fn(u64) -> Result<PValueVector> + Sync,
{
    let slots = methods.len() * alphas.len();
    (0..replications)
        .into_par_iter()
        .try_fold(
            || vec![0u64; slots],
            |mut acc, rep| {
                let pv = draw(rep)?;
                for (i, method) in methods.iter().enumerate() {
                    let combined = method.combine(&pv).pvalue;
                    for (j, &alpha) in alphas.iter().enumerate() {
                        if combined < alpha {
                            acc[i * alphas.len() + j] += 1;
                        }
                    }
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u64; slots],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
}

fn rates_from_counts(
    methods: &[Method],
    alphas: &[f64],
    counts: &[u64],
    replications: u64,
) -> Vec<RejectionRate> {
    let mut out = Vec::with_capacity(counts.len());
    for (i, &method) in methods.iter().enumerate() {
        for (j, &alpha) in alphas.iter().enumerate() {
            out.push(RejectionRate::new(
                method,
                alpha,
                counts[i * alphas.len() + j],
                replications,
            ));
        }
    }
    out
}

/// generate -> Z statistics -> two-sided p-values -> combine -> compare.
fn simulate(config: &ExperimentConfig, protocol: Protocol) -> Result<RejectionReport> {
    config.validate(protocol)?;
    let generator = DatasetGenerator::new(config.dataset.clone());
    let counts = count_rejections(
        config.replications,
        &config.methods,
        &config.alpha_levels,
        |rep| {
            let data = generator.generate(&mut replication_rng(config.seed, rep));
            two_sided_pvalues(&z_statistics(&data, &config.null)?)
        },
    )?;
    let first = config.dataset.marginals()[0];
    let copula = config.dataset.copula();
    Ok(RejectionReport {
        experiment_id: config.id.clone(),
        protocol,
        m: config.dataset.m(),
        r: first.r(),
        p: first.p(),
        n: config.dataset.n(),
        copula_family: copula.map_or(CopulaFamily::Independence, |c| c.family()),
        theta: copula.and_then(|c| c.theta()),
        replications: config.replications,
        rates: rates_from_counts(
            &config.methods,
            &config.alpha_levels,
            &counts,
            config.replications,
        ),
    })
}

/// Type-1 error rates: data drawn under the global null.
pub fn run_type1(config: &ExperimentConfig) -> Result<RejectionReport> {
    simulate(config, Protocol::Type1)
}

/// Power: data drawn under an alternative that shifts at least one mean.
pub fn run_power(config: &ExperimentConfig) -> Result<RejectionReport> {
    simulate(config, Protocol::Power)
}

pub fn run(protocol: Protocol, config: &ExperimentConfig) -> Result<RejectionReport> {
    simulate(config, protocol)
}

/// Runs every cell on a pool of `parallelism` workers, preserving input order.
/// A failing cell yields its error without stopping the others.
pub fn run_grid(
    protocol: Protocol,
    configs: &[ExperimentConfig],
    parallelism: usize,
) -> Result<Vec<Result<RejectionReport>>> {
    if configs.is_empty() {
        return Err(Error::Validation("experiment grid is empty".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| configs.iter().map(|c| simulate(c, protocol)).collect()))
}

/// Rejection rates when the individual p-values are replaced by iid
/// Uniform(0, 1) draws; checks the combiners' null calibration in isolation.
pub fn run_uniform_null(
    m: usize,
    replications: u64,
    alphas: &[f64],
    seed: u64,
    methods: &[Method],
) -> Result<Vec<RejectionRate>> {
    use rand::Rng;
    if m == 0 || replications == 0 {
        return Err(Error::Validation(
            "m and replications must be positive".into(),
        ));
    }
    let counts = count_rejections(replications, methods, alphas, |rep| {
        let mut rng = replication_rng(seed, rep);
        PValueVector::new((0..m).map(|_| rng.sample(Open01)).collect())
    })?;
    Ok(rates_from_counts(methods, alphas, &counts, replications))
}
