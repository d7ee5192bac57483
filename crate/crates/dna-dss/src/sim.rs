//! Monte Carlo simulation of the stochastic recovery processes.
//!
//! Every trial draws from its own counter-based random stream keyed by
//! (master seed, trial index), so a run is reproducible bit for bit no matter
//! how many worker threads execute it; aggregation is a deterministic fold in
//! trial order over the integer samples.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::Classification;
use crate::code::ArrayCodeSpec;
use crate::predict::gumbel_cdf;

/// Naive per-draw simulation of the l-copy collector is capped here.
pub const MAX_N_MULTI_COPY: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("simulation budget exceeded: {0}")]
    Budget(String),
    #[error("block height {b} does not divide strand count {n}")]
    BlockMismatch { b: u32, n: u64 },
    #[error("classification was computed for a different code or failed container")]
    ClassificationMismatch,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

/// Which recovery process is simulated, with its parameters. Serialized as the
/// `config` echo of a result.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "process")]
pub enum ProcessConfig {
    /// m independent collectors, each needing l copies of each of n coupons;
    /// the sample is the maximum completion time.
    #[serde(rename = "ccp")]
    CcpMax { n: u64, l: u32, m: u32 },
    /// The matrix process: m+rho columns each mark one uniform row of `[n]` per
    /// round until every row has at least m marked columns.
    #[serde(rename = "scalar")]
    ScalarMds { n: u64, m: u32, rho: u32 },
    /// Array-code recovery of container p: per round each surviving column
    /// marks a uniform row; stop when every block's mask is a recovering set.
    #[serde(rename = "array")]
    ArrayBlock { n: u64, code: String, p: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    #[serde(flatten)]
    pub process: ProcessConfig,
    pub trials: u64,
    #[serde(skip)]
    pub master_seed: u64,
}

/// Trial samples plus their deterministic aggregates.
#[derive(Debug, Clone, Serialize)]
pub struct SimAggregate {
    pub config: SimConfig,
    pub seed: u64,
    pub mean: f64,
    /// Unbiased variance (trials - 1 denominator); absent for a single trial.
    pub variance: Option<f64>,
    pub stderr: Option<f64>,
    pub min: u64,
    pub max: u64,
    /// Recovery times in rounds, one per trial, in trial order.
    #[serde(skip)]
    pub samples: Vec<u64>,
    /// Normalized samples: (rho+1)T/n - ln n for the scalar process,
    /// T/n - ln n - (l-1) ln ln n for collectors, alpha* T/n - ln n for arrays.
    #[serde(skip)]
    pub z: Vec<f64>,
}

fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(trial);
    rng
}

fn run_trials<F>(trials: u64, master_seed: u64, trial: F) -> Vec<u64>
where
    F: Fn(&mut ChaCha8Rng) -> u64 + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| trial(&mut trial_rng(master_seed, i)))
        .collect()
}

fn aggregate(config: SimConfig, samples: Vec<u64>, z: Vec<f64>) -> SimAggregate {
    let trials = samples.len();
    let sum: u128 = samples.iter().map(|&s| u128::from(s)).sum();
    let mean = sum as f64 / trials as f64;
    let (variance, stderr) = if trials >= 2 {
        let ss: f64 = samples
            .iter()
            .map(|&s| {
                let d = s as f64 - mean;
                d * d
            })
            .sum();
        let var = ss / (trials as f64 - 1.0);
        (Some(var), Some((var / trials as f64).sqrt()))
    } else {
        (None, None)
    };
    let seed = config.master_seed;
    SimAggregate {
        config,
        seed,
        mean,
        variance,
        stderr,
        min: samples.iter().copied().min().unwrap_or(0),
        max: samples.iter().copied().max().unwrap_or(0),
        samples,
        z,
    }
}

fn common_checks(n: u64, trials: u64) -> Result<(), SimError> {
    if n < 1 {
        return Err(SimError::InvalidConfig("n must be at least 1".into()));
    }
    if trials < 1 {
        return Err(SimError::InvalidConfig("trials must be at least 1".into()));
    }
    Ok(())
}

/// Max of m independent collectors, each drawing uniformly from `[n]` until
/// every coupon has at least `ell` copies. Naive per-draw simulation.
pub fn sim_ccp_max(
    n: u64,
    ell: u32,
    m: u32,
    trials: u64,
    seed: u64,
) -> Result<SimAggregate, SimError> {
    common_checks(n, trials)?;
    if ell < 1 || m < 1 {
        return Err(SimError::InvalidConfig("need l >= 1 and m >= 1".into()));
    }
    if ell >= 2 && n > MAX_N_MULTI_COPY {
        return Err(SimError::Budget(format!(
            "per-draw l-copy simulation is capped at n <= {MAX_N_MULTI_COPY}"
        )));
    }
    let samples = run_trials(trials, seed, |rng| {
        let mut counts = vec![0u32; n as usize];
        let mut worst = 0u64;
        for _ in 0..m {
            counts.fill(0);
            let mut missing = n;
            let mut t = 0u64;
            while missing > 0 {
                t += 1;
                let c = rng.random_range(0..n) as usize;
                counts[c] += 1;
                if counts[c] == ell {
                    missing -= 1;
                }
            }
            worst = worst.max(t);
        }
        worst
    });
    let nf = n as f64;
    let lnln = if ell > 1 { nf.ln().ln() } else { 0.0 };
    let z = samples
        .iter()
        .map(|&t| t as f64 / nf - nf.ln() - f64::from(ell - 1) * lnln)
        .collect();
    Ok(aggregate(
        SimConfig {
            process: ProcessConfig::CcpMax { n, l: ell, m },
            trials,
            master_seed: seed,
        },
        samples,
        z,
    ))
}

/// The scalar-MDS matrix process, fast path: per column, first-hit times of the
/// rows arrive as a uniform random permutation with geometric gaps (the k-th
/// new row after Geometric(1 - (k-1)/n) further rounds); the stopping time is
/// the maximum over rows of the m-th smallest per-row hit time. Distributionally
/// equivalent to the per-round simulation at O(n(m+rho)) per trial.
pub fn sim_scalar_mds(
    n: u64,
    m: u32,
    rho: u32,
    trials: u64,
    seed: u64,
) -> Result<SimAggregate, SimError> {
    common_checks(n, trials)?;
    if m < 1 {
        return Err(SimError::InvalidConfig("need m >= 1".into()));
    }
    let cols = (m + rho) as usize;
    let gaps: Vec<Geometric> = (0..n)
        .map(|k| Geometric::new(1.0 - k as f64 / n as f64).expect("p in (0, 1]"))
        .collect();
    let samples = run_trials(trials, seed, |rng| {
        let mut hits = vec![0u64; n as usize * cols];
        let mut perm: Vec<u32> = (0..n as u32).collect();
        for c in 0..cols {
            perm.shuffle(rng);
            let mut t = 0u64;
            for (k, gap) in gaps.iter().enumerate() {
                t += 1 + gap.sample(rng);
                hits[perm[k] as usize * cols + c] = t;
            }
        }
        // T = max over rows of the m-th smallest per-row hit time
        let mut scratch = vec![0u64; cols];
        let mut worst = 0u64;
        for r in 0..n as usize {
            scratch.copy_from_slice(&hits[r * cols..(r + 1) * cols]);
            scratch.sort_unstable();
            worst = worst.max(scratch[m as usize - 1]);
        }
        worst
    });
    Ok(finish_scalar(n, m, rho, trials, seed, samples))
}

/// Reference implementation of the scalar process: every round, each of the
/// m+rho columns marks one uniform row; stop when all rows have >= m marked
/// columns. Used to validate the fast path.
pub fn sim_scalar_mds_naive(
    n: u64,
    m: u32,
    rho: u32,
    trials: u64,
    seed: u64,
) -> Result<SimAggregate, SimError> {
    common_checks(n, trials)?;
    if m < 1 {
        return Err(SimError::InvalidConfig("need m >= 1".into()));
    }
    let cols = (m + rho) as usize;
    let samples = run_trials(trials, seed, |rng| {
        let mut marked = vec![false; n as usize * cols];
        let mut row_count = vec![0u32; n as usize];
        let mut satisfied = 0u64;
        let mut t = 0u64;
        while satisfied < n {
            t += 1;
            for c in 0..cols {
                let r = rng.random_range(0..n) as usize;
                if !marked[r * cols + c] {
                    marked[r * cols + c] = true;
                    row_count[r] += 1;
                    if row_count[r] == m {
                        satisfied += 1;
                    }
                }
            }
        }
        t
    });
    Ok(finish_scalar(n, m, rho, trials, seed, samples))
}

fn finish_scalar(
    n: u64,
    m: u32,
    rho: u32,
    trials: u64,
    seed: u64,
    samples: Vec<u64>,
) -> SimAggregate {
    let nf = n as f64;
    let z = samples
        .iter()
        .map(|&t| f64::from(rho + 1) * t as f64 / nf - nf.ln())
        .collect();
    aggregate(
        SimConfig {
            process: ProcessConfig::ScalarMds { n, m, rho },
            trials,
            master_seed: seed,
        },
        samples,
        z,
    )
}

/// Array-code recovery: per round each surviving column marks one uniform row;
/// a block is done once its mark mask is a recovering set (one bitset lookup),
/// and the trial stops at the first round with every block done.
pub fn sim_array(
    code: &ArrayCodeSpec,
    p: u32,
    n: u64,
    trials: u64,
    seed: u64,
    classification: &Classification,
) -> Result<SimAggregate, SimError> {
    common_checks(n, trials)?;
    if !classification.matches(code, p) {
        return Err(SimError::ClassificationMismatch);
    }
    let b = u64::from(classification.block_rows());
    if n % b != 0 {
        return Err(SimError::BlockMismatch {
            b: classification.block_rows(),
            n,
        });
    }
    let cols = classification.survivors();
    let samples = run_trials(trials, seed, |rng| {
        let blocks = (n / b) as usize;
        let mut masks = vec![0u32; blocks];
        let mut done = vec![false; blocks];
        let mut pending = blocks;
        let mut t = 0u64;
        while pending > 0 {
            t += 1;
            for c in 0..cols {
                let r = rng.random_range(0..n);
                let blk = (r / b) as usize;
                let bit = c * classification.block_rows() + (r % b) as u32;
                let mask = masks[blk] | 1 << bit;
                if mask != masks[blk] {
                    masks[blk] = mask;
                    if !done[blk] && classification.is_recovering(mask) {
                        done[blk] = true;
                        pending -= 1;
                    }
                }
            }
        }
        t
    });
    let nf = n as f64;
    let alpha = f64::from(classification.alpha_star());
    let z = samples
        .iter()
        .map(|&t| alpha * t as f64 / nf - nf.ln())
        .collect();
    Ok(aggregate(
        SimConfig {
            process: ProcessConfig::ArrayBlock {
                n,
                code: code.name().to_string(),
                p,
            },
            trials,
            master_seed: seed,
        },
        samples,
        z,
    ))
}

/// Kolmogorov-Smirnov sup-distance between the empirical CDF of `samples` and
/// Gumbel(mu, beta).
pub fn ks_distance(samples: &[f64], mu: f64, beta: f64) -> Result<f64, SimError> {
    if samples.len() < 2 {
        return Err(SimError::TooFewSamples(samples.len()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = gumbel_cdf(x, mu, beta);
        sup = sup
            .max((f - i as f64 / n).abs())
            .max((f - (i as f64 + 1.0) / n).abs());
    }
    Ok(sup)
}
