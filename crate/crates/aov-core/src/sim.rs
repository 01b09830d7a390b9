//! Discrete-event simulation of block arrivals, epoch-length distributions,
//! VDF-prover fleet scheduling, and the mining adversary's trigger bias with
//! and without the delay function.
//!
//! Wall-clock delay-function latency is mapped onto simulated minutes, and
//! per-header trigger decisions use the uniform residue abstraction: each
//! processed header triggers independently with probability `1/m`.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::trigger::{trigger_modulus, EpochSchedule};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("adversary mode mismatch for this run kind")]
    WrongMode,
    #[error("no samples to summarize")]
    EmptySamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryMode {
    #[default]
    None,
    RetryNoVdf,
    WithholdWithVdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalProcess {
    #[default]
    Deterministic,
    Poisson,
}

/// Blocks delivered to the validator lag mining by this many confirmations.
pub const MATURITY_LAG: u64 = 6;

pub const DEFAULT_A_MAX: u32 = 10;
pub const DEFAULT_JOB_MINUTES: f64 = 100.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default)]
    pub rng_seed: u64,
    pub horizon_minutes: f64,
    #[serde(default = "default_block_time")]
    pub block_time_mean: f64,
    pub schedule: EpochSchedule,
    #[serde(default)]
    pub adversary_share: f64,
    #[serde(default)]
    pub adversary_mode: AdversaryMode,
    /// Retry budget in the no-VDF mode; defaults to the hardware safety factor.
    #[serde(default = "default_a_max")]
    pub adversary_retries: u32,
    #[serde(default = "default_a_max")]
    pub a_max: u32,
    #[serde(default = "default_prover_count")]
    pub prover_count: u32,
    #[serde(default = "default_job_minutes")]
    pub prover_job_minutes: f64,
    #[serde(default)]
    pub prover_arrivals: ArrivalProcess,
}

fn default_block_time() -> f64 {
    10.0
}
fn default_a_max() -> u32 {
    DEFAULT_A_MAX
}
fn default_prover_count() -> u32 {
    DEFAULT_A_MAX
}
fn default_job_minutes() -> f64 {
    DEFAULT_JOB_MINUTES
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..1.0).contains(&self.adversary_share) {
            return Err(SimError::InvalidConfig("adversary share must be in [0, 1)"));
        }
        if self.prover_count == 0 {
            return Err(SimError::InvalidConfig("prover count must be >= 1"));
        }
        if !(self.horizon_minutes > 0.0) || !(self.block_time_mean > 0.0) {
            return Err(SimError::InvalidConfig("horizon and block time must be positive"));
        }
        if !(self.prover_job_minutes > 0.0) {
            return Err(SimError::InvalidConfig("job length must be positive"));
        }
        self.schedule.validate().map_err(|_| SimError::InvalidConfig("bad schedule"))?;
        Ok(())
    }

    fn rng(&self) -> ChaCha20Rng {
        use rand::SeedableRng;
        ChaCha20Rng::seed_from_u64(self.rng_seed)
    }
}

/// One completed epoch in a simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochSample {
    pub epoch_index: u64,
    /// Processed headers from the previous trigger up to and including the
    /// triggering one.
    pub length_blocks: u64,
    pub length_minutes: f64,
    pub triggered_by_adversary: bool,
}

/// Honest-network epoch simulation: Poisson block arrivals, stride filtering,
/// a six-block maturity lag before delivery, and a Bernoulli(1/m) trigger per
/// processed header.
pub fn run_epoch_sim(config: &SimConfig) -> Result<Vec<EpochSample>, SimError> {
    config.validate()?;
    if config.adversary_mode != AdversaryMode::None {
        return Err(SimError::WrongMode);
    }
    let mut rng = config.rng();
    let inter_arrival = Exp::new(1.0 / config.block_time_mean)
        .map_err(|_| SimError::InvalidConfig("bad block time"))?;
    let m = trigger_modulus(&config.schedule);
    let stride = config.schedule.stride;

    let mut samples = Vec::new();
    let mut now = 0.0f64;
    let mut height = 0u64;
    let mut arrivals = std::collections::VecDeque::with_capacity(MATURITY_LAG as usize + 1);
    let mut blocks_in_epoch = 0u64;
    let mut last_trigger_time = 0.0f64;
    let mut epoch_index = 0u64;

    loop {
        now += inter_arrival.sample(&mut rng);
        if now > config.horizon_minutes {
            break;
        }
        height += 1;
        arrivals.push_back(height);
        if arrivals.len() <= MATURITY_LAG as usize {
            continue;
        }
        let delivered = arrivals.pop_front().expect("non-empty by length check");
        if delivered % stride != 0 {
            continue;
        }
        blocks_in_epoch += 1;
        if rng.gen_range(0..m) == 0 {
            samples.push(EpochSample {
                epoch_index,
                length_blocks: blocks_in_epoch,
                length_minutes: now - last_trigger_time,
                triggered_by_adversary: false,
            });
            epoch_index += 1;
            blocks_in_epoch = 0;
            last_trigger_time = now;
        }
    }
    Ok(samples)
}

/// Outcome of an adversarial run: per-won-block trigger rates against the
/// honest baseline `1/m`, and the attribution split of epoch ends.
#[derive(Debug, Clone, Serialize)]
pub struct AdversaryReport {
    pub mode: AdversaryMode,
    pub alpha: f64,
    pub modulus: u64,
    pub retries: u32,
    pub blocks: u64,
    pub adversary_blocks: u64,
    pub adversary_triggers: u64,
    pub honest_blocks: u64,
    pub honest_triggers: u64,
    /// Triggers per adversary-won block.
    pub adversary_trigger_rate: f64,
    /// Triggers per honest block.
    pub honest_trigger_rate: f64,
    /// The uniform per-header baseline `1/m`.
    pub baseline_rate: f64,
    /// Share of all epoch ends attributable to the adversary's blocks.
    pub adversary_epoch_fraction: f64,
}

/// Mining-adversary simulation at the trigger-residue abstraction.
///
/// `retry_no_vdf`: without a delay function a winning miner can regrind up to
/// `R` nonces, checking the trigger instantly, and publish the first
/// favorable one. `withhold_with_vdf`: the delay function limits her to one
/// evaluated candidate per won block; an unfavorable candidate may be
/// withheld, but the honest network replaces the block meanwhile.
pub fn run_adversary_sim(config: &SimConfig) -> Result<AdversaryReport, SimError> {
    config.validate()?;
    if config.adversary_mode == AdversaryMode::None {
        return Err(SimError::WrongMode);
    }
    let mut rng = config.rng();
    let m = trigger_modulus(&config.schedule);
    let stride = config.schedule.stride;
    let blocks = (config.horizon_minutes / config.block_time_mean).round() as u64;
    let retries = config.adversary_retries.max(1);

    let mut adversary_blocks = 0u64;
    let mut adversary_triggers = 0u64;
    let mut honest_blocks = 0u64;
    let mut honest_triggers = 0u64;

    let draw = |rng: &mut ChaCha20Rng| rng.gen_range(0..m) == 0;

    for height in 1..=blocks {
        if height % stride != 0 {
            continue;
        }
        let adversary_won = rng.gen_bool(config.adversary_share);
        if adversary_won {
            adversary_blocks += 1;
            match config.adversary_mode {
                AdversaryMode::RetryNoVdf => {
                    let favorable = (0..retries).any(|_| draw(&mut rng));
                    if favorable {
                        adversary_triggers += 1;
                    }
                }
                AdversaryMode::WithholdWithVdf => {
                    if draw(&mut rng) {
                        adversary_triggers += 1;
                    } else {
                        // withheld; an honest block takes the slot instead
                        honest_blocks += 1;
                        if draw(&mut rng) {
                            honest_triggers += 1;
                        }
                    }
                }
                AdversaryMode::None => unreachable!(),
            }
        } else {
            honest_blocks += 1;
            if draw(&mut rng) {
                honest_triggers += 1;
            }
        }
    }

    let rate = |hits: u64, total: u64| if total == 0 { 0.0 } else { hits as f64 / total as f64 };
    let total_triggers = adversary_triggers + honest_triggers;
    Ok(AdversaryReport {
        mode: config.adversary_mode,
        alpha: config.adversary_share,
        modulus: m,
        retries,
        blocks,
        adversary_blocks,
        adversary_triggers,
        honest_blocks,
        honest_triggers,
        adversary_trigger_rate: rate(adversary_triggers, adversary_blocks),
        honest_trigger_rate: rate(honest_triggers, honest_blocks),
        baseline_rate: 1.0 / m as f64,
        adversary_epoch_fraction: rate(adversary_triggers, total_triggers),
    })
}

/// One prover assignment: busy over `[start, end)` minutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JobSpan {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FleetStats {
    pub prover_count: u32,
    pub jobs_arrived: u64,
    pub max_queue_length: u64,
    pub final_queue_length: u64,
    pub max_wait_minutes: f64,
    /// Busy fraction of the horizon per prover.
    pub utilization: Vec<f64>,
    /// Assignments per prover in start order.
    pub assignments: Vec<Vec<JobSpan>>,
}

impl FleetStats {
    /// Schedule-table labels for one prover: the first assignment is written
    /// with an exclusive end minute, follow-on assignments with inclusive end
    /// minutes (`start-(start+len)` then `start-(start+len-1)`).
    pub fn table_labels(&self, prover: usize) -> Vec<String> {
        self.assignments[prover]
            .iter()
            .enumerate()
            .map(|(i, span)| {
                let end = if i == 0 { span.end } else { span.end - 1.0 };
                format!("{}-{}", trim_float(span.start), trim_float(end))
            })
            .collect()
    }
}

fn trim_float(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v}")
    }
}

/// FIFO fleet scheduling: headers arrive every `block_time_mean` minutes
/// (exactly, or as a Poisson process) and each occupies one prover for
/// `prover_job_minutes`. Jobs go to the earliest-free prover, lowest index
/// on ties.
pub fn run_prover_schedule(config: &SimConfig) -> Result<FleetStats, SimError> {
    config.validate()?;
    let mut rng = config.rng();
    let provers = config.prover_count as usize;
    let job = config.prover_job_minutes;
    let mut next_free = vec![0.0f64; provers];
    let mut assignments = vec![Vec::new(); provers];
    let mut busy_in_horizon = vec![0.0f64; provers];
    let mut waits: Vec<(f64, f64)> = Vec::new(); // (arrival, start)
    let mut max_wait = 0.0f64;

    let inter = Exp::new(1.0 / config.block_time_mean)
        .map_err(|_| SimError::InvalidConfig("bad block time"))?;
    let mut now = match config.prover_arrivals {
        ArrivalProcess::Deterministic => 0.0,
        ArrivalProcess::Poisson => inter.sample(&mut rng),
    };
    let mut jobs_arrived = 0u64;

    while now <= config.horizon_minutes {
        jobs_arrived += 1;
        // earliest-free prover, lowest index wins ties
        let (idx, free_at) = next_free
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .expect("at least one prover");
        let start = now.max(free_at);
        let end = start + job;
        next_free[idx] = end;
        assignments[idx].push(JobSpan { start, end });
        busy_in_horizon[idx] += (end.min(config.horizon_minutes) - start.min(config.horizon_minutes)).max(0.0);
        max_wait = max_wait.max(start - now);
        waits.push((now, start));

        now += match config.prover_arrivals {
            ArrivalProcess::Deterministic => config.block_time_mean,
            ArrivalProcess::Poisson => inter.sample(&mut rng),
        };
    }

    // queue length over time from (+1 at arrival, -1 at start) events;
    // zero-wait jobs never enter the queue
    let mut events: Vec<(f64, i64)> = Vec::new();
    for &(arrival, start) in &waits {
        if start > arrival {
            events.push((arrival, 1));
            events.push((start, -1));
        }
    }
    // starts (-1) before arrivals (+1) at identical timestamps
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut queue = 0i64;
    let mut max_queue = 0i64;
    for &(_, delta) in &events {
        queue += delta;
        max_queue = max_queue.max(queue);
    }
    let final_queue = waits
        .iter()
        .filter(|(arrival, start)| *arrival <= config.horizon_minutes && *start > config.horizon_minutes)
        .count() as u64;

    Ok(FleetStats {
        prover_count: config.prover_count,
        jobs_arrived,
        max_queue_length: max_queue as u64,
        final_queue_length: final_queue,
        max_wait_minutes: max_wait,
        utilization: busy_in_horizon
            .iter()
            .map(|b| b / config.horizon_minutes)
            .collect(),
        assignments,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramBin {
    pub lo: u64,
    pub hi: u64,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometricFit {
    pub estimated_p: f64,
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryStats {
    pub count: u64,
    pub mean_blocks: f64,
    pub variance_blocks: f64,
    pub min_blocks: u64,
    pub max_blocks: u64,
    pub mean_minutes: f64,
    pub histogram: Vec<HistogramBin>,
    pub geometric_fit: GeometricFit,
}

/// Descriptive statistics plus a chi-square goodness-of-fit of epoch lengths
/// (in blocks) against the geometric distribution with `p` estimated from the
/// sample mean.
pub fn summarize(samples: &[EpochSample]) -> Result<SummaryStats, SimError> {
    if samples.is_empty() {
        return Err(SimError::EmptySamples);
    }
    let lengths: Vec<u64> = samples.iter().map(|s| s.length_blocks).collect();
    let n = lengths.len() as f64;
    let mean = lengths.iter().sum::<u64>() as f64 / n;
    let variance = lengths
        .iter()
        .map(|&l| (l as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    let min = *lengths.iter().min().unwrap();
    let max = *lengths.iter().max().unwrap();
    let mean_minutes = samples.iter().map(|s| s.length_minutes).sum::<f64>() / n;

    Ok(SummaryStats {
        count: lengths.len() as u64,
        mean_blocks: mean,
        variance_blocks: variance,
        min_blocks: min,
        max_blocks: max,
        mean_minutes,
        histogram: histogram(&lengths, min, max),
        geometric_fit: geometric_fit(&lengths, mean),
    })
}

fn histogram(lengths: &[u64], min: u64, max: u64) -> Vec<HistogramBin> {
    let span = max - min + 1;
    let bins = span.min(20);
    let width = span.div_ceil(bins);
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            lo: min + i * width,
            hi: (min + (i + 1) * width - 1).min(max),
            count: 0,
        })
        .collect();
    for &l in lengths {
        let idx = ((l - min) / width).min(bins - 1) as usize;
        out[idx].count += 1;
    }
    out
}

/// Equal-probability binning under the fitted geometric law, then a
/// chi-square statistic with one degree of freedom charged for the estimated
/// parameter.
fn geometric_fit(lengths: &[u64], mean: f64) -> GeometricFit {
    let n = lengths.len() as f64;
    let p = (1.0 / mean).min(1.0);
    if p >= 1.0 {
        // all lengths are 1: the fitted law is degenerate at 1
        let perfect = lengths.iter().all(|&l| l == 1);
        return GeometricFit {
            estimated_p: p,
            statistic: if perfect { 0.0 } else { f64::INFINITY },
            degrees_of_freedom: 0,
            p_value: if perfect { 1.0 } else { 0.0 },
        };
    }
    let cdf = |k: f64| 1.0 - (1.0 - p).powf(k);
    let target_bins = ((lengths.len() / 5).max(3)).min(10) as u64;
    // quantile edges; duplicates collapse for highly skewed fits
    let mut edges: Vec<u64> = Vec::new();
    for j in 1..target_bins {
        let quantile = j as f64 / target_bins as f64;
        let k = ((1.0 - quantile).ln() / (1.0 - p).ln()).ceil().max(1.0) as u64;
        if edges.last() != Some(&k) {
            edges.push(k);
        }
    }

    let mut statistic = 0.0f64;
    let mut bins_used = 0u64;
    let mut prev_edge = 0u64;
    let mut prev_cdf = 0.0f64;
    for (i, &edge) in edges.iter().chain(std::iter::once(&u64::MAX)).enumerate() {
        let is_last = i == edges.len();
        let (upper_cdf, label_hi) = if is_last { (1.0, u64::MAX) } else { (cdf(edge as f64), edge) };
        let expected = (upper_cdf - prev_cdf) * n;
        if expected > 1e-9 {
            let observed = lengths
                .iter()
                .filter(|&&l| l > prev_edge && (is_last || l <= label_hi))
                .count() as f64;
            statistic += (observed - expected).powi(2) / expected;
            bins_used += 1;
        }
        prev_edge = if is_last { u64::MAX } else { edge };
        prev_cdf = upper_cdf;
    }

    let df = bins_used.saturating_sub(2);
    let p_value = if df == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(df as f64).unwrap().cdf(statistic)
    };
    GeometricFit { estimated_p: p, statistic, degrees_of_freedom: df, p_value }
}
