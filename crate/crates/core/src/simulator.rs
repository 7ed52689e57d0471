//! Discrete-event simulation used as an independent check on the analytic
//! results: busy periods of the M|G|∞ queue and sojourn times in open
//! infinite-server networks.
//!
//! Randomness comes from ChaCha8 seeded with the user seed; replication r
//! uses stream r of that generator, so every replication is reproducible on
//! its own and merged output does not depend on the number of threads.

use std::num::NonZeroUsize;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::distributions::QueueModel;
use crate::error::{Error, Result};
use crate::network::NetworkModel;

/// A customer making more hops than this is assumed trapped.
pub const MAX_HOPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimTarget {
    /// Stop after this many complete busy periods.
    Periods(usize),
    /// Simulate this much time; periods straddling the end are dropped.
    Horizon(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub target: SimTarget,
    /// Periods opening before this time are discarded.
    pub warmup: f64,
    /// Independent streams; the work is split evenly across them.
    pub replications: usize,
    pub threads: NonZeroUsize,
}

impl SimConfig {
    pub fn periods(seed: u64, count: usize) -> Self {
        SimConfig {
            seed,
            target: SimTarget::Periods(count),
            warmup: 0.0,
            replications: 8,
            threads: NonZeroUsize::MIN,
        }
    }

    pub fn horizon(seed: u64, horizon: f64) -> Self {
        SimConfig {
            target: SimTarget::Horizon(horizon),
            ..Self::periods(seed, 0)
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = NonZeroUsize::new(threads).unwrap_or(NonZeroUsize::MIN);
        self
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications.max(1);
        self
    }

    fn validate(&self) -> Result<()> {
        match self.target {
            SimTarget::Periods(0) => Err(Error::Domain("busy-period count must be at least 1".into())),
            SimTarget::Horizon(h) if !(h > 0.0 && h.is_finite()) => {
                Err(Error::Domain(format!("horizon must be positive, got {h}")))
            }
            _ if !(self.warmup >= 0.0) => Err(Error::Domain(format!("warmup must be >= 0, got {}", self.warmup))),
            _ => Ok(()),
        }
    }

    /// Generator for replication `r`.
    pub fn stream(&self, r: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(r as u64);
        rng
    }
}

/// Splits `total` into `parts` near-equal shares, larger shares first.
fn shares(total: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|r| total / parts + usize::from(r < total % parts))
        .collect()
}

/// Runs `job(r)` for every replication on up to `threads` threads and
/// returns the results in replication order.
fn run_replications<T, F>(replications: usize, threads: NonZeroUsize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = threads.get().min(replications).max(1);
    if workers == 1 {
        return (0..replications).map(&job).collect();
    }
    let mut slots: Vec<Option<T>> = (0..replications).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let job = &job;
                scope.spawn(move || {
                    (w..replications)
                        .step_by(workers)
                        .map(|r| (r, job(r)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (r, out) in h.join().expect("simulation worker panicked") {
                slots[r] = Some(out);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every replication ran")).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BusyPeriodSample {
    pub durations: Vec<f64>,
    /// Idle time following each recorded busy period.
    pub idle_durations: Vec<f64>,
}

impl BusyPeriodSample {
    pub fn periods(&self) -> usize {
        self.durations.len()
    }

    pub fn mean(&self) -> f64 {
        self.durations.iter().sum::<f64>() / self.durations.len() as f64
    }

    /// Standard error of the mean duration.
    pub fn std_error(&self) -> f64 {
        let n = self.durations.len() as f64;
        let m = self.mean();
        let var = self.durations.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Busy periods of the M|G|∞ queue, starting empty at time 0.
///
/// A period opens with an arrival to an empty system and closes at the
/// latest departure among the customers it absorbed. An arrival exactly at
/// that instant starts a new period. Services with an atom at 0 give
/// busy periods of length 0, which are kept.
pub fn simulate_queue(queue: &QueueModel, cfg: &SimConfig) -> Result<BusyPeriodSample> {
    cfg.validate()?;
    let replications = cfg.replications.max(1);
    let per_rep: Vec<(Option<usize>, f64)> = match cfg.target {
        SimTarget::Periods(n) => shares(n, replications)
            .into_iter()
            .map(|k| (Some(k), f64::INFINITY))
            .collect(),
        SimTarget::Horizon(h) => vec![(None, h / replications as f64); replications],
    };
    let runs = run_replications(replications, cfg.threads, |r| {
        let (count, horizon) = per_rep[r];
        let mut rng = cfg.stream(r);
        one_queue_run(queue, count, horizon, cfg.warmup, &mut rng)
    });
    let mut merged = BusyPeriodSample::default();
    for run in runs {
        merged.durations.extend(run.durations);
        merged.idle_durations.extend(run.idle_durations);
    }
    if merged.durations.is_empty() {
        return Err(Error::ZeroPeriods);
    }
    Ok(merged)
}

fn one_queue_run<R: Rng>(
    queue: &QueueModel,
    count: Option<usize>,
    horizon: f64,
    warmup: f64,
    rng: &mut R,
) -> BusyPeriodSample {
    let mut out = BusyPeriodSample::default();
    if count == Some(0) {
        return out;
    }
    let gaps = Exp::new(queue.lambda()).expect("validated rate");
    let service = queue.service();
    let mut arrival = gaps.sample(rng);
    loop {
        let start = arrival;
        let mut last_departure = start + service.sample(rng);
        arrival += gaps.sample(rng);
        while arrival < last_departure {
            last_departure = last_departure.max(arrival + service.sample(rng));
            arrival += gaps.sample(rng);
        }
        if last_departure > horizon {
            break;
        }
        if start >= warmup {
            out.durations.push(last_departure - start);
            out.idle_durations.push(arrival - last_departure);
            if count.is_some_and(|n| out.durations.len() >= n) {
                break;
            }
        }
    }
    out
}

/// Sojourn times of `customers` independent customers. With infinite
/// servers and instantaneous routing a sojourn is the sum of the services
/// received along the customer's path.
pub fn simulate_network(net: &NetworkModel, customers: usize, cfg: &SimConfig) -> Result<Vec<f64>> {
    if customers == 0 {
        return Err(Error::Domain("customer count must be at least 1".into()));
    }
    let replications = cfg.replications.max(1);
    let per_rep = shares(customers, replications);
    let total_rate = net.total_rate();
    let entry: Vec<f64> = net
        .lambdas()
        .iter()
        .scan(0.0, |acc, l| {
            *acc += l / total_rate;
            Some(*acc)
        })
        .collect();
    let runs = run_replications(replications, cfg.threads, |r| -> Result<Vec<f64>> {
        let mut rng = cfg.stream(r);
        (0..per_rep[r]).map(|_| one_sojourn(net, &entry, &mut rng)).collect()
    });
    let mut out = Vec::with_capacity(customers);
    for run in runs {
        out.extend(run?);
    }
    Ok(out)
}

/// Index of the first cumulative weight exceeding `u`, if any.
fn pick(cumulative: impl Iterator<Item = f64>, u: f64) -> Option<usize> {
    let mut acc = 0.0;
    for (i, w) in cumulative.enumerate() {
        acc += w;
        if u < acc {
            return Some(i);
        }
    }
    None
}

fn one_sojourn<R: Rng>(net: &NetworkModel, entry_cdf: &[f64], rng: &mut R) -> Result<f64> {
    let u: f64 = rng.random();
    let mut node = entry_cdf.iter().position(|&c| u < c).unwrap_or(entry_cdf.len() - 1);
    let mut total = 0.0;
    for _ in 0..MAX_HOPS {
        total += net.services()[node].sample(rng);
        let u: f64 = rng.random();
        match pick(net.routing()[node].iter().copied(), u) {
            Some(next) => node = next,
            None => return Ok(total),
        }
    }
    Err(Error::RoutingTrap { hops: MAX_HOPS })
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// Fraction of samples ≤ t at each grid point.
pub fn empirical_df(samples: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    let xs = sorted(samples)?;
    let n = xs.len() as f64;
    Ok(grid
        .iter()
        .map(|&t| xs.partition_point(|&x| x <= t) as f64 / n)
        .collect())
}

/// Two-sided Kolmogorov–Smirnov statistic sup |F_n − F|, including the left
/// limits at each sample so atoms and ties are handled.
pub fn ks_distance(samples: &[f64], df: impl Fn(f64) -> f64) -> Result<f64> {
    let xs = sorted(samples)?;
    let n = xs.len();
    let mut worst = 0.0f64;
    let mut i = 0;
    while i < n {
        let x = xs[i];
        let mut j = i;
        while j < n && xs[j] == x {
            j += 1;
        }
        let below = i as f64 / n as f64;
        let at = j as f64 / n as f64;
        let left = df(x - 1e-12 * x.abs().max(1.0));
        worst = worst.max((at - df(x)).abs()).max((below - left).abs());
        i = j;
    }
    Ok(worst)
}

/// 95% critical value of the KS statistic for large n.
pub fn ks_critical_95(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}
