//! Simulated worker pool with a base-plus-exponential latency model.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;

use crate::ep::{self, EpParams, WorkerResponse, WorkerTask};
use crate::error::{Error, Result};
use crate::harness::metrics::Metrics;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    workers: usize,
    base_latency_ms: f64,
    jitter_ms: f64,
    failure_prob: f64,
    seed: u64,
    forced_failures: BTreeSet<usize>,
}

/// Latency and liveness drawn for one worker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkerFate {
    pub latency: Duration,
    pub failed: bool,
}

impl Cluster {
    /// N reliable workers with a 1 ms base latency and no jitter.
    pub fn new(workers: usize, seed: u64) -> Self {
        Cluster {
            workers,
            base_latency_ms: 1.0,
            jitter_ms: 0.0,
            failure_prob: 0.0,
            seed,
            forced_failures: BTreeSet::new(),
        }
    }

    /// Base latency plus exponential jitter with the given mean (both in ms).
    pub fn with_latency(mut self, base_ms: f64, jitter_mean_ms: f64) -> Result<Self> {
        if !(base_ms >= 0.0 && jitter_mean_ms >= 0.0) || !base_ms.is_finite() || !jitter_mean_ms.is_finite() {
            return Err(Error::InvalidParameter("latency parameters must be finite and >= 0".into()));
        }
        self.base_latency_ms = base_ms;
        self.jitter_ms = jitter_mean_ms;
        Ok(self)
    }

    /// Probability in `[0, 1)` that a worker never responds.
    pub fn with_failure_prob(mut self, p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "failure probability {p} outside [0, 1)"
            )));
        }
        self.failure_prob = p;
        Ok(self)
    }

    /// Workers that always fail, regardless of the sampled fate.
    pub fn with_forced_failures(mut self, ids: impl IntoIterator<Item = usize>) -> Self {
        self.forced_failures.extend(ids);
        self
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Per-worker fates; a pure function of the configuration.
    pub fn fates(&self) -> Vec<WorkerFate> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        let exp = (self.jitter_ms > 0.0).then(|| Exp::new(1.0 / self.jitter_ms).expect("positive rate"));
        (0..self.workers)
            .map(|id| {
                let jitter = exp.as_ref().map_or(0.0, |e| e.sample(&mut rng));
                let drop = rng.random::<f64>() < self.failure_prob;
                WorkerFate {
                    latency: Duration::from_secs_f64((self.base_latency_ms + jitter) / 1e3),
                    failed: drop || self.forced_failures.contains(&id),
                }
            })
            .collect()
    }

    /// Runs every surviving worker and returns responses in arrival order
    /// (by simulated latency, ties by id). Failed workers are absent.
    pub fn simulate(&self, tasks: &[WorkerTask]) -> Result<Vec<WorkerResponse>> {
        if tasks.len() != self.workers {
            return Err(Error::LengthMismatch {
                expected: self.workers,
                actual: tasks.len(),
            });
        }
        let fates = self.fates();
        let mut responses = tasks
            .par_iter()
            .filter(|t| !fates[t.worker_id].failed)
            .map(|t| {
                let mut r = ep::worker_multiply(t)?;
                r.latency = fates[t.worker_id].latency;
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?;
        responses.sort_by(|a, b| a.latency.cmp(&b.latency).then(a.worker_id.cmp(&b.worker_id)));
        Ok(responses)
    }
}

/// One coded round: encode, ship, simulate, decode from the first R
/// arrivals. Communication is tallied from the serialized messages in units
/// of `unit_width` words.
pub fn execute_round(
    ep: &EpParams,
    a: &Matrix,
    b: &Matrix,
    cluster: &Cluster,
    unit_width: usize,
    metrics: &mut Metrics,
) -> Result<Matrix> {
    if cluster.workers() != ep.workers() {
        return Err(Error::InvalidParameter(format!(
            "cluster has {} workers but the code expects {}",
            cluster.workers(),
            ep.workers()
        )));
    }
    let dims = (a.rows(), a.cols(), b.cols());
    let start = Instant::now();
    let tasks = ep::encode(a, b, ep)?;
    metrics.timings.encode += start.elapsed();

    for t in &tasks {
        let words = ep::payload_words(&t.to_bytes(), 2);
        debug_assert_eq!(words % unit_width, 0);
        let units = (words / unit_width) as u64;
        metrics.per_worker_upload[t.worker_id] += units;
        metrics.upload_base_elements += units;
    }

    let mut arrivals = cluster.simulate(&tasks)?;
    for r in &arrivals {
        metrics.timings.per_worker[r.worker_id] += r.compute_time;
    }
    arrivals.truncate(ep.recovery_threshold());

    let start = Instant::now();
    let result = ep::decode(&arrivals, ep, dims)?;
    metrics.timings.decode += start.elapsed();

    let mut used: Vec<usize> = arrivals.iter().map(|r| r.worker_id).collect();
    used.sort_unstable();
    for r in &arrivals {
        let words = ep::payload_words(&r.to_bytes(), 1);
        let units = (words / unit_width) as u64;
        metrics.per_worker_download[r.worker_id] += units;
        metrics.download_base_elements += units;
    }
    metrics.responding_workers = used;
    metrics.recovery_threshold = ep.recovery_threshold();
    Ok(result)
}
