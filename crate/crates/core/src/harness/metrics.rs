use std::time::Duration;

use serde_json::{json, Value};

/// Exact communication counts plus phase timings of one run.
///
/// Counts are in base-ring elements. Only the responses used for decoding
/// contribute download; workers outside the decoding set report zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metrics {
    pub scheme: String,
    pub workers: usize,
    pub recovery_threshold: usize,
    /// Products delivered by the run (n for a batch, 1 for a single product).
    pub multiplications: usize,
    pub upload_base_elements: u64,
    pub download_base_elements: u64,
    pub per_worker_upload: Vec<u64>,
    pub per_worker_download: Vec<u64>,
    /// Ids whose responses were used for decoding, ascending.
    pub responding_workers: Vec<usize>,
    pub timings: Timings,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Timings {
    pub pack: Duration,
    pub encode: Duration,
    pub decode: Duration,
    pub unpack: Duration,
    /// Measured compute time of each worker (zero for failed workers).
    pub per_worker: Vec<Duration>,
}

impl Metrics {
    pub fn new(scheme: &str, workers: usize, recovery_threshold: usize) -> Self {
        Metrics {
            scheme: scheme.to_string(),
            workers,
            recovery_threshold,
            multiplications: 0,
            upload_base_elements: 0,
            download_base_elements: 0,
            per_worker_upload: vec![0; workers],
            per_worker_download: vec![0; workers],
            responding_workers: Vec::new(),
            timings: Timings {
                per_worker: vec![Duration::ZERO; workers],
                ..Timings::default()
            },
        }
    }

    /// Arithmetic mean of timings; counts are taken from the first run and
    /// must agree across runs.
    pub fn average(runs: &[Metrics]) -> Option<Metrics> {
        let first = runs.first()?;
        let k = runs.len() as u32;
        let mut out = first.clone();
        let sum = |f: &dyn Fn(&Metrics) -> Duration| runs.iter().map(f).sum::<Duration>() / k;
        out.timings.pack = sum(&|m| m.timings.pack);
        out.timings.encode = sum(&|m| m.timings.encode);
        out.timings.decode = sum(&|m| m.timings.decode);
        out.timings.unpack = sum(&|m| m.timings.unpack);
        for (i, slot) in out.timings.per_worker.iter_mut().enumerate() {
            *slot = runs.iter().map(|m| m.timings.per_worker[i]).sum::<Duration>() / k;
        }
        Some(out)
    }

    /// Count fields only (deterministic for a fixed seed).
    pub fn counts_json(&self) -> Value {
        json!({
            "scheme": self.scheme,
            "workers": self.workers,
            "recovery_threshold": self.recovery_threshold,
            "multiplications": self.multiplications,
            "upload_base_elements": self.upload_base_elements,
            "download_base_elements": self.download_base_elements,
            "per_worker_upload": self.per_worker_upload,
            "per_worker_download": self.per_worker_download,
            "responding_workers": self.responding_workers,
        })
    }

    pub fn timings_json(&self) -> Value {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        json!({
            "pack_ms": ms(self.timings.pack),
            "encode_ms": ms(self.timings.encode),
            "decode_ms": ms(self.timings.decode),
            "unpack_ms": ms(self.timings.unpack),
            "per_worker_ms": self.timings.per_worker.iter().map(|&d| ms(d)).collect::<Vec<_>>(),
        })
    }
}
