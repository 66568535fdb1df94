//! End-to-end experiment runner: builds a scheme from a flat configuration,
//! generates or loads inputs, pads, runs, verifies and reports.

use std::path::PathBuf;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::batch::BatchSession;
use crate::ep::{preset, CodeKind, EpParams, Partition};
use crate::error::{Error, Result};
use crate::harness::cluster::Cluster;
use crate::harness::io::read_matrix_file;
use crate::harness::metrics::Metrics;
use crate::matrix::Matrix;
use crate::ring::{make_ring, GaloisRing};
use crate::rmfe::build_rmfe;
use crate::single::{default_degree, CostProfile, Scheme, SingleConfig, SinglePlan};

pub const METRICS_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeChoice {
    Plain,
    RmfeI,
    RmfeII,
    Batch,
    MatDot,
    Poly,
}

impl SchemeChoice {
    pub fn label(self) -> &'static str {
        match self {
            SchemeChoice::Plain => "plain",
            SchemeChoice::RmfeI => "rmfe_i",
            SchemeChoice::RmfeII => "rmfe_ii",
            SchemeChoice::Batch => "batch",
            SchemeChoice::MatDot => "matdot",
            SchemeChoice::Poly => "poly",
        }
    }
}

impl FromStr for SchemeChoice {
    type Err = Error;

    /// Accepts `-` or `_` as the separator.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "plain" => SchemeChoice::Plain,
            "rmfe_i" => SchemeChoice::RmfeI,
            "rmfe_ii" => SchemeChoice::RmfeII,
            "batch" => SchemeChoice::Batch,
            "matdot" => SchemeChoice::MatDot,
            "poly" => SchemeChoice::Poly,
            other => return Err(Error::InvalidParameter(format!("unknown scheme {other:?}"))),
        })
    }
}

/// Flat experiment description mirroring the `run` command line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub scheme: SchemeChoice,
    pub p: u64,
    pub e: u32,
    pub d: usize,
    pub t: usize,
    pub r: usize,
    pub s: usize,
    pub u: Option<usize>,
    pub v: Option<usize>,
    pub w: Option<usize>,
    pub workers: usize,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub levels: usize,
    pub level_degrees: Option<(usize, usize)>,
    pub batch_size: Option<usize>,
    pub straggler_prob: f64,
    pub base_latency_ms: f64,
    pub jitter_ms: f64,
    pub seed: u64,
    pub repeat: usize,
    pub verify: bool,
    pub packed_sum: bool,
    pub input_a: Option<PathBuf>,
    pub input_b: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Square `size` product over `GR(p^e, d)` with every optional knob unset.
    pub fn new(scheme: SchemeChoice, p: u64, e: u32, d: usize, dims: (usize, usize, usize), workers: usize) -> Self {
        ExperimentConfig {
            scheme,
            p,
            e,
            d,
            t: dims.0,
            r: dims.1,
            s: dims.2,
            u: None,
            v: None,
            w: None,
            workers,
            m: None,
            n: None,
            levels: 2,
            level_degrees: None,
            batch_size: None,
            straggler_prob: 0.0,
            base_latency_ms: 1.0,
            jitter_ms: 0.0,
            seed: 0,
            repeat: 1,
            verify: false,
            packed_sum: false,
            input_a: None,
            input_b: None,
        }
    }

    pub fn with_partition(mut self, u: usize, v: usize, w: usize) -> Self {
        self.u = Some(u);
        self.v = Some(v);
        self.w = Some(w);
        self
    }

    fn partition(&self) -> Result<Partition> {
        let kind = match self.scheme {
            SchemeChoice::MatDot => CodeKind::MatDot,
            SchemeChoice::Poly => CodeKind::Polynomial,
            _ => CodeKind::Entangled,
        };
        preset(kind, self.u, self.v, self.w)
    }

    fn cluster(&self) -> Result<Cluster> {
        Cluster::new(self.workers, self.seed)
            .with_latency(self.base_latency_ms, self.jitter_ms)?
            .with_failure_prob(self.straggler_prob)
    }
}

/// Result of a (possibly repeated) experiment.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    /// Counts of one run with timings averaged over all repeats.
    pub metrics: Metrics,
    /// SHA-256 over the little-endian words of every output matrix.
    pub checksum: String,
    /// `Some(true)` when verification ran and passed; `None` when skipped.
    pub verified: Option<bool>,
    pub predicted: CostProfile,
    pub padded_dims: (usize, usize, usize),
    pub m: usize,
    pub n: Option<usize>,
    pub outputs: Vec<Matrix>,
    config: ExperimentConfig,
    partition: Partition,
}

impl ExperimentOutcome {
    /// Metrics JSON without the `timings` object (deterministic per seed).
    pub fn counts_json(&self) -> Value {
        let (pt, pr, ps) = self.padded_dims;
        let mut config = serde_json::to_value(&self.config).expect("config serializes");
        let obj = config.as_object_mut().expect("config is an object");
        obj.insert("u".into(), json!(self.partition.u));
        obj.insert("v".into(), json!(self.partition.v));
        obj.insert("w".into(), json!(self.partition.w));
        obj.insert("m".into(), json!(self.m));
        obj.insert("n".into(), json!(self.n));
        obj.insert("padded".into(), json!({ "t": pt, "r": pr, "s": ps }));
        json!({
            "schema": METRICS_SCHEMA,
            "scheme": self.config.scheme.label(),
            "config": config,
            "recovery_threshold": self.metrics.recovery_threshold,
            "counts": self.metrics.counts_json(),
            "cost_profile": { "upload": self.predicted.upload, "download": self.predicted.download },
            "checksum": self.checksum,
            "verified": self.verified,
        })
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.counts_json();
        v["timings"] = self.metrics.timings_json();
        v
    }
}

fn round_up(x: usize, k: usize) -> usize {
    x.div_ceil(k) * k
}

fn checksum(outputs: &[Matrix]) -> String {
    let mut h = Sha256::new();
    for m in outputs {
        for w in m.words() {
            h.update(w.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Zero-pads to the plan's required multiples, multiplies, and truncates
/// back to `a.rows() x b.cols()`.
pub fn pad_and_multiply(a: &Matrix, b: &Matrix, config: &SingleConfig, cluster: &Cluster) -> Result<(Matrix, Metrics)> {
    let plan = SinglePlan::new(config.clone())?;
    pad_with_plan(&plan, a, b, cluster)
}

fn pad_with_plan(plan: &SinglePlan, a: &Matrix, b: &Matrix, cluster: &Cluster) -> Result<(Matrix, Metrics)> {
    if a.cols() != b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "A is {}x{} but B is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let (mt, mr, ms) = plan.required_multiples();
    let (t, r, s) = (a.rows(), a.cols(), b.cols());
    let (pt, pr, ps) = (round_up(t, mt), round_up(r, mr), round_up(s, ms));
    if (pt, pr, ps) == (t, r, s) {
        return plan.multiply(a, b, cluster);
    }
    let (c, metrics) = plan.multiply(&a.padded(pt, pr), &b.padded(pr, ps), cluster)?;
    Ok((c.truncated(t, s), metrics))
}

fn load_inputs(cfg: &ExperimentConfig, ring: &GaloisRing, count: usize) -> Result<(Vec<Matrix>, Vec<Matrix>)> {
    match (&cfg.input_a, &cfg.input_b) {
        (Some(pa), Some(pb)) => {
            if count != 1 {
                return Err(Error::InvalidParameter("file inputs are not supported for batch runs".into()));
            }
            let (a, b) = (read_matrix_file(pa)?, read_matrix_file(pb)?);
            if a.ring() != ring || b.ring() != ring {
                return Err(Error::ParamsMismatch);
            }
            Ok((vec![a], vec![b]))
        }
        (None, None) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut a = Vec::with_capacity(count);
            let mut b = Vec::with_capacity(count);
            for _ in 0..count {
                a.push(Matrix::random(ring, cfg.t, cfg.r, &mut rng));
                b.push(Matrix::random(ring, cfg.r, cfg.s, &mut rng));
            }
            Ok((a, b))
        }
        _ => Err(Error::InvalidParameter("give both input files or neither".into())),
    }
}

/// Runs the experiment `repeat` times on identical inputs and cluster seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    if cfg.repeat == 0 {
        return Err(Error::InvalidParameter("repeat must be >= 1".into()));
    }
    let ring = make_ring(cfg.p, cfg.e, cfg.d)?;
    let partition = cfg.partition()?;
    let cluster = cfg.cluster()?;
    match cfg.scheme {
        SchemeChoice::Batch => run_batch(cfg, &ring, partition, &cluster),
        _ => run_single(cfg, &ring, partition, &cluster),
    }
}

fn run_single(cfg: &ExperimentConfig, ring: &GaloisRing, partition: Partition, cluster: &Cluster) -> Result<ExperimentOutcome> {
    let (scheme, uses_n) = match cfg.scheme {
        SchemeChoice::RmfeI => (Scheme::RmfeI, true),
        SchemeChoice::RmfeII => (Scheme::RmfeII, true),
        _ => (Scheme::Plain, false),
    };
    let mut sc = SingleConfig::new(scheme, ring, cfg.workers, partition)
        .with_levels(cfg.levels)
        .with_packed_sum(cfg.packed_sum)
        .with_n(cfg.n.unwrap_or(2));
    sc.m = cfg.m;
    sc.level_degrees = cfg.level_degrees;
    let plan = SinglePlan::new(sc)?;

    let (a, b) = load_inputs(cfg, ring, 1)?;
    let (a, b) = (&a[0], &b[0]);
    let (mt, mr, ms) = plan.required_multiples();
    let padded = (round_up(a.rows(), mt), round_up(a.cols(), mr), round_up(b.cols(), ms));
    let expected = if cfg.verify { Some(a.matmul(b)?) } else { None };

    let mut runs = Vec::with_capacity(cfg.repeat);
    let mut output = None;
    for _ in 0..cfg.repeat {
        let (c, mut metrics) = pad_with_plan(&plan, a, b, cluster)?;
        if let Some(exp) = &expected {
            if &c != exp {
                return Err(Error::VerificationFailed);
            }
        }
        metrics.scheme = cfg.scheme.label().to_string();
        runs.push(metrics);
        output.get_or_insert(c);
    }
    let outputs = vec![output.expect("repeat >= 1")];
    Ok(ExperimentOutcome {
        metrics: Metrics::average(&runs).expect("repeat >= 1"),
        checksum: checksum(&outputs),
        verified: expected.map(|_| true),
        predicted: plan.cost_profile(padded.0, padded.1, padded.2),
        padded_dims: padded,
        m: plan.m(),
        n: uses_n.then_some(plan.config().n),
        outputs,
        config: cfg.clone(),
        partition,
    })
}

fn run_batch(cfg: &ExperimentConfig, ring: &GaloisRing, partition: Partition, cluster: &Cluster) -> Result<ExperimentOutcome> {
    let n = cfg.batch_size.or(cfg.n).unwrap_or(2);
    if n == 0 {
        return Err(Error::InvalidParameter("batch size must be >= 1".into()));
    }
    let m = cfg.m.unwrap_or_else(|| default_degree(ring, cfg.workers).max(2 * n - 1));
    let infinity = ring.residue_field_size().is_some_and(|q| n as u64 > q);
    let rmfe = build_rmfe(ring, n, m, infinity)?;
    let ep = EpParams::new(rmfe.ext(), partition, cfg.workers)?;

    let (a, b) = load_inputs(cfg, ring, n)?;
    let padded = (
        round_up(cfg.t, partition.u),
        round_up(cfg.r, partition.w),
        round_up(cfg.s, partition.v),
    );
    let (pt, pr, ps) = padded;
    let pa: Vec<Matrix> = a.iter().map(|x| x.padded(pt, pr)).collect();
    let pb: Vec<Matrix> = b.iter().map(|x| x.padded(pr, ps)).collect();
    let expected = if cfg.verify {
        Some(a.iter().zip(&b).map(|(x, y)| x.matmul(y)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };

    let mut runs = Vec::with_capacity(cfg.repeat);
    let mut outputs = None;
    for _ in 0..cfg.repeat {
        let mut session = BatchSession::new(rmfe.clone(), ep.clone(), padded)?;
        let out: Vec<Matrix> = session
            .batch_multiply(&pa, &pb, cluster)?
            .iter()
            .map(|c| c.truncated(cfg.t, cfg.s))
            .collect();
        if let Some(exp) = &expected {
            if &out != exp {
                return Err(Error::VerificationFailed);
            }
        }
        runs.push(session.into_metrics());
        outputs.get_or_insert(out);
    }
    let outputs = outputs.expect("repeat >= 1");
    let mm = m as u64;
    Ok(ExperimentOutcome {
        metrics: Metrics::average(&runs).expect("repeat >= 1"),
        checksum: checksum(&outputs),
        verified: expected.map(|_| true),
        predicted: CostProfile {
            upload: ep.upload_elements(pt, pr, ps) * mm,
            download: ep.download_elements(pt, ps) * mm,
        },
        padded_dims: padded,
        m,
        n: Some(n),
        outputs,
        config: cfg.clone(),
        partition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_names() {
        assert_eq!("rmfe-ii".parse::<SchemeChoice>().unwrap(), SchemeChoice::RmfeII);
        assert_eq!("rmfe_i".parse::<SchemeChoice>().unwrap(), SchemeChoice::RmfeI);
        assert!("rmfe".parse::<SchemeChoice>().is_err());
    }

    #[test]
    fn padding_example() {
        let ring = make_ring(2, 64, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = Matrix::random(&ring, 3, 3, &mut rng);
        let b = Matrix::random(&ring, 3, 3, &mut rng);
        let cfg = SingleConfig::new(Scheme::Plain, &ring, 8, Partition::new(2, 2, 1).unwrap());
        let (c, _) = pad_and_multiply(&a, &b, &cfg, &Cluster::new(8, 0)).unwrap();
        assert_eq!(c, a.matmul(&b).unwrap());
        let z = Matrix::zeros(&ring, 5, 3);
        let (c, _) = pad_and_multiply(&z, &Matrix::zeros(&ring, 3, 7), &cfg, &Cluster::new(8, 0)).unwrap();
        assert!(c.is_zero() && c.shape() == (5, 7));
    }

    #[test]
    fn single_and_batch_runs_verify() {
        let mut cfg = ExperimentConfig::new(SchemeChoice::Plain, 2, 64, 1, (8, 8, 8), 8).with_partition(2, 2, 1);
        cfg.verify = true;
        cfg.repeat = 2;
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.metrics.recovery_threshold, 4);
        assert_eq!(out.metrics.upload_base_elements, out.predicted.upload);
        assert_eq!(out.metrics.download_base_elements, out.predicted.download);
        assert_eq!(out.verified, Some(true));

        cfg.scheme = SchemeChoice::Batch;
        cfg.t = 5;
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.outputs.len(), 2);
        assert_eq!(out.padded_dims, (6, 8, 8));
        assert_eq!(out.metrics.upload_base_elements, out.predicted.upload);
    }

    #[test]
    fn counts_json_is_deterministic() {
        let mut cfg = ExperimentConfig::new(SchemeChoice::RmfeI, 2, 8, 1, (4, 4, 4), 8).with_partition(2, 2, 1);
        cfg.seed = 11;
        cfg.jitter_ms = 3.0;
        cfg.straggler_prob = 0.2;
        let a = run_experiment(&cfg);
        let b = run_experiment(&cfg);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a.counts_json(), b.counts_json());
                assert_eq!(a.counts_json()["schema"], 1);
                assert!(a.to_json()["timings"].is_object());
            }
            (Err(a), Err(b)) => assert_eq!(a, b),
            _ => panic!("nondeterministic outcome"),
        }
    }

    #[test]
    fn presets_reject_conflicts() {
        let cfg = ExperimentConfig::new(SchemeChoice::MatDot, 2, 8, 1, (4, 4, 4), 8).with_partition(2, 1, 2);
        assert!(matches!(run_experiment(&cfg), Err(Error::PresetConflict { .. })));
    }
}
