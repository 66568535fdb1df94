//! Entangled polynomial (EP) codes over an extension Galois ring.
//!
//! With A split into a u x w grid and B into a w x v grid,
//! `f(x) = Σ A_ij x^{iw + j}` and `g(x) = Σ B_kl x^{w-1-k + l·uw}` (0-based).
//! Block (i, l) of C = AB is the coefficient of `h = f·g` at degree
//! `iw + (w-1) + l·uw`, and `deg h = uvw + w - 2`.

use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::poly::{EvalMode, Evaluator, Interpolator, MatrixPoly};
use crate::ring::{GaloisRing, RingElement};

/// `uvw + w - 1`.
pub fn recovery_threshold(u: usize, v: usize, w: usize) -> usize {
    u * v * w + w - 1
}

/// Block counts: A is u x w blocks, B is w x v blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub u: usize,
    pub v: usize,
    pub w: usize,
}

impl Partition {
    pub fn new(u: usize, v: usize, w: usize) -> Result<Self> {
        if u == 0 || v == 0 || w == 0 {
            return Err(Error::InvalidParameter("partition counts must be >= 1".into()));
        }
        Ok(Partition { u, v, w })
    }

    pub fn recovery_threshold(&self) -> usize {
        recovery_threshold(self.u, self.v, self.w)
    }

    /// Extraction degree of C block (i, l).
    pub fn block_degree(&self, i: usize, l: usize) -> usize {
        i * self.w + (self.w - 1) + l * self.u * self.w
    }

    /// Checks `u | t`, `w | r`, `v | s`.
    pub fn check_dims(&self, t: usize, r: usize, s: usize) -> Result<()> {
        for (what, value, divisor) in [("t", t, self.u), ("r", r, self.w), ("s", s, self.v)] {
            if value % divisor != 0 {
                return Err(Error::IndivisibleDimensions { what, value, divisor });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeKind {
    Polynomial,
    MatDot,
    Entangled,
}

/// Resolves a partition for a code family; unspecified counts default to 1.
/// Polynomial codes force w = 1, MatDot forces u = v = 1.
pub fn preset(kind: CodeKind, u: Option<usize>, v: Option<usize>, w: Option<usize>) -> Result<Partition> {
    let conflict = |preset: &'static str, param: &'static str, value: Option<usize>| match value {
        Some(x) if x != 1 => Err(Error::PresetConflict { preset, param, value: x }),
        _ => Ok(()),
    };
    match kind {
        CodeKind::Polynomial => {
            conflict("polynomial", "w", w)?;
            Partition::new(u.unwrap_or(1), v.unwrap_or(1), 1)
        }
        CodeKind::MatDot => {
            conflict("matdot", "u", u)?;
            conflict("matdot", "v", v)?;
            Partition::new(1, 1, w.unwrap_or(1))
        }
        CodeKind::Entangled => Partition::new(u.unwrap_or(1), v.unwrap_or(1), w.unwrap_or(1)),
    }
}

/// Session parameters: partition, worker count, coding ring, and the first
/// N canonical exceptional points (worker i evaluates at point i).
#[derive(Debug, Clone)]
pub struct EpParams {
    partition: Partition,
    workers: usize,
    ring: GaloisRing,
    eval_points: Vec<RingElement>,
    mode: EvalMode,
}

impl EpParams {
    pub fn new(ring: &GaloisRing, partition: Partition, workers: usize) -> Result<Self> {
        let threshold = partition.recovery_threshold();
        if threshold > workers {
            return Err(Error::ThresholdExceedsWorkers { threshold, workers });
        }
        let eval_points = ring
            .exceptional_set(workers)
            .map_err(|e| match e {
                Error::CountTooLarge { available, .. } => Error::TooManyWorkers { workers, available },
                other => other,
            })?
            .into_elements();
        Ok(EpParams {
            partition,
            workers,
            ring: ring.clone(),
            eval_points,
            mode: EvalMode::Fast,
        })
    }

    /// Evaluation/interpolation strategy for encoding (decode always picks
    /// per point count).
    pub fn with_mode(mut self, mode: EvalMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn ring(&self) -> &GaloisRing {
        &self.ring
    }

    pub fn eval_points(&self) -> &[RingElement] {
        &self.eval_points
    }

    pub fn recovery_threshold(&self) -> usize {
        self.partition.recovery_threshold()
    }

    /// Extension elements sent to all workers for a t x r by r x s product.
    pub fn upload_elements(&self, t: usize, r: usize, s: usize) -> u64 {
        let Partition { u, v, w } = self.partition;
        (self.workers * (t * r / (u * w) + r * s / (w * v))) as u64
    }

    /// Extension elements downloaded from the R decoding workers.
    pub fn download_elements(&self, t: usize, s: usize) -> u64 {
        let Partition { u, v, .. } = self.partition;
        (self.recovery_threshold() * (t * s / (u * v))) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerTask {
    pub worker_id: usize,
    pub a_share: Matrix,
    pub b_share: Matrix,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerResponse {
    pub worker_id: usize,
    pub product: Matrix,
    /// Simulated arrival delay.
    pub latency: Duration,
    /// Measured local compute time.
    pub compute_time: Duration,
}

/// A u x w grid for A and a w x v grid for B.
pub fn partition(m: &Matrix, row_blocks: usize, col_blocks: usize) -> Result<Vec<Vec<Matrix>>> {
    m.partition(row_blocks, col_blocks)
}

/// The encoding polynomials `(f, g)`.
pub fn encoding_polynomials(a: &Matrix, b: &Matrix, params: &EpParams) -> Result<(MatrixPoly, MatrixPoly)> {
    let ring = &params.ring;
    if a.ring() != ring || b.ring() != ring {
        return Err(Error::ParamsMismatch);
    }
    if a.cols() != b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "A is {}x{} but B is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let p = params.partition;
    let Partition { u, v, w } = p;
    p.check_dims(a.rows(), a.cols(), b.cols())?;
    let ga = a.partition(u, w)?;
    let gb = b.partition(w, v)?;
    let (ar, ac) = ga[0][0].shape();
    let (br, bc) = gb[0][0].shape();
    let mut f = MatrixPoly::zeros(ring, ar, ac, u * w);
    for (i, row) in ga.iter().enumerate() {
        for (j, blk) in row.iter().enumerate() {
            f.add_to_coeff(i * w + j, blk)?;
        }
    }
    let mut g = MatrixPoly::zeros(ring, br, bc, w + (v - 1) * u * w);
    for (k, row) in gb.iter().enumerate() {
        for (l, blk) in row.iter().enumerate() {
            g.add_to_coeff(w - 1 - k + l * u * w, blk)?;
        }
    }
    Ok((f, g))
}

/// One task per worker: `(f(α_i), g(α_i))`.
pub fn encode(a: &Matrix, b: &Matrix, params: &EpParams) -> Result<Vec<WorkerTask>> {
    let threshold = params.recovery_threshold();
    if threshold > params.workers {
        return Err(Error::ThresholdExceedsWorkers {
            threshold,
            workers: params.workers,
        });
    }
    let (f, g) = encoding_polynomials(a, b, params)?;
    let eval = Evaluator::new(&params.ring, &params.eval_points, params.mode)?;
    let fa = eval.eval_matrices(&f)?;
    let gb = eval.eval_matrices(&g)?;
    Ok(fa
        .into_iter()
        .zip(gb)
        .enumerate()
        .map(|(worker_id, (a_share, b_share))| WorkerTask {
            worker_id,
            a_share,
            b_share,
        })
        .collect())
}

/// `h(α_i) = f(α_i) g(α_i)`.
pub fn worker_multiply(task: &WorkerTask) -> Result<WorkerResponse> {
    let start = std::time::Instant::now();
    let product = task.a_share.matmul(&task.b_share)?;
    Ok(WorkerResponse {
        worker_id: task.worker_id,
        product,
        latency: Duration::ZERO,
        compute_time: start.elapsed(),
    })
}

/// Ids and responses actually used to decode: the R smallest distinct ids.
pub fn select_responses<'a>(
    responses: &'a [WorkerResponse],
    params: &EpParams,
) -> Result<Vec<&'a WorkerResponse>> {
    let mut seen = BTreeSet::new();
    for r in responses {
        if r.worker_id >= params.workers {
            return Err(Error::UnknownWorker(r.worker_id));
        }
        if !seen.insert(r.worker_id) {
            return Err(Error::DuplicateWorker(r.worker_id));
        }
    }
    let need = params.recovery_threshold();
    if seen.len() < need {
        return Err(Error::InsufficientResponses {
            have: seen.len(),
            need,
        });
    }
    let mut chosen: Vec<&WorkerResponse> = responses.iter().collect();
    chosen.sort_by_key(|r| r.worker_id);
    chosen.truncate(need);
    Ok(chosen)
}

/// Interpolates h from R responses and assembles C; `dims = (t, r, s)`.
pub fn decode(responses: &[WorkerResponse], params: &EpParams, dims: (usize, usize, usize)) -> Result<Matrix> {
    let (t, r, s) = dims;
    let p = params.partition;
    p.check_dims(t, r, s)?;
    let chosen = select_responses(responses, params)?;
    let block = (t / p.u, s / p.v);
    for resp in &chosen {
        if resp.product.ring() != &params.ring {
            return Err(Error::ParamsMismatch);
        }
        if resp.product.shape() != block {
            return Err(Error::ShapeMismatch(format!(
                "worker {} returned {:?}, expected {:?}",
                resp.worker_id,
                resp.product.shape(),
                block
            )));
        }
    }
    let points: Vec<RingElement> = chosen
        .iter()
        .map(|r| params.eval_points[r.worker_id].clone())
        .collect();
    let values: Vec<Matrix> = chosen.iter().map(|r| r.product.clone()).collect();
    let interp = Interpolator::new(&params.ring, &points, EvalMode::Auto)?;
    let degrees: Vec<usize> = (0..p.u)
        .flat_map(|i| (0..p.v).map(move |l| p.block_degree(i, l)))
        .collect();
    let mut coeffs = interp.coefficients(&values, &degrees)?.into_iter();
    let grid: Vec<Vec<Matrix>> = (0..p.u)
        .map(|_| (0..p.v).map(|_| coeffs.next().expect("u*v blocks")).collect())
        .collect();
    Matrix::assemble(&grid)
}

// ----- wire format ---------------------------------------------------------

const HEADER_BYTES: usize = 24;

fn write_record(id: usize, m: &Matrix, out: &mut Vec<u8>) {
    for v in [id as u64, m.rows() as u64, m.cols() as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for w in m.words() {
        out.extend_from_slice(&w.to_le_bytes());
    }
}

fn read_record(ring: &GaloisRing, bytes: &[u8]) -> Result<(usize, Matrix, usize)> {
    if bytes.len() < HEADER_BYTES {
        return Err(Error::Format("truncated record header".into()));
    }
    let head: Vec<u64> = bytes[..HEADER_BYTES]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let (id, rows, cols) = (head[0] as usize, head[1] as usize, head[2] as usize);
    let words = rows
        .checked_mul(cols)
        .and_then(|x| x.checked_mul(ring.width()))
        .ok_or_else(|| Error::Format("record dimensions overflow".into()))?;
    let end = HEADER_BYTES + words * 8;
    if bytes.len() < end {
        return Err(Error::Format("truncated record body".into()));
    }
    let data = bytes[HEADER_BYTES..end]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let m = Matrix::from_words(ring, rows, cols, data).map_err(|e| Error::Format(e.to_string()))?;
    Ok((id, m, end))
}

/// Number of ring words in a serialized message with `records` headers.
pub fn payload_words(bytes: &[u8], records: usize) -> usize {
    (bytes.len() - records * HEADER_BYTES) / 8
}

impl WorkerTask {
    /// Two records: `a_share` then `b_share`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_record(self.worker_id, &self.a_share, &mut out);
        write_record(self.worker_id, &self.b_share, &mut out);
        out
    }

    pub fn from_bytes(ring: &GaloisRing, bytes: &[u8]) -> Result<Self> {
        let (id, a_share, used) = read_record(ring, bytes)?;
        let (id_b, b_share, used_b) = read_record(ring, &bytes[used..])?;
        if id != id_b || used + used_b != bytes.len() {
            return Err(Error::Format("inconsistent task records".into()));
        }
        Ok(WorkerTask {
            worker_id: id,
            a_share,
            b_share,
        })
    }
}

impl WorkerResponse {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_record(self.worker_id, &self.product, &mut out);
        out
    }

    /// Latency and compute time are simulation metadata and not on the wire.
    pub fn from_bytes(ring: &GaloisRing, bytes: &[u8]) -> Result<Self> {
        let (worker_id, product, used) = read_record(ring, bytes)?;
        if used != bytes.len() {
            return Err(Error::Format("trailing bytes after response".into()));
        }
        Ok(WorkerResponse {
            worker_id,
            product,
            latency: Duration::ZERO,
            compute_time: Duration::ZERO,
        })
    }
}
