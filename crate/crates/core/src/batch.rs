//! Batch-EP-RMFE: n matrix pairs packed entrywise by an RMFE, multiplied in
//! one EP session over the extension, and unpacked after decoding.

use std::borrow::Borrow;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use serde::Serialize;

use crate::ep::EpParams;
use crate::error::{Error, Result};
use crate::harness::cluster::{execute_round, Cluster};
use crate::harness::metrics::Metrics;
use crate::matrix::Matrix;
use crate::rmfe::RmfeScheme;

#[derive(Debug, Clone)]
pub struct BatchSession {
    rmfe: RmfeScheme,
    ep: EpParams,
    dims: (usize, usize, usize),
    unit_width: usize,
    metrics: Metrics,
}

impl BatchSession {
    /// `dims = (t, r, s)` of every pair; requires `ep.ring == rmfe.ext`.
    pub fn new(rmfe: RmfeScheme, ep: EpParams, dims: (usize, usize, usize)) -> Result<Self> {
        if ep.ring() != rmfe.ext() {
            return Err(Error::ParamsMismatch);
        }
        ep.partition().check_dims(dims.0, dims.1, dims.2)?;
        let unit_width = rmfe.base().width();
        let metrics = Metrics::new("batch", ep.workers(), ep.recovery_threshold());
        Ok(BatchSession {
            rmfe,
            ep,
            dims,
            unit_width,
            metrics,
        })
    }

    /// Words per accounting unit (defaults to the RMFE base ring width).
    pub fn with_unit_width(mut self, unit_width: usize) -> Self {
        self.unit_width = unit_width;
        self
    }

    pub fn rmfe(&self) -> &RmfeScheme {
        &self.rmfe
    }

    pub fn ep(&self) -> &EpParams {
        &self.ep
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn into_metrics(self) -> Metrics {
        self.metrics
    }

    fn check_batch<A: Borrow<Matrix>, B: Borrow<Matrix>>(&self, a: &[A], b: &[B]) -> Result<()> {
        let n = self.rmfe.n();
        if a.len() != n || b.len() != n {
            return Err(Error::BatchLengthMismatch {
                expected: n,
                a: a.len(),
                b: b.len(),
            });
        }
        let (t, r, s) = self.dims;
        for (x, y) in a.iter().zip(b) {
            let (x, y) = (x.borrow(), y.borrow());
            if x.shape() != (t, r) || y.shape() != (r, s) {
                return Err(Error::ShapeMismatch(format!(
                    "batch pair {:?} x {:?} does not match session dims {:?}",
                    x.shape(),
                    y.shape(),
                    self.dims
                )));
            }
        }
        Ok(())
    }

    /// Packs, runs one coded round, and returns the decoded packed product.
    pub(crate) fn multiply_packed<A: Borrow<Matrix>, B: Borrow<Matrix>>(
        &mut self,
        a: &[A],
        b: &[B],
        cluster: &Cluster,
    ) -> Result<Matrix> {
        self.check_batch(a, b)?;
        let start = Instant::now();
        let pa = self.rmfe.phi_matrix(a)?;
        let pb = self.rmfe.phi_matrix(b)?;
        self.metrics.timings.pack += start.elapsed();
        let out = execute_round(&self.ep, &pa, &pb, cluster, self.unit_width, &mut self.metrics)?;
        self.metrics.multiplications += self.rmfe.n();
        Ok(out)
    }

    /// Returns `A_k B_k` for every pair.
    pub fn batch_multiply<A: Borrow<Matrix>, B: Borrow<Matrix>>(
        &mut self,
        a: &[A],
        b: &[B],
        cluster: &Cluster,
    ) -> Result<Vec<Matrix>> {
        let packed = self.multiply_packed(a, b, cluster)?;
        let start = Instant::now();
        let out = self.rmfe.psi_matrix(&packed)?;
        self.metrics.timings.unpack += start.elapsed();
        Ok(out)
    }

    /// Returns `Σ_k A_k B_k`, unpacking either per slot or through the
    /// summed ψ functional; both give identical words.
    pub fn batch_multiply_sum<A: Borrow<Matrix>, B: Borrow<Matrix>>(
        &mut self,
        a: &[A],
        b: &[B],
        cluster: &Cluster,
        packed_sum: bool,
    ) -> Result<Matrix> {
        let packed = self.multiply_packed(a, b, cluster)?;
        let start = Instant::now();
        let out = if packed_sum {
            self.rmfe.psi_sum_matrix(&packed)?
        } else {
            let parts = self.rmfe.psi_matrix(&packed)?;
            let mut acc = Matrix::zeros(self.rmfe.base(), packed.rows(), packed.cols());
            for p in &parts {
                acc.add_assign(p)?;
            }
            acc
        };
        self.metrics.timings.unpack += start.elapsed();
        Ok(out)
    }
}

pub fn batch_multiply<A: Borrow<Matrix>, B: Borrow<Matrix>>(
    a: &[A],
    b: &[B],
    session: &mut BatchSession,
    cluster: &Cluster,
) -> Result<Vec<Matrix>> {
    session.batch_multiply(a, b, cluster)
}

/// Per-multiplication costs; element counts are exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AmortizedReport {
    pub n: usize,
    #[serde(serialize_with = "ser_ratio")]
    pub upload_base_elements: Ratio<u64>,
    #[serde(serialize_with = "ser_ratio")]
    pub download_base_elements: Ratio<u64>,
    #[serde(serialize_with = "ser_duration")]
    pub encode: Duration,
    #[serde(serialize_with = "ser_duration")]
    pub decode: Duration,
}

fn ser_ratio<S: serde::Serializer>(r: &Ratio<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ser_duration<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

pub fn amortized_report(metrics: &Metrics, n: usize) -> AmortizedReport {
    let n = n.max(1);
    AmortizedReport {
        n,
        upload_base_elements: Ratio::new(metrics.upload_base_elements, n as u64),
        download_base_elements: Ratio::new(metrics.download_base_elements, n as u64),
        encode: metrics.timings.encode / n as u32,
        decode: metrics.timings.decode / n as u32,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ep::Partition;
    use crate::ring::make_ring;
    use crate::rmfe::build_rmfe;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn session(n: usize, m: usize, p: Partition, workers: usize, dims: (usize, usize, usize)) -> BatchSession {
        let z4 = make_ring(2, 2, 1).unwrap();
        let rmfe = build_rmfe(&z4, n, m, false).unwrap();
        let ep = EpParams::new(rmfe.ext(), p, workers).unwrap();
        BatchSession::new(rmfe, ep, dims).unwrap()
    }

    #[test]
    fn scalar_batch_example() {
        let z4 = make_ring(2, 2, 1).unwrap();
        let mut s = session(2, 3, Partition::new(1, 1, 1).unwrap(), 1, (1, 1, 1));
        let a = [Matrix::from_ints(&z4, 1, 1, &[2]).unwrap(), Matrix::from_ints(&z4, 1, 1, &[3]).unwrap()];
        let b = [Matrix::from_ints(&z4, 1, 1, &[3]).unwrap(), Matrix::from_ints(&z4, 1, 1, &[2]).unwrap()];
        let out = s.batch_multiply(&a, &b, &Cluster::new(1, 0)).unwrap();
        assert_eq!(out, vec![Matrix::from_ints(&z4, 1, 1, &[2]).unwrap(); 2]);
    }

    #[test]
    fn identity_batch_returns_b() {
        let z4 = make_ring(2, 2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = session(2, 3, Partition::new(2, 2, 1).unwrap(), 8, (4, 4, 4));
        let a = [Matrix::identity(&z4, 4), Matrix::identity(&z4, 4)];
        let b = [Matrix::random(&z4, 4, 4, &mut rng), Matrix::random(&z4, 4, 4, &mut rng)];
        assert_eq!(s.batch_multiply(&a, &b, &Cluster::new(8, 0)).unwrap(), b.to_vec());
    }

    #[test]
    fn batch_counts_and_amortization() {
        let z4 = make_ring(2, 2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = session(2, 3, Partition::new(2, 2, 1).unwrap(), 8, (4, 4, 4));
        let a: Vec<Matrix> = (0..2).map(|_| Matrix::random(&z4, 4, 4, &mut rng)).collect();
        let b: Vec<Matrix> = (0..2).map(|_| Matrix::random(&z4, 4, 4, &mut rng)).collect();
        let out = s.batch_multiply(&a, &b, &Cluster::new(8, 0)).unwrap();
        for k in 0..2 {
            assert_eq!(out[k], a[k].matmul(&b[k]).unwrap());
        }
        let m = s.metrics();
        assert_eq!(m.upload_base_elements, 384);
        assert_eq!(m.download_base_elements, 48);
        assert_eq!(m.recovery_threshold, 4);
        let rep = amortized_report(m, 2);
        assert_eq!(rep.upload_base_elements, Ratio::from_integer(192));
        assert_eq!(rep.download_base_elements, Ratio::from_integer(24));
        let id = amortized_report(m, 1);
        assert_eq!(id.upload_base_elements, Ratio::from_integer(384));
        assert_eq!(id.encode, m.timings.encode);
    }

    #[test]
    fn batch_length_mismatch() {
        let z4 = make_ring(2, 2, 1).unwrap();
        let mut s = session(2, 3, Partition::new(1, 1, 1).unwrap(), 1, (1, 1, 1));
        let one = [Matrix::identity(&z4, 1)];
        let two = [Matrix::identity(&z4, 1), Matrix::identity(&z4, 1)];
        assert_eq!(
            s.batch_multiply(&one, &two, &Cluster::new(1, 0)).unwrap_err(),
            Error::BatchLengthMismatch { expected: 2, a: 1, b: 2 }
        );
    }
}
