//! Single-product schemes: plain EP over the extension, EP-RMFE-I
//! (inner-dimension split, batched, summed) and EP-RMFE-II (outer split with
//! one or two RMFE levels).

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::batch::BatchSession;
use crate::ep::{EpParams, Partition};
use crate::error::{Error, Result};
use crate::harness::cluster::{execute_round, Cluster};
use crate::harness::metrics::Metrics;
use crate::matrix::Matrix;
use crate::poly::EvalMode;
use crate::ring::GaloisRing;
use crate::rmfe::{build_rmfe, RmfeScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Plain,
    RmfeI,
    RmfeII,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Plain => "plain",
            Scheme::RmfeI => "rmfe_i",
            Scheme::RmfeII => "rmfe_ii",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SingleConfig {
    pub scheme: Scheme,
    pub base: GaloisRing,
    pub workers: usize,
    pub partition: Partition,
    /// Extension degree; `None` picks the smallest m with q^m >= N, raised
    /// to 2n - 1 for RMFE schemes.
    pub m: Option<usize>,
    /// Split / pack width.
    pub n: usize,
    /// RMFE levels for `RmfeII` (1 or 2).
    pub levels: usize,
    /// Explicit `(m1, m2)` for two-level `RmfeII`.
    pub level_degrees: Option<(usize, usize)>,
    /// EP-RMFE-I: unpack through the summed ψ functional.
    pub packed_sum: bool,
    pub mode: EvalMode,
}

impl SingleConfig {
    pub fn new(scheme: Scheme, base: &GaloisRing, workers: usize, partition: Partition) -> Self {
        SingleConfig {
            scheme,
            base: base.clone(),
            workers,
            partition,
            m: None,
            n: 2,
            levels: 2,
            level_degrees: None,
            packed_sum: false,
            mode: EvalMode::Fast,
        }
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = levels;
        self
    }

    pub fn with_level_degrees(mut self, m1: usize, m2: usize) -> Self {
        self.level_degrees = Some((m1, m2));
        self
    }

    pub fn with_packed_sum(mut self, on: bool) -> Self {
        self.packed_sum = on;
        self
    }
}

/// Smallest m >= 1 with `(p^width)^m >= workers`.
pub fn default_degree(base: &GaloisRing, workers: usize) -> usize {
    let q = base.residue_field_size().map_or(u128::MAX, u128::from);
    let mut m = 1;
    let mut size = q;
    while size < workers as u128 {
        m += 1;
        size = size.saturating_mul(q);
    }
    m
}

/// Predicted communication in base-ring elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CostProfile {
    pub upload: u64,
    pub download: u64,
}

#[derive(Debug, Clone)]
enum Layout {
    Plain { ext: GaloisRing },
    Single { rmfe: RmfeScheme },
    Two { outer: RmfeScheme, inner: RmfeScheme },
}

/// A validated configuration with its rings, RMFEs and code prepared.
#[derive(Debug, Clone)]
pub struct SinglePlan {
    config: SingleConfig,
    layout: Layout,
    ep: EpParams,
    m: usize,
}

fn use_infinity(ring: &GaloisRing, n: usize) -> bool {
    ring.residue_field_size().is_some_and(|q| n as u64 > q)
}

fn ceil_sqrt(m: usize) -> usize {
    let mut k = (m as f64).sqrt() as usize;
    while k * k < m {
        k += 1;
    }
    while k > 1 && (k - 1) * (k - 1) >= m {
        k -= 1;
    }
    k.max(1)
}

impl SinglePlan {
    pub fn new(config: SingleConfig) -> Result<Self> {
        let base = &config.base;
        let n = config.n;
        if n == 0 {
            return Err(Error::InvalidParameter("split width n must be >= 1".into()));
        }
        let auto_m = default_degree(base, config.workers);
        let (layout, m) = match config.scheme {
            Scheme::Plain => {
                let m = config.m.unwrap_or(auto_m);
                (Layout::Plain { ext: base.extension(m)? }, m)
            }
            Scheme::RmfeI => Self::single_level(&config, auto_m)?,
            Scheme::RmfeII if config.levels == 1 => Self::single_level(&config, auto_m)?,
            Scheme::RmfeII if config.levels == 2 => {
                let (m1, m2) = match (config.level_degrees, config.m) {
                    (Some((m1, m2)), Some(m)) if m1 * m2 != m => {
                        return Err(Error::InvalidParameter(format!(
                            "level degrees {m1} x {m2} do not multiply to m = {m}"
                        )))
                    }
                    (Some(d), _) => d,
                    (None, Some(m)) => {
                        let k = ceil_sqrt(m);
                        if k * k != m {
                            return Err(Error::InvalidParameter(format!(
                                "m = {m} is not a perfect square; give explicit level degrees"
                            )));
                        }
                        (k, k)
                    }
                    (None, None) => {
                        let k = ceil_sqrt(auto_m).max(2 * n - 1);
                        (k, k)
                    }
                };
                let inner = build_rmfe(base, n, m1, use_infinity(base, n))?;
                let outer = build_rmfe(inner.ext(), n, m2, use_infinity(inner.ext(), n))?;
                (Layout::Two { outer, inner }, m1 * m2)
            }
            Scheme::RmfeII => {
                return Err(Error::InvalidParameter(format!(
                    "levels must be 1 or 2, got {}",
                    config.levels
                )))
            }
        };
        let ring = match &layout {
            Layout::Plain { ext } => ext.clone(),
            Layout::Single { rmfe } => rmfe.ext().clone(),
            Layout::Two { outer, .. } => outer.ext().clone(),
        };
        let ep = EpParams::new(&ring, config.partition, config.workers)?.with_mode(config.mode);
        Ok(SinglePlan { config, layout, ep, m })
    }

    fn single_level(config: &SingleConfig, auto_m: usize) -> Result<(Layout, usize)> {
        let m = config.m.unwrap_or_else(|| auto_m.max(2 * config.n - 1));
        let rmfe = build_rmfe(&config.base, config.n, m, use_infinity(&config.base, config.n))?;
        Ok((Layout::Single { rmfe }, m))
    }

    pub fn config(&self) -> &SingleConfig {
        &self.config
    }

    pub fn ep(&self) -> &EpParams {
        &self.ep
    }

    /// Total extension degree over the base.
    pub fn m(&self) -> usize {
        self.m
    }

    /// `(m1, m2)` for two-level plans.
    pub fn level_degrees(&self) -> Option<(usize, usize)> {
        match &self.layout {
            Layout::Two { outer, inner } => Some((inner.m(), outer.m())),
            _ => None,
        }
    }

    pub fn recovery_threshold(&self) -> usize {
        self.ep.recovery_threshold()
    }

    fn label(&self) -> &'static str {
        self.config.scheme.label()
    }

    /// Dimensions of the single EP session run for a `t x r` by `r x s` product.
    pub fn session_dims(&self, t: usize, r: usize, s: usize) -> (usize, usize, usize) {
        let n = self.config.n;
        match (&self.layout, self.config.scheme) {
            (Layout::Plain { .. }, _) => (t, r, s),
            (Layout::Single { .. }, Scheme::RmfeI) => (t, r / n, s),
            (Layout::Single { .. }, _) => (t, r, s / n),
            (Layout::Two { .. }, _) => (t / n, r, s / n),
        }
    }

    /// Required multiples of `(t, r, s)`.
    pub fn required_multiples(&self) -> (usize, usize, usize) {
        let Partition { u, v, w } = self.config.partition;
        let n = self.config.n;
        match (&self.layout, self.config.scheme) {
            (Layout::Plain { .. }, _) => (u, w, v),
            (Layout::Single { .. }, Scheme::RmfeI) => (u, n * w, v),
            (Layout::Single { .. }, _) => (u, w, n * v),
            (Layout::Two { .. }, _) => (n * u, w, n * v),
        }
    }

    pub fn check_dims(&self, t: usize, r: usize, s: usize) -> Result<()> {
        let (mt, mr, ms) = self.required_multiples();
        for (what, value, divisor) in [("t", t, mt), ("r", r, mr), ("s", s, ms)] {
            if value % divisor != 0 {
                return Err(Error::IndivisibleDimensions { what, value, divisor });
            }
        }
        Ok(())
    }

    /// Closed-form communication for this plan.
    pub fn cost_profile(&self, t: usize, r: usize, s: usize) -> CostProfile {
        let (t2, r2, s2) = self.session_dims(t, r, s);
        let m = self.m as u64;
        CostProfile {
            upload: self.ep.upload_elements(t2, r2, s2) * m,
            download: self.ep.download_elements(t2, s2) * m,
        }
    }

    /// Computes `A B` through one coded round.
    pub fn multiply(&self, a: &Matrix, b: &Matrix, cluster: &Cluster) -> Result<(Matrix, Metrics)> {
        let base = &self.config.base;
        if a.ring() != base || b.ring() != base {
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
        let (t, r, s) = (a.rows(), a.cols(), b.cols());
        self.check_dims(t, r, s)?;
        let n = self.config.n;
        let unit = base.width();
        let mut metrics = Metrics::new(self.label(), self.ep.workers(), self.recovery_threshold());
        let out = match (&self.layout, self.config.scheme) {
            (Layout::Plain { ext }, _) => {
                let start = Instant::now();
                let (ea, eb) = (a.embed_into(ext)?, b.embed_into(ext)?);
                metrics.timings.pack += start.elapsed();
                let c = execute_round(&self.ep, &ea, &eb, cluster, unit, &mut metrics)?;
                let start = Instant::now();
                let out = c.project_to_base()?;
                metrics.timings.unpack += start.elapsed();
                out
            }
            (Layout::Single { rmfe }, Scheme::RmfeI) => {
                let blocks_a = a.partition(1, n)?.remove(0);
                let blocks_b: Vec<Matrix> = b.partition(n, 1)?.into_iter().flatten().collect();
                let mut session = BatchSession::new(rmfe.clone(), self.ep.clone(), (t, r / n, s))?;
                let out = session.batch_multiply_sum(&blocks_a, &blocks_b, cluster, self.config.packed_sum)?;
                metrics = relabel(session.into_metrics(), self.label());
                out
            }
            (Layout::Single { rmfe }, _) => {
                let blocks_b = b.partition(1, n)?.remove(0);
                let start = Instant::now();
                let pa = rmfe.phi_matrix(&vec![a; n])?;
                let pb = rmfe.phi_matrix(&blocks_b)?;
                metrics.timings.pack += start.elapsed();
                let c = execute_round(&self.ep, &pa, &pb, cluster, unit, &mut metrics)?;
                let start = Instant::now();
                let parts = rmfe.psi_matrix(&c)?;
                let out = Matrix::assemble(&[parts])?;
                metrics.timings.unpack += start.elapsed();
                out
            }
            (Layout::Two { outer, inner }, _) => {
                if outer.base() != inner.ext() {
                    return Err(Error::SchemeMismatch);
                }
                let rows_a: Vec<Matrix> = a.partition(n, 1)?.into_iter().flatten().collect();
                let cols_b = b.partition(1, n)?.remove(0);
                let start = Instant::now();
                let packed_a = rows_a
                    .iter()
                    .map(|ai| inner.phi_matrix(&vec![ai; n]))
                    .collect::<Result<Vec<_>>>()?;
                let packed_b = inner.phi_matrix(&cols_b)?;
                let pack_time = start.elapsed();
                let mut session = BatchSession::new(outer.clone(), self.ep.clone(), (t / n, r, s / n))?
                    .with_unit_width(unit);
                let products = session.batch_multiply(&packed_a, &vec![&packed_b; n], cluster)?;
                let start = Instant::now();
                let grid = products
                    .iter()
                    .map(|p| inner.psi_matrix(p))
                    .collect::<Result<Vec<_>>>()?;
                let out = Matrix::assemble(&grid)?;
                let unpack_time = start.elapsed();
                metrics = relabel(session.into_metrics(), self.label());
                metrics.timings.pack += pack_time;
                metrics.timings.unpack += unpack_time;
                out
            }
        };
        metrics.multiplications = 1;
        Ok((out, metrics))
    }
}

fn relabel(mut m: Metrics, label: &str) -> Metrics {
    m.scheme = label.to_string();
    m
}

/// Closed-form communication of `config` for a `t x r` by `r x s` product.
pub fn cost_profile(config: &SingleConfig, dims: (usize, usize, usize)) -> Result<CostProfile> {
    Ok(SinglePlan::new(config.clone())?.cost_profile(dims.0, dims.1, dims.2))
}

pub fn plain_ep(a: &Matrix, b: &Matrix, config: &SingleConfig, cluster: &Cluster) -> Result<(Matrix, Metrics)> {
    run_as(Scheme::Plain, a, b, config, cluster)
}

pub fn single_multiply_i(a: &Matrix, b: &Matrix, config: &SingleConfig, cluster: &Cluster) -> Result<(Matrix, Metrics)> {
    run_as(Scheme::RmfeI, a, b, config, cluster)
}

pub fn single_multiply_ii(a: &Matrix, b: &Matrix, config: &SingleConfig, cluster: &Cluster) -> Result<(Matrix, Metrics)> {
    run_as(Scheme::RmfeII, a, b, config, cluster)
}

fn run_as(scheme: Scheme, a: &Matrix, b: &Matrix, config: &SingleConfig, cluster: &Cluster) -> Result<(Matrix, Metrics)> {
    let mut config = config.clone();
    config.scheme = scheme;
    SinglePlan::new(config)?.multiply(a, b, cluster)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::make_ring;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z4() -> GaloisRing {
        make_ring(2, 2, 1).unwrap()
    }

    fn cfg(scheme: Scheme, u: usize, v: usize, w: usize, workers: usize) -> SingleConfig {
        SingleConfig::new(scheme, &z4(), workers, Partition::new(u, v, w).unwrap())
    }

    #[test]
    fn default_degree_examples() {
        let z = make_ring(2, 64, 1).unwrap();
        assert_eq!(default_degree(&z, 8), 3);
        assert_eq!(default_degree(&z, 16), 4);
        assert_eq!(default_degree(&z, 9), 4);
        assert_eq!(default_degree(&z, 1), 1);
        assert_eq!(default_degree(&make_ring(3, 2, 2).unwrap(), 10), 2);
    }

    #[test]
    fn plain_examples() {
        let ring = z4();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = Matrix::random(&ring, 4, 4, &mut rng);
        let c = cfg(Scheme::Plain, 2, 2, 1, 8);
        let (out, metrics) = plain_ep(&Matrix::identity(&ring, 4), &b, &c, &Cluster::new(8, 0)).unwrap();
        assert_eq!(out, b);
        assert_eq!((metrics.upload_base_elements, metrics.download_base_elements), (384, 48));
        let one = cfg(Scheme::Plain, 1, 1, 1, 1);
        let x = Matrix::from_ints(&ring, 1, 1, &[3]).unwrap();
        assert_eq!(plain_ep(&x, &x, &one, &Cluster::new(1, 0)).unwrap().0, Matrix::from_ints(&ring, 1, 1, &[1]).unwrap());
    }

    #[test]
    fn rmfe_i_examples() {
        let ring = z4();
        let c = cfg(Scheme::RmfeI, 1, 1, 1, 1);
        let a = Matrix::from_ints(&ring, 1, 2, &[3, 2]).unwrap();
        let b = Matrix::from_ints(&ring, 2, 1, &[3, 3]).unwrap();
        let (out, _) = single_multiply_i(&a, &b, &c, &Cluster::new(1, 0)).unwrap();
        assert_eq!(out, Matrix::from_ints(&ring, 1, 1, &[(9 + 6) % 4]).unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Matrix::random(&ring, 4, 4, &mut rng);
        let b = Matrix::random(&ring, 4, 4, &mut rng);
        let c = cfg(Scheme::RmfeI, 2, 2, 1, 8);
        let (out, m) = single_multiply_i(&a, &b, &c, &Cluster::new(8, 0)).unwrap();
        assert_eq!(out, a.matmul(&b).unwrap());
        assert_eq!((m.upload_base_elements, m.download_base_elements), (192, 48));
        let (sum_out, _) = single_multiply_i(&a, &b, &c.clone().with_packed_sum(true), &Cluster::new(8, 0)).unwrap();
        assert_eq!(sum_out, out);
    }

    #[test]
    fn rmfe_ii_examples() {
        let ring = z4();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Matrix::random(&ring, 4, 4, &mut rng);
        let b = Matrix::random(&ring, 4, 4, &mut rng);
        let expected = a.matmul(&b).unwrap();

        // two (2,3)-levels: composite degree 9
        let c = cfg(Scheme::RmfeII, 1, 1, 1, 1).with_level_degrees(3, 3);
        let plan = SinglePlan::new(c.clone()).unwrap();
        assert_eq!(plan.m(), 9);
        assert_eq!(plan.multiply(&a, &b, &Cluster::new(1, 0)).unwrap().0, expected);
        let (id_out, _) = single_multiply_ii(&Matrix::identity(&ring, 4), &b, &c, &Cluster::new(1, 0)).unwrap();
        assert_eq!(id_out, b);

        let c1 = cfg(Scheme::RmfeII, 2, 2, 1, 8).with_levels(1);
        let (out, m) = single_multiply_ii(&a, &b, &c1, &Cluster::new(8, 0)).unwrap();
        assert_eq!(out, expected);
        let plain = cfg(Scheme::Plain, 2, 2, 1, 8);
        let (_, pm) = plain_ep(&a, &b, &plain, &Cluster::new(8, 0)).unwrap();
        assert_eq!(2 * m.download_base_elements, pm.download_base_elements);

        let n1 = cfg(Scheme::RmfeII, 2, 2, 1, 8).with_levels(1).with_n(1);
        assert_eq!(single_multiply_ii(&a, &b, &n1, &Cluster::new(8, 0)).unwrap().0, expected);
    }

    #[test]
    fn cost_profiles_match_examples() {
        let plain = cfg(Scheme::Plain, 2, 2, 1, 8);
        assert_eq!(cost_profile(&plain, (4, 4, 4)).unwrap(), CostProfile { upload: 384, download: 48 });
        let one = cfg(Scheme::RmfeI, 2, 2, 1, 8);
        assert_eq!(cost_profile(&one, (4, 4, 4)).unwrap(), CostProfile { upload: 192, download: 48 });
        let two = cfg(Scheme::RmfeII, 2, 2, 1, 8).with_levels(1);
        assert_eq!(cost_profile(&two, (4, 4, 4)).unwrap().download, 24);
    }

    #[test]
    fn divisibility_errors() {
        let ring = z4();
        let a = Matrix::zeros(&ring, 4, 3);
        let b = Matrix::zeros(&ring, 3, 4);
        let c = cfg(Scheme::RmfeI, 1, 1, 1, 1);
        assert_eq!(
            single_multiply_i(&a, &b, &c, &Cluster::new(1, 0)).unwrap_err(),
            Error::IndivisibleDimensions { what: "r", value: 3, divisor: 2 }
        );
        let c = cfg(Scheme::RmfeII, 1, 1, 1, 1).with_levels(3);
        assert!(matches!(SinglePlan::new(c), Err(Error::InvalidParameter(_))));
        let c = cfg(Scheme::RmfeII, 1, 1, 1, 1).with_m(6);
        assert!(matches!(SinglePlan::new(c), Err(Error::InvalidParameter(_))));
    }
}
