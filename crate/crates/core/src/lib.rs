//! Coded distributed matrix multiplication over Galois rings.
//!
//! Rings and matrices live in [`ring`] and [`matrix`]; polynomial evaluation
//! and interpolation in [`poly`]; packing maps in [`rmfe`]; the entangled
//! polynomial code in [`ep`]; batch and single-product schemes in [`batch`]
//! and [`single`]; simulation and reporting in [`harness`].

pub mod batch;
pub mod ep;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod poly;
pub mod ring;
pub mod rmfe;
pub mod single;
mod zq;

pub use batch::{amortized_report, batch_multiply, AmortizedReport, BatchSession};
pub use ep::{
    decode, encode, preset, recovery_threshold, worker_multiply, CodeKind, EpParams, Partition, WorkerResponse,
    WorkerTask,
};
pub use error::{Error, Result};
pub use harness::cluster::Cluster;
pub use harness::experiment::{pad_and_multiply, run_experiment, ExperimentConfig, ExperimentOutcome, SchemeChoice};
pub use harness::io::{read_matrix_file, write_matrix_file};
pub use harness::metrics::{Metrics, Timings};
pub use matrix::Matrix;
pub use poly::{EvalMode, Evaluator, Interpolator, MatrixPoly, ProductTree, RingPoly};
pub use ring::{make_ring, ExceptionalSet, GaloisRing, RingElement, RingOp};
pub use rmfe::{build_rmfe, concatenate, RmfePoint, RmfeScheme};
pub use single::{
    cost_profile, default_degree, plain_ep, single_multiply_i, single_multiply_ii, CostProfile, Scheme, SingleConfig,
    SinglePlan,
};
