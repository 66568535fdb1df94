use cdmm_core::{
    make_ring, pad_and_multiply, run_experiment, BatchSession, build_rmfe, Cluster, EpParams, Error,
    ExperimentConfig, GaloisRing, Matrix, Partition, Scheme, SchemeChoice, SingleConfig,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn base(i: usize) -> GaloisRing {
    match i {
        0 => make_ring(2, 2, 1).unwrap(),
        1 => make_ring(2, 8, 1).unwrap(),
        _ => make_ring(2, 64, 1).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn pad_and_multiply_matches_schoolbook(
        scheme in prop::sample::select(vec![Scheme::Plain, Scheme::RmfeI, Scheme::RmfeII]),
        bi in 0usize..3,
        u in 1usize..=2, v in 1usize..=2, w in 1usize..=2,
        t in 1usize..7, r in 1usize..7, s in 1usize..7,
        extra in 0usize..3,
        seed: u64,
    ) {
        let ring = base(bi);
        let part = Partition::new(u, v, w).unwrap();
        let workers = part.recovery_threshold() + extra;
        let cfg = SingleConfig::new(scheme, &ring, workers, part).with_levels(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::random(&ring, t, r, &mut rng);
        let b = Matrix::random(&ring, r, s, &mut rng);
        let (c, _) = pad_and_multiply(&a, &b, &cfg, &Cluster::new(workers, seed)).unwrap();
        prop_assert_eq!(c, a.matmul(&b).unwrap());
    }

    #[test]
    fn stragglers_within_tolerance_never_corrupt(
        drop in prop::collection::btree_set(0usize..10, 0..=6),
        jitter in 0.0f64..10.0,
        seed: u64,
    ) {
        // N = 10, R = 4: up to 6 failures are tolerated
        let mut cfg = ExperimentConfig::new(SchemeChoice::RmfeI, 2, 16, 1, (4, 4, 4), 10).with_partition(2, 2, 1);
        cfg.verify = true;
        cfg.jitter_ms = jitter;
        cfg.seed = seed;
        let ring = make_ring(2, 16, 1).unwrap();
        let sc = SingleConfig::new(Scheme::RmfeI, &ring, 10, Partition::new(2, 2, 1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::random(&ring, 4, 4, &mut rng);
        let b = Matrix::random(&ring, 4, 4, &mut rng);
        let cluster = Cluster::new(10, seed).with_latency(1.0, jitter).unwrap().with_forced_failures(drop.clone());
        let (c, metrics) = pad_and_multiply(&a, &b, &sc, &cluster).unwrap();
        prop_assert_eq!(c, a.matmul(&b).unwrap());
        prop_assert_eq!(metrics.responding_workers.len(), 4);
        prop_assert!(metrics.responding_workers.iter().all(|id| !drop.contains(id)));
        prop_assert!(run_experiment(&cfg).is_ok());
    }

    #[test]
    fn too_many_stragglers_fail_loudly(drop in prop::collection::btree_set(0usize..8, 5..=8), seed: u64) {
        let ring = make_ring(2, 16, 1).unwrap();
        let sc = SingleConfig::new(Scheme::Plain, &ring, 8, Partition::new(2, 2, 1).unwrap());
        let a = Matrix::identity(&ring, 4);
        let cluster = Cluster::new(8, seed).with_forced_failures(drop.clone());
        let err = pad_and_multiply(&a, &a, &sc, &cluster).unwrap_err();
        prop_assert_eq!(err, Error::InsufficientResponses { have: 8 - drop.len(), need: 4 });
    }
}

#[test]
fn batch_correct_over_100_random_batches() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let partitions = [(2, 2, 1), (1, 1, 2), (2, 2, 2)];
    let mut count = 0;
    for round in 0..100 {
        let ring = base(round % 3);
        let (u, v, w) = partitions[(round / 3) % 3];
        let part = Partition::new(u, v, w).unwrap();
        let workers = part.recovery_threshold() + round % 3;
        let rmfe = build_rmfe(&ring, 2, 5, false).unwrap();
        let ep = EpParams::new(rmfe.ext(), part, workers).unwrap();
        let dims = (2 * u, 2 * w, 2 * v);
        let mut session = BatchSession::new(rmfe, ep, dims).unwrap();
        let a: Vec<Matrix> = (0..2).map(|_| Matrix::random(&ring, dims.0, dims.1, &mut rng)).collect();
        let b: Vec<Matrix> = (0..2).map(|_| Matrix::random(&ring, dims.1, dims.2, &mut rng)).collect();
        let out = session.batch_multiply(&a, &b, &Cluster::new(workers, round as u64)).unwrap();
        for k in 0..2 {
            assert_eq!(out[k], a[k].matmul(&b[k]).unwrap());
        }
        count += 1;
    }
    assert_eq!(count, 100);
}

#[test]
fn experiment_examples() {
    let mut plain = ExperimentConfig::new(SchemeChoice::Plain, 2, 64, 1, (64, 64, 64), 8).with_partition(2, 2, 1);
    plain.m = Some(3);
    plain.verify = true;
    let p = run_experiment(&plain).unwrap();
    assert_eq!(p.metrics.recovery_threshold, 4);

    let mut one = plain.clone();
    one.scheme = SchemeChoice::RmfeI;
    let o = run_experiment(&one).unwrap();
    assert_eq!(2 * o.metrics.upload_base_elements, p.metrics.upload_base_elements);

    let mut two = ExperimentConfig::new(SchemeChoice::RmfeII, 2, 64, 1, (16, 16, 16), 16).with_partition(2, 2, 2);
    two.m = Some(4);
    two.levels = 1;
    assert_eq!(run_experiment(&two).unwrap().metrics.recovery_threshold, 9);
}

#[test]
fn file_inputs_feed_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let ring = make_ring(3, 2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = Matrix::random(&ring, 3, 5, &mut rng);
    let b = Matrix::random(&ring, 5, 2, &mut rng);
    let (pa, pb) = (dir.path().join("a.grmx"), dir.path().join("b.grmx"));
    cdmm_core::write_matrix_file(&pa, &a).unwrap();
    cdmm_core::write_matrix_file(&pb, &b).unwrap();
    let mut cfg = ExperimentConfig::new(SchemeChoice::RmfeII, 3, 2, 2, (3, 5, 2), 6).with_partition(2, 1, 1);
    cfg.levels = 1;
    cfg.verify = true;
    cfg.input_a = Some(pa);
    cfg.input_b = Some(pb);
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.outputs, vec![a.matmul(&b).unwrap()]);
    assert_eq!(out.padded_dims, (4, 5, 2));
}
