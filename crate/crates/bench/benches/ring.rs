use cdmm_bench::elements;
use cdmm_core::{make_ring, EvalMode, Evaluator, Interpolator, RingPoly};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn ring_arith(c: &mut Criterion) {
    let mut group = c.benchmark_group("ring_mul");
    for (p, e, d) in [(2, 64, 1), (2, 64, 3), (2, 64, 4), (3, 4, 5)] {
        let ring = make_ring(p, e, d).unwrap();
        let xs = elements(&ring, 2, 1);
        group.bench_function(ring.describe(), |b| b.iter(|| ring.mul(black_box(&xs[0]), black_box(&xs[1]))));
    }
    let z = make_ring(2, 64, 1).unwrap();
    let tower = z.extension(3).unwrap().extension(3).unwrap();
    let xs = elements(&tower, 2, 2);
    group.bench_function(tower.describe(), |b| b.iter(|| tower.mul(black_box(&xs[0]), black_box(&xs[1]))));
    group.finish();

    let ring = make_ring(2, 64, 4).unwrap();
    let x = elements(&ring, 1, 3).remove(0);
    let unit = ring.add(&ring.mul_int(&x, 2), &ring.one());
    c.bench_function("inverse GR(2^64, 4)", |b| b.iter(|| ring.inverse(black_box(&unit)).unwrap()));
}

fn eval_interp(c: &mut Criterion) {
    let ring = make_ring(2, 64, 6).unwrap();
    let mut group = c.benchmark_group("eval_interp");
    for n in [16, 64, 256] {
        let pts = ring.exceptional_set(n).unwrap().into_elements();
        let f = RingPoly::from_coeffs(&ring, &elements(&ring, n, n as u64)).unwrap();
        for mode in [EvalMode::Naive, EvalMode::Fast] {
            let ev = Evaluator::new(&ring, &pts, mode).unwrap();
            let ip = Interpolator::new(&ring, &pts, mode).unwrap();
            let vals = ev.eval(&f).unwrap();
            group.bench_with_input(BenchmarkId::new(format!("eval {mode:?}"), n), &n, |b, _| {
                b.iter(|| ev.eval(black_box(&f)).unwrap())
            });
            group.bench_with_input(BenchmarkId::new(format!("interp {mode:?}"), n), &n, |b, _| {
                b.iter(|| ip.interpolate(black_box(&vals)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, ring_arith, eval_interp);
criterion_main!(benches);
