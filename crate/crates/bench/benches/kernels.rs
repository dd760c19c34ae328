use criterion::{black_box, criterion_group, criterion_main, Criterion};

use pinchfold::canard::{find_grazing_roots, find_secondary_canards, CanardSearchOptions};
use pinchfold::continuation::{compute_slow_manifold, ManifoldSide, RegularizedParams, SectionOptions};
use pinchfold::filippov::{integrate, FilippovOptions, PinchedSystem};
use pinchfold::pinch::PinchLevel;
use pinchfold::specfun::{hermite_general, kummer_1f1};
use pinchfold::FoldedNodeParams;

fn reference() -> FoldedNodeParams {
    FoldedNodeParams::new(1.0 / 8.5, 0.05).unwrap()
}

fn specfun(c: &mut Criterion) {
    c.bench_function("kummer_1f1 a=-7.3 b=1/2 x=-20", |b| {
        b.iter(|| kummer_1f1(black_box(-7.3), black_box(0.5), black_box(-20.0)).unwrap())
    });
    c.bench_function("kummer_1f1 a=-7.3 b=3/2 x=40", |b| {
        b.iter(|| kummer_1f1(black_box(-7.3), black_box(1.5), black_box(40.0)).unwrap())
    });
    c.bench_function("hermite_general nu=3.25 x=2.5", |b| {
        b.iter(|| hermite_general(black_box(3.25), black_box(2.5)).unwrap())
    });
}

fn canards(c: &mut Criterion) {
    let p = reference();
    let o = CanardSearchOptions::default();
    c.bench_function("grazing roots mu=1/8.5", |b| b.iter(|| find_grazing_roots(black_box(&p), &o).unwrap()));
    let mut g = c.benchmark_group("assembly");
    g.sample_size(10);
    g.bench_function("secondary canards mu=1/8.5", |b| {
        b.iter(|| find_secondary_canards(black_box(&p), &o, &Default::default()).unwrap())
    });
    g.finish();
}

fn filippov(c: &mut Criterion) {
    let sys = PinchedSystem::new(PinchLevel::Sans, reference());
    let o = FilippovOptions::default();
    c.bench_function("filippov integrate [0, 0.3]", |b| {
        b.iter(|| integrate(&sys, black_box([0.05, -2.0, 0.0]), 0.0, 0.3, &o).unwrap())
    });
}

fn sections(c: &mut Criterion) {
    let rp = RegularizedParams::new(reference(), 50.0).unwrap();
    let o = SectionOptions::default();
    let mut g = c.benchmark_group("slow manifold");
    g.sample_size(10);
    g.bench_function("attracting section k=50", |b| {
        b.iter(|| compute_slow_manifold(black_box(&rp), ManifoldSide::Attracting, &o).unwrap())
    });
    g.finish();
}

criterion_group!(benches, specfun, canards, filippov, sections);
criterion_main!(benches);
