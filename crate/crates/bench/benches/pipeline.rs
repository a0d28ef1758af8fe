use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use loopgroup_theta::cartan::CartanMatrix;
use loopgroup_theta::lattice::ThetaOptions;
use loopgroup_theta::probundle::{build_pro_system, strong_summability};
use loopgroup_theta::repspace::{GroupElement, RepTruncation};
use loopgroup_theta_bench::{basic_module, basic_truncation, root_lattice};

fn theta_enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("theta");
    for n in [4, 8, 12] {
        let l = root_lattice(n, (1, 1));
        let opts = ThetaOptions::with_tolerance(1e-12);
        g.bench_function(format!("A{n}"), |b| b.iter(|| black_box(&l).theta_h0(&opts).unwrap()));
        g.bench_function(format!("A{n} shortest"), |b| b.iter(|| black_box(&l).shortest_vector().unwrap()));
    }
    g.finish();
}

fn freudenthal(c: &mut Criterion) {
    let mut g = c.benchmark_group("freudenthal");
    g.sample_size(10);
    g.bench_function("A1 basic N=30", |b| b.iter(|| basic_module(CartanMatrix::a(1), black_box(30))));
    g.bench_function("A2 basic N=10", |b| b.iter(|| basic_module(CartanMatrix::a(2), black_box(10))));
    g.bench_function("C2 basic N=8", |b| b.iter(|| basic_module(CartanMatrix::c(2), black_box(8))));
    g.finish();
}

fn truncation(c: &mut Criterion) {
    let mut g = c.benchmark_group("truncation");
    g.sample_size(10);
    let ws = basic_module(CartanMatrix::a(1), 6);
    g.bench_function("A1 basic N=6", |b| b.iter(|| RepTruncation::build(black_box(&ws), 6).unwrap()));
    let ws = basic_module(CartanMatrix::a(2), 3);
    g.bench_function("A2 basic N=3", |b| b.iter(|| RepTruncation::build(black_box(&ws), 3).unwrap()));
    g.finish();
}

fn tower(c: &mut Criterion) {
    let mut g = c.benchmark_group("tower");
    g.sample_size(10);
    let rt = basic_truncation(CartanMatrix::a(1), 6);
    let x = GroupElement::parse("h(a1,2);chi(-a1,1);eta(1/2)", rt.affine()).unwrap();
    g.bench_function("pro system A1 N=6", |b| b.iter(|| build_pro_system(&rt, black_box(&x), 6).unwrap()));
    g.bench_function("summability A1 N=12", |b| b.iter(|| strong_summability(&rt, black_box(&x), 0.1, 12, 1e-8).unwrap()));
    g.finish();
}

criterion_group!(benches, theta_enumeration, freudenthal, truncation, tower);
criterion_main!(benches);
