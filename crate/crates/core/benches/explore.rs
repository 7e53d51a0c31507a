use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mmx::corpus;
use mmx::explore::{explore, ExploreParams};
use mmx::lang::parse_program;
use mmx::machine::Model;

fn bench_explore(c: &mut Criterion) {
    let mut g = c.benchmark_group("explore");
    g.sample_size(10);
    // No properties, so nothing stops the search before the space is exhausted.
    for (name, src, model, unroll) in
        [("bakery2-sc", corpus::BAKERY, Model::Sc, 2), ("simpson4-pso", corpus::SIMPSON, Model::Pso, 3)]
    {
        let p = parse_program(src).unwrap();
        let mut ps = ExploreParams::new(model);
        ps.unroll = unroll;
        for (label, workers) in [("sequential", Some(1)), ("rayon", None)] {
            let mut ps = ps.clone();
            ps.workers = workers;
            g.bench_with_input(BenchmarkId::new(label, name), &ps, |b, ps| b.iter(|| explore(&p, ps).unwrap()));
        }
    }
    g.finish();
}

criterion_group!(benches, bench_explore);
criterion_main!(benches);
