use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dean_bench::{logistic, quadratic};
use dean_core::baselines::{metropolis_weights, Diging, Extra};
use dean_core::dean::{dean_init, dean_step};
use dean_core::topology::random_connected_graph;
use dean_core::{EdgeWeights, SurrogateFamily};
use std::hint::black_box;

fn bench_dean_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("dean_step");
    for (name, inst) in [("quadratic", quadratic(20, 10, 1)), ("logistic", logistic(20, 10, 1))] {
        let g = SurrogateFamily::identity(inst.graph());
        let alpha = EdgeWeights::uniform(inst.graph(), 0.05).unwrap();
        let state = dean_init(&inst);
        group.bench_function(BenchmarkId::new(name, "N20_n10"), |b| {
            b.iter(|| dean_step(black_box(&state), &inst, &g, &alpha).unwrap())
        });
    }
    group.finish();
}

fn bench_baseline_steps(c: &mut Criterion) {
    let inst = logistic(20, 10, 1);
    let w = metropolis_weights(inst.graph());
    let x0 = dean_init(&inst).x;
    c.bench_function("extra_step/logistic/N20_n10", |b| {
        let mut method = Extra::new(&inst, &w, 0.01).unwrap();
        b.iter(|| method.step(black_box(&x0)).unwrap())
    });
    c.bench_function("diging_step/logistic/N20_n10", |b| {
        let mut method = Diging::new(&inst, &w, 0.01, &x0).unwrap();
        b.iter(|| method.step(black_box(&x0)).unwrap())
    });
}

fn bench_metropolis(c: &mut Criterion) {
    let mut group = c.benchmark_group("metropolis_weights");
    for n in [20, 100] {
        let graph = random_connected_graph(n, 4.0, 7).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &graph, |b, g| b.iter(|| metropolis_weights(black_box(g))));
    }
    group.finish();
}

criterion_group!(benches, bench_dean_step, bench_baseline_steps, bench_metropolis);
criterion_main!(benches);
