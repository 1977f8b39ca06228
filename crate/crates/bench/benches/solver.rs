use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use opftrack_core::lifted::{
    coord_gradient, eval_lagrangian, initial_state, ProblemInstance,
};
use opftrack_core::network::{synthetic_case, ConstantMatrices, SlackMode, SyntheticSpec};
use opftrack_core::solver::{cubic_roots, Engine, SolverConfig};

fn instance(n: usize, n_gens: usize) -> ProblemInstance {
    let model = Arc::new(
        synthetic_case(&SyntheticSpec {
            n,
            n_gens,
            ..SyntheticSpec::default()
        })
        .unwrap(),
    );
    let matrices = Arc::new(ConstantMatrices::build(&model, SlackMode::Embedded).unwrap());
    ProblemInstance::from_static(model, matrices)
}

fn bench_epoch(c: &mut Criterion) {
    let mut group = c.benchmark_group("epoch");
    for &(n, n_gens) in &[(10usize, 4usize), (50, 20), (118, 54)] {
        let inst = instance(n, n_gens);
        let config = SolverConfig::default();
        group.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            let box_set = inst.box_set();
            let mut engine = Engine::new(inst, &config).unwrap();
            let mut state = initial_state(inst);
            engine.refresh_lipschitz(&state, inst);
            b.iter(|| {
                engine.epoch(&mut state, inst, &box_set).unwrap();
            });
        });
    }
    group.finish();
}

fn bench_lagrangian_eval(c: &mut Criterion) {
    let inst = instance(50, 20);
    let state = initial_state(&inst);
    c.bench_function("eval_lagrangian_n50", |b| {
        b.iter(|| eval_lagrangian(black_box(&state), 1.0, &inst).unwrap())
    });
    c.bench_function("coord_gradient_x_n50", |b| {
        b.iter(|| coord_gradient(black_box(&state), 1.0, &inst, 25))
    });
}

fn bench_cubic_roots(c: &mut Criterion) {
    c.bench_function("cubic_roots_three_real", |b| {
        b.iter(|| cubic_roots(black_box(1.0), black_box(-0.3), black_box(-2.1), black_box(0.4)))
    });
    c.bench_function("cubic_roots_one_real", |b| {
        b.iter(|| cubic_roots(black_box(1.0), black_box(0.1), black_box(2.0), black_box(3.0)))
    });
}

criterion_group!(benches, bench_epoch, bench_lagrangian_eval, bench_cubic_roots);
criterion_main!(benches);
