use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use fumot_core::functionals::ForwardModel;
use fumot_core::reconstruct::SigmaProblem;
use fumot_core::{AngularGrid, CoefficientSet, PhaseFunction, PhaseSpace, PhaseSpaceField, SolverOptions, SpatialGrid};
use std::sync::Arc;

fn model(n: usize, m: usize) -> ForwardModel {
    let grid = SpatialGrid::unit_square(n, n).unwrap();
    let ang = AngularGrid::new(m).unwrap();
    let phase = PhaseFunction::henyey_greenstein(0.5, &ang).unwrap();
    let space = PhaseSpace::new(grid, ang);
    let g = space.grid();
    let coeffs = CoefficientSet::from_fns(
        g,
        [&|p| 0.2 + 0.2 * p[1], &|p| 0.2 + 0.2 * p[0], &|p| 0.3 + 0.1 * p[0], &|_| 0.4, &|_| 2.0, &|_| 0.5],
    );
    ForwardModel::new(space, coeffs, phase, SolverOptions::default()).unwrap()
}

fn sweeps(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    for (n, m) in [(32, 16), (64, 32)] {
        let model = model(n, m);
        let sys = model.excitation().unwrap();
        let q = PhaseSpaceField::from_fn(&model.space, |i, k| 1.0 + (i % 7) as f64 * 0.1 + k as f64 * 0.01);
        group.bench_with_input(BenchmarkId::new("transport", format!("{n}x{n}x{m}")), &q, |b, q| {
            b.iter(|| black_box(sys.transport(q)))
        });
        group.bench_with_input(BenchmarkId::new("transpose", format!("{n}x{n}x{m}")), &q, |b, q| {
            b.iter(|| black_box(sys.transport_transpose(q)))
        });
    }
    group.finish();
}

fn solves(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let model = model(32, 16);
    let g = |p: [f64; 2]| 1.0 + p[0];
    group
        .bench_function("internal_data_32x32x16", |b| b.iter(|| black_box(model.internal_data(&g, &|_| 1.0).unwrap())));
    let h = model.internal_data(&g, &|_| 1.0).unwrap().data.h;
    let problem = SigmaProblem::new(model.clone(), Arc::new(g), h, 1e-3).unwrap();
    let x = model.coeffs.sigma_xf.clone();
    group.bench_function("objective_gradient_32x32x16", |b| b.iter(|| black_box(problem.evaluate(&x).unwrap())));
    group.finish();
}

criterion_group!(benches, sweeps, solves);
criterion_main!(benches);
