use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hjlab::commutation::{subsolution_residual, ZerothOrder};
use hjlab::grid::{MollifierKernel, TorusGrid};
use hjlab::instances;
use hjlab::solver::{solve_discounted, SchemeParams};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("parallel", rayon::ThreadPoolBuilder::new().build().unwrap()),
        ("sequential", rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
    ]
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_discounted");
    group.sample_size(10);
    let cases = [("degenerate_1d_N4096", instances::degenerate(1), 1, 4096), ("degenerate_2d_N64", instances::degenerate(2), 2, 64)];
    for (name, inst, dim, n) in cases {
        let grid = TorusGrid::new(dim, n).unwrap();
        let params = SchemeParams::new(0.05, 0.05);
        for (label, pool) in pools() {
            group.bench_with_input(BenchmarkId::new(label, name), &grid, |b, g| {
                b.iter(|| pool.install(|| solve_discounted(&inst.model, &inst.diffusion, *g, &params).unwrap()))
            });
        }
    }
    group.finish();
}

fn mollified_residual(c: &mut Criterion) {
    let mut group = c.benchmark_group("subsolution_residual");
    group.sample_size(10);
    let inst = instances::degenerate(1);
    let grid = TorusGrid::new(1, 8192).unwrap();
    let r = solve_discounted(&inst.model, &inst.diffusion, grid, &SchemeParams::new(0.05, 0.05)).unwrap();
    let zeroth = ZerothOrder::from_report(&r);
    let kernel = MollifierKernel::new(grid, 1.0 / 32.0).unwrap();
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::new(label, "N8192_eta1/32"), |b| {
            b.iter(|| {
                pool.install(|| subsolution_residual(&r.solution, &inst.model, &inst.diffusion, &zeroth, &kernel).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, solve, mollified_residual);
criterion_main!(benches);
