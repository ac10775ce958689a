use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lauewalk_core::crystal::{linspace, pendellosung_scan_with, PostSelect};
use lauewalk_core::exec::Execution;
use lauewalk_core::interferometer::contrast_vs_planes_with;
use lauewalk_core::lattice::{propagate, BeamState, NodeParameterSource, SplitterParams};
use std::f64::consts::{FRAC_PI_4, PI};
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn kernel(c: &mut Criterion) {
    let source = NodeParameterSource::uniform(SplitterParams::with_theta(FRAC_PI_4).unwrap());
    let mut group = c.benchmark_group("propagate");
    for planes in [1_000usize, 10_000] {
        group.bench_with_input(BenchmarkId::from_parameter(planes), &planes, |b, &n| {
            b.iter(|| propagate(&BeamState::ray_up(0), black_box(n), &source))
        });
    }
    group.finish();
}

fn pendellosung(c: &mut Criterion) {
    let grid = linspace(0.0, PI, 500);
    let mut group = c.benchmark_group("pendellosung_n50");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| pendellosung_scan_with(exec, 50, PostSelect::ExitNode(25), black_box(&grid), 0.0, 0.0).unwrap())
        });
    }
    group.finish();
}

fn contrast_sweep(c: &mut Criterion) {
    let params = SplitterParams::with_theta(17.0 * PI / 36.0).unwrap();
    let mut group = c.benchmark_group("contrast_sweep_50_150");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| contrast_vs_planes_with(exec, params, 50, 150, 64).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, kernel, pendellosung, contrast_sweep);
criterion_main!(benches);
