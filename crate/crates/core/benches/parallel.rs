use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fwlab_core::theory::{certify_growth_with, telescope_grid, GrowthKind};
use fwlab_core::{fw_run, par, reference_solution, Execution, FeasibleRegion, Objective, StepRule};
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn telescope(c: &mut Criterion) {
    let ells: Vec<u32> = (1..=10).collect();
    let fracs = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut g = c.benchmark_group("telescope_grid");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(telescope_grid(&ells, 20, 500, &fracs, exec)))
        });
    }
    g.finish();
}

fn certify(c: &mut Criterion) {
    let n = 20;
    let region = FeasibleRegion::lp_ball(2.0, 1.0, n).unwrap();
    let mut y = vec![0.0; n];
    y[0] = 1.5;
    let obj = Objective::quadratic_distance(y).unwrap();
    let reference = reference_solution::<f64>(&obj, &region, 100).unwrap();
    let mut g = c.benchmark_group("certify_growth");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(certify_growth_with(GrowthKind::Strong, &obj, &region, &reference, 1.0, 2000, 7, 8, exec).unwrap()))
        });
    }
    g.finish();
}

fn rules(c: &mut Criterion) {
    let n = 100;
    let region = FeasibleRegion::lp_ball(1.0, 1.0, n).unwrap();
    let y: Vec<f64> = (0..n).map(|i| ((i * 37 % 101) as f64 / 101.0 - 0.5) * 0.05).collect();
    let obj = Objective::quadratic_distance(y).unwrap();
    let reference = reference_solution::<f64>(&obj, &region, 100).unwrap();
    let start = region.default_start();
    let rules: Vec<StepRule> = (1..=8).map(|ell| StepRule::OpenLoop { ell }).collect();
    let mut g = c.benchmark_group("fw_rules");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(par::map_slice(exec, &rules, |r| fw_run(&obj, &region, *r, 5000, &start, &reference, 0).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, telescope, certify, rules);
criterion_main!(benches);
