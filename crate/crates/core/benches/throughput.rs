//! Sequential vs parallel throughput of the data-parallel kernels.
//! Build with `--no-default-features` to measure the fallback alone.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use spinebend_core::calibration::anchored_model;
use spinebend_core::kinematics::bend_angle_table_with;
use spinebend_core::length::{monte_carlo_with, LengthErrorModel, TRIAL_REFERENCE_CM};
use spinebend_core::planner::{plan_with, sample_targets, workspace_cloud_with, PlanRequest};
use spinebend_core::Execution;

fn modes() -> Vec<Execution> {
    if cfg!(feature = "parallel") {
        vec![Execution::Sequential, Execution::Parallel]
    } else {
        vec![Execution::Sequential]
    }
}

fn label(e: Execution) -> &'static str {
    match e {
        Execution::Sequential => "sequential",
        Execution::Parallel => "parallel",
    }
}

fn length_monte_carlo(c: &mut Criterion) {
    let targets: Vec<f64> = TRIAL_REFERENCE_CM.iter().map(|v| v / 100.0).collect();
    let model = LengthErrorModel::default();
    let mut g = c.benchmark_group("monte_carlo_60k");
    for e in modes() {
        g.bench_function(BenchmarkId::from_parameter(label(e)), |b| {
            b.iter(|| monte_carlo_with(e, black_box(&targets), &model, 0..10_000).unwrap())
        });
    }
    g.finish();
}

fn angle_table(c: &mut Criterion) {
    let model = anchored_model();
    let lengths: Vec<f64> = (0..=60).map(|i| i as f64 * 0.005).collect();
    let pressures: Vec<f64> = (0..=50).map(|i| i as f64 * 5e3).collect();
    let mut g = c.benchmark_group("bend_angle_table_61x51");
    for e in modes() {
        g.bench_function(BenchmarkId::from_parameter(label(e)), |b| {
            b.iter(|| bend_angle_table_with(e, &model, black_box(&lengths), &pressures).unwrap())
        });
    }
    g.finish();
}

fn cloud(c: &mut Criterion) {
    let model = anchored_model();
    let lengths: Vec<f64> = (0..=30).map(|i| i as f64 * 0.01).collect();
    let pressures: Vec<f64> = (0..=25).map(|i| i as f64 * 10e3).collect();
    let phis: Vec<f64> = (0..36).map(|i| i as f64 * std::f64::consts::PI / 18.0).collect();
    let mut g = c.benchmark_group("workspace_cloud_29k");
    for e in modes() {
        g.bench_function(BenchmarkId::from_parameter(label(e)), |b| {
            b.iter(|| workspace_cloud_with(e, &model, black_box(&lengths), &pressures, &phis).unwrap())
        });
    }
    g.finish();
}

fn planning(c: &mut Criterion) {
    let model = anchored_model();
    let targets = sample_targets(&model, 16, 250e3, 3).unwrap();
    let mut g = c.benchmark_group("plan_16_targets");
    g.sample_size(10);
    for e in modes() {
        g.bench_function(BenchmarkId::from_parameter(label(e)), |b| {
            b.iter(|| {
                for t in &targets {
                    let mut req = PlanRequest::new(t.position);
                    req.tolerance = 1e-3;
                    let _ = black_box(plan_with(e, &req, &model));
                }
            })
        });
    }
    g.finish();
}

criterion_group!(benches, length_monte_carlo, angle_table, cloud, planning);
criterion_main!(benches);
