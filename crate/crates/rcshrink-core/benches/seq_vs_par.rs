//! Parallel-vs-sequential comparison for the two embarrassingly parallel
//! entry points: the replicated simulation study and the risk-curve sweep.
//!
//! Run `cargo bench -p rcshrink-core` for the rayon build and
//! `cargo bench -p rcshrink-core --no-default-features` for the sequential
//! baseline; on a multi-core host the `parallel` rows should scale with the
//! pool size while the `sequential` rows stay put.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rcshrink_core::analysis::{
    risk_curves, risk_curves_seq, run_simulation, run_simulation_seq, RiskIntegration,
    RuleDescriptor, SimulationConfig,
};
use rcshrink_core::policies::PolicyKind;
use rcshrink_core::rules::RaisedCosineParams;
use rcshrink_core::signals::DjFunction;

fn simulation_config(replications: usize) -> SimulationConfig {
    SimulationConfig {
        functions: vec![DjFunction::Heavisine],
        sizes: vec![256],
        snrs: vec![3.0],
        rules: vec![
            RuleDescriptor::RaisedCosine,
            RuleDescriptor::Soft(PolicyKind::Universal),
        ],
        replications,
        ..SimulationConfig::default()
    }
}

fn bench_simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    for replications in [4, 16] {
        let config = simulation_config(replications);
        group.bench_with_input(
            BenchmarkId::new("parallel", replications),
            &config,
            |b, config| b.iter(|| run_simulation(config).unwrap()),
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", replications),
            &config,
            |b, config| b.iter(|| run_simulation_seq(config).unwrap()),
        );
    }
    group.finish();
}

fn bench_risk_curves(c: &mut Criterion) {
    let params = RaisedCosineParams::new(0.9, 3.0, 1.0).unwrap();
    let integration = RiskIntegration::default();
    let grid: Vec<f64> = (0..=120).map(|i| -6.0 + 0.1 * i as f64).collect();
    let mut group = c.benchmark_group("risk_curves");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| risk_curves(&params, &grid, &integration).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| risk_curves_seq(&params, &grid, &integration).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_simulation, bench_risk_curves);
criterion_main!(benches);
