//! Compare the rayon-backed execution path against the sequential fallback
//! on the three heaviest data-parallel workloads: Monte Carlo coverage
//! trials, the pipeline correlation sweep, and pairwise rank decisions.
//!
//! Built with default features, `indexed_map` runs on rayon; with
//! `--no-default-features` both variants are sequential and should bench
//! identically.

use criterion::{criterion_group, criterion_main, Criterion};

use pulsecal_core::conformal::{conformal_interval, forecast_calibration};
use pulsecal_core::exec::{derive_seed, indexed_map, indexed_map_seq};
use pulsecal_core::forecast::estimate_model;
use pulsecal_core::pipeline::{simulate_pipeline_sigma, CompositionRule, PipelineSimConfig};
use pulsecal_core::ranking::{decide_pair, DeltaConfig};
use pulsecal_core::simgen::{gen_stream, StreamSpec};
use pulsecal_core::types::ScoreSeries;

/// One split-conformal coverage trial: generate a stream, calibrate, and
/// count eval-point coverage at alpha = 0.2.
fn coverage_trial(seed: u64) -> usize {
    let spec = StreamSpec::new("bench", 0.5, 0.003, 0.004, 1200, 0.5, seed).unwrap();
    let stream = gen_stream(&spec);
    let history = stream.segment(0..1000);
    let train_len = 700;
    let model = estimate_model(&history.segment(0..train_len), 0.003).unwrap();
    let cal = forecast_calibration(&history, &model, train_len, 1).unwrap();
    let scores = stream.scores();
    (1000..1200)
        .filter(|&i| {
            let forecast = scores[i - 1];
            conformal_interval(forecast, &cal, 0.2)
                .unwrap()
                .contains(scores[i])
        })
        .count()
}

fn bench_coverage_trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("coverage_trials");
    group.bench_function("parallel", |b| {
        b.iter(|| indexed_map(32, |i| coverage_trial(derive_seed(1, i as u64))))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| indexed_map_seq(32, |i| coverage_trial(derive_seed(1, i as u64))))
    });
    group.finish();
}

fn sweep_point(rho: f64, seed: u64) -> f64 {
    let config =
        PipelineSimConfig::new(0.031, 0.065, rho, 50_000, CompositionRule::Additive, seed)
            .unwrap();
    simulate_pipeline_sigma(&config)
}

fn bench_pipeline_sweep(c: &mut Criterion) {
    let grid: Vec<f64> = (0..15).map(|i| -0.5 + 0.1 * i as f64).collect();
    let mut group = c.benchmark_group("pipeline_sweep");
    group.bench_function("parallel", |b| {
        b.iter(|| indexed_map(grid.len(), |i| sweep_point(grid[i], derive_seed(2, i as u64))))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            indexed_map_seq(grid.len(), |i| sweep_point(grid[i], derive_seed(2, i as u64)))
        })
    });
    group.finish();
}

fn bench_pair_decisions(c: &mut Criterion) {
    let streams: Vec<ScoreSeries> = (0..16)
        .map(|i| {
            let spec = StreamSpec::new(
                format!("agent-{i:02}"),
                0.35 + 0.02 * i as f64,
                0.003,
                0.004,
                600,
                0.35 + 0.02 * i as f64,
                derive_seed(3, i as u64),
            )
            .unwrap();
            gen_stream(&spec)
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 0..streams.len() {
        for j in (i + 1)..streams.len() {
            pairs.push((i, j));
        }
    }
    let config = DeltaConfig::default();

    let mut group = c.benchmark_group("pair_decisions");
    group.bench_function("parallel", |b| {
        b.iter(|| {
            indexed_map(pairs.len(), |k| {
                let (i, j) = pairs[k];
                decide_pair(&streams[i], &streams[j], &config, 0.2).unwrap()
            })
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            indexed_map_seq(pairs.len(), |k| {
                let (i, j) = pairs[k];
                decide_pair(&streams[i], &streams[j], &config, 0.2).unwrap()
            })
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_coverage_trials,
    bench_pipeline_sweep,
    bench_pair_decisions
);
criterion_main!(benches);
