use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use erpwave::preprocess::design_lowpass;
use erpwave::wavelet::{cascade_evaluate, scale_grid, Cwt, DEFAULT_ITERATIONS};
use erpwave::{load_wavelet, make_trial, Detector, DetectorConfig, TrialSpec};

fn trial(samples: usize) -> erpwave::Signal {
    make_trial(&TrialSpec {
        seed: 5,
        duration_ms: samples as f64 / 512.0 * 1000.0,
        ..TrialSpec::default()
    })
    .unwrap()
    .signal
}

fn cascade(c: &mut Criterion) {
    let spec = load_wavelet("sym5").unwrap();
    c.bench_function("cascade/sym5/10", |b| b.iter(|| cascade_evaluate(black_box(&spec), 10).unwrap()));
}

fn transform(c: &mut Criterion) {
    let t = Cwt::new(&load_wavelet("sym5").unwrap(), DEFAULT_ITERATIONS).unwrap();
    let x = trial(600);
    let mut group = c.benchmark_group("cwt/600");
    for (lo, hi) in [(40.0, 89.0), (1.0, 128.0)] {
        let scales = scale_grid(lo, hi, 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(scales.len()), &scales, |b, s| {
            b.iter(|| t.transform(black_box(&x), s).unwrap())
        });
    }
    group.finish();
}

fn detect(c: &mut Criterion) {
    let config = DetectorConfig {
        scale_band: [40.0, 89.0],
        c_tau: 30.0,
        ..DetectorConfig::default()
    };
    let det = Detector::new(config, 512.0).unwrap();
    let mut group = c.benchmark_group("detect");
    for n in [600usize, 1024] {
        let x = trial(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| b.iter(|| det.detect(black_box(x)).unwrap()));
    }
    group.finish();
}

fn lowpass(c: &mut Criterion) {
    c.bench_function("lowpass/design", |b| b.iter(|| design_lowpass(512.0, 65.0, 25.0).unwrap()));
}

criterion_group!(benches, cascade, transform, detect, lowpass);
criterion_main!(benches);
