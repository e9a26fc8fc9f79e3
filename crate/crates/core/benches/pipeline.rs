use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dsmc::features::FeatureSpace;
use dsmc::predictor::{predict_batch_with, PredictionConfig};
use dsmc::reduction::{double_sample_with, transform_full_with, SamplingConfig};
use dsmc::synth::{generate, holdout_split, SynthConfig};
use dsmc::trainer::{train, TrainConfig};
use dsmc::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn corpus() -> (Vec<dsmc::corpus::SparseDoc>, Vec<dsmc::corpus::SparseDoc>) {
    let docs = generate(&SynthConfig::default()).unwrap();
    holdout_split(&docs, 1000, 7).unwrap()
}

fn fit_space(c: &mut Criterion) {
    let (train_docs, _) = corpus();
    let mut group = c.benchmark_group("fit_space");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| FeatureSpace::fit_with(exec, &train_docs).unwrap())
        });
    }
    group.finish();
}

fn reduction(c: &mut Criterion) {
    let (train_docs, _) = corpus();
    let space = FeatureSpace::fit(&train_docs).unwrap();
    let subset = &train_docs[..500];
    let mut group = c.benchmark_group("transform_full_500docs");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| transform_full_with(exec, subset, &space).unwrap())
        });
    }
    group.finish();

    let cfg = SamplingConfig { avg_per_class: 20.0, kappa: 10, seed: 7 };
    let mut group = c.benchmark_group("double_sample");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| double_sample_with(exec, &train_docs, &space, &cfg).unwrap())
        });
    }
    group.finish();
}

fn prediction(c: &mut Criterion) {
    let (train_docs, test_docs) = corpus();
    let space = FeatureSpace::fit(&train_docs).unwrap();
    let cfg = SamplingConfig { avg_per_class: 2.0, kappa: 10, seed: 7 };
    let sample = double_sample_with(Execution::default(), &train_docs, &space, &cfg).unwrap();
    let model = train(&sample.pairs, &TrainConfig::default()).unwrap();
    let mut group = c.benchmark_group("predict_batch_1000docs");
    for q in [10, 50] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, q), &exec, |b, &exec| {
                b.iter(|| predict_batch_with(exec, &test_docs, &model, &space, &PredictionConfig { q }).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = fit_space, reduction, prediction
);
criterion_main!(benches);
