use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use synthaudit::fidelity::similarity_scores;
use synthaudit::generate::{fit_copula, sample_copula};
use synthaudit::harness::{full_audit, AuditConfig, ModelFamily, SyntheticInput};
use synthaudit::impute::{impute, ImputeConfig};
use synthaudit::par;
use synthaudit::privacy::{nearest_distances, PointSet};
use synthaudit::simulate::simulate_cohort;
use synthaudit::survival::{fit_rsf, ForestParams, SurvivalData};

fn pools() -> [(&'static str, usize); 2] {
    [("sequential", 1), ("pool", 0)]
}

fn kernels(c: &mut Criterion) {
    let real = impute(&simulate_cohort(1500, 1).unwrap(), &ImputeConfig::median()).unwrap();
    let synth = sample_copula(&fit_copula(&real, 2).unwrap(), 1500, false).unwrap();
    let data = SurvivalData::from_table(&real, &SurvivalData::encoder(&real, None)).unwrap();
    let points = PointSet::new(data.n_features(), data.x.transpose().as_slice().to_vec());

    let mut group = c.benchmark_group("kernels");
    group.sample_size(10);
    for (label, threads) in pools() {
        group.bench_with_input(BenchmarkId::new("rsf_50_trees", label), &threads, |b, &t| {
            b.iter(|| par::with_threads(t, || fit_rsf(black_box(&data), &ForestParams::default(), 7).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("nearest_neighbours", label), &threads, |b, &t| {
            b.iter(|| par::with_threads(t, || nearest_distances(black_box(&points), &points, true)))
        });
        group.bench_with_input(BenchmarkId::new("similarity", label), &threads, |b, &t| {
            b.iter(|| par::with_threads(t, || similarity_scores(black_box(&real), &synth).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("copula_sample", label), &threads, |b, &t| {
            let model = fit_copula(&real, 3).unwrap();
            b.iter(|| par::with_threads(t, || sample_copula(black_box(&model), 20_000, true).unwrap()))
        });
    }
    group.finish();
}

fn audit(c: &mut Criterion) {
    let real = simulate_cohort(800, 4).unwrap();
    let synth = sample_copula(&fit_copula(&real, 5).unwrap(), 800, true).unwrap();
    let inputs = [SyntheticInput::new("copula", synth)];
    let cfg = AuditConfig {
        families: vec![ModelFamily::Cox],
        ..AuditConfig::default()
    };
    let mut group = c.benchmark_group("audit");
    group.sample_size(10);
    for (label, threads) in pools() {
        group.bench_with_input(BenchmarkId::new("full_audit_cox", label), &threads, |b, &t| {
            b.iter(|| par::with_threads(t, || full_audit(black_box(&real), &inputs, &cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels, audit);
criterion_main!(benches);
