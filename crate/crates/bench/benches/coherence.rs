use std::hint::black_box;

use coherence_bench::{haar_fixture, FIXTURE_SEED};
use coherence_core::distill::{fidelity_distill, one_shot_distillable};
use coherence_core::monotones::theta;
use coherence_core::sampling::haar_record;
use coherence_core::{m_distillation_norm, OperationClass};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn theta_sdp(c: &mut Criterion) {
    let mut group = c.benchmark_group("theta_sdp");
    group.sample_size(20);
    for d in [2, 4, 8] {
        let rho = haar_fixture(d).projector();
        group.bench_with_input(BenchmarkId::from_parameter(d), &rho, |b, rho| {
            b.iter(|| theta(black_box(rho), 1.0).expect("solves"))
        });
    }
    group.finish();
}

fn distillation_sdp(c: &mut Criterion) {
    let mut group = c.benchmark_group("distillation_sdp");
    group.sample_size(10);
    let rho = haar_fixture(4).projector();
    group.bench_function("fidelity_d4_m2", |b| {
        b.iter(|| fidelity_distill(black_box(&rho), 2, OperationClass::Mio).expect("solves"))
    });
    group.bench_function("one_shot_d4_eps0.1", |b| {
        b.iter(|| one_shot_distillable(black_box(&rho), 0.1, OperationClass::Mio).expect("solves"))
    });
    group.finish();
}

fn m_norm(c: &mut Criterion) {
    let mut group = c.benchmark_group("m_distillation_norm");
    for d in [8, 64, 1024] {
        let psi = haar_fixture(d);
        group.bench_with_input(BenchmarkId::from_parameter(d), &psi, |b, psi| {
            b.iter(|| m_distillation_norm(black_box(psi), d / 2).expect("valid m"))
        });
    }
    group.finish();
}

fn haar_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("haar_record");
    for d in [4, 8, 64] {
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            let mut index = 0;
            b.iter(|| {
                index += 1;
                haar_record(d, FIXTURE_SEED, index).expect("valid dimension")
            })
        });
    }
    group.finish();
}

criterion_group!(benches, theta_sdp, distillation_sdp, m_norm, haar_sampling);
criterion_main!(benches);
