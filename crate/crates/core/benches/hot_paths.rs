//! Hot paths under the `parallel` feature and without it:
//!
//!     cargo bench -p seisfuse
//!     cargo bench -p seisfuse --no-default-features

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use seisfuse::analysis::{leave_one_out_curve, LabeledEmbedding};
use seisfuse::features::{extract_sonovector, BandTable};
use seisfuse::kernels::{max_min_kernel, DataMatrix};
use seisfuse::pipeline::{prepare_features, synthesize, RunConfig, SyntheticSpec};
use seisfuse::signal::Channel;

const MODE: &str = if cfg!(feature = "parallel") {
    "parallel"
} else {
    "sequential"
};

fn random(m: usize, d: usize, seed: u64) -> DataMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    DataMatrix::from_points(&pts).unwrap()
}

fn kernel_build(c: &mut Criterion) {
    let x = random(300, 1034, 1);
    c.bench_function(&format!("kernel_build_300x1034/{MODE}"), |b| {
        b.iter(|| max_min_kernel(black_box(&x), 2.0).unwrap())
    });
}

fn sonovectors(c: &mut Criterion) {
    let cfg = RunConfig::default();
    let events = synthesize(&SyntheticSpec::discrimination(10, 10, 2), &cfg.band_table).unwrap();
    let w = events[0].channel(Channel::Z).clone();
    c.bench_function("sonovector_6000", |b| {
        b.iter(|| extract_sonovector(black_box(&w), &cfg.stft, &BandTable::default()).unwrap())
    });
    c.bench_function(&format!("prepare_features_20_events/{MODE}"), |b| {
        b.iter(|| prepare_features(black_box(&events), &cfg).unwrap())
    });
}

fn loo(c: &mut Criterion) {
    let x = random(450, 12, 3);
    let labels: Vec<u8> = (0..450).map(|i| (i % 3 == 0) as u8).collect();
    let ids: Vec<String> = (0..450).map(|i| i.to_string()).collect();
    let emb = LabeledEmbedding::new(x.rows.clone(), labels, ids).unwrap();
    let ks: Vec<usize> = (1..=15).collect();
    c.bench_function(&format!("loo_curve_450x12_k15/{MODE}"), |b| {
        b.iter(|| leave_one_out_curve(black_box(&emb), &ks).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = kernel_build, sonovectors, loo
}
criterion_main!(benches);
