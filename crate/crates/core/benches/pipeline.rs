//! Sequential against rayon-parallel window scoring.
//!
//! Run with `cargo bench -p thermoscan`. Without the `parallel` feature both
//! variants take the sequential path, which makes a useful sanity baseline.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermoscan::background::BackgroundModel;
use thermoscan::classify::{LinearModel, TrainMeta};
use thermoscan::detect::{detect, score_windows, DetectMode, Pipeline};
use thermoscan::eval::standard_corpus;
use thermoscan::hog::{hog_features, HogParams};
use thermoscan::imaging::{BoundingBox, GrayImage};
use thermoscan::par::Execution;
use thermoscan::synth::generate_scene;

fn model() -> LinearModel {
    let hog = HogParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let weights = (0..hog.descriptor_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    LinearModel::new(weights, 0.0, hog, TrainMeta::default()).unwrap()
}

fn bench_hog(c: &mut Criterion) {
    let scene = generate_scene(7, &standard_corpus(false)).unwrap();
    let frame = scene.render_frame(0).unwrap().frame;
    let window = frame.crop(BoundingBox::new(100, 60, 64, 128)).unwrap();
    let params = HogParams::default();
    c.bench_function("hog_features 64x128", |b| {
        b.iter(|| hog_features(&window, &params).unwrap())
    });
}

fn bench_scoring(c: &mut Criterion) {
    let scene = generate_scene(7, &standard_corpus(true)).unwrap();
    let frame = scene.render_frame(25).unwrap().frame;
    let bg = BackgroundModel::new(scene.background());
    let anchor = scene.anchor_spec().anchor(&scene.background()).unwrap();
    let model = model();

    let mut group = c.benchmark_group("score_windows");
    group.sample_size(10);
    for pipeline in [Pipeline::HogOnly, Pipeline::HogAbsDynamic] {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let mode = DetectMode {
                execution: exec,
                ..DetectMode::new(pipeline)
            };
            group.bench_with_input(
                BenchmarkId::new(pipeline.name(), format!("{exec:?}")),
                &mode,
                |b, mode| b.iter(|| score_windows(&frame, &model, mode, Some(&bg), Some(&anchor)).unwrap()),
            );
        }
    }
    group.finish();
}

fn bench_detect_modes(c: &mut Criterion) {
    let scene = generate_scene(7, &standard_corpus(true)).unwrap();
    let frame: GrayImage = scene.render_frame(25).unwrap().frame;
    let bg = BackgroundModel::new(scene.background());
    let anchor = scene.anchor_spec().anchor(&scene.background()).unwrap();
    let model = model();

    let mut group = c.benchmark_group("detect");
    group.sample_size(10);
    for pipeline in Pipeline::all() {
        let mode = DetectMode::new(pipeline);
        group.bench_function(pipeline.name(), |b| {
            b.iter(|| detect(&frame, &model, &mode, Some(&bg), Some(&anchor)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_hog, bench_scoring, bench_detect_modes);
criterion_main!(benches);
