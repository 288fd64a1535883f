use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermoscan::adaptive::{adapt_background, default_max_error, ReferenceAnchor};
use thermoscan::background::{BackgroundModel, DEFAULT_TAU};
use thermoscan::classify::{LinearModel, TrainMeta};
use thermoscan::detect::{detect, nms, DetectMode, Detection, Pipeline};
use thermoscan::eval::standard_corpus;
use thermoscan::hog::HogParams;
use thermoscan::imaging::{iou, BoundingBox};
use thermoscan::par::Execution;
use thermoscan::synth::{generate_scene, PanSpec, PanoramaScene, SceneParams};
use thermoscan::training::{train_on_views, training_views, TrainConfig};

fn anchor_of(scene: &PanoramaScene) -> ReferenceAnchor {
    scene.anchor_spec().anchor(&scene.background()).unwrap()
}

fn max_error(anchor: &ReferenceAnchor) -> f64 {
    let t = anchor.template();
    default_max_error(t.width() * t.height(), DEFAULT_TAU)
}

/// Deterministic model with arbitrary weights; enough to exercise the
/// pipeline without training.
fn arbitrary_model(seed: u64) -> LinearModel {
    let hog = HogParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..hog.descriptor_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    LinearModel::new(weights, 0.5, hog, TrainMeta::default()).unwrap()
}

fn short_scene(seed: u64, pan: PanSpec, frames: usize) -> PanoramaScene {
    let params = SceneParams {
        frames,
        pan,
        ..SceneParams::default()
    };
    generate_scene(seed, &params).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn recovered_shift_matches_the_schedule(
        seed in 0u64..1_000_000,
        steps in prop::collection::vec((-5i32..=5, -5i32..=5), 1..4),
    ) {
        let params = SceneParams {
            frames: 4,
            pan: PanSpec::Deltas(steps),
            noise_sigma: 0.0,
            ..SceneParams::default()
        };
        let scene = generate_scene(seed, &params).unwrap();
        let anchor = anchor_of(&scene);
        let bg = BackgroundModel::new(scene.background());
        for t in 0..scene.len() {
            let r = scene.render_frame(t).unwrap();
            let (_, d) = adapt_background(&r.frame, &anchor, &bg, max_error(&anchor)).unwrap();
            prop_assert_eq!((d.dx, d.dy), r.true_shift);
        }
    }

    #[test]
    fn nms_keeps_no_overlapping_pair(
        raw in prop::collection::vec((0i32..40, 0i32..40, 4u32..30, 4u32..30, -4i32..4), 0..40),
        thresh in 0.1f64..0.9,
    ) {
        let dets: Vec<Detection> = raw
            .iter()
            .map(|&(x, y, w, h, s)| Detection { bbox: BoundingBox::new(x, y, w, h), score: s as f64 })
            .collect();
        let kept = nms(&dets, thresh);
        for (i, a) in kept.iter().enumerate() {
            for b in &kept[i + 1..] {
                prop_assert!(iou(&a.bbox, &b.bbox) < thresh);
            }
        }
        // every dropped detection overlaps a kept one scored at least as high
        for d in &dets {
            if !kept.contains(d) {
                prop_assert!(kept.iter().any(|k| k.score >= d.score && iou(&k.bbox, &d.bbox) >= thresh));
            }
        }
    }
}

#[test]
fn registration_does_not_depend_on_frame_order() {
    let scene = short_scene(5, PanSpec::Deltas(vec![(4, 1), (-9, 3), (6, -2)]), 6);
    let anchor = anchor_of(&scene);
    let bg = BackgroundModel::new(scene.background());
    let adapt = |t: usize| {
        let f = scene.render_frame(t).unwrap().frame;
        adapt_background(&f, &anchor, &bg, max_error(&anchor)).unwrap()
    };
    let forward: Vec<_> = (0..scene.len()).map(adapt).collect();
    let mut backward: Vec<_> = (0..scene.len()).rev().map(adapt).collect();
    backward.reverse();
    assert_eq!(forward, backward);
}

#[test]
fn abs_on_a_still_sequence_matches_bs() {
    let scene = short_scene(11, PanSpec::still(), 5);
    let (seq, _, _) = scene.render_all().unwrap();
    let anchor = anchor_of(&scene);
    let bg = BackgroundModel::new(scene.background());
    let model = arbitrary_model(1);
    let (bs, abs) = (
        DetectMode::new(Pipeline::HogBsStatic),
        DetectMode::new(Pipeline::HogAbsDynamic),
    );
    for frame in seq.frames() {
        let (a, sa) = detect(frame, &model, &bs, Some(&bg), None).unwrap();
        let (b, sb) = detect(frame, &model, &abs, Some(&bg), Some(&anchor)).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            (sa.windows_considered, sa.windows_scored),
            (sb.windows_considered, sb.windows_scored)
        );
        assert!(sb.shift.unwrap().is_zero());
    }
}

#[test]
fn parallel_scoring_matches_sequential() {
    let scene = short_scene(3, PanSpec::Linear { x: 12, y: 4, frames: 3 }, 3);
    let (seq, _, _) = scene.render_all().unwrap();
    let anchor = anchor_of(&scene);
    let bg = BackgroundModel::new(scene.background());
    let model = arbitrary_model(2);
    for pipeline in Pipeline::all() {
        let mut seq_mode = DetectMode::new(pipeline);
        seq_mode.theta = f64::NEG_INFINITY;
        let par_mode = DetectMode {
            execution: Execution::Parallel,
            ..seq_mode.clone()
        };
        for frame in seq.frames() {
            let (a, sa) = detect(frame, &model, &seq_mode, Some(&bg), Some(&anchor)).unwrap();
            let (b, sb) = detect(frame, &model, &par_mode, Some(&bg), Some(&anchor)).unwrap();
            assert!(!a.is_empty());
            assert_eq!(a, b, "{pipeline}");
            assert_eq!(sa.windows_scored, sb.windows_scored);
        }
    }
}

#[test]
fn detection_is_deterministic() {
    let scene = short_scene(4, PanSpec::Linear { x: 8, y: 2, frames: 2 }, 2);
    let frame = scene.render_frame(1).unwrap().frame;
    let anchor = anchor_of(&scene);
    let bg = BackgroundModel::new(scene.background());
    let model = arbitrary_model(3);
    let mut mode = DetectMode::new(Pipeline::HogAbsDynamic);
    mode.theta = f64::NEG_INFINITY;
    let first = detect(&frame, &model, &mode, Some(&bg), Some(&anchor)).unwrap().0;
    for _ in 0..3 {
        assert_eq!(
            detect(&frame, &model, &mode, Some(&bg), Some(&anchor)).unwrap().0,
            first
        );
    }
}

#[test]
fn trained_model_finds_the_one_person_in_a_frame() {
    let params = SceneParams {
        frames: 20,
        ..standard_corpus(true)
    };
    let train = generate_scene(1000, &params).unwrap();
    let (seq, truths, _) = train.render_all().unwrap();
    let bg = BackgroundModel::new(train.background());
    let anchor = anchor_of(&train);
    let cfg = TrainConfig::default();
    let views = training_views(&seq, &truths, Some(&bg), Some(&anchor), &cfg.detect).unwrap();
    let model = train_on_views(&views, &cfg).unwrap();

    let test = generate_scene(7, &params).unwrap();
    let anchor = anchor_of(&test);
    let bg = BackgroundModel::new(test.background());
    let mode = DetectMode::new(Pipeline::HogAbsDynamic);
    for t in [0, 9, 19] {
        let r = test.render_frame(t).unwrap();
        let (dets, _) = detect(&r.frame, &model, &mode, Some(&bg), Some(&anchor)).unwrap();
        assert_eq!(dets.len(), 1, "frame {t}: {dets:?}");
        assert!(
            iou(&dets[0].bbox, &r.truth[0]) >= 0.5,
            "frame {t}: {dets:?} vs {:?}",
            r.truth
        );
    }
}
