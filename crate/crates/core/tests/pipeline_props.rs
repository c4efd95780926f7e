use std::collections::HashMap;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use polymot::config::TrackerConfig;
use polymot::io::{load_detections, write_detections, write_results};
use polymot::lifecycle::{track_scene, track_scenes, ResultRecord, TrackStatus, Tracker};
use polymot::preprocessing::Scene;
use polymot::sim::{generate_scene, mixed_scene_spec, NoiseSpec};

fn noisy_scene(seed: u64, tracks: usize, frames: usize) -> Scene {
    let mut spec = mixed_scene_spec(format!("s{seed}"), tracks, frames, 0.5, 2.0, seed);
    spec.noise = NoiseSpec {
        position_std: 0.3,
        yaw_std: 0.05,
        drop_probability: 0.2,
        clutter_rate: 1.0,
        ..NoiseSpec::none()
    };
    generate_scene(&spec, seed).detections
}

fn record_key(r: &ResultRecord) -> String {
    polymot::io::format_record(r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lifecycle_invariants(seed in 0u64..10_000, hit_min in 0u32..3) {
        let scene = noisy_scene(seed, 4, 25);
        let mut cfg = TrackerConfig::default();
        cfg.hit_min = hit_min;
        let mut tracker = Tracker::for_scene(cfg.clone(), scene.id.clone()).unwrap();
        let mut identity: HashMap<u64, (String, usize)> = HashMap::new();
        let mut last_score: HashMap<u64, (f64, u32)> = HashMap::new();
        let mut max_id = 0;

        for frame in &scene.frames {
            let out = tracker.step(frame).unwrap();
            let live = tracker.trajectories();
            for t in live {
                prop_assert!(t.status != TrackStatus::Dead);
                prop_assert!(t.time_since_update <= cfg.category(&t.category).max_age);
                if !identity.contains_key(&t.id) {
                    prop_assert!(t.id > max_id);
                    max_id = t.id;
                    identity.insert(t.id, (t.category.clone(), t.birth_frame));
                }
                prop_assert_eq!(&identity[&t.id], &(t.category.clone(), t.birth_frame));
                if let Some(&(score, age)) = last_score.get(&t.id) {
                    if t.time_since_update > 0 {
                        prop_assert_eq!(t.time_since_update, age + 1);
                        prop_assert!(t.score < score);
                    }
                }
                last_score.insert(t.id, (t.score, t.time_since_update));
            }

            let mut prev = 0;
            for r in &out {
                prop_assert!(r.tracking_id > prev);
                prev = r.tracking_id;
                let t = live.iter().find(|t| t.id == r.tracking_id);
                prop_assert!(t.is_some_and(|t| t.status == TrackStatus::Active));
            }
        }
    }

    #[test]
    fn detection_order_does_not_matter(seed in 0u64..10_000) {
        let scene = noisy_scene(seed, 4, 15);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shuffled = scene.clone();
        for f in &mut shuffled.frames {
            f.detections.shuffle(&mut rng);
        }
        let cfg = TrackerConfig::default();
        let mut a: Vec<String> = track_scene(&scene, &cfg).unwrap().iter().map(record_key).collect();
        let mut b: Vec<String> = track_scene(&shuffled, &cfg).unwrap().iter().map(record_key).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn result_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scenes: Vec<Scene> = (0..3).map(|s| noisy_scene(s, 5, 20)).collect();
    let input = dir.path().join("dets.jsonl");
    write_detections(&scenes, &input).unwrap();
    let cfg = TrackerConfig::default();
    let mut bytes = Vec::new();
    for (k, parallel) in [false, true, false].into_iter().enumerate() {
        let loaded = load_detections(&input).unwrap();
        let results = track_scenes(&loaded, &cfg, parallel).unwrap();
        let path = dir.path().join(format!("res{k}.jsonl"));
        write_results(results.iter().flatten(), &path).unwrap();
        bytes.push(std::fs::read(&path).unwrap());
    }
    assert!(bytes[0].len() > 100);
    assert_eq!(bytes[0], bytes[1]);
    assert_eq!(bytes[0], bytes[2]);
}

#[test]
fn scenes_have_independent_id_spaces() {
    let cfg = TrackerConfig::default();
    let scenes: Vec<Scene> = (0..2).map(|s| noisy_scene(s, 3, 5)).collect();
    for records in track_scenes(&scenes, &cfg, true).unwrap() {
        assert_eq!(records.iter().map(|r| r.tracking_id).min(), Some(1));
    }
}
