//! Kernel timing for the `bench` subcommand.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::association::{build_cost_matrix, hungarian, Stage};
use crate::config::TrackerConfig;
use crate::geometry::{BoxGeometry, BoxState};
use crate::motion::{init_track, predict, update, MotionModel};
use crate::preprocessing::{preprocess, DetectionFrame};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub kernel: String,
    /// Work items per iteration, e.g. matrix cells.
    pub items: usize,
    pub iterations: usize,
    pub total: Duration,
}

impl BenchRow {
    pub fn per_iteration(&self) -> Duration {
        self.total / self.iterations.max(1) as u32
    }

    pub fn ops_per_sec(&self) -> f64 {
        (self.items * self.iterations) as f64 / self.total.as_secs_f64().max(1e-12)
    }
}

/// Boxes of `category` scattered over a square of side `extent` with
/// random sizes, yaw and scores.
pub fn random_boxes(n: usize, extent: f64, category: &str, seed: u64) -> Vec<BoxState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let c = [rng.gen_range(0.0..extent), rng.gen_range(0.0..extent), rng.gen_range(0.0..2.0)];
            let s = [rng.gen_range(0.5..3.0), rng.gen_range(0.5..6.0), rng.gen_range(0.5..3.0)];
            BoxState::new(c, s, rng.gen_range(-3.14..3.14))
                .with_category(category)
                .with_score(rng.gen_range(0.0..1.0))
        })
        .collect()
}

/// Runs `f` until `budget` has elapsed, at least once.
pub fn time_kernel(kernel: &str, items: usize, budget: Duration, mut f: impl FnMut()) -> BenchRow {
    f();
    let start = Instant::now();
    let mut iterations = 0;
    while iterations == 0 || start.elapsed() < budget {
        f();
        iterations += 1;
    }
    BenchRow {
        kernel: kernel.to_string(),
        items,
        iterations,
        total: start.elapsed(),
    }
}

/// gIoU affinity matrix between `n` detections and `n` predictions.
pub fn affinity_matrix_time(n: usize, seed: u64) -> Duration {
    let cfg = TrackerConfig::default();
    let dets = random_boxes(n, 60.0, "car", seed);
    let trks = random_boxes(n, 60.0, "car", seed ^ 0x5eed);
    let start = Instant::now();
    let m = build_cost_matrix(&dets, &trks, &cfg, Stage::First);
    let t = start.elapsed();
    std::hint::black_box(m);
    t
}

pub fn run(budget: Duration, seed: u64) -> Vec<BenchRow> {
    let cfg = TrackerConfig::default();
    let a = random_boxes(256, 20.0, "car", seed);
    let b = random_boxes(256, 20.0, "car", seed + 1);
    let ga: Vec<BoxGeometry> = a.iter().map(BoxGeometry::new).collect();
    let gb: Vec<BoxGeometry> = b.iter().map(BoxGeometry::new).collect();
    let mut rows = Vec::new();

    rows.push(time_kernel("giou_bev pair", ga.len(), budget, || {
        let s: f64 = ga.iter().zip(&gb).map(|(x, y)| x.giou_bev(y)).sum();
        std::hint::black_box(s);
    }));
    rows.push(time_kernel("giou_3d pair", ga.len(), budget, || {
        let s: f64 = ga.iter().zip(&gb).map(|(x, y)| x.giou_3d(y)).sum();
        std::hint::black_box(s);
    }));

    let dets = random_boxes(100, 60.0, "car", seed + 2);
    let trks = random_boxes(100, 60.0, "car", seed + 3);
    rows.push(time_kernel("affinity 100x100", 100 * 100, budget, || {
        std::hint::black_box(build_cost_matrix(&dets, &trks, &cfg, Stage::First));
    }));
    let m = build_cost_matrix(&dets, &trks, &cfg, Stage::First);
    rows.push(time_kernel("hungarian 100x100", 1, budget, || {
        std::hint::black_box(hungarian(&m));
    }));

    let frame = DetectionFrame::new("0", 0.0, random_boxes(500, 100.0, "car", seed + 4));
    rows.push(time_kernel("nms 500", 500, budget, || {
        std::hint::black_box(preprocess(&frame, &cfg));
    }));
    let mut sf_cfg = cfg.clone();
    sf_cfg.score_threshold = 0.5;
    rows.push(time_kernel("sf+nms 500", 500, budget, || {
        std::hint::black_box(preprocess(&frame, &sf_cfg));
    }));

    let p = cfg.motion_params();
    for model in [MotionModel::Ctra, MotionModel::Bicycle, MotionModel::Ca] {
        let d = dets[0].clone().with_velocity(3.0, 1.0);
        let s0 = init_track(&d, model, &p);
        let name = format!("ekf {} step", model.name());
        rows.push(time_kernel(&name, 1, budget, || {
            let s = predict(&s0, &p).expect("finite");
            std::hint::black_box(update(&s, &d, &p).expect("update"));
        }));
    }
    rows
}

pub fn format_table(rows: &[BenchRow]) -> String {
    let mut out = format!("{:<20} {:>12} {:>14} {:>14}\n", "kernel", "iterations", "per iter (us)", "ops/sec");
    for r in rows {
        out.push_str(&format!(
            "{:<20} {:>12} {:>14.2} {:>14.0}\n",
            r.kernel,
            r.iterations,
            r.per_iteration().as_secs_f64() * 1e6,
            r.ops_per_sec()
        ));
    }
    out
}
