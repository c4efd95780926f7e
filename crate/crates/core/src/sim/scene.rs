//! Seeded synthetic scenes with ground truth.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::geometry::BoxState;
use crate::lifecycle::ResultRecord;
use crate::motion::{bic_transition, ctra_transition, BicState, BicycleGeometry, CtraState};
use crate::preprocessing::{DetectionFrame, Scene};

/// Motion family of a ground-truth trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Template {
    Straight,
    /// Constant turn rate in rad/s.
    ConstantTurn { turn_rate: f64 },
    /// Kinematic bicycle with a fixed steering angle in radians.
    BicycleSteer { steer: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackSpec {
    pub category: String,
    pub template: Template,
    /// Initial box center in the ground plane.
    pub start: [f64; 2],
    pub heading: f64,
    pub speed: f64,
    /// Longitudinal acceleration, ignored by the bicycle template.
    pub acceleration: f64,
    pub size: [f64; 3],
    pub z: f64,
    pub first_frame: usize,
    /// Number of frames the object exists for.
    pub duration: usize,
}

/// Detection corruption. All standard deviations are per component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub position_std: f64,
    pub size_std: f64,
    pub yaw_std: f64,
    pub velocity_std: f64,
    pub drop_probability: f64,
    /// Mean clutter boxes per frame.
    pub clutter_rate: f64,
    pub score_range: (f64, f64),
    pub clutter_score_range: (f64, f64),
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            position_std: 0.0,
            size_std: 0.0,
            yaw_std: 0.0,
            velocity_std: 0.0,
            drop_probability: 0.0,
            clutter_rate: 0.0,
            score_range: (0.6, 1.0),
            clutter_score_range: (0.05, 0.4),
        }
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub id: String,
    pub frames: usize,
    /// Seconds between frames.
    pub dt: f64,
    pub tracks: Vec<TrackSpec>,
    pub noise: NoiseSpec,
    pub bicycle: BicycleGeometry,
    /// Attach planar velocity to detections.
    pub with_velocity: bool,
}

impl SceneSpec {
    pub fn new(id: impl Into<String>, frames: usize, dt: f64) -> Self {
        SceneSpec {
            id: id.into(),
            frames,
            dt,
            tracks: Vec::new(),
            noise: NoiseSpec::none(),
            bicycle: BicycleGeometry {
                wheelbase_ratio: 0.8,
                rear_axle_fraction: 0.5,
            },
            with_velocity: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTrack {
    pub id: u64,
    pub category: String,
    /// `(frame index, box)` for every frame the object exists in.
    pub boxes: Vec<(usize, BoxState)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub spec: SceneSpec,
    pub seed: u64,
    pub ground_truth: Vec<GroundTruthTrack>,
    pub detections: Scene,
    /// Number of clutter boxes injected over the whole scene.
    pub clutter_count: usize,
}

impl SyntheticScene {
    /// Ground truth in the result schema, one record per object per frame.
    pub fn ground_truth_records(&self) -> Vec<ResultRecord> {
        let mut out = Vec::new();
        for frame in 0..self.spec.frames {
            for t in &self.ground_truth {
                if let Some((_, b)) = t.boxes.iter().find(|(f, _)| *f == frame) {
                    let [vx, vy] = b.velocity.unwrap_or([0.0, 0.0]);
                    out.push(ResultRecord {
                        scene_id: self.spec.id.clone(),
                        frame_id: frame_id(frame),
                        timestamp: frame as f64 * self.spec.dt,
                        tracking_id: t.id,
                        category: t.category.clone(),
                        x: b.x,
                        y: b.y,
                        z: b.z,
                        w: b.w,
                        l: b.l,
                        h: b.h,
                        yaw: b.yaw,
                        vx,
                        vy,
                        tracking_score: 1.0,
                    });
                }
            }
        }
        out
    }
}

fn frame_id(i: usize) -> String {
    format!("{i:04}")
}

/// Typical `[w, l, h]` for the nuScenes categories.
pub fn typical_size(category: &str) -> [f64; 3] {
    match category {
        "bicycle" => [0.6, 1.8, 1.3],
        "motorcycle" => [0.8, 2.1, 1.5],
        "bus" => [2.9, 11.0, 3.5],
        "trailer" => [2.9, 12.0, 3.9],
        "truck" => [2.5, 7.0, 3.0],
        "pedestrian" => [0.7, 0.7, 1.8],
        _ => [1.9, 4.6, 1.7],
    }
}

fn rollout(t: &TrackSpec, spec: &SceneSpec) -> Vec<BoxState> {
    let [w, l, h] = t.size;
    let mut out = Vec::with_capacity(t.duration);
    match t.template {
        Template::Straight | Template::ConstantTurn { .. } => {
            let omega = match t.template {
                Template::ConstantTurn { turn_rate } => turn_rate,
                _ => 0.0,
            };
            let mut s = CtraState {
                x: t.start[0],
                y: t.start[1],
                z: t.z,
                v: t.speed,
                a: t.acceleration,
                theta: t.heading,
                omega,
                w,
                l,
                h,
            };
            for _ in 0..t.duration {
                let (sn, cs) = s.theta.sin_cos();
                out.push(BoxState::new([s.x, s.y, s.z], [w, l, h], s.theta).with_velocity(s.v * cs, s.v * sn));
                s = ctra_transition(&s, spec.dt);
            }
        }
        Template::BicycleSteer { steer } => {
            let geo = spec.bicycle;
            let off = geo.center_offset(l);
            let (sn, cs) = t.heading.sin_cos();
            let mut s = BicState {
                x: t.start[0] - off * cs,
                y: t.start[1] - off * sn,
                z: t.z,
                v: t.speed,
                a: 0.0,
                theta: t.heading,
                delta: steer,
                w,
                l,
                h,
            };
            let beta = geo.slip_angle(steer);
            for _ in 0..t.duration {
                let (sn, cs) = s.theta.sin_cos();
                let (se, ce) = (s.theta + beta).sin_cos();
                out.push(
                    BoxState::new([s.x + off * cs, s.y + off * sn, s.z], [w, l, h], s.theta)
                        .with_velocity(s.v * ce, s.v * se),
                );
                s = bic_transition(&s, spec.dt, &geo);
            }
        }
    }
    out
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Generates ground truth with the model transitions, then corrupts it.
/// Deterministic for a given `spec` and `seed`.
pub fn generate_scene(spec: &SceneSpec, seed: u64) -> SyntheticScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ground_truth: Vec<GroundTruthTrack> = spec
        .tracks
        .iter()
        .enumerate()
        .map(|(i, t)| GroundTruthTrack {
            id: i as u64 + 1,
            category: t.category.clone(),
            boxes: rollout(t, spec)
                .into_iter()
                .enumerate()
                .map(|(k, b)| (t.first_frame + k, b.with_category(t.category.clone())))
                .filter(|(f, _)| *f < spec.frames)
                .collect(),
        })
        .collect();

    let n = spec.noise;
    let gauss = |std: f64| Normal::new(0.0, std.max(0.0)).expect("finite std");
    let (pos, size, yaw, vel) = (gauss(n.position_std), gauss(n.size_std), gauss(n.yaw_std), gauss(n.velocity_std));
    let clutter = (n.clutter_rate > 0.0).then(|| Poisson::new(n.clutter_rate).expect("positive rate"));

    // clutter lands anywhere near the ground truth
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for b in ground_truth.iter().flat_map(|t| t.boxes.iter().map(|(_, b)| b)) {
        lo = [lo[0].min(b.x), lo[1].min(b.y)];
        hi = [hi[0].max(b.x), hi[1].max(b.y)];
    }
    if lo[0] > hi[0] {
        (lo, hi) = ([-50.0; 2], [50.0; 2]);
    }
    let categories: Vec<String> = {
        let mut c: Vec<String> = spec.tracks.iter().map(|t| t.category.clone()).collect();
        c.sort();
        c.dedup();
        if c.is_empty() {
            c.push("car".into());
        }
        c
    };

    let mut frames = Vec::with_capacity(spec.frames);
    let mut clutter_count = 0;
    for f in 0..spec.frames {
        let mut dets = Vec::new();
        for t in &ground_truth {
            let Some((_, b)) = t.boxes.iter().find(|(k, _)| *k == f) else {
                continue;
            };
            if n.drop_probability > 0.0 && rng.gen::<f64>() < n.drop_probability {
                continue;
            }
            let mut d = b.clone();
            d.x += pos.sample(&mut rng);
            d.y += pos.sample(&mut rng);
            d.z += pos.sample(&mut rng);
            d.w = (d.w + size.sample(&mut rng)).max(0.1);
            d.l = (d.l + size.sample(&mut rng)).max(0.1);
            d.h = (d.h + size.sample(&mut rng)).max(0.1);
            d.set_yaw(d.yaw + yaw.sample(&mut rng));
            d.velocity = if spec.with_velocity {
                d.velocity.map(|[vx, vy]| [vx + vel.sample(&mut rng), vy + vel.sample(&mut rng)])
            } else {
                None
            };
            d.score = uniform(&mut rng, n.score_range);
            dets.push(d);
        }
        if let Some(p) = &clutter {
            let k = p.sample(&mut rng) as usize;
            clutter_count += k;
            for _ in 0..k {
                let cat = categories[rng.gen_range(0..categories.len())].clone();
                let x = rng.gen_range(lo[0] - 10.0..hi[0] + 10.0);
                let y = rng.gen_range(lo[1] - 10.0..hi[1] + 10.0);
                let heading = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                let mut d = BoxState::new([x, y, 1.0], typical_size(&cat), heading)
                    .with_category(cat)
                    .with_score(uniform(&mut rng, n.clutter_score_range));
                if spec.with_velocity {
                    d = d.with_velocity(0.0, 0.0);
                }
                dets.push(d);
            }
        }
        frames.push(DetectionFrame::new(frame_id(f), f as f64 * spec.dt, dets));
    }

    SyntheticScene {
        spec: spec.clone(),
        seed,
        ground_truth,
        detections: Scene {
            id: spec.id.clone(),
            frames,
        },
        clutter_count,
    }
}

const MIXED: [&str; 7] = ["car", "pedestrian", "bicycle", "truck", "bus", "motorcycle", "trailer"];

fn random_track(category: &str, frames: usize, rng: &mut ChaCha8Rng) -> TrackSpec {
    let (speed, template) = match category {
        "pedestrian" => (rng.gen_range(0.8..1.8), Template::Straight),
        "bicycle" | "motorcycle" => (
            rng.gen_range(3.0..7.0),
            Template::BicycleSteer {
                steer: rng.gen_range(-0.08..0.08),
            },
        ),
        _ => (
            rng.gen_range(3.0..10.0),
            if rng.gen_bool(0.5) {
                Template::Straight
            } else {
                Template::ConstantTurn {
                    turn_rate: rng.gen_range(-0.03..0.03),
                }
            },
        ),
    };
    TrackSpec {
        category: category.into(),
        template,
        start: [rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0)],
        heading: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        speed,
        acceleration: 0.0,
        size: typical_size(category),
        z: 0.5 * typical_size(category)[2],
        first_frame: 0,
        duration: frames,
    }
}

/// `k` mixed-category trajectories that stay at least `min_gap` meters
/// apart (center to center, minus half the longer box lengths) over the scene.
pub fn mixed_scene_spec(id: impl Into<String>, k: usize, frames: usize, dt: f64, min_gap: f64, seed: u64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = SceneSpec::new(id, frames, dt);
    let mut paths: Vec<Vec<BoxState>> = Vec::new();
    let mut attempts = 0;
    while spec.tracks.len() < k {
        attempts += 1;
        assert!(attempts < 100_000, "could not place {k} separated tracks");
        let cat = MIXED[spec.tracks.len() % MIXED.len()];
        let t = random_track(cat, frames, &mut rng);
        let path = rollout(&t, &spec);
        let clear = paths.iter().all(|other| {
            path.iter().zip(other).all(|(a, b)| {
                let reach = 0.5 * (a.l.max(a.w) + b.l.max(b.w));
                (a.x - b.x).hypot(a.y - b.y) - reach >= min_gap
            })
        });
        if clear {
            paths.push(path);
            spec.tracks.push(t);
        }
    }
    spec
}
