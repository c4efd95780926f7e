//! Trajectory birth, confirmation, score decay, death and output selection,
//! and the per-frame tracking loop that ties the pipeline together.

use std::collections::HashSet;

use log::{debug, warn};

use crate::association::associate;
use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::geometry::BoxState;
use crate::motion::{self, MotionParams, TrackState};
use crate::preprocessing::{nms_indices, preprocess, DetectionFrame, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Tentative,
    Active,
    Dead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: u64,
    pub state: TrackState,
    pub category: String,
    pub score: f64,
    pub status: TrackStatus,
    /// Consecutive matched frames since birth.
    pub hits: u32,
    pub time_since_update: u32,
    /// Index of the frame that created the trajectory.
    pub birth_frame: usize,
}

impl Trajectory {
    pub fn is_alive(&self) -> bool {
        self.status != TrackStatus::Dead
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifecycleParams {
    pub hit_min: u32,
    /// Max age for the trajectory's category.
    pub max_age: u32,
    pub punish_rate: f64,
    pub punish_frames: u32,
    pub output_nms_threshold: f64,
}

impl LifecycleParams {
    pub fn for_category(cfg: &TrackerConfig, category: &str) -> Self {
        LifecycleParams {
            hit_min: cfg.hit_min,
            max_age: cfg.category(category).max_age,
            punish_rate: cfg.punish_rate,
            punish_frames: cfg.punish_frames,
            output_nms_threshold: cfg.output_nms_threshold,
        }
    }
}

/// Promotes a tentative trajectory once it has `hit_min` consecutive hits.
pub fn confirm(t: &mut Trajectory, p: &LifecycleParams) {
    if t.status == TrackStatus::Tentative && t.hits >= p.hit_min {
        t.status = TrackStatus::Active;
    }
}

/// Records a matched frame.
pub fn record_hit(t: &mut Trajectory, score: f64, p: &LifecycleParams) {
    t.hits += 1;
    t.time_since_update = 0;
    t.score = score;
    confirm(t, p);
}

/// Records a missed frame: the age goes up by one, then the score decays
/// by `exp(−α·age)`. A tentative trajectory dies on its first miss.
pub fn penalize(t: &mut Trajectory, p: &LifecycleParams) {
    t.time_since_update += 1;
    t.score *= (-p.punish_rate * f64::from(t.time_since_update)).exp();
    if t.status == TrackStatus::Tentative {
        t.status = TrackStatus::Dead;
    }
}

/// Kills a trajectory not updated for more than `max_age` frames.
pub fn reap(t: &mut Trajectory, p: &LifecycleParams) {
    if t.time_since_update > p.max_age {
        t.status = TrackStatus::Dead;
    }
}

/// Indices of the trajectories to report this frame, ascending.
///
/// Active trajectories are reported while their age is at most
/// `punish_frames`; the candidates then go through score-ordered BEV NMS.
pub fn select_output(tracks: &[Trajectory], boxes: &[BoxState], p: &LifecycleParams) -> Vec<usize> {
    let candidates: Vec<usize> = tracks
        .iter()
        .enumerate()
        .filter(|(_, t)| t.status == TrackStatus::Active && t.time_since_update <= p.punish_frames)
        .map(|(i, _)| i)
        .collect();
    let scored: Vec<BoxState> = candidates
        .iter()
        .map(|&i| boxes[i].clone().with_score(tracks[i].score))
        .collect();
    nms_indices(&scored, p.output_nms_threshold, true)
        .into_iter()
        .map(|k| candidates[k])
        .collect()
}

/// One reported box.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub scene_id: String,
    pub frame_id: String,
    pub timestamp: f64,
    pub tracking_id: u64,
    pub category: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub l: f64,
    pub h: f64,
    pub yaw: f64,
    pub vx: f64,
    pub vy: f64,
    pub tracking_score: f64,
}

impl ResultRecord {
    pub fn to_box(&self) -> BoxState {
        BoxState::new([self.x, self.y, self.z], [self.w, self.l, self.h], self.yaw)
            .with_score(self.tracking_score.clamp(0.0, 1.0))
            .with_category(self.category.clone())
            .with_velocity(self.vx, self.vy)
    }
}

/// Tracking state for one sequence.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    motion: MotionParams,
    scene_id: String,
    tracks: Vec<Trajectory>,
    next_id: u64,
    frame_index: usize,
    last_timestamp: Option<f64>,
    warned: HashSet<String>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        Self::for_scene(cfg, "")
    }

    pub fn for_scene(cfg: TrackerConfig, scene_id: impl Into<String>) -> Result<Self> {
        cfg.validate()?;
        let motion = cfg.motion_params();
        Ok(Tracker {
            cfg,
            motion,
            scene_id: scene_id.into(),
            tracks: Vec::new(),
            next_id: 1,
            frame_index: 0,
            last_timestamp: None,
            warned: HashSet::new(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Live trajectories after the last step.
    pub fn trajectories(&self) -> &[Trajectory] {
        &self.tracks
    }

    pub fn frames_processed(&self) -> usize {
        self.frame_index
    }

    /// Processes one frame and returns the records to report for it.
    ///
    /// Frames must arrive with strictly increasing timestamps.
    pub fn step(&mut self, frame: &DetectionFrame) -> Result<Vec<ResultRecord>> {
        if let Some(prev) = self.last_timestamp {
            if !(frame.timestamp > prev) {
                return Err(Error::OutOfOrderFrame {
                    frame_id: frame.frame_id.clone(),
                    timestamp: frame.timestamp,
                    previous: prev,
                });
            }
        }
        if !frame.timestamp.is_finite() {
            return Err(Error::NonFinite("frame timestamp"));
        }
        for d in &frame.detections {
            d.validate()?;
        }
        let dt = match self.last_timestamp {
            Some(prev) if self.cfg.use_timestamps => frame.timestamp - prev,
            _ => self.cfg.frame_interval,
        };
        let params = self.motion.with_dt(dt);

        // predict
        if self.last_timestamp.is_some() {
            for t in &mut self.tracks {
                match motion::predict(&t.state, &params) {
                    Ok(s) => t.state = s,
                    Err(e) => {
                        warn!("track {} dropped: {e}", t.id);
                        t.status = TrackStatus::Dead;
                    }
                }
            }
            self.tracks.retain(Trajectory::is_alive);
        }

        let dets = preprocess(frame, &self.cfg).detections;
        for d in &dets {
            if self.cfg.find_category(&d.category).is_none() && self.warned.insert(d.category.clone()) {
                warn!("category `{}` has no config row; using the fallback profile", d.category);
            }
        }
        let predicted: Vec<BoxState> = self.tracks.iter().map(|t| self.observe(t)).collect();
        let assoc = associate(&dets, &predicted, &self.cfg);
        debug!(
            "frame {}: {} dets, {} tracks, {} matches",
            frame.frame_id,
            dets.len(),
            self.tracks.len(),
            assoc.matches.len()
        );

        for &(di, ti) in &assoc.matches {
            let d = &dets[di];
            let t = &mut self.tracks[ti];
            match motion::update(&t.state, d, &params) {
                Ok(s) => t.state = s,
                Err(e) => warn!("track {} kept its prediction: {e}", t.id),
            }
            let lp = LifecycleParams::for_category(&self.cfg, &t.category);
            record_hit(t, d.score, &lp);
        }

        for &ti in &assoc.unmatched_trajectories {
            let t = &mut self.tracks[ti];
            let lp = LifecycleParams::for_category(&self.cfg, &t.category);
            penalize(t, &lp);
            reap(t, &lp);
        }

        let mut births = assoc.unmatched_detections.clone();
        births.sort_by(|&a, &b| birth_order(&dets[a], &dets[b]));
        for di in births {
            let d = &dets[di];
            let model = self.cfg.category(&d.category).motion;
            let mut t = Trajectory {
                id: self.next_id,
                state: motion::init_track(d, model, &params),
                category: d.category.clone(),
                score: d.score,
                status: TrackStatus::Tentative,
                hits: 0,
                time_since_update: 0,
                birth_frame: self.frame_index,
            };
            self.next_id += 1;
            confirm(&mut t, &LifecycleParams::for_category(&self.cfg, &d.category));
            self.tracks.push(t);
        }
        self.tracks.retain(Trajectory::is_alive);

        let boxes: Vec<BoxState> = self.tracks.iter().map(|t| self.observe(t)).collect();
        let lp = LifecycleParams::for_category(&self.cfg, "");
        let mut out: Vec<ResultRecord> = select_output(&self.tracks, &boxes, &lp)
            .into_iter()
            .map(|i| self.record(frame, &self.tracks[i], &boxes[i]))
            .collect();
        out.sort_by_key(|r| r.tracking_id);

        self.last_timestamp = Some(frame.timestamp);
        self.frame_index += 1;
        Ok(out)
    }

    fn observe(&self, t: &Trajectory) -> BoxState {
        let mut b = motion::measure(&t.state, &self.motion);
        b.category = t.category.clone();
        b.score = t.score.clamp(0.0, 1.0);
        b
    }

    fn record(&self, frame: &DetectionFrame, t: &Trajectory, b: &BoxState) -> ResultRecord {
        let [vx, vy] = b.velocity.unwrap_or([0.0, 0.0]);
        ResultRecord {
            scene_id: self.scene_id.clone(),
            frame_id: frame.frame_id.clone(),
            timestamp: frame.timestamp,
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
            tracking_score: t.score,
        }
    }
}

/// Ids are handed out by descending score, then category and position, so
/// they do not depend on the order detections arrive in within a frame.
fn birth_order(a: &BoxState, b: &BoxState) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.category.cmp(&b.category))
        .then_with(|| a.x.total_cmp(&b.x))
        .then_with(|| a.y.total_cmp(&b.y))
        .then_with(|| a.z.total_cmp(&b.z))
        .then_with(|| a.yaw.total_cmp(&b.yaw))
}

/// Tracks every frame of a scene and returns all records in frame order.
pub fn track_scene(scene: &Scene, cfg: &TrackerConfig) -> Result<Vec<ResultRecord>> {
    let mut tracker = Tracker::for_scene(cfg.clone(), scene.id.clone())?;
    let mut out = Vec::new();
    for frame in &scene.frames {
        out.extend(tracker.step(frame)?);
    }
    Ok(out)
}

/// Tracks scenes independently, optionally on the rayon pool.
/// Results come back in input order either way.
pub fn track_scenes(scenes: &[Scene], cfg: &TrackerConfig, parallel: bool) -> Result<Vec<Vec<ResultRecord>>> {
    if parallel {
        use rayon::prelude::*;
        scenes.par_iter().map(|s| track_scene(s, cfg)).collect()
    } else {
        scenes.iter().map(|s| track_scene(s, cfg)).collect()
    }
}
