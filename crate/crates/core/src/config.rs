//! Tracker configuration.
//!
//! Every key is optional; omitted keys fall back to the shipped profile,
//! which is the nuScenes setup: bicycle model for two-wheelers, CTRA for
//! everything else, gIoU_bev for buses and gIoU_3d for the other six
//! categories. Configs are TOML:
//!
//! ```toml
//! score_threshold = 0.1
//! categories = ["car", "pedestrian"]
//!
//! [process_noise]
//! x = 0.2
//!
//! [[category]]
//! name = "car"
//! motion = "ca"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MetricKind;
use crate::motion::{BicycleGeometry, MeasurementNoise, MotionModel, MotionParams, StateNoise};

/// The seven nuScenes tracking categories, in the order the per-category
/// tuples are written.
pub const DEFAULT_CATEGORIES: [&str; 7] = [
    "bicycle",
    "motorcycle",
    "bus",
    "car",
    "trailer",
    "truck",
    "pedestrian",
];
const FIRST_THRESHOLDS: [f64; 7] = [1.6, 1.4, 1.3, 1.3, 1.3, 1.2, 1.7];
const MAX_AGES: [u32; 7] = [10, 20, 10, 15, 10, 20, 10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Solve the assignment, then drop matches whose cost is not below the threshold.
    PostFilter,
    /// Mark over-threshold cells invalid before solving.
    PreMask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryParams {
    pub name: String,
    pub motion: MotionModel,
    /// Metric for the first association stage.
    pub metric: MetricKind,
    /// Stage-1 cost threshold (θ_fm); matches need cost strictly below it.
    pub first_threshold: f64,
    /// Stage-2 cost threshold (θ_sm).
    pub second_threshold: f64,
    /// Frames without update before a trajectory dies.
    pub max_age: u32,
}

impl CategoryParams {
    /// Stage-2 metric: gIoU_bev, or gIoU_3d when stage 1 already used gIoU_bev.
    pub fn second_metric(&self) -> MetricKind {
        match self.metric {
            MetricKind::GiouBev => MetricKind::Giou3d,
            _ => MetricKind::GiouBev,
        }
    }
}

fn builtin_category(index: usize) -> CategoryParams {
    let name = DEFAULT_CATEGORIES[index];
    CategoryParams {
        name: name.to_string(),
        motion: match name {
            "bicycle" | "motorcycle" => MotionModel::Bicycle,
            _ => MotionModel::Ctra,
        },
        metric: if name == "bus" { MetricKind::GiouBev } else { MetricKind::Giou3d },
        first_threshold: FIRST_THRESHOLDS[index],
        second_threshold: 1.0,
        max_age: MAX_AGES[index],
    }
}

fn builtin(name: &str) -> Option<CategoryParams> {
    DEFAULT_CATEGORIES.iter().position(|&c| c == name).map(builtin_category)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    /// Score filter threshold (θ_SF); detections below it are dropped before NMS.
    pub score_threshold: f64,
    /// BEV IoU above which the lower-scored detection is suppressed (θ_nms).
    pub nms_threshold: f64,
    /// Suppress across categories during detection NMS.
    pub nms_cross_category: bool,
    /// BEV IoU threshold for the NMS over output states.
    pub output_nms_threshold: f64,
    /// Consecutive post-birth hits needed to confirm a tentative trajectory.
    pub hit_min: u32,
    /// Score decay rate for unmatched trajectories (α_pun).
    pub punish_rate: f64,
    /// Missed frames during which a penalized trajectory is still output (N_pun).
    pub punish_frames: u32,
    pub wheelbase_ratio: f64,
    pub rear_axle_fraction: f64,
    pub gamma_geo: f64,
    pub gamma_dis: f64,
    /// Frame interval in seconds when timestamps are not used.
    pub frame_interval: f64,
    /// Take the prediction interval from consecutive frame timestamps.
    pub use_timestamps: bool,
    pub use_velocity: bool,
    pub threshold_mode: ThresholdMode,
    pub process_noise: StateNoise,
    pub measurement_noise: MeasurementNoise,
    pub initial_covariance: StateNoise,
    /// Per-category rows, in category-list order.
    pub categories: Vec<CategoryParams>,
    /// Profile for categories without a row.
    pub fallback: CategoryParams,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            score_threshold: 0.0,
            nms_threshold: 0.08,
            nms_cross_category: true,
            output_nms_threshold: 0.08,
            hit_min: 0,
            punish_rate: 0.05,
            punish_frames: 1,
            wheelbase_ratio: 0.8,
            rear_axle_fraction: 0.5,
            gamma_geo: 1.0,
            gamma_dis: 1.0,
            frame_interval: 0.5,
            use_timestamps: true,
            use_velocity: true,
            threshold_mode: ThresholdMode::PostFilter,
            process_noise: StateNoise::default_process(),
            measurement_noise: MeasurementNoise::default(),
            initial_covariance: StateNoise::default_initial(),
            categories: (0..DEFAULT_CATEGORIES.len()).map(builtin_category).collect(),
            fallback: CategoryParams {
                name: "*".into(),
                motion: MotionModel::Ctra,
                metric: MetricKind::Giou3d,
                first_threshold: 1.3,
                second_threshold: 1.0,
                max_age: 10,
            },
        }
    }
}

impl TrackerConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let cfg = raw.resolve()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(&RawConfig::from_config(self)).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parameters for `name`, or the fallback profile for unlisted categories.
    pub fn category(&self, name: &str) -> &CategoryParams {
        self.find_category(name).unwrap_or(&self.fallback)
    }

    pub fn find_category(&self, name: &str) -> Option<&CategoryParams> {
        self.categories.iter().find(|c| c.name == name)
    }

    pub fn category_mut(&mut self, name: &str) -> Option<&mut CategoryParams> {
        self.categories.iter_mut().find(|c| c.name == name)
    }

    pub fn motion_params(&self) -> MotionParams {
        MotionParams {
            dt: self.frame_interval,
            bicycle: BicycleGeometry {
                wheelbase_ratio: self.wheelbase_ratio,
                rear_axle_fraction: self.rear_axle_fraction,
            },
            process_noise: self.process_noise,
            measurement_noise: self.measurement_noise,
            initial_covariance: self.initial_covariance,
            use_velocity: self.use_velocity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("score_threshold", self.score_threshold)?;
        unit("nms_threshold", self.nms_threshold)?;
        unit("output_nms_threshold", self.output_nms_threshold)?;
        if !(self.punish_rate >= 0.0 && self.punish_rate.is_finite()) {
            return Err(Error::Config(format!("punish_rate must be non-negative, got {}", self.punish_rate)));
        }
        if !(0.4..=0.5).contains(&self.rear_axle_fraction) {
            return Err(Error::Config(format!(
                "rear_axle_fraction must lie in [0.4, 0.5], got {}",
                self.rear_axle_fraction
            )));
        }
        for (name, v) in [("gamma_geo", self.gamma_geo), ("gamma_dis", self.gamma_dis)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        self.motion_params().validate()?;

        let mut seen = std::collections::HashSet::new();
        for c in self.categories.iter().chain(std::iter::once(&self.fallback)) {
            if c.name.is_empty() {
                return Err(Error::Config("category names must be non-empty".into()));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Config(format!("category `{}` listed twice", c.name)));
            }
            for (field, v) in [("first_threshold", c.first_threshold), ("second_threshold", c.second_threshold)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("category `{}`: {field} must be positive, got {v}", c.name)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    score_threshold: Option<f64>,
    nms_threshold: Option<f64>,
    nms_cross_category: Option<bool>,
    output_nms_threshold: Option<f64>,
    hit_min: Option<u32>,
    punish_rate: Option<f64>,
    punish_frames: Option<u32>,
    wheelbase_ratio: Option<f64>,
    rear_axle_fraction: Option<f64>,
    gamma_geo: Option<f64>,
    gamma_dis: Option<f64>,
    frame_interval: Option<f64>,
    use_timestamps: Option<bool>,
    use_velocity: Option<bool>,
    threshold_mode: Option<ThresholdMode>,
    categories: Option<Vec<String>>,
    process_noise: Option<RawStateNoise>,
    measurement_noise: Option<RawMeasurementNoise>,
    initial_covariance: Option<RawStateNoise>,
    fallback: Option<RawCategory>,
    #[serde(default, rename = "category", skip_serializing_if = "Vec::is_empty")]
    rows: Vec<RawCategory>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCategory {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    name: String,
    motion: Option<MotionModel>,
    metric: Option<MetricKind>,
    first_threshold: Option<f64>,
    second_threshold: Option<f64>,
    max_age: Option<u32>,
}

impl RawCategory {
    fn apply(&self, base: &CategoryParams) -> CategoryParams {
        CategoryParams {
            name: base.name.clone(),
            motion: self.motion.unwrap_or(base.motion),
            metric: self.metric.unwrap_or(base.metric),
            first_threshold: self.first_threshold.unwrap_or(base.first_threshold),
            second_threshold: self.second_threshold.unwrap_or(base.second_threshold),
            max_age: self.max_age.unwrap_or(base.max_age),
        }
    }

    fn complete(&self) -> Option<CategoryParams> {
        Some(CategoryParams {
            name: self.name.clone(),
            motion: self.motion?,
            metric: self.metric?,
            first_threshold: self.first_threshold?,
            second_threshold: self.second_threshold?,
            max_age: self.max_age?,
        })
    }

    fn from_params(p: &CategoryParams, with_name: bool) -> Self {
        RawCategory {
            name: if with_name { p.name.clone() } else { String::new() },
            motion: Some(p.motion),
            metric: Some(p.metric),
            first_threshold: Some(p.first_threshold),
            second_threshold: Some(p.second_threshold),
            max_age: Some(p.max_age),
        }
    }
}

macro_rules! partial_noise {
    ($raw:ident, $full:ty, $($field:ident),+) => {
        #[derive(Debug, Default, Clone, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        struct $raw {
            $($field: Option<f64>,)+
        }

        impl $raw {
            fn apply(&self, base: $full) -> $full {
                let mut out = base;
                $(if let Some(v) = self.$field { out.$field = v; })+
                out
            }

            fn from_full(full: &$full) -> Self {
                $raw { $($field: Some(full.$field),)+ }
            }
        }
    };
}

partial_noise!(RawStateNoise, StateNoise, x, y, z, v, a, yaw, turn, w, l, h);
partial_noise!(RawMeasurementNoise, MeasurementNoise, x, y, z, w, l, h, yaw, vx, vy);

impl RawConfig {
    fn resolve(self) -> Result<TrackerConfig> {
        let d = TrackerConfig::default();
        let list: Vec<String> = self
            .categories
            .clone()
            .unwrap_or_else(|| DEFAULT_CATEGORIES.iter().map(|s| s.to_string()).collect());

        for row in &self.rows {
            if row.name.is_empty() {
                return Err(Error::Config("every [[category]] row needs a name".into()));
            }
            if !list.contains(&row.name) {
                return Err(Error::Config(format!(
                    "unknown category `{}`: not in the category list {:?}",
                    row.name, list
                )));
            }
        }

        let mut categories = Vec::with_capacity(list.len());
        for name in &list {
            let row = self.rows.iter().find(|r| &r.name == name);
            let params = match (builtin(name), row) {
                (Some(base), Some(row)) => row.apply(&base),
                (Some(base), None) => base,
                (None, Some(row)) => row.complete().ok_or_else(|| {
                    Error::Config(format!(
                        "category `{name}` has no built-in defaults; its row must set motion, metric, first_threshold, second_threshold and max_age"
                    ))
                })?,
                (None, None) => {
                    return Err(Error::Config(format!("missing per-category row for `{name}`")));
                }
            };
            categories.push(params);
        }

        Ok(TrackerConfig {
            score_threshold: self.score_threshold.unwrap_or(d.score_threshold),
            nms_threshold: self.nms_threshold.unwrap_or(d.nms_threshold),
            nms_cross_category: self.nms_cross_category.unwrap_or(d.nms_cross_category),
            output_nms_threshold: self.output_nms_threshold.unwrap_or(d.output_nms_threshold),
            hit_min: self.hit_min.unwrap_or(d.hit_min),
            punish_rate: self.punish_rate.unwrap_or(d.punish_rate),
            punish_frames: self.punish_frames.unwrap_or(d.punish_frames),
            wheelbase_ratio: self.wheelbase_ratio.unwrap_or(d.wheelbase_ratio),
            rear_axle_fraction: self.rear_axle_fraction.unwrap_or(d.rear_axle_fraction),
            gamma_geo: self.gamma_geo.unwrap_or(d.gamma_geo),
            gamma_dis: self.gamma_dis.unwrap_or(d.gamma_dis),
            frame_interval: self.frame_interval.unwrap_or(d.frame_interval),
            use_timestamps: self.use_timestamps.unwrap_or(d.use_timestamps),
            use_velocity: self.use_velocity.unwrap_or(d.use_velocity),
            threshold_mode: self.threshold_mode.unwrap_or(d.threshold_mode),
            process_noise: self.process_noise.map_or(d.process_noise, |n| n.apply(d.process_noise)),
            measurement_noise: self
                .measurement_noise
                .map_or(d.measurement_noise, |n| n.apply(d.measurement_noise)),
            initial_covariance: self
                .initial_covariance
                .map_or(d.initial_covariance, |n| n.apply(d.initial_covariance)),
            categories,
            fallback: self.fallback.map_or(d.fallback.clone(), |f| f.apply(&d.fallback)),
        })
    }

    fn from_config(c: &TrackerConfig) -> Self {
        RawConfig {
            score_threshold: Some(c.score_threshold),
            nms_threshold: Some(c.nms_threshold),
            nms_cross_category: Some(c.nms_cross_category),
            output_nms_threshold: Some(c.output_nms_threshold),
            hit_min: Some(c.hit_min),
            punish_rate: Some(c.punish_rate),
            punish_frames: Some(c.punish_frames),
            wheelbase_ratio: Some(c.wheelbase_ratio),
            rear_axle_fraction: Some(c.rear_axle_fraction),
            gamma_geo: Some(c.gamma_geo),
            gamma_dis: Some(c.gamma_dis),
            frame_interval: Some(c.frame_interval),
            use_timestamps: Some(c.use_timestamps),
            use_velocity: Some(c.use_velocity),
            threshold_mode: Some(c.threshold_mode),
            categories: Some(c.categories.iter().map(|p| p.name.clone()).collect()),
            process_noise: Some(RawStateNoise::from_full(&c.process_noise)),
            measurement_noise: Some(RawMeasurementNoise::from_full(&c.measurement_noise)),
            initial_covariance: Some(RawStateNoise::from_full(&c.initial_covariance)),
            fallback: Some(RawCategory::from_params(&c.fallback, false)),
            rows: c.categories.iter().map(|p| RawCategory::from_params(p, true)).collect(),
        }
    }
}
