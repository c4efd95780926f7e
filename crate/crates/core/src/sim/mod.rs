//! Synthetic scenes, reference oracles and CLEAR evaluation.

pub mod clear;
pub mod oracle;
pub mod scene;

pub use clear::{evaluate_clear, ClearCounts, ClearReport};
pub use oracle::{brute_assignment_oracle, mc_area_oracle, mc_overlap_oracle, quad_transition_oracle, QuadModel};
pub use scene::{generate_scene, mixed_scene_spec, NoiseSpec, SceneSpec, SyntheticScene, Template, TrackSpec};
