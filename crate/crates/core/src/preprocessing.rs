//! Detection preprocessing: score filter, then greedy BEV NMS.

use crate::config::TrackerConfig;
use crate::geometry::{BoxGeometry, BoxState};

/// One frame of detector output.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFrame {
    pub frame_id: String,
    /// Seconds.
    pub timestamp: f64,
    pub detections: Vec<BoxState>,
}

impl DetectionFrame {
    pub fn new(frame_id: impl Into<String>, timestamp: f64, detections: Vec<BoxState>) -> Self {
        DetectionFrame {
            frame_id: frame_id.into(),
            timestamp,
            detections,
        }
    }

    fn with_detections(&self, detections: Vec<BoxState>) -> Self {
        DetectionFrame {
            frame_id: self.frame_id.clone(),
            timestamp: self.timestamp,
            detections,
        }
    }
}

/// Frames of one sequence, in timestamp order.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub id: String,
    pub frames: Vec<DetectionFrame>,
}

/// Keeps detections with `score >= threshold`, in input order.
pub fn score_filter(frame: &DetectionFrame, threshold: f64) -> DetectionFrame {
    frame.with_detections(frame.detections.iter().filter(|d| d.score >= threshold).cloned().collect())
}

/// Greedy NMS over a frame with cross-category suppression.
pub fn nms(frame: &DetectionFrame, threshold: f64) -> DetectionFrame {
    let keep = nms_indices(&frame.detections, threshold, true);
    frame.with_detections(keep.into_iter().map(|i| frame.detections[i].clone()).collect())
}

/// Indices kept by greedy score-descending NMS, in input order.
///
/// Ties in score keep input order. A box is dropped when its BEV IoU with
/// an already kept box is strictly above `threshold`. With
/// `cross_category = false` only boxes of the same category suppress each other.
pub fn nms_indices(boxes: &[BoxState], threshold: f64, cross_category: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| boxes[b].score.total_cmp(&boxes[a].score));
    let geoms: Vec<BoxGeometry> = boxes.iter().map(BoxGeometry::new).collect();

    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let suppressed = kept.iter().any(|&k| {
            (cross_category || boxes[k].category == boxes[i].category) && geoms[k].iou_bev(&geoms[i]) > threshold
        });
        if !suppressed {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// Score filter followed by NMS, using the thresholds in `cfg`.
pub fn preprocess(frame: &DetectionFrame, cfg: &TrackerConfig) -> DetectionFrame {
    let filtered = score_filter(frame, cfg.score_threshold);
    let keep = nms_indices(&filtered.detections, cfg.nms_threshold, cfg.nms_cross_category);
    frame.with_detections(keep.into_iter().map(|i| filtered.detections[i].clone()).collect())
}
