//! Oriented box geometry in the ground plane and in 3D.
//!
//! Boxes are upright: the footprint is a rotated rectangle in the x/y plane
//! and the vertical extent is an axis-aligned interval on z. Length runs
//! along the heading, width across it.
//!
//! The three similarity metrics used for association live here:
//! generalized IoU in BEV and in 3D, and a heading-penalized Euclidean
//! distance. Everything in this module is a pure function of its inputs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cross products below this magnitude are treated as collinear.
const COLLINEAR_EPS: f64 = 1e-12;

/// Wraps an angle to (−π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a - 2.0 * PI
    } else {
        a
    }
}

/// Absolute heading difference folded into [0, π].
pub fn heading_difference(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs()
}

/// A detection or a trajectory's observable state.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub l: f64,
    pub h: f64,
    pub yaw: f64,
    pub score: f64,
    pub category: String,
    pub velocity: Option<[f64; 2]>,
}

impl BoxState {
    /// Box centered at `center` with `size = [w, l, h]`. Score defaults to 1.
    pub fn new(center: [f64; 3], size: [f64; 3], yaw: f64) -> Self {
        BoxState {
            x: center[0],
            y: center[1],
            z: center[2],
            w: size[0],
            l: size[1],
            h: size[2],
            yaw: normalize_angle(yaw),
            score: 1.0,
            category: String::new(),
            velocity: None,
        }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = score;
        self
    }

    pub fn with_category(mut self, category: impl Into<String>) -> Self {
        self.category = category.into();
        self
    }

    pub fn with_velocity(mut self, vx: f64, vy: f64) -> Self {
        self.velocity = Some([vx, vy]);
        self
    }

    pub fn center(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn size(&self) -> [f64; 3] {
        [self.w, self.l, self.h]
    }

    pub fn set_yaw(&mut self, yaw: f64) {
        self.yaw = normalize_angle(yaw);
    }

    /// Checks the box invariants: positive finite sizes, finite pose, score in [0, 1].
    pub fn validate(&self) -> Result<()> {
        let finite = [self.x, self.y, self.z, self.w, self.l, self.h, self.yaw, self.score]
            .iter()
            .all(|v| v.is_finite())
            && self.velocity.map_or(true, |v| v.iter().all(|c| c.is_finite()));
        if !finite {
            return Err(Error::NonFinite("box state"));
        }
        if !(self.w > 0.0 && self.l > 0.0 && self.h > 0.0) {
            return Err(Error::Config(format!(
                "box size must be positive, got w={} l={} h={}",
                self.w, self.l, self.h
            )));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::Config(format!("box score {} outside [0, 1]", self.score)));
        }
        Ok(())
    }

    pub fn bev_area(&self) -> f64 {
        self.w * self.l
    }

    pub fn volume(&self) -> f64 {
        self.w * self.l * self.h
    }

    fn z_interval(&self) -> (f64, f64) {
        (self.z - 0.5 * self.h, self.z + 0.5 * self.h)
    }
}

/// Convex polygon in the ground plane, vertices counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct BevPolygon {
    vertices: Vec<[f64; 2]>,
}

impl BevPolygon {
    /// Builds a polygon from CCW vertices. Returns `None` for fewer than three.
    pub fn new(vertices: Vec<[f64; 2]>) -> Option<Self> {
        (vertices.len() >= 3).then_some(BevPolygon { vertices })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        shoelace(&self.vertices).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    #[serde(rename = "giou_3d")]
    Giou3d,
    #[serde(rename = "giou_bev")]
    GiouBev,
    DEucl,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::Giou3d, MetricKind::GiouBev, MetricKind::DEucl];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Giou3d => "giou_3d",
            MetricKind::GiouBev => "giou_bev",
            MetricKind::DEucl => "d_eucl",
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric `{s}`")))
    }
}

fn footprint_corners(b: &BoxState) -> [[f64; 2]; 4] {
    let (s, c) = b.yaw.sin_cos();
    let hl = 0.5 * b.l;
    let hw = 0.5 * b.w;
    let local = [[hl, -hw], [hl, hw], [-hl, hw], [-hl, -hw]];
    local.map(|[u, v]| [b.x + c * u - s * v, b.y + s * u + c * v])
}

/// Rotated-rectangle footprint of `b`, counter-clockwise.
pub fn box_to_bev_polygon(b: &BoxState) -> BevPolygon {
    BevPolygon {
        vertices: footprint_corners(b).to_vec(),
    }
}

fn shoelace(pts: &[[f64; 2]]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let [x0, y0] = pts[i];
        let [x1, y1] = pts[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    0.5 * acc
}

#[inline]
fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Sutherland–Hodgman clip of `subject` against every edge of the CCW convex `clip`.
fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut output: Vec<[f64; 2]> = subject.to_vec();
    let mut input = Vec::with_capacity(subject.len() + clip.len());
    let n = clip.len();
    for i in 0..n {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        std::mem::swap(&mut input, &mut output);
        output.clear();
        let m = input.len();
        for j in 0..m {
            let p = input[j];
            let q = input[(j + 1) % m];
            let dp = cross(a, b, p);
            let dq = cross(a, b, q);
            let p_in = dp >= 0.0;
            let q_in = dq >= 0.0;
            if p_in {
                output.push(p);
            }
            if p_in != q_in {
                let t = dp / (dp - dq);
                output.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
    }
    output
}

fn polygon_intersection_area(p: &[[f64; 2]], q: &[[f64; 2]]) -> f64 {
    let clipped = clip_convex(p, q);
    shoelace(&clipped).abs()
}

/// One monotone chain. Of three collinear points only the two outer ones
/// are kept, whichever order they arrive in, so rounding noise in the sort
/// order cannot drop an extreme point.
fn half_hull(points: impl Iterator<Item = [f64; 2]>) -> Vec<[f64; 2]> {
    let mut h: Vec<[f64; 2]> = Vec::with_capacity(8);
    'points: for p in points {
        while h.len() >= 2 {
            let (o, a) = (h[h.len() - 2], h[h.len() - 1]);
            let c = cross(o, a, p);
            if c > COLLINEAR_EPS {
                break;
            }
            if c < -COLLINEAR_EPS {
                h.pop();
                continue;
            }
            let oa = [a[0] - o[0], a[1] - o[1]];
            let op = [p[0] - o[0], p[1] - o[1]];
            let along = op[0] * oa[0] + op[1] * oa[1];
            if along < 0.0 {
                h.remove(h.len() - 2);
            } else if op[0] * op[0] + op[1] * op[1] <= oa[0] * oa[0] + oa[1] * oa[1] {
                continue 'points;
            } else {
                h.pop();
            }
        }
        h.push(p);
    }
    h
}

/// Monotone-chain hull, CCW, collinear points dropped.
fn monotone_chain(points: &mut [[f64; 2]]) -> Vec<[f64; 2]> {
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    if points.len() < 3 {
        return points.to_vec();
    }
    let mut hull = half_hull(points.iter().copied());
    hull.extend(half_hull(points.iter().rev().copied()));
    hull.dedup();
    while hull.len() > 1 && hull.first() == hull.last() {
        hull.pop();
    }
    hull
}

fn hull_area_of(p: &[[f64; 2]], q: &[[f64; 2]]) -> f64 {
    let mut pts: Vec<[f64; 2]> = p.iter().chain(q.iter()).copied().collect();
    let hull = monotone_chain(&mut pts);
    shoelace(&hull).abs()
}

/// Area of the intersection of two convex polygons; 0 when disjoint or touching.
pub fn intersection_area(p: &BevPolygon, q: &BevPolygon) -> f64 {
    polygon_intersection_area(&p.vertices, &q.vertices)
}

/// Area of the convex hull of both vertex sets.
pub fn convex_hull_area(p: &BevPolygon, q: &BevPolygon) -> f64 {
    hull_area_of(&p.vertices, &q.vertices)
}

/// Precomputed footprint and vertical extent, reused across a cost matrix row.
#[derive(Debug, Clone)]
pub struct BoxGeometry {
    corners: [[f64; 2]; 4],
    center: [f64; 2],
    radius: f64,
    area: f64,
    z_lo: f64,
    z_hi: f64,
}

impl BoxGeometry {
    pub fn new(b: &BoxState) -> Self {
        let (z_lo, z_hi) = b.z_interval();
        BoxGeometry {
            corners: footprint_corners(b),
            center: [b.x, b.y],
            radius: 0.5 * b.w.hypot(b.l),
            area: b.bev_area(),
            z_lo,
            z_hi,
        }
    }

    fn coincides(&self, other: &BoxGeometry) -> bool {
        self.corners == other.corners && self.z_lo == other.z_lo && self.z_hi == other.z_hi
    }

    fn height(&self) -> f64 {
        self.z_hi - self.z_lo
    }

    fn intersection_area(&self, other: &BoxGeometry) -> f64 {
        let d = (self.center[0] - other.center[0]).hypot(self.center[1] - other.center[1]);
        if d >= self.radius + other.radius {
            return 0.0;
        }
        polygon_intersection_area(&self.corners, &other.corners)
    }

    fn hull_area(&self, other: &BoxGeometry) -> f64 {
        let mut pts = [[0.0; 2]; 8];
        pts[..4].copy_from_slice(&self.corners);
        pts[4..].copy_from_slice(&other.corners);
        shoelace(&monotone_chain(&mut pts)).abs()
    }

    fn z_overlap(&self, other: &BoxGeometry) -> f64 {
        (self.z_hi.min(other.z_hi) - self.z_lo.max(other.z_lo)).max(0.0)
    }

    fn z_span(&self, other: &BoxGeometry) -> f64 {
        self.z_hi.max(other.z_hi) - self.z_lo.min(other.z_lo)
    }

    pub fn iou_bev(&self, other: &BoxGeometry) -> f64 {
        if self.coincides(other) {
            return 1.0;
        }
        let inter = self.intersection_area(other);
        let union = self.area + other.area - inter;
        (inter / union).clamp(0.0, 1.0)
    }

    pub fn iou_3d(&self, other: &BoxGeometry) -> f64 {
        if self.coincides(other) {
            return 1.0;
        }
        let inter = self.intersection_area(other) * self.z_overlap(other);
        let union = self.area * self.height() + other.area * other.height() - inter;
        (inter / union).clamp(0.0, 1.0)
    }

    pub fn giou_bev(&self, other: &BoxGeometry) -> f64 {
        if self.coincides(other) {
            return 1.0;
        }
        let inter = self.intersection_area(other);
        let union = self.area + other.area - inter;
        let hull = self.hull_area(other).max(union);
        inter / union + union / hull - 1.0
    }

    pub fn giou_3d(&self, other: &BoxGeometry) -> f64 {
        if self.coincides(other) {
            return 1.0;
        }
        let inter = self.intersection_area(other) * self.z_overlap(other);
        let union = self.area * self.height() + other.area * other.height() - inter;
        let hull = (self.hull_area(other) * self.z_span(other)).max(union);
        inter / union + union / hull - 1.0
    }
}

/// Intersection over union of the BEV footprints.
pub fn iou_bev(a: &BoxState, b: &BoxState) -> f64 {
    BoxGeometry::new(a).iou_bev(&BoxGeometry::new(b))
}

/// Intersection over union of the upright 3D boxes.
pub fn iou_3d(a: &BoxState, b: &BoxState) -> f64 {
    BoxGeometry::new(a).iou_3d(&BoxGeometry::new(b))
}

/// Generalized IoU in BEV: IoU + union / hull − 1.
pub fn giou_bev(a: &BoxState, b: &BoxState) -> f64 {
    BoxGeometry::new(a).giou_bev(&BoxGeometry::new(b))
}

/// Generalized IoU in 3D. The enclosing volume is the BEV hull extruded
/// over the hull of the two z intervals.
pub fn giou_3d(a: &BoxState, b: &BoxState) -> f64 {
    BoxGeometry::new(a).giou_3d(&BoxGeometry::new(b))
}

/// Heading-penalized distance:
/// `(γ_geo‖Δsize‖ + γ_dis‖Δcenter‖) · (2 − cos Δθ)` with Δθ ∈ [0, π].
pub fn d_eucl(a: &BoxState, b: &BoxState, gamma_geo: f64, gamma_dis: f64) -> f64 {
    let size = norm3([a.w - b.w, a.l - b.l, a.h - b.h]);
    let center = norm3([a.x - b.x, a.y - b.y, a.z - b.z]);
    let d = gamma_geo * size + gamma_dis * center;
    d * (2.0 - heading_difference(a.yaw, b.yaw).cos())
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}
