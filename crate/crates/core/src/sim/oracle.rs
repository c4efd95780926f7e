//! Brute-force references for the numerically delicate kernels.
//!
//! None of these reuse the kernels they check: the area oracle samples
//! points against its own rotated-box and gift-wrapping hull tests, the
//! quadrature oracle integrates the velocity field directly, and the
//! assignment oracle enumerates matchings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::association::CostMatrix;
use crate::error::{Error, Result};
use crate::geometry::BoxState;

/// Monte-Carlo estimates with their standard errors. The errors assume
/// independent samples and overstate the spread of the stratified sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaEstimate {
    pub intersection: f64,
    pub intersection_se: f64,
    pub hull: f64,
    pub hull_se: f64,
    /// Area of the sampling window.
    pub window: f64,
}

/// Volume-based estimates for the 3D metrics plus the footprint estimates
/// from the same samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapEstimate {
    pub bev: AreaEstimate,
    pub giou_bev: f64,
    pub giou_3d: f64,
}

fn corners(b: &BoxState) -> [[f64; 2]; 4] {
    let (s, c) = b.yaw.sin_cos();
    let mut out = [[0.0; 2]; 4];
    for (k, (u, v)) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)].into_iter().enumerate() {
        let (du, dv) = (0.5 * b.l * u, 0.5 * b.w * v);
        out[k] = [b.x + du * c - dv * s, b.y + du * s + dv * c];
    }
    out
}

/// Point-in-box test in the box's own frame.
fn inside_footprint(b: &BoxState, cos: f64, sin: f64, x: f64, y: f64) -> bool {
    let (dx, dy) = (x - b.x, y - b.y);
    let u = dx * cos + dy * sin;
    let v = -dx * sin + dy * cos;
    u.abs() <= 0.5 * b.l && v.abs() <= 0.5 * b.w
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Gift-wrapping hull, counter-clockwise.
fn jarvis_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut points = points.to_vec();
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    points.dedup();
    let start = (0..points.len())
        .min_by(|&i, &j| points[i][0].total_cmp(&points[j][0]).then(points[i][1].total_cmp(&points[j][1])))
        .expect("non-empty point set");
    let mut hull = Vec::new();
    let mut current = start;
    loop {
        hull.push(points[current]);
        let mut next = (current + 1) % points.len();
        for k in 0..points.len() {
            let turn = cross(points[current], points[next], points[k]);
            let dist = |p: [f64; 2]| (p[0] - points[current][0]).hypot(p[1] - points[current][1]);
            if turn < 0.0 || (turn == 0.0 && dist(points[k]) > dist(points[next])) {
                next = k;
            }
        }
        current = next;
        if current == start || hull.len() > points.len() {
            break;
        }
    }
    hull
}

fn inside_convex(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    (0..poly.len()).all(|i| cross(poly[i], poly[(i + 1) % poly.len()], p) >= 0.0)
}

struct Sampler {
    lo: [f64; 3],
    span: [f64; 3],
}

/// Samples about `n` points over the joint bounding box of both boxes, one
/// jittered point per cell of a square grid, and counts hits: footprint
/// intersection, footprint hull, 3D intersection, 3D hull. Returns the
/// counts and the number of samples actually drawn.
fn sample(a: &BoxState, b: &BoxState, n: usize, seed: u64) -> ([usize; 4], usize, Sampler) {
    let pts: Vec<[f64; 2]> = corners(a).into_iter().chain(corners(b)).collect();
    let hull = jarvis_hull(&pts);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &pts {
        lo = [lo[0].min(p[0]), lo[1].min(p[1])];
        hi = [hi[0].max(p[0]), hi[1].max(p[1])];
    }
    let (za, zb) = ((a.z - 0.5 * a.h, a.z + 0.5 * a.h), (b.z - 0.5 * b.h, b.z + 0.5 * b.h));
    let (zlo, zhi) = (za.0.min(zb.0), za.1.max(zb.1));
    let sampler = Sampler {
        lo: [lo[0], lo[1], zlo],
        span: [hi[0] - lo[0], hi[1] - lo[1], zhi - zlo],
    };

    let (sa, ca) = a.yaw.sin_cos();
    let (sb, cb) = b.yaw.sin_cos();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = (n as f64).sqrt().ceil().max(1.0) as usize;
    let cell = [sampler.span[0] / k as f64, sampler.span[1] / k as f64];
    let mut counts = [0usize; 4];
    for (i, j) in (0..k).flat_map(|i| (0..k).map(move |j| (i, j))) {
        let x = sampler.lo[0] + cell[0] * (i as f64 + rng.gen::<f64>());
        let y = sampler.lo[1] + cell[1] * (j as f64 + rng.gen::<f64>());
        let z = sampler.lo[2] + sampler.span[2] * rng.gen::<f64>();
        let in_a = inside_footprint(a, ca, sa, x, y);
        let in_b = inside_footprint(b, cb, sb, x, y);
        let in_hull = in_a || in_b || inside_convex(&hull, [x, y]);
        let both = in_a && in_b;
        counts[0] += both as usize;
        counts[1] += in_hull as usize;
        // every z in the window lies in the vertical hull
        counts[2] += (both && z >= za.0 && z <= za.1 && z >= zb.0 && z <= zb.1) as usize;
        counts[3] += in_hull as usize;
    }
    (counts, k * k, sampler)
}

fn estimate(hits: usize, n: usize, window: f64) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p * window, window * (p * (1.0 - p) / n as f64).sqrt())
}

/// Monte-Carlo footprint intersection and hull areas from `n` samples.
pub fn mc_area_oracle(a: &BoxState, b: &BoxState, n: usize, seed: u64) -> AreaEstimate {
    mc_overlap_oracle(a, b, n, seed).bev
}

/// Monte-Carlo gIoU in BEV and 3D, with the 3D hull taken as the footprint
/// hull extruded over the combined vertical extent.
pub fn mc_overlap_oracle(a: &BoxState, b: &BoxState, n: usize, seed: u64) -> OverlapEstimate {
    let (counts, n, s) = sample(a, b, n, seed);
    let area = s.span[0] * s.span[1];
    let volume = area * s.span[2];
    let (inter, inter_se) = estimate(counts[0], n, area);
    let (hull, hull_se) = estimate(counts[1], n, area);
    let (inter3, _) = estimate(counts[2], n, volume);
    let (hull3, _) = estimate(counts[3], n, volume);

    let union = a.w * a.l + b.w * b.l - inter;
    let union3 = a.w * a.l * a.h + b.w * b.l * b.h - inter3;
    OverlapEstimate {
        bev: AreaEstimate {
            intersection: inter,
            intersection_se: inter_se,
            hull,
            hull_se,
            window: area,
        },
        giou_bev: inter / union + union / hull - 1.0,
        giou_3d: inter3 / union3 + union3 / hull3 - 1.0,
    }
}

/// Which model's velocity field to integrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadModel {
    /// `v(τ) = v + aτ`, heading `θ + ωτ`.
    Ctra { v: f64, a: f64, theta: f64, omega: f64 },
    /// Constant speed, heading `θ + β + ωτ` with `β = atan(f tan δ)`,
    /// `ω = v sin β / (f γ l)`.
    Bicycle {
        v: f64,
        theta: f64,
        steer: f64,
        length: f64,
        wheelbase_ratio: f64,
        rear_axle_fraction: f64,
    },
}

impl QuadModel {
    fn speed_heading(&self, tau: f64) -> (f64, f64) {
        match *self {
            QuadModel::Ctra { v, a, theta, omega } => (v + a * tau, theta + omega * tau),
            QuadModel::Bicycle {
                v,
                theta,
                steer,
                length,
                wheelbase_ratio,
                rear_axle_fraction,
            } => {
                let beta = (rear_axle_fraction * steer.tan()).atan();
                let lr = rear_axle_fraction * wheelbase_ratio * length;
                (v, theta + beta + v * beta.sin() / lr * tau)
            }
        }
    }
}

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod(f: &impl Fn(f64) -> [f64; 2], a: f64, b: f64) -> ([f64; 2], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; 2];
    let mut g = [0.0; 2];
    for i in 0..8 {
        let nodes: &[f64] = if i == 7 { &[0.0] } else { &[-1.0, 1.0] };
        for &sgn in nodes {
            let v = f(c + sgn * h * XK[i]);
            for d in 0..2 {
                k[d] += WK[i] * v[d];
                if i % 2 == 1 {
                    g[d] += WG[i / 2] * v[d];
                }
            }
        }
    }
    let k = [k[0] * h, k[1] * h];
    let g = [g[0] * h, g[1] * h];
    (k, (k[0] - g[0]).abs().max((k[1] - g[1]).abs()))
}

fn adaptive(f: &impl Fn(f64) -> [f64; 2], a: f64, b: f64, tol: f64, depth: u32) -> [f64; 2] {
    let (val, err) = gauss_kronrod(f, a, b);
    if err <= tol || depth == 0 {
        return val;
    }
    let m = 0.5 * (a + b);
    let l = adaptive(f, a, m, 0.5 * tol, depth - 1);
    let r = adaptive(f, m, b, 0.5 * tol, depth - 1);
    [l[0] + r[0], l[1] + r[1]]
}

/// Planar displacement over `[0, dt]` by adaptive Gauss–Kronrod quadrature
/// of `v(τ)·(cos, sin)(η(τ))`, to an absolute tolerance of 1e-10.
/// For the bicycle this is the gravity-center displacement.
pub fn quad_transition_oracle(model: &QuadModel, dt: f64) -> [f64; 2] {
    let f = |tau: f64| {
        let (v, eta) = model.speed_heading(tau);
        [v * eta.cos(), v * eta.sin()]
    };
    adaptive(&f, 0.0, dt, 1e-10, 40)
}

/// Optimal matching found by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteAssignment {
    pub pairs: Vec<(usize, usize)>,
    pub total: f64,
}

/// Largest assignment over valid cells, minimum total cost among those.
/// Rejects matrices whose smaller side exceeds 8.
pub fn brute_assignment_oracle(c: &CostMatrix) -> Result<BruteAssignment> {
    let (rows, cols) = (c.nrows(), c.ncols());
    if rows.min(cols) > 8 {
        return Err(Error::OracleLimit(format!("{rows}×{cols} matrix; the smaller side must be at most 8")));
    }
    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let cell = |i: usize, j: usize| if transpose { (j, i) } else { (i, j) };

    struct Search<'a, F: Fn(usize, usize) -> (usize, usize)> {
        c: &'a CostMatrix,
        cell: F,
        n: usize,
        m: usize,
        used: Vec<bool>,
        current: Vec<(usize, usize)>,
        cost: f64,
        best: Option<(usize, f64, Vec<(usize, usize)>)>,
    }

    impl<F: Fn(usize, usize) -> (usize, usize)> Search<'_, F> {
        fn run(&mut self, i: usize) {
            if i == self.n {
                let better = match &self.best {
                    None => true,
                    Some((count, cost, _)) => {
                        self.current.len() > *count || (self.current.len() == *count && self.cost < *cost)
                    }
                };
                if better {
                    self.best = Some((self.current.len(), self.cost, self.current.clone()));
                }
                return;
            }
            self.run(i + 1);
            for j in 0..self.m {
                let (r, k) = (self.cell)(i, j);
                if self.used[j] || !self.c.is_valid(r, k) {
                    continue;
                }
                self.used[j] = true;
                self.current.push((r, k));
                let before = self.cost;
                self.cost += self.c.get(r, k);
                self.run(i + 1);
                self.cost = before;
                self.current.pop();
                self.used[j] = false;
            }
        }
    }

    let mut s = Search {
        c,
        cell,
        n,
        m,
        used: vec![false; m],
        current: Vec::new(),
        cost: 0.0,
        best: None,
    };
    s.run(0);
    let (_, total, mut pairs) = s.best.unwrap_or((0, 0.0, Vec::new()));
    pairs.sort_unstable();
    Ok(BruteAssignment { pairs, total })
}
