//! Category-aware two-stage data association.
//!
//! Stage 1 matches detections to predicted trajectories with each category's
//! own metric and threshold. Stage 2 re-associates the leftovers with the
//! alternate metric (gIoU_bev, or gIoU_3d where stage 1 already used
//! gIoU_bev) under the second threshold. Pairs of different categories are
//! never matched.

mod hungarian;

use rayon::prelude::*;

use crate::config::{ThresholdMode, TrackerConfig};
use crate::geometry::{d_eucl, BoxGeometry, BoxState, MetricKind};

pub use hungarian::hungarian;

/// Cost stored in invalid cells. Larger than any valid cost.
pub const INVALID_COST: f64 = 1e18;

/// Below this many cells the matrix is filled on the calling thread.
const PARALLEL_CELLS: usize = 4096;

/// Detections × trajectories cost table with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    costs: Vec<f64>,
    valid: Vec<bool>,
}

impl CostMatrix {
    /// An all-invalid `rows × cols` matrix.
    pub fn new(rows: usize, cols: usize) -> Self {
        CostMatrix {
            rows,
            cols,
            costs: vec![INVALID_COST; rows * cols],
            valid: vec![false; rows * cols],
        }
    }

    /// A fully valid matrix from row vectors of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = CostMatrix::new(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged cost rows");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.cols + j]
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[i * self.cols + j]
    }

    /// Stores a finite cost and marks the cell valid.
    pub fn set(&mut self, i: usize, j: usize, cost: f64) {
        assert!(cost.is_finite(), "cost at ({i}, {j}) is not finite");
        self.costs[i * self.cols + j] = cost;
        self.valid[i * self.cols + j] = true;
    }

    pub fn invalidate(&mut self, i: usize, j: usize) {
        self.costs[i * self.cols + j] = INVALID_COST;
        self.valid[i * self.cols + j] = false;
    }

    /// Row-major cost slice, invalid cells holding [`INVALID_COST`].
    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssociationResult {
    /// `(detection, trajectory)` index pairs, sorted by detection.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_detections: Vec<usize>,
    pub unmatched_trajectories: Vec<usize>,
}

impl AssociationResult {
    fn from_matches(mut matches: Vec<(usize, usize)>, n_det: usize, n_trk: usize) -> Self {
        matches.sort_unstable();
        let mut det_used = vec![false; n_det];
        let mut trk_used = vec![false; n_trk];
        for &(d, t) in &matches {
            det_used[d] = true;
            trk_used[t] = true;
        }
        AssociationResult {
            matches,
            unmatched_detections: (0..n_det).filter(|&d| !det_used[d]).collect(),
            unmatched_trajectories: (0..n_trk).filter(|&t| !trk_used[t]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    First,
    Second,
}

/// Cost of pairing detection `d` with predicted measurement `t` under `metric`:
/// `1 − gIoU` for the overlap metrics, the penalized distance in meters for `d_eucl`.
pub fn metric_cost(d: &BoxState, t: &BoxState, metric: MetricKind, gamma_geo: f64, gamma_dis: f64) -> f64 {
    geometry_cost(&BoxGeometry::new(d), &BoxGeometry::new(t), d, t, metric, gamma_geo, gamma_dis)
}

fn geometry_cost(
    dg: &BoxGeometry,
    tg: &BoxGeometry,
    d: &BoxState,
    t: &BoxState,
    metric: MetricKind,
    gamma_geo: f64,
    gamma_dis: f64,
) -> f64 {
    match metric {
        MetricKind::Giou3d => 1.0 - dg.giou_3d(tg),
        MetricKind::GiouBev => 1.0 - dg.giou_bev(tg),
        MetricKind::DEucl => d_eucl(d, t, gamma_geo, gamma_dis),
    }
}

fn stage_metric(cfg: &TrackerConfig, category: &str, stage: Stage) -> MetricKind {
    let params = cfg.category(category);
    match stage {
        Stage::First => params.metric,
        Stage::Second => params.second_metric(),
    }
}

fn stage_threshold(cfg: &TrackerConfig, category: &str, stage: Stage) -> f64 {
    let params = cfg.category(category);
    match stage {
        Stage::First => params.first_threshold,
        Stage::Second => params.second_threshold,
    }
}

/// Cost matrix with detections as rows and trajectories as columns.
/// Cells whose categories differ are invalid.
pub fn build_cost_matrix(dets: &[BoxState], tracks: &[BoxState], cfg: &TrackerConfig, stage: Stage) -> CostMatrix {
    let (rows, cols) = (dets.len(), tracks.len());
    let dg: Vec<BoxGeometry> = dets.iter().map(BoxGeometry::new).collect();
    let tg: Vec<BoxGeometry> = tracks.iter().map(BoxGeometry::new).collect();

    let fill_row = |i: usize| -> Vec<Option<f64>> {
        let d = &dets[i];
        let metric = stage_metric(cfg, &d.category, stage);
        (0..cols)
            .map(|j| {
                let t = &tracks[j];
                (t.category == d.category)
                    .then(|| geometry_cost(&dg[i], &tg[j], d, t, metric, cfg.gamma_geo, cfg.gamma_dis))
            })
            .collect()
    };
    let cells: Vec<Vec<Option<f64>>> = if rows * cols >= PARALLEL_CELLS {
        (0..rows).into_par_iter().map(fill_row).collect()
    } else {
        (0..rows).map(fill_row).collect()
    };

    let mut m = CostMatrix::new(rows, cols);
    for (i, row) in cells.into_iter().enumerate() {
        for (j, cell) in row.into_iter().enumerate() {
            if let Some(cost) = cell {
                m.set(i, j, cost);
            }
        }
    }
    m
}

/// Solves one stage on `m` and keeps pairs whose cost is strictly below the
/// detection category's threshold.
fn solve_stage(m: &mut CostMatrix, dets: &[BoxState], cfg: &TrackerConfig, stage: Stage) -> Vec<(usize, usize)> {
    let threshold = |i: usize| stage_threshold(cfg, &dets[i].category, stage);
    if cfg.threshold_mode == ThresholdMode::PreMask {
        for i in 0..m.nrows() {
            let th = threshold(i);
            for j in 0..m.ncols() {
                if m.is_valid(i, j) && m.get(i, j) >= th {
                    m.invalidate(i, j);
                }
            }
        }
    }
    hungarian(m).into_iter().filter(|&(i, j)| m.get(i, j) < threshold(i)).collect()
}

/// First-stage association between detections and predicted trajectory boxes.
pub fn associate_stage1(dets: &[BoxState], tracks: &[BoxState], cfg: &TrackerConfig) -> AssociationResult {
    let mut m = build_cost_matrix(dets, tracks, cfg, Stage::First);
    let matches = solve_stage(&mut m, dets, cfg, Stage::First);
    AssociationResult::from_matches(matches, dets.len(), tracks.len())
}

/// Second stage over the leftovers of `first`; the result merges both stages.
pub fn associate_stage2(
    dets: &[BoxState],
    tracks: &[BoxState],
    first: &AssociationResult,
    cfg: &TrackerConfig,
) -> AssociationResult {
    let ud = &first.unmatched_detections;
    let ut = &first.unmatched_trajectories;
    let sub_dets: Vec<BoxState> = ud.iter().map(|&i| dets[i].clone()).collect();
    let sub_tracks: Vec<BoxState> = ut.iter().map(|&j| tracks[j].clone()).collect();

    let mut m = build_cost_matrix(&sub_dets, &sub_tracks, cfg, Stage::Second);
    let second = solve_stage(&mut m, &sub_dets, cfg, Stage::Second);

    let mut matches = first.matches.clone();
    matches.extend(second.into_iter().map(|(i, j)| (ud[i], ut[j])));
    AssociationResult::from_matches(matches, dets.len(), tracks.len())
}

/// Both stages.
pub fn associate(dets: &[BoxState], tracks: &[BoxState], cfg: &TrackerConfig) -> AssociationResult {
    let first = associate_stage1(dets, tracks, cfg);
    associate_stage2(dets, tracks, &first, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cube(x: f64, cat: &str) -> BoxState {
        BoxState::new([x, 0.0, 0.0], [1.0, 1.0, 1.0], 0.0).with_category(cat)
    }

    #[test]
    fn metric_cost_examples() {
        let a = cube(0.0, "car");
        assert_eq!(metric_cost(&a, &a, MetricKind::Giou3d, 1.0, 1.0), 0.0);
        assert_eq!(metric_cost(&a, &a, MetricKind::DEucl, 1.0, 1.0), 0.0);
        let b = cube(2.0, "car");
        assert_abs_diff_eq!(metric_cost(&a, &b, MetricKind::Giou3d, 1.0, 1.0), 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn cost_matrix_shapes_and_mask() {
        let cfg = TrackerConfig::default();
        let tracks = vec![cube(0.0, "car"), cube(0.0, "pedestrian")];
        let m = build_cost_matrix(&[], &tracks, &cfg, Stage::First);
        assert_eq!((m.nrows(), m.ncols()), (0, 2));
        let r = associate(&[], &tracks, &cfg);
        assert_eq!(r.unmatched_trajectories, [0, 1]);

        let m = build_cost_matrix(&[cube(0.0, "car")], &tracks, &cfg, Stage::First);
        assert!(m.is_valid(0, 0));
        assert!(!m.is_valid(0, 1));
        assert_eq!(m.get(0, 1), INVALID_COST);
    }

    #[test]
    fn bus_second_stage_uses_3d() {
        let cfg = TrackerConfig::default();
        // same footprint, vertically apart: BEV gIoU 1, 3D gIoU below 0
        let d = BoxState::new([0.0, 0.0, 0.0], [2.5, 10.0, 3.0], 0.0).with_category("bus");
        let t = BoxState::new([0.0, 0.0, 6.0], [2.5, 10.0, 3.0], 0.0).with_category("bus");
        let stage1 = build_cost_matrix(&[d.clone()], &[t.clone()], &cfg, Stage::First);
        assert_abs_diff_eq!(stage1.get(0, 0), 0.0, epsilon = 1e-12);
        let stage2 = build_cost_matrix(&[d], &[t], &cfg, Stage::Second);
        assert_abs_diff_eq!(stage2.get(0, 0), 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn stage1_threshold_is_strict() {
        let mut cfg = TrackerConfig::default();
        let (d, t) = (cube(0.0, "car"), cube(0.5, "car"));
        let cost = metric_cost(&d, &t, MetricKind::Giou3d, 1.0, 1.0);
        assert_abs_diff_eq!(cost, 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(associate_stage1(&[d.clone()], &[t.clone()], &cfg).matches, [(0, 0)]);

        cfg.category_mut("car").unwrap().first_threshold = cost;
        let r = associate_stage1(&[d.clone()], &[t.clone()], &cfg);
        assert!(r.matches.is_empty());
        assert_eq!((r.unmatched_detections.len(), r.unmatched_trajectories.len()), (1, 1));

        assert!(associate_stage1(&[d], &[cube(0.0, "truck")], &cfg).matches.is_empty());
    }

    #[test]
    fn stage2_recovers_positive_giou() {
        let mut cfg = TrackerConfig::default();
        cfg.category_mut("car").unwrap().first_threshold = 0.5;
        // gIoU_bev 1/3 then 0: cost 2/3 passes stage 2 only
        let d = cube(0.0, "car");
        let near = cube(0.5, "car");
        let first = associate_stage1(&[d.clone()], &[near.clone()], &cfg);
        assert!(first.matches.is_empty());
        assert_eq!(associate_stage2(&[d.clone()], &[near], &first, &cfg).matches, [(0, 0)]);

        // gIoU_bev −1/3: cost 4/3 fails θ_sm = 1
        let far = cube(2.0, "car");
        let first = associate_stage1(&[d.clone()], &[far.clone()], &cfg);
        assert!(associate_stage2(&[d], &[far], &first, &cfg).matches.is_empty());

        let empty = AssociationResult::default();
        assert_eq!(associate_stage2(&[], &[], &empty, &cfg), empty);
    }

    #[test]
    fn pre_mask_mode_blocks_over_threshold_cells() {
        let mut cfg = TrackerConfig::default();
        cfg.threshold_mode = ThresholdMode::PreMask;
        let dets = vec![cube(0.0, "car"), cube(3.0, "car")];
        let tracks = vec![cube(0.2, "car"), cube(3.1, "car")];
        let r = associate(&dets, &tracks, &cfg);
        assert_eq!(r.matches, [(0, 0), (1, 1)]);
    }

    const CATS: [&str; 3] = ["car", "pedestrian", "bus"];

    fn arb_scene() -> impl Strategy<Value = (Vec<BoxState>, Vec<BoxState>)> {
        let b = (-6.0..6.0f64, -6.0..6.0f64, 0.5..3.0f64, 0.5..5.0f64, -3.2..3.2f64, 0usize..3)
            .prop_map(|(x, y, w, l, yaw, c)| BoxState::new([x, y, 0.0], [w, l, 1.5], yaw).with_category(CATS[c]));
        (
            proptest::collection::vec(b.clone(), 0..9),
            proptest::collection::vec(b, 0..9),
        )
    }

    fn check_partition(r: &AssociationResult, n_det: usize, n_trk: usize) -> Result<(), TestCaseError> {
        let mut dets: Vec<usize> = r.matches.iter().map(|m| m.0).chain(r.unmatched_detections.iter().copied()).collect();
        let mut trks: Vec<usize> = r.matches.iter().map(|m| m.1).chain(r.unmatched_trajectories.iter().copied()).collect();
        dets.sort_unstable();
        trks.sort_unstable();
        prop_assert_eq!(dets, (0..n_det).collect::<Vec<_>>());
        prop_assert_eq!(trks, (0..n_trk).collect::<Vec<_>>());
        Ok(())
    }

    proptest! {
        #[test]
        fn association_properties((dets, tracks) in arb_scene()) {
            let cfg = TrackerConfig::default();
            let first = associate_stage1(&dets, &tracks, &cfg);
            let last = associate_stage2(&dets, &tracks, &first, &cfg);
            check_partition(&first, dets.len(), tracks.len())?;
            check_partition(&last, dets.len(), tracks.len())?;
            for &(d, t) in &last.matches {
                prop_assert_eq!(&dets[d].category, &tracks[t].category);
            }
            for m in &first.matches {
                prop_assert!(last.matches.contains(m));
            }
        }

        #[test]
        fn threshold_monotonicity((dets, tracks) in arb_scene(), lo in 0.2..1.5f64, extra in 0.0..0.5f64) {
            let count = |th: f64| {
                let mut cfg = TrackerConfig::default();
                cfg.threshold_mode = ThresholdMode::PreMask;
                cfg.category_mut("car").unwrap().first_threshold = th;
                associate_stage1(&dets, &tracks, &cfg)
                    .matches
                    .iter()
                    .filter(|&&(d, _)| dets[d].category == "car")
                    .count()
            };
            prop_assert!(count(lo + extra) >= count(lo));
        }

        #[test]
        fn detection_permutation_invariance((dets, tracks) in arb_scene(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let cfg = TrackerConfig::default();
            let mut perm: Vec<usize> = (0..dets.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let shuffled: Vec<BoxState> = perm.iter().map(|&i| dets[i].clone()).collect();

            let mut a: Vec<_> = associate(&dets, &tracks, &cfg).matches;
            let mut b: Vec<_> = associate(&shuffled, &tracks, &cfg).matches.into_iter().map(|(i, j)| (perm[i], j)).collect();
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a, b);
        }
    }
}
