//! CLEAR MOT counting: MOTA, identity switches, false positives and misses.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::lifecycle::ResultRecord;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClearCounts {
    /// Ground-truth boxes.
    pub gt: usize,
    pub matches: usize,
    pub fp: usize,
    pub fn_: usize,
    pub ids: usize,
}

impl ClearCounts {
    pub fn mota(&self) -> f64 {
        1.0 - (self.fp + self.fn_ + self.ids) as f64 / self.gt.max(1) as f64
    }

    fn add(&mut self, o: &ClearCounts) {
        self.gt += o.gt;
        self.matches += o.matches;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.ids += o.ids;
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClearReport {
    pub mota: f64,
    pub totals: ClearCounts,
    pub per_category: BTreeMap<String, ClearCounts>,
}

impl std::fmt::Display for ClearReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<12} {:>8} {:>7} {:>7} {:>7} {:>5}", "category", "MOTA", "GT", "FP", "FN", "IDS")?;
        let row = |f: &mut std::fmt::Formatter<'_>, name: &str, c: &ClearCounts| {
            writeln!(f, "{:<12} {:>8.4} {:>7} {:>7} {:>7} {:>5}", name, c.mota(), c.gt, c.fp, c.fn_, c.ids)
        };
        for (name, c) in &self.per_category {
            row(f, name, c)?;
        }
        row(f, "all", &self.totals)
    }
}

type FrameKey<'a> = (&'a str, &'a str);

/// Per-frame greedy matching on BEV center distance within
/// `match_threshold` meters, same category only.
///
/// A ground-truth track whose matched result id differs from its previous
/// match counts one identity switch. Empty results count everything as
/// missed; otherwise results and ground truth must cover the same scenes.
pub fn evaluate_clear(results: &[ResultRecord], ground_truth: &[ResultRecord], match_threshold: f64) -> Result<ClearReport> {
    let gt_scenes: BTreeSet<&str> = ground_truth.iter().map(|r| r.scene_id.as_str()).collect();
    let res_scenes: BTreeSet<&str> = results.iter().map(|r| r.scene_id.as_str()).collect();
    if !results.is_empty() && gt_scenes != res_scenes {
        return Err(Error::SceneMismatch {
            missing_in_results: gt_scenes.difference(&res_scenes).map(|s| s.to_string()).collect(),
            missing_in_ground_truth: res_scenes.difference(&gt_scenes).map(|s| s.to_string()).collect(),
        });
    }

    let mut gt_frames: BTreeMap<(&str, u64, &str), Vec<&ResultRecord>> = BTreeMap::new();
    for r in ground_truth {
        gt_frames
            .entry((r.scene_id.as_str(), r.timestamp.to_bits(), r.frame_id.as_str()))
            .or_default()
            .push(r);
    }
    let mut res_frames: HashMap<FrameKey, Vec<&ResultRecord>> = HashMap::new();
    for r in results {
        res_frames.entry((r.scene_id.as_str(), r.frame_id.as_str())).or_default().push(r);
    }

    let mut per_category: BTreeMap<String, ClearCounts> = BTreeMap::new();
    let mut last_match: HashMap<(&str, u64), u64> = HashMap::new();
    let mut seen_frames: BTreeSet<FrameKey> = BTreeSet::new();

    // timestamps are non-negative in practice, but order by value to be safe
    let mut ordered: Vec<_> = gt_frames.into_iter().collect();
    ordered.sort_by(|a, b| a.0 .0.cmp(b.0 .0).then(f64::from_bits(a.0 .1).total_cmp(&f64::from_bits(b.0 .1))));

    for ((scene, _, frame), gts) in ordered {
        seen_frames.insert((scene, frame));
        let res = res_frames.get(&(scene, frame)).map(Vec::as_slice).unwrap_or(&[]);
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (gi, g) in gts.iter().enumerate() {
            for (ri, r) in res.iter().enumerate() {
                if g.category != r.category {
                    continue;
                }
                let d = (g.x - r.x).hypot(g.y - r.y);
                if d <= match_threshold {
                    pairs.push((d, gi, ri));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut g_used = vec![false; gts.len()];
        let mut r_used = vec![false; res.len()];
        for (_, gi, ri) in pairs {
            if g_used[gi] || r_used[ri] {
                continue;
            }
            g_used[gi] = true;
            r_used[ri] = true;
            let g = gts[gi];
            let c = per_category.entry(g.category.clone()).or_default();
            c.matches += 1;
            let key = (scene, g.tracking_id);
            if let Some(prev) = last_match.insert(key, res[ri].tracking_id) {
                if prev != res[ri].tracking_id {
                    c.ids += 1;
                }
            }
        }
        for (gi, g) in gts.iter().enumerate() {
            let c = per_category.entry(g.category.clone()).or_default();
            c.gt += 1;
            if !g_used[gi] {
                c.fn_ += 1;
            }
        }
        for (ri, r) in res.iter().enumerate() {
            if !r_used[ri] {
                per_category.entry(r.category.clone()).or_default().fp += 1;
            }
        }
    }
    // results on frames without any ground truth are all false positives
    for ((scene, frame), res) in &res_frames {
        if !seen_frames.contains(&(*scene, *frame)) {
            for r in res {
                per_category.entry(r.category.clone()).or_default().fp += 1;
            }
        }
    }

    let mut totals = ClearCounts::default();
    for c in per_category.values() {
        totals.add(c);
    }
    Ok(ClearReport {
        mota: totals.mota(),
        totals,
        per_category,
    })
}
