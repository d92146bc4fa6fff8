//! Confidence thresholding and score-ordered greedy IoU matching.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::SubgroupCounts;
use crate::model::{BBox, DetectionRecord, JointName, PedestrianGt, SizeClass};
use crate::pose::{AttributeSet, ElbowStatus, LegStatus, ViewClass, Visibility};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub iou_threshold: f64,
    /// Confidence score threshold.
    pub cst: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            iou_threshold: 0.5,
            cst: 0.0,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::validation(
                "match config",
                format!("iou_threshold {} must lie in (0, 1]", self.iou_threshold),
            ));
        }
        if !(0.0..=1.0).contains(&self.cst) {
            return Err(Error::validation("match config", format!("cst {} must lie in [0, 1]", self.cst)));
        }
        Ok(())
    }
}

/// Intersection over union. Touching or disjoint boxes give 0.
pub fn iou(b: &BBox, g: &BBox) -> f64 {
    let iw = b.right().min(g.right()) - b.x.max(g.x);
    let ih = b.bottom().min(g.bottom()) - b.y.max(g.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = b.area() + g.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Keeps detections with `score >= tau`, in input order.
pub fn apply_cst(dets: &[DetectionRecord], tau: f64) -> Vec<DetectionRecord> {
    dets.iter().filter(|d| d.score >= tau).copied().collect()
}

/// TP/FP/FN assignment for one image.
///
/// Detection indices refer to the slice passed to [`greedy_match`].
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchOutcome {
    /// `(detection index, gt id)` in processing order.
    pub tp_pairs: Vec<(usize, String)>,
    /// In processing order.
    pub fp: Vec<usize>,
    /// Unmatched ground truths, in input order.
    pub fn_ids: Vec<String>,
}

/// Greedy matching in descending score order.
///
/// Each detection takes the still-unmatched ground truth with the highest
/// IoU if that IoU reaches `cfg.iou_threshold`; otherwise it is a false
/// positive. Score ties keep input order and IoU ties go to the earlier
/// ground truth.
pub fn greedy_match(dets: &[DetectionRecord], gts: &[PedestrianGt], cfg: &MatchConfig) -> MatchOutcome {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));

    let mut taken = vec![false; gts.len()];
    let mut out = MatchOutcome::default();
    for di in order {
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if taken[gi] {
                continue;
            }
            let v = iou(&dets[di].bbox, &gt.bbox);
            if v >= cfg.iou_threshold && best.is_none_or(|(_, bv)| v > bv) {
                best = Some((gi, v));
            }
        }
        match best {
            Some((gi, _)) => {
                taken[gi] = true;
                out.tp_pairs.push((di, gts[gi].id.clone()));
            }
            None => out.fp.push(di),
        }
    }
    out.fn_ids = gts
        .iter()
        .zip(&taken)
        .filter(|(_, t)| !**t)
        .map(|(g, _)| g.id.clone())
        .collect();
    out
}

/// A subgroup within one attribute dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "dimension", content = "value", rename_all = "snake_case")]
pub enum Subgroup {
    Legs(LegStatus),
    Elbows(ElbowStatus),
    View(ViewClass),
    Size(SizeClass),
    Joint(JointName, Visibility),
}

impl Subgroup {
    /// Subgroups a pedestrian belongs to. Unknown labels and absent joints
    /// are left out.
    pub fn memberships(attrs: &AttributeSet) -> Vec<Subgroup> {
        let mut out = Vec::with_capacity(21);
        if attrs.legs != LegStatus::Unknown {
            out.push(Subgroup::Legs(attrs.legs));
        }
        if attrs.elbows != ElbowStatus::Unknown {
            out.push(Subgroup::Elbows(attrs.elbows));
        }
        out.push(Subgroup::View(attrs.view));
        out.push(Subgroup::Size(attrs.size));
        out.extend(
            attrs
                .joint_occluded
                .iter()
                .filter(|(_, v)| **v != Visibility::Absent)
                .map(|(&j, &v)| Subgroup::Joint(j, v)),
        );
        out
    }

    pub fn dimension(&self) -> String {
        match self {
            Subgroup::Legs(_) => "legs".into(),
            Subgroup::Elbows(_) => "elbows".into(),
            Subgroup::View(_) => "view".into(),
            Subgroup::Size(_) => "size".into(),
            Subgroup::Joint(j, _) => j.to_string(),
        }
    }

    pub fn value(&self) -> &'static str {
        match self {
            Subgroup::Legs(v) => v.as_str(),
            Subgroup::Elbows(v) => v.as_str(),
            Subgroup::View(v) => v.as_str(),
            Subgroup::Size(v) => v.as_str(),
            Subgroup::Joint(_, v) => v.as_str(),
        }
    }
}

/// TP/FN tallies per subgroup, plus overall totals, at one threshold.
///
/// Tables merge by integer addition, so any reduction order gives the same
/// result.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountTable {
    pub overall: SubgroupCounts,
    pub false_positives: u64,
    pub subgroups: BTreeMap<Subgroup, SubgroupCounts>,
}

impl CountTable {
    pub fn get(&self, key: Subgroup) -> SubgroupCounts {
        self.subgroups.get(&key).copied().unwrap_or_default()
    }

    /// Adds one image's outcome. `attributes` maps that image's GT ids to
    /// their labels.
    pub fn add_outcome(&mut self, outcome: &MatchOutcome, attributes: &HashMap<&str, &AttributeSet>) -> Result<()> {
        let lookup = |id: &str| {
            attributes
                .get(id)
                .copied()
                .ok_or_else(|| Error::Consistency(format!("ground truth {id:?} has no attributes")))
        };
        for (_, id) in &outcome.tp_pairs {
            let attrs = lookup(id)?;
            self.overall.tp += 1;
            for key in Subgroup::memberships(attrs) {
                self.subgroups.entry(key).or_default().tp += 1;
            }
        }
        for id in &outcome.fn_ids {
            let attrs = lookup(id)?;
            self.overall.fn_ += 1;
            for key in Subgroup::memberships(attrs) {
                self.subgroups.entry(key).or_default().fn_ += 1;
            }
        }
        self.false_positives += outcome.fp.len() as u64;
        Ok(())
    }

    pub fn merge(mut self, other: &CountTable) -> CountTable {
        self.overall = self.overall + other.overall;
        self.false_positives += other.false_positives;
        for (k, v) in &other.subgroups {
            let e = self.subgroups.entry(*k).or_default();
            *e = *e + *v;
        }
        self
    }
}

/// Sums subgroup counts over per-image outcomes.
pub fn accumulate_subgroup_counts<'a, I>(items: I) -> Result<CountTable>
where
    I: IntoIterator<Item = (&'a MatchOutcome, &'a HashMap<&'a str, &'a AttributeSet>)>,
{
    let mut table = CountTable::default();
    for (outcome, attrs) in items {
        table.add_outcome(outcome, attrs)?;
    }
    Ok(table)
}
