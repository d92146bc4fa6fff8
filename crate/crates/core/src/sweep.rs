//! Threshold sweep: annotate, match, count and score every subgroup pair.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::{filter_instances, FilterConfig};
use crate::matching::{apply_cst, greedy_match, CountTable, MatchConfig, Subgroup};
use crate::metrics::{miss_rate, region_average, resolve_majority_with_reference, BodyRegion, FairnessCell, SubgroupCounts};
use crate::model::{Dataset, Detections, ImageRecord, JointName, SizeClass};
use crate::pose::{annotate, AngleThresholds, AttributeSet, ElbowStatus, LegStatus, ViewClass, Visibility};

/// Default confidence thresholds.
pub const DEFAULT_THRESHOLDS: [f64; 4] = [0.0, 0.25, 0.5, 0.75];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Strictly increasing, each in `[0, 1]`.
    pub thresholds: Vec<f64>,
    pub iou_threshold: f64,
    pub angles: AngleThresholds,
    pub filter: FilterConfig,
    pub detector_name: String,
    /// Match images on the rayon pool. Results are identical either way.
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            iou_threshold: 0.5,
            angles: AngleThresholds::default(),
            filter: FilterConfig::default(),
            detector_name: "detector".into(),
            parallel: true,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        for (i, &t) in self.thresholds.iter().enumerate() {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::validation("sweep config", format!("threshold {t} outside [0, 1]")));
            }
            if i > 0 && t <= self.thresholds[i - 1] {
                return Err(Error::validation("sweep config", "thresholds must be strictly increasing"));
            }
        }
        MatchConfig {
            iou_threshold: self.iou_threshold,
            cst: 0.0,
        }
        .validate()?;
        self.angles.validate()?;
        self.filter.validate()
    }
}

/// One image with the labels of each of its (filtered) pedestrians.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedImage {
    pub record: ImageRecord,
    /// Parallel to `record.pedestrians`.
    pub attributes: Vec<AttributeSet>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotatedDataset {
    pub images: Vec<AnnotatedImage>,
    /// Pedestrians dropped by the height filter.
    pub removed: usize,
}

impl AnnotatedDataset {
    pub fn num_pedestrians(&self) -> usize {
        self.images.iter().map(|i| i.attributes.len()).sum()
    }

    pub fn attributes(&self) -> impl Iterator<Item = &AttributeSet> {
        self.images.iter().flat_map(|i| i.attributes.iter())
    }

    /// The subset of large pedestrians.
    pub fn large_only(&self) -> AnnotatedDataset {
        let images = self
            .images
            .iter()
            .map(|img| {
                let (peds, attrs) = img
                    .record
                    .pedestrians
                    .iter()
                    .zip(&img.attributes)
                    .filter(|(_, a)| a.size == SizeClass::Large)
                    .map(|(p, a)| (p.clone(), a.clone()))
                    .unzip();
                AnnotatedImage {
                    record: ImageRecord {
                        pedestrians: peds,
                        ..img.record.clone()
                    },
                    attributes: attrs,
                }
            })
            .collect();
        AnnotatedDataset { images, removed: 0 }
    }
}

/// Applies the height filter and labels every remaining pedestrian.
pub fn annotate_dataset(dataset: &Dataset, angles: &AngleThresholds, filter: &FilterConfig) -> Result<AnnotatedDataset> {
    let filtered = filter_instances(dataset, filter);
    let images = filtered
        .dataset
        .images
        .into_iter()
        .map(|record| {
            let attributes = record
                .pedestrians
                .iter()
                .map(|p| annotate(p, angles, filter))
                .collect::<Result<Vec<_>>>()?;
            Ok(AnnotatedImage { record, attributes })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnnotatedDataset {
        images,
        removed: filtered.removed,
    })
}

/// Count table at one threshold over an annotated dataset.
///
/// Detections for image ids not present in the dataset are counted as false
/// positives.
pub fn count_at_threshold(data: &AnnotatedDataset, dets: &Detections, tau: f64, iou_threshold: f64, parallel: bool) -> Result<CountTable> {
    let cfg = MatchConfig { iou_threshold, cst: tau };
    let per_image = |img: &AnnotatedImage| -> Result<CountTable> {
        let kept = dets
            .get(&img.record.image_id)
            .map(|d| apply_cst(d, tau))
            .unwrap_or_default();
        let outcome = greedy_match(&kept, &img.record.pedestrians, &cfg);
        let attrs: HashMap<&str, &AttributeSet> = img
            .record
            .pedestrians
            .iter()
            .map(|p| p.id.as_str())
            .zip(&img.attributes)
            .collect();
        let mut table = CountTable::default();
        table.add_outcome(&outcome, &attrs)?;
        Ok(table)
    };

    let mut table = if parallel {
        data.images
            .par_iter()
            .map(per_image)
            .try_reduce(CountTable::default, |a, b| Ok(a.merge(&b)))?
    } else {
        data.images
            .iter()
            .map(per_image)
            .try_fold(CountTable::default(), |acc, t| t.map(|t| acc.merge(&t)))?
    };

    let known: std::collections::HashSet<&str> = data.images.iter().map(|i| i.record.image_id.as_str()).collect();
    for (id, d) in dets {
        if !known.contains(id.as_str()) {
            table.false_positives += apply_cst(d, tau).len() as u64;
        }
    }
    Ok(table)
}

/// Fairness statistics for one subgroup pair; `cell` is `None` when either
/// side has no instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub label: String,
    pub dimension: String,
    pub minority: String,
    pub majority: String,
    /// Roles came from equal supports.
    pub tie: bool,
    pub n_min: u64,
    pub n_maj: u64,
    pub cell: Option<FairnessCell>,
}

impl PairResult {
    pub fn eod(&self) -> Option<f64> {
        self.cell.map(|c| c.eod)
    }

    fn fixed(label: &str, dimension: &str, min: (String, SubgroupCounts), maj: (String, SubgroupCounts)) -> PairResult {
        PairResult {
            label: label.to_string(),
            dimension: dimension.to_string(),
            minority: min.0,
            majority: maj.0,
            tie: false,
            n_min: min.1.support(),
            n_maj: maj.1.support(),
            cell: FairnessCell::compute(min.1, maj.1).ok(),
        }
    }

    /// Roles by support, with `b` winning ties. With an empty side `a` stays
    /// the minority and the cell is a gap.
    fn by_support(label: &str, dimension: &str, a: (String, SubgroupCounts), b: (String, SubgroupCounts)) -> PairResult {
        let counts: BTreeMap<String, SubgroupCounts> = [a.clone(), b.clone()].into_iter().collect();
        match resolve_majority_with_reference(dimension, label, a.clone(), b.clone(), &b.0) {
            Ok(spec) => {
                let mut r = PairResult::fixed(
                    label,
                    dimension,
                    (spec.minority.clone(), counts[&spec.minority]),
                    (spec.majority.clone(), counts[&spec.majority]),
                );
                r.tie = spec.tie;
                r
            }
            Err(_) => PairResult::fixed(label, dimension, a, b),
        }
    }
}

/// Labels of the attribute pairs, in report order.
pub const ATTRIBUTE_PAIRS: [&str; 5] = ["legs", "elbows", "F-L", "L-B", "F-B"];

fn named(key: Subgroup, t: &CountTable) -> (String, SubgroupCounts) {
    (key.value().to_string(), t.get(key))
}

pub fn attribute_pairs(t: &CountTable) -> Vec<PairResult> {
    use Subgroup::{Elbows, Legs, View};
    let (front, lateral, back) = (View(ViewClass::Front), View(ViewClass::Lateral), View(ViewClass::Back));
    vec![
        PairResult::by_support("legs", "legs", named(Legs(LegStatus::AlignedStance), t), named(Legs(LegStatus::NonAlignedStance), t)),
        PairResult::by_support("elbows", "elbows", named(Elbows(ElbowStatus::Bent), t), named(Elbows(ElbowStatus::Straight), t)),
        PairResult::by_support("F-L", "view", named(front, t), named(lateral, t)),
        PairResult::by_support("L-B", "view", named(lateral, t), named(back, t)),
        PairResult::by_support("F-B", "view", named(front, t), named(back, t)),
    ]
}

/// Occluded-minus-visible pairs for all 17 joints.
pub fn joint_pairs(t: &CountTable) -> Vec<PairResult> {
    JointName::ALL
        .iter()
        .map(|&j| {
            PairResult::fixed(
                j.as_str(),
                j.as_str(),
                named(Subgroup::Joint(j, Visibility::Occluded), t),
                named(Subgroup::Joint(j, Visibility::Visible), t),
            )
        })
        .collect()
}

/// Region means of the absolute joint EODs. A region is a gap when any
/// member joint is.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionAverages {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub head: Option<f64>,
}

impl RegionAverages {
    pub fn get(&self, region: BodyRegion) -> Option<f64> {
        match region {
            BodyRegion::Lower => self.lower,
            BodyRegion::Upper => self.upper,
            BodyRegion::Head => self.head,
        }
    }

    pub fn from_joints(joints: &[PairResult]) -> RegionAverages {
        let abs_eods: BTreeMap<JointName, f64> = joints
            .iter()
            .filter_map(|p| Some((p.label.parse().ok()?, p.cell?.eod.abs())))
            .collect();
        let avg = |r| region_average(&abs_eods, r).ok();
        RegionAverages {
            lower: avg(BodyRegion::Lower),
            upper: avg(BodyRegion::Upper),
            head: avg(BodyRegion::Head),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupEntry {
    pub dimension: String,
    pub value: String,
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub tau: f64,
    pub overall: SubgroupCounts,
    pub overall_mr: Option<f64>,
    pub false_positives: u64,
    pub attributes: Vec<PairResult>,
    pub joints: Vec<PairResult>,
    pub regions: RegionAverages,
    pub subgroup_counts: Vec<SubgroupEntry>,
}

impl ThresholdResult {
    pub fn from_counts(tau: f64, table: &CountTable) -> ThresholdResult {
        let joints = joint_pairs(table);
        ThresholdResult {
            tau,
            overall: table.overall,
            overall_mr: miss_rate(table.overall).ok(),
            false_positives: table.false_positives,
            attributes: attribute_pairs(table),
            regions: RegionAverages::from_joints(&joints),
            joints,
            subgroup_counts: table
                .subgroups
                .iter()
                .map(|(k, c)| SubgroupEntry {
                    dimension: k.dimension(),
                    value: k.value().to_string(),
                    tp: c.tp,
                    fn_: c.fn_,
                })
                .collect(),
        }
    }

    pub fn attribute(&self, label: &str) -> Option<&PairResult> {
        self.attributes.iter().find(|p| p.label == label)
    }

    pub fn joint(&self, joint: JointName) -> Option<&PairResult> {
        self.joints.iter().find(|p| p.label == joint.as_str())
    }
}

fn evaluate(data: &AnnotatedDataset, dets: &Detections, cfg: &SweepConfig) -> Result<Vec<ThresholdResult>> {
    cfg.thresholds
        .iter()
        .map(|&tau| {
            let table = count_at_threshold(data, dets, tau, cfg.iou_threshold, cfg.parallel)?;
            Ok(ThresholdResult::from_counts(tau, &table))
        })
        .collect()
}

/// Change in EOD when restricting to large instances, for one pair at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEntry {
    pub tau: f64,
    pub label: String,
    pub eod_full: Option<f64>,
    pub eod_large: Option<f64>,
    /// `eod_full - eod_large`.
    pub delta: Option<f64>,
    pub sign_stable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeDelta {
    pub large_instances: usize,
    pub entries: Vec<DeltaEntry>,
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn delta_entry(tau: f64, label: String, full: Option<f64>, large: Option<f64>) -> DeltaEntry {
    let both = full.zip(large);
    DeltaEntry {
        tau,
        label,
        eod_full: full,
        eod_large: large,
        delta: both.map(|(f, l)| f - l),
        sign_stable: both.map(|(f, l)| sign(f) == sign(l)),
    }
}

fn compare_results(full: &[ThresholdResult], large: &[ThresholdResult], large_instances: usize) -> SizeDelta {
    let mut entries = Vec::new();
    for (f, l) in full.iter().zip(large) {
        for (pf, pl) in f.attributes.iter().zip(&l.attributes) {
            entries.push(delta_entry(f.tau, pf.label.clone(), pf.eod(), pl.eod()));
        }
        for region in BodyRegion::ALL {
            entries.push(delta_entry(f.tau, format!("region:{region}"), f.regions.get(region), l.regions.get(region)));
        }
    }
    SizeDelta { large_instances, entries }
}

/// Reruns the sweep on large instances only and reports the EOD shift for
/// each attribute pair and body region.
pub fn size_stratified_delta(dataset: &Dataset, dets: &Detections, cfg: &SweepConfig) -> Result<SizeDelta> {
    cfg.validate()?;
    let data = annotate_dataset(dataset, &cfg.angles, &cfg.filter)?;
    let large = data.large_only();
    let full = evaluate(&data, dets, cfg)?;
    let large_results = evaluate(&large, dets, cfg)?;
    Ok(compare_results(&full, &large_results, large.num_pedestrians()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionEntry {
    pub value: String,
    pub count: usize,
    /// Share of the instances with a known label, in percent.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub dimension: String,
    pub entries: Vec<DistributionEntry>,
    pub unknown: usize,
}

impl Distribution {
    fn new(dimension: &str, counts: &[(&str, usize)], unknown: usize) -> Distribution {
        let known: usize = counts.iter().map(|c| c.1).sum();
        Distribution {
            dimension: dimension.to_string(),
            entries: counts
                .iter()
                .map(|&(v, n)| DistributionEntry {
                    value: v.to_string(),
                    count: n,
                    percent: if known == 0 { 0.0 } else { 100.0 * n as f64 / known as f64 },
                })
                .collect(),
            unknown,
        }
    }

    pub fn percent(&self, value: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.value == value).map(|e| e.percent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointOcclusion {
    pub joint: JointName,
    pub visible: usize,
    pub occluded: usize,
    pub absent: usize,
    /// `occluded / (occluded + visible)` in percent.
    pub occlusion_percent: Option<f64>,
}

/// Subgroup distribution of an annotated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub images: usize,
    pub instances: usize,
    pub removed_by_height_filter: usize,
    pub legs: Distribution,
    pub elbows: Distribution,
    pub view: Distribution,
    pub size: Distribution,
    pub joints: Vec<JointOcclusion>,
    pub mean_occlusion_percent: Option<f64>,
}

pub fn dataset_summary(data: &AnnotatedDataset) -> DatasetSummary {
    let mut legs = [0usize; 3];
    let mut elbows = [0usize; 3];
    let mut view = [0usize; 3];
    let mut size = [0usize; 2];
    let mut joints = [[0usize; 3]; 17];
    for a in data.attributes() {
        legs[a.legs as usize] += 1;
        elbows[a.elbows as usize] += 1;
        view[a.view as usize] += 1;
        size[a.size as usize] += 1;
        for (i, j) in JointName::ALL.iter().enumerate() {
            joints[i][a.joint_occluded[j] as usize] += 1;
        }
    }
    let joints: Vec<JointOcclusion> = JointName::ALL
        .iter()
        .zip(joints)
        .map(|(&joint, [visible, occluded, absent])| JointOcclusion {
            joint,
            visible,
            occluded,
            absent,
            occlusion_percent: (visible + occluded > 0).then(|| 100.0 * occluded as f64 / (visible + occluded) as f64),
        })
        .collect();
    let rates: Vec<f64> = joints.iter().filter_map(|j| j.occlusion_percent).collect();
    DatasetSummary {
        images: data.images.len(),
        instances: data.num_pedestrians(),
        removed_by_height_filter: data.removed,
        legs: Distribution::new(
            "legs",
            &[(LegStatus::AlignedStance.as_str(), legs[0]), (LegStatus::NonAlignedStance.as_str(), legs[1])],
            legs[2],
        ),
        elbows: Distribution::new(
            "elbows",
            &[(ElbowStatus::Straight.as_str(), elbows[1]), (ElbowStatus::Bent.as_str(), elbows[0])],
            elbows[2],
        ),
        view: Distribution::new(
            "view",
            &[
                (ViewClass::Front.as_str(), view[0]),
                (ViewClass::Lateral.as_str(), view[1]),
                (ViewClass::Back.as_str(), view[2]),
            ],
            0,
        ),
        size: Distribution::new("size", &[(SizeClass::Small.as_str(), size[0]), (SizeClass::Large.as_str(), size[1])], 0),
        joints,
        mean_occlusion_percent: (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64),
    }
}

/// Full evaluation result for one detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub detector_name: String,
    pub config: SweepConfig,
    pub dataset: DatasetSummary,
    /// Detection image ids with no ground truth; all their detections are false positives.
    pub unknown_detection_images: Vec<String>,
    pub thresholds: Vec<ThresholdResult>,
    pub size_delta: SizeDelta,
}

impl FairnessReport {
    pub fn at(&self, tau: f64) -> Option<&ThresholdResult> {
        self.thresholds.iter().find(|t| t.tau == tau)
    }
}

/// Runs the full evaluation for one detector.
pub fn run_sweep(dataset: &Dataset, dets: &Detections, cfg: &SweepConfig) -> Result<FairnessReport> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyInput("ground truth has no images".into()));
    }
    let data = annotate_dataset(dataset, &cfg.angles, &cfg.filter)?;
    if data.num_pedestrians() == 0 {
        return Err(Error::EmptyInput("no pedestrians remain after height filtering".into()));
    }
    let large = data.large_only();
    let thresholds = evaluate(&data, dets, cfg)?;
    let large_results = evaluate(&large, dets, cfg)?;
    let size_delta = compare_results(&thresholds, &large_results, large.num_pedestrians());

    let known: std::collections::HashSet<&str> = dataset.images.iter().map(|i| i.image_id.as_str()).collect();
    Ok(FairnessReport {
        detector_name: cfg.detector_name.clone(),
        config: cfg.clone(),
        dataset: dataset_summary(&data),
        unknown_detection_images: dets.keys().filter(|k| !known.contains(k.as_str())).cloned().collect(),
        thresholds,
        size_delta,
    })
}
