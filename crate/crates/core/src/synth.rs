//! Seeded synthetic scenes with known pose labels and planted detector misses.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`).
//! Scene geometry uses stream 0 and detection planting uses stream 1 of the
//! same seed, so changing the planting spec never perturbs the scene.
//!
//! Skeletons are built analytically so that every angle sits at least 5°
//! away from the relevant threshold, unless `edge` is set, in which case
//! they are placed within 0.5° of it (still on the requested side).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::{serialize_ground_truth, FilterConfig};
use crate::model::{BBox, Dataset, DetectionRecord, Detections, ImageRecord, JointName, Keypoint, KeypointMap, PedestrianGt, SizeClass};
use crate::pose::{AngleThresholds, ElbowStatus, LegStatus, ViewClass};

const MARGIN_DEG: f64 = 5.0;
const EDGE_DEG: f64 = 0.5;
const BOX_ASPECT: f64 = 0.41;
const DET_JITTER: f64 = 0.02;

/// How many instances of a group the planted detector misses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissSpec {
    /// Exactly this many, chosen at random.
    Exact(usize),
    /// Each instance independently with this probability.
    Probability(f64),
}

impl Default for MissSpec {
    fn default() -> Self {
        MissSpec::Exact(0)
    }
}

/// A block of identically labelled instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroupSpec {
    pub count: usize,
    pub legs: LegStatus,
    pub elbows: ElbowStatus,
    pub view: ViewClass,
    pub size: SizeClass,
    /// Joints flagged occluded (coordinates are still emitted).
    pub occluded: Vec<JointName>,
    /// Joints left out of the annotation.
    pub absent: Vec<JointName>,
    pub miss: MissSpec,
    /// Score of the planted detections.
    pub score: f64,
}

impl Default for GroupSpec {
    fn default() -> Self {
        GroupSpec {
            count: 0,
            legs: LegStatus::AlignedStance,
            elbows: ElbowStatus::Straight,
            view: ViewClass::Front,
            size: SizeClass::Large,
            occluded: Vec::new(),
            absent: Vec::new(),
            miss: MissSpec::default(),
            score: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub seed: u64,
    pub image_width: u32,
    pub image_height: u32,
    pub per_image: usize,
    pub groups: Vec<GroupSpec>,
    /// Extra detections per image that overlap no ground truth.
    pub background_fp_per_image: usize,
    pub background_score: f64,
    /// Place angles and heights just inside their thresholds.
    pub edge: bool,
    pub angles: AngleThresholds,
    pub filter: FilterConfig,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 0,
            image_width: 1920,
            image_height: 1024,
            per_image: 8,
            groups: Vec::new(),
            background_fp_per_image: 0,
            background_score: 0.5,
            edge: false,
            angles: AngleThresholds::default(),
            filter: FilterConfig::default(),
        }
    }
}

fn spec_err(msg: impl Into<String>) -> Error {
    Error::Spec(msg.into())
}

/// Ranges (degrees) the templates draw from for one label.
struct Ranges {
    knee_straight: (f64, f64),
    knee_flexed: Option<(f64, f64)>,
    spread_closed: (f64, f64),
    spread_open: Option<(f64, f64)>,
    arm_straight: Option<(f64, f64)>,
    arm_bent: Option<(f64, f64)>,
    small_h: (f64, f64),
    large_h: (f64, f64),
}

impl SynthSpec {
    fn ranges(&self) -> Result<Ranges> {
        self.angles.validate().map_err(|e| spec_err(e.to_string()))?;
        self.filter.validate().map_err(|e| spec_err(e.to_string()))?;
        let AngleThresholds {
            knee_flexion_deg: gamma,
            hip_ankle_sep_deg: alpha,
            elbow_bend_deg: bend,
        } = self.angles;
        let FilterConfig {
            min_height_px: min_h,
            size_split_px: split,
        } = self.filter;
        let nonempty = |lo: f64, hi: f64| (lo <= hi).then_some((lo, hi));

        Ok(if self.edge {
            Ranges {
                knee_straight: ((gamma - EDGE_DEG).max(0.0), gamma - 0.01),
                knee_flexed: nonempty(gamma + 0.01, (gamma + EDGE_DEG).min(170.0)),
                spread_closed: ((alpha - EDGE_DEG).max(0.0), alpha - 0.01),
                spread_open: nonempty(alpha + 0.01, (alpha + EDGE_DEG).min(120.0)),
                arm_straight: nonempty((bend - EDGE_DEG).max(0.0), bend - 0.01),
                arm_bent: nonempty(bend + 0.01, (bend + EDGE_DEG).min(175.0)),
                small_h: ((split - EDGE_DEG).max(min_h + 0.01), split - 0.01),
                large_h: (split, split + EDGE_DEG),
            }
        } else {
            Ranges {
                knee_straight: (0.0, (gamma - MARGIN_DEG).max(0.0)),
                knee_flexed: nonempty(gamma + MARGIN_DEG, (gamma + 40.0).min(170.0)),
                spread_closed: (0.0, (alpha - MARGIN_DEG).max(0.0)),
                spread_open: nonempty(alpha + MARGIN_DEG, (alpha + 30.0).min(120.0)),
                arm_straight: nonempty(0.0, bend - MARGIN_DEG),
                arm_bent: nonempty(bend + MARGIN_DEG, (bend + 60.0).min(175.0)),
                small_h: (min_h + MARGIN_DEG, split - MARGIN_DEG),
                large_h: (split + MARGIN_DEG, split + 100.0),
            }
        })
    }

    fn validate(&self, r: &Ranges) -> Result<()> {
        if self.per_image == 0 {
            return Err(spec_err("per_image must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.background_score) {
            return Err(spec_err("background_score must lie in [0, 1]"));
        }
        let slot = f64::from(self.image_width) / self.per_image as f64;
        let widest = r.large_h.1 * BOX_ASPECT * (1.0 + 3.0 * DET_JITTER);
        if widest > slot || r.large_h.1 > f64::from(self.image_height) {
            return Err(spec_err(format!(
                "{} pedestrians per {}x{} image leave no room for boxes up to {:.0} px tall",
                self.per_image, self.image_width, self.image_height, r.large_h.1
            )));
        }
        if r.small_h.0 > r.small_h.1 {
            return Err(spec_err("height filter leaves no room for small instances"));
        }

        const LEGS: [JointName; 6] = [
            JointName::HipLeft,
            JointName::KneeLeft,
            JointName::AnkleLeft,
            JointName::HipRight,
            JointName::KneeRight,
            JointName::AnkleRight,
        ];
        const ARMS: [JointName; 6] = [
            JointName::ShoulderLeft,
            JointName::ElbowLeft,
            JointName::WristLeft,
            JointName::ShoulderRight,
            JointName::ElbowRight,
            JointName::WristRight,
        ];
        for (i, g) in self.groups.iter().enumerate() {
            let bad = |m: &str| Err(spec_err(format!("group {i}: {m}")));
            if !(0.0..=1.0).contains(&g.score) {
                return bad("score must lie in [0, 1]");
            }
            match g.miss {
                MissSpec::Exact(k) if k > g.count => return bad("exact miss count exceeds group size"),
                MissSpec::Probability(p) if !(0.0..=1.0).contains(&p) => return bad("miss probability must lie in [0, 1]"),
                _ => {}
            }
            if g.legs != LegStatus::Unknown && g.absent.iter().any(|j| LEGS.contains(j)) {
                return bad("a known leg label needs all six leg keypoints");
            }
            if g.elbows != ElbowStatus::Unknown && g.absent.iter().any(|j| ARMS.contains(j)) {
                return bad("a known elbow label needs all six arm keypoints");
            }
            if g.legs == LegStatus::NonAlignedStance && r.knee_flexed.is_none() && r.spread_open.is_none() {
                return bad("non-aligned stance is unreachable with these thresholds");
            }
            if g.elbows == ElbowStatus::Bent && r.arm_bent.is_none() {
                return bad("bent elbows are unreachable with this threshold");
            }
            if g.elbows == ElbowStatus::Straight && r.arm_straight.is_none() {
                return bad("straight elbows are unreachable with this threshold");
            }
        }
        Ok(())
    }
}

/// Intended labels of one generated pedestrian.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub pedestrian_id: String,
    pub group: usize,
    pub legs: LegStatus,
    pub elbows: ElbowStatus,
    pub view: ViewClass,
    pub size: SizeClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub dataset: Dataset,
    pub manifest: Manifest,
}

impl SynthScene {
    pub fn gt_json(&self) -> Vec<u8> {
        serialize_ground_truth(&self.dataset)
    }

    pub fn manifest_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(&self.manifest).expect("manifest serialization cannot fail")
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi <= lo {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

fn dir(angle_deg: f64) -> (f64, f64) {
    let r = angle_deg * PI / 180.0;
    (r.sin(), r.cos())
}

/// Hip, knee and ankle of one leg: hip-ankle direction `beta` from straight
/// down, knee flexion `phi` bending towards `side`.
fn leg(hip: (f64, f64), length: f64, beta: f64, phi: f64, side: f64) -> [(f64, f64); 3] {
    let seg = length / (2.0 * (phi.to_radians() / 2.0).cos());
    let t = dir(beta + side * phi / 2.0);
    let s = dir(beta - side * phi / 2.0);
    let knee = (hip.0 + seg * t.0, hip.1 + seg * t.1);
    let ankle = (knee.0 + seg * s.0, knee.1 + seg * s.1);
    [hip, knee, ankle]
}

/// Shoulder, elbow and wrist with elbow angle `psi`.
fn arm(shoulder: (f64, f64), upper: f64, fore: f64, delta: f64, psi: f64, side: f64) -> [(f64, f64); 3] {
    let u = dir(delta);
    let f = dir(delta + side * psi);
    let elbow = (shoulder.0 + upper * u.0, shoulder.1 + upper * u.1);
    let wrist = (elbow.0 + fore * f.0, elbow.1 + fore * f.1);
    [shoulder, elbow, wrist]
}

fn pick_sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

fn orientation(rng: &mut ChaCha8Rng, view: ViewClass, edge: bool) -> f64 {
    if edge {
        let choices: &[f64] = match view {
            ViewClass::Front => &[60.0, 300.0, 0.0],
            ViewClass::Lateral => &[60.5, 119.5, 240.5, 299.5],
            ViewClass::Back => &[120.0, 240.0],
        };
        return choices[rng.gen_range(0..choices.len())];
    }
    let a: f64 = match view {
        ViewClass::Front => rng.gen_range(-55.0..=55.0),
        ViewClass::Lateral => {
            let centre = if rng.gen_bool(0.5) { 90.0 } else { 270.0 };
            centre + rng.gen_range(-25.0..=25.0)
        }
        ViewClass::Back => 180.0 + rng.gen_range(-55.0..=55.0),
    };
    a.rem_euclid(360.0)
}

fn skeleton(rng: &mut ChaCha8Rng, g: &GroupSpec, r: &Ranges, b: &BBox) -> KeypointMap {
    let h = b.h;
    let cx = b.x + b.w / 2.0;
    let mut pts: Vec<(JointName, (f64, f64))> = vec![
        (JointName::Nose, (cx, b.y + 0.06 * h)),
        (JointName::EyeLeft, (cx - 0.02 * h, b.y + 0.05 * h)),
        (JointName::EyeRight, (cx + 0.02 * h, b.y + 0.05 * h)),
        (JointName::EarLeft, (cx - 0.04 * h, b.y + 0.06 * h)),
        (JointName::EarRight, (cx + 0.04 * h, b.y + 0.06 * h)),
    ];

    // arms
    let (mut psi_l, mut psi_r) = (0.0, 0.0);
    if let Some(straight) = r.arm_straight {
        psi_l = uniform(rng, straight);
        psi_r = uniform(rng, straight);
    }
    if g.elbows == ElbowStatus::Bent {
        let bent = uniform(rng, r.arm_bent.expect("validated"));
        if rng.gen_bool(0.5) {
            psi_l = bent;
        } else {
            psi_r = bent;
        }
    }
    let sy = b.y + 0.2 * h;
    let (ua, fa) = (0.15 * h, 0.13 * h);
    let left_arm = arm((cx - 0.1 * h, sy), ua, fa, -uniform(rng, (0.0, 10.0)), psi_l, pick_sign(rng));
    let right_arm = arm((cx + 0.1 * h, sy), ua, fa, uniform(rng, (0.0, 10.0)), psi_r, pick_sign(rng));
    for (joints, pts3) in [
        ([JointName::ShoulderLeft, JointName::ElbowLeft, JointName::WristLeft], left_arm),
        ([JointName::ShoulderRight, JointName::ElbowRight, JointName::WristRight], right_arm),
    ] {
        pts.extend(joints.into_iter().zip(pts3));
    }

    // legs
    let hy = b.y + 0.52 * h;
    let length = 0.43 * h;
    let (mut phi_l, mut phi_r) = (uniform(rng, r.knee_straight), uniform(rng, r.knee_straight));
    let (beta_l, beta_r);
    let open_stance = match (g.legs, r.knee_flexed, r.spread_open) {
        (LegStatus::NonAlignedStance, Some(_), Some(_)) => rng.gen_bool(0.5),
        (LegStatus::NonAlignedStance, None, Some(_)) => true,
        _ => false,
    };
    if open_stance {
        let theta = uniform(rng, r.spread_open.expect("checked"));
        beta_l = -theta / 2.0;
        beta_r = theta / 2.0;
    } else {
        let theta = uniform(rng, r.spread_closed);
        let tilt = uniform(rng, (-3.0, 3.0));
        let s = pick_sign(rng);
        beta_l = tilt - s * theta / 2.0;
        beta_r = tilt + s * theta / 2.0;
        if g.legs == LegStatus::NonAlignedStance {
            let phi = uniform(rng, r.knee_flexed.expect("validated"));
            if rng.gen_bool(0.5) {
                phi_l = phi;
            } else {
                phi_r = phi;
            }
        }
    }
    let left_leg = leg((cx - 0.05 * h, hy), length, beta_l, phi_l, pick_sign(rng));
    let right_leg = leg((cx + 0.05 * h, hy), length, beta_r, phi_r, pick_sign(rng));
    for (joints, pts3) in [
        ([JointName::HipLeft, JointName::KneeLeft, JointName::AnkleLeft], left_leg),
        ([JointName::HipRight, JointName::KneeRight, JointName::AnkleRight], right_leg),
    ] {
        pts.extend(joints.into_iter().zip(pts3));
    }

    let mut drop: Vec<JointName> = g.absent.clone();
    if g.legs == LegStatus::Unknown {
        drop.push(JointName::AnkleLeft);
    }
    if g.elbows == ElbowStatus::Unknown {
        drop.extend([JointName::ElbowLeft, JointName::ElbowRight]);
    }
    pts.into_iter()
        .filter(|(j, _)| !drop.contains(j))
        .map(|(j, (x, y))| (j, Keypoint::new(j, x, y, g.occluded.contains(&j))))
        .collect()
}

/// Builds a labelled scene from `spec`.
pub fn generate_scene(spec: &SynthSpec) -> Result<SynthScene> {
    let ranges = spec.ranges()?;
    spec.validate(&ranges)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(0);

    let mut slots: Vec<usize> = spec
        .groups
        .iter()
        .enumerate()
        .flat_map(|(i, g)| std::iter::repeat_n(i, g.count))
        .collect();
    // Fisher-Yates so images mix groups
    for i in (1..slots.len()).rev() {
        let j = rng.gen_range(0..=i);
        slots.swap(i, j);
    }

    let slot_w = f64::from(spec.image_width) / spec.per_image as f64;
    let mut images = Vec::new();
    let mut entries = Vec::new();
    for (img_idx, chunk) in slots.chunks(spec.per_image).enumerate() {
        let image_id = format!("synth_{img_idx:06}");
        let mut pedestrians = Vec::with_capacity(chunk.len());
        for (k, &gi) in chunk.iter().enumerate() {
            let g = &spec.groups[gi];
            let h = match g.size {
                SizeClass::Small => uniform(&mut rng, ranges.small_h),
                SizeClass::Large => uniform(&mut rng, ranges.large_h),
            };
            let w = BOX_ASPECT * h;
            let x = k as f64 * slot_w + uniform(&mut rng, (DET_JITTER * w, slot_w - (1.0 + 2.0 * DET_JITTER) * w));
            let y = uniform(&mut rng, (0.0, f64::from(spec.image_height) - h));
            let bbox = BBox::new(x, y, w, h);
            let keypoints = skeleton(&mut rng, g, &ranges, &bbox);
            let ped_id = format!("p{k}");
            entries.push(ManifestEntry {
                image_id: image_id.clone(),
                pedestrian_id: ped_id.clone(),
                group: gi,
                legs: g.legs,
                elbows: g.elbows,
                view: g.view,
                size: g.size,
            });
            pedestrians.push(PedestrianGt {
                id: ped_id,
                bbox,
                orientation_deg: orientation(&mut rng, g.view, spec.edge),
                keypoints,
            });
        }
        images.push(ImageRecord {
            image_id,
            width: spec.image_width,
            height: spec.image_height,
            pedestrians,
        });
    }

    Ok(SynthScene {
        dataset: Dataset { images },
        manifest: Manifest {
            seed: spec.seed,
            entries,
        },
    })
}

fn overlaps(a: &BBox, b: &BBox) -> bool {
    a.x < b.right() && b.x < a.right() && a.y < b.bottom() && b.y < a.bottom()
}

/// Plants detections for a generated scene: each ground truth is either
/// missed (per its group's [`MissSpec`]) or detected by a box with IoU of at
/// least 0.9. Background false positives never overlap a ground truth.
pub fn plant_detections(scene: &SynthScene, spec: &SynthSpec) -> Result<Detections> {
    let ranges = spec.ranges()?;
    spec.validate(&ranges)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);

    // manifest order is dataset order
    let mut by_group: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, e) in scene.manifest.entries.iter().enumerate() {
        by_group.entry(e.group).or_default().push(i);
    }
    let mut missed = vec![false; scene.manifest.entries.len()];
    for (gi, members) in &by_group {
        let g = spec
            .groups
            .get(*gi)
            .ok_or_else(|| spec_err(format!("manifest refers to unknown group {gi}")))?;
        match g.miss {
            MissSpec::Exact(k) => {
                if k > members.len() {
                    return Err(spec_err(format!("group {gi}: exact miss count {k} exceeds {} instances", members.len())));
                }
                for i in index::sample(&mut rng, members.len(), k) {
                    missed[members[i]] = true;
                }
            }
            MissSpec::Probability(p) => {
                for &m in members {
                    missed[m] = rng.gen::<f64>() < p;
                }
            }
        }
    }

    let mut dets = Detections::new();
    let mut idx = 0;
    for img in &scene.dataset.images {
        let mut out = Vec::new();
        for ped in &img.pedestrians {
            let entry = &scene.manifest.entries[idx];
            if !missed[idx] {
                let b = ped.bbox;
                let dx = rng.gen_range(-DET_JITTER..=DET_JITTER) * b.w;
                let dy = rng.gen_range(-DET_JITTER..=DET_JITTER) * b.h;
                out.push(DetectionRecord::new(BBox::new(b.x + dx, b.y + dy, b.w, b.h), spec.groups[entry.group].score));
            }
            idx += 1;
        }
        for _ in 0..spec.background_fp_per_image {
            for _attempt in 0..50 {
                let h = rng.gen_range(20.0..=40.0);
                let w = h * BOX_ASPECT;
                let b = BBox::new(
                    rng.gen_range(0.0..=f64::from(img.width) - w),
                    rng.gen_range(0.0..=f64::from(img.height) - h),
                    w,
                    h,
                );
                if !img.pedestrians.iter().any(|p| overlaps(&p.bbox, &b)) {
                    out.push(DetectionRecord::new(b, spec.background_score));
                    break;
                }
            }
        }
        dets.insert(img.image_id.clone(), out);
    }
    Ok(dets)
}
