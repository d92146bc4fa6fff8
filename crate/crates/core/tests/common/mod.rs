#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use posefair::model::{BBox, DetectionRecord, JointName, Keypoint, KeypointMap, PedestrianGt};
use posefair::pose::{ElbowStatus, LegStatus, ViewClass};
use posefair::synth::{GroupSpec, MissSpec, SynthSpec};
use posefair::SizeClass;
use rand::Rng;

pub fn gt(id: &str, bbox: BBox) -> PedestrianGt {
    PedestrianGt {
        id: id.to_string(),
        bbox,
        orientation_deg: 0.0,
        keypoints: KeypointMap::new(),
    }
}

/// Integer-valued boxes on a small canvas, so IoU ties and exact threshold
/// hits actually happen.
pub fn random_box<R: Rng>(rng: &mut R) -> BBox {
    let x = rng.gen_range(0..20) as f64;
    let y = rng.gen_range(0..20) as f64;
    let w = rng.gen_range(1..12) as f64;
    let h = rng.gen_range(1..12) as f64;
    BBox::new(x, y, w, h)
}

pub fn random_scene<R: Rng>(rng: &mut R) -> (Vec<PedestrianGt>, Vec<DetectionRecord>) {
    let n_gt = rng.gen_range(0..=6);
    let n_det = rng.gen_range(0..=8);
    let gts: Vec<_> = (0..n_gt).map(|i| gt(&format!("g{i}"), random_box(rng))).collect();
    let dets = (0..n_det)
        .map(|_| {
            // jitter an existing gt half the time so matches are common
            let bbox = if !gts.is_empty() && rng.gen_bool(0.5) {
                let g: &PedestrianGt = &gts[rng.gen_range(0..gts.len())];
                BBox::new(
                    g.bbox.x + rng.gen_range(-1..=1) as f64,
                    g.bbox.y + rng.gen_range(-1..=1) as f64,
                    (g.bbox.w + rng.gen_range(-1..=1) as f64).max(1.0),
                    (g.bbox.h + rng.gen_range(-1..=1) as f64).max(1.0),
                )
            } else {
                random_box(rng)
            };
            DetectionRecord::new(bbox, rng.gen_range(0..5) as f64 / 4.0)
        })
        .collect();
    (gts, dets)
}

pub struct MatchSets {
    pub tp: BTreeSet<(usize, String)>,
    pub fp: BTreeSet<usize>,
    pub fn_ids: BTreeSet<String>,
}

fn reference_iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let ih = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    inter / (a.w * a.h + b.w * b.h - inter)
}

/// Straight transcription of the matching rule: repeatedly take the highest
/// scoring unprocessed detection (earliest on ties) and give it the best
/// free ground truth (earliest on ties) at or above the threshold.
pub fn reference_match(dets: &[DetectionRecord], gts: &[PedestrianGt], thr: f64) -> MatchSets {
    let mut pending: Vec<usize> = (0..dets.len()).collect();
    let mut free: Vec<bool> = vec![true; gts.len()];
    let mut out = MatchSets {
        tp: BTreeSet::new(),
        fp: BTreeSet::new(),
        fn_ids: BTreeSet::new(),
    };
    while !pending.is_empty() {
        let mut pos = 0;
        for k in 1..pending.len() {
            if dets[pending[k]].score > dets[pending[pos]].score {
                pos = k;
            }
        }
        let d = pending.remove(pos);
        let mut best: Option<usize> = None;
        for g in 0..gts.len() {
            if !free[g] {
                continue;
            }
            let v = reference_iou(&dets[d].bbox, &gts[g].bbox);
            if v < thr {
                continue;
            }
            if best.is_none_or(|b| v > reference_iou(&dets[d].bbox, &gts[b].bbox)) {
                best = Some(g);
            }
        }
        match best {
            Some(g) => {
                free[g] = false;
                out.tp.insert((d, gts[g].id.clone()));
            }
            None => {
                out.fp.insert(d);
            }
        }
    }
    for (g, f) in free.iter().enumerate() {
        if *f {
            out.fn_ids.insert(gts[g].id.clone());
        }
    }
    out
}

pub fn kp(joint: JointName, x: f64, y: f64) -> Keypoint {
    Keypoint::new(joint, x, y, false)
}

/// Loosely human-shaped skeleton with random limb directions. Some joints
/// are dropped now and then so every label value, Unknown included, shows up.
pub fn random_skeleton<R: Rng>(rng: &mut R) -> KeypointMap {
    use JointName::*;
    let mut m = BTreeMap::new();
    let put = |m: &mut KeypointMap, j: JointName, x: f64, y: f64| {
        m.insert(j, kp(j, x, y));
    };
    for (hip, knee, ankle, hx) in [(HipLeft, KneeLeft, AnkleLeft, 10.0), (HipRight, KneeRight, AnkleRight, -10.0)] {
        let h = (hx + rng.gen_range(-8.0..8.0), rng.gen_range(-5.0..5.0));
        let k = (h.0 + rng.gen_range(-25.0..25.0), h.1 + rng.gen_range(30.0..60.0));
        let a = (k.0 + rng.gen_range(-25.0..25.0), k.1 + rng.gen_range(30.0..60.0));
        put(&mut m, hip, h.0, h.1);
        put(&mut m, knee, k.0, k.1);
        put(&mut m, ankle, a.0, a.1);
    }
    for (sh, el, wr, sx) in [(ShoulderLeft, ElbowLeft, WristLeft, 18.0), (ShoulderRight, ElbowRight, WristRight, -18.0)] {
        let s = (sx + rng.gen_range(-5.0..5.0), -70.0 + rng.gen_range(-5.0..5.0));
        let e = (s.0 + rng.gen_range(-30.0..30.0), s.1 + rng.gen_range(-10.0..35.0));
        let w = (e.0 + rng.gen_range(-30.0..30.0), e.1 + rng.gen_range(-30.0..30.0));
        put(&mut m, sh, s.0, s.1);
        put(&mut m, el, e.0, e.1);
        put(&mut m, wr, w.0, w.1);
    }
    if rng.gen_bool(0.05) {
        m.remove(&[AnkleLeft, KneeRight, HipLeft][rng.gen_range(0..3)]);
    }
    if rng.gen_bool(0.05) {
        m.remove(&ElbowLeft);
        m.remove(&ElbowRight);
    }
    m
}

pub fn transform(m: &KeypointMap, f: impl Fn(f64, f64) -> (f64, f64)) -> KeypointMap {
    m.values()
        .map(|k| {
            let (x, y) = f(k.x, k.y);
            (k.joint, Keypoint::new(k.joint, x, y, k.occluded))
        })
        .collect()
}

/// Reflects about the vertical axis and swaps left/right names.
pub fn mirror(m: &KeypointMap) -> KeypointMap {
    m.values()
        .map(|k| {
            let j = k.joint.mirrored();
            (j, Keypoint::new(j, -k.x, k.y, k.occluded))
        })
        .collect()
}

fn head() -> Vec<JointName> {
    use JointName::*;
    vec![EyeLeft, EyeRight, EarLeft, EarRight, Nose]
}

fn upper() -> Vec<JointName> {
    use JointName::*;
    vec![ShoulderLeft, ShoulderRight, ElbowLeft, ElbowRight, WristLeft, WristRight]
}

fn lower() -> Vec<JointName> {
    use JointName::*;
    vec![HipLeft, HipRight, KneeLeft, KneeRight, AnkleLeft, AnkleRight]
}

/// Factorial scene with additive planted miss-rates: aligned stance, straight
/// arms, lateral views and occluded lower body miss more often. Supports
/// follow a street-scene mix (non-aligned, straight arms and frontal views
/// dominate).
pub fn street_bias_spec(total: usize, seed: u64) -> SynthSpec {
    let legs = [(LegStatus::AlignedStance, 0.4, 0.10), (LegStatus::NonAlignedStance, 0.6, 0.0)];
    let elbows = [(ElbowStatus::Straight, 0.75, 0.08), (ElbowStatus::Bent, 0.25, 0.0)];
    let views = [(ViewClass::Front, 0.40, 0.05), (ViewClass::Lateral, 0.31, 0.10), (ViewClass::Back, 0.29, 0.0)];
    let occlusion: [(Vec<JointName>, f64, f64); 4] =
        [(vec![], 0.85, 0.0), (head(), 0.05, 0.10), (upper(), 0.05, 0.20), (lower(), 0.05, 0.40)];
    let sizes = [(SizeClass::Large, 0.5), (SizeClass::Small, 0.5)];

    let mut groups = Vec::new();
    for &(l, pl, ml) in &legs {
        for &(e, pe, me) in &elbows {
            for &(v, pv, mv) in &views {
                for (occ, po, mo) in &occlusion {
                    for &(s, ps) in &sizes {
                        let count = (total as f64 * pl * pe * pv * po * ps).round() as usize;
                        let rate = 0.05 + ml + me + mv + mo;
                        groups.push(GroupSpec {
                            count,
                            legs: l,
                            elbows: e,
                            view: v,
                            size: s,
                            occluded: occ.clone(),
                            miss: MissSpec::Exact((count as f64 * rate).round() as usize),
                            ..GroupSpec::default()
                        });
                    }
                }
            }
        }
    }
    SynthSpec {
        seed,
        groups,
        ..SynthSpec::default()
    }
}
