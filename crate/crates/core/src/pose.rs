//! Pose attribute labelling from 2D keypoints and body orientation.
//!
//! Image coordinates are y-down throughout: a smaller `y` is higher in the
//! image.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Sub;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::{size_class, FilterConfig};
use crate::model::{JointName, KeypointMap, PedestrianGt, Point, SizeClass};

/// Cross products of unit directions at or below this magnitude count as parallel.
pub const PARALLEL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl Sub for Point {
    type Output = Vec2;

    fn sub(self, rhs: Point) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Unsigned angle between two vectors in degrees, within `[0, 180]`.
///
/// The cosine is clamped to `[-1, 1]` before `acos` so nearly collinear
/// inputs never produce NaN.
pub fn vec_angle(a: Vec2, b: Vec2) -> Result<f64> {
    let (na, nb) = (a.norm(), b.norm());
    if !(na > 0.0 && nb > 0.0) || !na.is_finite() || !nb.is_finite() {
        return Err(Error::DegenerateGeometry(format!(
            "angle undefined for vectors ({}, {}) and ({}, {})",
            a.x, a.y, b.x, b.y
        )));
    }
    let cos = (a.dot(b) / (na * nb)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}

/// Knee flexion: angle between thigh (knee - hip) and shank (ankle - knee).
/// Zero for a straight leg.
pub fn knee_flexion(hip: Point, knee: Point, ankle: Point) -> Result<f64> {
    if hip == knee || knee == ankle || hip == ankle {
        return Err(Error::DegenerateGeometry("coincident leg keypoints".into()));
    }
    vec_angle(knee - hip, ankle - knee)
}

/// Angle between the left and right hip-to-ankle vectors.
pub fn hip_ankle_separation(
    hip_left: Point,
    ankle_left: Point,
    hip_right: Point,
    ankle_right: Point,
) -> Result<f64> {
    vec_angle(ankle_left - hip_left, ankle_right - hip_right)
}

/// Intersection of the infinite lines `p1 + t*d1` and `p2 + s*d2`.
///
/// Returns `None` for parallel lines (see [`PARALLEL_EPS`]) and for zero
/// direction vectors.
pub fn line_intersection(p1: Point, d1: Vec2, p2: Point, d2: Vec2) -> Option<Point> {
    let (n1, n2) = (d1.norm(), d2.norm());
    if n1 == 0.0 || n2 == 0.0 {
        return None;
    }
    let denom = d1.cross(d2);
    if (denom / (n1 * n2)).abs() <= PARALLEL_EPS {
        return None;
    }
    let t = (p2 - p1).cross(d2) / denom;
    Some(Point::new(p1.x + t * d1.x, p1.y + t * d1.y))
}

/// Angle thresholds for the leg and elbow rules, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleThresholds {
    /// A knee flexed by more than this marks a non-aligned stance.
    pub knee_flexion_deg: f64,
    /// Hip-ankle separation above this (with the legs crossing above the
    /// ankles) marks a non-aligned stance.
    pub hip_ankle_sep_deg: f64,
    /// Elbow angles at or above this are bent.
    pub elbow_bend_deg: f64,
}

impl Default for AngleThresholds {
    fn default() -> Self {
        AngleThresholds {
            knee_flexion_deg: 12.0,
            hip_ankle_sep_deg: 10.0,
            elbow_bend_deg: 90.0,
        }
    }
}

impl AngleThresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("knee_flexion_deg", self.knee_flexion_deg),
            ("hip_ankle_sep_deg", self.hip_ankle_sep_deg),
            ("elbow_bend_deg", self.elbow_bend_deg),
        ] {
            if !(v > 0.0 && v < 180.0) {
                return Err(Error::validation(
                    "angle thresholds",
                    format!("{name} = {v} must lie in (0, 180)"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegStatus {
    AlignedStance,
    NonAlignedStance,
    Unknown,
}

impl LegStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LegStatus::AlignedStance => "aligned",
            LegStatus::NonAlignedStance => "non_aligned",
            LegStatus::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElbowStatus {
    Bent,
    Straight,
    Unknown,
}

impl ElbowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ElbowStatus::Bent => "bent",
            ElbowStatus::Straight => "straight",
            ElbowStatus::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewClass {
    Front,
    Lateral,
    Back,
}

impl ViewClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ViewClass::Front => "front",
            ViewClass::Lateral => "lateral",
            ViewClass::Back => "back",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Visible,
    Occluded,
    Absent,
}

impl Visibility {
    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Visible => "visible",
            Visibility::Occluded => "occluded",
            Visibility::Absent => "absent",
        }
    }
}

macro_rules! display_via_as_str {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    )*};
}

display_via_as_str!(LegStatus, ElbowStatus, ViewClass, Visibility);

fn point_of(kps: &KeypointMap, joint: JointName) -> Option<Point> {
    kps.get(&joint).map(|k| k.point())
}

/// Leg stance label.
///
/// Non-aligned when either knee is flexed beyond the knee threshold, or when
/// the hip-ankle vectors open wider than the separation threshold and their
/// lines cross above the higher ankle. Any missing or degenerate leg keypoint
/// yields `Unknown`.
pub fn classify_legs(kps: &KeypointMap, th: &AngleThresholds) -> LegStatus {
    use JointName::*;
    let joints = [HipLeft, KneeLeft, AnkleLeft, HipRight, KneeRight, AnkleRight];
    let mut pts = [Point::default(); 6];
    for (slot, joint) in pts.iter_mut().zip(joints) {
        match point_of(kps, joint) {
            Some(p) => *slot = p,
            None => return LegStatus::Unknown,
        }
    }
    let [hl, kl, al, hr, kr, ar] = pts;

    let (Ok(phi_left), Ok(phi_right), Ok(theta)) = (
        knee_flexion(hl, kl, al),
        knee_flexion(hr, kr, ar),
        hip_ankle_separation(hl, al, hr, ar),
    ) else {
        return LegStatus::Unknown;
    };

    if phi_left > th.knee_flexion_deg || phi_right > th.knee_flexion_deg {
        return LegStatus::NonAlignedStance;
    }
    if theta > th.hip_ankle_sep_deg {
        let ankle_level = al.y.min(ar.y);
        if let Some(cross) = line_intersection(hl, al - hl, hr, ar - hr) {
            if cross.y < ankle_level {
                return LegStatus::NonAlignedStance;
            }
        }
    }
    LegStatus::AlignedStance
}

fn elbow_angle(kps: &KeypointMap, shoulder: JointName, elbow: JointName, wrist: JointName) -> Option<f64> {
    let (s, e, w) = (point_of(kps, shoulder)?, point_of(kps, elbow)?, point_of(kps, wrist)?);
    if s == e || e == w {
        return None;
    }
    vec_angle(e - s, w - e).ok()
}

/// Elbow label from the larger of the computable left/right elbow angles.
pub fn classify_elbows(kps: &KeypointMap, th: &AngleThresholds) -> ElbowStatus {
    use JointName::*;
    let sides = [
        elbow_angle(kps, ShoulderLeft, ElbowLeft, WristLeft),
        elbow_angle(kps, ShoulderRight, ElbowRight, WristRight),
    ];
    match sides.into_iter().flatten().reduce(f64::max) {
        None => ElbowStatus::Unknown,
        Some(psi) if psi >= th.elbow_bend_deg => ElbowStatus::Bent,
        Some(_) => ElbowStatus::Straight,
    }
}

/// Orientation bin; `a = 0` faces the camera.
pub fn classify_view(orientation_deg: f64) -> Result<ViewClass> {
    let a = orientation_deg;
    if !(a.is_finite() && (0.0..360.0).contains(&a)) {
        return Err(Error::Domain(format!("orientation {a} outside [0, 360)")));
    }
    Ok(if a <= 60.0 || a >= 300.0 {
        ViewClass::Front
    } else if (120.0..=240.0).contains(&a) {
        ViewClass::Back
    } else {
        ViewClass::Lateral
    })
}

/// Visibility of each of the 17 joints.
pub fn joint_visibility(kps: &KeypointMap) -> BTreeMap<JointName, Visibility> {
    JointName::ALL
        .iter()
        .map(|&j| {
            let vis = match kps.get(&j) {
                None => Visibility::Absent,
                Some(k) if k.occluded => Visibility::Occluded,
                Some(_) => Visibility::Visible,
            };
            (j, vis)
        })
        .collect()
}

/// All derived labels of one pedestrian.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSet {
    pub legs: LegStatus,
    pub elbows: ElbowStatus,
    pub view: ViewClass,
    /// Exactly one entry per joint.
    pub joint_occluded: BTreeMap<JointName, Visibility>,
    pub size: SizeClass,
}

pub fn annotate(ped: &PedestrianGt, th: &AngleThresholds, cfg: &FilterConfig) -> Result<AttributeSet> {
    Ok(AttributeSet {
        legs: classify_legs(&ped.keypoints, th),
        elbows: classify_elbows(&ped.keypoints, th),
        view: classify_view(ped.orientation_deg)?,
        joint_occluded: joint_visibility(&ped.keypoints),
        size: size_class(ped, cfg),
    })
}
