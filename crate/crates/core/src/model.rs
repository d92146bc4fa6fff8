//! Core data model: joints, keypoints, boxes, ground truth and detections.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The 17 annotated body joints, in annotation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointName {
    Nose,
    EyeLeft,
    EyeRight,
    EarLeft,
    EarRight,
    ShoulderLeft,
    ShoulderRight,
    ElbowLeft,
    ElbowRight,
    WristLeft,
    WristRight,
    HipLeft,
    HipRight,
    KneeLeft,
    KneeRight,
    AnkleLeft,
    AnkleRight,
}

impl JointName {
    pub const ALL: [JointName; 17] = [
        JointName::Nose,
        JointName::EyeLeft,
        JointName::EyeRight,
        JointName::EarLeft,
        JointName::EarRight,
        JointName::ShoulderLeft,
        JointName::ShoulderRight,
        JointName::ElbowLeft,
        JointName::ElbowRight,
        JointName::WristLeft,
        JointName::WristRight,
        JointName::HipLeft,
        JointName::HipRight,
        JointName::KneeLeft,
        JointName::KneeRight,
        JointName::AnkleLeft,
        JointName::AnkleRight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            JointName::Nose => "nose",
            JointName::EyeLeft => "eye_left",
            JointName::EyeRight => "eye_right",
            JointName::EarLeft => "ear_left",
            JointName::EarRight => "ear_right",
            JointName::ShoulderLeft => "shoulder_left",
            JointName::ShoulderRight => "shoulder_right",
            JointName::ElbowLeft => "elbow_left",
            JointName::ElbowRight => "elbow_right",
            JointName::WristLeft => "wrist_left",
            JointName::WristRight => "wrist_right",
            JointName::HipLeft => "hip_left",
            JointName::HipRight => "hip_right",
            JointName::KneeLeft => "knee_left",
            JointName::KneeRight => "knee_right",
            JointName::AnkleLeft => "ankle_left",
            JointName::AnkleRight => "ankle_right",
        }
    }

    /// The same joint on the other side of the body. The nose maps to itself.
    pub fn mirrored(self) -> JointName {
        use JointName::*;
        match self {
            Nose => Nose,
            EyeLeft => EyeRight,
            EyeRight => EyeLeft,
            EarLeft => EarRight,
            EarRight => EarLeft,
            ShoulderLeft => ShoulderRight,
            ShoulderRight => ShoulderLeft,
            ElbowLeft => ElbowRight,
            ElbowRight => ElbowLeft,
            WristLeft => WristRight,
            WristRight => WristLeft,
            HipLeft => HipRight,
            HipRight => HipLeft,
            KneeLeft => KneeRight,
            KneeRight => KneeLeft,
            AnkleLeft => AnkleRight,
            AnkleRight => AnkleLeft,
        }
    }
}

impl fmt::Display for JointName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownJoint(pub String);

impl fmt::Display for UnknownJoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown joint name {:?}", self.0)
    }
}

impl std::error::Error for UnknownJoint {}

impl FromStr for JointName {
    type Err = UnknownJoint;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        JointName::ALL
            .iter()
            .copied()
            .find(|j| j.as_str() == s)
            .ok_or_else(|| UnknownJoint(s.to_string()))
    }
}

/// A point in image coordinates (x rightward, y downward), in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub joint: JointName,
    pub x: f64,
    pub y: f64,
    pub occluded: bool,
}

impl Keypoint {
    pub fn new(joint: JointName, x: f64, y: f64, occluded: bool) -> Self {
        Keypoint {
            joint,
            x,
            y,
            occluded,
        }
    }

    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Keypoints of one pedestrian, at most one per joint.
pub type KeypointMap = BTreeMap<JointName, Keypoint>;

/// Axis-aligned box: left, top, width, height in pixels.
///
/// Serialized as the array `[x, y, w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_valid(&self) -> bool {
        [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite()) && self.w > 0.0 && self.h > 0.0
    }
}

impl From<[f64; 4]> for BBox {
    fn from(v: [f64; 4]) -> Self {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

/// One annotated ground-truth pedestrian.
#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianGt {
    /// Unique within its image.
    pub id: String,
    pub bbox: BBox,
    /// Body orientation in `[0, 360)`; 0 faces the camera.
    pub orientation_deg: f64,
    /// May be partial; missing joints are simply absent.
    pub keypoints: KeypointMap,
}

impl PedestrianGt {
    pub fn keypoint(&self, joint: JointName) -> Option<&Keypoint> {
        self.keypoints.get(&joint)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub bbox: BBox,
    /// Confidence in `[0, 1]`.
    pub score: f64,
}

impl DetectionRecord {
    pub fn new(bbox: BBox, score: f64) -> Self {
        DetectionRecord { bbox, score }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub pedestrians: Vec<PedestrianGt>,
}

/// A validated ground-truth dataset. Image order follows the source file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub images: Vec<ImageRecord>,
}

impl Dataset {
    pub fn num_pedestrians(&self) -> usize {
        self.images.iter().map(|img| img.pedestrians.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// Detector outputs keyed by image id.
pub type Detections = BTreeMap<String, Vec<DetectionRecord>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeClass {
    Small,
    Large,
}

impl SizeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SizeClass::Small => "small",
            SizeClass::Large => "large",
        }
    }
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joint_names_round_trip_and_are_closed() {
        assert_eq!(JointName::ALL.len(), 17);
        for j in JointName::ALL {
            assert_eq!(j.as_str().parse::<JointName>().unwrap(), j);
            assert_eq!(j.mirrored().mirrored(), j);
        }
        assert!("neck".parse::<JointName>().is_err());
        assert!("Nose".parse::<JointName>().is_err());
    }

    #[test]
    fn serde_names_match_display() {
        for j in JointName::ALL {
            let s = serde_json::to_string(&j).unwrap();
            assert_eq!(s, format!("\"{j}\""));
        }
    }

    #[test]
    fn bbox_serializes_as_array() {
        let b = BBox::new(1.0, 2.5, 3.0, 4.0);
        assert_eq!(serde_json::to_string(&b).unwrap(), "[1.0,2.5,3.0,4.0]");
        let back: BBox = serde_json::from_str("[1,2.5,3,4]").unwrap();
        assert_eq!(back, b);
    }
}
