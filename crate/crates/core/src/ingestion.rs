//! Reading, validating and filtering ground-truth and detection files.
//!
//! Two JSON formats are supported.
//!
//! Ground truth (GT-JSON):
//!
//! ```json
//! {"images": [{"image_id": "img0", "width": 1920, "height": 1024,
//!   "pedestrians": [{"id": "p0", "bbox": [x, y, w, h], "orientation_deg": 12.5,
//!     "keypoints": [{"joint": "nose", "x": 10.0, "y": 20.0, "occluded": false}]}]}]}
//! ```
//!
//! Detections (DET-JSON):
//!
//! ```json
//! {"detections": {"img0": [{"bbox": [x, y, w, h], "score": 0.93}]}}
//! ```
//!
//! Field order is irrelevant. Keypoints are emitted in canonical joint order
//! when serializing.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    BBox, Dataset, DetectionRecord, Detections, ImageRecord, JointName, Keypoint, KeypointMap,
    PedestrianGt, SizeClass,
};

/// Height thresholds for instance filtering and the small/large split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Instances must be strictly taller than this to be evaluated.
    pub min_height_px: f64,
    /// Instances at least this tall are `large`.
    pub size_split_px: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_height_px: 60.0,
            size_split_px: 110.0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.min_height_px.is_finite()
            && self.size_split_px.is_finite()
            && self.min_height_px > 0.0
            && self.min_height_px < self.size_split_px;
        if ok {
            Ok(())
        } else {
            Err(Error::validation(
                "filter config",
                format!(
                    "need 0 < min_height_px ({}) < size_split_px ({})",
                    self.min_height_px, self.size_split_px
                ),
            ))
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GtFile {
    images: Vec<GtImage>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GtImage {
    image_id: String,
    width: u32,
    height: u32,
    pedestrians: Vec<GtPedestrian>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GtPedestrian {
    id: String,
    bbox: BBox,
    orientation_deg: f64,
    keypoints: Vec<GtKeypoint>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GtKeypoint {
    joint: String,
    x: f64,
    y: f64,
    occluded: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct DetFile {
    detections: BTreeMap<String, Vec<DetectionRecord>>,
}

/// Parses and validates a GT-JSON document.
pub fn parse_ground_truth(raw: &[u8]) -> Result<Dataset> {
    let file: GtFile = serde_json::from_slice(raw).map_err(|e| Error::parse("GT-JSON", &e))?;

    let mut seen_images = HashSet::new();
    let mut images = Vec::with_capacity(file.images.len());
    for (idx, img) in file.images.into_iter().enumerate() {
        if !seen_images.insert(img.image_id.clone()) {
            return Err(Error::validation(
                format!("images[{idx}]"),
                format!("duplicate image_id {:?}", img.image_id),
            ));
        }
        images.push(validate_image(img)?);
    }
    Ok(Dataset { images })
}

fn validate_image(img: GtImage) -> Result<ImageRecord> {
    let locus = format!("image {:?}", img.image_id);
    if img.width == 0 || img.height == 0 {
        return Err(Error::validation(locus, "width and height must be positive"));
    }
    let (w, h) = (f64::from(img.width), f64::from(img.height));

    let mut seen = HashSet::new();
    let mut pedestrians = Vec::with_capacity(img.pedestrians.len());
    for ped in img.pedestrians {
        let locus = format!("image {:?}, pedestrian {:?}", img.image_id, ped.id);
        if !seen.insert(ped.id.clone()) {
            return Err(Error::validation(locus, "duplicate pedestrian id"));
        }
        let b = ped.bbox;
        if !b.is_valid() {
            return Err(Error::validation(
                locus,
                format!("bbox {:?} must be finite with w > 0 and h > 0", <[f64; 4]>::from(b)),
            ));
        }
        if b.x < -w || b.right() > 2.0 * w || b.y < -h || b.bottom() > 2.0 * h {
            return Err(Error::validation(
                locus,
                format!("bbox {:?} lies too far outside the {}x{} image", <[f64; 4]>::from(b), img.width, img.height),
            ));
        }
        if !(ped.orientation_deg.is_finite() && (0.0..360.0).contains(&ped.orientation_deg)) {
            return Err(Error::validation(
                locus,
                format!("orientation_deg {} must lie in [0, 360)", ped.orientation_deg),
            ));
        }

        let mut keypoints = KeypointMap::new();
        for kp in ped.keypoints {
            let joint: JointName = kp
                .joint
                .parse()
                .map_err(|e: crate::model::UnknownJoint| Error::validation(locus.clone(), e.to_string()))?;
            if !(kp.x.is_finite() && kp.y.is_finite()) {
                return Err(Error::validation(locus, format!("keypoint {joint} has non-finite coordinates")));
            }
            if keypoints
                .insert(joint, Keypoint::new(joint, kp.x, kp.y, kp.occluded))
                .is_some()
            {
                return Err(Error::validation(locus, format!("keypoint {joint} given twice")));
            }
        }

        pedestrians.push(PedestrianGt {
            id: ped.id,
            bbox: b,
            orientation_deg: ped.orientation_deg,
            keypoints,
        });
    }

    Ok(ImageRecord {
        image_id: img.image_id,
        width: img.width,
        height: img.height,
        pedestrians,
    })
}

/// Parses and validates a DET-JSON document.
///
/// Detections for images that have no ground truth are kept; downstream they
/// count as false positives against an empty image.
pub fn parse_detections(raw: &[u8]) -> Result<Detections> {
    let file: DetFile = serde_json::from_slice(raw).map_err(|e| Error::parse("DET-JSON", &e))?;
    for (image_id, dets) in &file.detections {
        for (i, det) in dets.iter().enumerate() {
            let locus = format!("detections[{image_id:?}][{i}]");
            if !det.bbox.is_valid() {
                return Err(Error::validation(locus, "bbox must be finite with w > 0 and h > 0"));
            }
            if !(det.score.is_finite() && (0.0..=1.0).contains(&det.score)) {
                return Err(Error::validation(locus, format!("score {} outside [0, 1]", det.score)));
            }
        }
    }
    Ok(file.detections)
}

/// Serializes a dataset to GT-JSON.
pub fn serialize_ground_truth(dataset: &Dataset) -> Vec<u8> {
    let file = GtFile {
        images: dataset
            .images
            .iter()
            .map(|img| GtImage {
                image_id: img.image_id.clone(),
                width: img.width,
                height: img.height,
                pedestrians: img
                    .pedestrians
                    .iter()
                    .map(|p| GtPedestrian {
                        id: p.id.clone(),
                        bbox: p.bbox,
                        orientation_deg: p.orientation_deg,
                        keypoints: p
                            .keypoints
                            .values()
                            .map(|k| GtKeypoint {
                                joint: k.joint.as_str().to_string(),
                                x: k.x,
                                y: k.y,
                                occluded: k.occluded,
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_vec(&file).expect("GT-JSON serialization cannot fail")
}

/// Serializes detections to DET-JSON.
pub fn serialize_detections(detections: &Detections) -> Vec<u8> {
    #[derive(Serialize)]
    struct DetFileRef<'a> {
        detections: &'a Detections,
    }
    serde_json::to_vec(&DetFileRef { detections }).expect("DET-JSON serialization cannot fail")
}

/// Result of [`filter_instances`].
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub dataset: Dataset,
    /// Pedestrians dropped for being too short.
    pub removed: usize,
}

/// Drops pedestrians whose box is not strictly taller than `min_height_px`.
///
/// Removed instances disappear entirely; they do not become ignore regions.
pub fn filter_instances(dataset: &Dataset, cfg: &FilterConfig) -> Filtered {
    let mut removed = 0;
    let images = dataset
        .images
        .iter()
        .map(|img| {
            let before = img.pedestrians.len();
            let pedestrians: Vec<_> = img
                .pedestrians
                .iter()
                .filter(|p| p.bbox.h > cfg.min_height_px)
                .cloned()
                .collect();
            removed += before - pedestrians.len();
            ImageRecord {
                pedestrians,
                ..img.clone()
            }
        })
        .collect();
    Filtered {
        dataset: Dataset { images },
        removed,
    }
}

pub fn size_class(ped: &PedestrianGt, cfg: &FilterConfig) -> SizeClass {
    if ped.bbox.h < cfg.size_split_px {
        SizeClass::Small
    } else {
        SizeClass::Large
    }
}

/// Keeps only pedestrians classified as [`SizeClass::Large`].
pub fn large_only(dataset: &Dataset, cfg: &FilterConfig) -> Dataset {
    Dataset {
        images: dataset
            .images
            .iter()
            .map(|img| ImageRecord {
                pedestrians: img
                    .pedestrians
                    .iter()
                    .filter(|p| size_class(p, cfg) == SizeClass::Large)
                    .cloned()
                    .collect(),
                ..img.clone()
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ped_json(id: &str, h: f64, orientation: f64) -> String {
        format!(
            r#"{{"id":"{id}","bbox":[10,10,40,{h}],"orientation_deg":{orientation},"keypoints":[]}}"#
        )
    }

    fn gt_with(peds: &[String]) -> String {
        format!(
            r#"{{"images":[{{"image_id":"a","width":640,"height":480,"pedestrians":[{}]}}]}}"#,
            peds.join(",")
        )
    }

    #[test]
    fn minimal_file() {
        let ds = parse_ground_truth(gt_with(&[ped_json("p", 100.0, 0.0)]).as_bytes()).unwrap();
        assert_eq!(ds.images.len(), 1);
        assert_eq!(ds.images[0].pedestrians.len(), 1);
        assert!(ds.images[0].pedestrians[0].keypoints.is_empty());
    }

    #[test]
    fn orientation_360_rejected() {
        let err = parse_ground_truth(gt_with(&[ped_json("p7", 100.0, 360.0)]).as_bytes()).unwrap_err();
        match err {
            Error::Validation { locus, .. } => assert!(locus.contains("p7"), "{locus}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_ground_truth(gt_with(&[ped_json("p", 100.0, 359.999)]).as_bytes()).is_ok());
        assert!(parse_ground_truth(gt_with(&[ped_json("p", 100.0, -0.5)]).as_bytes()).is_err());
    }

    #[test]
    fn duplicate_image_id_rejected() {
        let raw = r#"{"images":[
            {"image_id":"a","width":10,"height":10,"pedestrians":[]},
            {"image_id":"a","width":10,"height":10,"pedestrians":[]}]}"#;
        assert!(matches!(
            parse_ground_truth(raw.as_bytes()),
            Err(Error::Validation { .. })
        ));
    }

    #[test]
    fn duplicate_pedestrian_and_joint_rejected() {
        let raw = gt_with(&[ped_json("p", 100.0, 0.0), ped_json("p", 90.0, 0.0)]);
        assert!(matches!(parse_ground_truth(raw.as_bytes()), Err(Error::Validation { .. })));

        let raw = gt_with(&[r#"{"id":"q","bbox":[0,0,10,80],"orientation_deg":0,"keypoints":[
            {"joint":"nose","x":1,"y":1,"occluded":false},
            {"joint":"nose","x":2,"y":2,"occluded":true}]}"#
            .to_string()]);
        assert!(matches!(parse_ground_truth(raw.as_bytes()), Err(Error::Validation { .. })));
    }

    #[test]
    fn unknown_joint_rejected_with_pedestrian_locus() {
        let raw = gt_with(&[r#"{"id":"q9","bbox":[0,0,10,80],"orientation_deg":0,"keypoints":[
            {"joint":"neck","x":1,"y":1,"occluded":false}]}"#
            .to_string()]);
        match parse_ground_truth(raw.as_bytes()) {
            Err(Error::Validation { locus, message }) => {
                assert!(locus.contains("q9"));
                assert!(message.contains("neck"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_boxes_rejected() {
        for bbox in ["[0,0,0,80]", "[0,0,10,-1]", "[-700,0,10,80]", "[0,0,10,1000]"] {
            let raw = gt_with(&[format!(
                r#"{{"id":"p","bbox":{bbox},"orientation_deg":0,"keypoints":[]}}"#
            )]);
            assert!(parse_ground_truth(raw.as_bytes()).is_err(), "{bbox}");
        }
        // slightly out of frame is fine
        let raw = gt_with(&[r#"{"id":"p","bbox":[-20,-5,40,100],"orientation_deg":0,"keypoints":[]}"#.to_string()]);
        assert!(parse_ground_truth(raw.as_bytes()).is_ok());
    }

    #[test]
    fn malformed_json_reports_line() {
        let raw = "{\"images\": [\n  {\"image_id\": \"a\",\n   \"width\": oops}]}";
        match parse_ground_truth(raw.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn detections_scores() {
        let ok = parse_detections(br#"{"detections":{"a":[],"b":[{"bbox":[0,0,1,1],"score":1.0}]}}"#).unwrap();
        assert!(ok["a"].is_empty());
        assert_eq!(ok["b"][0].score, 1.0);

        let err = parse_detections(br#"{"detections":{"b":[{"bbox":[0,0,1,1],"score":1.5}]}}"#);
        assert!(matches!(err, Err(Error::Validation { .. })));
        let err = parse_detections(br#"{"detections":{"b":[{"bbox":[0,0,1,1],"score":-0.1}]}}"#);
        assert!(matches!(err, Err(Error::Validation { .. })));
        assert!(matches!(parse_detections(b"{\"detections\":"), Err(Error::Parse { .. })));
    }

    #[test]
    fn filter_is_strict() {
        let raw = gt_with(&[ped_json("a", 59.0, 0.0), ped_json("b", 60.0, 0.0), ped_json("c", 61.0, 0.0)]);
        let ds = parse_ground_truth(raw.as_bytes()).unwrap();
        let out = filter_instances(&ds, &FilterConfig::default());
        let ids: Vec<_> = out.dataset.images[0].pedestrians.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["c"]);
        assert_eq!(out.removed, 2);

        let again = filter_instances(&out.dataset, &FilterConfig::default());
        assert_eq!(again.dataset, out.dataset);
        assert_eq!(again.removed, 0);
    }

    #[test]
    fn filter_trivial_cases() {
        let empty = Dataset::default();
        assert_eq!(filter_instances(&empty, &FilterConfig::default()).dataset, empty);

        let raw = gt_with(&[ped_json("a", 200.0, 0.0), ped_json("b", 200.0, 0.0)]);
        let ds = parse_ground_truth(raw.as_bytes()).unwrap();
        let out = filter_instances(&ds, &FilterConfig::default());
        assert_eq!(out.dataset, ds);
        assert_eq!(out.removed, 0);
    }

    #[test]
    fn size_split() {
        let cfg = FilterConfig::default();
        let mk = |h| PedestrianGt {
            id: "x".into(),
            bbox: BBox::new(0.0, 0.0, 10.0, h),
            orientation_deg: 0.0,
            keypoints: KeypointMap::new(),
        };
        assert_eq!(size_class(&mk(100.0), &cfg), SizeClass::Small);
        assert_eq!(size_class(&mk(110.0), &cfg), SizeClass::Large);
        assert_eq!(size_class(&mk(120.0), &cfg), SizeClass::Large);
    }

    #[test]
    fn filter_config_invariant() {
        assert!(FilterConfig::default().validate().is_ok());
        assert!(FilterConfig { min_height_px: 120.0, size_split_px: 110.0 }.validate().is_err());
        assert!(FilterConfig { min_height_px: 0.0, size_split_px: 110.0 }.validate().is_err());
    }
}
