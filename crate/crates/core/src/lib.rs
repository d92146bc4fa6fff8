//! Pose- and occlusion-aware fairness evaluation for pedestrian detectors.
//!
//! The pipeline labels every ground-truth pedestrian with leg stance, elbow
//! status, body orientation, per-joint visibility and size; matches detector
//! output to ground truth with score-ordered greedy IoU at a set of
//! confidence thresholds; and compares subgroup miss-rates with the equal
//! opportunity difference, Cohen's h and a pooled two-proportion z-test.
//!
//! ```no_run
//! use posefair::{ingestion, report, sweep};
//!
//! let gt = ingestion::parse_ground_truth(&std::fs::read("gt.json")?)?;
//! let dets = ingestion::parse_detections(&std::fs::read("det.json")?)?;
//! let report = sweep::run_sweep(&gt, &dets, &sweep::SweepConfig::default())?;
//! std::fs::write("report.md", report::emit(&[report], report::Format::Markdown))?;
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod error;
pub mod ingestion;
pub mod matching;
pub mod metrics;
pub mod model;
pub mod pose;
pub mod report;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
pub use model::{BBox, Dataset, DetectionRecord, Detections, ImageRecord, JointName, Keypoint, PedestrianGt, Point, SizeClass};
