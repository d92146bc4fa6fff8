// Labels a hand-written pedestrian: leg stance, elbows, view and joint
// visibility.

use posefair::ingestion::FilterConfig;
use posefair::model::{BBox, JointName, Keypoint, PedestrianGt};
use posefair::pose::{annotate, hip_ankle_separation, knee_flexion, AngleThresholds};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    use JointName::*;
    let kp = |j, x, y| (j, Keypoint::new(j, x, y, false));
    // mid-stride: left knee bent, right leg straight, left arm bent
    let mut keypoints: posefair::model::KeypointMap = [
        kp(HipLeft, 110.0, 200.0),
        kp(KneeLeft, 125.0, 250.0),
        kp(AnkleLeft, 110.0, 300.0),
        kp(HipRight, 90.0, 200.0),
        kp(KneeRight, 88.0, 250.0),
        kp(AnkleRight, 86.0, 300.0),
        kp(ShoulderLeft, 120.0, 120.0),
        kp(ElbowLeft, 125.0, 160.0),
        kp(WristLeft, 95.0, 150.0),
        kp(ShoulderRight, 80.0, 120.0),
        kp(ElbowRight, 78.0, 160.0),
        kp(WristRight, 76.0, 200.0),
        kp(Nose, 100.0, 95.0),
    ]
    .into_iter()
    .collect();
    keypoints.get_mut(&WristLeft).unwrap().occluded = true;

    let ped = PedestrianGt {
        id: "walker".into(),
        bbox: BBox::new(70.0, 80.0, 70.0, 230.0),
        orientation_deg: 75.0,
        keypoints,
    };
    let p = |j| ped.keypoints[&j].point();
    println!("left knee flexion   {:6.2} deg", knee_flexion(p(HipLeft), p(KneeLeft), p(AnkleLeft))?);
    println!("right knee flexion  {:6.2} deg", knee_flexion(p(HipRight), p(KneeRight), p(AnkleRight))?);
    println!(
        "hip-ankle spread    {:6.2} deg",
        hip_ankle_separation(p(HipLeft), p(AnkleLeft), p(HipRight), p(AnkleRight))?
    );

    let attrs = annotate(&ped, &AngleThresholds::default(), &FilterConfig::default())?;
    println!("legs   {}", attrs.legs);
    println!("elbows {}", attrs.elbows);
    println!("view   {}", attrs.view);
    println!("size   {}", attrs.size);
    for (joint, vis) in &attrs.joint_occluded {
        if vis.as_str() != "absent" {
            println!("  {:<15} {vis}", joint.as_str());
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
