// Full evaluation over the default confidence thresholds on a generated
// scene whose detector gets less confident on lateral views.

use posefair::pose::{ElbowStatus, LegStatus, ViewClass};
use posefair::sweep::{run_sweep, SweepConfig};
use posefair::synth::{generate_scene, plant_detections, GroupSpec, MissSpec, SynthSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let group = |view, legs, score, miss| GroupSpec {
        count: 200,
        view,
        legs,
        elbows: ElbowStatus::Straight,
        score,
        miss: MissSpec::Exact(miss),
        ..GroupSpec::default()
    };
    let spec = SynthSpec {
        seed: 2024,
        groups: vec![
            group(ViewClass::Front, LegStatus::NonAlignedStance, 0.9, 20),
            group(ViewClass::Front, LegStatus::AlignedStance, 0.9, 30),
            group(ViewClass::Lateral, LegStatus::NonAlignedStance, 0.6, 30),
            group(ViewClass::Lateral, LegStatus::AlignedStance, 0.3, 40),
            group(ViewClass::Back, LegStatus::NonAlignedStance, 0.8, 20),
        ],
        background_fp_per_image: 1,
        ..SynthSpec::default()
    };
    let scene = generate_scene(&spec)?;
    let dets = plant_detections(&scene, &spec)?;
    let report = run_sweep(&scene.dataset, &dets, &SweepConfig::default())?;

    println!("{:>5} {:>7} {:>5}  {:>8} {:>8} {:>8} {:>8}", "tau", "MR%", "FP", "legs", "F-L", "L-B", "F-B");
    for t in &report.thresholds {
        let e = |label: &str| match t.attribute(label).and_then(|p| p.eod()) {
            Some(v) => format!("{:+.2}", 100.0 * v),
            None => "NA".into(),
        };
        println!(
            "{:>5.2} {:>7.2} {:>5}  {:>8} {:>8} {:>8} {:>8}",
            t.tau,
            100.0 * t.overall_mr.unwrap_or(f64::NAN),
            t.false_positives,
            e("legs"),
            e("F-L"),
            e("L-B"),
            e("F-B")
        );
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
