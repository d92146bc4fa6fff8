// Greedy IoU matching of detections to ground truth at two confidence
// thresholds.

use posefair::matching::{apply_cst, greedy_match, iou, MatchConfig};
use posefair::model::{BBox, DetectionRecord, PedestrianGt};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let gt = |id: &str, x| PedestrianGt {
        id: id.into(),
        bbox: BBox::new(x, 100.0, 40.0, 100.0),
        orientation_deg: 0.0,
        keypoints: Default::default(),
    };
    let gts = vec![gt("a", 0.0), gt("b", 30.0), gt("c", 200.0)];
    let dets = vec![
        DetectionRecord::new(BBox::new(2.0, 100.0, 40.0, 100.0), 0.95),
        DetectionRecord::new(BBox::new(20.0, 100.0, 40.0, 100.0), 0.60),
        DetectionRecord::new(BBox::new(400.0, 50.0, 40.0, 100.0), 0.40),
        DetectionRecord::new(BBox::new(205.0, 105.0, 40.0, 100.0), 0.20),
    ];
    for (i, d) in dets.iter().enumerate() {
        let ious: Vec<String> = gts.iter().map(|g| format!("{}={:.2}", g.id, iou(&d.bbox, &g.bbox))).collect();
        println!("det {i} score {:.2}  {}", d.score, ious.join(" "));
    }

    let cfg = MatchConfig::default();
    for tau in [0.0, 0.5] {
        let kept = apply_cst(&dets, tau);
        let out = greedy_match(&kept, &gts, &cfg);
        println!("\ntau = {tau}: {} kept", kept.len());
        for (d, g) in &out.tp_pairs {
            println!("  TP  det {d} -> {g}");
        }
        println!("  FP  {:?}", out.fp);
        println!("  FN  {:?}", out.fn_ids);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
