// Miss-rate gap statistics for one subgroup pair, plus body-region
// averaging of per-joint gaps.

use std::collections::BTreeMap;

use posefair::metrics::{region_average, resolve_majority, BodyRegion, FairnessCell, SubgroupCounts};
use posefair::model::JointName;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // 400 aligned-stance pedestrians, 96 missed; 600 non-aligned, 90 missed
    let aligned = SubgroupCounts::new(304, 96);
    let non_aligned = SubgroupCounts::new(510, 90);
    let pair = resolve_majority("legs", "legs", ("aligned", aligned), ("non_aligned", non_aligned))?;
    println!("minority {} / majority {}", pair.minority, pair.majority);

    let cell = FairnessCell::compute(aligned, non_aligned)?;
    println!("MR minority  {:.4}", cell.mr_min);
    println!("MR majority  {:.4}", cell.mr_maj);
    println!("EOD          {:+.4}", cell.eod);
    println!("Cohen's h    {:+.4}", cell.h);
    println!("z            {:.3}  p = {:.2e}  significant: {}", cell.z, cell.p_value, cell.significant);

    // per-joint EODs (percent) averaged over body regions
    let eods: BTreeMap<JointName, f64> = JointName::ALL
        .iter()
        .enumerate()
        .map(|(i, &j)| (j, 2.0 + i as f64))
        .collect();
    for region in BodyRegion::ALL {
        println!("{region:<6} mean EOD {:.2}%", region_average(&eods, region)?);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
