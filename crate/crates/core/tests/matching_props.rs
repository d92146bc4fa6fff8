mod common;

use std::collections::{BTreeSet, HashMap};

use posefair::matching::{accumulate_subgroup_counts, apply_cst, greedy_match, iou, CountTable, MatchConfig, Subgroup};
use posefair::metrics::SubgroupCounts;
use posefair::model::{BBox, DetectionRecord, JointName, PedestrianGt};
use posefair::pose::{AttributeSet, ElbowStatus, LegStatus, ViewClass, Visibility};
use posefair::SizeClass;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_box() -> impl Strategy<Value = BBox> {
    (0.0..60.0f64, 0.0..60.0f64, 2.0..30.0f64, 2.0..30.0f64).prop_map(|(x, y, w, h)| BBox::new(x, y, w, h))
}

fn arb_scene() -> impl Strategy<Value = (Vec<PedestrianGt>, Vec<DetectionRecord>)> {
    (
        proptest::collection::vec(arb_box(), 0..6),
        proptest::collection::vec((arb_box(), 0.0..1.0f64), 0..8),
    )
        .prop_map(|(g, d)| {
            let gts = g.into_iter().enumerate().map(|(i, b)| common::gt(&format!("g{i}"), b)).collect();
            let dets = d.into_iter().map(|(b, s)| DetectionRecord::new(b, s)).collect();
            (gts, dets)
        })
}

proptest! {
    #[test]
    fn iou_is_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
        let v = iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v, iou(&b, &a));
        prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outcome_partitions_detections_and_gts((gts, dets) in arb_scene()) {
        let out = greedy_match(&dets, &gts, &MatchConfig::default());
        let mut seen: Vec<usize> = out.tp_pairs.iter().map(|p| p.0).chain(out.fp.iter().copied()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..dets.len()).collect::<Vec<_>>());
        let mut ids: Vec<&str> = out.tp_pairs.iter().map(|p| p.1.as_str()).chain(out.fn_ids.iter().map(String::as_str)).collect();
        ids.sort_unstable();
        let mut all: Vec<&str> = gts.iter().map(|g| g.id.as_str()).collect();
        all.sort_unstable();
        prop_assert_eq!(ids, all);
        for (d, g) in &out.tp_pairs {
            let gt = gts.iter().find(|x| &x.id == g).unwrap();
            prop_assert!(iou(&dets[*d].bbox, &gt.bbox) >= 0.5);
        }
    }

    #[test]
    fn input_order_does_not_matter((gts, dets) in arb_scene(), seed in any::<u64>()) {
        // continuous scores and boxes: ties have probability zero
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = MatchConfig::default();
        let base = greedy_match(&dets, &gts, &cfg);
        let key = |d: &DetectionRecord| (d.bbox.x.to_bits(), d.bbox.y.to_bits(), d.score.to_bits());
        let base_tp: BTreeSet<_> = base.tp_pairs.iter().map(|(d, g)| (key(&dets[*d]), g.clone())).collect();

        let mut d2 = dets.clone();
        d2.shuffle(&mut rng);
        let mut g2 = gts.clone();
        g2.shuffle(&mut rng);
        let out = greedy_match(&d2, &g2, &cfg);
        let tp: BTreeSet<_> = out.tp_pairs.iter().map(|(d, g)| (key(&d2[*d]), g.clone())).collect();
        prop_assert_eq!(tp, base_tp);
        prop_assert_eq!(out.fn_ids.iter().collect::<BTreeSet<_>>(), base.fn_ids.iter().collect::<BTreeSet<_>>());
    }

    #[test]
    fn raising_the_threshold_never_adds_matches((gts, dets) in arb_scene(), lo in 0.0..1.0f64, hi in 0.0..1.0f64) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let cfg = MatchConfig::default();
        let m_lo: BTreeSet<String> = greedy_match(&apply_cst(&dets, lo), &gts, &cfg).tp_pairs.into_iter().map(|p| p.1).collect();
        let m_hi: BTreeSet<String> = greedy_match(&apply_cst(&dets, hi), &gts, &cfg).tp_pairs.into_iter().map(|p| p.1).collect();
        prop_assert!(m_hi.is_subset(&m_lo));
    }
}

#[test]
fn reference_transcription_agrees_on_tied_scenes() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..3000 {
        let (gts, dets) = common::random_scene(&mut rng);
        let got = greedy_match(&dets, &gts, &MatchConfig::default());
        let want = common::reference_match(&dets, &gts, 0.5);
        assert_eq!(got.tp_pairs.into_iter().collect::<BTreeSet<_>>(), want.tp);
        assert_eq!(got.fp.into_iter().collect::<BTreeSet<_>>(), want.fp);
        assert_eq!(got.fn_ids.into_iter().collect::<BTreeSet<_>>(), want.fn_ids);
    }
}

#[test]
fn cst_keeps_scores_at_the_threshold() {
    let dets: Vec<_> = [0.2, 0.3, 0.30000001, 0.9].iter().map(|&s| DetectionRecord::new(BBox::new(0.0, 0.0, 1.0, 1.0), s)).collect();
    let kept: Vec<f64> = apply_cst(&dets, 0.3).iter().map(|d| d.score).collect();
    assert_eq!(kept, vec![0.3, 0.30000001, 0.9]);
}

fn attrs(legs: LegStatus, occluded_knee: bool) -> AttributeSet {
    let mut joint_occluded: std::collections::BTreeMap<JointName, Visibility> = JointName::ALL.iter().map(|&j| (j, Visibility::Absent)).collect();
    joint_occluded.insert(JointName::KneeLeft, if occluded_knee { Visibility::Occluded } else { Visibility::Visible });
    AttributeSet {
        legs,
        elbows: ElbowStatus::Unknown,
        view: ViewClass::Front,
        joint_occluded,
        size: SizeClass::Large,
    }
}

#[test]
fn counts_add_up_across_images() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let labels = [LegStatus::AlignedStance, LegStatus::NonAlignedStance, LegStatus::Unknown];
    let mut scenes = Vec::new();
    for _ in 0..200 {
        let (gts, dets) = common::random_scene(&mut rng);
        let a: Vec<AttributeSet> = gts.iter().enumerate().map(|(i, _)| attrs(labels[i % 3], i % 2 == 0)).collect();
        scenes.push((greedy_match(&dets, &gts, &MatchConfig::default()), gts, a, dets.len()));
    }
    let maps: Vec<HashMap<&str, &AttributeSet>> = scenes.iter().map(|(_, g, a, _)| g.iter().map(|x| x.id.as_str()).zip(a.iter()).collect()).collect();
    let table = accumulate_subgroup_counts(scenes.iter().zip(&maps).map(|(s, m)| (&s.0, m))).unwrap();

    let gts_total: usize = scenes.iter().map(|s| s.1.len()).sum();
    let dets_total: usize = scenes.iter().map(|s| s.3).sum();
    assert_eq!(table.overall.support() as usize, gts_total);
    assert_eq!((table.overall.tp + table.false_positives) as usize, dets_total);

    let legs: SubgroupCounts = [LegStatus::AlignedStance, LegStatus::NonAlignedStance].iter().map(|&l| table.get(Subgroup::Legs(l))).fold(SubgroupCounts::default(), |a, b| a + b);
    let unknown = scenes.iter().flat_map(|s| &s.2).filter(|a| a.legs == LegStatus::Unknown).count();
    assert_eq!(legs.support() as usize, gts_total - unknown);
    assert_eq!(table.get(Subgroup::Legs(LegStatus::Unknown)), SubgroupCounts::default());

    let knee = table.get(Subgroup::Joint(JointName::KneeLeft, Visibility::Occluded)) + table.get(Subgroup::Joint(JointName::KneeLeft, Visibility::Visible));
    assert_eq!(knee, table.overall);

    // merging halves equals the whole
    let (a, b) = scenes.split_at(100);
    let (ma, mb) = maps.split_at(100);
    let ta = accumulate_subgroup_counts(a.iter().zip(ma).map(|(s, m)| (&s.0, m))).unwrap();
    let tb = accumulate_subgroup_counts(b.iter().zip(mb).map(|(s, m)| (&s.0, m))).unwrap();
    assert_eq!(ta.merge(&tb), table);
    assert_eq!(CountTable::default().merge(&table), table);
}

#[test]
fn missing_attributes_are_a_consistency_error() {
    let gts = vec![common::gt("a", BBox::new(0.0, 0.0, 10.0, 10.0))];
    let out = greedy_match(&[], &gts, &MatchConfig::default());
    let empty: HashMap<&str, &AttributeSet> = HashMap::new();
    assert!(CountTable::default().add_outcome(&out, &empty).is_err());
}
