use betavae_ids::dataset::AttackCategory;
use betavae_ids::eval::{auroc, roc_curve, LabeledScores};
use proptest::prelude::*;

/// Pairwise definition: P(s+ > s-) + ½ P(s+ = s-).
fn naive_auroc(scores: &[f64], pos: &[bool]) -> f64 {
    let mut num = 0.0;
    let (mut p, mut n) = (0usize, 0usize);
    for i in 0..scores.len() {
        if !pos[i] {
            n += 1;
            continue;
        }
        p += 1;
        for j in 0..scores.len() {
            if pos[j] {
                continue;
            }
            if scores[i] > scores[j] {
                num += 1.0;
            } else if scores[i] == scores[j] {
                num += 0.5;
            }
        }
    }
    num / (p as f64 * n as f64)
}

fn labeled(scores: Vec<f64>, pos: Vec<bool>) -> LabeledScores {
    let cats = pos
        .iter()
        .map(|&a| {
            if a {
                AttackCategory::Probe
            } else {
                AttackCategory::Normal
            }
        })
        .collect();
    LabeledScores::new(scores, pos, cats).unwrap()
}

fn two_class() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    prop::collection::vec((0u8..25, any::<bool>()), 2..200)
        .prop_filter("both classes", |v| {
            v.iter().any(|x| x.1) && v.iter().any(|x| !x.1)
        })
        .prop_map(|v| v.into_iter().map(|(s, l)| (f64::from(s), l)).unzip())
}

proptest! {
    #[test]
    fn rank_matches_naive_exactly((s, l) in two_class()) {
        let a = auroc(&labeled(s.clone(), l.clone())).unwrap();
        prop_assert_eq!(a, naive_auroc(&s, &l));
    }

    #[test]
    fn trapezoid_matches_rank((s, l) in two_class()) {
        let c = roc_curve(&labeled(s, l)).unwrap();
        prop_assert!((c.trapezoid_area() - c.auroc).abs() < 1e-12);
    }

    #[test]
    fn curve_is_monotone_and_anchored((s, l) in two_class()) {
        let c = roc_curve(&labeled(s.clone(), l)).unwrap();
        prop_assert_eq!(c.points[0], (0.0, 0.0));
        prop_assert_eq!(*c.points.last().unwrap(), (1.0, 1.0));
        prop_assert!(c.points.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
        let mut distinct = s;
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        prop_assert_eq!(c.points.len(), distinct.len() + 1);
    }

    #[test]
    fn strictly_increasing_transform_keeps_auroc((s, l) in two_class()) {
        let a = auroc(&labeled(s.clone(), l.clone())).unwrap();
        let t: Vec<f64> = s.iter().map(|x| x * x * x + 2.0 * x - 7.0).collect();
        prop_assert_eq!(a, auroc(&labeled(t, l)).unwrap());
    }

    #[test]
    fn flipping_labels_complements((s, l) in two_class()) {
        let a = auroc(&labeled(s.clone(), l.clone())).unwrap();
        let flipped = l.iter().map(|x| !x).collect();
        let b = auroc(&labeled(s, flipped)).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-12);
    }
}

#[test]
fn continuous_scores_with_no_ties() {
    let s: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64 / 7.0).collect();
    let l: Vec<bool> = (0..50).map(|i| i % 3 == 0).collect();
    let c = roc_curve(&labeled(s.clone(), l.clone())).unwrap();
    assert_eq!(c.points.len(), 51);
    assert_eq!(c.auroc, naive_auroc(&s, &l));
}
