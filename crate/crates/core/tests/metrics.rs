use proptest::prelude::*;

use roomsynth::frame::{Frame, LabelFrame};
use roomsynth::metrics::{argmax, class_accuracy, confidence_ratio, global_accuracy, ConfusionMatrix, ProbabilityMap};
use roomsynth::scene::ClassId;

fn labels(w: usize, ids: &[u16]) -> LabelFrame {
    Frame::from_vec(w, ids.len() / w, ids.iter().map(|&i| ClassId(i)).collect()).unwrap()
}

#[test]
fn two_class_hand_example() {
    // gt  1 1 1 2 | pred 1 2 1 2 -> class 1: 2/3, class 2: 1/1.
    let mut m = ConfusionMatrix::new(3, ClassId(0));
    m.accumulate(&labels(4, &[1, 1, 1, 2]), &labels(4, &[1, 2, 1, 2])).unwrap();
    assert_eq!(m.get(ClassId(1), ClassId(1)), 2);
    assert_eq!(m.get(ClassId(1), ClassId(2)), 1);
    assert_eq!(m.get(ClassId(2), ClassId(2)), 1);
    assert_eq!(global_accuracy(&m).unwrap(), 3.0 / 4.0);
    let ca = class_accuracy(&m).unwrap();
    assert_eq!(ca.recall, vec![None, Some(2.0 / 3.0), Some(1.0)]);
    assert_eq!(ca.mean, (2.0 / 3.0 + 1.0) / 2.0);
}

fn arb_pair() -> impl Strategy<Value = (usize, Vec<u16>, Vec<u16>)> {
    (1usize..9, 1usize..9).prop_flat_map(|(w, h)| {
        (
            Just(w),
            proptest::collection::vec(0u16..6, w * h),
            proptest::collection::vec(0u16..6, w * h),
        )
    })
}

proptest! {
    #[test]
    fn accumulation_is_tile_additive((w, gt, pred) in arb_pair(), split in 0usize..9) {
        let h = gt.len() / w;
        let split = split.min(h);
        let mut whole = ConfusionMatrix::new(6, ClassId(0));
        whole.accumulate(&labels(w, &gt), &labels(w, &pred)).unwrap();
        let mut tiles = ConfusionMatrix::new(6, ClassId(0));
        let cut = split * w;
        if cut > 0 {
            tiles.accumulate(&labels(w, &gt[..cut]), &labels(w, &pred[..cut])).unwrap();
        }
        if cut < gt.len() {
            let mut rest = ConfusionMatrix::new(6, ClassId(0));
            rest.accumulate(&labels(w, &gt[cut..]), &labels(w, &pred[cut..])).unwrap();
            tiles = tiles.merge(&rest).unwrap();
        }
        prop_assert_eq!(whole, tiles);
    }

    #[test]
    fn accuracy_invariant_under_relabelling((w, gt, pred) in arb_pair(), perm in Just(vec![1u16, 2, 3, 4, 5]).prop_shuffle()) {
        // Background stays fixed.
        let map = |v: &[u16]| -> Vec<u16> { v.iter().map(|&c| if c == 0 { 0 } else { perm[c as usize - 1] }).collect() };
        let mut a = ConfusionMatrix::new(6, ClassId(0));
        a.accumulate(&labels(w, &gt), &labels(w, &pred)).unwrap();
        let mut b = ConfusionMatrix::new(6, ClassId(0));
        b.accumulate(&labels(w, &map(&gt)), &labels(w, &map(&pred))).unwrap();
        prop_assume!(a.counted() > 0);
        prop_assert_eq!(global_accuracy(&a).unwrap(), global_accuracy(&b).unwrap());
        prop_assert!((class_accuracy(&a).unwrap().mean - class_accuracy(&b).unwrap().mean).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_scores_one((w, gt, _) in arb_pair()) {
        let mut m = ConfusionMatrix::new(6, ClassId(0));
        m.accumulate(&labels(w, &gt), &labels(w, &gt)).unwrap();
        prop_assume!(m.counted() > 0);
        prop_assert_eq!(global_accuracy(&m).unwrap(), 1.0);
        prop_assert_eq!(class_accuracy(&m).unwrap().mean, 1.0);
    }

    #[test]
    fn confidence_ratio_survives_rescaling(
        scores in proptest::collection::vec(0.01..1.0f64, 4 * 3 * 5),
        scale in proptest::collection::vec(0.1..10.0f64, 12),
    ) {
        let p = ProbabilityMap::from_scores(4, 3, 5, scores.clone()).unwrap();
        let rescaled: Vec<f64> = scores.chunks(5).zip(&scale).flat_map(|(c, s)| c.iter().map(move |v| v * s)).collect();
        let q = ProbabilityMap::from_scores(4, 3, 5, rescaled).unwrap();
        let (a, b) = (confidence_ratio(&p).unwrap(), confidence_ratio(&q).unwrap());
        for (x, y) in a.data().iter().zip(b.data()) {
            prop_assert!((x - y).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(x));
        }
        prop_assert_eq!(argmax(&p), argmax(&q));
    }
}
