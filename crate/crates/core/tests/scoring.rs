mod common;

use absynth::eval::{aggregate, LandmarkMatch, Prediction};
use absynth::pipeline::{load_manifest, load_predictions};
use common::*;
use proptest::prelude::*;

#[test]
fn fixture_matches_hand_report() {
    let gold = load_manifest(&fixture("eval_gold.jsonl")).unwrap();
    gold.check().unwrap();
    let preds = load_predictions(&fixture("eval_pred.jsonl")).unwrap();
    reports_match(&aggregate(&gold, &preds, LandmarkMatch::Lcs), &expected_fixture_report()).unwrap();
}

#[test]
fn greedy_mode_differs_only_on_routes() {
    let gold = load_manifest(&fixture("eval_gold.jsonl")).unwrap();
    let preds = load_predictions(&fixture("eval_pred.jsonl")).unwrap();
    let lcs = aggregate(&gold, &preds, LandmarkMatch::Lcs);
    let greedy = aggregate(&gold, &preds, LandmarkMatch::Greedy);
    assert_eq!(lcs.per_scenario, greedy.per_scenario);
    // Both routes keep their order, so forward matching finds the same names.
    assert_eq!(greedy.map_lcr.mean, 50.0);
}

#[test]
fn perfect_and_empty_predictions() {
    let gold = load_manifest(&fixture("eval_gold.jsonl")).unwrap();
    let perfect: Vec<Prediction> = gold.records.iter().map(|r| Prediction { id: r.id.clone(), raw_response: r.answer.clone() }).collect();
    let r = aggregate(&gold, &perfect, LandmarkMatch::Lcs);
    assert!(r.per_scenario.values().all(|a| a.accuracy == 100.0));
    assert_eq!((r.sentence_rouge_l.mean, r.map_lcr.mean), (1.0, 100.0));
    let none = aggregate(&gold, &[], LandmarkMatch::Lcs);
    assert_eq!(none.missing, gold.records.len());
    assert!(none.per_scenario.values().all(|a| a.accuracy == 0.0));
}

proptest! {
    #[test]
    fn aggregate_ignores_prediction_order(seed in any::<u64>()) {
        let gold = load_manifest(&fixture("eval_gold.jsonl")).unwrap();
        let preds = load_predictions(&fixture("eval_pred.jsonl")).unwrap();
        let mut shuffled = preds.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            let j = (seed.rotate_left(i as u32) % (i as u64 + 1)) as usize;
            shuffled.swap(i, j);
        }
        prop_assert_eq!(aggregate(&gold, &preds, LandmarkMatch::Lcs), aggregate(&gold, &shuffled, LandmarkMatch::Lcs));
    }
}
