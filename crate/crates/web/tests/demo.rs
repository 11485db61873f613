use mmhash_web::{boxplot_json, retrieval_json};
use serde_json::Value;

#[test]
fn boxplot_reports_four_groups_with_clean_separation() {
    let v: Value = serde_json::from_str(&boxplot_json(600, 0.4, 5, 1).unwrap()).unwrap();
    let groups = v["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 4);
    let median = |subset: &str, side: &str| {
        groups
            .iter()
            .find(|g| g["subset"] == subset && g["side"] == side)
            .unwrap()["stats"]["median"]
            .as_f64()
            .unwrap()
    };
    let clean_gap = median("clean", "in") - median("clean", "out");
    let noisy_gap = median("noisy", "in") - median("noisy", "out");
    assert!(clean_gap > noisy_gap, "{clean_gap} vs {noisy_gap}");
}

#[test]
fn retrieval_returns_curves_and_is_deterministic() {
    let a = retrieval_json("full", 0.4, 8, 2).unwrap();
    assert_eq!(a, retrieval_json("FULL", 0.4, 8, 2).unwrap());
    let v: Value = serde_json::from_str(&a).unwrap();
    let map = v["map"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&map));
    assert_eq!(v["pn"].as_array().unwrap().len(), 6);
    // radii 0..=32
    assert_eq!(v["pr"].as_array().unwrap().len(), 33);
}

#[test]
fn bad_inputs_are_errors() {
    assert!(retrieval_json("nope", 0.4, 8, 1).is_err());
    assert!(retrieval_json("full", 1.5, 8, 1).is_err());
    assert!(boxplot_json(4, 0.4, 1, 1).is_err());
}
