use std::collections::BTreeSet;

use songmood::commands::{run, Command};
use songmood::config::{Config, RawConfig};

#[test]
fn predictions_cover_only_test_songs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = {
        let mut raw = RawConfig::default();
        raw.apply_flag(&format!("out={}", dir.path().display())).unwrap();
        raw.apply_flag("sim.n_playlists=4000").unwrap();
        raw.apply_flag("model_kinds=bow").unwrap();
        Config::from_raw(raw).unwrap()
    };
    run(Command::Pipeline, &cfg).unwrap();
    let split = std::fs::read_to_string(dir.path().join("ingest/split.csv")).unwrap();
    let test: BTreeSet<&str> =
        split.lines().skip(1).filter(|l| l.ends_with(",test")).map(|l| l.split(',').next().unwrap()).collect();
    let preds = std::fs::read_to_string(dir.path().join("predict/predictions.csv")).unwrap();
    let predicted: BTreeSet<&str> = preds.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert!(!predicted.is_empty());
    assert!(predicted.is_subset(&test));
}
