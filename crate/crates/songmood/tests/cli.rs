use std::path::Path;
use std::process::{Command, Output};

fn songmood(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_songmood"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = songmood(&["score", "--tau", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("tau"), "{}", stderr(&o));

    let o = songmood(&["score", "--set", "no_such_key=1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no_such_key"));

    let o = songmood(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    let o = songmood(&["score", "--lexicon", "missing.csv", "--playlists", "missing.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing"));

    assert!(!dir.path().join("out").exists(), "failed runs must not write outputs");
}

#[test]
fn help_lists_keys_and_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let o = songmood(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("sim.n_playlists") && text.contains("pipeline"));
}

#[test]
fn bad_data_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/lexicon.csv");
    std::fs::write(
        dir.path().join("p.jsonl"),
        "{\"id\":\"p1\",\"title\":\"chill mix\",\"tracks\":[\"a\",\"b\"]}\nnot json\n",
    )
    .unwrap();
    let lex = data.to_str().unwrap();
    let strict = songmood(&["score", "--lexicon", lex, "--playlists", "p.jsonl", "--strict"], dir.path());
    assert_eq!(strict.status.code(), Some(2), "{}", stderr(&strict));
    assert!(stderr(&strict).contains("p.jsonl:2"), "{}", stderr(&strict));

    // lenient mode skips the line and reports it
    let lenient = songmood(&["score", "--lexicon", lex, "--playlists", "p.jsonl"], dir.path());
    assert_eq!(lenient.status.code(), Some(0), "{}", stderr(&lenient));
    let errors = std::fs::read_to_string(dir.path().join("out/score/playlist_errors.csv")).unwrap();
    assert!(errors.lines().nth(1).unwrap().starts_with("2,"));
    let scores = std::fs::read_to_string(dir.path().join("out/score/scores.csv")).unwrap();
    assert!(scores.contains("a,chill,"));
}

#[test]
fn stages_compose_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let small = ["--set", "sim.n_playlists=3000", "--set", "sim.n_moods=4", "--seed", "5"];
    let run = |args: &[&str]| {
        let mut all: Vec<&str> = args.to_vec();
        all.extend_from_slice(&small);
        let o = songmood(&all, dir.path());
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
        o
    };
    run(&["simulate"]);
    let inputs = [
        "--playlists", "out/sim/playlists.jsonl",
        "--songs", "out/sim/songs.jsonl",
        "--lexicon", "out/sim/lexicon.csv",
        "--embeddings", "out/sim/embeddings.csv",
        "--annotations", "out/sim/annotations.csv",
    ];
    for stage in ["ingest", "score", "train", "predict", "evaluate", "sweep", "agree"] {
        let mut args = vec![stage];
        args.extend_from_slice(&inputs);
        run(&args);
        assert!(dir.path().join("out").join(stage).join("manifest.json").exists());
    }
    let models: Vec<_> = std::fs::read_dir(dir.path().join("out/train/models/bow")).unwrap().collect();
    assert_eq!(models.len(), 4);
    let manifest = std::fs::read_to_string(dir.path().join("out/score/manifest.json")).unwrap();
    assert!(manifest.contains("\"source\": \"flag\"") && manifest.contains("playlists.jsonl"));

    // binary model files predict the same probabilities as JSON ones
    let before = std::fs::read(dir.path().join("out/predict/predictions.csv")).unwrap();
    let mut args = vec!["train", "--set", "model_format=binary"];
    args.extend_from_slice(&inputs);
    std::fs::remove_dir_all(dir.path().join("out/train/models")).unwrap();
    run(&args);
    assert!(dir.path().join("out/train/models/bow/love.bin").exists());
    let mut args = vec!["predict"];
    args.extend_from_slice(&inputs);
    run(&args);
    assert_eq!(before, std::fs::read(dir.path().join("out/predict/predictions.csv")).unwrap());
}
