//! Subcommands. Each reads its inputs, writes artifacts under
//! `<out>/<stage>/` and finishes with a manifest listing them.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use songmood_core::annotation::{record_agreement, Judgment, Source, Verdicts};
use songmood_core::association::{
    count, distribution_stats, fit_prior, merge_counts, score_mood, sort_scores, top_positive_moods, AssociationLabel,
    AssociationScore, CooccurrenceCounts, ScoreDiagnostics,
};
use songmood_core::evaluation::{
    best_f1, even_taus, per_mood_report, threshold_sweep, PairKey, Prediction, Truth,
};
use songmood_core::experiment::{train_mood, FeatureKind, FeatureStore, MoodModel};
use songmood_core::features::{AcousticFeatures, EmbeddingTable};
use songmood_core::ingest::{dedupe_songs, split_train_test, CorpusSplit, MoodMatcher, SongRecord};
use songmood_core::lexicon::MoodLexicon;
use songmood_core::models::classify;
use songmood_core::rng::substream_seed;
use songmood_core::simulate::{generate, simulate_annotations, validate_recovery};
use songmood_core::Error as CoreError;

use crate::config::{Config, EvaluateTruth, Origin};
use crate::error::{CliError, CliResult, Context};
use crate::formats::annotations::{load_annotations, write_annotations};
use crate::formats::corpus::{load_playlists, load_songs, write_error_report, write_playlists, write_songs};
use crate::formats::counts::{load_counts, write_counts};
use crate::formats::features::{
    load_embeddings, load_scaler, load_vocabulary, write_embeddings, write_scaler, write_split, write_vocabulary,
};
use crate::formats::lexicon::{load_lexicon, write_lexicon};
use crate::formats::model::{load_model, save_model};
use crate::formats::reports::{
    agreement_cells, load_ground_truth, load_predictions, predictions_by_kind, write_distribution,
    write_ground_truth, write_kappa, write_metrics, write_predictions, write_priors, write_recovery, write_sweep,
    write_table, write_top_moods, PredictionRow, AGREEMENT_HEADER,
};
use crate::formats::scores::{load_scores, write_scores};
use crate::formats::{fmt_sig9, write_json};
use crate::manifest::Manifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    Score,
    Train,
    Predict,
    Evaluate,
    Sweep,
    Agree,
    Simulate,
    Pipeline,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Score => "score",
            Command::Train => "train",
            Command::Predict => "predict",
            Command::Evaluate => "evaluate",
            Command::Sweep => "sweep",
            Command::Agree => "agree",
            Command::Simulate => "simulate",
            Command::Pipeline => "pipeline",
        }
    }
}

/// Runs one subcommand on a pool of `cfg.threads` workers and returns the
/// files it wrote.
pub fn run(cmd: Command, cfg: &Config) -> CliResult<Vec<PathBuf>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    pool.install(|| match cmd {
        Command::Ingest => ingest(cfg),
        Command::Score => score(cfg),
        Command::Train => train(cfg),
        Command::Predict => predict(cfg),
        Command::Evaluate => evaluate(cfg),
        Command::Sweep => sweep(cfg),
        Command::Agree => agree(cfg),
        Command::Simulate => simulate(cfg),
        Command::Pipeline => pipeline(cfg),
    })
}

/// Collects written files and the inputs they came from.
struct Stage<'a> {
    cfg: &'a Config,
    name: &'static str,
    dir: PathBuf,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    details: Map<String, Value>,
}

impl<'a> Stage<'a> {
    fn new(cfg: &'a Config, name: &'static str) -> Self {
        Stage {
            cfg,
            name,
            dir: cfg.stage_dir(name),
            inputs: Vec::new(),
            outputs: Vec::new(),
            details: Map::new(),
        }
    }

    fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    fn input(&mut self, p: &Path) {
        if !self.inputs.iter().any(|q| q == p) {
            self.inputs.push(p.to_path_buf());
        }
    }

    fn wrote(&mut self, p: PathBuf) {
        self.outputs.push(p);
    }

    fn detail(&mut self, key: &str, value: Value) {
        self.details.insert(key.to_string(), value);
    }

    fn finish(mut self) -> CliResult<Vec<PathBuf>> {
        let path = self.dir.join("manifest.json");
        Manifest {
            command: self.name,
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            extra: std::mem::take(&mut self.details),
        }
        .write(self.cfg, &path)?;
        self.outputs.push(path);
        info!("{}: wrote {} files under {}", self.name, self.outputs.len(), self.dir.display());
        Ok(self.outputs)
    }
}

fn default_path(value: &Option<PathBuf>, fallback: PathBuf) -> PathBuf {
    value.clone().unwrap_or(fallback)
}

fn existing(key: &str, p: PathBuf) -> CliResult<PathBuf> {
    if p.exists() {
        Ok(p)
    } else {
        Err(CliError::usage(format!("{key}: {} does not exist", p.display())))
    }
}

fn scores_path(cfg: &Config) -> CliResult<PathBuf> {
    existing("scores", default_path(&cfg.scores, cfg.stage_dir("score").join("scores.csv")))
}

fn models_dir(cfg: &Config) -> CliResult<PathBuf> {
    existing("models", default_path(&cfg.models, cfg.stage_dir("train").join("models")))
}

fn predictions_path(cfg: &Config) -> PathBuf {
    default_path(&cfg.predictions, cfg.stage_dir("predict").join("predictions.csv"))
}

fn load_lexicon_input(cfg: &Config, stage: &mut Stage) -> CliResult<MoodLexicon> {
    let p = cfg.input("lexicon", &cfg.lexicon)?;
    stage.input(&p);
    load_lexicon(&p)
}

/// Parsed, deduplicated songs plus their split.
struct Songs {
    records: Vec<SongRecord>,
    malformed: usize,
    duplicates: usize,
    split: CorpusSplit,
}

fn load_song_input(cfg: &Config, stage: &mut Stage) -> CliResult<(Songs, Vec<crate::formats::corpus::LineError>)> {
    let p = cfg.input("songs", &cfg.songs)?;
    stage.input(&p);
    let parsed = load_songs(&p, cfg.strict_parse)?;
    let n = parsed.records.len();
    let records = dedupe_songs(parsed.records);
    let split = split_train_test(
        records.iter().map(|s| s.song_id.as_str()),
        cfg.train_fraction,
        substream_seed(cfg.seed, "split"),
    )
    .in_file(&p)?;
    if !parsed.errors.is_empty() {
        warn!("{}: skipped {} malformed lines", p.display(), parsed.errors.len());
    }
    Ok((
        Songs {
            duplicates: n - records.len(),
            malformed: parsed.errors.len(),
            records,
            split,
        },
        parsed.errors,
    ))
}

fn load_embedding_input(cfg: &Config, stage: &mut Stage) -> CliResult<Option<EmbeddingTable>> {
    match cfg.optional_input("embeddings", &cfg.embeddings)? {
        Some(p) => {
            stage.input(&p);
            load_embeddings(&p).map(Some)
        }
        None => Ok(None),
    }
}

fn ingest(cfg: &Config) -> CliResult<Vec<PathBuf>> {
    let mut st = Stage::new(cfg, "ingest");
    let pl_path = cfg.input("playlists", &cfg.playlists)?;
    st.input(&pl_path);
    let playlists = load_playlists(&pl_path, cfg.strict_parse)?;
    let (songs, song_errors) = load_song_input(cfg, &mut st)?;

    let p = st.path("playlist_errors.csv");
    write_error_report(&p, &playlists.errors)?;
    st.wrote(p);
    let p = st.path("song_errors.csv");
    write_error_report(&p, &song_errors)?;
    st.wrote(p);
    let p = st.path("split.csv");
    write_split(&p, &songs.split)?;
    st.wrote(p);

    let mut summary = json!({
        "playlists": playlists.records.len(),
        "malformed_playlists": playlists.errors.len(),
        "songs": songs.records.len(),
        "malformed_songs": songs.malformed,
        "duplicate_songs": songs.duplicates,
        "train_songs": songs.split.train_ids.len(),
        "test_songs": songs.split.test_ids.len(),
    });
    if cfg.lexicon.is_some() {
        let lex = load_lexicon_input(cfg, &mut st)?;
        let matcher = MoodMatcher::new(&lex);
        let matched = playlists
            .records
            .par_iter()
            .filter(|p| !matcher.match_playlist(p).is_empty())
            .count();
        summary["playlists_with_mood"] = json!(matched);
    }
    let p = st.path("summary.json");
    write_json(&p, &summary)?;
    st.wrote(p);
    st.detail("summary", summary);
    st.finish()
}

/// Counts playlists in shards and merges the partial counts.
pub fn parallel_count(playlists: &[songmood_core::ingest::PlaylistRecord], lexicon: &MoodLexicon) -> CooccurrenceCounts {
    playlists
        .par_chunks(4096)
        .map(|chunk| count(chunk, lexicon))
        .reduce(CooccurrenceCounts::new, |a, b| merge_counts(a, &b))
}

/// Fits priors and scores each mood on its own worker; output order is
/// fixed by sorting.
pub fn parallel_score(
    counts: &CooccurrenceCounts,
    lexicon: &MoodLexicon,
    cfg: &Config,
) -> CliResult<(Vec<AssociationScore>, Vec<songmood_core::association::BetaPrior>, ScoreDiagnostics)> {
    let seen: Vec<&str> = lexicon.terms().filter(|m| counts.mood_count(m) > 0).collect();
    let per_mood = seen
        .par_iter()
        .map(|m| {
            let prior = fit_prior(counts, m, &cfg.score.universe)?;
            let mut diag = ScoreDiagnostics::default();
            let rows = score_mood(counts, &prior, &cfg.score, &mut diag)?;
            Ok((prior, rows, diag))
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    let mut diagnostics = ScoreDiagnostics {
        unseen_moods: lexicon
            .terms()
            .filter(|m| counts.mood_count(m) == 0)
            .map(String::from)
            .collect(),
        ..Default::default()
    };
    let mut priors = Vec::new();
    let mut scores = Vec::new();
    for (prior, rows, diag) in per_mood {
        priors.push(prior);
        scores.extend(rows);
        diagnostics.clamped.extend(diag.clamped);
        diagnostics.degenerate.extend(diag.degenerate);
    }
    sort_scores(&mut scores);
    Ok((scores, priors, diagnostics))
}

fn score(cfg: &Config) -> CliResult<Vec<PathBuf>> {
    let mut st = Stage::new(cfg, "score");
    let lexicon = load_lexicon_input(cfg, &mut st)?;
    let counts = match cfg.optional_input("counts", &cfg.counts)? {
        Some(p) => {
            st.input(&p);
            load_counts(&p)?
        }
        None => {
            let p = cfg.input("playlists", &cfg.playlists)?;
            st.input(&p);
            let parsed = load_playlists(&p, cfg.strict_parse)?;
            let e = st.path("playlist_errors.csv");
            write_error_report(&e, &parsed.errors)?;
            st.wrote(e);
            st.detail("malformed_playlists", json!(parsed.errors.len()));
            parallel_count(&parsed.records, &lexicon)
        }
    };
    if counts.n_playlists() == 0 {
        return Err(CliError::data(
            cfg.playlists.as_deref().unwrap_or(Path::new("-")),
            None,
            "no playlists to count",
        ));
    }
    let (scores, priors, diagnostics) = parallel_score(&counts, &lexicon, cfg)?;

    let p = st.path("counts.jsonl");
    write_counts(&p, &counts)?;
    st.wrote(p);
    let p = st.path("scores.csv");
    write_scores(&p, &scores)?;
    st.wrote(p);
    let p = st.path("priors.csv");
    write_priors(&p, &priors)?;
    st.wrote(p);
    let values: Vec<f64> = scores.iter().map(|s| s.bnpmi).collect();
    if values.len() >= 2 {
        let stats = distribution_stats(&values, cfg.histogram_bins)?;
        let p = st.path("distribution.csv");
        write_distribution(&p, &stats)?;
        st.wrote(p);
        st.detail("bnpmi_mean", json!(fmt_sig9(stats.mean)));
        st.detail("bnpmi_std", json!(fmt_sig9(stats.std)));
    }
    let p = st.path("top_moods.csv");
    write_top_moods(&p, &top_positive_moods(&scores, cfg.top_k))?;
    st.wrote(p);
    let p = st.path("diagnostics.json");
    write_json(&p, &diagnostics)?;
    st.wrote(p);

    if let Some(gt) = cfg.optional_input("ground_truth", &cfg.ground_truth)? {
        st.input(&gt);
        let truth = load_ground_truth(&gt)?;
        let report = validate_recovery(&scores, &truth);
        let p = st.path("recovery.csv");
        write_recovery(&p, &report)?;
        st.wrote(p);
        st.detail("recovery_median", json!(report.median.map(fmt_sig9)));
    }
    let labels = |l: AssociationLabel| scores.iter().filter(|s| s.label == l).count();
    st.detail(
        "labels",
        json!({
            "positive": labels(AssociationLabel::Positive),
            "neutral": labels(AssociationLabel::Neutral),
            "negative": labels(AssociationLabel::Negative),
        }),
    );
    st.detail("fallback_priors", json!(priors.iter().filter(|p| p.is_fallback()).count()));
    st.finish()
}

fn file_stem(mood: &str) -> String {
    mood.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Moods to model: the configured list, or every scored mood.
fn model_moods(cfg: &Config, scores: &[AssociationScore]) -> CliResult<Vec<String>> {
    let scored: BTreeSet<&str> = scores.iter().map(|s| s.mood.as_str()).collect();
    if cfg.moods.is_empty() {
        return Ok(scored.into_iter().map(String::from).collect());
    }
    for m in &cfg.moods {
        if !scored.contains(m.as_str()) {
            return Err(CliError::usage(format!("moods: `{m}` has no scores")));
        }
    }
    Ok(cfg.moods.clone())
}

enum TrainOutcome {
    Trained(Box<MoodModel>, usize),
    Skipped(String),
}

fn train(cfg: &Config) -> CliResult<Vec<PathBuf>> {
    let mut st = Stage::new(cfg, "train");
    let (songs, _) = load_song_input(cfg, &mut st)?;
    let embeddings = load_embedding_input(cfg, &mut st)?;
    let sp = scores_path(cfg)?;
    st.input(&sp);
    let scores = load_scores(&sp)?;
    let store = FeatureStore::build(&songs.records, &songs.split, cfg.min_df, embeddings)?;

    let p = st.path("vocab.csv");
    write_vocabulary(&p, &store.vocab)?;
    st.wrote(p);
    let p = st.path("scaler.csv");
    write_scaler(&p, &store.scaler, &AcousticFeatures::FIELD_NAMES)?;
    st.wrote(p);

    let moods = model_moods(cfg, &scores)?;
    let examples: BTreeMap<&str, Vec<(String, bool)>> = moods
        .iter()
        .map(|m| (m.as_str(), songmood_core::experiment::training_examples(&scores, &songs.split, m)))
        .collect();
    let jobs: Vec<(FeatureKind, &str)> = cfg
        .model_kinds
        .iter()
        .flat_map(|k| moods.iter().map(move |m| (*k, m.as_str())))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|(kind, mood)| {
            if kind.needs_embeddings() && store.embeddings().is_none() {
                return Ok(TrainOutcome::Skipped("no embeddings".into()));
            }
            match train_mood(*kind, &store, mood, &examples[mood], &cfg.train) {
                Ok((model, coverage)) => Ok(TrainOutcome::Trained(Box::new(model), coverage.missing.len())),
                Err(CoreError::DegenerateLabels) => Ok(TrainOutcome::Skipped("single class".into())),
                Err(CoreError::InsufficientData(why)) => Ok(TrainOutcome::Skipped(why)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>, CoreError>>()?;

    let models = st.path("models");
    let mut report = Vec::new();
    for ((kind, mood), outcome) in jobs.iter().zip(outcomes) {
        let ex = &examples[mood];
        let n_pos = ex.iter().filter(|e| e.1).count();
        let mut row = vec![kind.as_str().to_string(), mood.to_string()];
        match outcome {
            TrainOutcome::Trained(model, missing) => {
                let p = models
                    .join(kind.as_str())
                    .join(format!("{}.{}", file_stem(mood), cfg.model_format.extension()));
                save_model(&p, &model, cfg.model_format)?;
                st.wrote(p);
                let meta = match &model.model {
                    songmood_core::models::Model::Logistic(m) => &m.train_meta,
                    songmood_core::models::Model::Hybrid(h) => &h.train_meta,
                };
                row.extend([
                    "trained".to_string(),
                    meta.n_pos.to_string(),
                    meta.n_neg.to_string(),
                    missing.to_string(),
                    fmt_sig9(meta.final_loss),
                    meta.n_iters.to_string(),
                ]);
            }
            TrainOutcome::Skipped(why) => {
                warn!("train: skipped {} / {mood}: {why}", kind.as_str());
                row.extend([
                    format!("skipped: {why}"),
                    n_pos.to_string(),
                    (ex.len() - n_pos).to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
            }
        }
        report.push(row);
    }
    let p = st.path("report.csv");
    write_table(&p, &["kind", "mood", "status", "n_pos", "n_neg", "n_missing", "final_loss", "iters"], report)?;
    st.wrote(p);
    st.finish()
}

/// Every model file below `dir/<kind>/`, in path order.
fn load_models(dir: &Path) -> CliResult<Vec<(PathBuf, MoodModel)>> {
    let mut files = Vec::new();
    for kind in std::fs::read_dir(dir).in_file(dir)? {
        let kind = kind.in_file(dir)?.path();
        if !kind.is_dir() {
            continue;
        }
        for f in std::fs::read_dir(&kind).in_file(&kind)? {
            let f = f.in_file(&kind)?.path();
            if f.is_file() {
                files.push(f);
            }
        }
    }
    files.sort();
    files.into_iter().map(|f| load_model(&f).map(|m| (f, m))).collect()
}

fn predict(cfg: &Config) -> CliResult<Vec<PathBuf>> {
    let mut st = Stage::new(cfg, "predict");
    let dir = models_dir(cfg)?;
    let train_dir = dir.parent().map(Path::to_path_buf).unwrap_or_default();
    let vocab_path = existing("models", train_dir.join("vocab.csv"))?;
    let scaler_path = existing("models", train_dir.join("scaler.csv"))?;
    st.input(&vocab_path);
    st.input(&scaler_path);
    let (songs, _) = load_song_input(cfg, &mut st)?;
    let embeddings = load_embedding_input(cfg, &mut st)?;
    let store = FeatureStore::from_parts(
        load_vocabulary(&vocab_path)?,
        load_scaler(&scaler_path)?,
        &songs.records,
        embeddings,
    )
    .in_file(&scaler_path)?;
    let models = load_models(&dir)?;
    for (p, _) in &models {
        st.input(p);
    }
    let test: Vec<&str> = songs.split.test_ids.iter().map(String::as_str).collect();
    let per_model = models
        .par_iter()
        .map(|(path, model)| {
            let mut rows = Vec::new();
            let mut missing = 0usize;
            for song in &test {
                match model.predict(&store, song).in_file(path)? {
                    Some(p) => rows.push(PredictionRow {
                        song_id: song.to_string(),
                        mood: model.mood().to_string(),
                        kind: model.features.as_str().to_string(),
                        probability: p,
                        prediction: classify(p, cfg.threshold),
                    }),
                    None => missing += 1,
                }
            }
            Ok((rows, missing))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut missing = 0;
    for (r, m) in per_model {
        rows.extend(r);
        missing += m;
    }
    rows.sort_by(|a, b| (&a.song_id, &a.mood, &a.kind).cmp(&(&b.song_id, &b.mood, &b.kind)));
    let p = st.path("predictions.csv");
    write_predictions(&p, &rows)?;
    st.wrote(p);
    st.detail("models", json!(models.len()));
    st.detail("predictions", json!(rows.len()));
    st.detail("missing_features", json!(missing));
    st.finish()
}

fn annotation_truth(cfg: &Config, st: &mut Stage, which: EvaluateTruth) -> CliResult<BTreeMap<PairKey, Truth>> {
    let p = cfg.input("annotations", &cfg.annotations)?;
    st.input(&p);
    let verdicts = Verdicts::from_records(&load_annotations(&p)?).in_file(&p)?;
    let map = match which {
        EvaluateTruth::Lyrics => &verdicts.lyrics,
        EvaluateTruth::Acoustics => &verdicts.acoustics,
        _ => &verdicts.consensus,
    };
    Ok(Verdicts::truth(map))
}

fn label_truth(scores: &[AssociationScore]) -> BTreeMap<PairKey, Truth> {
    scores
        .iter()
        .filter_map(|s| {
            let t = match s.label {
                AssociationLabel::Positive => Truth::Positive,
                AssociationLabel::Negative => Truth::Negative,
                AssociationLabel::Neutral => return None,
            };
            Some(((s.song_id.clone(), s.mood.clone()), t))
        })
        .collect()
}

fn evaluate(cfg: &Config) -> CliResult<Vec<PathBuf>> {
    let mut st = Stage::new(cfg, "evaluate");
    let pp = existing("predictions", predictions_path(cfg))?;
    st.input(&pp);
    let rows = load_predictions(&pp)?;
    let predicted_songs: BTreeSet<&str> = rows.iter().map(|r| r.song_id.as_str()).collect();
    let truth: BTreeMap<PairKey, Truth> = match cfg.evaluate_truth {
        EvaluateTruth::Labels => {
            let sp = scores_path(cfg)?;
            st.input(&sp);
            label_truth(&load_scores(&sp)?)
        }
        which => annotation_truth(cfg, &mut st, which)?,
    };
    // truth over the songs that were predicted (the test split)
    let truth: BTreeMap<PairKey, Truth> = truth
        .into_iter()
        .filter(|(k, _)| predicted_songs.contains(k.0.as_str()))
        .collect();
    let mut summary = Vec::new();
    let mut coverage = Map::new();
    for (kind, preds) in predictions_by_kind(&rows) {
        let modelled: BTreeSet<&str> = preds.keys().map(|k| k.1.as_str()).collect();
        let scoped: BTreeMap<PairKey, Truth> = truth
            .iter()
            .filter(|(k, _)| modelled.contains(k.1.as_str()))
            .map(|(k, t)| (k.clone(), *t))
            .collect();
        let covered: BTreeMap<PairKey, Truth> = scoped
            .iter()
            .filter(|(k, _)| preds.contains_key(*k))
            .map(|(k, t)| (k.clone(), *t))
            .collect();
        coverage.insert(kind.clone(), json!({"truth_pairs": scoped.len(), "missing": scoped.len() - covered.len()}));
        let moods: Vec<&str> = modelled.iter().copied().collect();
        let report = per_mood_report(&preds, &covered, &moods)?;
        let p = st.path(&format!("metrics_{kind}.csv"));
        write_metrics(&p, &report)?;
        st.wrote(p);
        let mut total = report.total.clone();
        total.scope = kind.clone();
        summary.push(total);
    }
    let p = st.path("summary.csv");
    write_metrics(
        &p,
        &songmood_core::evaluation::MoodReport {
            total: songmood_core::evaluation::ReportRow::new("all", {
                let mut c = songmood_core::evaluation::ConfusionCounts::default();
                summary.iter().for_each(|r| c.add(&r.counts));
                c
            }),
            rows: summary,
        },
    )?;
    st.wrote(p);
    st.detail("coverage", Value::Object(coverage));
    st.finish()
}

fn sweep(cfg: &Config) -> CliResult<Vec<PathBuf>> {
    let mut st = Stage::new(cfg, "sweep");
    let sp = scores_path(cfg)?;
    st.input(&sp);
    let scores = load_scores(&sp)?;
    let which = match cfg.evaluate_truth {
        EvaluateTruth::Labels => EvaluateTruth::Consensus,
        w => w,
    };
    let truth = annotation_truth(cfg, &mut st, which)?;
    let by_pair: BTreeMap<PairKey, f64> = scores
        .iter()
        .map(|s| ((s.song_id.clone(), s.mood.clone()), s.bnpmi))
        .collect();
    let covered: BTreeMap<PairKey, Truth> = truth
        .iter()
        .filter(|(k, _)| by_pair.contains_key(*k))
        .map(|(k, t)| (k.clone(), *t))
        .collect();
    let points = threshold_sweep(&by_pair, &covered, &even_taus(cfg.sweep_points))?;
    let p = st.path("sweep.csv");
    write_sweep(&p, &points)?;
    st.wrote(p);
    if let Some(b) = best_f1(&points) {
        st.detail(
            "best",
            json!({"tau": fmt_sig9(b.tau), "precision": fmt_sig9(b.precision), "recall": fmt_sig9(b.recall), "f1": fmt_sig9(b.f1())}),
        );
    }
    st.detail("annotated_pairs", json!(truth.len()));
    st.detail("unscored_pairs", json!(truth.len() - covered.len()));
    st.finish()
}

fn feature_family(kind: &str) -> &'static str {
    match FeatureKind::parse(kind) {
        Some(k) if k.is_hybrid() => "hybrid",
        Some(k) if k.uses_acoustics() => "acoustics",
        Some(_) => "lyrics",
        None => "unknown",
    }
}

fn agree(cfg: &Config) -> CliResult<Vec<PathBuf>> {
    let mut st = Stage::new(cfg, "agree");
    let ap = cfg.input("annotations", &cfg.annotations)?;
    st.input(&ap);
    let records = load_annotations(&ap)?;
    let verdicts = Verdicts::from_records(&records).in_file(&ap)?;

    let mut kappas = Vec::new();
    for source in [Source::Lyrics, Source::Acoustics] {
        let subset: Vec<_> = records.iter().filter(|r| r.source == source).cloned().collect();
        match record_agreement(&subset) {
            Ok(r) => kappas.push((source.as_str().to_string(), r)),
            Err(e) => warn!("agree: no kappa for {}: {e}", source.as_str()),
        }
    }
    let p = st.path("kappa.csv");
    write_kappa(&p, &kappas)?;
    st.wrote(p);

    let pairs: BTreeSet<&PairKey> = verdicts.lyrics.keys().chain(verdicts.acoustics.keys()).collect();
    let code = |j: Option<&Judgment>| j.map(|j| j.code().to_string()).unwrap_or_default();
    let p = st.path("consensus.csv");
    write_table(
        &p,
        &["song_id", "mood", "lyrics", "acoustics", "consensus"],
        pairs.iter().map(|k| {
            vec![
                k.0.clone(),
                k.1.clone(),
                code(verdicts.lyrics.get(*k)),
                code(verdicts.acoustics.get(*k)),
                code(verdicts.consensus.get(*k)),
            ]
        }),
    )?;
    st.wrote(p);

    // predictors: the association labels, plus any trained models
    let mut predictors: Vec<(String, String, BTreeMap<PairKey, Prediction>)> = Vec::new();
    let sp = default_path(&cfg.scores, cfg.stage_dir("score").join("scores.csv"));
    if sp.exists() {
        st.input(&sp);
        let preds = load_scores(&sp)?
            .into_iter()
            .map(|s| {
                let p = if s.label == AssociationLabel::Positive {
                    Prediction::Positive
                } else {
                    Prediction::Negative
                };
                ((s.song_id, s.mood), p)
            })
            .collect();
        predictors.push(("association".into(), "bnpmi".into(), preds));
    }
    let pp = predictions_path(cfg);
    if pp.exists() {
        st.input(&pp);
        for (kind, preds) in predictions_by_kind(&load_predictions(&pp)?) {
            predictors.push((feature_family(&kind).into(), kind, preds));
        }
    }
    let truths = [
        ("lyrics", Verdicts::truth(&verdicts.lyrics)),
        ("acoustics", Verdicts::truth(&verdicts.acoustics)),
        ("consensus", Verdicts::truth(&verdicts.consensus)),
    ];
    let mut rows = Vec::new();
    for (gt, truth) in &truths {
        for (feature, approach, preds) in &predictors {
            let covered: BTreeMap<PairKey, Truth> = truth
                .iter()
                .filter(|(k, _)| preds.contains_key(*k))
                .map(|(k, t)| (k.clone(), *t))
                .collect();
            let moods: BTreeSet<&str> = covered.keys().map(|k| k.1.as_str()).collect();
            let report = per_mood_report(preds, &covered, &moods.into_iter().collect::<Vec<_>>())?;
            rows.push(agreement_cells(gt, feature, approach, &report.total));
        }
    }
    let p = st.path("agreement.csv");
    write_table(&p, &AGREEMENT_HEADER, rows)?;
    st.wrote(p);
    st.detail("annotated_pairs", json!(pairs.len()));
    st.finish()
}

fn simulate(cfg: &Config) -> CliResult<Vec<PathBuf>> {
    let mut st = Stage::new(cfg, "sim");
    let sim = generate(&cfg.sim)?;
    let p = st.path("playlists.jsonl");
    write_playlists(&p, &sim.playlists)?;
    st.wrote(p);
    let p = st.path("songs.jsonl");
    write_songs(&p, &sim.songs)?;
    st.wrote(p);
    let p = st.path("lexicon.csv");
    write_lexicon(&p, &sim.lexicon)?;
    st.wrote(p);
    let p = st.path("embeddings.csv");
    write_embeddings(&p, &sim.embeddings)?;
    st.wrote(p);
    let p = st.path("ground_truth.csv");
    write_ground_truth(&p, &sim.truth)?;
    st.wrote(p);
    let pairs: Vec<PairKey> = sim
        .truth
        .song_ids
        .iter()
        .flat_map(|s| sim.truth.moods.iter().map(move |m| (s.clone(), m.clone())))
        .collect();
    let annotations = simulate_annotations(&sim.truth, &pairs, cfg.sim.annotator_accuracy, substream_seed(cfg.seed, "simulate"))?;
    let p = st.path("annotations.csv");
    write_annotations(&p, &annotations)?;
    st.wrote(p);
    st.detail("playlists", json!(sim.playlists.len()));
    st.detail("songs", json!(sim.songs.len()));
    st.finish()
}

/// simulate, then every downstream stage on the simulated corpus.
fn pipeline(cfg: &Config) -> CliResult<Vec<PathBuf>> {
    let mut outputs = simulate(cfg)?;
    let sim_dir = cfg.stage_dir("sim");
    let mut raw = cfg.raw.clone();
    for (key, file) in [
        ("playlists", "playlists.jsonl"),
        ("songs", "songs.jsonl"),
        ("lexicon", "lexicon.csv"),
        ("embeddings", "embeddings.csv"),
        ("ground_truth", "ground_truth.csv"),
        ("annotations", "annotations.csv"),
    ] {
        if raw.values[key].1 == Origin::Default {
            raw.set(key, &sim_dir.join(file).to_string_lossy(), Origin::Derived)?;
        }
    }
    let derived = Config::from_raw(raw)?;
    for stage in [ingest, score, train, predict, evaluate, sweep, agree] {
        outputs.extend(stage(&derived)?);
    }
    let mut st = Stage::new(&derived, "pipeline");
    st.dir = derived.out.clone();
    for p in &outputs {
        st.wrote(p.clone());
    }
    st.finish()
}
