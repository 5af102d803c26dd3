//! Run configuration: built-in defaults, then a `key = value` file, then
//! command-line overrides. Every resolved value remembers where it came
//! from so the manifest can record it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use songmood_core::association::{BinningConfig, PriorUniverse, ScoreConfig};
use songmood_core::experiment::FeatureKind;
use songmood_core::models::TrainConfig;
use songmood_core::simulate::SimConfig;

use crate::error::{CliError, CliResult};
use crate::formats::model::ModelFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Origin {
    Default,
    File,
    Flag,
    /// Set by `pipeline` to point at a previous stage's output.
    Derived,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Default => "default",
            Origin::File => "file",
            Origin::Flag => "flag",
            Origin::Derived => "pipeline",
        }
    }
}

/// `(key, default, description)` for every recognised key.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("out", "out", "output directory; every artifact is written below it"),
    ("playlists", "", "playlist JSONL"),
    ("songs", "", "song JSONL"),
    ("lexicon", "", "lexicon CSV (term,pos,template_override)"),
    ("embeddings", "", "lyric embedding CSV (song_id,v0,...)"),
    ("annotations", "", "annotation CSV"),
    ("ground_truth", "", "simulator ground truth CSV, enables recovery checks"),
    ("counts", "", "count snapshot to score from instead of playlists"),
    ("scores", "", "scores CSV (default: <out>/score/scores.csv)"),
    ("models", "", "model directory (default: <out>/train/models)"),
    ("predictions", "", "predictions CSV (default: <out>/predict/predictions.csv)"),
    ("seed", "0", "top-level seed"),
    ("threads", "0", "worker threads, 0 = one per core"),
    ("tau", "0.1", "association label threshold, in (0, 1)"),
    ("train_fraction", "0.75", "share of songs in the train split, in (0, 1)"),
    ("strict_parse", "false", "fail on the first malformed input line"),
    ("include_zero_joint", "false", "also score pairs that never co-occur"),
    ("prior_universe", "all", "songs the prior averages over: all | cooccurring"),
    ("histogram_bins", "20", "bins of the score distribution"),
    ("top_k", "20", "rows of the top-moods table"),
    ("min_df", "2", "minimum document frequency of a vocabulary term"),
    ("model_kinds", "bow,acoustic,hybrid_bow,embedding,hybrid_embed", "models to train"),
    ("model_format", "json", "model file format: json | binary"),
    ("moods", "", "comma-separated moods to model (default: all)"),
    ("threshold", "0.5", "probability threshold for a positive prediction"),
    ("evaluate_truth", "labels", "evaluation truth: labels | consensus | lyrics | acoustics"),
    ("sweep_points", "19", "evenly spaced thresholds in the sweep"),
    ("l2_lambda", "0.0001", "L2 penalty on weights"),
    ("max_iters", "500", "gradient steps"),
    ("tol", "1e-7", "relative loss decrease that stops training"),
    ("initial_step", "1", "first line-search step"),
    ("step_growth", "2", "step multiplier after an accepted move"),
    ("step_shrink", "0.5", "step multiplier while backtracking"),
    ("armijo", "0.0001", "sufficient-decrease constant"),
    ("hidden_width", "32", "hidden units of the hybrid head"),
    ("class_weighting", "false", "inverse-frequency class weights"),
    ("sim.n_songs", "200", "simulated songs"),
    ("sim.n_moods", "10", "simulated moods"),
    ("sim.n_playlists", "50000", "simulated playlists"),
    ("sim.tracks_min", "5", "fewest tracks drawn per playlist"),
    ("sim.tracks_max", "20", "most tracks drawn per playlist"),
    ("sim.mood_title_probability", "0.9", "chance a themed playlist names its mood"),
    ("sim.affinity_concentration", "1", "large = one-hot affinities, small = uniform"),
    ("sim.noise_playlist_fraction", "0.1", "share of playlists with uniform tracks"),
    ("sim.lyric_vocab_size", "500", "background lyric vocabulary"),
    ("sim.lyric_length", "20", "background tokens per song"),
    ("sim.lyric_signal", "10", "indicative tokens at affinity 1"),
    ("sim.acoustic_signal", "8", "acoustic shift at affinity 1"),
    ("sim.embedding_dim", "64", "embedding dimension"),
    ("sim.embedding_noise", "0.1", "embedding noise scale"),
    ("sim.annotator_accuracy", "0.8", "chance a simulated annotator is right"),
];

/// Keys whose values are file system paths.
pub const PATH_KEYS: &[&str] = &[
    "out",
    "playlists",
    "songs",
    "lexicon",
    "embeddings",
    "annotations",
    "ground_truth",
    "counts",
    "scores",
    "models",
    "predictions",
];

pub fn is_known(key: &str) -> bool {
    KEYS.iter().any(|(k, _, _)| *k == key)
}

/// Resolved raw values with their origins.
#[derive(Debug, Clone, PartialEq)]
pub struct RawConfig {
    pub values: BTreeMap<String, (String, Origin)>,
}

impl Default for RawConfig {
    fn default() -> Self {
        RawConfig {
            values: KEYS
                .iter()
                .map(|(k, v, _)| (k.to_string(), (v.to_string(), Origin::Default)))
                .collect(),
        }
    }
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> CliResult<()> {
        let key = key.trim();
        if !is_known(key) {
            return Err(CliError::usage(format!("unknown config key `{key}`")));
        }
        self.values.insert(key.to_string(), (value.trim().to_string(), origin));
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn apply_file_text(&mut self, text: &str, name: &str) -> CliResult<()> {
        let mut seen = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("{name}:{}: expected key = value", i + 1)))?;
            if seen.insert(k.trim().to_string(), i + 1).is_some() {
                return Err(CliError::usage(format!("{name}:{}: `{}` set twice", i + 1, k.trim())));
            }
            self.set(k, v, Origin::File)
                .map_err(|e| CliError::usage(format!("{name}:{}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_file_text(&text, &path.display().to_string())
    }

    /// Applies a `key=value` override from the command line.
    pub fn apply_flag(&mut self, kv: &str) -> CliResult<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--set expects key=value, got `{kv}`")))?;
        self.set(k, v, Origin::Flag)
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(|(v, _)| v.as_str()).unwrap_or("")
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub raw: RawConfig,
    pub out: PathBuf,
    pub playlists: Option<PathBuf>,
    pub songs: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub counts: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub models: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub seed: u64,
    pub threads: usize,
    pub train_fraction: f64,
    pub strict_parse: bool,
    pub score: ScoreConfig,
    pub histogram_bins: usize,
    pub top_k: usize,
    pub min_df: u64,
    pub model_kinds: Vec<FeatureKind>,
    pub model_format: ModelFormat,
    pub moods: Vec<String>,
    pub threshold: f64,
    pub evaluate_truth: EvaluateTruth,
    pub sweep_points: usize,
    pub train: TrainConfig,
    pub sim: SimConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluateTruth {
    Labels,
    Consensus,
    Lyrics,
    Acoustics,
}

fn invalid(key: &str, value: &str, why: &str) -> CliError {
    CliError::usage(format!("{key}: {why}, got `{value}`"))
}

struct Reader<'a>(&'a RawConfig);

impl Reader<'_> {
    fn parse<T: std::str::FromStr>(&self, key: &str, why: &str) -> CliResult<T> {
        let v = self.0.get(key);
        v.parse().map_err(|_| invalid(key, v, why))
    }

    fn real(&self, key: &str) -> CliResult<f64> {
        let x: f64 = self.parse(key, "expected a number")?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(invalid(key, self.0.get(key), "expected a finite number"))
        }
    }

    fn unit_open(&self, key: &str) -> CliResult<f64> {
        let x = self.real(key)?;
        if x > 0.0 && x < 1.0 {
            Ok(x)
        } else {
            Err(invalid(key, self.0.get(key), "must be in (0, 1)"))
        }
    }

    fn positive(&self, key: &str) -> CliResult<f64> {
        let x = self.real(key)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(invalid(key, self.0.get(key), "must be positive"))
        }
    }

    fn count(&self, key: &str) -> CliResult<usize> {
        self.parse(key, "expected a non-negative integer")
    }

    fn flag(&self, key: &str) -> CliResult<bool> {
        match self.0.get(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => Err(invalid(key, v, "expected true or false")),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.0.get(key);
        (!v.is_empty()).then(|| PathBuf::from(v))
    }

    fn list(&self, key: &str) -> Vec<String> {
        self.0
            .get(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect()
    }
}

impl Config {
    pub fn from_raw(raw: RawConfig) -> CliResult<Config> {
        let r = Reader(&raw);
        let tau = r.unit_open("tau")?;
        let universe = match raw.get("prior_universe") {
            "all" => PriorUniverse::AllSongs,
            "cooccurring" => PriorUniverse::Cooccurring,
            v => return Err(invalid("prior_universe", v, "expected all or cooccurring")),
        };
        let model_kinds = r
            .list("model_kinds")
            .iter()
            .map(|k| FeatureKind::parse(k).ok_or_else(|| invalid("model_kinds", k, "unknown model kind")))
            .collect::<CliResult<Vec<_>>>()?;
        let model_format = ModelFormat::parse(raw.get("model_format"))
            .ok_or_else(|| invalid("model_format", raw.get("model_format"), "expected json or binary"))?;
        let evaluate_truth = match raw.get("evaluate_truth") {
            "labels" => EvaluateTruth::Labels,
            "consensus" => EvaluateTruth::Consensus,
            "lyrics" => EvaluateTruth::Lyrics,
            "acoustics" => EvaluateTruth::Acoustics,
            v => return Err(invalid("evaluate_truth", v, "expected labels, consensus, lyrics or acoustics")),
        };
        let threshold = r.real("threshold")?;
        if !(0.0..=1.0).contains(&threshold) {
            return Err(invalid("threshold", raw.get("threshold"), "must be in [0, 1]"));
        }
        let train = TrainConfig {
            l2_lambda: r.real("l2_lambda")?,
            max_iters: r.count("max_iters")?,
            tol: r.positive("tol")?,
            initial_step: r.positive("initial_step")?,
            step_growth: r.real("step_growth")?,
            step_shrink: r.real("step_shrink")?,
            armijo: r.positive("armijo")?,
            hidden_width: r.count("hidden_width")?,
            class_weighting: r.flag("class_weighting")?,
            seed: r.parse("seed", "expected a non-negative integer")?,
        };
        train.validate().map_err(CliError::usage)?;
        let sim = SimConfig {
            n_songs: r.count("sim.n_songs")?,
            n_moods: r.count("sim.n_moods")?,
            n_playlists: r.count("sim.n_playlists")?,
            tracks_per_playlist: (r.count("sim.tracks_min")?, r.count("sim.tracks_max")?),
            mood_title_probability: r.real("sim.mood_title_probability")?,
            affinity_concentration: r.real("sim.affinity_concentration")?,
            noise_playlist_fraction: r.real("sim.noise_playlist_fraction")?,
            lyric_vocab_size: r.count("sim.lyric_vocab_size")?,
            lyric_length: r.count("sim.lyric_length")?,
            lyric_signal: r.real("sim.lyric_signal")?,
            acoustic_signal: r.real("sim.acoustic_signal")?,
            embedding_dim: r.count("sim.embedding_dim")?,
            embedding_noise: r.real("sim.embedding_noise")?,
            annotator_accuracy: r.real("sim.annotator_accuracy")?,
            seed: train.seed,
        };
        let histogram_bins = r.count("histogram_bins")?;
        if histogram_bins == 0 {
            return Err(invalid("histogram_bins", raw.get("histogram_bins"), "must be positive"));
        }
        let sweep_points = r.count("sweep_points")?;
        if sweep_points == 0 {
            return Err(invalid("sweep_points", raw.get("sweep_points"), "must be positive"));
        }
        Ok(Config {
            out: r.path("out").ok_or_else(|| invalid("out", "", "must not be empty"))?,
            playlists: r.path("playlists"),
            songs: r.path("songs"),
            lexicon: r.path("lexicon"),
            embeddings: r.path("embeddings"),
            annotations: r.path("annotations"),
            ground_truth: r.path("ground_truth"),
            counts: r.path("counts"),
            scores: r.path("scores"),
            models: r.path("models"),
            predictions: r.path("predictions"),
            seed: train.seed,
            threads: r.count("threads")?,
            train_fraction: r.unit_open("train_fraction")?,
            strict_parse: r.flag("strict_parse")?,
            score: ScoreConfig {
                binning: BinningConfig::new(tau).map_err(|e| CliError::usage(format!("tau: {e}")))?,
                include_zero_joint: r.flag("include_zero_joint")?,
                universe,
            },
            histogram_bins,
            top_k: r.count("top_k")?,
            min_df: r.parse("min_df", "expected a non-negative integer")?,
            model_kinds,
            model_format,
            moods: r.list("moods"),
            threshold,
            evaluate_truth,
            sweep_points,
            train,
            sim,
            raw,
        })
    }

    /// Requires an input path and checks that it exists.
    pub fn input(&self, key: &str, value: &Option<PathBuf>) -> CliResult<PathBuf> {
        let p = value
            .clone()
            .ok_or_else(|| CliError::usage(format!("{key}: no path given (use --{key} or --set {key}=...)")))?;
        if !p.exists() {
            return Err(CliError::usage(format!("{key}: {} does not exist", p.display())));
        }
        Ok(p)
    }

    /// Optional input that must exist when given.
    pub fn optional_input(&self, key: &str, value: &Option<PathBuf>) -> CliResult<Option<PathBuf>> {
        match value {
            Some(_) => self.input(key, value).map(Some),
            None => Ok(None),
        }
    }

    pub fn stage_dir(&self, stage: &str) -> PathBuf {
        self.out.join(stage)
    }
}
