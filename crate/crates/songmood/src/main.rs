use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use songmood::commands::{run, Command};
use songmood::config::{Config, RawConfig, KEYS};
use songmood::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "songmood", version, about = "Song-mood association mining and mood classifiers")]
#[command(after_long_help = key_help())]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set sim.n_songs=500`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Association label threshold.
    #[arg(long, global = true)]
    tau: Option<String>,
    #[arg(long, global = true)]
    playlists: Option<PathBuf>,
    #[arg(long, global = true)]
    songs: Option<PathBuf>,
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    #[arg(long, global = true)]
    annotations: Option<PathBuf>,
    #[arg(long, global = true)]
    scores: Option<PathBuf>,
    /// Fail on the first malformed input line.
    #[arg(long, global = true)]
    strict: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Parse and validate the corpus, write the train/test split.
    Ingest,
    /// Count co-occurrences and score every song-mood pair.
    Score,
    /// Fit per-mood classifiers on the train split.
    Train,
    /// Score the test split with trained models.
    Predict,
    /// Per-mood metrics of predictions.
    Evaluate,
    /// Precision and recall of association labels over thresholds.
    Sweep,
    /// Annotator agreement and predictor-annotation agreement.
    Agree,
    /// Generate a synthetic corpus with known affinities.
    Simulate,
    /// simulate, then every stage on the simulated corpus.
    Pipeline,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::Ingest => Command::Ingest,
            Cmd::Score => Command::Score,
            Cmd::Train => Command::Train,
            Cmd::Predict => Command::Predict,
            Cmd::Evaluate => Command::Evaluate,
            Cmd::Sweep => Command::Sweep,
            Cmd::Agree => Command::Agree,
            Cmd::Simulate => Command::Simulate,
            Cmd::Pipeline => Command::Pipeline,
        }
    }
}

fn key_help() -> String {
    let mut s = String::from("Config keys (file < --set < dedicated flags):\n");
    for (k, d, desc) in KEYS {
        let d = if d.is_empty() { "-" } else { d };
        s.push_str(&format!("  {k:<30} {desc} [default: {d}]\n"));
    }
    s
}

fn config(cli: &Cli) -> CliResult<Config> {
    let mut raw = RawConfig::default();
    if let Some(p) = &cli.config {
        raw.apply_file(p)?;
    }
    for kv in &cli.set {
        raw.apply_flag(kv)?;
    }
    let path = |p: &PathBuf| p.to_string_lossy().into_owned();
    let flags = [
        ("out", cli.out.as_ref().map(path)),
        ("seed", cli.seed.map(|s| s.to_string())),
        ("threads", cli.threads.map(|t| t.to_string())),
        ("tau", cli.tau.clone()),
        ("playlists", cli.playlists.as_ref().map(path)),
        ("songs", cli.songs.as_ref().map(path)),
        ("lexicon", cli.lexicon.as_ref().map(path)),
        ("embeddings", cli.embeddings.as_ref().map(path)),
        ("annotations", cli.annotations.as_ref().map(path)),
        ("scores", cli.scores.as_ref().map(path)),
        ("strict_parse", cli.strict.then(|| "true".to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            raw.apply_flag(&format!("{k}={v}"))?;
        }
    }
    Config::from_raw(raw)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result: Result<_, CliError> = config(&cli).and_then(|cfg| run(cli.command.into(), &cfg));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("songmood: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
