//! Synthetic corpora with a known song-mood affinity.
//!
//! Each song gets an affinity row on the simplex. Themed playlists pick a
//! mood, put its term in the title and draw tracks in proportion to that
//! mood's affinity column; noise playlists draw tracks uniformly. Every mood
//! is driven by one modality: lyric-driven moods plant indicative tokens in
//! the lyrics (and hence the embedding), acoustic-driven moods shift a pair
//! of acoustic dimensions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use libm::{exp, log, round, sqrt};
use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationRecord, Judgment, Source};
use crate::association::AssociationScore;
use crate::features::{AcousticFeatures, EmbeddingTable};
use crate::ingest::{PlaylistRecord, SongRecord};
use crate::lexicon::MoodLexicon;
use crate::rng::{record_stream, substream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_songs: usize,
    pub n_moods: usize,
    pub n_playlists: usize,
    /// Inclusive `(min, max)` tracks drawn per playlist.
    pub tracks_per_playlist: (usize, usize),
    pub mood_title_probability: f64,
    /// Large values push affinity rows toward one-hot, small ones toward
    /// uniform.
    pub affinity_concentration: f64,
    pub noise_playlist_fraction: f64,
    pub lyric_vocab_size: usize,
    /// Background tokens per song.
    pub lyric_length: usize,
    /// Indicative tokens planted at affinity 1.
    pub lyric_signal: f64,
    /// Shift of a designated acoustic dimension at affinity 1, in units of
    /// the background standard deviation.
    pub acoustic_signal: f64,
    pub embedding_dim: usize,
    pub embedding_noise: f64,
    /// Chance that a simulated annotator gives the correct verdict.
    pub annotator_accuracy: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_songs: 200,
            n_moods: 10,
            n_playlists: 50_000,
            tracks_per_playlist: (5, 20),
            mood_title_probability: 0.9,
            affinity_concentration: 1.0,
            noise_playlist_fraction: 0.1,
            lyric_vocab_size: 500,
            lyric_length: 20,
            lyric_signal: 10.0,
            acoustic_signal: 8.0,
            embedding_dim: 64,
            embedding_noise: 0.1,
            annotator_accuracy: 0.8,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let count = |name: &'static str, v: usize| {
            if v >= 1 {
                Ok(())
            } else {
                Err(Error::arg(name, "must be at least 1"))
            }
        };
        count("n_songs", self.n_songs)?;
        count("n_moods", self.n_moods)?;
        count("n_playlists", self.n_playlists)?;
        count("lyric_vocab_size", self.lyric_vocab_size)?;
        count("lyric_length", self.lyric_length)?;
        count("embedding_dim", self.embedding_dim)?;
        let (lo, hi) = self.tracks_per_playlist;
        if lo < 1 || lo > hi {
            return Err(Error::arg("tracks_per_playlist", "need 1 <= min <= max"));
        }
        if hi > self.n_songs {
            return Err(Error::InfeasibleConfig(format!(
                "tracks_per_playlist max {hi} exceeds n_songs {}",
                self.n_songs
            )));
        }
        let available = MoodLexicon::builtin().len();
        if self.n_moods > available {
            return Err(Error::InfeasibleConfig(format!(
                "n_moods {} exceeds the {available} built-in mood terms",
                self.n_moods
            )));
        }
        if !(self.mood_title_probability > 0.0 && self.mood_title_probability <= 1.0) {
            return Err(Error::arg("mood_title_probability", "must be in (0, 1]"));
        }
        if self.affinity_concentration.is_nan() || self.affinity_concentration <= 0.0 {
            return Err(Error::arg("affinity_concentration", "must be > 0"));
        }
        if !(self.noise_playlist_fraction >= 0.0 && self.noise_playlist_fraction < 1.0) {
            return Err(Error::arg("noise_playlist_fraction", "must be in [0, 1)"));
        }
        for (name, v) in [
            ("lyric_signal", self.lyric_signal),
            ("acoustic_signal", self.acoustic_signal),
            ("embedding_noise", self.embedding_noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::arg(name, "must be finite and >= 0"));
            }
        }
        if !(self.annotator_accuracy >= 0.0 && self.annotator_accuracy <= 1.0) {
            return Err(Error::arg("annotator_accuracy", "must be in [0, 1]"));
        }
        Ok(())
    }
}

/// The modality that carries a mood's signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Driver {
    Lyrics,
    Acoustics,
}

impl Driver {
    pub fn as_str(self) -> &'static str {
        match self {
            Driver::Lyrics => "lyrics",
            Driver::Acoustics => "acoustics",
        }
    }

    pub fn parse(s: &str) -> Option<Driver> {
        match s {
            "lyrics" => Some(Driver::Lyrics),
            "acoustics" => Some(Driver::Acoustics),
            _ => None,
        }
    }

    pub fn source(self) -> Source {
        match self {
            Driver::Lyrics => Source::Lyrics,
            Driver::Acoustics => Source::Acoustics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub song_ids: Vec<String>,
    pub moods: Vec<String>,
    /// `n_songs x n_moods`, each row summing to 1.
    pub affinity: Vec<Vec<f64>>,
    pub drivers: Vec<Driver>,
}

impl GroundTruth {
    pub fn song_index(&self, song: &str) -> Option<usize> {
        self.song_ids.binary_search_by(|s| s.as_str().cmp(song)).ok()
    }

    pub fn mood_index(&self, mood: &str) -> Option<usize> {
        self.moods.iter().position(|m| m == mood)
    }

    pub fn affinity_of(&self, song: &str, mood: &str) -> Option<f64> {
        Some(self.affinity[self.song_index(song)?][self.mood_index(mood)?])
    }

    pub fn driver(&self, mood: &str) -> Option<Driver> {
        self.mood_index(mood).map(|m| self.drivers[m])
    }

    pub fn is_lyric_driven(&self, mood: &str) -> bool {
        self.driver(mood) == Some(Driver::Lyrics)
    }

    pub fn is_acoustic_driven(&self, mood: &str) -> bool {
        self.driver(mood) == Some(Driver::Acoustics)
    }

    /// A song is relevant to a mood when its affinity beats a uniform share.
    pub fn is_relevant(&self, song: usize, mood: usize) -> bool {
        self.affinity[song][mood] >= 1.0 / self.moods.len() as f64
    }

    pub fn check(&self) -> Result<()> {
        for (i, row) in self.affinity.iter().enumerate() {
            let total: f64 = row.iter().sum();
            if row.len() != self.moods.len() || (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument {
                    name: "affinity",
                    reason: format!("row {i} is not on the simplex"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimCorpus {
    pub lexicon: MoodLexicon,
    pub playlists: Vec<PlaylistRecord>,
    pub songs: Vec<SongRecord>,
    pub embeddings: EmbeddingTable,
    pub truth: GroundTruth,
}

const TITLE_TEMPLATES: [&str; 3] = ["{term} mix", "my {term} playlist", "songs for {term}"];

fn digits(n: usize) -> usize {
    let mut d = 1;
    let mut n = n / 10;
    while n > 0 {
        d += 1;
        n /= 10;
    }
    d
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

/// Alternating drivers starting with lyrics, so `love` leans on lyrics and
/// `chill` on acoustics.
pub fn drivers(n_moods: usize) -> Vec<Driver> {
    (0..n_moods)
        .map(|m| if m % 2 == 0 { Driver::Lyrics } else { Driver::Acoustics })
        .collect()
}

/// Symmetric Dirichlet with parameter `1 / concentration`, sampled in log
/// space so tiny parameters do not underflow.
fn simplex_row(rng: &mut ChaCha8Rng, k: usize, concentration: f64) -> Vec<f64> {
    let a = 1.0 / concentration;
    let gamma = Gamma::new(a + 1.0, 1.0).expect("shape is positive");
    let logs: Vec<f64> = (0..k)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            log(g) + log(u) / a
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut row: Vec<f64> = logs.iter().map(|l| exp(l - top)).collect();
    let total: f64 = row.iter().sum();
    for v in &mut row {
        *v /= total;
    }
    row
}

/// Lexicon term squeezed into a single token.
fn indicative_stem(term: &str) -> String {
    term.chars().filter(|c| c.is_alphanumeric()).collect()
}

/// The acoustic dimensions shifted by acoustic-driven mood number `k`.
pub fn designated_dimensions(k: usize) -> [usize; 2] {
    [(2 * k) % AcousticFeatures::DIMS, (2 * k + 1) % AcousticFeatures::DIMS]
}

pub fn generate(config: &SimConfig) -> Result<SimCorpus> {
    config.validate()?;
    let lexicon = MoodLexicon::builtin().truncated(config.n_moods)?;
    let moods: Vec<String> = lexicon.terms().map(String::from).collect();
    let drivers = drivers(config.n_moods);
    let width = digits(config.n_songs.saturating_sub(1));
    let song_ids: Vec<String> = (0..config.n_songs).map(|i| format!("s{i:0width$}")).collect();

    let mut rng = substream(config.seed, "simulate.affinity");
    let affinity: Vec<Vec<f64>> = (0..config.n_songs)
        .map(|_| simplex_row(&mut rng, config.n_moods, config.affinity_concentration))
        .collect();
    let truth = GroundTruth {
        song_ids: song_ids.clone(),
        moods: moods.clone(),
        affinity,
        drivers: drivers.clone(),
    };
    truth.check()?;

    let playlists = generate_playlists(config, &truth)?;
    let (songs, embeddings) = generate_songs(config, &truth)?;
    Ok(SimCorpus {
        lexicon,
        playlists,
        songs,
        embeddings,
        truth,
    })
}

/// Playlist `index` of the corpus; depends only on the config, the truth
/// and the index.
pub fn generate_playlist(config: &SimConfig, truth: &GroundTruth, columns: &[Option<WeightedIndex<f64>>], index: usize) -> PlaylistRecord {
    let width = digits(config.n_playlists.saturating_sub(1));
    let mut rng = record_stream(config.seed, "simulate.playlists", index as u64);
    let (lo, hi) = config.tracks_per_playlist;
    let k = rng.random_range(lo..=hi);
    let noise = rng.random::<f64>() < config.noise_playlist_fraction;
    let n_songs = truth.song_ids.len();
    let (title, picks) = if noise {
        let picks = rand::seq::index::sample(&mut rng, n_songs, k).into_vec();
        (format!("playlist {index}"), picks)
    } else {
        let m = rng.random_range(0..truth.moods.len());
        let title = if rng.random::<f64>() < config.mood_title_probability {
            let t = TITLE_TEMPLATES[rng.random_range(0..TITLE_TEMPLATES.len())];
            t.replace("{term}", &truth.moods[m])
        } else {
            format!("playlist {index}")
        };
        let mut picks = Vec::with_capacity(k);
        match &columns[m] {
            Some(w) => {
                for _ in 0..k {
                    let s = w.sample(&mut rng);
                    if !picks.contains(&s) {
                        picks.push(s);
                    }
                }
            }
            None => picks = rand::seq::index::sample(&mut rng, n_songs, k).into_vec(),
        }
        (title, picks)
    };
    PlaylistRecord {
        playlist_id: format!("p{index:0width$}"),
        title,
        description: None,
        track_ids: picks.into_iter().map(|s| truth.song_ids[s].clone()).collect(),
    }
}

/// Per-mood track samplers; `None` where the column has no mass.
pub fn mood_samplers(truth: &GroundTruth) -> Vec<Option<WeightedIndex<f64>>> {
    (0..truth.moods.len())
        .map(|m| WeightedIndex::new(truth.affinity.iter().map(|row| row[m])).ok())
        .collect()
}

fn generate_playlists(config: &SimConfig, truth: &GroundTruth) -> Result<Vec<PlaylistRecord>> {
    let columns = mood_samplers(truth);
    Ok((0..config.n_playlists)
        .map(|i| generate_playlist(config, truth, &columns, i))
        .collect())
}

fn generate_songs(config: &SimConfig, truth: &GroundTruth) -> Result<(Vec<SongRecord>, EmbeddingTable)> {
    let dim = config.embedding_dim;
    let n_moods = truth.moods.len();
    let stems: Vec<String> = truth.moods.iter().map(|m| indicative_stem(m)).collect();

    // token images: background tokens are random directions, indicative
    // tokens of a mood cluster around that mood's direction
    let mut rng = substream(config.seed, "simulate.embedding");
    let background: Vec<Vec<f64>> = (0..config.lyric_vocab_size)
        .map(|_| (0..dim).map(|_| normal(&mut rng)).collect())
        .collect();
    let directions: Vec<Vec<f64>> = (0..n_moods)
        .map(|_| (0..dim).map(|_| normal(&mut rng)).collect())
        .collect();
    let max_planted = round(config.lyric_signal) as usize;
    let mut indicative: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for (m, dir) in directions.iter().enumerate() {
        for k in 0..max_planted {
            let v = dir.iter().map(|d| d + 0.1 * normal(&mut rng)).collect();
            indicative.insert((m, k), v);
        }
    }

    let mut acoustic_rank = alloc::vec![usize::MAX; n_moods];
    let mut next = 0;
    for (m, d) in truth.drivers.iter().enumerate() {
        if *d == Driver::Acoustics {
            acoustic_rank[m] = next;
            next += 1;
        }
    }

    let uniform_token = Uniform::new(0, config.lyric_vocab_size).expect("vocabulary is nonempty");
    let mut songs = Vec::with_capacity(truth.song_ids.len());
    let mut table = EmbeddingTable::new(dim)?;
    for (i, id) in truth.song_ids.iter().enumerate() {
        let mut rng = record_stream(config.seed, "simulate.songs", i as u64);
        let row = &truth.affinity[i];
        let mut tokens: Vec<String> = Vec::with_capacity(config.lyric_length + max_planted);
        let mut images: BTreeMap<String, &Vec<f64>> = BTreeMap::new();
        for _ in 0..config.lyric_length {
            let t = uniform_token.sample(&mut rng);
            let word = format!("w{t}");
            images.insert(word.clone(), &background[t]);
            tokens.push(word);
        }
        let mut acoustic = [0.0; AcousticFeatures::DIMS];
        for v in &mut acoustic {
            *v = normal(&mut rng);
        }
        for m in 0..n_moods {
            match truth.drivers[m] {
                Driver::Lyrics => {
                    let r = (round(row[m] * config.lyric_signal) as usize).min(max_planted);
                    for k in 0..r {
                        let word = format!("{}{k}", stems[m]);
                        images.insert(word.clone(), &indicative[&(m, k)]);
                        tokens.push(word);
                    }
                }
                Driver::Acoustics => {
                    for d in designated_dimensions(acoustic_rank[m]) {
                        acoustic[d] += row[m] * config.acoustic_signal;
                    }
                }
            }
        }
        let scale = 1.0 / sqrt(images.len() as f64);
        let mut emb = alloc::vec![0.0; dim];
        for v in images.values() {
            for (e, x) in emb.iter_mut().zip(v.iter()) {
                *e += x * scale;
            }
        }
        for e in &mut emb {
            *e += config.embedding_noise * normal(&mut rng);
        }
        table.insert(id, emb)?;
        songs.push(SongRecord {
            song_id: id.clone(),
            lyrics: tokens.join(" "),
            acoustic: Some(AcousticFeatures::from_array(acoustic)?),
        });
    }
    Ok((songs, table))
}

/// Three simulated annotators per source for each pair. An annotator is
/// right with `accuracy` and otherwise picks one of the two wrong answers.
/// The right answer is Yes/No from the mood's driving modality and
/// Uninformative from the other one.
pub fn simulate_annotations(
    truth: &GroundTruth,
    pairs: &[(String, String)],
    accuracy: f64,
    seed: u64,
) -> Result<Vec<AnnotationRecord>> {
    let mut out = Vec::with_capacity(pairs.len() * 2);
    for (song, mood) in pairs {
        let s = truth
            .song_index(song)
            .ok_or_else(|| Error::arg("pairs", format!("unknown song {song}")))?;
        let m = truth
            .mood_index(mood)
            .ok_or_else(|| Error::arg("pairs", format!("unknown mood {mood}")))?;
        let relevant = truth.is_relevant(s, m);
        let index = (s * truth.moods.len() + m) as u64;
        let mut rng = record_stream(seed, "simulate.annotations", index);
        for source in [Source::Lyrics, Source::Acoustics] {
            let right = if truth.drivers[m].source() != source {
                Judgment::Uninformative
            } else if relevant {
                Judgment::Yes
            } else {
                Judgment::No
            };
            let wrong: Vec<Judgment> = Judgment::ALL.iter().copied().filter(|j| *j != right).collect();
            let mut js = [right; 3];
            for j in &mut js {
                if rng.random::<f64>() >= accuracy {
                    *j = wrong[rng.random_range(0..2)];
                }
            }
            let split = js[0] != js[1] && js[1] != js[2] && js[0] != js[2];
            let tiebreak = if split { Some(right) } else { None };
            out.push(AnnotationRecord::new(song, mood, source, js, tiebreak)?);
        }
    }
    Ok(out)
}

/// Ranks starting at 1; ties share their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / sqrt(sxx * syy))
    }
}

/// Spearman rank correlation; `None` when either side is constant or
/// fewer than two values are given.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoodRecovery {
    pub mood: String,
    pub n_songs: usize,
    pub correlation: Option<f64>,
    /// Why the mood was left out of the summary.
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub per_mood: Vec<MoodRecovery>,
    /// Median over the moods that were not excluded.
    pub median: Option<f64>,
}

/// Rank agreement between BNPMI and true affinity, per mood, over songs
/// that co-occur with the mood.
pub fn validate_recovery(scores: &[AssociationScore], truth: &GroundTruth) -> RecoveryReport {
    let mut per_mood = Vec::with_capacity(truth.moods.len());
    for mood in &truth.moods {
        let (mut b, mut a) = (Vec::new(), Vec::new());
        for s in scores.iter().filter(|s| &s.mood == mood && s.has_cooccurrence()) {
            if let Some(aff) = truth.affinity_of(&s.song_id, mood) {
                b.push(s.bnpmi);
                a.push(aff);
            }
        }
        let (correlation, excluded) = if b.len() < 3 {
            (None, Some(format!("only {} scored songs", b.len())))
        } else {
            match spearman(&b, &a) {
                Some(r) => (Some(r), None),
                None => (None, Some("constant scores or affinities".to_string())),
            }
        };
        per_mood.push(MoodRecovery {
            mood: mood.clone(),
            n_songs: b.len(),
            correlation,
            excluded,
        });
    }
    let mut rs: Vec<f64> = per_mood.iter().filter_map(|m| m.correlation).collect();
    rs.sort_by(f64::total_cmp);
    let median = match rs.len() {
        0 => None,
        n if n % 2 == 1 => Some(rs[n / 2]),
        n => Some((rs[n / 2 - 1] + rs[n / 2]) / 2.0),
    };
    RecoveryReport { per_mood, median }
}
