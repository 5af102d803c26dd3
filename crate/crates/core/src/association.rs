//! Playlist co-occurrence counts and the association scores built on them.
//!
//! All probabilities are over playlists. With `n` playlists, a song in
//! `c_s` of them, a mood in `c_m` of them and both in `c_sm`:
//!
//! ```text
//! p(s) = c_s / n      p(m) = c_m / n      p(s|m) = c_sm / c_m
//! npmi(s, m) = (ln p(s) - ln p(s|m)) / (ln p(m) + ln p(s|m))
//! ```
//!
//! BNPMI replaces `p(s|m)` with the posterior mean under a per-mood
//! `Beta(alpha, beta)` prior fit by the method of moments over the
//! conditionals of every song in a chosen song universe. Natural logs are
//! used throughout; NPMI and BNPMI are ratios of logs and do not depend on
//! the base, PMI is reported in nats.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use libm::log;
use serde::{Deserialize, Serialize};

use crate::ingest::{MoodMatcher, PlaylistRecord};
use crate::lexicon::MoodLexicon;
use crate::{Error, Result};

/// Sufficient statistics for every association score.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceCounts {
    n_playlists: u64,
    song_playlists: BTreeMap<String, u64>,
    mood_playlists: BTreeMap<String, u64>,
    // song -> mood -> playlists containing both
    joint: BTreeMap<String, BTreeMap<String, u64>>,
}

impl CooccurrenceCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assembles counts from raw maps, checking every invariant.
    pub fn from_parts(
        n_playlists: u64,
        song_playlists: BTreeMap<String, u64>,
        mood_playlists: BTreeMap<String, u64>,
        joint: BTreeMap<String, BTreeMap<String, u64>>,
    ) -> Result<Self> {
        let c = CooccurrenceCounts {
            n_playlists,
            song_playlists,
            mood_playlists,
            joint,
        };
        c.validate()?;
        Ok(c)
    }

    /// Checks the count invariants; the error names the first violation.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::arg("counts", reason));
        for (k, v) in self.song_playlists.iter().chain(&self.mood_playlists) {
            if *v > self.n_playlists {
                return bad(alloc::format!("count for `{k}` exceeds n_playlists"));
            }
        }
        for (s, moods) in &self.joint {
            let Some(&cs) = self.song_playlists.get(s) else {
                return bad(alloc::format!("joint song `{s}` has no marginal"));
            };
            for (m, &j) in moods {
                let Some(&cm) = self.mood_playlists.get(m) else {
                    return bad(alloc::format!("joint mood `{m}` has no marginal"));
                };
                if j > cs.min(cm) {
                    return bad(alloc::format!("joint ({s}, {m}) exceeds a marginal"));
                }
            }
        }
        Ok(())
    }

    /// Adds one playlist. Repeated tracks or repeated mood hits inside the
    /// playlist count once.
    pub fn add_playlist(&mut self, tracks: &[String], moods: &[&str]) {
        self.n_playlists += 1;
        let tracks: BTreeSet<&str> = tracks.iter().map(String::as_str).collect();
        let moods: BTreeSet<&str> = moods.iter().copied().collect();
        for m in &moods {
            bump(&mut self.mood_playlists, m, 1);
        }
        for t in &tracks {
            bump(&mut self.song_playlists, t, 1);
            if moods.is_empty() {
                continue;
            }
            let row = match self.joint.get_mut(*t) {
                Some(r) => r,
                None => self.joint.entry(t.to_string()).or_default(),
            };
            for m in &moods {
                bump(row, m, 1);
            }
        }
    }

    pub fn n_playlists(&self) -> u64 {
        self.n_playlists
    }

    pub fn song_count(&self, song: &str) -> u64 {
        self.song_playlists.get(song).copied().unwrap_or(0)
    }

    pub fn mood_count(&self, mood: &str) -> u64 {
        self.mood_playlists.get(mood).copied().unwrap_or(0)
    }

    pub fn joint_count(&self, song: &str, mood: &str) -> u64 {
        self.joint
            .get(song)
            .and_then(|r| r.get(mood))
            .copied()
            .unwrap_or(0)
    }

    pub fn song_playlists(&self) -> &BTreeMap<String, u64> {
        &self.song_playlists
    }

    pub fn mood_playlists(&self) -> &BTreeMap<String, u64> {
        &self.mood_playlists
    }

    pub fn joint(&self) -> &BTreeMap<String, BTreeMap<String, u64>> {
        &self.joint
    }

    /// Iterates `(song, mood, count)` over nonzero joint counts.
    pub fn joint_entries(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.joint.iter().flat_map(|(s, row)| {
            row.iter()
                .filter(|(_, &c)| c > 0)
                .map(move |(m, &c)| (s.as_str(), m.as_str(), c))
        })
    }

    /// Songs with a nonzero joint count for `mood`, with those counts.
    pub fn mood_column(&self, mood: &str) -> BTreeMap<&str, u64> {
        self.joint
            .iter()
            .filter_map(|(s, row)| row.get(mood).filter(|&&c| c > 0).map(|&c| (s.as_str(), c)))
            .collect()
    }

    /// Fieldwise sum with counts from a disjoint playlist shard.
    pub fn merge(mut self, other: &CooccurrenceCounts) -> CooccurrenceCounts {
        self.n_playlists += other.n_playlists;
        for (k, v) in &other.song_playlists {
            bump(&mut self.song_playlists, k, *v);
        }
        for (k, v) in &other.mood_playlists {
            bump(&mut self.mood_playlists, k, *v);
        }
        for (s, row) in &other.joint {
            let mine = match self.joint.get_mut(s) {
                Some(r) => r,
                None => self.joint.entry(s.clone()).or_default(),
            };
            for (m, v) in row {
                bump(mine, m, *v);
            }
        }
        self
    }

    /// Every count multiplied by `k`.
    pub fn scaled(&self, k: u64) -> CooccurrenceCounts {
        let scale = |m: &BTreeMap<String, u64>| m.iter().map(|(a, v)| (a.clone(), v * k)).collect();
        CooccurrenceCounts {
            n_playlists: self.n_playlists * k,
            song_playlists: scale(&self.song_playlists),
            mood_playlists: scale(&self.mood_playlists),
            joint: self.joint.iter().map(|(s, r)| (s.clone(), scale(r))).collect(),
        }
    }
}

fn bump(map: &mut BTreeMap<String, u64>, key: &str, by: u64) {
    match map.get_mut(key) {
        Some(v) => *v += by,
        None => {
            map.insert(key.to_string(), by);
        }
    }
}

/// Counts songs, moods and their co-occurrences over `playlists`.
pub fn count<'a, I>(playlists: I, lexicon: &MoodLexicon) -> CooccurrenceCounts
where
    I: IntoIterator<Item = &'a PlaylistRecord>,
{
    let matcher = MoodMatcher::new(lexicon);
    let mut counts = CooccurrenceCounts::new();
    for p in playlists {
        let moods: Vec<&str> = matcher
            .match_playlist(p)
            .into_iter()
            .map(|i| lexicon.moods()[i].term())
            .collect();
        counts.add_playlist(&p.track_ids, &moods);
    }
    counts
}

/// Free-function form of [`CooccurrenceCounts::merge`].
pub fn merge_counts(a: CooccurrenceCounts, b: &CooccurrenceCounts) -> CooccurrenceCounts {
    a.merge(b)
}

struct Marginals {
    n: f64,
    song: f64,
    mood: f64,
    joint: f64,
}

fn marginals(counts: &CooccurrenceCounts, s: &str, m: &str) -> Result<Marginals> {
    let undefined = |which| Error::UndefinedMarginal {
        song: s.to_string(),
        mood: m.to_string(),
        which,
    };
    let cs = counts.song_count(s);
    let cm = counts.mood_count(m);
    if cs == 0 {
        return Err(undefined("song"));
    }
    if cm == 0 {
        return Err(undefined("mood"));
    }
    Ok(Marginals {
        n: counts.n_playlists as f64,
        song: cs as f64,
        mood: cm as f64,
        joint: counts.joint_count(s, m) as f64,
    })
}

/// Pointwise mutual information in nats; `-inf` when the pair never
/// co-occurs.
pub fn pmi(counts: &CooccurrenceCounts, s: &str, m: &str) -> Result<f64> {
    let c = marginals(counts, s, m)?;
    if c.joint == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(log(c.joint) + log(c.n) - log(c.song) - log(c.mood))
}

fn npmi_from_logs(ln_ps: f64, ln_pm: f64, ln_cond: f64) -> f64 {
    (ln_ps - ln_cond) / (ln_pm + ln_cond)
}

/// Normalized PMI in `[-1, 1]`: `-1` when the pair never co-occurs, `1`
/// when song and mood only ever occur together.
pub fn npmi(counts: &CooccurrenceCounts, s: &str, m: &str) -> Result<f64> {
    let c = marginals(counts, s, m)?;
    if c.joint == 0.0 {
        return Ok(-1.0);
    }
    if c.joint == c.song && c.joint == c.mood {
        return Ok(1.0);
    }
    Ok(npmi_from_logs(
        log(c.song / c.n),
        log(c.mood / c.n),
        log(c.joint / c.mood),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorFallback {
    /// All conditionals equal.
    ZeroVariance,
    /// Sample variance at or above `p(1-p)`, so a moment-matched Beta does
    /// not exist.
    MomentInconsistency,
    /// Mean conditional is exactly 0 or 1.
    BoundaryMean,
}

/// Method-of-moments Beta prior over `p(s|m)` for one mood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub mood: String,
    pub p_bar: f64,
    pub v_bar: f64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub n_songs_used: usize,
    /// Set when the moments admit no Beta fit and the uniform `Beta(1, 1)`
    /// was substituted.
    pub fallback: Option<PriorFallback>,
}

impl BetaPrior {
    /// Fits from the mean and unbiased variance of `n` conditionals.
    pub fn from_moments(mood: &str, p_bar: f64, v_bar: f64, n: usize) -> BetaPrior {
        let common = p_bar * (1.0 - p_bar) / v_bar - 1.0;
        let alpha = p_bar * common;
        let beta = (1.0 - p_bar) * common;
        let fallback = if p_bar <= 0.0 || p_bar >= 1.0 {
            Some(PriorFallback::BoundaryMean)
        } else if v_bar <= 0.0 {
            Some(PriorFallback::ZeroVariance)
        } else if v_bar >= p_bar * (1.0 - p_bar) || !(alpha > 0.0 && beta > 0.0) {
            Some(PriorFallback::MomentInconsistency)
        } else if !(alpha.is_finite() && beta.is_finite()) {
            Some(PriorFallback::ZeroVariance)
        } else {
            None
        };
        let (alpha_hat, beta_hat) = if fallback.is_some() {
            (1.0, 1.0)
        } else {
            (alpha, beta)
        };
        BetaPrior {
            mood: mood.to_string(),
            p_bar,
            v_bar,
            alpha_hat,
            beta_hat,
            n_songs_used: n,
            fallback,
        }
    }

    /// Fits from a full vector of per-song conditionals.
    pub fn method_of_moments(mood: &str, conditionals: &[f64]) -> Result<BetaPrior> {
        let n = conditionals.len();
        if n < 2 {
            return Err(Error::InsufficientData(alloc::format!(
                "beta prior for `{mood}` needs at least 2 songs, got {n}"
            )));
        }
        let mean = conditionals.iter().sum::<f64>() / n as f64;
        let ss: f64 = conditionals.iter().map(|p| (p - mean) * (p - mean)).sum();
        Ok(Self::from_moments(mood, mean, ss / (n - 1) as f64, n))
    }

    /// Fits from the nonzero conditionals of a universe of `n` songs; the
    /// remaining `n - nonzero.len()` songs contribute zeros.
    pub fn from_sparse(mood: &str, nonzero: &[f64], n: usize) -> Result<BetaPrior> {
        if n < 2 || nonzero.len() > n {
            return Err(Error::InsufficientData(alloc::format!(
                "beta prior for `{mood}` needs at least 2 songs covering the nonzero conditionals"
            )));
        }
        let mean = nonzero.iter().sum::<f64>() / n as f64;
        let zeros = (n - nonzero.len()) as f64;
        let ss = nonzero.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() + zeros * mean * mean;
        Ok(Self::from_moments(mood, mean, ss / (n - 1) as f64, n))
    }

    pub fn mean(&self) -> f64 {
        self.alpha_hat / (self.alpha_hat + self.beta_hat)
    }

    pub fn is_fallback(&self) -> bool {
        self.fallback.is_some()
    }
}

/// Fits the prior for mood `m` over `song_universe`, counting songs absent
/// from the mood's playlists as zero conditionals.
pub fn fit_beta_prior<'a, I>(counts: &CooccurrenceCounts, m: &str, song_universe: I) -> Result<BetaPrior>
where
    I: IntoIterator<Item = &'a str>,
{
    let cm = counts.mood_count(m);
    if cm == 0 {
        return Err(Error::UndefinedMarginal {
            song: "*".into(),
            mood: m.to_string(),
            which: "mood",
        });
    }
    let column = counts.mood_column(m);
    let mut n = 0usize;
    let mut nonzero = Vec::new();
    for s in song_universe {
        n += 1;
        if let Some(&j) = column.get(s) {
            nonzero.push(j as f64 / cm as f64);
        }
    }
    BetaPrior::from_sparse(m, &nonzero, n)
}

/// Posterior mean of `p(s|m)`; strictly positive even without
/// co-occurrences.
pub fn posterior_prob(counts: &CooccurrenceCounts, prior: &BetaPrior, s: &str, m: &str) -> Result<f64> {
    let cm = counts.mood_count(m);
    if cm == 0 {
        return Err(Error::UndefinedMarginal {
            song: s.to_string(),
            mood: m.to_string(),
            which: "mood",
        });
    }
    let j = counts.joint_count(s, m) as f64;
    Ok((j + prior.alpha_hat) / (cm as f64 + prior.alpha_hat + prior.beta_hat))
}

/// BNPMI before clamping to `[-1, 1]`.
pub fn bnpmi_raw(counts: &CooccurrenceCounts, prior: &BetaPrior, s: &str, m: &str) -> Result<f64> {
    let c = marginals(counts, s, m)?;
    let cond = posterior_prob(counts, prior, s, m)?;
    let ln_pm = log(c.mood / c.n);
    let ln_cond = log(cond);
    if (ln_pm + ln_cond).abs() < 1e-12 {
        return Err(Error::DegenerateDenominator {
            song: s.to_string(),
            mood: m.to_string(),
        });
    }
    Ok(npmi_from_logs(log(c.song / c.n), ln_pm, ln_cond))
}

/// BNPMI clamped to `[-1, 1]`.
pub fn bnpmi(counts: &CooccurrenceCounts, prior: &BetaPrior, s: &str, m: &str) -> Result<f64> {
    bnpmi_raw(counts, prior, s, m).map(|v| v.clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssociationLabel {
    Negative,
    Neutral,
    Positive,
}

impl AssociationLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            AssociationLabel::Negative => "negative",
            AssociationLabel::Neutral => "neutral",
            AssociationLabel::Positive => "positive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "negative" => Some(AssociationLabel::Negative),
            "neutral" => Some(AssociationLabel::Neutral),
            "positive" => Some(AssociationLabel::Positive),
            _ => None,
        }
    }
}

impl fmt::Display for AssociationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinningConfig {
    tau: f64,
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig { tau: 0.1 }
    }
}

impl BinningConfig {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::arg("tau", alloc::format!("{tau} is outside (0, 1)")));
        }
        Ok(BinningConfig { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Closed outer intervals: `[tau, 1]` positive, `[-1, -tau]` negative.
pub fn bin_label(score: f64, config: &BinningConfig) -> AssociationLabel {
    if score >= config.tau {
        AssociationLabel::Positive
    } else if score <= -config.tau {
        AssociationLabel::Negative
    } else {
        AssociationLabel::Neutral
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationScore {
    pub song_id: String,
    pub mood: String,
    /// `-inf` when the pair never co-occurs.
    pub pmi: f64,
    pub npmi: f64,
    pub bnpmi: f64,
    pub label: AssociationLabel,
    pub prior_fallback: bool,
}

impl AssociationScore {
    pub fn has_cooccurrence(&self) -> bool {
        self.pmi != f64::NEG_INFINITY
    }
}

/// Which songs the per-mood prior averages over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PriorUniverse {
    /// Every song with at least one playlist.
    AllSongs,
    /// Only songs co-occurring with the mood being fit.
    Cooccurring,
    /// An explicit catalog.
    Explicit(BTreeSet<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreConfig {
    pub binning: BinningConfig,
    /// Also emit rows for pairs that never co-occur.
    pub include_zero_joint: bool,
    pub universe: PriorUniverse,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            binning: BinningConfig::default(),
            include_zero_joint: false,
            universe: PriorUniverse::AllSongs,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreDiagnostics {
    /// Lexicon moods never seen in a playlist; no prior, no rows.
    pub unseen_moods: Vec<String>,
    /// `(song, mood, raw bnpmi)` where clamping moved the value by > 1e-6.
    pub clamped: Vec<(String, String, f64)>,
    pub degenerate: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    /// Sorted by `(song_id, mood)`.
    pub scores: Vec<AssociationScore>,
    /// One per seen mood, in lexicon order.
    pub priors: Vec<BetaPrior>,
    pub diagnostics: ScoreDiagnostics,
}

/// Fits the prior for every lexicon mood seen in at least one playlist.
pub fn fit_priors(counts: &CooccurrenceCounts, lexicon: &MoodLexicon, universe: &PriorUniverse) -> Result<Vec<BetaPrior>> {
    lexicon
        .terms()
        .filter(|m| counts.mood_count(m) > 0)
        .map(|m| fit_prior(counts, m, universe))
        .collect()
}

/// Fits one mood's prior over the chosen universe.
pub fn fit_prior(counts: &CooccurrenceCounts, m: &str, universe: &PriorUniverse) -> Result<BetaPrior> {
    match universe {
        PriorUniverse::AllSongs => fit_beta_prior(counts, m, counts.song_playlists.keys().map(String::as_str)),
        PriorUniverse::Cooccurring => {
            let col = counts.mood_column(m);
            fit_beta_prior(counts, m, col.keys().copied())
        }
        PriorUniverse::Explicit(set) => fit_beta_prior(counts, m, set.iter().map(String::as_str)),
    }
}

/// Scores one mood against its prior. Rows are sorted by song id.
pub fn score_mood(
    counts: &CooccurrenceCounts,
    prior: &BetaPrior,
    config: &ScoreConfig,
    diagnostics: &mut ScoreDiagnostics,
) -> Result<Vec<AssociationScore>> {
    let m = prior.mood.as_str();
    let column = counts.mood_column(m);
    let songs: Vec<&str> = if config.include_zero_joint {
        match &config.universe {
            PriorUniverse::Explicit(set) => set
                .iter()
                .map(String::as_str)
                .filter(|s| counts.song_count(s) > 0)
                .collect(),
            _ => counts.song_playlists.keys().map(String::as_str).collect(),
        }
    } else {
        column.keys().copied().collect()
    };
    let mut rows = Vec::with_capacity(songs.len());
    for s in songs {
        let raw = match bnpmi_raw(counts, prior, s, m) {
            Ok(v) => v,
            Err(Error::DegenerateDenominator { song, mood }) => {
                diagnostics.degenerate.push((song, mood));
                continue;
            }
            Err(e) => return Err(e),
        };
        let value = raw.clamp(-1.0, 1.0);
        if (raw - value).abs() > 1e-6 {
            diagnostics.clamped.push((s.to_string(), m.to_string(), raw));
        }
        rows.push(AssociationScore {
            song_id: s.to_string(),
            mood: m.to_string(),
            pmi: pmi(counts, s, m)?,
            npmi: npmi(counts, s, m)?,
            bnpmi: value,
            label: bin_label(value, &config.binning),
            prior_fallback: prior.is_fallback(),
        });
    }
    Ok(rows)
}

/// Scores every (song, mood) pair, fitting each mood's prior once.
pub fn score_all(counts: &CooccurrenceCounts, lexicon: &MoodLexicon, config: &ScoreConfig) -> Result<ScoreTable> {
    if counts.n_playlists == 0 {
        return Err(Error::InsufficientData("no playlists counted".into()));
    }
    let priors = fit_priors(counts, lexicon, &config.universe)?;
    let mut diagnostics = ScoreDiagnostics {
        unseen_moods: lexicon
            .terms()
            .filter(|m| counts.mood_count(m) == 0)
            .map(String::from)
            .collect(),
        ..Default::default()
    };
    let mut scores = Vec::new();
    for prior in &priors {
        scores.extend(score_mood(counts, prior, config, &mut diagnostics)?);
    }
    sort_scores(&mut scores);
    Ok(ScoreTable {
        scores,
        priors,
        diagnostics,
    })
}

/// Canonical `(song_id, mood)` order used for serialization.
pub fn sort_scores(scores: &mut [AssociationScore]) {
    scores.sort_by(|a, b| (a.song_id.as_str(), a.mood.as_str()).cmp(&(b.song_id.as_str(), b.mood.as_str())));
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (n - 1) standard deviation.
    pub std: f64,
    /// Equal-width bins over `[-1, 1]`; the last bin is closed.
    pub histogram: Vec<u64>,
}

impl DistributionStats {
    pub fn bin_edges(&self) -> Vec<(f64, f64)> {
        let k = self.histogram.len() as f64;
        (0..self.histogram.len())
            .map(|i| (-1.0 + 2.0 * i as f64 / k, -1.0 + 2.0 * (i + 1) as f64 / k))
            .collect()
    }
}

pub fn distribution_stats(scores: &[f64], bins: usize) -> Result<DistributionStats> {
    if scores.len() < 2 {
        return Err(Error::InsufficientData(alloc::format!(
            "distribution needs at least 2 scores, got {}",
            scores.len()
        )));
    }
    if bins == 0 {
        return Err(Error::arg("bins", "must be positive"));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let mut histogram = alloc::vec![0u64; bins];
    for &x in scores {
        let pos = ((x.clamp(-1.0, 1.0) + 1.0) / 2.0 * bins as f64) as usize;
        histogram[pos.min(bins - 1)] += 1;
    }
    Ok(DistributionStats {
        n: scores.len(),
        mean,
        std: libm::sqrt(var),
        histogram,
    })
}

/// Moods ranked by number of positive labels, ties by term; at most `k`.
pub fn top_positive_moods(scores: &[AssociationScore], k: usize) -> Vec<(String, u64)> {
    let mut tally: BTreeMap<&str, u64> = BTreeMap::new();
    for s in scores.iter().filter(|s| s.label == AssociationLabel::Positive) {
        *tally.entry(s.mood.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(String, u64)> = tally.into_iter().map(|(m, c)| (m.to_string(), c)).collect();
    // stable sort keeps the lexicographic order among ties
    ranked.sort_by_key(|r| core::cmp::Reverse(r.1));
    ranked.truncate(k);
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{Mood, PartOfSpeech};
    use alloc::vec;

    fn counts(n: u64, song: u64, mood: u64, joint: u64) -> CooccurrenceCounts {
        let mut j = BTreeMap::new();
        if joint > 0 {
            j.insert("s".to_string(), BTreeMap::from([("m".to_string(), joint)]));
        }
        CooccurrenceCounts::from_parts(
            n,
            BTreeMap::from([("s".to_string(), song)]),
            BTreeMap::from([("m".to_string(), mood)]),
            j,
        )
        .unwrap()
    }

    fn lex(terms: &[&str]) -> MoodLexicon {
        MoodLexicon::new(
            terms
                .iter()
                .map(|t| Mood::new(t, PartOfSpeech::Adjective, None).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn playlist(title: &str, tracks: &[&str]) -> PlaylistRecord {
        PlaylistRecord {
            playlist_id: title.into(),
            title: title.into(),
            description: None,
            track_ids: tracks.iter().map(|t| t.to_string()).collect(),
        }
    }

    #[test]
    fn counting_is_once_per_playlist() {
        let c = count(&[playlist("sad songs", &["s1", "s1"])], &lex(&["sad"]));
        assert_eq!(c.song_count("s1"), 1);
        assert_eq!(c.joint_count("s1", "sad"), 1);
        assert_eq!(c.mood_count("sad"), 1);

        let c = count(
            &[playlist("sad songs", &["s1"]), playlist("road trip", &["s1"])],
            &lex(&["sad"]),
        );
        assert_eq!(c.n_playlists(), 2);
        assert_eq!(c.song_count("s1"), 2);
        assert_eq!(c.mood_count("sad"), 1);
        assert_eq!(c.joint_count("s1", "sad"), 1);

        let c = count(&[], &lex(&["sad"]));
        assert_eq!(c, CooccurrenceCounts::new());
    }

    #[test]
    fn multi_mood_playlist_counts_for_each() {
        let c = count(&[playlist("sad and chill", &["a"])], &lex(&["sad", "chill"]));
        assert_eq!(c.joint_count("a", "sad"), 1);
        assert_eq!(c.joint_count("a", "chill"), 1);
    }

    #[test]
    fn from_parts_rejects_broken_invariants() {
        let bad = CooccurrenceCounts::from_parts(
            3,
            BTreeMap::from([("s".to_string(), 1)]),
            BTreeMap::from([("m".to_string(), 2)]),
            BTreeMap::from([("s".to_string(), BTreeMap::from([("m".to_string(), 2)]))]),
        );
        assert!(bad.is_err());
        let over = CooccurrenceCounts::from_parts(1, BTreeMap::from([("s".to_string(), 2)]), BTreeMap::new(), BTreeMap::new());
        assert!(over.is_err());
    }

    #[test]
    fn pmi_examples() {
        assert!(pmi(&counts(10, 4, 5, 2), "s", "m").unwrap().abs() < 1e-15);
        let v = pmi(&counts(10, 4, 5, 3), "s", "m").unwrap();
        assert!((v - log(1.5)).abs() < 1e-12);
        assert!((v - 0.405_465_108_108_164_4).abs() < 1e-12);
        assert_eq!(pmi(&counts(10, 4, 5, 0), "s", "m").unwrap(), f64::NEG_INFINITY);
        assert!(matches!(
            pmi(&counts(10, 4, 5, 0), "x", "m"),
            Err(Error::UndefinedMarginal { which: "song", .. })
        ));
    }

    #[test]
    fn npmi_examples() {
        assert_eq!(npmi(&counts(10, 3, 3, 3), "s", "m").unwrap(), 1.0);
        assert_eq!(npmi(&counts(3, 3, 3, 3), "s", "m").unwrap(), 1.0);
        assert!(npmi(&counts(10, 4, 5, 2), "s", "m").unwrap().abs() < 1e-15);
        // ln(1.5) / -ln(0.3)
        let v = npmi(&counts(10, 4, 5, 3), "s", "m").unwrap();
        assert!((v - 0.336_772_646_899_753_4).abs() < 1e-12, "{v}");
        assert_eq!(npmi(&counts(10, 4, 5, 0), "s", "m").unwrap(), -1.0);
    }

    #[test]
    fn prior_examples() {
        let p = BetaPrior::method_of_moments("m", &[0.2, 0.5, 0.8]).unwrap();
        assert!((p.p_bar - 0.5).abs() < 1e-15);
        assert!((p.v_bar - 0.09).abs() < 1e-15);
        assert!((p.alpha_hat - 0.888_888_888_888_889).abs() < 1e-12);
        assert!((p.beta_hat - p.alpha_hat).abs() < 1e-15);
        assert!(p.fallback.is_none());

        let flat = BetaPrior::method_of_moments("m", &[0.3; 4]).unwrap();
        assert_eq!(flat.fallback, Some(PriorFallback::ZeroVariance));
        assert_eq!((flat.alpha_hat, flat.beta_hat), (1.0, 1.0));

        let split = BetaPrior::method_of_moments("m", &[0.0, 1.0]).unwrap();
        assert_eq!(split.fallback, Some(PriorFallback::MomentInconsistency));

        let zero = BetaPrior::method_of_moments("m", &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(zero.fallback, Some(PriorFallback::BoundaryMean));

        assert!(BetaPrior::method_of_moments("m", &[0.5]).is_err());
    }

    #[test]
    fn sparse_fit_matches_dense() {
        let dense = [0.0, 0.25, 0.0, 0.5, 0.0, 0.1];
        let a = BetaPrior::method_of_moments("m", &dense).unwrap();
        let b = BetaPrior::from_sparse("m", &[0.25, 0.5, 0.1], 6).unwrap();
        assert!((a.alpha_hat - b.alpha_hat).abs() < 1e-12);
        assert!((a.beta_hat - b.beta_hat).abs() < 1e-12);
        assert!((a.mean() - a.p_bar).abs() < 1e-12);
    }

    #[test]
    fn posterior_examples() {
        let flat = BetaPrior::from_moments("m", 0.5, 0.5, 2);
        assert!(flat.is_fallback());
        let c = counts(1000, 10, 100, 0);
        let p = posterior_prob(&c, &flat, "s", "m").unwrap();
        assert!((p - 1.0 / 102.0).abs() < 1e-15);

        let prior = BetaPrior::method_of_moments("m", &[0.2, 0.5, 0.8]).unwrap();
        let p = posterior_prob(&counts(20, 6, 5, 3), &prior, "s", "m").unwrap();
        assert!((p - 3.888_888_888_888_889 / 6.777_777_777_777_778).abs() < 1e-12);
        assert!((p - 0.5738).abs() < 1e-4);

        // strong prior pulls toward its mean
        let strong = BetaPrior::from_moments("m", 0.3, 1e-9, 10);
        let p = posterior_prob(&counts(1000, 10, 5, 5), &strong, "s", "m").unwrap();
        assert!((p - 0.3).abs() < 1e-3);
    }

    #[test]
    fn bnpmi_zero_joint_is_finite_negative() {
        let c = counts(1000, 50, 100, 0);
        let prior = BetaPrior::from_moments("m", 0.01, 0.0001, 100);
        let v = bnpmi(&c, &prior, "s", "m").unwrap();
        assert!(v.is_finite() && v < 0.0 && v > -1.0, "{v}");
    }

    #[test]
    fn binning_boundaries() {
        let cfg = BinningConfig::default();
        assert_eq!(bin_label(0.34, &cfg), AssociationLabel::Positive);
        assert_eq!(bin_label(-0.05, &cfg), AssociationLabel::Neutral);
        assert_eq!(bin_label(0.1, &cfg), AssociationLabel::Positive);
        assert_eq!(bin_label(-0.1, &cfg), AssociationLabel::Negative);
        assert!(BinningConfig::new(1.5).is_err());
        assert!(BinningConfig::new(0.0).is_err());
    }

    #[test]
    fn distribution_examples() {
        let d = distribution_stats(&[-0.1, 0.1], 4).unwrap();
        assert!(d.mean.abs() < 1e-15);
        assert!((d.std - 0.141_421_356_237_309_5).abs() < 1e-12);
        assert_eq!(d.histogram, vec![0, 1, 1, 0]);
        let d = distribution_stats(&[-1.0, 1.0, -0.5, 0.5], 2).unwrap();
        assert_eq!(d.mean, 0.0);
        assert_eq!(d.histogram, vec![2, 2]);
        assert!(distribution_stats(&[0.3], 10).is_err());
    }

    fn labelled(mood: &str, label: AssociationLabel) -> AssociationScore {
        AssociationScore {
            song_id: "s".into(),
            mood: mood.into(),
            pmi: 0.0,
            npmi: 0.0,
            bnpmi: 0.0,
            label,
            prior_fallback: false,
        }
    }

    #[test]
    fn top_moods_ranking() {
        use AssociationLabel::*;
        assert!(top_positive_moods(&[labelled("a", Neutral)], 5).is_empty());
        let s = vec![
            labelled("b", Positive),
            labelled("a", Positive),
            labelled("c", Positive),
            labelled("c", Positive),
            labelled("a", Negative),
        ];
        assert_eq!(
            top_positive_moods(&s, 10),
            vec![("c".into(), 2), ("a".into(), 1), ("b".into(), 1)]
        );
        assert_eq!(top_positive_moods(&s, 1), vec![("c".into(), 2)]);
    }

    #[test]
    fn score_all_zero_rows_are_optional() {
        let lexicon = lex(&["sad"]);
        let ps = [
            playlist("sad", &["a", "b"]),
            playlist("sad", &["a"]),
            playlist("other", &["c", "b"]),
            playlist("other", &["c"]),
        ];
        let c = count(&ps, &lexicon);
        let t = score_all(&c, &lexicon, &ScoreConfig::default()).unwrap();
        assert_eq!(t.scores.len(), 2);
        let cfg = ScoreConfig {
            include_zero_joint: true,
            ..Default::default()
        };
        let t = score_all(&c, &lexicon, &cfg).unwrap();
        assert_eq!(t.scores.len(), 3);
        let zero = t.scores.iter().find(|s| s.song_id == "c").unwrap();
        assert!(!zero.has_cooccurrence());
        assert!(zero.bnpmi < 0.0);
        assert!(score_all(&CooccurrenceCounts::new(), &lexicon, &cfg).is_err());
    }
}
