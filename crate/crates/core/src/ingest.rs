//! Playlist and song records, mood matching, deduplication and splitting.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::features::AcousticFeatures;
use crate::lexicon::{Mood, MoodLexicon};
use crate::rng::{stable_hash, unit_interval};
use crate::text::tokenize;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaylistRecord {
    pub playlist_id: String,
    pub title: String,
    pub description: Option<String>,
    pub track_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SongRecord {
    pub song_id: String,
    pub lyrics: String,
    pub acoustic: Option<AcousticFeatures>,
}

/// Whole-token phrase matcher compiled from a lexicon.
#[derive(Debug, Clone)]
pub struct MoodMatcher {
    // first token -> (mood index, full token sequence)
    by_first: BTreeMap<String, Vec<(usize, Vec<String>)>>,
}

impl MoodMatcher {
    pub fn new(lexicon: &MoodLexicon) -> Self {
        let mut by_first: BTreeMap<String, Vec<(usize, Vec<String>)>> = BTreeMap::new();
        for (i, mood) in lexicon.moods().iter().enumerate() {
            let toks = tokenize(mood.term());
            if let Some(first) = toks.first() {
                by_first.entry(first.clone()).or_default().push((i, toks));
            }
        }
        MoodMatcher { by_first }
    }

    fn scan(&self, tokens: &[String], hits: &mut BTreeSet<usize>) {
        for (pos, tok) in tokens.iter().enumerate() {
            if let Some(cands) = self.by_first.get(tok) {
                for (idx, phrase) in cands {
                    if tokens[pos..].starts_with(phrase) {
                        hits.insert(*idx);
                    }
                }
            }
        }
    }

    /// Lexicon indices of every mood found in `text`, ascending.
    pub fn match_text(&self, text: &str) -> Vec<usize> {
        let mut hits = BTreeSet::new();
        self.scan(&tokenize(text), &mut hits);
        hits.into_iter().collect()
    }

    /// Lexicon indices of every mood found in the title or description.
    ///
    /// Fields are scanned separately so a phrase never straddles the
    /// title/description boundary.
    pub fn match_playlist(&self, playlist: &PlaylistRecord) -> Vec<usize> {
        let mut hits = BTreeSet::new();
        self.scan(&tokenize(&playlist.title), &mut hits);
        if let Some(d) = &playlist.description {
            self.scan(&tokenize(d), &mut hits);
        }
        hits.into_iter().collect()
    }
}

/// Moods whose term appears as a whole-token phrase in the playlist text.
pub fn match_moods<'a>(playlist: &PlaylistRecord, lexicon: &'a MoodLexicon) -> Vec<&'a Mood> {
    MoodMatcher::new(lexicon)
        .match_playlist(playlist)
        .into_iter()
        .map(|i| &lexicon.moods()[i])
        .collect()
}

/// Keeps the first record of each song id, preserving input order.
pub fn dedupe_songs(records: impl IntoIterator<Item = SongRecord>) -> Vec<SongRecord> {
    let mut seen = BTreeSet::new();
    records
        .into_iter()
        .filter(|r| seen.insert(r.song_id.clone()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train_ids: BTreeSet<String>,
    pub test_ids: BTreeSet<String>,
}

impl CorpusSplit {
    pub fn is_train(&self, id: &str) -> bool {
        self.train_ids.contains(id)
    }

    pub fn is_test(&self, id: &str) -> bool {
        self.test_ids.contains(id)
    }

    pub fn len(&self) -> usize {
        self.train_ids.len() + self.test_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn train_fraction(&self) -> f64 {
        self.train_ids.len() as f64 / self.len() as f64
    }
}

fn check_fraction(train_fraction: f64) -> Result<()> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::arg(
            "train_fraction",
            alloc::format!("{train_fraction} is outside (0, 1)"),
        ));
    }
    Ok(())
}

/// Whether `song_id` lands in the train split.
///
/// Depends only on `(song_id, seed)`, so growing the corpus never moves an
/// existing song between splits.
pub fn assign_train(song_id: &str, train_fraction: f64, seed: u64) -> bool {
    unit_interval(stable_hash(seed, song_id.as_bytes())) < train_fraction
}

pub fn split_train_test<'a, I>(song_ids: I, train_fraction: f64, seed: u64) -> Result<CorpusSplit>
where
    I: IntoIterator<Item = &'a str>,
{
    check_fraction(train_fraction)?;
    let mut split = CorpusSplit::default();
    for id in song_ids {
        if assign_train(id, train_fraction, seed) {
            split.train_ids.insert(id.into());
        } else {
            split.test_ids.insert(id.into());
        }
    }
    if split.is_empty() {
        return Err(Error::InsufficientData("no song ids to split".into()));
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::PartOfSpeech;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn lex(terms: &[&str]) -> MoodLexicon {
        MoodLexicon::new(
            terms
                .iter()
                .map(|t| Mood::new(t, PartOfSpeech::Adjective, None).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn pl(title: &str, desc: Option<&str>) -> PlaylistRecord {
        PlaylistRecord {
            playlist_id: "p".into(),
            title: title.into(),
            description: desc.map(Into::into),
            track_ids: vec![],
        }
    }

    fn terms(ms: Vec<&Mood>) -> Vec<&str> {
        ms.into_iter().map(Mood::term).collect()
    }

    #[test]
    fn whole_token_matching() {
        let l = lex(&["chill", "sad"]);
        assert_eq!(terms(match_moods(&pl("chill study beats", None), &l)), ["chill"]);
        assert!(match_moods(&pl("Chilling out", None), &l).is_empty());
        assert_eq!(
            terms(match_moods(&pl("Late night", Some("so SAD, so chill")), &l)),
            ["chill", "sad"]
        );
    }

    #[test]
    fn multiword_phrases() {
        let l = lex(&["good vibes", "good"]);
        assert_eq!(
            terms(match_moods(&pl("good vibes playlist", None), &l)),
            ["good vibes", "good"]
        );
        assert_eq!(terms(match_moods(&pl("vibes good", None), &l)), ["good"]);
        // no straddling across title/description
        assert_eq!(terms(match_moods(&pl("so good", Some("vibes")), &l)), ["good"]);
    }

    fn song(id: &str, lyrics: &str) -> SongRecord {
        SongRecord {
            song_id: id.into(),
            lyrics: lyrics.into(),
            acoustic: None,
        }
    }

    #[test]
    fn dedupe_keeps_first() {
        let out = dedupe_songs(vec![song("s1", "a"), song("s1", "b"), song("s2", "c")]);
        assert_eq!(out, vec![song("s1", "a"), song("s2", "c")]);
        assert!(dedupe_songs(Vec::new()).is_empty());
        let uniq = vec![song("x", "1"), song("y", "2")];
        assert_eq!(dedupe_songs(uniq.clone()), uniq);
    }

    #[test]
    fn split_fraction_and_determinism() {
        let ids: Vec<String> = (0..100_000).map(|i| format!("song-{i}")).collect();
        let a = split_train_test(ids.iter().map(String::as_str), 0.75, 11).unwrap();
        assert!((74_000..=76_000).contains(&a.train_ids.len()), "{}", a.train_ids.len());
        let b = split_train_test(ids.iter().map(String::as_str), 0.75, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.train_ids.is_disjoint(&a.test_ids));
        assert_eq!(a.len(), ids.len());
    }

    #[test]
    fn split_rejects_bad_fraction() {
        for f in [1.5, 0.0, 1.0, -0.2, f64::NAN] {
            assert!(matches!(
                split_train_test(["a"], f, 0),
                Err(Error::InvalidArgument { name: "train_fraction", .. })
            ));
        }
        assert!(split_train_test(core::iter::empty::<&str>(), 0.5, 0).is_err());
    }

    #[test]
    fn growth_never_reassigns() {
        let small: Vec<String> = (0..500).map(|i| i.to_string()).collect();
        let big: Vec<String> = (0..2000).map(|i| i.to_string()).collect();
        let a = split_train_test(small.iter().map(String::as_str), 0.75, 3).unwrap();
        let b = split_train_test(big.iter().map(String::as_str), 0.75, 3).unwrap();
        assert!(a.train_ids.is_subset(&b.train_ids));
        assert!(a.test_ids.is_subset(&b.test_ids));
    }
}
