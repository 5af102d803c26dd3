//! Glue between scored associations, song features and per-mood models.
//!
//! Training pairs for a mood are the train-split songs whose association
//! label is Positive or Negative; Neutral pairs are left out. The same rule
//! on the test split gives the evaluation truth.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::association::{AssociationLabel, AssociationScore};
use crate::evaluation::{confusion, ConfusionCounts, PairKey, Prediction, Truth};
use crate::features::{
    hybrid_concat, tfidf_transform, CoverageReport, DenseVector, EmbeddingTable, FeatureVector, Scaler, SparseVector,
    Vocabulary,
};
use crate::ingest::{CorpusSplit, SongRecord};
use crate::models::{classify, train_hybrid_head, train_logistic, Model, TrainConfig};
use crate::{Error, Result};

/// Song representation a model is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// tf.idf over lyrics.
    Bow,
    /// Standardized acoustic features.
    Acoustic,
    /// tf.idf followed by standardized acoustics.
    HybridBow,
    /// Precomputed lyric embedding.
    Embedding,
    /// Embedding plus an MLP over acoustics.
    HybridEmbed,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 5] = [
        FeatureKind::Bow,
        FeatureKind::Acoustic,
        FeatureKind::HybridBow,
        FeatureKind::Embedding,
        FeatureKind::HybridEmbed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Bow => "bow",
            FeatureKind::Acoustic => "acoustic",
            FeatureKind::HybridBow => "hybrid_bow",
            FeatureKind::Embedding => "embedding",
            FeatureKind::HybridEmbed => "hybrid_embed",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureKind> {
        let s = s.trim().replace('-', "_");
        FeatureKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn uses_lyrics(self) -> bool {
        self != FeatureKind::Acoustic
    }

    pub fn uses_acoustics(self) -> bool {
        matches!(self, FeatureKind::Acoustic | FeatureKind::HybridBow | FeatureKind::HybridEmbed)
    }

    pub fn is_hybrid(self) -> bool {
        self.uses_lyrics() && self.uses_acoustics()
    }

    pub fn needs_embeddings(self) -> bool {
        matches!(self, FeatureKind::Embedding | FeatureKind::HybridEmbed)
    }
}

/// What a model consumes for one song.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelInput {
    Vector(FeatureVector),
    /// `(embedding, scaled acoustics)` for the hybrid head.
    Pair(DenseVector, DenseVector),
}

/// Every song's representations under a train-fitted vocabulary and scaler.
#[derive(Debug, Clone)]
pub struct FeatureStore {
    pub vocab: Vocabulary,
    pub scaler: Scaler,
    bow: BTreeMap<String, SparseVector>,
    acoustic: BTreeMap<String, DenseVector>,
    embeddings: Option<EmbeddingTable>,
}

impl FeatureStore {
    /// Fits vocabulary and scaler on the train split only.
    pub fn build(
        songs: &[SongRecord],
        split: &CorpusSplit,
        min_df: u64,
        embeddings: Option<EmbeddingTable>,
    ) -> Result<Self> {
        let train: Vec<&SongRecord> = songs.iter().filter(|s| split.is_train(&s.song_id)).collect();
        let vocab = Vocabulary::fit_on_split(train.iter().map(|s| (s.song_id.as_str(), s.lyrics.as_str())), split, min_df)?;
        let raw: Vec<(&str, DenseVector)> = train
            .iter()
            .filter_map(|s| s.acoustic.map(|a| (s.song_id.as_str(), a.to_dense())))
            .collect();
        let scaler = Scaler::fit_on_split(raw.iter().map(|(id, v)| (*id, v)), split)?;
        Self::from_parts(vocab, scaler, songs, embeddings)
    }

    /// Applies an already fitted vocabulary and scaler.
    pub fn from_parts(
        vocab: Vocabulary,
        scaler: Scaler,
        songs: &[SongRecord],
        embeddings: Option<EmbeddingTable>,
    ) -> Result<Self> {
        let mut bow = BTreeMap::new();
        let mut acoustic = BTreeMap::new();
        for s in songs {
            bow.insert(s.song_id.clone(), tfidf_transform(&vocab, &s.lyrics));
            if let Some(a) = s.acoustic {
                acoustic.insert(s.song_id.clone(), scaler.scale(&a.to_dense())?);
            }
        }
        Ok(FeatureStore {
            vocab,
            scaler,
            bow,
            acoustic,
            embeddings,
        })
    }

    pub fn embeddings(&self) -> Option<&EmbeddingTable> {
        self.embeddings.as_ref()
    }

    /// `None` when the song lacks a required part.
    pub fn input(&self, kind: FeatureKind, song: &str) -> Option<ModelInput> {
        let bow = || self.bow.get(song).map(|v| FeatureVector::Sparse(v.clone()));
        let acoustic = || self.acoustic.get(song).cloned();
        let embedding = || self.embeddings.as_ref().and_then(|t| t.get(song)).cloned();
        Some(match kind {
            FeatureKind::Bow => ModelInput::Vector(bow()?),
            FeatureKind::Acoustic => ModelInput::Vector(FeatureVector::Dense(acoustic()?)),
            FeatureKind::HybridBow => ModelInput::Vector(hybrid_concat(&bow()?, &acoustic()?)),
            FeatureKind::Embedding => ModelInput::Vector(FeatureVector::Dense(embedding()?)),
            FeatureKind::HybridEmbed => ModelInput::Pair(embedding()?, acoustic()?),
        })
    }
}

fn label_target(label: AssociationLabel) -> Option<bool> {
    match label {
        AssociationLabel::Positive => Some(true),
        AssociationLabel::Negative => Some(false),
        AssociationLabel::Neutral => None,
    }
}

/// `(song, is_positive)` for the mood's labelled train-split songs, in
/// song order.
pub fn training_examples(scores: &[AssociationScore], split: &CorpusSplit, mood: &str) -> Vec<(String, bool)> {
    let mut out: Vec<(String, bool)> = scores
        .iter()
        .filter(|s| s.mood == mood && split.is_train(&s.song_id))
        .filter_map(|s| label_target(s.label).map(|y| (s.song_id.clone(), y)))
        .collect();
    out.sort();
    out
}

/// Evaluation truth from the labelled test-split pairs.
pub fn test_truth(scores: &[AssociationScore], split: &CorpusSplit) -> BTreeMap<PairKey, Truth> {
    scores
        .iter()
        .filter(|s| split.is_test(&s.song_id))
        .filter_map(|s| {
            label_target(s.label).map(|y| {
                let t = if y { Truth::Positive } else { Truth::Negative };
                ((s.song_id.clone(), s.mood.clone()), t)
            })
        })
        .collect()
}

/// A trained classifier together with the representation it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoodModel {
    pub features: FeatureKind,
    pub model: Model,
}

impl MoodModel {
    pub fn mood(&self) -> &str {
        self.model.mood()
    }

    /// Probability for `song`, or `None` when its features are missing.
    pub fn predict(&self, store: &FeatureStore, song: &str) -> Result<Option<f64>> {
        let Some(input) = store.input(self.features, song) else {
            return Ok(None);
        };
        let p = match (&self.model, input) {
            (Model::Logistic(m), ModelInput::Vector(x)) => m.predict(&x)?,
            (Model::Hybrid(h), ModelInput::Pair(e, a)) => h.predict(&e, &a)?,
            _ => {
                return Err(Error::arg("features", "model kind does not match its feature kind"));
            }
        };
        Ok(Some(p))
    }
}

/// Trains one mood's model; songs without the needed features are skipped
/// and reported.
pub fn train_mood(
    kind: FeatureKind,
    store: &FeatureStore,
    mood: &str,
    examples: &[(String, bool)],
    config: &TrainConfig,
) -> Result<(MoodModel, CoverageReport)> {
    let mut report = CoverageReport::default();
    let mut vectors = Vec::new();
    let mut pairs = (Vec::new(), Vec::new());
    let mut y = Vec::new();
    for (song, label) in examples {
        report.requested += 1;
        match store.input(kind, song) {
            Some(ModelInput::Vector(v)) => vectors.push(v),
            Some(ModelInput::Pair(e, a)) => {
                pairs.0.push(e);
                pairs.1.push(a);
            }
            None => {
                report.missing.push(song.clone());
                continue;
            }
        }
        y.push(*label);
    }
    let model = if kind == FeatureKind::HybridEmbed {
        Model::Hybrid(train_hybrid_head(mood, &pairs.0, &pairs.1, &y, config)?)
    } else {
        Model::Logistic(train_logistic(mood, &vectors, &y, config)?)
    };
    Ok((MoodModel { features: kind, model }, report))
}

/// Probabilities for every requested pair whose song has features.
pub fn predict_pairs<'a, I>(
    models: &BTreeMap<String, MoodModel>,
    store: &FeatureStore,
    pairs: I,
) -> Result<(BTreeMap<PairKey, f64>, CoverageReport)>
where
    I: IntoIterator<Item = &'a PairKey>,
{
    let mut out = BTreeMap::new();
    let mut report = CoverageReport::default();
    for key in pairs {
        report.requested += 1;
        let p = match models.get(&key.1) {
            Some(m) => m.predict(store, &key.0)?,
            None => None,
        };
        match p {
            Some(p) => {
                out.insert(key.clone(), p);
            }
            None => report.missing.push(alloc::format!("{}/{}", key.0, key.1)),
        }
    }
    Ok((out, report))
}

pub fn threshold_predictions(probs: &BTreeMap<PairKey, f64>, threshold: f64) -> BTreeMap<PairKey, Prediction> {
    probs.iter().map(|(k, p)| (k.clone(), classify(*p, threshold))).collect()
}

/// Outcome of training and testing one representation on one mood.
#[derive(Debug, Clone)]
pub struct MoodRun {
    pub model: MoodModel,
    pub probabilities: BTreeMap<PairKey, f64>,
    pub counts: ConfusionCounts,
    pub train_coverage: CoverageReport,
    pub test_coverage: CoverageReport,
}

/// Trains on the train split and scores the mood's test truth; test pairs
/// whose songs lack features are dropped from the truth and reported.
pub fn run_mood(
    kind: FeatureKind,
    store: &FeatureStore,
    scores: &[AssociationScore],
    split: &CorpusSplit,
    mood: &str,
    config: &TrainConfig,
    threshold: f64,
) -> Result<MoodRun> {
    let examples = training_examples(scores, split, mood);
    let (model, train_coverage) = train_mood(kind, store, mood, &examples, config)?;
    let truth: BTreeMap<PairKey, Truth> = test_truth(scores, split).into_iter().filter(|(k, _)| k.1 == mood).collect();
    let mut models = BTreeMap::new();
    models.insert(mood.to_string(), model);
    let (probabilities, test_coverage) = predict_pairs(&models, store, truth.keys())?;
    let covered: BTreeMap<PairKey, Truth> = truth.into_iter().filter(|(k, _)| probabilities.contains_key(k)).collect();
    let counts = confusion(&threshold_predictions(&probabilities, threshold), &covered)?;
    let model = models.remove(mood).expect("inserted above");
    Ok(MoodRun {
        model,
        probabilities,
        counts,
        train_coverage,
        test_coverage,
    })
}
