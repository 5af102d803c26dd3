//! Song representations: tf.idf over lyrics, acoustic descriptors, lyric
//! embeddings and their concatenations.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ingest::CorpusSplit;
use crate::text::tokenize;
use crate::{Error, Result};

/// Sorted sparse vector with finite, nonzero entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dims: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new(dims: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        let mut prev = None;
        for (i, &(idx, v)) in entries.iter().enumerate() {
            if idx >= dims {
                return Err(Error::DimensionMismatch { expected: dims, got: idx + 1 });
            }
            if prev.is_some_and(|p| p >= idx) {
                return Err(Error::arg("entries", "indices must be strictly increasing"));
            }
            if !v.is_finite() || v == 0.0 {
                return Err(Error::NonFiniteFeature { row: i });
            }
            prev = Some(idx);
        }
        Ok(SparseVector { dims, entries })
    }

    pub fn zeros(dims: usize) -> Self {
        SparseVector { dims, entries: Vec::new() }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.entries.iter().map(|(_, v)| v * v).sum())
    }

    pub fn to_dense(&self) -> DenseVector {
        let mut v = alloc::vec![0.0; self.dims];
        for &(i, x) in &self.entries {
            v[i] = x;
        }
        DenseVector { values: v }
    }
}

/// Nonempty vector of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DenseVector {
    values: Vec<f64>,
}

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("values", "dense vector must have at least one dimension"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row: i });
        }
        Ok(DenseVector { values })
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A model input row, either sparse or dense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureVector {
    Sparse(SparseVector),
    Dense(DenseVector),
}

impl FeatureVector {
    pub fn dims(&self) -> usize {
        match self {
            FeatureVector::Sparse(s) => s.dims,
            FeatureVector::Dense(d) => d.dims(),
        }
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        match self {
            FeatureVector::Sparse(s) => s.entries.iter().map(|&(i, v)| w[i] * v).sum(),
            FeatureVector::Dense(d) => d.values.iter().zip(w).map(|(a, b)| a * b).sum(),
        }
    }

    /// `acc += scale * self`
    pub fn add_scaled_to(&self, acc: &mut [f64], scale: f64) {
        match self {
            FeatureVector::Sparse(s) => {
                for &(i, v) in &s.entries {
                    acc[i] += scale * v;
                }
            }
            FeatureVector::Dense(d) => {
                for (a, v) in acc.iter_mut().zip(&d.values) {
                    *a += scale * v;
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            FeatureVector::Sparse(s) => s.entries.iter().all(|e| e.1.is_finite()),
            FeatureVector::Dense(d) => d.values.iter().all(|v| v.is_finite()),
        }
    }

    /// The coordinates `[start, start + len)` as a dense vector.
    pub fn slice(&self, start: usize, len: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; len];
        match self {
            FeatureVector::Sparse(s) => {
                for &(i, v) in &s.entries {
                    if i >= start && i < start + len {
                        out[i - start] = v;
                    }
                }
            }
            FeatureVector::Dense(d) => out.copy_from_slice(&d.values[start..start + len]),
        }
        out
    }
}

impl From<SparseVector> for FeatureVector {
    fn from(v: SparseVector) -> Self {
        FeatureVector::Sparse(v)
    }
}

impl From<DenseVector> for FeatureVector {
    fn from(v: DenseVector) -> Self {
        FeatureVector::Dense(v)
    }
}

/// Appends the acoustic block after the lyric block.
pub fn hybrid_concat(lyric: &FeatureVector, acoustic: &DenseVector) -> FeatureVector {
    let offset = lyric.dims();
    match lyric {
        FeatureVector::Sparse(s) => {
            let mut entries = s.entries.clone();
            entries.extend(
                acoustic
                    .values
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, v)| (offset + i, *v)),
            );
            FeatureVector::Sparse(SparseVector {
                dims: offset + acoustic.dims(),
                entries,
            })
        }
        FeatureVector::Dense(d) => {
            let mut values = d.values.clone();
            values.extend_from_slice(&acoustic.values);
            FeatureVector::Dense(DenseVector { values })
        }
    }
}

/// Unigram vocabulary with document frequencies, fit on training lyrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    term_index: BTreeMap<String, usize>,
    doc_freq: BTreeMap<String, u64>,
    n_docs: u64,
    fitted_on: String,
}

impl Vocabulary {
    /// Keeps unigrams with document frequency `>= min_df`; column indices
    /// follow lexicographic term order.
    pub fn fit<'a, I>(docs: I, min_df: u64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut df: BTreeMap<String, u64> = BTreeMap::new();
        let mut n_docs = 0u64;
        for doc in docs {
            n_docs += 1;
            let uniq: BTreeSet<String> = tokenize(doc).into_iter().collect();
            for t in uniq {
                *df.entry(t).or_default() += 1;
            }
        }
        if n_docs == 0 {
            return Err(Error::InsufficientData("vocabulary needs at least one document".into()));
        }
        df.retain(|_, c| *c >= min_df);
        let term_index = df.keys().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Vocabulary {
            term_index,
            doc_freq: df,
            n_docs,
            fitted_on: "train".into(),
        })
    }

    /// Fits on `(song_id, lyrics)` pairs, refusing any song from the test
    /// split.
    pub fn fit_on_split<'a, I>(docs: I, split: &CorpusSplit, min_df: u64) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut texts = Vec::new();
        for (id, lyrics) in docs {
            if split.is_test(id) {
                return Err(Error::Leakage(id.to_string()));
            }
            texts.push(lyrics);
        }
        Self::fit(texts, min_df)
    }

    /// Rebuilds a vocabulary from a snapshot, checking index density.
    pub fn from_parts(entries: Vec<(String, usize, u64)>, n_docs: u64, fitted_on: &str) -> Result<Self> {
        let mut term_index = BTreeMap::new();
        let mut doc_freq = BTreeMap::new();
        let mut seen = alloc::vec![false; entries.len()];
        for (t, i, df) in entries {
            if i >= seen.len() || seen[i] {
                return Err(Error::arg("vocabulary", alloc::format!("index {i} is not dense")));
            }
            if df > n_docs {
                return Err(Error::arg("vocabulary", alloc::format!("df of `{t}` exceeds n_docs")));
            }
            seen[i] = true;
            if term_index.insert(t.clone(), i).is_some() {
                return Err(Error::DuplicateTerm(t));
            }
            doc_freq.insert(t, df);
        }
        Ok(Vocabulary {
            term_index,
            doc_freq,
            n_docs,
            fitted_on: fitted_on.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.term_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.term_index.is_empty()
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn fitted_on(&self) -> &str {
        &self.fitted_on
    }

    pub fn index(&self, term: &str) -> Option<usize> {
        self.term_index.get(term).copied()
    }

    pub fn doc_freq(&self, term: &str) -> u64 {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    /// `(term, index, df)` in index order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, usize, u64)> {
        self.term_index
            .iter()
            .map(|(t, &i)| (t.as_str(), i, self.doc_freq[t]))
    }

    /// Smoothed inverse document frequency `ln((1 + n) / (1 + df)) + 1`.
    pub fn idf(&self, term: &str) -> f64 {
        libm::log((1.0 + self.n_docs as f64) / (1.0 + self.doc_freq(term) as f64)) + 1.0
    }
}

/// Raw-count tf times smoothed idf, L2-normalized; unknown terms dropped.
pub fn tfidf_transform(vocab: &Vocabulary, lyrics: &str) -> SparseVector {
    let mut tf: BTreeMap<usize, (f64, &str)> = BTreeMap::new();
    let tokens = tokenize(lyrics);
    for t in &tokens {
        if let Some((term, &i)) = vocab.term_index.get_key_value(t.as_str()) {
            tf.entry(i).or_insert((0.0, term.as_str())).0 += 1.0;
        }
    }
    let mut entries: Vec<(usize, f64)> = tf
        .into_iter()
        .map(|(i, (count, term))| (i, count * vocab.idf(term)))
        .collect();
    let norm = libm::sqrt(entries.iter().map(|e| e.1 * e.1).sum());
    if norm > 0.0 {
        for e in &mut entries {
            e.1 /= norm;
        }
    }
    SparseVector {
        dims: vocab.len(),
        entries,
    }
}

/// The seventeen precomputed acoustic descriptors, in fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AcousticFeatures {
    pub acousticness: f64,
    pub bounciness: f64,
    pub beat_strength: f64,
    pub danceability: f64,
    pub energy: f64,
    pub flatness: f64,
    pub instrumentalness: f64,
    pub liveness: f64,
    pub loudness: f64,
    pub longest_silence_ratio: f64,
    pub mechanism: f64,
    pub organism: f64,
    pub runnability: f64,
    pub speechiness: f64,
    pub tempo: f64,
    pub valence: f64,
    pub mean_dynamic_range: f64,
}

impl AcousticFeatures {
    pub const DIMS: usize = 17;

    pub const FIELD_NAMES: [&'static str; Self::DIMS] = [
        "acousticness",
        "bounciness",
        "beat_strength",
        "danceability",
        "energy",
        "flatness",
        "instrumentalness",
        "liveness",
        "loudness",
        "longest_silence_ratio",
        "mechanism",
        "organism",
        "runnability",
        "speechiness",
        "tempo",
        "valence",
        "mean_dynamic_range",
    ];

    pub fn to_array(&self) -> [f64; Self::DIMS] {
        [
            self.acousticness,
            self.bounciness,
            self.beat_strength,
            self.danceability,
            self.energy,
            self.flatness,
            self.instrumentalness,
            self.liveness,
            self.loudness,
            self.longest_silence_ratio,
            self.mechanism,
            self.organism,
            self.runnability,
            self.speechiness,
            self.tempo,
            self.valence,
            self.mean_dynamic_range,
        ]
    }

    pub fn from_array(a: [f64; Self::DIMS]) -> Result<Self> {
        if let Some(i) = a.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row: i });
        }
        Ok(AcousticFeatures {
            acousticness: a[0],
            bounciness: a[1],
            beat_strength: a[2],
            danceability: a[3],
            energy: a[4],
            flatness: a[5],
            instrumentalness: a[6],
            liveness: a[7],
            loudness: a[8],
            longest_silence_ratio: a[9],
            mechanism: a[10],
            organism: a[11],
            runnability: a[12],
            speechiness: a[13],
            tempo: a[14],
            valence: a[15],
            mean_dynamic_range: a[16],
        })
    }

    pub fn to_dense(&self) -> DenseVector {
        DenseVector {
            values: self.to_array().to_vec(),
        }
    }
}

/// Per-dimension z-scoring fit on training vectors.
///
/// Constant dimensions are flagged and only centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
    pub zero_variance: Vec<bool>,
}

impl Scaler {
    pub fn fit(train: &[DenseVector]) -> Result<Self> {
        if train.len() < 2 {
            return Err(Error::InsufficientData(alloc::format!(
                "scaler needs at least 2 vectors, got {}",
                train.len()
            )));
        }
        let dims = train[0].dims();
        if let Some(v) = train.iter().find(|v| v.dims() != dims) {
            return Err(Error::DimensionMismatch { expected: dims, got: v.dims() });
        }
        let n = train.len() as f64;
        let mut mean = alloc::vec![0.0; dims];
        for v in train {
            for (m, x) in mean.iter_mut().zip(&v.values) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = alloc::vec![0.0; dims];
        for v in train {
            for ((s, x), m) in var.iter_mut().zip(&v.values).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
        let std: Vec<f64> = var.iter().map(|s| libm::sqrt(s / n)).collect();
        let zero_variance = std
            .iter()
            .zip(&mean)
            .map(|(s, m)| *s <= 1e-12 * m.abs().max(1.0))
            .collect();
        Ok(Scaler { mean, std, zero_variance })
    }

    /// Fits on `(song_id, vector)` pairs, refusing any song from the test
    /// split.
    pub fn fit_on_split<'a, I>(train: I, split: &CorpusSplit) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a DenseVector)>,
    {
        let mut rows = Vec::new();
        for (id, v) in train {
            if split.is_test(id) {
                return Err(Error::Leakage(id.to_string()));
            }
            rows.push(v.clone());
        }
        Self::fit(&rows)
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn scale(&self, v: &DenseVector) -> Result<DenseVector> {
        if v.dims() != self.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), got: v.dims() });
        }
        let values = v
            .values
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let centered = x - self.mean[i];
                if self.zero_variance[i] {
                    centered
                } else {
                    centered / self.std[i]
                }
            })
            .collect();
        Ok(DenseVector { values })
    }
}

/// Precomputed per-song lyric embeddings of one declared dimension.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, DenseVector>,
}

/// Songs requested from an [`EmbeddingTable`] but not present in it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoverageReport {
    pub requested: usize,
    pub missing: Vec<String>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("dim", "embedding dimension must be positive"));
        }
        Ok(EmbeddingTable { dim, vectors: BTreeMap::new() })
    }

    pub fn insert(&mut self, song_id: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::RaggedEmbedding {
                song: song_id.to_string(),
                expected: self.dim,
                got: values.len(),
            });
        }
        self.vectors.insert(song_id.to_string(), DenseVector::new(values)?);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, song_id: &str) -> Option<&DenseVector> {
        self.vectors.get(song_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &DenseVector)> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Looks up every requested song; missing ones are skipped and reported.
    pub fn lookup<'a, I>(&self, ids: I) -> (Vec<(&'a str, &DenseVector)>, CoverageReport)
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut found = Vec::new();
        let mut report = CoverageReport::default();
        for id in ids {
            report.requested += 1;
            match self.vectors.get(id) {
                Some(v) => found.push((id, v)),
                None => report.missing.push(id.to_string()),
            }
        }
        (found, report)
    }
}
