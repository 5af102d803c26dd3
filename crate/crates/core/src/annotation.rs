//! Human judgments of song-mood relevance: majority verdicts, the
//! lyrics/acoustics consensus rule and Fleiss' kappa.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::evaluation::{PairKey, Truth};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Judgment {
    Yes,
    No,
    Uninformative,
}

impl Judgment {
    pub const ALL: [Judgment; 3] = [Judgment::Yes, Judgment::No, Judgment::Uninformative];

    /// One-letter code used in annotation files.
    pub fn code(self) -> char {
        match self {
            Judgment::Yes => 'Y',
            Judgment::No => 'N',
            Judgment::Uninformative => 'U',
        }
    }

    pub fn from_code(s: &str) -> Option<Judgment> {
        match s.trim() {
            "Y" | "y" => Some(Judgment::Yes),
            "N" | "n" => Some(Judgment::No),
            "U" | "u" => Some(Judgment::Uninformative),
            _ => None,
        }
    }

    pub fn to_truth(self) -> Truth {
        match self {
            Judgment::Yes => Truth::Positive,
            Judgment::No => Truth::Negative,
            Judgment::Uninformative => Truth::Uninformative,
        }
    }
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// What the annotators were given: lyrics only, or the instrumental audio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Lyrics,
    Acoustics,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Lyrics => "lyrics",
            Source::Acoustics => "acoustics",
        }
    }

    pub fn parse(s: &str) -> Option<Source> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lyrics" => Some(Source::Lyrics),
            "acoustics" | "audio" => Some(Source::Acoustics),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub song_id: String,
    pub mood: String,
    pub source: Source,
    judgments: [Judgment; 3],
    tiebreak: Option<Judgment>,
}

fn all_distinct(j: &[Judgment; 3]) -> bool {
    j[0] != j[1] && j[1] != j[2] && j[0] != j[2]
}

impl AnnotationRecord {
    /// A tiebreak is accepted only when the three primary judgments all
    /// differ.
    pub fn new(
        song_id: &str,
        mood: &str,
        source: Source,
        judgments: [Judgment; 3],
        tiebreak: Option<Judgment>,
    ) -> Result<Self> {
        if tiebreak.is_some() && !all_distinct(&judgments) {
            return Err(Error::InvalidAnnotation {
                song: song_id.to_string(),
                mood: mood.to_string(),
                reason: "tiebreak given without a three-way disagreement",
            });
        }
        Ok(AnnotationRecord {
            song_id: song_id.to_string(),
            mood: mood.to_string(),
            source,
            judgments,
            tiebreak,
        })
    }

    pub fn judgments(&self) -> &[Judgment; 3] {
        &self.judgments
    }

    pub fn tiebreak(&self) -> Option<Judgment> {
        self.tiebreak
    }

    pub fn key(&self) -> PairKey {
        (self.song_id.clone(), self.mood.clone())
    }
}

/// A value held by at least two of the three judgments wins; a three-way
/// split goes to the tiebreak annotator.
pub fn majority_vote(record: &AnnotationRecord) -> Result<Judgment> {
    let j = &record.judgments;
    if j[0] == j[1] || j[0] == j[2] {
        return Ok(j[0]);
    }
    if j[1] == j[2] {
        return Ok(j[1]);
    }
    record.tiebreak.ok_or_else(|| Error::UnresolvedDisagreement {
        song: record.song_id.clone(),
        mood: record.mood.clone(),
    })
}

/// Any `Yes` wins; otherwise any `No`; otherwise `Uninformative`.
pub fn consensus(lyrics: Judgment, acoustics: Judgment) -> Judgment {
    use Judgment::*;
    match (lyrics, acoustics) {
        (Yes, _) | (_, Yes) => Yes,
        (No, _) | (_, No) => No,
        (Uninformative, Uninformative) => Uninformative,
    }
}

/// Per-source verdicts and their consensus for every annotated pair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub lyrics: BTreeMap<PairKey, Judgment>,
    pub acoustics: BTreeMap<PairKey, Judgment>,
    /// Only pairs judged from both sources.
    pub consensus: BTreeMap<PairKey, Judgment>,
}

impl Verdicts {
    pub fn from_records(records: &[AnnotationRecord]) -> Result<Self> {
        let mut v = Verdicts::default();
        for r in records {
            let verdict = majority_vote(r)?;
            let map = match r.source {
                Source::Lyrics => &mut v.lyrics,
                Source::Acoustics => &mut v.acoustics,
            };
            map.insert(r.key(), verdict);
        }
        for (k, l) in &v.lyrics {
            if let Some(a) = v.acoustics.get(k) {
                v.consensus.insert(k.clone(), consensus(*l, *a));
            }
        }
        Ok(v)
    }

    pub fn truth(map: &BTreeMap<PairKey, Judgment>) -> BTreeMap<PairKey, Truth> {
        map.iter().map(|(k, j)| (k.clone(), j.to_truth())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub kappa: f64,
    pub interpretation: String,
    /// Kappa fell in `[0, 0.01]`, which the interpretation bands leave
    /// uncovered; labelled "Slight agreement".
    pub interpretation_gap: bool,
    pub n_items: usize,
    pub n_raters: usize,
    pub n_categories: usize,
}

/// Fleiss' kappa from an items x categories count matrix where every row
/// sums to the same number of raters.
pub fn fleiss_kappa_counts(counts: &[Vec<u64>]) -> Result<AgreementReport> {
    if counts.len() < 2 {
        return Err(Error::InsufficientData(alloc::format!(
            "kappa needs at least 2 items, got {}",
            counts.len()
        )));
    }
    let k = counts[0].len();
    let n: u64 = counts[0].iter().sum();
    for (item, row) in counts.iter().enumerate() {
        let got: u64 = row.iter().sum();
        if row.len() != k || got != n {
            return Err(Error::RaggedRatings { item, expected: n as usize, got: got as usize });
        }
    }
    if n < 2 {
        return Err(Error::InsufficientData("kappa needs at least 2 raters per item".into()));
    }
    let items = counts.len() as f64;
    let nf = n as f64;
    let p_bar = counts
        .iter()
        .map(|row| (row.iter().map(|c| (c * c) as f64).sum::<f64>() - nf) / (nf * (nf - 1.0)))
        .sum::<f64>()
        / items;
    let mut p_e = 0.0;
    for j in 0..k {
        let pj = counts.iter().map(|r| r[j] as f64).sum::<f64>() / (items * nf);
        p_e += pj * pj;
    }
    let kappa = if (1.0 - p_e).abs() < 1e-15 {
        // every rating in one category
        1.0
    } else {
        (p_bar - p_e) / (1.0 - p_e)
    };
    let interp = interpret_kappa(kappa);
    Ok(AgreementReport {
        kappa,
        interpretation: interp.label.to_string(),
        interpretation_gap: interp.gap,
        n_items: counts.len(),
        n_raters: n as usize,
        n_categories: counts[0].iter().enumerate().filter(|(j, _)| counts.iter().any(|r| r[*j] > 0)).count(),
    })
}

/// Fleiss' kappa from raw ratings, one row per item.
pub fn fleiss_kappa<T: Ord + Clone>(ratings: &[Vec<T>]) -> Result<AgreementReport> {
    let mut categories: BTreeMap<T, usize> = BTreeMap::new();
    for row in ratings {
        for r in row {
            let next = categories.len();
            categories.entry(r.clone()).or_insert(next);
        }
    }
    if let Some(first) = ratings.first() {
        for (item, row) in ratings.iter().enumerate() {
            if row.len() != first.len() {
                return Err(Error::RaggedRatings { item, expected: first.len(), got: row.len() });
            }
        }
    }
    let k = categories.len().max(1);
    let counts: Vec<Vec<u64>> = ratings
        .iter()
        .map(|row| {
            let mut c = alloc::vec![0u64; k];
            for r in row {
                c[categories[r]] += 1;
            }
            c
        })
        .collect();
    fleiss_kappa_counts(&counts)
}

/// Kappa over the three primary judgments of each record.
pub fn record_agreement(records: &[AnnotationRecord]) -> Result<AgreementReport> {
    let rows: Vec<Vec<Judgment>> = records.iter().map(|r| r.judgments.to_vec()).collect();
    fleiss_kappa(&rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interpretation {
    pub label: &'static str,
    pub gap: bool,
}

/// Agreement bands: below 0 poor, then slight, fair, moderate, substantial
/// and almost perfect with upper edges 0.20, 0.40, 0.60, 0.80, 1.00.
pub fn interpret_kappa(kappa: f64) -> Interpretation {
    let (label, gap) = if kappa < 0.0 {
        ("Poor agreement", false)
    } else if kappa <= 0.01 {
        ("Slight agreement", true)
    } else if kappa <= 0.20 {
        ("Slight agreement", false)
    } else if kappa <= 0.40 {
        ("Fair agreement", false)
    } else if kappa <= 0.60 {
        ("Moderate agreement", false)
    } else if kappa <= 0.80 {
        ("Substantial agreement", false)
    } else {
        ("Almost perfect agreement", false)
    };
    Interpretation { label, gap }
}
