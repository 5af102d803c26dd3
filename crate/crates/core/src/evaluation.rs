//! Confusion counts, precision/recall/F1 and threshold sweeps.
//!
//! Ratios with a zero denominator are reported as 0.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `(song_id, mood)`.
pub type PairKey = (String, String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prediction {
    Positive,
    Negative,
}

impl Prediction {
    pub fn as_str(self) -> &'static str {
        match self {
            Prediction::Positive => "positive",
            Prediction::Negative => "negative",
        }
    }

    pub fn parse(s: &str) -> Option<Prediction> {
        match s {
            "positive" => Some(Prediction::Positive),
            "negative" => Some(Prediction::Negative),
            _ => None,
        }
    }
}

/// Ground truth for one pair. Uninformative pairs are tallied separately
/// and kept out of the 2x2 table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truth {
    Positive,
    Negative,
    Uninformative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub uninformative: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, prediction: Prediction, truth: Truth) {
        match (truth, prediction) {
            (Truth::Uninformative, _) => self.uninformative += 1,
            (Truth::Positive, Prediction::Positive) => self.tp += 1,
            (Truth::Positive, Prediction::Negative) => self.fn_ += 1,
            (Truth::Negative, Prediction::Positive) => self.fp += 1,
            (Truth::Negative, Prediction::Negative) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_ + self.uninformative
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.uninformative += other.uninformative;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn metrics(c: &ConfusionCounts) -> Metrics {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Metrics { precision, recall, f1 }
}

fn missing_error<'a>(pairs: impl Iterator<Item = &'a PairKey>) -> Result<()> {
    let missing: Vec<PairKey> = pairs.cloned().collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingPredictions(missing))
    }
}

/// Tallies predictions against truth; every truth pair needs a prediction.
pub fn confusion(
    predictions: &BTreeMap<PairKey, Prediction>,
    truth: &BTreeMap<PairKey, Truth>,
) -> Result<ConfusionCounts> {
    missing_error(truth.keys().filter(|k| !predictions.contains_key(*k)))?;
    let mut c = ConfusionCounts::default();
    for (k, t) in truth {
        c.record(predictions[k], *t);
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scope: String,
    pub metrics: Metrics,
    pub counts: ConfusionCounts,
    /// No truth pairs fell in this scope.
    pub empty: bool,
}

impl ReportRow {
    pub fn new(scope: &str, counts: ConfusionCounts) -> Self {
        ReportRow {
            scope: scope.to_string(),
            metrics: metrics(&counts),
            counts,
            empty: counts.total() == 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoodReport {
    pub rows: Vec<ReportRow>,
    /// Micro-average over the requested moods.
    pub total: ReportRow,
}

pub fn per_mood_report(
    predictions: &BTreeMap<PairKey, Prediction>,
    truth: &BTreeMap<PairKey, Truth>,
    moods: &[&str],
) -> Result<MoodReport> {
    missing_error(
        truth
            .keys()
            .filter(|k| moods.contains(&k.1.as_str()) && !predictions.contains_key(*k)),
    )?;
    let mut by_mood: BTreeMap<&str, ConfusionCounts> = BTreeMap::new();
    for (k, t) in truth {
        if moods.contains(&k.1.as_str()) {
            by_mood.entry(k.1.as_str()).or_default().record(predictions[k], *t);
        }
    }
    let mut total = ConfusionCounts::default();
    let rows = moods
        .iter()
        .map(|m| {
            let c = by_mood.get(m).copied().unwrap_or_default();
            total.add(&c);
            ReportRow::new(m, c)
        })
        .collect();
    Ok(MoodReport {
        rows,
        total: ReportRow::new("total", total),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tau: f64,
    pub precision: f64,
    pub recall: f64,
}

impl SweepPoint {
    pub fn f1(&self) -> f64 {
        let s = self.precision + self.recall;
        if s > 0.0 {
            2.0 * self.precision * self.recall / s
        } else {
            0.0
        }
    }
}

/// Evaluates "positive iff score >= tau" at each threshold.
pub fn threshold_sweep(
    scores: &BTreeMap<PairKey, f64>,
    truth: &BTreeMap<PairKey, Truth>,
    taus: &[f64],
) -> Result<Vec<SweepPoint>> {
    if taus.is_empty() {
        return Err(Error::arg("taus", "at least one threshold is required"));
    }
    if taus.iter().any(|t| !(*t > 0.0 && *t < 1.0)) || taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("taus", "thresholds must be strictly increasing in (0, 1)"));
    }
    missing_error(truth.keys().filter(|k| !scores.contains_key(*k)))?;
    Ok(taus
        .iter()
        .map(|&tau| {
            let mut c = ConfusionCounts::default();
            for (k, t) in truth {
                let p = if scores[k] >= tau {
                    Prediction::Positive
                } else {
                    Prediction::Negative
                };
                c.record(p, *t);
            }
            let m = metrics(&c);
            SweepPoint {
                tau,
                precision: m.precision,
                recall: m.recall,
            }
        })
        .collect())
}

/// Sweep point with the highest F1; the earliest wins ties.
pub fn best_f1(points: &[SweepPoint]) -> Option<SweepPoint> {
    points
        .iter()
        .copied()
        .fold(None, |best: Option<SweepPoint>, p| match best {
            Some(b) if b.f1() >= p.f1() => Some(b),
            _ => Some(p),
        })
}

/// `n` evenly spaced thresholds strictly inside `(0, 1)`.
pub fn even_taus(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}
