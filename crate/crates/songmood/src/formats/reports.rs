//! Tabular reports and the small CSV tables passed between subcommands.

use std::collections::BTreeMap;
use std::path::Path;

use songmood_core::annotation::AgreementReport;
use songmood_core::association::{BetaPrior, DistributionStats};
use songmood_core::evaluation::{MoodReport, PairKey, Prediction, ReportRow, SweepPoint};
use songmood_core::simulate::{Driver, GroundTruth, RecoveryReport};

use super::{csv_error, csv_reader, csv_writer, finish, fmt_sig9, parse_real, record_line, CsvContext};
use crate::error::{CliError, CliResult};

/// Writes a header and rows of already formatted cells.
pub fn write_table<I>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).in_file_csv(path)?;
    for row in rows {
        w.write_record(&row).in_file_csv(path)?;
    }
    finish(path, w)
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig9).unwrap_or_default()
}

pub const METRICS_HEADER: [&str; 9] = ["scope", "precision", "recall", "f1", "tp", "tn", "fp", "fn", "uninformative"];

fn metrics_cells(r: &ReportRow) -> Vec<String> {
    let c = &r.counts;
    vec![
        r.scope.clone(),
        fmt_sig9(r.metrics.precision),
        fmt_sig9(r.metrics.recall),
        fmt_sig9(r.metrics.f1),
        c.tp.to_string(),
        c.tn.to_string(),
        c.fp.to_string(),
        c.fn_.to_string(),
        c.uninformative.to_string(),
    ]
}

pub fn write_metrics(path: &Path, report: &MoodReport) -> CliResult<()> {
    let rows = report.rows.iter().chain(std::iter::once(&report.total)).map(metrics_cells);
    write_table(path, &METRICS_HEADER, rows)
}

pub fn write_sweep(path: &Path, points: &[SweepPoint]) -> CliResult<()> {
    write_table(
        path,
        &["tau", "precision", "recall"],
        points
            .iter()
            .map(|p| vec![fmt_sig9(p.tau), fmt_sig9(p.precision), fmt_sig9(p.recall)]),
    )
}

/// One classifier output.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub song_id: String,
    pub mood: String,
    pub kind: String,
    pub probability: f64,
    pub prediction: Prediction,
}

pub const PREDICTIONS_HEADER: [&str; 5] = ["song_id", "mood", "kind", "probability", "prediction"];

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> CliResult<()> {
    write_table(
        path,
        &PREDICTIONS_HEADER,
        rows.iter().map(|r| {
            vec![
                r.song_id.clone(),
                r.mood.clone(),
                r.kind.clone(),
                fmt_sig9(r.probability),
                r.prediction.as_str().to_string(),
            ]
        }),
    )
}

pub fn load_predictions(path: &Path) -> CliResult<Vec<PredictionRow>> {
    let mut rdr = csv_reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(PREDICTIONS_HEADER) {
        return Err(CliError::data(path, Some(1), format!("expected header {}", PREDICTIONS_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = record_line(&rec);
        let bad = |what: &str| CliError::data(path, line, format!("bad {what}"));
        if rec.len() != 5 {
            return Err(bad("field count"));
        }
        out.push(PredictionRow {
            song_id: rec[0].to_string(),
            mood: rec[1].to_string(),
            kind: rec[2].to_string(),
            probability: parse_real(&rec[3]).filter(|p| (0.0..=1.0).contains(p)).ok_or_else(|| bad("probability"))?,
            prediction: Prediction::parse(&rec[4]).ok_or_else(|| bad("prediction"))?,
        });
    }
    Ok(out)
}

/// Predictions of one model kind keyed by pair.
pub fn predictions_by_kind(rows: &[PredictionRow]) -> BTreeMap<String, BTreeMap<PairKey, Prediction>> {
    let mut out: BTreeMap<String, BTreeMap<PairKey, Prediction>> = BTreeMap::new();
    for r in rows {
        out.entry(r.kind.clone())
            .or_default()
            .insert((r.song_id.clone(), r.mood.clone()), r.prediction);
    }
    out
}

pub fn write_ground_truth(path: &Path, truth: &GroundTruth) -> CliResult<()> {
    let rows = truth.song_ids.iter().enumerate().flat_map(|(i, s)| {
        truth.moods.iter().enumerate().map(move |(m, mood)| {
            vec![
                s.clone(),
                mood.clone(),
                truth.affinity[i][m].to_string(),
                truth.drivers[m].as_str().to_string(),
            ]
        })
    });
    write_table(path, &["song_id", "mood", "affinity", "driver"], rows)
}

pub fn load_ground_truth(path: &Path) -> CliResult<GroundTruth> {
    let mut rdr = csv_reader(path)?;
    let mut songs: Vec<String> = Vec::new();
    let mut moods: Vec<String> = Vec::new();
    let mut drivers: BTreeMap<String, Driver> = BTreeMap::new();
    let mut cells: BTreeMap<(String, String), f64> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = record_line(&rec);
        let bad = || CliError::data(path, line, "expected song_id,mood,affinity,driver");
        if rec.len() != 4 {
            return Err(bad());
        }
        if songs.last().map(String::as_str) != Some(&rec[0]) {
            songs.push(rec[0].to_string());
        }
        if !moods.iter().any(|m| m == &rec[1]) {
            moods.push(rec[1].to_string());
        }
        drivers.insert(rec[1].to_string(), Driver::parse(&rec[3]).ok_or_else(bad)?);
        cells.insert((rec[0].to_string(), rec[1].to_string()), parse_real(&rec[2]).ok_or_else(bad)?);
    }
    songs.sort();
    songs.dedup();
    let affinity = songs
        .iter()
        .map(|s| {
            moods
                .iter()
                .map(|m| cells.get(&(s.clone(), m.clone())).copied())
                .collect::<Option<Vec<f64>>>()
        })
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| CliError::data(path, None, "ground truth is not a full song x mood table"))?;
    let truth = GroundTruth {
        song_ids: songs,
        drivers: moods.iter().map(|m| drivers[m]).collect(),
        moods,
        affinity,
    };
    truth.check().map_err(|e| CliError::data(path, None, e))?;
    Ok(truth)
}

pub fn write_priors(path: &Path, priors: &[BetaPrior]) -> CliResult<()> {
    write_table(
        path,
        &["mood", "p_bar", "v_bar", "alpha", "beta", "n_songs", "fallback"],
        priors.iter().map(|p| {
            vec![
                p.mood.clone(),
                fmt_sig9(p.p_bar),
                fmt_sig9(p.v_bar),
                fmt_sig9(p.alpha_hat),
                fmt_sig9(p.beta_hat),
                p.n_songs_used.to_string(),
                p.fallback
                    .map(|f| serde_json::to_value(f).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
                    .unwrap_or_default(),
            ]
        }),
    )
}

pub fn write_distribution(path: &Path, stats: &DistributionStats) -> CliResult<()> {
    let mut rows = vec![
        vec!["n".into(), String::new(), String::new(), stats.n.to_string()],
        vec!["mean".into(), String::new(), String::new(), fmt_sig9(stats.mean)],
        vec!["std".into(), String::new(), String::new(), fmt_sig9(stats.std)],
    ];
    for ((lo, hi), c) in stats.bin_edges().into_iter().zip(&stats.histogram) {
        rows.push(vec!["bin".into(), fmt_sig9(lo), fmt_sig9(hi), c.to_string()]);
    }
    write_table(path, &["stat", "lower", "upper", "value"], rows)
}

pub fn write_top_moods(path: &Path, top: &[(String, u64)]) -> CliResult<()> {
    write_table(
        path,
        &["rank", "mood", "positive_songs"],
        top.iter()
            .enumerate()
            .map(|(i, (m, c))| vec![(i + 1).to_string(), m.clone(), c.to_string()]),
    )
}

pub fn write_recovery(path: &Path, report: &RecoveryReport) -> CliResult<()> {
    let mut rows: Vec<Vec<String>> = report
        .per_mood
        .iter()
        .map(|m| {
            vec![
                m.mood.clone(),
                m.n_songs.to_string(),
                opt(m.correlation),
                m.excluded.clone().unwrap_or_default(),
            ]
        })
        .collect();
    rows.push(vec!["median".into(), String::new(), opt(report.median), String::new()]);
    write_table(path, &["mood", "n_songs", "spearman", "excluded"], rows)
}

pub fn write_kappa(path: &Path, reports: &[(String, AgreementReport)]) -> CliResult<()> {
    write_table(
        path,
        &["source", "kappa", "interpretation", "interpretation_gap", "n_items", "n_raters", "n_categories"],
        reports.iter().map(|(s, r)| {
            vec![
                s.clone(),
                fmt_sig9(r.kappa),
                r.interpretation.clone(),
                r.interpretation_gap.to_string(),
                r.n_items.to_string(),
                r.n_raters.to_string(),
                r.n_categories.to_string(),
            ]
        }),
    )
}

/// Agreement of a predictor with an annotation-based truth.
pub const AGREEMENT_HEADER: [&str; 11] = [
    "ground_truth", "feature", "approach", "precision", "recall", "f1", "tp", "tn", "fp", "fn", "uninformative",
];

pub fn agreement_cells(ground_truth: &str, feature: &str, approach: &str, row: &ReportRow) -> Vec<String> {
    let mut cells = vec![ground_truth.to_string(), feature.to_string(), approach.to_string()];
    cells.extend(metrics_cells(row).into_iter().skip(1));
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predictions_and_truth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pred.csv");
        let rows = vec![PredictionRow {
            song_id: "s1".into(),
            mood: "love".into(),
            kind: "bow".into(),
            probability: 0.75,
            prediction: Prediction::Positive,
        }];
        write_predictions(&p, &rows).unwrap();
        assert_eq!(load_predictions(&p).unwrap(), rows);

        let truth = GroundTruth {
            song_ids: vec!["a".into(), "b".into()],
            moods: vec!["love".into(), "chill".into()],
            affinity: vec![vec![0.25, 0.75], vec![1.0, 0.0]],
            drivers: vec![Driver::Lyrics, Driver::Acoustics],
        };
        let g = dir.path().join("gt.csv");
        write_ground_truth(&g, &truth).unwrap();
        assert_eq!(load_ground_truth(&g).unwrap(), truth);
    }
}
