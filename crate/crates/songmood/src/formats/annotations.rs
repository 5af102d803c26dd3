//! Annotation CSV `song_id,mood,source,judge1,judge2,judge3,judge4`.

use std::path::Path;

use songmood_core::annotation::{AnnotationRecord, Judgment, Source};

use super::{csv_error, csv_reader, csv_writer, finish, record_line, CsvContext};
use crate::error::{CliError, CliResult};

pub const HEADER: [&str; 7] = ["song_id", "mood", "source", "judge1", "judge2", "judge3", "judge4"];

pub fn load_annotations(path: &Path) -> CliResult<Vec<AnnotationRecord>> {
    let mut rdr = csv_reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().map(str::trim).ne(HEADER) {
        return Err(CliError::data(path, Some(1), format!("expected header {}", HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = record_line(&rec);
        if rec.len() != 6 && rec.len() != 7 {
            return Err(CliError::data(path, line, format!("expected 6 or 7 fields, got {}", rec.len())));
        }
        let source = Source::parse(&rec[2])
            .ok_or_else(|| CliError::data(path, line, format!("unknown source {:?}", &rec[2])))?;
        let judge = |i: usize| {
            Judgment::from_code(&rec[i]).ok_or_else(|| CliError::data(path, line, format!("judge{} must be Y, N or U", i - 2)))
        };
        let judgments = [judge(3)?, judge(4)?, judge(5)?];
        let tiebreak = match rec.get(6).map(str::trim) {
            None | Some("") => None,
            Some(_) => Some(judge(6)?),
        };
        let r = AnnotationRecord::new(rec[0].trim(), rec[1].trim(), source, judgments, tiebreak)
            .map_err(|e| CliError::data(path, line, e))?;
        out.push(r);
    }
    Ok(out)
}

pub fn write_annotations(path: &Path, records: &[AnnotationRecord]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(HEADER).in_file_csv(path)?;
    for r in records {
        let j = r.judgments();
        let code = |j: Judgment| j.code().to_string();
        w.write_record([
            r.song_id.clone(),
            r.mood.clone(),
            r.source.as_str().to_string(),
            code(j[0]),
            code(j[1]),
            code(j[2]),
            r.tiebreak().map(code).unwrap_or_default(),
        ])
        .in_file_csv(path)?;
    }
    finish(path, w)
}
