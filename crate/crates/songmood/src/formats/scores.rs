//! Association scores CSV.

use std::path::Path;

use songmood_core::association::{AssociationLabel, AssociationScore};

use super::{csv_error, csv_reader, csv_writer, finish, fmt_sig9, parse_real, record_line, CsvContext};
use crate::error::{CliError, CliResult};

pub const HEADER: [&str; 7] = ["song_id", "mood", "pmi", "npmi", "bnpmi", "label", "prior_fallback"];

pub fn write_scores(path: &Path, scores: &[AssociationScore]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(HEADER).in_file_csv(path)?;
    for s in scores {
        w.write_record([
            s.song_id.as_str(),
            s.mood.as_str(),
            &fmt_sig9(s.pmi),
            &fmt_sig9(s.npmi),
            &fmt_sig9(s.bnpmi),
            s.label.as_str(),
            if s.prior_fallback { "true" } else { "false" },
        ])
        .in_file_csv(path)?;
    }
    finish(path, w)
}

pub fn load_scores(path: &Path) -> CliResult<Vec<AssociationScore>> {
    let mut rdr = csv_reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(HEADER) {
        return Err(CliError::data(path, Some(1), format!("expected header {}", HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = record_line(&rec);
        if rec.len() != HEADER.len() {
            return Err(CliError::data(path, line, format!("expected {} fields", HEADER.len())));
        }
        let real = |i: usize| {
            parse_real(&rec[i]).ok_or_else(|| CliError::data(path, line, format!("bad {} value {:?}", HEADER[i], &rec[i])))
        };
        out.push(AssociationScore {
            song_id: rec[0].to_string(),
            mood: rec[1].to_string(),
            pmi: real(2)?,
            npmi: real(3)?,
            bnpmi: real(4)?,
            label: AssociationLabel::parse(&rec[5])
                .ok_or_else(|| CliError::data(path, line, format!("bad label {:?}", &rec[5])))?,
            prior_fallback: match &rec[6] {
                "true" => true,
                "false" => false,
                v => return Err(CliError::data(path, line, format!("bad prior_fallback {v:?}"))),
            },
        });
    }
    Ok(out)
}
