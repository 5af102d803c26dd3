use std::path::Path;

use songmood_core::lexicon::{Mood, MoodLexicon, PartOfSpeech};

use super::{csv_error, csv_reader, csv_writer, finish, record_line, CsvContext};
use crate::error::{CliError, CliResult, Context};

pub const HEADER: [&str; 3] = ["term", "pos", "template_override"];

/// Reads a `term,pos,template_override` file, keeping file order.
pub fn load_lexicon(path: &Path) -> CliResult<MoodLexicon> {
    let mut rdr = csv_reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().map(str::trim).ne(HEADER) {
        return Err(CliError::data(path, Some(1), format!("expected header {}", HEADER.join(","))));
    }
    let mut moods = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = record_line(&rec);
        if rec.len() < 2 || rec.len() > 3 {
            return Err(CliError::data(path, line, format!("expected 2 or 3 fields, got {}", rec.len())));
        }
        let pos: PartOfSpeech = rec[1]
            .parse()
            .map_err(|_| CliError::data(path, line, format!("unknown part of speech {:?}", &rec[1])))?;
        let template = rec.get(2).filter(|t| !t.trim().is_empty());
        let mood = Mood::new(&rec[0], pos, template).map_err(|e| CliError::data(path, line, e))?;
        moods.push(mood);
    }
    MoodLexicon::new(moods).in_file(path)
}

pub fn write_lexicon(path: &Path, lexicon: &MoodLexicon) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(HEADER).in_file_csv(path)?;
    for m in lexicon.moods() {
        w.write_record([m.term(), m.pos().as_str(), m.template_override().unwrap_or("")])
            .in_file_csv(path)?;
    }
    finish(path, w)
}
