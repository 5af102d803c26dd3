//! Playlist and song JSONL corpora.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use songmood_core::features::AcousticFeatures;
use songmood_core::ingest::{PlaylistRecord, SongRecord};

use super::{create, csv_writer, finish, CsvContext};
use crate::error::{CliError, CliResult, Context};

/// A malformed input line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub errors: Vec<LineError>,
}

fn parse_lines<T, R, F>(path: &Path, reader: R, strict: bool, mut parse: F) -> CliResult<Parsed<T>>
where
    R: BufRead,
    F: FnMut(&str) -> Result<T, String>,
{
    let mut out = Parsed {
        records: Vec::new(),
        errors: Vec::new(),
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line.in_file(path)?;
        if line.trim().is_empty() {
            continue;
        }
        match parse(&line) {
            Ok(r) => out.records.push(r),
            Err(reason) if strict => return Err(CliError::data(path, Some(i + 1), reason)),
            Err(reason) => out.errors.push(LineError { line: i + 1, reason }),
        }
    }
    Ok(out)
}

fn string_field(obj: &serde_json::Map<String, Value>, key: &str) -> Result<String, String> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(format!("\"{key}\" must be a string")),
        None => Err(format!("missing \"{key}\"")),
    }
}

pub fn parse_playlist_line(line: &str) -> Result<PlaylistRecord, String> {
    let v: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = v.as_object().ok_or("expected a JSON object")?;
    let playlist_id = string_field(obj, "id")?;
    if playlist_id.is_empty() {
        return Err("\"id\" is empty".into());
    }
    let title = string_field(obj, "title")?;
    let description = match obj.get("description") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err("\"description\" must be a string".into()),
    };
    let tracks = match obj.get("tracks") {
        Some(Value::Array(a)) => a
            .iter()
            .map(|t| t.as_str().map(String::from).ok_or("track ids must be strings"))
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => return Err("\"tracks\" must be an array".into()),
        None => return Err("missing \"tracks\"".into()),
    };
    Ok(PlaylistRecord {
        playlist_id,
        title,
        description,
        track_ids: tracks,
    })
}

pub fn parse_playlists<R: BufRead>(path: &Path, reader: R, strict: bool) -> CliResult<Parsed<PlaylistRecord>> {
    parse_lines(path, reader, strict, parse_playlist_line)
}

pub fn load_playlists(path: &Path, strict: bool) -> CliResult<Parsed<PlaylistRecord>> {
    let f = File::open(path).in_file(path)?;
    parse_playlists(path, BufReader::new(f), strict)
}

#[derive(Serialize)]
struct PlaylistLine<'a> {
    id: &'a str,
    title: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    description: Option<&'a str>,
    tracks: &'a [String],
}

pub fn write_playlists(path: &Path, playlists: &[PlaylistRecord]) -> CliResult<()> {
    let mut w = create(path)?;
    for p in playlists {
        let line = PlaylistLine {
            id: &p.playlist_id,
            title: &p.title,
            description: p.description.as_deref(),
            tracks: &p.track_ids,
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| CliError::Internal(e.to_string()))?;
        w.write_all(b"\n").in_file(path)?;
    }
    w.flush().in_file(path)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SongLine {
    id: String,
    lyrics: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    acoustic: Option<AcousticFeatures>,
}

pub fn parse_song_line(line: &str) -> Result<SongRecord, String> {
    let s: SongLine = serde_json::from_str(line).map_err(|e| format!("invalid song record: {e}"))?;
    if s.id.is_empty() {
        return Err("\"id\" is empty".into());
    }
    if let Some(a) = &s.acoustic {
        if !a.to_array().iter().all(|v| v.is_finite()) {
            return Err("acoustic features must be finite".into());
        }
    }
    Ok(SongRecord {
        song_id: s.id,
        lyrics: s.lyrics,
        acoustic: s.acoustic,
    })
}

pub fn load_songs(path: &Path, strict: bool) -> CliResult<Parsed<SongRecord>> {
    let f = File::open(path).in_file(path)?;
    parse_lines(path, BufReader::new(f), strict, parse_song_line)
}

pub fn write_songs(path: &Path, songs: &[SongRecord]) -> CliResult<()> {
    let mut w = create(path)?;
    for s in songs {
        let line = SongLine {
            id: s.song_id.clone(),
            lyrics: s.lyrics.clone(),
            acoustic: s.acoustic,
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| CliError::Internal(e.to_string()))?;
        w.write_all(b"\n").in_file(path)?;
    }
    w.flush().in_file(path)
}

/// Error report CSV `line,reason`.
pub fn write_error_report(path: &Path, errors: &[LineError]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["line", "reason"]).in_file_csv(path)?;
    for e in errors {
        w.write_record([e.line.to_string(), e.reason.clone()]).in_file_csv(path)?;
    }
    finish(path, w)
}
