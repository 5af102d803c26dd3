//! Co-occurrence count snapshot: JSONL with a leading meta line followed by
//! `song`, `mood` and `joint` lines, each group in key order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use songmood_core::association::CooccurrenceCounts;

use super::create;
use crate::error::{CliError, CliResult, Context};

pub const COUNTS_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "section", rename_all = "snake_case")]
enum Line {
    Meta { version: u32, n_playlists: u64 },
    Songs { song_id: String, count: u64 },
    Moods { mood: String, count: u64 },
    Joints { song_id: String, mood: String, count: u64 },
}

pub fn write_counts(path: &Path, counts: &CooccurrenceCounts) -> CliResult<()> {
    let mut w = create(path)?;
    let mut emit = |line: &Line| -> CliResult<()> {
        serde_json::to_writer(&mut w, line).map_err(|e| CliError::Internal(e.to_string()))?;
        w.write_all(b"\n").in_file(path)
    };
    emit(&Line::Meta {
        version: COUNTS_VERSION,
        n_playlists: counts.n_playlists(),
    })?;
    for (s, c) in counts.song_playlists() {
        emit(&Line::Songs { song_id: s.clone(), count: *c })?;
    }
    for (m, c) in counts.mood_playlists() {
        emit(&Line::Moods { mood: m.clone(), count: *c })?;
    }
    for (s, m, c) in counts.joint_entries() {
        emit(&Line::Joints {
            song_id: s.to_string(),
            mood: m.to_string(),
            count: c,
        })?;
    }
    w.flush().in_file(path)
}

pub fn load_counts(path: &Path) -> CliResult<CooccurrenceCounts> {
    let f = File::open(path).in_file(path)?;
    let mut n_playlists = None;
    let mut songs = BTreeMap::new();
    let mut moods = BTreeMap::new();
    let mut joint: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.in_file(path)?;
        let parsed: Line = serde_json::from_str(&line).map_err(|e| CliError::data(path, Some(i + 1), e))?;
        match parsed {
            Line::Meta { version, n_playlists: n } => {
                if i != 0 {
                    return Err(CliError::data(path, Some(i + 1), "meta must be the first line"));
                }
                if version != COUNTS_VERSION {
                    return Err(CliError::data(path, Some(1), format!("unsupported counts version {version}")));
                }
                n_playlists = Some(n);
            }
            _ if n_playlists.is_none() => {
                return Err(CliError::data(path, Some(i + 1), "missing meta line"));
            }
            Line::Songs { song_id, count } => {
                songs.insert(song_id, count);
            }
            Line::Moods { mood, count } => {
                moods.insert(mood, count);
            }
            Line::Joints { song_id, mood, count } => {
                joint.entry(song_id).or_default().insert(mood, count);
            }
        }
    }
    let n = n_playlists.ok_or_else(|| CliError::data(path, None, "empty counts snapshot"))?;
    CooccurrenceCounts::from_parts(n, songs, moods, joint).map_err(|e| CliError::data(path, None, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_version() {
        let mut c = CooccurrenceCounts::new();
        c.add_playlist(&["a".into(), "b".into()], &["sad"]);
        c.add_playlist(&["b".into()], &[]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("counts.jsonl");
        write_counts(&p, &c).unwrap();
        assert_eq!(load_counts(&p).unwrap(), c);
        let text = std::fs::read_to_string(&p).unwrap().replace("\"version\":1", "\"version\":9");
        std::fs::write(&p, text).unwrap();
        assert!(load_counts(&p).unwrap_err().to_string().contains("version"));
    }
}
