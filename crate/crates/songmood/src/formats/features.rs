//! Feature snapshots: vocabulary, scaler, embeddings and the split.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use songmood_core::features::{EmbeddingTable, Scaler, Vocabulary};
use songmood_core::ingest::CorpusSplit;

use super::{create, csv_error, csv_reader, csv_writer, finish, parse_real, record_line, CsvContext};
use crate::error::{CliError, CliResult, Context};

/// Meta line, then CSV `term,index,df`.
pub fn write_vocabulary(path: &Path, vocab: &Vocabulary) -> CliResult<()> {
    let mut f = create(path)?;
    writeln!(f, "# n_docs={} fitted_on={}", vocab.n_docs(), vocab.fitted_on()).in_file(path)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(f);
    w.write_record(["term", "index", "df"]).in_file_csv(path)?;
    for (t, i, df) in vocab.entries() {
        w.write_record([t, &i.to_string(), &df.to_string()]).in_file_csv(path)?;
    }
    finish(path, w)
}

pub fn load_vocabulary(path: &Path) -> CliResult<Vocabulary> {
    let f = File::open(path).in_file(path)?;
    let mut reader = BufReader::new(f);
    let mut meta = String::new();
    reader.read_line(&mut meta).in_file(path)?;
    let mut n_docs = None;
    let mut fitted_on = "train".to_string();
    for kv in meta.trim().trim_start_matches('#').split_whitespace() {
        match kv.split_once('=') {
            Some(("n_docs", v)) => n_docs = v.parse::<u64>().ok(),
            Some(("fitted_on", v)) => fitted_on = v.to_string(),
            _ => {}
        }
    }
    let n_docs = n_docs.ok_or_else(|| CliError::data(path, Some(1), "missing n_docs meta line"))?;
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = record_line(&rec).map(|l| l + 1);
        let bad = || CliError::data(path, line, "expected term,index,df");
        if rec.len() != 3 {
            return Err(bad());
        }
        let index = rec[1].parse().map_err(|_| bad())?;
        let df = rec[2].parse().map_err(|_| bad())?;
        entries.push((rec[0].to_string(), index, df));
    }
    Vocabulary::from_parts(entries, n_docs, &fitted_on).map_err(|e| CliError::data(path, None, e))
}

/// CSV `dimension,mean,std,zero_variance` at full precision.
pub fn write_scaler(path: &Path, scaler: &Scaler, names: &[&str]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["dimension", "mean", "std", "zero_variance"]).in_file_csv(path)?;
    for i in 0..scaler.dims() {
        let name = names.get(i).map(|s| s.to_string()).unwrap_or_else(|| i.to_string());
        w.write_record([
            name,
            scaler.mean[i].to_string(),
            scaler.std[i].to_string(),
            scaler.zero_variance[i].to_string(),
        ])
        .in_file_csv(path)?;
    }
    finish(path, w)
}

pub fn load_scaler(path: &Path) -> CliResult<Scaler> {
    let mut rdr = csv_reader(path)?;
    let mut s = Scaler {
        mean: Vec::new(),
        std: Vec::new(),
        zero_variance: Vec::new(),
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = record_line(&rec);
        let bad = || CliError::data(path, line, "expected dimension,mean,std,zero_variance");
        if rec.len() != 4 {
            return Err(bad());
        }
        s.mean.push(parse_real(&rec[1]).ok_or_else(bad)?);
        s.std.push(parse_real(&rec[2]).ok_or_else(bad)?);
        s.zero_variance.push(rec[3].parse().map_err(|_| bad())?);
    }
    Ok(s)
}

/// CSV `song_id,v0,...,v{d-1}`; the header fixes the dimension.
pub fn write_embeddings(path: &Path, table: &EmbeddingTable) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["song_id".to_string()];
    header.extend((0..table.dim()).map(|i| format!("v{i}")));
    w.write_record(&header).in_file_csv(path)?;
    for (id, v) in table.iter() {
        let mut row = vec![id.to_string()];
        row.extend(v.values().iter().map(|x| x.to_string()));
        w.write_record(&row).in_file_csv(path)?;
    }
    finish(path, w)
}

pub fn load_embeddings(path: &Path) -> CliResult<EmbeddingTable> {
    let mut rdr = csv_reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.get(0) != Some("song_id") || header.len() < 2 {
        return Err(CliError::data(path, Some(1), "expected header song_id,v0,..."));
    }
    let mut table = EmbeddingTable::new(header.len() - 1).map_err(|e| CliError::data(path, Some(1), e))?;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = record_line(&rec);
        let values = rec
            .iter()
            .skip(1)
            .map(|v| parse_real(v).filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| CliError::data(path, line, format!("non-numeric value for song {}", &rec[0])))?;
        table.insert(&rec[0], values).map_err(|e| CliError::data(path, line, e))?;
    }
    Ok(table)
}

/// CSV `song_id,split`.
pub fn write_split(path: &Path, split: &CorpusSplit) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["song_id", "split"]).in_file_csv(path)?;
    let mut rows: Vec<(&str, &str)> = split.train_ids.iter().map(|s| (s.as_str(), "train")).collect();
    rows.extend(split.test_ids.iter().map(|s| (s.as_str(), "test")));
    rows.sort();
    for (id, part) in rows {
        w.write_record([id, part]).in_file_csv(path)?;
    }
    finish(path, w)
}
