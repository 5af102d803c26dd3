//! Model files. JSON mode writes one object; binary mode writes a magic
//! tag, a little-endian `u32` version, a length-prefixed JSON header and
//! the parameters as little-endian `f64`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use songmood_core::experiment::MoodModel;
use songmood_core::models::Model;

use super::create;
use crate::error::{CliError, CliResult, Context};

pub const MODEL_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"SMDL";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Json,
    Binary,
}

impl ModelFormat {
    pub fn parse(s: &str) -> Option<ModelFormat> {
        match s {
            "json" => Some(ModelFormat::Json),
            "binary" | "bin" => Some(ModelFormat::Binary),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ModelFormat::Json => "json",
            ModelFormat::Binary => "bin",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    mood: String,
    dims: usize,
    kind: String,
    model: MoodModel,
}

/// Moves every trainable parameter out of `m` into a flat vector.
fn take_params(m: &mut MoodModel) -> Vec<f64> {
    match &mut m.model {
        Model::Logistic(l) => {
            let mut p = std::mem::take(&mut l.weights);
            p.push(std::mem::take(&mut l.bias));
            p
        }
        Model::Hybrid(h) => {
            let p = h.flat_params();
            h.w1.clear();
            h.b1.clear();
            h.w2.clear();
            h.b2 = 0.0;
            p
        }
    }
}

fn put_params(m: &mut MoodModel, dims: usize, p: Vec<f64>) -> Result<(), String> {
    match &mut m.model {
        Model::Logistic(l) => {
            if p.len() != dims + 1 {
                return Err(format!("expected {} parameters, got {}", dims + 1, p.len()));
            }
            l.weights = p;
            l.bias = l.weights.pop().expect("nonempty");
        }
        Model::Hybrid(h) => {
            let layout = h.layout();
            if p.len() != layout.n_params() {
                return Err(format!("expected {} parameters, got {}", layout.n_params(), p.len()));
            }
            h.w1 = p[layout.w1()].to_vec();
            h.b1 = p[layout.b1()].to_vec();
            h.w2 = p[layout.w2()].to_vec();
            h.b2 = p[layout.b2().start];
        }
    }
    Ok(())
}

pub fn encode(model: &MoodModel, format: ModelFormat) -> Vec<u8> {
    let mut file = ModelFile {
        version: MODEL_VERSION,
        mood: model.mood().to_string(),
        dims: model.model.dims(),
        kind: model.model.kind().to_string(),
        model: model.clone(),
    };
    match format {
        ModelFormat::Json => {
            let mut out = serde_json::to_vec_pretty(&file).expect("model serializes");
            out.push(b'\n');
            out
        }
        ModelFormat::Binary => {
            let params = take_params(&mut file.model);
            let header = serde_json::to_vec(&file).expect("model serializes");
            let mut out = Vec::with_capacity(16 + header.len() + 8 * params.len());
            out.extend_from_slice(MAGIC);
            out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
            out.extend_from_slice(&(header.len() as u32).to_le_bytes());
            out.extend_from_slice(&header);
            out.extend_from_slice(&(params.len() as u64).to_le_bytes());
            for v in params {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out
        }
    }
}

fn check_version(v: u32) -> Result<(), String> {
    if v == MODEL_VERSION {
        Ok(())
    } else {
        Err(format!("unsupported model format version {v} (this build reads {MODEL_VERSION})"))
    }
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8], String> {
    if bytes.len() < n {
        return Err("truncated model file".into());
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

pub fn decode(bytes: &[u8]) -> Result<MoodModel, String> {
    let file: ModelFile = if bytes.starts_with(MAGIC) {
        let mut rest = &bytes[MAGIC.len()..];
        let version = u32::from_le_bytes(take(&mut rest, 4)?.try_into().expect("4 bytes"));
        check_version(version)?;
        let header_len = u32::from_le_bytes(take(&mut rest, 4)?.try_into().expect("4 bytes")) as usize;
        let mut file: ModelFile =
            serde_json::from_slice(take(&mut rest, header_len)?).map_err(|e| format!("bad model header: {e}"))?;
        check_version(file.version)?;
        let n = u64::from_le_bytes(take(&mut rest, 8)?.try_into().expect("8 bytes")) as usize;
        let raw = take(&mut rest, n.checked_mul(8).ok_or("bad parameter count")?)?;
        if !rest.is_empty() {
            return Err("trailing bytes after parameters".into());
        }
        let params = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        put_params(&mut file.model, file.dims, params)?;
        file
    } else {
        let v: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| format!("bad model file: {e}"))?;
        let version = v.get("version").and_then(|x| x.as_u64()).ok_or("model file has no version")?;
        check_version(version as u32)?;
        serde_json::from_value(v).map_err(|e| format!("bad model file: {e}"))?
    };
    if file.model.model.dims() != file.dims || file.model.mood() != file.mood {
        return Err("model header disagrees with its parameters".into());
    }
    if let Model::Hybrid(h) = &file.model.model {
        h.validate().map_err(|e| e.to_string())?;
    }
    Ok(file.model)
}

pub fn save_model(path: &Path, model: &MoodModel, format: ModelFormat) -> CliResult<()> {
    let mut w = create(path)?;
    w.write_all(&encode(model, format)).in_file(path)?;
    w.flush().in_file(path)
}

pub fn load_model(path: &Path) -> CliResult<MoodModel> {
    let bytes = std::fs::read(path).in_file(path)?;
    decode(&bytes).map_err(|e| CliError::data(path, None, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use songmood_core::experiment::FeatureKind;
    use songmood_core::models::{HybridHead, LogisticModel, TrainMeta};

    fn meta() -> TrainMeta {
        TrainMeta { n_pos: 3, n_neg: 4, final_loss: 0.25, n_iters: 12, seed: 9 }
    }

    fn logistic() -> MoodModel {
        MoodModel {
            features: FeatureKind::Bow,
            model: Model::Logistic(LogisticModel {
                mood: "love".into(),
                weights: vec![0.5, -1.25, 1e-300, 3.0],
                bias: -0.1,
                l2_lambda: 1e-4,
                train_meta: meta(),
            }),
        }
    }

    fn hybrid() -> MoodModel {
        MoodModel {
            features: FeatureKind::HybridEmbed,
            model: Model::Hybrid(HybridHead {
                mood: "chill out".into(),
                embedding_dim: 2,
                acoustic_dim: 3,
                hidden_width: 2,
                w1: vec![0.1, 0.2, 0.3, -0.4, -0.5, 0.6],
                b1: vec![0.01, -0.02],
                w2: vec![1.0, -1.0, 0.5, 0.25],
                b2: 0.125,
                l2_lambda: 1e-4,
                train_meta: meta(),
            }),
        }
    }

    #[test]
    fn round_trips_both_formats() {
        for m in [logistic(), hybrid()] {
            for f in [ModelFormat::Json, ModelFormat::Binary] {
                assert_eq!(decode(&encode(&m, f)).unwrap(), m);
            }
        }
    }

    #[test]
    fn rejects_truncation_and_trailing_bytes() {
        let bytes = encode(&hybrid(), ModelFormat::Binary);
        for cut in [3, 6, 10, 20, bytes.len() - 1] {
            assert!(decode(&bytes[..cut]).is_err(), "cut at {cut}");
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode(&extra).unwrap_err().contains("trailing"));
    }

    #[test]
    fn rejects_future_versions() {
        let mut bytes = encode(&logistic(), ModelFormat::Binary);
        bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(decode(&bytes).unwrap_err().contains("version 2"));

        let json = String::from_utf8(encode(&logistic(), ModelFormat::Json)).unwrap();
        let bumped = json.replacen("\"version\": 1", "\"version\": 7", 1);
        assert!(decode(bumped.as_bytes()).unwrap_err().contains("version 7"));
    }

    #[test]
    fn rejects_wrong_parameter_count() {
        let mut bytes = encode(&logistic(), ModelFormat::Binary);
        // drop the last parameter and fix up the count
        bytes.truncate(bytes.len() - 8);
        let at = bytes.len() - 4 * 8 - 8;
        bytes[at..at + 8].copy_from_slice(&4u64.to_le_bytes());
        assert!(decode(&bytes).unwrap_err().contains("parameters"));
    }
}
