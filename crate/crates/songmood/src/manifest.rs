//! Run manifests. They hold no timestamps or absolute output locations, so
//! two runs with the same inputs, config and seed write identical manifests.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{Config, PATH_KEYS};
use crate::error::{CliResult, Context};
use crate::formats::write_json;

/// Keys that do not affect any output byte.
const UNHASHED: &[&str] = &["out", "threads"];

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).in_file(path)?;
    Ok(sha256_hex(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Path as recorded: relative to the output directory when inside it.
pub fn display_path(cfg: &Config, p: &Path) -> String {
    match p.strip_prefix(&cfg.out) {
        Ok(rel) => format!("<out>/{}", slash(rel)),
        Err(_) => slash(p),
    }
}

/// Inputs outside the output directory are named by file name only.
pub fn input_label(cfg: &Config, p: &Path) -> String {
    if p.starts_with(&cfg.out) {
        display_path(cfg, p)
    } else {
        p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| slash(p))
    }
}

fn slash(p: &Path) -> String {
    p.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

fn recorded_value(cfg: &Config, key: &str, value: &str) -> String {
    if PATH_KEYS.contains(&key) && !value.is_empty() {
        display_path(cfg, Path::new(value))
    } else {
        value.to_string()
    }
}

/// SHA-256 over the sorted `key=value` lines of every output-affecting key.
pub fn config_hash(cfg: &Config) -> String {
    let mut text = String::new();
    for (k, (v, _)) in &cfg.raw.values {
        if UNHASHED.contains(&k.as_str()) {
            continue;
        }
        text.push_str(k);
        text.push('=');
        text.push_str(&recorded_value(cfg, k, v));
        text.push('\n');
    }
    sha256_hex(text.as_bytes())
}

pub struct Manifest<'a> {
    pub command: &'a str,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub extra: Map<String, Value>,
}

impl Manifest<'_> {
    pub fn to_json(&self, cfg: &Config) -> CliResult<Value> {
        let mut config = Map::new();
        for (k, (v, origin)) in &cfg.raw.values {
            if UNHASHED.contains(&k.as_str()) {
                continue;
            }
            config.insert(k.clone(), json!({"value": recorded_value(cfg, k, v), "source": origin.as_str()}));
        }
        let mut inputs = Map::new();
        for p in &self.inputs {
            inputs.insert(input_label(cfg, p), Value::String(sha256_file(p)?));
        }
        let mut outputs = Map::new();
        for p in &self.outputs {
            outputs.insert(display_path(cfg, p), Value::String(sha256_file(p)?));
        }
        Ok(json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "format_versions": {
                "counts": crate::formats::counts::COUNTS_VERSION,
                "model": crate::formats::model::MODEL_VERSION,
            },
            "command": self.command,
            "seed": cfg.seed,
            "config_hash": config_hash(cfg),
            "config": config,
            "inputs": inputs,
            "outputs": outputs,
            "details": self.extra,
        }))
    }

    pub fn write(&self, cfg: &Config, path: &Path) -> CliResult<()> {
        write_json(path, &self.to_json(cfg)?)
    }
}
