//! Report emission: run metadata with input content hashes, and small CSV
//! helpers (UTF-8, LF line endings, header row).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Metadata written next to every command's outputs: the configuration echo,
/// the master seed and a content hash covering the canonical config plus any
/// input files. Reruns with identical inputs produce identical bytes.
#[derive(Serialize)]
struct Meta<'a, C: Serialize> {
    command: &'a str,
    config: &'a C,
    seed: u64,
    input_hash: String,
}

/// Sha256 hex over the canonical config JSON and the raw bytes of each input
/// file, in order.
pub fn input_hash<C: Serialize>(config: &C, input_files: &[&Path]) -> Result<String> {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(config)?);
    for path in input_files {
        let bytes = fs::read(path).with_context(|| format!("reading input {}", path.display()))?;
        hasher.update(&bytes);
    }
    Ok(hex_string(&hasher.finalize()))
}

fn hex_string(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        write!(out, "{b:02x}").expect("write to string");
    }
    out
}

/// Writes `<dir>/meta.json`.
pub fn write_meta<C: Serialize>(
    dir: &Path,
    command: &str,
    config: &C,
    seed: u64,
    input_files: &[&Path],
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let meta = Meta {
        command,
        config,
        seed,
        input_hash: input_hash(config, input_files)?,
    };
    let path = dir.join("meta.json");
    fs::write(&path, format!("{}\n", serde_json::to_string_pretty(&meta)?))?;
    Ok(path)
}

/// Minimal CSV accumulator; all values are formatted with `Display`, which
/// for floats is the shortest round-trip representation.
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        Csv {
            buf,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "row width mismatch");
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn write(self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, self.buf)?;
        Ok(())
    }
}

/// Formats a float with full round-trip precision.
pub fn num(v: f64) -> String {
    format!("{v}")
}
