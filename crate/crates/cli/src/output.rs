//! CSV and JSON artifacts with a reproducibility header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub n: usize,
    pub truncation: u32,
    pub workers: usize,
}

impl Metadata {
    pub fn new(command: &str, config_text: &str, seed: u64, n: usize, truncation: u32, workers: usize) -> Self {
        Metadata {
            tool: "gdms".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256: hex::encode(Sha256::digest(config_text.as_bytes())),
            seed,
            n,
            truncation,
            workers,
        }
    }
}

/// 17 significant digits, `inf`/`-inf`/`nan` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub struct Artifacts {
    dir: PathBuf,
    meta: Metadata,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, meta: Metadata) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), meta, written: Vec::new() })
    }

    pub fn metadata(&self) -> &Metadata {
        &self.meta
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        let mut out = BufWriter::new(File::create(&path)?);
        let m = &self.meta;
        writeln!(out, "# tool={} version={} command={}", m.tool, m.version, m.command)?;
        writeln!(out, "# config_sha256={}", m.config_sha256)?;
        writeln!(out, "# seed={} n={} truncation={} workers={}", m.seed, m.n, m.truncation, m.workers)?;
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        out.flush()?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        let doc = serde_json::json!({ "metadata": self.meta, "result": value });
        let mut out = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut out, &doc)?;
        writeln!(out)?;
        out.flush()?;
        self.written.push(path.clone());
        Ok(path)
    }
}

/// Lines of a CSV artifact without the `#` header.
pub fn csv_body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

pub fn indexed(prefix: &str, d: usize) -> Vec<String> {
    if d == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=d).map(|i| format!("{prefix}{i}")).collect()
    }
}
