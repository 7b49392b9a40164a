//! Tables, JSON documents and the run manifest.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        // Keep the sign of -0.0 out of tables.
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

/// Collects output files under one directory.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Comma-separated table with a header row.
    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    /// Writes `manifest.json` listing everything written so far.
    pub fn finish(mut self, command: &str, config_hash: String) -> io::Result<PathBuf> {
        let manifest = RunManifest {
            command: command.to_string(),
            config_hash,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            outputs: self.written.iter().map(|p| p.display().to_string()).collect(),
        };
        let path = self.dir.join("manifest.json");
        self.json("manifest.json", &manifest)?;
        Ok(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub tool_version: String,
    pub timestamp: String,
    pub outputs: Vec<String>,
}

/// SHA-256 over the configuration text and the arguments that affect results.
pub fn config_hash(config_text: &str, args: &[String]) -> String {
    let mut h = Sha256::new();
    h.update(config_text.as_bytes());
    for a in args {
        h.update([0u8]);
        h.update(a.as_bytes());
    }
    format!("{:x}", h.finalize())
}

/// Drops `--out` and `--threads` (and their values), which do not change results.
pub fn result_args(raw: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in raw.iter().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" || a == "--threads" {
            skip = true;
            continue;
        }
        if a.starts_with("--out=") || a.starts_with("--threads=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(-0.0), num(0.0));
    }

    #[test]
    fn hash_ignores_output_location() {
        let a: Vec<String> = ["slspectra", "eig", "--out", "x", "--tau", "sqrt"].iter().map(|s| s.to_string()).collect();
        let b: Vec<String> = ["slspectra", "eig", "--tau", "sqrt", "--out=y", "--threads", "2"].iter().map(|s| s.to_string()).collect();
        assert_eq!(result_args(&a), result_args(&b));
        assert_eq!(config_hash("", &result_args(&a)), config_hash("", &result_args(&b)));
        assert_ne!(config_hash("a", &result_args(&a)), config_hash("b", &result_args(&a)));
    }
}
