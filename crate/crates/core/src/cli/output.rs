//! Artifact writers. Every file carries the library version and the config
//! hash, and is written to a temporary file that is renamed into place.

use crate::error::{Error, Result};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Destination directory plus the provenance stamped on every artifact.
#[derive(Debug, Clone)]
pub struct ArtifactSink {
    pub dir: PathBuf,
    pub config_hash: String,
    pub command: String,
    written: Vec<PathBuf>,
}

impl ArtifactSink {
    pub fn new(dir: &Path, config_hash: String, command: &str) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), config_hash, command: command.to_string(), written: Vec::new() })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn header_lines(&self) -> Vec<String> {
        vec![
            format!("pwt-core {VERSION}"),
            format!("config-sha256 {}", self.config_hash),
            format!("command {}", self.command),
        ]
    }

    /// Write bytes atomically (temporary file in the same directory, then rename).
    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| Error::Io(e.to_string()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// CSV with `#` metadata lines, a header row and one row per record.
    pub fn write_csv(&mut self, name: &str, meta: &[(String, String)], header: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf> {
        let mut out = Vec::new();
        for line in self.header_lines() {
            writeln!(out, "# {line}")?;
        }
        for (k, v) in meta {
            writeln!(out, "# {k} {v}")?;
        }
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
            for r in rows {
                w.write_record(r.iter().map(|v| v.to_string())).map_err(|e| Error::Io(e.to_string()))?;
            }
            w.flush()?;
        }
        self.write_bytes(name, &out)
    }

    /// JSON document {"meta": {...}, "result": ...}.
    pub fn write_json<T: Serialize>(&mut self, name: &str, result: &T) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            meta: Meta<'a>,
            result: &'a T,
        }
        #[derive(Serialize)]
        struct Meta<'a> {
            version: &'a str,
            config_sha256: &'a str,
            command: &'a str,
        }
        let doc = Doc { meta: Meta { version: VERSION, config_sha256: &self.config_hash, command: &self.command }, result };
        let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// SVG document with the provenance as a leading XML comment.
    pub fn write_svg(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let comment = format!("<!-- {} -->\n", self.header_lines().join("; "));
        let text = match body.find('\n') {
            Some(i) if body.starts_with("<?xml") => format!("{}{}{}", &body[..=i], comment, &body[i + 1..]),
            _ => format!("{comment}{body}"),
        };
        self.write_bytes(name, text.as_bytes())
    }
}

/// Two-column (n, E) target spectrum with `#` comments and a header row.
pub fn read_spectrum_csv(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        if rec.len() < 2 {
            return Err(Error::Input(format!("{}: row {} needs columns n, E", path.display(), i + 1)));
        }
        let n: usize = rec[0].parse().map_err(|_| Error::Input(format!("{}: bad index {:?} in row {}", path.display(), &rec[0], i + 1)))?;
        let e: f64 = rec[1].parse().map_err(|_| Error::Input(format!("{}: bad energy {:?} in row {}", path.display(), &rec[1], i + 1)))?;
        pairs.push((n, e));
    }
    pairs.sort_by_key(|p| p.0);
    if pairs.iter().enumerate().any(|(i, p)| p.0 != i) {
        return Err(Error::Input(format!("{}: indices must be 0, 1, 2, ... without gaps", path.display())));
    }
    Ok(pairs.into_iter().map(|p| p.1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_and_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ArtifactSink::new(dir.path(), "abc".into(), "spectrum").unwrap();
        let p = s.write_csv("t.csv", &[("note".into(), "x".into())], &["n", "E"], &[vec![0.0, 0.0], vec![1.0, 3.5]]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# pwt-core "));
        assert!(text.contains("# config-sha256 abc\n"));
        assert_eq!(read_spectrum_csv(&p).unwrap(), vec![0.0, 3.5]);
        assert_eq!(s.written().len(), 1);
        let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn malformed_spectrum_is_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "n,E\n0,0\n1,abc\n").unwrap();
        assert!(matches!(read_spectrum_csv(&p), Err(Error::Input(_))));
        std::fs::write(&p, "n,E\n0,0\n2,1\n").unwrap();
        assert!(matches!(read_spectrum_csv(&p), Err(Error::Input(_))));
    }
}
