//! CSV tables, atomic file writes and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// A CSV table whose shape is checked before it is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest round-trip representation; identical values give identical bytes.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        // fold -0 into 0
        "0".into()
    } else {
        format!("{v}")
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Every row has one cell per column and no cell needs quoting.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.columns.is_empty() {
            return Err(CliError::Schema("table has no columns".into()));
        }
        let bad = |c: &str| c.contains([',', '\n', '"']);
        if let Some(c) = self.columns.iter().find(|c| c.is_empty() || bad(c)) {
            return Err(CliError::Schema(format!("bad column name '{c}'")));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(CliError::Schema(format!(
                    "row {i} has {} cells, schema has {}",
                    row.len(),
                    self.columns.len()
                )));
            }
            if let Some(c) = row.iter().find(|c| bad(c)) {
                return Err(CliError::Schema(format!("row {i} cell '{c}' needs quoting")));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses text produced by [`Table::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, CliError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| CliError::Schema("empty CSV".into()))?;
        let table = Self {
            columns: header.split(',').map(str::to_string).collect(),
            rows: lines.map(|l| l.split(',').map(str::to_string).collect()).collect(),
        };
        table.validate()?;
        Ok(table)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric column values (cells that fail to parse become NaN).
    pub fn floats(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.column(name) else {
            return Vec::new();
        };
        self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect()
    }

    /// Rows whose `key` column equals `value`.
    pub fn filter(&self, key: &str, value: &str) -> Table {
        let i = self.column(key);
        Table {
            columns: self.columns.clone(),
            rows: self
                .rows
                .iter()
                .filter(|r| i.is_some_and(|i| r[i] == value))
                .cloned()
                .collect(),
        }
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so an interrupted run never leaves a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::Io(e.to_string()))?;
    tmp.write_all(bytes).map_err(|e| CliError::Io(e.to_string()))?;
    tmp.as_file().sync_all().map_err(|e| CliError::Io(e.to_string()))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn write_table(path: &Path, table: &Table) -> Result<(), CliError> {
    table.validate()?;
    write_atomic(path, table.to_csv().as_bytes())
}

/// Provenance record written next to every CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// SHA-256 of the config bytes, or of the built-in description.
    pub config_hash: String,
    pub master_seed: u64,
    pub outputs: Vec<String>,
    pub trials: Option<usize>,
    pub wall_clock_secs: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    /// `<csv path>.manifest.json`.
    pub fn path_for(csv: &Path) -> PathBuf {
        let mut name = csv.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        csv.with_file_name(name)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        write_atomic(path, json.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| CliError::Io(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_checks() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        assert!(t.validate().is_ok());
        t.push(vec!["1".into()]);
        assert!(t.validate().is_err());
        let mut q = Table::new(&["a"]);
        q.push(vec!["x,y".into()]);
        assert!(q.validate().is_err());
    }

    #[test]
    fn csv_round_trip_and_numbers() {
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![num(0.1), num(-0.0)]);
        let back = Table::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.floats("x"), vec![0.1]);
        assert_eq!(num(1e-300).parse::<f64>().unwrap(), 1e-300);
    }

    #[test]
    fn atomic_write_and_manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("sub").join("out.csv");
        let mut t = Table::new(&["v"]);
        t.push(vec![num(2.5)]);
        write_table(&csv, &t).unwrap();
        assert_eq!(std::fs::read_to_string(&csv).unwrap(), "v\n2.5\n");
        let m = RunManifest {
            tool_version: "0".into(),
            command: "test".into(),
            config_hash: sha256_hex(b"abc"),
            master_seed: 7,
            outputs: vec![csv.display().to_string()],
            trials: Some(100),
            wall_clock_secs: 0.5,
        };
        let mp = RunManifest::path_for(&csv);
        assert!(mp.to_string_lossy().ends_with("out.csv.manifest.json"));
        m.write(&mp).unwrap();
        assert_eq!(RunManifest::read(&mp).unwrap(), m);
        // only the two artifacts remain; no stray temp files
        assert_eq!(std::fs::read_dir(csv.parent().unwrap()).unwrap().count(), 2);
    }

    #[test]
    fn sha_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
