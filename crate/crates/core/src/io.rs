//! File plumbing shared by the command-line front end: atomic writes, run
//! manifests and single-column readers.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes through a temporary file in the target directory and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    // temporaries are created owner-only; outputs are ordinary files
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// `dir/stem.csv` -> `dir/stem.<suffix>`.
pub fn sidecar_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Everything needed to rerun a command: its arguments, the resolved
/// configuration, and the files it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub config: RunConfig,
    pub params: serde_json::Value,
    pub outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &str, argv: &[String], config: &RunConfig, params: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: VERSION.to_string(),
            command: command.to_string(),
            argv: argv.to_vec(),
            config: config.clone(),
            params,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, serde_json::to_string_pretty(self)?.as_bytes())
    }
}

fn first_record_is_header(path: &Path) -> Result<bool> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    Ok(match reader.records().next() {
        Some(first) => first?.iter().any(|f| f.parse::<f64>().is_err()),
        None => false,
    })
}

/// Reads a dataset CSV, treating a first row with any non-numeric field as a header.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    Dataset::read_csv(path, first_record_is_header(path)?)
}

/// One numeric column: `column` by header name, or the first column.
pub fn read_column(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let has_header = first_record_is_header(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let index = match column {
        None => 0,
        Some(name) => {
            if !has_header {
                return Err(Error::invalid("column", format!("`{name}` requested but the file has no header")));
            }
            reader
                .headers()?
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::invalid("column", format!("no column `{name}` in {}", path.display())))?
        }
    };
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = row + 1 + usize::from(has_header);
        let field = record.get(index).unwrap_or("");
        out.push(field.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("not a number: {field:?}"),
        })?);
    }
    Ok(out)
}

pub fn column_csv(name: &str, values: &[f64]) -> String {
    let mut out = format!("{name}\n");
    for v in values {
        out.push_str(&format!("{v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/data.csv");
        write_atomic(&path, b"x0\n1\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "x0\n1\n");
        write_atomic(&path, b"x0\n2\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "x0\n2\n");
        assert_eq!(sidecar_path(&path, "manifest.json"), dir.path().join("sub/data.manifest.json"));
        // only the target remains, no stray temporaries
        assert_eq!(std::fs::read_dir(dir.path().join("sub")).unwrap().count(), 1);
    }

    #[test]
    fn readers_detect_headers() {
        let dir = tempfile::tempdir().unwrap();
        let with = dir.path().join("with.csv");
        let without = dir.path().join("without.csv");
        std::fs::write(&with, "x0,x1\n1,2\n3,4\n").unwrap();
        std::fs::write(&without, "1,2\n3,4\n").unwrap();
        assert_eq!(read_dataset(&with).unwrap().as_flat(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(read_dataset(&without).unwrap().as_flat(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(read_column(&with, Some("x1")).unwrap(), vec![2.0, 4.0]);
        assert_eq!(read_column(&without, None).unwrap(), vec![1.0, 3.0]);
        assert!(read_column(&without, Some("x1")).is_err());
        std::fs::write(&with, "score\n1\nx\n").unwrap();
        assert!(matches!(read_column(&with, None), Err(Error::Parse { line: 3, .. })));
    }
}
