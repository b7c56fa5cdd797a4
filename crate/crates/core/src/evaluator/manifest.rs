use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{EvalError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub word: String,
    pub user: String,
    pub known: bool,
    /// Hours this user spent training the system, when reported.
    pub hours: Option<f64>,
}

/// Labelled test utterances, read from CSV with header `path,word,user,known`
/// and an optional `hours` column. Relative paths resolve against the
/// manifest's own directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TestManifest {
    pub entries: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
struct Row {
    path: String,
    word: String,
    user: String,
    known: String,
    #[serde(default)]
    hours: Option<String>,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "y" | "1" | "known" => Some(true),
        "false" | "no" | "n" | "0" | "unknown" => Some(false),
        _ => None,
    }
}

impl TestManifest {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| EvalError::Manifest(format!("row {line}: {e}")))?;
            if row.word.is_empty() {
                return Err(EvalError::Manifest(format!("row {line}: empty word")));
            }
            if row.path.is_empty() {
                return Err(EvalError::Manifest(format!("row {line}: empty path")));
            }
            let known = parse_bool(&row.known).ok_or_else(|| {
                EvalError::Manifest(format!("row {line}: 'known' must be true or false, got '{}'", row.known))
            })?;
            let hours = match row.hours.as_deref().map(str::trim) {
                None | Some("") => None,
                Some(h) => Some(
                    h.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite() && *v >= 0.0)
                        .ok_or_else(|| EvalError::Manifest(format!("row {line}: bad hours '{h}'")))?,
                ),
            };
            let path = PathBuf::from(&row.path);
            let path = if path.is_absolute() { path } else { base_dir.join(path) };
            entries.push(ManifestEntry { path, word: row.word, user: row.user, known, hours });
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|source| EvalError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
