//! On-disk model store.
//!
//! A profile is a directory holding `hmms/models`, a flat index with one
//! `word<TAB>relative-path` line per model, and the model XML files it
//! points at. Lines starting with `#` are comments. The index is only ever
//! replaced by atomic rename.
//!
//! Writers must be serialized per profile directory; concurrent readers are fine.

mod xml;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::atomic::write_atomic;
use crate::hmm::{HmmError, HmmModel};

pub use xml::{ModelDocument, LOAD_STOCHASTIC_TOL};

pub const HMM_DIR: &str = "hmms";
pub const INDEX_FILE: &str = "models";
pub const DEFAULT_PROFILE: &str = "default";
pub const PROFILES_DIR: &str = "profiles";
pub const HOME_ENV: &str = "CONATION_HOME";

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("model schema: {0}")]
    Schema(String),
    #[error("invalid model: {0}")]
    Validation(String),
    #[error("invalid model: {0}")]
    Model(#[from] HmmError),
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<RegistryError>,
    },
    #[error("model index {0} not found")]
    MissingIndex(PathBuf),
    #[error("{index}:{line}: malformed index line (expected word<TAB>path)")]
    MalformedIndex { index: PathBuf, line: usize },
    #[error("duplicate word '{0}' in registry")]
    DuplicateWord(String),
    #[error("model file for '{word}' not found at {path}")]
    UnresolvablePath { word: String, path: PathBuf },
    #[error("invalid word {0:?}: must be non-empty, without tabs, newlines, path separators or leading '#'")]
    InvalidWord(String),
    #[error("invalid profile name {0:?}")]
    InvalidProfile(String),
}

pub type Result<T, E = RegistryError> = std::result::Result<T, E>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RegistryError + '_ {
    move |source| RegistryError::Io { path: path.to_path_buf(), source }
}

fn in_file(path: &Path) -> impl FnOnce(RegistryError) -> RegistryError + '_ {
    move |e| RegistryError::InFile { path: path.to_path_buf(), source: Box::new(e) }
}

/// Writes `model` as XML, atomically.
pub fn save_model(model: &HmmModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = ModelDocument::from_model(model).to_xml()?;
    write_atomic(path, text.as_bytes()).map_err(io_err(path))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<HmmModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    ModelDocument::from_xml(&text).and_then(ModelDocument::into_model).map_err(in_file(path))
}

/// Words double as file names and index keys.
pub fn validate_word(word: &str) -> Result<()> {
    let bad = word.is_empty()
        || word != word.trim()
        || word.starts_with('#')
        || word == "."
        || word == ".."
        || word.chars().any(|c| c.is_control() || c == '/' || c == '\\');
    if bad {
        return Err(RegistryError::InvalidWord(word.to_string()));
    }
    Ok(())
}

/// Resolves the profiles root: `$CONATION_HOME` if set, else `./profiles`.
pub fn profiles_root() -> PathBuf {
    std::env::var_os(HOME_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(PROFILES_DIR))
}

pub fn profile_dir(root: &Path, profile: &str) -> Result<PathBuf> {
    if validate_word(profile).is_err() || profile.contains(char::is_whitespace) {
        return Err(RegistryError::InvalidProfile(profile.to_string()));
    }
    Ok(root.join(profile))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub word: String,
    /// Relative to the `hmms` directory.
    pub path: String,
}

#[derive(Debug, Clone)]
pub struct ModelRegistry {
    root: PathBuf,
    entries: Vec<RegistryEntry>,
}

impl ModelRegistry {
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn hmm_dir(&self) -> PathBuf {
        self.root.join(HMM_DIR)
    }

    pub fn index_path(&self) -> PathBuf {
        self.hmm_dir().join(INDEX_FILE)
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.word.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.iter().any(|e| e.word == word)
    }

    pub fn model_path(&self, entry: &RegistryEntry) -> PathBuf {
        self.hmm_dir().join(&entry.path)
    }

    /// Opens the profile, creating `hmms/` and an empty index if needed.
    pub fn open_or_create(profile_root: impl AsRef<Path>) -> Result<Self> {
        let root = profile_root.as_ref();
        let dir = root.join(HMM_DIR);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let index = dir.join(INDEX_FILE);
        if !index.exists() {
            write_atomic(&index, b"").map_err(io_err(&index))?;
        }
        load_registry(root)
    }

    /// Loads every registered model in index order; each model carries its index word.
    pub fn load_models(&self) -> Result<Vec<HmmModel>> {
        self.entries.iter().map(|e| Ok(load_model(self.model_path(e))?.with_word(e.word.clone()))).collect()
    }

    /// Saves `model` as `hmms/<word>.xml` and appends it to the index.
    /// On error the index is left as it was.
    pub fn add_entry(&mut self, word: &str, model: &HmmModel) -> Result<()> {
        validate_word(word)?;
        if self.contains(word) {
            return Err(RegistryError::DuplicateWord(word.to_string()));
        }
        let rel = format!("{word}.xml");
        let model_path = self.hmm_dir().join(&rel);
        save_model(&model.clone().with_word(word), &model_path)?;

        let index = self.index_path();
        let mut text = std::fs::read_to_string(&index).map_err(io_err(&index))?;
        if !text.is_empty() && !text.ends_with('\n') {
            text.push('\n');
        }
        text.push_str(&format!("{word}\t{rel}\n"));
        write_atomic(&index, text.as_bytes()).map_err(io_err(&index))?;
        self.entries.push(RegistryEntry { word: word.to_string(), path: rel });
        Ok(())
    }
}

/// Parses `<profile_root>/hmms/models`.
pub fn load_registry(profile_root: impl AsRef<Path>) -> Result<ModelRegistry> {
    let root = profile_root.as_ref().to_path_buf();
    let index = root.join(HMM_DIR).join(INDEX_FILE);
    let text = match std::fs::read_to_string(&index) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(RegistryError::MissingIndex(index)),
        Err(e) => return Err(RegistryError::Io { path: index, source: e }),
    };
    let mut entries: Vec<RegistryEntry> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, path) =
            line.split_once('\t').ok_or_else(|| RegistryError::MalformedIndex { index: index.clone(), line: n + 1 })?;
        if word.is_empty() || path.is_empty() {
            return Err(RegistryError::MalformedIndex { index: index.clone(), line: n + 1 });
        }
        if entries.iter().any(|e| e.word == word) {
            return Err(RegistryError::DuplicateWord(word.to_string()));
        }
        let resolved = root.join(HMM_DIR).join(path);
        if !resolved.is_file() {
            return Err(RegistryError::UnresolvablePath { word: word.to_string(), path: resolved });
        }
        entries.push(RegistryEntry { word: word.to_string(), path: path.to_string() });
    }
    Ok(ModelRegistry { root, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::test_support::random_model;

    fn write_index(root: &Path, text: &str) {
        std::fs::create_dir_all(root.join(HMM_DIR)).unwrap();
        std::fs::write(root.join(HMM_DIR).join(INDEX_FILE), text).unwrap();
    }

    #[test]
    fn parses_index_lines() {
        let dir = tempfile::tempdir().unwrap();
        let m = random_model(1, 2, 2);
        std::fs::create_dir_all(dir.path().join(HMM_DIR)).unwrap();
        for w in ["word", "excel"] {
            save_model(&m, dir.path().join(HMM_DIR).join(format!("{w}.xml"))).unwrap();
        }
        write_index(dir.path(), "# vocabulary\nword\tword.xml\n\nexcel\texcel.xml\n");
        let reg = load_registry(dir.path()).unwrap();
        assert_eq!(reg.words().collect::<Vec<_>>(), vec!["word", "excel"]);
        let models = reg.load_models().unwrap();
        assert_eq!(models[1].word(), "excel");
    }

    #[test]
    fn empty_index_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        write_index(dir.path(), "");
        assert!(load_registry(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn duplicate_words_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut reg = ModelRegistry::open_or_create(dir.path()).unwrap();
        reg.add_entry("save", &random_model(1, 2, 2)).unwrap();
        write_index(dir.path(), "save\tsave.xml\nsave\tsave.xml\n");
        assert!(matches!(load_registry(dir.path()), Err(RegistryError::DuplicateWord(w)) if w == "save"));
    }

    #[test]
    fn missing_index_and_unresolvable_path() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_registry(dir.path()), Err(RegistryError::MissingIndex(_))));
        write_index(dir.path(), "ghost\tghost.xml\n");
        assert!(matches!(load_registry(dir.path()), Err(RegistryError::UnresolvablePath { .. })));
        write_index(dir.path(), "no tab here\n");
        assert!(matches!(load_registry(dir.path()), Err(RegistryError::MalformedIndex { line: 1, .. })));
    }

    #[test]
    fn add_entry_writes_model_and_index() {
        let dir = tempfile::tempdir().unwrap();
        let mut reg = ModelRegistry::open_or_create(dir.path()).unwrap();
        reg.add_entry("activate", &random_model(4, 2, 3)).unwrap();
        assert!(dir.path().join("hmms/activate.xml").is_file());
        let index = std::fs::read_to_string(dir.path().join("hmms/models")).unwrap();
        assert_eq!(index, "activate\tactivate.xml\n");

        let before = index.clone();
        assert!(matches!(reg.add_entry("activate", &random_model(5, 2, 3)), Err(RegistryError::DuplicateWord(_))));
        assert_eq!(std::fs::read_to_string(dir.path().join("hmms/models")).unwrap(), before);
        assert_eq!(reg.len(), 1);
    }

    #[test]
    fn invalid_words() {
        for w in ["", "a/b", "tab\there", "#x", "..", " pad"] {
            assert!(validate_word(w).is_err(), "{w:?}");
        }
        for w in ["Shut down", "EnterTheNumericState", "ok"] {
            assert!(validate_word(w).is_ok(), "{w:?}");
        }
        let dir = tempfile::tempdir().unwrap();
        let mut reg = ModelRegistry::open_or_create(dir.path()).unwrap();
        assert!(matches!(reg.add_entry("../evil", &random_model(1, 1, 1)), Err(RegistryError::InvalidWord(_))));
    }

    #[test]
    fn load_model_names_the_file_on_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("broken.xml");
        std::fs::write(&p, "<hmm").unwrap();
        let err = load_model(&p).unwrap_err();
        assert!(err.to_string().contains("broken.xml"));
    }

    #[test]
    fn profiles() {
        let root = Path::new("/tmp/x");
        assert_eq!(profile_dir(root, "alice").unwrap(), root.join("alice"));
        assert!(profile_dir(root, "../bob").is_err());
        assert!(profile_dir(root, "").is_err());
    }
}
