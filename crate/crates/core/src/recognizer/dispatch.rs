use std::collections::HashMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const UNMAPPED_ACTION: &str = "unmapped";

/// The 30-word command vocabulary with default action strings.
pub const COMMAND_VOCABULARY: [(&str, &str); 30] = [
    ("Activate", "mode:activate"),
    ("Deactivate", "mode:deactivate"),
    ("Welcome", "greet:welcome"),
    ("Word", "launch:word-processor"),
    ("Excel", "launch:spreadsheet"),
    ("Save", "file:save"),
    ("Close", "window:close"),
    ("Notepad", "launch:notepad"),
    ("Menu", "menu:open"),
    ("Exit", "app:exit"),
    ("Escape", "key:escape"),
    ("Left", "key:left"),
    ("Right", "key:right"),
    ("Up", "key:up"),
    ("Down", "key:down"),
    ("EnterTheNumericState", "mode:numeric-enter"),
    ("ExitTheNumericState", "mode:numeric-exit"),
    ("EnterAlphabeticState", "mode:alphabetic-enter"),
    ("ExitTheAlphabeticState", "mode:alphabetic-exit"),
    ("Plus", "key:plus"),
    ("Multiply", "key:multiply"),
    ("Divide", "key:divide"),
    ("Minus", "key:minus"),
    ("Star", "key:star"),
    ("Shut down", "system:shutdown"),
    ("PenDriveFormat", "system:format-removable-drive"),
    ("Scanning", "system:scan"),
    ("Ok", "dialog:ok"),
    ("Enter", "key:enter"),
    ("Run", "system:run"),
];

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected word<TAB>action")]
    Malformed { line: usize },
    #[error("line {line}: duplicate word '{word}'")]
    Duplicate { line: usize, word: String },
}

/// Word to action-string map. Lookups ignore ASCII case so models
/// registered as `save` match the `Save` entry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DispatchMap {
    actions: HashMap<String, String>,
}

impl DispatchMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_default_vocabulary() -> Self {
        let mut map = Self::new();
        for (w, a) in COMMAND_VOCABULARY {
            map.insert(w, a);
        }
        map
    }

    pub fn insert(&mut self, word: &str, action: &str) -> Option<String> {
        self.actions.insert(word.to_ascii_lowercase(), action.to_string())
    }

    pub fn get(&self, word: &str) -> Option<&str> {
        self.actions.get(&word.to_ascii_lowercase()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Parses `word<TAB>action` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, DispatchError> {
        let mut map = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, action) = line.split_once('\t').ok_or(DispatchError::Malformed { line: i + 1 })?;
            let (word, action) = (word.trim(), action.trim());
            if word.is_empty() || action.is_empty() {
                return Err(DispatchError::Malformed { line: i + 1 });
            }
            if map.insert(word, action).is_some() {
                return Err(DispatchError::Duplicate { line: i + 1, word: word.to_string() });
            }
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DispatchError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|source| DispatchError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Renders the default vocabulary in `dispatch.conf` syntax.
    pub fn default_config_text() -> String {
        let mut out = String::from("# word<TAB>action\n");
        for (w, a) in COMMAND_VOCABULARY {
            out.push_str(w);
            out.push('\t');
            out.push_str(a);
            out.push('\n');
        }
        out
    }
}
