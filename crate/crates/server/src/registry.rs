use std::path::PathBuf;

use glossa_core::corpus::parse_corpus;
use glossa_core::{fixtures, AnnotatedCorpus};

use crate::error::SessionError;

/// Corpora a session may be created from: the bundled fixtures, plus
/// `<dir>/<name>.corpus` files when a directory is configured.
#[derive(Debug, Clone, Default)]
pub struct CorpusRegistry {
    dir: Option<PathBuf>,
}

impl CorpusRegistry {
    pub fn builtin() -> Self {
        CorpusRegistry { dir: None }
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        CorpusRegistry {
            dir: Some(dir.into()),
        }
    }

    pub fn load(&self, name: &str) -> Result<AnnotatedCorpus, SessionError> {
        if let Some(corpus) = fixtures::builtin(name) {
            return Ok(corpus);
        }
        let valid_name = !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        let Some(dir) = self.dir.as_ref().filter(|_| valid_name) else {
            return Err(SessionError::UnknownCorpus(name.to_string()));
        };
        let path = dir.join(format!("{name}.corpus"));
        let text = std::fs::read_to_string(&path)
            .map_err(|_| SessionError::UnknownCorpus(name.to_string()))?;
        parse_corpus(&text)
            .map_err(|e| SessionError::InvalidConfig(format!("corpus `{name}`: {e}")))
    }

    /// Every loadable name, fixtures first.
    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = fixtures::BUILTIN_NAMES
            .iter()
            .map(|s| s.to_string())
            .collect();
        if let Some(entries) = self.dir.as_ref().and_then(|d| std::fs::read_dir(d).ok()) {
            let mut extra: Vec<String> = entries
                .filter_map(|e| e.ok())
                .filter_map(|e| {
                    let path = e.path();
                    (path.extension()? == "corpus")
                        .then(|| path.file_stem()?.to_str().map(str::to_string))?
                })
                .filter(|n| !names.contains(n))
                .collect();
            extra.sort();
            names.extend(extra);
        }
        names
    }
}
