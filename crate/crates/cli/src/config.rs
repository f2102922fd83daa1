//! Project settings from an optional TOML file. Command-line flags override
//! every key.

use std::path::{Path, PathBuf};

use glossa_core::grammar::LexiconMode;
use glossa_core::materials::Visibility;
use glossa_core::{BoundaryPolicy, MaskMode};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    /// A corpus file or `builtin:<name>`.
    pub corpus: Option<String>,
    pub seed: Option<u64>,
    pub mask_mode: Option<MaskMode>,
    /// Phonotactic profile as JSON or TOML.
    pub profile: Option<PathBuf>,
    pub policy: Option<BoundaryPolicy>,
    pub lexicon_mode: Option<LexiconMode>,
    pub out: Option<PathBuf>,
    pub bind: Option<String>,
    pub data_dir: Option<PathBuf>,
    pub corpus_dir: Option<PathBuf>,
    pub materials: MaterialsConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialsConfig {
    pub sentences_per_page: Option<usize>,
    pub visibility: Option<Visibility>,
    pub page_size: Option<String>,
}

impl ProjectConfig {
    /// Reads `path`; relative paths inside are taken from the file's
    /// directory and must exist, except output locations.
    pub fn load(path: &Path) -> Result<ProjectConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: ProjectConfig = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let anchor = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(c) = config
            .corpus
            .as_mut()
            .filter(|c| !c.starts_with("builtin:"))
        {
            let mut p = PathBuf::from(&*c);
            anchor(&mut p);
            *c = p.to_string_lossy().into_owned();
        }
        for p in [
            config.profile.as_mut(),
            config.out.as_mut(),
            config.data_dir.as_mut(),
            config.corpus_dir.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            anchor(p);
        }
        let must_exist = [
            config
                .corpus
                .as_ref()
                .filter(|c| !c.starts_with("builtin:"))
                .map(PathBuf::from),
            config.profile.clone(),
            config.corpus_dir.clone(),
        ];
        for p in must_exist.into_iter().flatten() {
            if !p.exists() {
                return Err(CliError::Usage(format!(
                    "config {}: {} does not exist",
                    path.display(),
                    p.display()
                )));
            }
        }
        Ok(config)
    }
}
