//! Corpus manifest.
//!
//! ```toml
//! cache_dir = "cache"
//!
//! [[objects]]
//! name = "mug"
//! mesh = "meshes/mug.obj"
//! mass = 0.12
//! ```
//!
//! Relative paths are resolved against the manifest's directory.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub cache_dir: PathBuf,
    #[serde(default)]
    pub objects: Vec<ObjectEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectEntry {
    pub name: String,
    pub mesh: PathBuf,
    /// Mass in kg. Recorded only; the center of mass is geometric.
    pub mass: Option<f64>,
}

impl CorpusManifest {
    /// Reads and validates a manifest, resolving its paths.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Invocation(format!("{}: {e}", path.display())))?;
        let mut manifest: Self = toml::from_str(&text)
            .map_err(|e| CliError::Invocation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        manifest.cache_dir = base.join(&manifest.cache_dir);
        for object in &mut manifest.objects {
            object.mesh = base.join(&object.mesh);
        }
        manifest.validate()?;
        Ok(manifest)
    }

    fn validate(&self) -> Result<(), CliError> {
        let mut names = BTreeSet::new();
        for object in &self.objects {
            let name = &object.name;
            let valid = !name.is_empty()
                && name != "."
                && name != ".."
                && name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
            if !valid {
                return Err(CliError::Invocation(format!(
                    "object name {name:?} must be non-empty ASCII letters, digits, '-', '_' or '.'"
                )));
            }
            if !names.insert(name.as_str()) {
                return Err(CliError::Invocation(format!(
                    "duplicate object name {name:?}"
                )));
            }
            if let Some(mass) = object.mass {
                if !(mass > 0.0 && mass.is_finite()) {
                    return Err(CliError::Invocation(format!(
                        "object {name:?}: mass must be positive"
                    )));
                }
            }
        }
        Ok(())
    }
}
