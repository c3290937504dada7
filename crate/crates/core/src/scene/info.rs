//! Static per-pollutant information registry.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pollutant::Pollutant;

pub const REGISTRY_FORMAT: &str = "airq-pollutants/1";

const BUNDLED: &str = include_str!("../../data/pollutants.toml");

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read pollutant registry: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed pollutant registry: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid pollutant registry: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all(serialize = "camelCase"))]
pub struct PollutantInfo {
    #[serde(rename(deserialize = "code"))]
    pub pollutant: Pollutant,
    pub display_name: String,
    pub molecular_structure: String,
    pub description: String,
    pub health_effects: Vec<String>,
    pub controllable_sources: Vec<String>,
    #[serde(rename(serialize = "colorCode"))]
    pub color: String,
}

#[derive(Deserialize)]
struct RegistryFile {
    format: String,
    pollutant: Vec<PollutantInfo>,
}

/// Exactly one [`PollutantInfo`] per [`Pollutant`].
#[derive(Debug, Clone, PartialEq)]
pub struct PollutantRegistry {
    entries: BTreeMap<Pollutant, PollutantInfo>,
}

fn is_hex_color(s: &str) -> bool {
    s.len() == 7 && s.starts_with('#') && s[1..].chars().all(|c| c.is_ascii_hexdigit())
}

impl PollutantRegistry {
    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED).expect("bundled pollutant registry is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RegistryError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn from_toml_str(s: &str) -> Result<Self, RegistryError> {
        let file: RegistryFile = toml::from_str(s)?;
        if file.format != REGISTRY_FORMAT {
            return Err(RegistryError::Invalid(format!("unsupported format `{}`", file.format)));
        }
        let mut entries = BTreeMap::new();
        for info in file.pollutant {
            if !is_hex_color(&info.color) {
                return Err(RegistryError::Invalid(format!(
                    "{}: bad color `{}`",
                    info.pollutant, info.color
                )));
            }
            if let Some(prev) = entries.insert(info.pollutant, info) {
                return Err(RegistryError::Invalid(format!("{} listed twice", prev.pollutant)));
            }
        }
        if let Some(p) = Pollutant::ALL.iter().find(|p| !entries.contains_key(p)) {
            return Err(RegistryError::Invalid(format!("{p} is missing")));
        }
        Ok(PollutantRegistry { entries })
    }

    pub fn get(&self, pollutant: Pollutant) -> &PollutantInfo {
        &self.entries[&pollutant]
    }

    /// Entries in enumeration order.
    pub fn all(&self) -> impl Iterator<Item = &PollutantInfo> {
        self.entries.values()
    }
}
