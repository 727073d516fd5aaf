//! Config-file merging. A config file is a TOML table keyed by flag names
//! (underscores instead of dashes), optionally nested under a section named
//! after the subcommand. Flags given on the command line win.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const RUN_CONFIG_FILE: &str = "run_config.toml";

/// Overlays the flags in `flags` (unset options are skipped) on the
/// matching table of `config`.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>, section: &str) -> Result<T> {
    let Some(path) = config else {
        return Ok(toml::from_str(&toml::to_string(flags)?)?);
    };
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let mut table: toml::Table = text.parse().with_context(|| format!("{}: not valid TOML", path.display()))?;
    if let Some(toml::Value::Table(sec)) = table.remove(section) {
        table = sec;
    }
    let overrides: toml::Table = toml::from_str(&toml::to_string(flags)?)?;
    table.extend(overrides);
    T::deserialize(toml::Value::Table(table)).with_context(|| format!("{}: bad config for `{section}`", path.display()))
}

/// Writes the fully resolved options next to the outputs.
pub fn write_provenance<T: Serialize>(resolved: &T, dir: &Path, section: &str) -> Result<()> {
    let mut root = toml::Table::new();
    root.insert(section.to_string(), toml::Value::try_from(resolved)?);
    let path = dir.join(RUN_CONFIG_FILE);
    fs::write(&path, toml::to_string(&root)?).with_context(|| format!("cannot write {}", path.display()))
}
