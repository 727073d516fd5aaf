//! Dataset manifest: a TOML document listing instances, their input views,
//! rendered images and per-kind uncertainty-map files.
//!
//! Relative paths are resolved against the directory holding the manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Viewpoint, ANCHOR_N_SIDE};
use crate::umap::UncertaintyKind;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub anchor_n_side: u32,
    pub render_resolution: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub kinds: Vec<UncertaintyKind>,
    #[serde(default)]
    pub instances: Vec<InstanceRecord>,
    #[serde(default)]
    pub skipped: Vec<SkippedInstance>,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance_id: String,
    pub mesh_path: String,
    #[serde(default)]
    pub view_records: Vec<ViewRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewRecord {
    pub viewpoint: Viewpoint,
    pub image_path: String,
    /// Keyed by the kind's lowercase name.
    #[serde(default)]
    pub umap_paths: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedInstance {
    pub instance_id: String,
    pub reason: String,
}

/// Whether [`load_manifest`] verifies that referenced files exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathCheck {
    Verify,
    Defer,
}

impl ViewRecord {
    pub fn umap_path(&self, kind: UncertaintyKind) -> Option<&str> {
        self.umap_paths.get(kind.as_str()).map(String::as_str)
    }
}

impl DatasetManifest {
    pub fn new(render_resolution: usize, seed: u64, kinds: Vec<UncertaintyKind>) -> Self {
        DatasetManifest {
            format_version: MANIFEST_VERSION,
            anchor_n_side: ANCHOR_N_SIDE,
            render_resolution,
            seed,
            kinds,
            instances: Vec::new(),
            skipped: Vec::new(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn set_base_dir(&mut self, dir: impl Into<PathBuf>) {
        self.base_dir = dir.into();
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        let path = Path::new(p);
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn view_records(&self) -> impl Iterator<Item = (&InstanceRecord, &ViewRecord)> {
        self.instances
            .iter()
            .flat_map(|inst| inst.view_records.iter().map(move |v| (inst, v)))
    }

    pub fn referenced_paths(&self) -> Vec<PathBuf> {
        let mut out = Vec::new();
        for inst in &self.instances {
            out.push(self.resolve(&inst.mesh_path));
            for v in &inst.view_records {
                out.push(self.resolve(&v.image_path));
                out.extend(v.umap_paths.values().map(|p| self.resolve(p)));
            }
        }
        out
    }

    pub fn missing_paths(&self) -> Vec<PathBuf> {
        self.referenced_paths().into_iter().filter(|p| !p.exists()).collect()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidArgument(format!("manifest serialization: {e}")))
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::format(origin, line_of(text, &e), "manifest", e.message()))?;
        let version = match table.get("format_version") {
            Some(toml::Value::Integer(v)) => *v,
            Some(_) => return Err(Error::format(origin, 0, "format_version", "must be an integer")),
            None => return Err(Error::format(origin, 0, "format_version", "missing mandatory field")),
        };
        if version != MANIFEST_VERSION as i64 {
            return Err(Error::Version {
                found: version.clamp(0, u32::MAX as i64) as u32,
                supported: MANIFEST_VERSION,
            });
        }
        let m: DatasetManifest = toml::from_str(text)
            .map_err(|e| Error::format(origin, line_of(text, &e), "manifest", e.message()))?;
        if m.anchor_n_side != ANCHOR_N_SIDE {
            return Err(Error::format(
                origin,
                0,
                "anchor_n_side",
                format!("must be {ANCHOR_N_SIDE} for format version 1, got {}", m.anchor_n_side),
            ));
        }
        Ok(m)
    }
}

fn line_of(text: &str, e: &toml::de::Error) -> usize {
    e.span()
        .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
        .unwrap_or(0)
}

pub fn save_manifest(m: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, m.to_toml()?).map_err(|e| Error::io(path, e))
}

pub fn load_manifest(path: impl AsRef<Path>, check: PathCheck) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut m = DatasetManifest::from_toml(&text, &path.display().to_string())?;
    m.set_base_dir(path.parent().unwrap_or(Path::new(".")));
    if check == PathCheck::Verify {
        let missing = m.missing_paths();
        if !missing.is_empty() {
            return Err(Error::MissingPaths(missing));
        }
    }
    Ok(m)
}
