//! Predictors that return measured rather than learned uncertainty.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{anchors_for_view, angular_distance, Viewpoint, ANCHOR_N_SIDE};
use crate::image::Image;
use crate::predictor::Predictor;
use crate::sim::mesh::TriMesh;
use crate::sim::umapgen::{make_umap, SimConfig};
use crate::umap::manifest::DatasetManifest;
use crate::umap::{read_umap, UMap, UncertaintyKind};

/// Renders and reconstructs on the fly; ignores the image.
#[derive(Debug, Clone)]
pub struct SimulatorOracle {
    mesh: Arc<TriMesh>,
    cfg: SimConfig,
}

impl SimulatorOracle {
    pub fn new(mesh: Arc<TriMesh>, cfg: SimConfig) -> Self {
        SimulatorOracle { mesh, cfg }
    }
}

impl Predictor for SimulatorOracle {
    fn needs_image(&self) -> bool {
        false
    }

    fn predict(&mut self, _image: Option<&Image>, view: &Viewpoint, kind: UncertaintyKind) -> Result<UMap> {
        make_umap(&self.mesh, view, kind, &self.cfg)
    }
}

/// Angular tolerance (radians) for an exact manifest hit.
pub const EXACT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup {
    /// Only views stored in the manifest; anything else is not-found.
    Exact,
    /// Falls back to the closest stored view's values, re-anchored at the
    /// query view.
    Nearest,
}

/// Looks maps up in a generated dataset.
#[derive(Debug, Clone)]
pub struct DatasetOracle {
    manifest: DatasetManifest,
    instance: Option<String>,
    lookup: Lookup,
    cache: HashMap<String, UMap>,
}

impl DatasetOracle {
    /// Restricts lookups to `instance` when given.
    pub fn new(manifest: DatasetManifest, instance: Option<String>, lookup: Lookup) -> Result<Self> {
        if let Some(id) = &instance {
            if !manifest.instances.iter().any(|i| &i.instance_id == id) {
                return Err(Error::NotFound(format!("instance `{id}` not in manifest")));
            }
        }
        Ok(DatasetOracle { manifest, instance, lookup, cache: HashMap::new() })
    }

    fn load(&mut self, rel: &str) -> Result<UMap> {
        if let Some(u) = self.cache.get(rel) {
            return Ok(u.clone());
        }
        let u = read_umap(self.manifest.resolve(rel))?;
        self.cache.insert(rel.to_string(), u.clone());
        Ok(u)
    }

    /// Closest stored record with a map of `kind`: `(umap path, distance)`.
    fn closest(&self, view: &Viewpoint, kind: UncertaintyKind) -> Option<(String, f64)> {
        let dir = view.dir();
        let mut best: Option<(String, f64)> = None;
        for (inst, rec) in self.manifest.view_records() {
            if self.instance.as_ref().is_some_and(|id| id != &inst.instance_id) {
                continue;
            }
            let Some(path) = rec.umap_path(kind) else { continue };
            let d = angular_distance(&rec.viewpoint.dir(), &dir);
            if best.as_ref().is_none_or(|(_, bd)| d < *bd) {
                best = Some((path.to_string(), d));
            }
        }
        best
    }
}

impl Predictor for DatasetOracle {
    fn needs_image(&self) -> bool {
        false
    }

    fn predict(&mut self, _image: Option<&Image>, view: &Viewpoint, kind: UncertaintyKind) -> Result<UMap> {
        let Some((path, dist)) = self.closest(view, kind) else {
            return Err(Error::NotFound(format!("no `{kind}` maps in the dataset")));
        };
        if dist <= EXACT_TOLERANCE {
            return self.load(&path);
        }
        match self.lookup {
            Lookup::Exact => Err(Error::NotFound(format!(
                "view ({}, {}) is {:.3e} rad from the nearest stored view",
                view.elevation_deg, view.azimuth_deg, dist
            ))),
            Lookup::Nearest => {
                let stored = self.load(&path)?;
                UMap::new(stored.values().to_vec(), anchors_for_view(view, ANCHOR_N_SIDE)?, *view, kind, 0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::dataset::{gen_dataset, DatasetSpec};
    use crate::sim::mesh::{icosphere, write_obj};

    #[test]
    fn simulator_oracle_delegates() {
        let mesh = Arc::new(icosphere(2));
        let cfg = SimConfig { resolution: 40, grid_dim: 24, ..SimConfig::default() };
        let view = Viewpoint::new(80.0, 20.0, 2.73).unwrap();
        let mut oracle = SimulatorOracle::new(mesh.clone(), cfg);
        let a = oracle.predict(None, &view, UncertaintyKind::Mse).unwrap();
        assert_eq!(a, make_umap(&mesh, &view, UncertaintyKind::Mse, &cfg).unwrap());
    }

    #[test]
    fn dataset_lookup_modes() {
        let dir = tempfile::tempdir().unwrap();
        let obj = dir.path().join("ball.obj");
        write_obj(&icosphere(1), &obj).unwrap();
        let spec = DatasetSpec {
            views_per_instance: 4,
            sim: SimConfig { resolution: 32, grid_dim: 16, ..SimConfig::default() },
            ..DatasetSpec::default()
        };
        let out = dir.path().join("data");
        let m = gen_dataset(&[obj], &spec, &out).unwrap();
        let rec = &m.instances[0].view_records[1];
        let stored = std::fs::read_to_string(out.join(rec.umap_path(UncertaintyKind::Psnr).unwrap())).unwrap();

        let mut exact = DatasetOracle::new(m.clone(), Some("ball".into()), Lookup::Exact).unwrap();
        let hit = exact.predict(None, &rec.viewpoint, UncertaintyKind::Psnr).unwrap();
        assert_eq!(hit.to_text(), stored);
        let off = Viewpoint::new(rec.viewpoint.elevation_deg + 1.0, rec.viewpoint.azimuth_deg, 2.73).unwrap();
        assert!(matches!(exact.predict(None, &off, UncertaintyKind::Psnr), Err(Error::NotFound(_))));
        assert!(matches!(exact.predict(None, &rec.viewpoint, UncertaintyKind::Ssim), Err(Error::NotFound(_))));

        let mut near = DatasetOracle::new(m.clone(), None, Lookup::Nearest).unwrap();
        let u = near.predict(None, &off, UncertaintyKind::Psnr).unwrap();
        assert_eq!(u.values(), hit.values());
        assert_eq!(u.source_view(), &off);
        assert!(DatasetOracle::new(m, Some("nope".into()), Lookup::Exact).is_err());
    }
}
