//! Dataset synthesis: input renders plus per-kind uncertainty maps for a set
//! of meshes, written under one output directory with a manifest.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{healpix_anchor_dirs, Viewpoint, ANCHOR_N_SIDE, DEFAULT_RADIUS, N_ANCHORS};
use crate::sim::mesh::{load_obj, write_obj, TriMesh};
use crate::sim::umapgen::{make_umaps, SimConfig};
use crate::umap::manifest::{save_manifest, DatasetManifest, InstanceRecord, SkippedInstance, ViewRecord};
use crate::umap::{write_umap, UncertaintyKind};

pub const DEFAULT_VIEWS_PER_INSTANCE: usize = 12;
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub views_per_instance: usize,
    pub kinds: Vec<UncertaintyKind>,
    pub seed: u64,
    pub sim: SimConfig,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            views_per_instance: DEFAULT_VIEWS_PER_INSTANCE,
            kinds: vec![UncertaintyKind::Psnr],
            seed: 0,
            sim: SimConfig::default(),
        }
    }
}

/// Canonical anchor indices used as input views: evenly strided, with a
/// seed-dependent offset.
pub fn strided_view_indices(views: usize, seed: u64) -> Result<Vec<usize>> {
    if views == 0 || views > N_ANCHORS {
        return Err(Error::InvalidArgument(format!("views per instance must be in 1..={N_ANCHORS}, got {views}")));
    }
    let offset = ChaCha8Rng::seed_from_u64(seed).random_range(0..N_ANCHORS);
    Ok((0..views).map(|i| (offset + i * N_ANCHORS / views) % N_ANCHORS).collect())
}

/// Instance ids from file stems, made unique with a numeric suffix.
fn instance_ids(paths: &[PathBuf]) -> Vec<String> {
    let mut seen = HashSet::new();
    paths
        .iter()
        .map(|p| {
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "mesh".into());
            let mut id = stem.clone();
            let mut n = 1;
            while !seen.insert(id.clone()) {
                id = format!("{stem}_{n}");
                n += 1;
            }
            id
        })
        .collect()
}

/// Generates the dataset. Normalized meshes are copied into `out_dir/meshes`;
/// a failing instance is recorded in the skip list instead of aborting.
pub fn gen_dataset(mesh_paths: &[PathBuf], spec: &DatasetSpec, out_dir: &Path) -> Result<DatasetManifest> {
    if mesh_paths.is_empty() {
        return Err(Error::InvalidArgument("no meshes given".into()));
    }
    for k in &spec.kinds {
        k.ensure_computable()?;
    }
    let indices = strided_view_indices(spec.views_per_instance, spec.seed)?;
    let canonical = healpix_anchor_dirs(ANCHOR_N_SIDE)?;
    let views: Vec<Viewpoint> = indices.iter().map(|&i| Viewpoint::from_dir(&canonical[i], DEFAULT_RADIUS)).collect();
    for sub in ["meshes", "images", "umaps"] {
        let d = out_dir.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let ids = instance_ids(mesh_paths);

    let results: Vec<Result<InstanceRecord>> = mesh_paths
        .par_iter()
        .zip(&ids)
        .map(|(path, id)| {
            let mesh = load_obj(path)?;
            build_instance(&mesh, id, &views, spec, out_dir)
        })
        .collect();

    let mut manifest = DatasetManifest::new(spec.sim.resolution, spec.seed, spec.kinds.clone());
    manifest.set_base_dir(out_dir);
    for ((res, id), path) in results.into_iter().zip(ids).zip(mesh_paths) {
        match res {
            Ok(rec) => manifest.instances.push(rec),
            Err(e) => manifest.skipped.push(SkippedInstance {
                instance_id: id,
                reason: format!("{}: {e}", path.display()),
            }),
        }
    }
    save_manifest(&manifest, out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

fn build_instance(mesh: &TriMesh, id: &str, views: &[Viewpoint], spec: &DatasetSpec, out_dir: &Path) -> Result<InstanceRecord> {
    let mesh_rel = format!("meshes/{id}.obj");
    write_obj(mesh, out_dir.join(&mesh_rel))?;
    let mut records = Vec::with_capacity(views.len());
    for (vi, view) in views.iter().enumerate() {
        let image = spec.sim.render(mesh, view)?;
        let image_rel = format!("images/{id}_{vi:02}.ppm");
        image.write_ppm(out_dir.join(&image_rel))?;
        let maps = make_umaps(mesh, view, &spec.kinds, &spec.sim)?;
        let mut umap_paths = BTreeMap::new();
        for m in maps {
            let rel = format!("umaps/{id}_{vi:02}_{}.umap", m.kind());
            write_umap(&m, out_dir.join(&rel))?;
            umap_paths.insert(m.kind().as_str().to_string(), rel);
        }
        records.push(ViewRecord { viewpoint: *view, image_path: image_rel, umap_paths });
    }
    Ok(InstanceRecord { instance_id: id.to_string(), mesh_path: mesh_rel, view_records: records })
}
