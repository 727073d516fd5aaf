//! k-nearest-neighbour image regressor: 16×16 mean-centred grayscale
//! features, inverse-distance weighting.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{anchors_for_view, Viewpoint, ANCHOR_N_SIDE, N_ANCHORS};
use crate::image::Image;
use crate::predictor::{require_image, Predictor};
use crate::umap::manifest::DatasetManifest;
use crate::umap::{read_umap, UMap, UncertaintyKind};

pub const FEATURE_SIZE: usize = 16;
pub const DEFAULT_K: usize = 3;
pub const IDW_EPSILON: f64 = 1e-8;
pub const KNN_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnRow {
    pub instance_id: String,
    pub view: Viewpoint,
    pub features: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub format_version: u32,
    pub k: usize,
    pub kind: UncertaintyKind,
    pub feature_size: usize,
    pub rows: Vec<KnnRow>,
}

pub fn features(image: &Image) -> Vec<f64> {
    let mut f = image.gray_resized(FEATURE_SIZE);
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    for v in &mut f {
        *v -= mean;
    }
    f
}

/// Reads every record of `kind` in manifest order.
pub fn knn_fit(manifest: &DatasetManifest, k: usize, kind: UncertaintyKind) -> Result<KnnModel> {
    kind.ensure_computable()?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for (inst, rec) in manifest.view_records() {
        let Some(path) = rec.umap_path(kind) else { continue };
        let image = Image::read_pnm(manifest.resolve(&rec.image_path))?;
        let umap = read_umap(manifest.resolve(path))?;
        rows.push(KnnRow {
            instance_id: inst.instance_id.clone(),
            view: rec.viewpoint,
            features: features(&image),
            values: umap.values().to_vec(),
        });
    }
    if rows.len() < k {
        return Err(Error::InvalidArgument(format!(
            "need at least k = {k} `{kind}` records, manifest has {}",
            rows.len()
        )));
    }
    Ok(KnnModel { format_version: KNN_FORMAT_VERSION, k, kind, feature_size: FEATURE_SIZE, rows })
}

impl KnnModel {
    /// Row indices and weights of the `k` nearest rows; ties go to the
    /// lower row index.
    pub fn neighbours(&self, feat: &[f64]) -> Vec<(usize, f64)> {
        let mut dist: Vec<(usize, f64)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let d2: f64 = r.features.iter().zip(feat).map(|(a, b)| (a - b) * (a - b)).sum();
                (i, d2.sqrt())
            })
            .collect();
        dist.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        dist.truncate(self.k);
        let inv: Vec<f64> = dist.iter().map(|(_, d)| 1.0 / (d + IDW_EPSILON)).collect();
        let total: f64 = inv.iter().sum();
        dist.iter().zip(inv).map(|((i, _), w)| (*i, w / total)).collect()
    }

    pub fn predict_values(&self, image: &Image) -> Vec<f64> {
        let mut out = vec![0.0; N_ANCHORS];
        for (i, w) in self.neighbours(&features(image)) {
            for (o, v) in out.iter_mut().zip(&self.rows[i].values) {
                *o += w * v;
            }
        }
        out.iter().map(|v| v.clamp(0.0, 1.0)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(format!("model serialization: {e}")))
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let m: KnnModel = serde_json::from_str(text)
            .map_err(|e| Error::format(origin, e.line(), "model", e.to_string()))?;
        if m.format_version != KNN_FORMAT_VERSION {
            return Err(Error::Version { found: m.format_version, supported: KNN_FORMAT_VERSION });
        }
        if m.k == 0 || m.rows.len() < m.k {
            return Err(Error::format(origin, 0, "k", "k must be in 1..=rows"));
        }
        let dim = m.feature_size * m.feature_size;
        if let Some(bad) = m.rows.iter().position(|r| {
            r.features.len() != dim
                || r.values.len() != N_ANCHORS
                || r.features.iter().any(|v| !v.is_finite())
                || r.values.iter().any(|v| !(0.0..=1.0).contains(v))
        }) {
            return Err(Error::format(origin, 0, "rows", format!("row {bad} is malformed")));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        KnnModel::from_json(&text, &path.display().to_string())
    }
}

#[derive(Debug, Clone)]
pub struct KnnPredictor {
    pub model: KnnModel,
}

impl Predictor for KnnPredictor {
    fn predict(&mut self, image: Option<&Image>, view: &Viewpoint, kind: UncertaintyKind) -> Result<UMap> {
        if kind != self.model.kind {
            return Err(Error::InvalidArgument(format!(
                "model was fit on `{}` maps, asked for `{kind}`",
                self.model.kind
            )));
        }
        let image = require_image(image, "knn")?;
        UMap::new(self.model.predict_values(image), anchors_for_view(view, ANCHOR_N_SIDE)?, *view, kind, 0)
    }
}
