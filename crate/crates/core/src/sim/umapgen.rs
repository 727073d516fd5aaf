//! Ground-truth uncertainty maps: reconstruct from one view, compare against
//! ground truth at every anchor.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{anchors_for_view, Viewpoint, ANCHOR_N_SIDE};
use crate::image::Image;
use crate::metrics::uncertainty_between;
use crate::sim::camera::{CameraPose, DEFAULT_FOV_DEG};
use crate::sim::hull::{render_hull, VoxelGrid, DEFAULT_GRID_DIM, DEFAULT_HALF_EXTENT};
use crate::sim::mesh::TriMesh;
use crate::sim::render::render_view;
use crate::umap::{UMap, UncertaintyKind};

pub const DEFAULT_RESOLUTION: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub resolution: usize,
    pub fov_deg: f64,
    pub grid_dim: usize,
    pub half_extent: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            resolution: DEFAULT_RESOLUTION,
            fov_deg: DEFAULT_FOV_DEG,
            grid_dim: DEFAULT_GRID_DIM,
            half_extent: DEFAULT_HALF_EXTENT,
        }
    }
}

impl SimConfig {
    pub fn pose(&self, view: &Viewpoint) -> Result<CameraPose> {
        CameraPose::new(view, self.fov_deg, self.resolution)
    }

    pub fn render(&self, mesh: &TriMesh, view: &Viewpoint) -> Result<Image> {
        Ok(render_view(mesh, &self.pose(view)?))
    }

    /// Uncarved grid; fails when the mesh pokes outside the extent.
    pub fn initial_grid(&self, mesh: &TriMesh) -> Result<VoxelGrid> {
        let (lo, hi) = mesh.bounds();
        if lo.min() < -self.half_extent || hi.max() > self.half_extent {
            return Err(Error::InvalidArgument(format!(
                "mesh bounds exceed the grid half extent {}",
                self.half_extent
            )));
        }
        VoxelGrid::cube(self.grid_dim, self.half_extent)
    }

    /// Visual hull carved from every view in `views`.
    pub fn hull(&self, mesh: &TriMesh, views: &[Viewpoint]) -> Result<VoxelGrid> {
        let mut grid = self.initial_grid(mesh)?;
        for v in views {
            let pose = self.pose(v)?;
            grid.carve(&render_view(mesh, &pose), &pose)?;
        }
        Ok(grid)
    }
}

pub fn make_umap(mesh: &TriMesh, view: &Viewpoint, kind: UncertaintyKind, cfg: &SimConfig) -> Result<UMap> {
    Ok(make_umaps(mesh, view, &[kind], cfg)?.remove(0))
}

/// One map per kind, sharing the renders.
pub fn make_umaps(mesh: &TriMesh, view: &Viewpoint, kinds: &[UncertaintyKind], cfg: &SimConfig) -> Result<Vec<UMap>> {
    for k in kinds {
        k.ensure_computable()?;
    }
    let grid = cfg.hull(mesh, std::slice::from_ref(view))?;
    let anchors = anchors_for_view(view, ANCHOR_N_SIDE)?;
    let per_anchor: Vec<Vec<f64>> = anchors
        .par_iter()
        .map(|a| {
            let pose = cfg.pose(&Viewpoint::from_dir(a, view.radius))?;
            let gt = render_view(mesh, &pose);
            let synth = render_hull(&grid, &pose)?;
            kinds.iter().map(|k| uncertainty_between(&gt, &synth, *k)).collect()
        })
        .collect::<Result<_>>()?;
    kinds
        .iter()
        .enumerate()
        .map(|(ki, k)| {
            let values = per_anchor.iter().map(|v| v[ki]).collect();
            UMap::new(values, anchors.clone(), *view, *k, 0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::angular_distance;
    use crate::sim::mesh::{box_with_notch, icosphere};

    fn cfg() -> SimConfig {
        SimConfig { resolution: 64, grid_dim: 48, ..SimConfig::default() }
    }

    #[test]
    fn sphere_minimum_is_nearest_anchor() {
        let mesh = icosphere(3);
        let view = Viewpoint::new(37.0, 80.0, 2.73).unwrap();
        let u = make_umap(&mesh, &view, UncertaintyKind::Psnr, &cfg()).unwrap();
        let d = view.dir();
        let dist: Vec<f64> = u.anchors().iter().map(|a| angular_distance(a, &d)).collect();
        let closest = dist.iter().copied().fold(f64::INFINITY, f64::min);
        // the first ring holds four equidistant anchors
        let nearest: Vec<usize> = (0..48).filter(|&i| dist[i] - closest < 1e-9).collect();
        assert_eq!(nearest.len(), 4);
        let nearest_min = nearest.iter().map(|&i| u.values()[i]).fold(f64::INFINITY, f64::min);
        let antipodal = (0..48)
            .max_by(|&a, &b| {
                angular_distance(&u.anchors()[a], &d).total_cmp(&angular_distance(&u.anchors()[b], &d))
            })
            .unwrap();
        let min = u.values().iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(nearest_min, min, "{:?}", u.values());
        assert!(u.values()[antipodal] >= nearest_min);
    }

    #[test]
    fn all_kinds_in_range() {
        let mesh = box_with_notch();
        let maps = make_umaps(&mesh, &Viewpoint::new(60.0, 10.0, 2.73).unwrap(), &UncertaintyKind::COMPUTABLE, &cfg()).unwrap();
        assert_eq!(maps.len(), 3);
        for m in maps {
            assert!(m.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert!(make_umap(&mesh, &Viewpoint::default(), UncertaintyKind::LpipsReserved, &cfg()).is_err());
    }

    #[test]
    fn mirror_views_give_matching_value_multisets() {
        let mesh = box_with_notch();
        // the notched box is symmetric under x -> -x; azimuth a maps to 180 - a
        let a = Viewpoint::new(55.0, 30.0, 2.73).unwrap();
        let b = Viewpoint::new(55.0, 150.0, 2.73).unwrap();
        let mut ua = make_umap(&mesh, &a, UncertaintyKind::Psnr, &cfg()).unwrap().values().to_vec();
        let mut ub = make_umap(&mesh, &b, UncertaintyKind::Psnr, &cfg()).unwrap().values().to_vec();
        ua.sort_by(f64::total_cmp);
        ub.sort_by(f64::total_cmp);
        let mad = ua.iter().zip(&ub).map(|(x, y)| (x - y).abs()).sum::<f64>() / 48.0;
        assert!(mad < 0.05, "{mad}");
    }

    #[test]
    fn deterministic() {
        let mesh = icosphere(2);
        let v = Viewpoint::new(100.0, 200.0, 2.73).unwrap();
        let a = make_umap(&mesh, &v, UncertaintyKind::Ssim, &cfg()).unwrap();
        let b = make_umap(&mesh, &v, UncertaintyKind::Ssim, &cfg()).unwrap();
        assert_eq!(a.to_text(), b.to_text());
    }
}
