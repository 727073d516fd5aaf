//! Model-free surface metrics: face visibility, accuracy and completion.

use std::collections::HashMap;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Viewpoint;
use crate::sim::mesh::TriMesh;

type V3 = Vector3<f64>;

pub const MIN_ACCURACY_POINTS: usize = 100;
pub const DEFAULT_TAU: f64 = 0.05;
pub const DEFAULT_CR_SAMPLES: usize = 10_000;

/// Per-face visibility from a set of viewpoints.
///
/// A face counts as seen when it faces a camera and the segment from that
/// camera to its centroid first hits the face itself.
pub fn visible_faces(mesh: &TriMesh, views: &[Viewpoint]) -> Result<Vec<bool>> {
    if views.is_empty() {
        return Err(Error::InvalidArgument("visibility needs at least one viewpoint".into()));
    }
    let cams: Vec<V3> = views.iter().map(|v| v.position()).collect();
    Ok((0..mesh.faces().len())
        .into_par_iter()
        .map(|f| {
            let c = mesh.centroid(f);
            let n = mesh.face_normal(f);
            cams.iter().any(|cam| {
                let to_cam = cam - c;
                if n.dot(&to_cam) <= 0.0 {
                    return false;
                }
                let dist = to_cam.norm();
                let dir = -to_cam / dist;
                mesh.intersect(cam, &dir, 0.0, dist * (1.0 + 1e-9) + 1e-12)
                    .is_some_and(|h| h.face == f)
            })
        })
        .collect())
}

/// `(vis, vis_area)`: visible face fraction by count and by area.
pub fn visibility(mesh: &TriMesh, views: &[Viewpoint]) -> Result<(f64, f64)> {
    let seen = visible_faces(mesh, views)?;
    let count = seen.iter().filter(|s| **s).count() as f64 / seen.len() as f64;
    let area: f64 = seen
        .iter()
        .enumerate()
        .filter(|(_, s)| **s)
        .map(|(f, _)| mesh.face_area(f))
        .sum();
    Ok((count, area / mesh.total_area()))
}

/// Mean distance from reconstruction points to the ground-truth surface.
pub fn mesh_accuracy(recon: &[V3], gt: &TriMesh) -> Result<f64> {
    if recon.len() < MIN_ACCURACY_POINTS {
        return Err(Error::InvalidArgument(format!(
            "accuracy needs at least {MIN_ACCURACY_POINTS} points, got {}",
            recon.len()
        )));
    }
    let total: f64 = recon.par_iter().map(|p| gt.distance_to(p)).sum();
    Ok(total / recon.len() as f64)
}

/// Fraction of `gt_samples` with a reconstruction point within `tau`.
pub fn completion_ratio(gt_samples: &[V3], recon: &[V3], tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    if gt_samples.is_empty() || recon.is_empty() {
        return Err(Error::InvalidArgument("completion needs non-empty point sets".into()));
    }
    let key = |p: &V3| [(p.x / tau).floor() as i64, (p.y / tau).floor() as i64, (p.z / tau).floor() as i64];
    let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in recon.iter().enumerate() {
        buckets.entry(key(p)).or_default().push(i);
    }
    let tau2 = tau * tau;
    let hits = gt_samples
        .par_iter()
        .filter(|p| {
            let k = key(p);
            (-1..=1).any(|dx| {
                (-1..=1).any(|dy| {
                    (-1..=1).any(|dz| {
                        buckets
                            .get(&[k[0] + dx, k[1] + dy, k[2] + dz])
                            .is_some_and(|b| b.iter().any(|&i| (recon[i] - *p).norm_squared() <= tau2))
                    })
                })
            })
        })
        .count();
    Ok(hits as f64 / gt_samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{healpix_anchor_dirs, sample_candidates};
    use crate::sim::mesh::{cube, icosphere, l_shape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_visible(mesh: &TriMesh, view: &Viewpoint) -> Vec<bool> {
        let cam = view.position();
        (0..mesh.faces().len())
            .map(|f| {
                let c = mesh.centroid(f);
                if mesh.face_normal(f).dot(&(cam - c)) <= 0.0 {
                    return false;
                }
                let dir = (c - cam).normalize();
                let target = (c - cam).norm();
                // nearest hit over all faces without the hierarchy
                let mut best = (f64::INFINITY, usize::MAX);
                for g in 0..mesh.faces().len() {
                    if let Some((t, _, _)) = crate::sim::bvh::ray_triangle(&cam, &dir, &mesh.triangle(g)) {
                        if t > 0.0 && t < best.0 {
                            best = (t, g);
                        }
                    }
                }
                best.1 == f && best.0 <= target * (1.0 + 1e-9)
            })
            .collect()
    }

    #[test]
    fn single_view_sees_at_most_a_hemisphere() {
        let mesh = icosphere(3);
        let view = Viewpoint::new(20.0, 70.0, 2.73).unwrap();
        let (_, area) = visibility(&mesh, &[view]).unwrap();
        assert!(area <= 0.5 + 1e-9, "{area}");
        // the camera at distance d sees a cap of area fraction (1 - 1/d) / 2
        assert!(area > 0.5 * (1.0 - 1.0 / 2.73) - 0.03);
        assert_eq!(visible_faces(&mesh, &[view]).unwrap(), brute_visible(&mesh, &view));
    }

    #[test]
    fn concave_shape_matches_brute_force() {
        let mesh = l_shape();
        for v in sample_candidates(5, 2, 2.73).unwrap() {
            assert_eq!(visible_faces(&mesh, &[v]).unwrap(), brute_visible(&mesh, &v));
        }
    }

    #[test]
    fn anchor_coverage_of_convex_mesh() {
        let mesh = icosphere(3);
        let views: Vec<Viewpoint> = healpix_anchor_dirs(2).unwrap().iter().map(|d| Viewpoint::from_dir(d, 2.73)).collect();
        let (vis, area) = visibility(&mesh, &views).unwrap();
        assert!(vis >= 0.99 && area >= 0.99);
        assert!(visibility(&mesh, &[]).is_err());
    }

    #[test]
    fn visibility_grows_with_views() {
        let mesh = l_shape();
        let views = sample_candidates(12, 9, 2.73).unwrap();
        let mut last = (0.0, 0.0);
        for n in 1..=views.len() {
            let v = visibility(&mesh, &views[..n]).unwrap();
            assert!(v.0 >= last.0 && v.1 >= last.1);
            last = v;
        }
    }

    #[test]
    fn accuracy_of_surface_and_offset_points() {
        let mesh = icosphere(4);
        let on = mesh.sample_surface(500, 1);
        assert!(mesh_accuracy(&on, &mesh).unwrap() < 1e-9);
        // sphere is inscribed, so measure the offset against the actual faces
        let off: Vec<V3> = (0..500)
            .map(|i| {
                let f = i * 7 % mesh.faces().len();
                mesh.centroid(f) + mesh.face_normal(f) * 0.1
            })
            .collect();
        let acc = mesh_accuracy(&off, &mesh).unwrap();
        assert!((acc - 0.1).abs() < 0.001, "{acc}");
        assert!(mesh_accuracy(&on[..99], &mesh).is_err());
    }

    #[test]
    fn completion_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let gt = cube().sample_surface(2000, 4);
        let recon: Vec<V3> = (0..800)
            .map(|_| V3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        for tau in [0.02, 0.05, 0.1, 0.3] {
            let brute = gt
                .iter()
                .filter(|p| recon.iter().any(|q| (q - *p).norm() <= tau))
                .count() as f64
                / gt.len() as f64;
            assert_eq!(completion_ratio(&gt, &recon, tau).unwrap(), brute);
        }
        assert_eq!(completion_ratio(&gt, &gt, 0.05).unwrap(), 1.0);
        let far: Vec<V3> = gt.iter().map(|p| p * 3.0 + V3::repeat(5.0)).collect();
        assert_eq!(completion_ratio(&gt, &far, 0.05).unwrap(), 0.0);
        assert!(completion_ratio(&gt, &recon, 0.0).is_err());
    }
}
