//! Ray-cast ground-truth renderer.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::image::Image;
use crate::sim::camera::CameraPose;
use crate::sim::mesh::TriMesh;

pub const BACKGROUND: f32 = 1.0;
pub const AMBIENT: f64 = 0.2;
/// Luminance at or above this is background.
pub const SILHOUETTE_THRESHOLD: f32 = 0.999;

/// Procedural surface albedo in `[0.25, 0.85]`, mirror symmetric in every axis.
pub fn albedo(p: &Vector3<f64>) -> f64 {
    0.55 + 0.3 * (3.0 * p.x).cos() * (3.0 * p.y).cos() * (3.0 * p.z).cos()
}

/// One primary ray per pixel, Lambertian shading with a light along the
/// camera axis plus ambient. Grayscale output.
pub fn render_view(mesh: &TriMesh, pose: &CameraPose) -> Image {
    let n = pose.resolution;
    let forward = *pose.frame.forward.as_vector();
    let mut data = vec![BACKGROUND; n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(py, row)| {
        for (px, out) in row.iter_mut().enumerate() {
            let dir = pose.ray_dir(px, py);
            if let Some(hit) = mesh.intersect(&pose.position, &dir, 1e-9, f64::INFINITY) {
                let p = pose.position + dir * hit.t;
                // two-sided so open meshes shade consistently
                let lambert = mesh.face_normal(hit.face).dot(&forward).abs();
                let shade = albedo(&p) * (AMBIENT + (1.0 - AMBIENT) * lambert);
                *out = shade as f32;
            }
        }
    });
    Image::from_gray_clamped(n, n, data)
}

/// Foreground mask: luminance strictly below [`SILHOUETTE_THRESHOLD`].
pub fn silhouette(image: &Image) -> Vec<bool> {
    let mut out = Vec::with_capacity(image.width() * image.height());
    for y in 0..image.height() {
        for x in 0..image.width() {
            out.push(image.luminance(x, y) < SILHOUETTE_THRESHOLD);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Viewpoint;
    use crate::sim::mesh::{box_with_notch, icosphere};

    #[test]
    fn sphere_silhouette_matches_projected_disk() {
        let mesh = icosphere(3);
        let res = 128;
        let pose = CameraPose::new(&Viewpoint::default(), 50.0, res).unwrap();
        let img = render_view(&mesh, &pose);
        let count = silhouette(&img).iter().filter(|b| **b).count() as f64;
        // tangent cone half-angle asin(1/d); image-plane radius tan(that)/tan(fov/2)
        let d: f64 = 2.73;
        let half = (1.0 / d).asin();
        let r_px = half.tan() / 25f64.to_radians().tan() * res as f64 / 2.0;
        let expected = std::f64::consts::PI * r_px * r_px;
        assert!((count - expected).abs() / expected < 0.03, "{count} vs {expected}");
        assert!(img.get(0, 0, 0) == BACKGROUND);
        assert!(img.get(64, 64, 0) < SILHOUETTE_THRESHOLD);
    }

    #[test]
    fn full_turn_in_azimuth_is_bit_identical() {
        let mesh = box_with_notch();
        let a = CameraPose::new(&Viewpoint::new(60.0, 30.0, 2.73).unwrap(), 50.0, 48).unwrap();
        let b = CameraPose::new(&Viewpoint::new(60.0, 390.0, 2.73).unwrap(), 50.0, 48).unwrap();
        assert_eq!(render_view(&mesh, &a), render_view(&mesh, &b));
    }

    #[test]
    fn object_fits_in_frame() {
        let mesh = box_with_notch();
        let pose = CameraPose::new(&Viewpoint::new(45.0, 45.0, 2.73).unwrap(), 50.0, 64).unwrap();
        let img = render_view(&mesh, &pose);
        for i in 0..64 {
            for (x, y) in [(i, 0), (i, 63), (0, i), (63, i)] {
                assert_eq!(img.get(x, y, 0), BACKGROUND);
            }
        }
    }
}
