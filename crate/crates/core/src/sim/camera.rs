//! Pinhole look-at cameras.
//!
//! The camera sits at `radius · forward` and looks along `-forward`. Image
//! columns grow along the frame's right axis and rows grow along `-up`.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{view_frame, ViewFrame, Viewpoint};

type V3 = Vector3<f64>;

pub const DEFAULT_FOV_DEG: f64 = 50.0;
pub const MIN_RESOLUTION: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub position: V3,
    pub frame: ViewFrame,
    pub fov_deg: f64,
    pub resolution: usize,
    tan_half: f64,
}

impl CameraPose {
    pub fn new(view: &Viewpoint, fov_deg: f64, resolution: usize) -> Result<Self> {
        if !(fov_deg > 10.0 && fov_deg < 120.0) {
            return Err(Error::InvalidArgument(format!("fov {fov_deg} outside (10, 120)")));
        }
        if resolution < MIN_RESOLUTION {
            return Err(Error::InvalidArgument(format!(
                "resolution {resolution} below minimum {MIN_RESOLUTION}"
            )));
        }
        let frame = view_frame(&view.dir());
        Ok(CameraPose {
            position: frame.forward.as_vector() * view.radius,
            frame,
            fov_deg,
            resolution,
            tan_half: (fov_deg.to_radians() / 2.0).tan(),
        })
    }

    /// Unit ray direction through the centre of pixel `(px, py)`.
    pub fn ray_dir(&self, px: usize, py: usize) -> V3 {
        let n = self.resolution as f64;
        let sx = (2.0 * (px as f64 + 0.5) / n - 1.0) * self.tan_half;
        let sy = (1.0 - 2.0 * (py as f64 + 0.5) / n) * self.tan_half;
        (self.frame.right.as_vector() * sx + self.frame.up.as_vector() * sy
            - self.frame.forward.as_vector())
        .normalize()
    }

    /// Continuous image coordinates of a world point (pixel `i` spans
    /// `[i, i + 1)`) and its depth along the viewing axis. `None` behind the
    /// camera.
    pub fn project(&self, p: &V3) -> Option<(f64, f64, f64)> {
        let rel = p - self.position;
        let depth = -rel.dot(self.frame.forward.as_vector());
        if depth <= 1e-9 {
            return None;
        }
        let n = self.resolution as f64;
        let sx = rel.dot(self.frame.right.as_vector()) / (depth * self.tan_half);
        let sy = rel.dot(self.frame.up.as_vector()) / (depth * self.tan_half);
        Some(((sx + 1.0) * 0.5 * n, (1.0 - sy) * 0.5 * n, depth))
    }

    /// World size of one pixel at `depth`.
    pub fn pixel_size_at(&self, depth: f64) -> f64 {
        2.0 * depth * self.tan_half / self.resolution as f64
    }
}
