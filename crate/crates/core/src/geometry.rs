//! Spherical viewpoint algebra.
//!
//! Viewpoints live on a sphere around the object and always look at the
//! origin. Elevation is the polar angle measured from +z (0° is the north
//! pole), azimuth is measured counter-clockwise from +x in the xy-plane.
//!
//! Anchor sets are HEALPix pixel centres in RING order. A view-relative
//! anchor set is the canonical set rotated so that +z lands on the view
//! direction, with the rotation fixed by [`view_frame`].

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Camera distance used throughout the pipeline.
pub const DEFAULT_RADIUS: f64 = 2.73;

/// HEALPix resolution of the anchor set (48 pixels).
pub const ANCHOR_N_SIDE: u32 = 2;

/// Number of anchors for [`ANCHOR_N_SIDE`].
pub const N_ANCHORS: usize = 48;

const POLE_EPS: f64 = 1e-6;

/// A unit-norm direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitDir(Vector3<f64>);

impl UnitDir {
    /// Normalizes `(x, y, z)`; fails on a (near) zero vector.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_vector(Vector3::new(x, y, z))
    }

    pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n < 1e-300 {
            return Err(Error::InvalidArgument(format!(
                "cannot normalize vector {:?}",
                v.as_slice()
            )));
        }
        Ok(UnitDir(v / n))
    }

    /// Caller guarantees `v` is already unit length.
    pub(crate) fn new_unchecked(v: Vector3<f64>) -> Self {
        debug_assert!((v.norm() - 1.0).abs() < 1e-9);
        UnitDir(v)
    }

    pub const fn x_axis() -> Self {
        UnitDir(Vector3::new(1.0, 0.0, 0.0))
    }

    pub const fn y_axis() -> Self {
        UnitDir(Vector3::new(0.0, 1.0, 0.0))
    }

    pub const fn z_axis() -> Self {
        UnitDir(Vector3::new(0.0, 0.0, 1.0))
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn dot(&self, other: &UnitDir) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn neg(&self) -> UnitDir {
        UnitDir(-self.0)
    }
}

/// A look-at camera pose on a sphere around the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    pub radius: f64,
}

impl Viewpoint {
    /// Validates ranges and normalizes azimuth into `[0, 360)`.
    pub fn new(elevation_deg: f64, azimuth_deg: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if !(0.0..=180.0).contains(&elevation_deg) {
            return Err(Error::InvalidArgument(format!(
                "elevation {elevation_deg} outside [0, 180]"
            )));
        }
        if !azimuth_deg.is_finite() {
            return Err(Error::InvalidArgument("azimuth is not finite".into()));
        }
        Ok(Viewpoint {
            elevation_deg,
            azimuth_deg: normalize_azimuth(azimuth_deg),
            radius,
        })
    }

    pub fn from_dir(dir: &UnitDir, radius: f64) -> Self {
        let v = dir.as_vector();
        let elevation = v.x.hypot(v.y).atan2(v.z).to_degrees();
        let azimuth = v.y.atan2(v.x).to_degrees();
        Viewpoint {
            elevation_deg: elevation.clamp(0.0, 180.0),
            azimuth_deg: normalize_azimuth(azimuth),
            radius,
        }
    }

    pub fn dir(&self) -> UnitDir {
        let (st, ct) = self.elevation_deg.to_radians().sin_cos();
        let (sp, cp) = self.azimuth_deg.to_radians().sin_cos();
        UnitDir::new_unchecked(Vector3::new(st * cp, st * sp, ct))
    }

    pub fn position(&self) -> Vector3<f64> {
        self.dir().0 * self.radius
    }
}

impl Default for Viewpoint {
    fn default() -> Self {
        Viewpoint {
            elevation_deg: 0.0,
            azimuth_deg: 0.0,
            radius: DEFAULT_RADIUS,
        }
    }
}

fn normalize_azimuth(az: f64) -> f64 {
    let a = az.rem_euclid(360.0);
    if a >= 360.0 {
        0.0
    } else {
        a
    }
}

/// Right-handed orthonormal basis attached to a view direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewFrame {
    pub right: UnitDir,
    pub up: UnitDir,
    /// Points from the origin toward the camera.
    pub forward: UnitDir,
}

impl ViewFrame {
    /// Rotation whose columns are `right`, `up`, `forward`; maps frame-local
    /// coordinates to world coordinates.
    pub fn rotation(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.right.0, self.up.0, self.forward.0])
    }

    pub fn to_world(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.right.0 * local.x + self.up.0 * local.y + self.forward.0 * local.z
    }

    pub fn to_local(&self, world: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            self.right.0.dot(world),
            self.up.0.dot(world),
            self.forward.0.dot(world),
        )
    }
}

/// Angle between two directions in `[0, π]`.
pub fn angular_distance(a: &UnitDir, b: &UnitDir) -> f64 {
    a.0.cross(&b.0).norm().atan2(a.0.dot(&b.0))
}

/// Frame with `forward = view_dir` and `up` as close to world +z as possible
/// (world +y near the poles).
pub fn view_frame(view_dir: &UnitDir) -> ViewFrame {
    let forward = view_dir.0;
    let seed = if view_dir.z().abs() > 1.0 - POLE_EPS {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let up = (seed - forward * seed.dot(&forward)).normalize();
    let right = up.cross(&forward).normalize();
    // re-orthogonalize up against the final right/forward pair
    let up = forward.cross(&right);
    ViewFrame {
        right: UnitDir(right),
        up: UnitDir(up),
        forward: UnitDir(forward),
    }
}

/// HEALPix pixel centres in RING order for a power-of-two `n_side`.
pub fn healpix_anchor_dirs(n_side: u32) -> Result<Vec<UnitDir>> {
    if n_side == 0 || !n_side.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "n_side must be a power of two, got {n_side}"
        )));
    }
    let n = n_side as usize;
    let nf = n_side as f64;
    let mut dirs = Vec::with_capacity(12 * n * n);
    for ring in 1..4 * n {
        let (z, count, shift) = if ring < n {
            let r = ring as f64;
            (1.0 - r * r / (3.0 * nf * nf), 4 * ring, 0.5)
        } else if ring <= 3 * n {
            let s = ((ring - n + 1) % 2) as f64;
            (4.0 / 3.0 - 2.0 * ring as f64 / (3.0 * nf), 4 * n, s / 2.0)
        } else {
            let r = (4 * n - ring) as f64;
            (-(1.0 - r * r / (3.0 * nf * nf)), 4 * (4 * n - ring), 0.5)
        };
        let sin_theta = (1.0 - z * z).max(0.0).sqrt();
        let step = 2.0 * PI / count as f64;
        for j in 1..=count {
            let phi = (j as f64 - shift) * step;
            dirs.push(UnitDir::new_unchecked(Vector3::new(
                sin_theta * phi.cos(),
                sin_theta * phi.sin(),
                z,
            )));
        }
    }
    Ok(dirs)
}

/// Canonical anchors rotated into the frame of `view`.
///
/// Ordering follows the canonical RING order; a view at the north pole
/// reproduces the canonical set.
pub fn anchors_for_view(view: &Viewpoint, n_side: u32) -> Result<Vec<UnitDir>> {
    let canonical = healpix_anchor_dirs(n_side)?;
    let frame = view_frame(&view.dir());
    Ok(rotate_dirs(&frame, &canonical))
}

pub(crate) fn rotate_dirs(frame: &ViewFrame, dirs: &[UnitDir]) -> Vec<UnitDir> {
    dirs.iter()
        .map(|d| UnitDir(frame.to_world(&d.0).normalize()))
        .collect()
}

/// Area-uniform random viewpoints at a fixed radius.
pub fn sample_candidates(n: usize, seed: u64, radius: f64) -> Result<Vec<Viewpoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_candidates_with(&mut rng, n, radius)
}

pub fn sample_candidates_with<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    radius: f64,
) -> Result<Vec<Viewpoint>> {
    if n == 0 {
        return Err(Error::InvalidArgument("candidate count must be ≥ 1".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive, got {radius}"
        )));
    }
    Ok((0..n)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..=1.0);
            let azimuth: f64 = rng.random_range(0.0..360.0);
            Viewpoint {
                elevation_deg: z.clamp(-1.0, 1.0).acos().to_degrees(),
                azimuth_deg: azimuth,
                radius,
            }
        })
        .collect())
}
