//! Softmax-weighted interpolation of an uncertainty map at arbitrary
//! directions on the sphere.

use std::f64::consts::FRAC_PI_6;

use crate::geometry::{angular_distance, UnitDir};
use crate::umap::UMap;

/// Anchors within this angle (radians, inclusive) contribute.
pub const NEIGHBOR_RADIUS: f64 = FRAC_PI_6;

/// `(anchor index, weight)` pairs for `dir`. Weights are a softmax over
/// negative angular distances in radians and sum to one. With no anchor in
/// range the single nearest anchor gets weight one.
pub fn interpolation_weights(anchors: &[UnitDir], dir: &UnitDir) -> Vec<(usize, f64)> {
    let cos_limit = NEIGHBOR_RADIUS.cos() - 1e-9;
    let mut near: Vec<(usize, f64)> = anchors
        .iter()
        .enumerate()
        .filter(|(_, a)| a.dot(dir) >= cos_limit)
        .map(|(i, a)| (i, angular_distance(a, dir)))
        .filter(|(_, theta)| *theta <= NEIGHBOR_RADIUS)
        .collect();
    if near.is_empty() {
        let nearest = anchors
            .iter()
            .enumerate()
            .map(|(i, a)| (i, angular_distance(a, dir)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        return nearest.map(|(i, _)| vec![(i, 1.0)]).unwrap_or_default();
    }
    let theta_min = near.iter().map(|(_, t)| *t).fold(f64::INFINITY, f64::min);
    let mut total = 0.0;
    for (_, t) in near.iter_mut() {
        *t = (-(*t - theta_min)).exp();
        total += *t;
    }
    for (_, w) in near.iter_mut() {
        *w /= total;
    }
    near
}

/// Interpolated uncertainty of `umap` at `dir`, in `[0, 1]`.
pub fn interpolate(umap: &UMap, dir: &UnitDir) -> f64 {
    let values = umap.values();
    let v: f64 = interpolation_weights(umap.anchors(), dir)
        .into_iter()
        .map(|(i, w)| w * values[i])
        .sum();
    v.clamp(0.0, 1.0)
}
