//! Polar visualization of an uncertainty map.
//!
//! Radius encodes elevation relative to the source view (0° at the centre,
//! 180° at the rim); angle encodes azimuth in the source view frame,
//! counter-clockwise from the frame's right axis. Values are min-max
//! normalized for display only.

use nalgebra::Vector3;

use crate::avs::interpolate::interpolate;
use crate::error::{Error, Result};
use crate::geometry::{view_frame, UnitDir};
use crate::image::Image;
use crate::umap::UMap;

pub const MIN_PLOT_SIZE: usize = 64;

const VIRIDIS: [[f32; 3]; 5] = [
    [0.267, 0.005, 0.329],
    [0.231, 0.322, 0.545],
    [0.129, 0.569, 0.549],
    [0.369, 0.788, 0.384],
    [0.992, 0.906, 0.145],
];

/// Piecewise-linear viridis approximation for `t ∈ [0, 1]`.
pub fn colormap(t: f64) -> [f32; 3] {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let f = (t - i as f64) as f32;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    [
        a[0] + (b[0] - a[0]) * f,
        a[1] + (b[1] - a[1]) * f,
        a[2] + (b[2] - a[2]) * f,
    ]
}

/// Plot geometry for a square image of `size` pixels.
#[derive(Debug, Clone, Copy)]
pub struct PolarLayout {
    pub cx: f64,
    pub cy: f64,
    pub rim: f64,
    pub disk_radius: f64,
}

impl PolarLayout {
    pub fn new(size: usize) -> Self {
        let half = size as f64 / 2.0;
        let rim = half - 1.0;
        PolarLayout {
            cx: half,
            cy: half,
            rim,
            disk_radius: (rim * 0.05).max(2.0),
        }
    }

    /// Continuous pixel coordinates of `(elevation, azimuth)` in degrees.
    pub fn to_pixel(&self, elevation_deg: f64, azimuth_deg: f64) -> (f64, f64) {
        let r = elevation_deg / 180.0 * self.rim;
        let (s, c) = azimuth_deg.to_radians().sin_cos();
        (self.cx + r * c, self.cy - r * s)
    }
}

/// Elevation/azimuth (degrees) of each anchor in the source view frame.
pub fn anchor_polar_coords(umap: &UMap) -> Vec<(f64, f64)> {
    let frame = view_frame(&umap.source_view().dir());
    umap.anchors()
        .iter()
        .map(|a| {
            let l = frame.to_local(a.as_vector());
            let elev = l.x.hypot(l.y).atan2(l.z).to_degrees();
            let azim = l.y.atan2(l.x).to_degrees().rem_euclid(360.0);
            (elev, azim)
        })
        .collect()
}

pub fn render_polar_map(umap: &UMap, size_px: usize) -> Result<Image> {
    if size_px < MIN_PLOT_SIZE {
        return Err(Error::InvalidArgument(format!(
            "polar plot size must be ≥ {MIN_PLOT_SIZE}, got {size_px}"
        )));
    }
    let values = umap.values();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };

    let layout = PolarLayout::new(size_px);
    let frame = view_frame(&umap.source_view().dir());
    let disks: Vec<((f64, f64), [f32; 3])> = anchor_polar_coords(umap)
        .into_iter()
        .zip(values)
        .map(|((e, a), v)| (layout.to_pixel(e, a), colormap(norm(*v))))
        .collect();

    let mut data = vec![1.0f32; size_px * size_px * 3];
    for py in 0..size_px {
        for px in 0..size_px {
            let (x, y) = (px as f64 + 0.5, py as f64 + 0.5);
            let (dx, dy) = (x - layout.cx, layout.cy - y);
            let r = dx.hypot(dy);
            if r > layout.rim {
                continue;
            }
            let disk = disks
                .iter()
                .find(|((ax, ay), _)| (x - ax).hypot(y - ay) <= layout.disk_radius);
            let color = match disk {
                Some((_, c)) => *c,
                None => {
                    let elev = (r / layout.rim * std::f64::consts::PI).min(std::f64::consts::PI);
                    let azim = dy.atan2(dx);
                    let local = Vector3::new(elev.sin() * azim.cos(), elev.sin() * azim.sin(), elev.cos());
                    let dir = UnitDir::from_vector(frame.to_world(&local)).unwrap_or(frame.forward);
                    colormap(norm(interpolate(umap, &dir)))
                }
            };
            let i = (py * size_px + px) * 3;
            data[i..i + 3].copy_from_slice(&color);
        }
    }
    Image::new(size_px, size_px, 3, data)
}
