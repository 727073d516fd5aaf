//! Silhouette visual hulls on a regular voxel grid.
//!
//! A view clears every cell whose centre projects onto a background pixel or
//! outside the frame; objects are assumed to lie fully inside the frame, as
//! normalized meshes do at the default camera distance. Surviving cells take the colour of the pixel under their centre,
//! from whichever view saw them most frontally.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::sim::camera::CameraPose;
use crate::sim::render::{silhouette, BACKGROUND};

type V3 = Vector3<f64>;

pub const MIN_GRID_DIM: usize = 8;
pub const DEFAULT_GRID_DIM: usize = 64;
/// Half side of the default cubic extent; normalized meshes fit in the unit ball.
pub const DEFAULT_HALF_EXTENT: f64 = 1.05;
/// Colour of cells no view has coloured yet.
pub const UNSEEN_COLOR: f32 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    dims: [usize; 3],
    lo: V3,
    hi: V3,
    cell: V3,
    occupancy: Vec<bool>,
    color: Vec<[f32; 3]>,
    // how frontally the view that set `color` saw the cell
    score: Vec<f32>,
    channels: usize,
}

impl VoxelGrid {
    /// Fully occupied grid over the box `[lo, hi]`.
    pub fn new(dims: [usize; 3], lo: V3, hi: V3) -> Result<Self> {
        if dims.iter().any(|d| *d < MIN_GRID_DIM) {
            return Err(Error::InvalidArgument(format!(
                "grid dims {dims:?} below minimum {MIN_GRID_DIM}"
            )));
        }
        if (0..3).any(|a| !(hi[a] > lo[a])) {
            return Err(Error::InvalidArgument("grid extent is empty".into()));
        }
        let n = dims[0] * dims[1] * dims[2];
        let cell = (hi - lo).component_div(&V3::new(dims[0] as f64, dims[1] as f64, dims[2] as f64));
        Ok(VoxelGrid {
            dims,
            lo,
            hi,
            cell,
            occupancy: vec![true; n],
            color: vec![[UNSEEN_COLOR; 3]; n],
            score: vec![f32::NEG_INFINITY; n],
            channels: 1,
        })
    }

    /// `n³` cube of half side `half_extent` around the origin.
    pub fn cube(n: usize, half_extent: f64) -> Result<Self> {
        VoxelGrid::new([n; 3], V3::repeat(-half_extent), V3::repeat(half_extent))
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn extent(&self) -> (V3, V3) {
        (self.lo, self.hi)
    }

    pub fn cell_size(&self) -> V3 {
        self.cell
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.cell.norm()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    fn center_of(&self, idx: usize) -> V3 {
        let [i, j, k] = self.coords(idx);
        self.cell_center(i, j, k)
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> V3 {
        self.lo + V3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5).component_mul(&self.cell)
    }

    pub fn is_occupied(&self, i: usize, j: usize, k: usize) -> bool {
        self.occupancy[self.index(i, j, k)]
    }

    pub fn clear(&mut self) {
        self.occupancy.fill(false);
    }

    pub fn set_occupied(&mut self, i: usize, j: usize, k: usize, value: bool) {
        let idx = self.index(i, j, k);
        self.occupancy[idx] = value;
    }

    pub fn cell_color(&self, i: usize, j: usize, k: usize) -> [f32; 3] {
        self.color[self.index(i, j, k)]
    }

    /// Cell containing `p`, if inside the extent.
    pub fn cell_of(&self, p: &V3) -> Option<[usize; 3]> {
        let mut out = [0; 3];
        for a in 0..3 {
            if p[a] < self.lo[a] || p[a] > self.hi[a] {
                return None;
            }
            out[a] = (((p[a] - self.lo[a]) / self.cell[a]) as usize).min(self.dims[a] - 1);
        }
        Some(out)
    }

    pub fn contains_point(&self, p: &V3) -> bool {
        self.cell_of(p).is_some_and(|[i, j, k]| self.is_occupied(i, j, k))
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|o| **o).count()
    }

    /// Centres of occupied cells with an empty or out-of-grid 6-neighbour.
    pub fn surface_points(&self) -> Vec<V3> {
        let [nx, ny, nz] = self.dims;
        let mut out = Vec::new();
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    if !self.is_occupied(i, j, k) {
                        continue;
                    }
                    let exposed = i == 0
                        || j == 0
                        || k == 0
                        || i + 1 == nx
                        || j + 1 == ny
                        || k + 1 == nz
                        || !self.is_occupied(i - 1, j, k)
                        || !self.is_occupied(i + 1, j, k)
                        || !self.is_occupied(i, j - 1, k)
                        || !self.is_occupied(i, j + 1, k)
                        || !self.is_occupied(i, j, k - 1)
                        || !self.is_occupied(i, j, k + 1);
                    if exposed {
                        out.push(self.cell_center(i, j, k));
                    }
                }
            }
        }
        out
    }

    /// Carves in place with one calibrated view.
    pub fn carve(&mut self, image: &Image, pose: &CameraPose) -> Result<()> {
        let n = pose.resolution;
        if image.width() != n || image.height() != n {
            return Err(Error::InvalidArgument(format!(
                "image is {}x{}, pose expects {n}x{n}",
                image.width(),
                image.height()
            )));
        }
        let mask = silhouette(image);
        if !mask.iter().any(|m| *m) {
            return Err(Error::EmptyHull("silhouette has no foreground pixels".into()));
        }
        let forward = *pose.frame.forward.as_vector();
        let nf = n as f64;

        let updates: Vec<Option<(bool, [f32; 3], f32)>> = (0..self.occupancy.len())
            .into_par_iter()
            .map(|idx| {
                if !self.occupancy[idx] {
                    return None;
                }
                let c = self.center_of(idx);
                let inside = pose
                    .project(&c)
                    .filter(|&(u, v, _)| u >= 0.0 && v >= 0.0 && u < nf && v < nf)
                    .map(|(u, v, _)| (u as usize, v as usize));
                let Some((x, y)) = inside.filter(|&(x, y)| mask[y * n + x]) else {
                    return Some((false, [UNSEEN_COLOR; 3], f32::NEG_INFINITY));
                };
                let norm = c.norm();
                let score = if norm > 1e-12 { (c.dot(&forward) / norm) as f32 } else { 0.0 };
                if score <= self.score[idx] {
                    return None;
                }
                Some((true, pixel_rgb(image, x, y), score))
            })
            .collect();

        for (idx, up) in updates.into_iter().enumerate() {
            if let Some((keep, color, score)) = up {
                self.occupancy[idx] = keep;
                if keep {
                    self.color[idx] = color;
                    self.score[idx] = score;
                }
            }
        }
        self.channels = image.channels();
        Ok(())
    }

    /// Front-to-back grid traversal; returns the first occupied cell hit.
    fn first_hit(&self, origin: &V3, dir: &V3) -> Option<usize> {
        let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
        for a in 0..3 {
            if dir[a].abs() < 1e-300 {
                if origin[a] < self.lo[a] || origin[a] > self.hi[a] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[a];
            let (mut ta, mut tb) = ((self.lo[a] - origin[a]) * inv, (self.hi[a] - origin[a]) * inv);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
        }
        if t0 > t1 {
            return None;
        }
        let p = origin + dir * t0;
        let mut cell = [0i64; 3];
        let mut step = [0i64; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for a in 0..3 {
            let rel = ((p[a] - self.lo[a]) / self.cell[a]).floor() as i64;
            cell[a] = rel.clamp(0, self.dims[a] as i64 - 1);
            if dir[a] > 0.0 {
                step[a] = 1;
                let boundary = self.lo[a] + (cell[a] + 1) as f64 * self.cell[a];
                t_max[a] = (boundary - origin[a]) / dir[a];
                t_delta[a] = self.cell[a] / dir[a];
            } else if dir[a] < 0.0 {
                step[a] = -1;
                let boundary = self.lo[a] + cell[a] as f64 * self.cell[a];
                t_max[a] = (boundary - origin[a]) / dir[a];
                t_delta[a] = -self.cell[a] / dir[a];
            }
        }
        loop {
            let idx = self.index(cell[0] as usize, cell[1] as usize, cell[2] as usize);
            if self.occupancy[idx] {
                return Some(idx);
            }
            let a = if t_max[0] < t_max[1] {
                if t_max[0] < t_max[2] { 0 } else { 2 }
            } else if t_max[1] < t_max[2] {
                1
            } else {
                2
            };
            if t_max[a] > t1 {
                return None;
            }
            cell[a] += step[a];
            if cell[a] < 0 || cell[a] >= self.dims[a] as i64 {
                return None;
            }
            t_max[a] += t_delta[a];
        }
    }
}

fn pixel_rgb(image: &Image, x: usize, y: usize) -> [f32; 3] {
    if image.channels() == 1 {
        [image.get(x, y, 0); 3]
    } else {
        [image.get(x, y, 0), image.get(x, y, 1), image.get(x, y, 2)]
    }
}

/// Returns a carved copy of `grid`.
pub fn carve_hull(image: &Image, pose: &CameraPose, grid: &VoxelGrid) -> Result<VoxelGrid> {
    let mut g = grid.clone();
    g.carve(image, pose)?;
    Ok(g)
}

/// Renders the stored cell colours (already shaded by the carving view)
/// over a white background.
pub fn render_hull(grid: &VoxelGrid, pose: &CameraPose) -> Result<Image> {
    if !grid.occupancy.iter().any(|o| *o) {
        return Err(Error::EmptyHull("grid has no occupied cells".into()));
    }
    let n = pose.resolution;
    let ch = grid.channels;
    let mut data = vec![BACKGROUND; n * n * ch];
    data.par_chunks_mut(n * ch).enumerate().for_each(|(py, row)| {
        for px in 0..n {
            let dir = pose.ray_dir(px, py);
            if let Some(idx) = grid.first_hit(&pose.position, &dir) {
                let c = grid.color[idx];
                row[px * ch..(px + 1) * ch].copy_from_slice(&c[..ch]);
            }
        }
    });
    Image::new(n, n, ch, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{healpix_anchor_dirs, Viewpoint};
    use crate::sim::mesh::{box_with_notch, icosphere, l_shape};
    use crate::sim::render::render_view;

    fn pose(e: f64, a: f64, res: usize) -> CameraPose {
        CameraPose::new(&Viewpoint::new(e, a, 2.73).unwrap(), 50.0, res).unwrap()
    }

    #[test]
    fn full_silhouette_carves_nothing() {
        // small enough to project inside the frame
        let g = VoxelGrid::cube(16, 0.6).unwrap();
        let p = pose(30.0, 40.0, 32);
        let black = Image::filled(32, 32, 1, 0.0);
        let out = carve_hull(&black, &p, &g).unwrap();
        assert_eq!(out.occupancy, g.occupancy);
    }

    #[test]
    fn empty_silhouette_is_an_error() {
        let g = VoxelGrid::cube(16, 1.05).unwrap();
        let white = Image::filled(32, 32, 1, 1.0);
        assert!(matches!(carve_hull(&white, &pose(0.0, 0.0, 32), &g), Err(Error::EmptyHull(_))));
        let mut empty = VoxelGrid::cube(8, 1.05).unwrap();
        empty.clear();
        assert!(matches!(render_hull(&empty, &pose(0.0, 0.0, 32)), Err(Error::EmptyHull(_))));
    }

    #[test]
    fn sphere_cone_cross_section() {
        let mesh = icosphere(3);
        let p = pose(0.0, 0.0, 128);
        let img = render_view(&mesh, &p);
        let g = carve_hull(&img, &p, &VoxelGrid::cube(64, 1.05).unwrap()).unwrap();
        // slice just above z = 0
        let k = 32;
        let cells = (0..64)
            .flat_map(|j| (0..64).map(move |i| (i, j)))
            .filter(|&(i, j)| g.is_occupied(i, j, k))
            .count() as f64;
        let cs = g.cell_size();
        let z = g.cell_center(0, 0, k).z;
        // tangent cone from the camera, evaluated at the slice depth
        let d: f64 = 2.73;
        let r = (d - z) * (1.0 / d).asin().tan();
        let expected = std::f64::consts::PI * r * r;
        let area = cells * cs.x * cs.y;
        assert!((area - expected).abs() / expected < 0.05, "{area} vs {expected}");
    }

    #[test]
    fn carving_is_idempotent() {
        let mesh = l_shape();
        let p = pose(50.0, 70.0, 64);
        let img = render_view(&mesh, &p);
        let once = carve_hull(&img, &p, &VoxelGrid::cube(32, 1.05).unwrap()).unwrap();
        let twice = carve_hull(&img, &p, &once).unwrap();
        assert_eq!(once, twice);
    }

    /// Occupied cell in the 3×3×3 block around the cell holding `p`.
    fn near_occupied(g: &VoxelGrid, p: &V3) -> bool {
        let [i, j, k] = g.cell_of(p).unwrap();
        let r = |c: usize, n: usize| c.saturating_sub(1)..(c + 2).min(n);
        let [nx, ny, nz] = g.dims();
        r(k, nz).any(|kk| r(j, ny).any(|jj| r(i, nx).any(|ii| g.is_occupied(ii, jj, kk))))
    }

    #[test]
    fn hull_contains_every_vertex_within_one_cell() {
        for mesh in [icosphere(2), box_with_notch(), l_shape()] {
            let mut g = VoxelGrid::cube(40, 1.05).unwrap();
            for d in healpix_anchor_dirs(1).unwrap() {
                let view = Viewpoint::from_dir(&d, 2.73);
                let p = CameraPose::new(&view, 50.0, 64).unwrap();
                g.carve(&render_view(&mesh, &p), &p).unwrap();
                for v in mesh.vertices() {
                    assert!(near_occupied(&g, v), "vertex {v:?} carved away");
                }
            }
        }
    }

    #[test]
    fn traversal_matches_dense_marching() {
        let g = VoxelGrid::cube(48, 1.05).unwrap();
        let p = pose(37.0, 80.0, 64);
        let mut mismatches = 0;
        for py in 0..64 {
            for px in 0..64 {
                let d = p.ray_dir(px, py);
                let fast = g.first_hit(&p.position, &d);
                let mut slow = None;
                let mut t = 0.0;
                while t < 6.0 {
                    if let Some([i, j, k]) = g.cell_of(&(p.position + d * t)) {
                        if g.is_occupied(i, j, k) {
                            slow = Some(g.index(i, j, k));
                            break;
                        }
                    }
                    t += 1e-4;
                }
                mismatches += (fast != slow) as usize;
            }
        }
        // dense marching can clip a corner the exact traversal skips
        assert!(mismatches <= 4, "{mismatches}");
    }

    #[test]
    fn single_cell_renders_centred_blob() {
        let mut g = VoxelGrid::cube(9, 1.05).unwrap();
        g.clear();
        g.set_occupied(4, 4, 4, true);
        for (e, a) in [(0.0, 0.0), (90.0, 45.0), (140.0, 300.0)] {
            let img = render_hull(&g, &pose(e, a, 64)).unwrap();
            let fg: Vec<(usize, usize)> = (0..64 * 64)
                .map(|i| (i % 64, i / 64))
                .filter(|&(x, y)| img.get(x, y, 0) < 0.999)
                .collect();
            assert!(!fg.is_empty());
            let (sx, sy) = fg.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x as f64, b + y as f64));
            let n = fg.len() as f64;
            assert!((sx / n + 0.5 - 32.0).abs() < 1.0 && (sy / n + 0.5 - 32.0).abs() < 1.0);
            assert!(fg.len() < 200);
        }
    }

    #[test]
    fn reprojection_stays_within_cell_band() {
        let mesh = icosphere(3);
        let p = pose(40.0, 20.0, 64);
        let img = render_view(&mesh, &p);
        let g = carve_hull(&img, &p, &VoxelGrid::cube(128, 1.05).unwrap()).unwrap();
        let back = render_hull(&g, &p).unwrap();
        let a = silhouette(&img);
        let b = silhouette(&back);
        let n = 64;
        let near = |m: &[bool], x: usize, y: usize, r: usize| {
            (y.saturating_sub(r)..(y + r + 1).min(n))
                .any(|yy| (x.saturating_sub(r)..(x + r + 1).min(n)).any(|xx| m[yy * n + xx]))
        };
        for y in 0..n {
            for x in 0..n {
                if a[y * n + x] {
                    assert!(b[y * n + x], "hull lost pixel ({x}, {y})");
                }
                if b[y * n + x] {
                    assert!(near(&a, x, y, 1), "hull pixel ({x}, {y}) outside band");
                }
            }
        }
    }

    #[test]
    fn antipodal_view_sees_a_larger_silhouette() {
        let mesh = icosphere(3);
        let p = pose(0.0, 0.0, 64);
        let img = render_view(&mesh, &p);
        let g = carve_hull(&img, &p, &VoxelGrid::cube(64, 1.05).unwrap()).unwrap();
        let back = render_hull(&g, &pose(180.0, 0.0, 64)).unwrap();
        let count = |m: Vec<bool>| m.iter().filter(|b| **b).count();
        assert!(count(silhouette(&back)) >= count(silhouette(&img)));
    }
}
