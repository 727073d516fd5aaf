//! Indexed triangle meshes, OBJ I/O and procedural test shapes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sim::bvh::{Bvh, RayHit};

type V3 = Vector3<f64>;

const MIN_FACE_AREA: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<V3>,
    faces: Vec<[u32; 3]>,
    areas: Vec<f64>,
    normals: Vec<V3>,
    bvh: Bvh,
}

impl TriMesh {
    /// Fails on out-of-range indices or degenerate faces.
    pub fn new(vertices: Vec<V3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::InvalidArgument("mesh has no faces".into()));
        }
        let mut areas = Vec::with_capacity(faces.len());
        let mut normals = Vec::with_capacity(faces.len());
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v as usize >= vertices.len()) {
                return Err(Error::InvalidArgument(format!("face {i} has an out-of-range index")));
            }
            let [a, b, c] = f.map(|v| vertices[v as usize]);
            let n = (b - a).cross(&(c - a));
            let area = 0.5 * n.norm();
            if !(area > MIN_FACE_AREA) {
                return Err(Error::InvalidArgument(format!("face {i} is degenerate")));
            }
            areas.push(area);
            normals.push(n.normalize());
        }
        let bvh = Bvh::build(
            faces
                .iter()
                .map(|f| f.map(|v| vertices[v as usize]))
                .collect(),
        );
        Ok(TriMesh { vertices, faces, areas, normals, bvh })
    }

    pub fn vertices(&self) -> &[V3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn face_area(&self, face: usize) -> f64 {
        self.areas[face]
    }

    pub fn face_normal(&self, face: usize) -> &V3 {
        &self.normals[face]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn triangle(&self, face: usize) -> [V3; 3] {
        self.faces[face].map(|v| self.vertices[v as usize])
    }

    pub fn centroid(&self, face: usize) -> V3 {
        let [a, b, c] = self.triangle(face);
        (a + b + c) / 3.0
    }

    pub fn bounding_radius(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn bounds(&self) -> (V3, V3) {
        let mut lo = V3::repeat(f64::INFINITY);
        let mut hi = V3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn intersect(&self, origin: &V3, dir: &V3, t_min: f64, t_max: f64) -> Option<RayHit> {
        self.bvh.intersect(origin, dir, t_min, t_max)
    }

    /// Distance from `p` to the surface.
    pub fn distance_to(&self, p: &V3) -> f64 {
        self.bvh.closest(p).map(|(d, _)| d).unwrap_or(f64::INFINITY)
    }

    /// Moves the vertex centroid to the origin and scales the farthest vertex
    /// to distance one.
    pub fn normalized(&self) -> Result<TriMesh> {
        let centroid = self.vertices.iter().fold(V3::zeros(), |a, v| a + v) / self.vertices.len() as f64;
        let radius = self.vertices.iter().map(|v| (v - centroid).norm()).fold(0.0, f64::max);
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument("mesh has zero extent".into()));
        }
        let verts = self.vertices.iter().map(|v| (v - centroid) / radius).collect();
        TriMesh::new(verts, self.faces.clone())
    }

    /// Area-weighted uniform surface samples.
    pub fn sample_surface(&self, n: usize, seed: u64) -> Vec<V3> {
        let mut cumulative = Vec::with_capacity(self.areas.len());
        let mut acc = 0.0;
        for a in &self.areas {
            acc += a;
            cumulative.push(acc);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let r = rng.random_range(0.0..acc);
                let f = cumulative.partition_point(|c| *c <= r).min(self.faces.len() - 1);
                let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
                if u + v > 1.0 {
                    u = 1.0 - u;
                    v = 1.0 - v;
                }
                let [a, b, c] = self.triangle(f);
                a + (b - a) * u + (c - a) * v
            })
            .collect()
    }

    /// SHA-256 over vertex and face data, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.vertices {
            for c in v.iter() {
                h.update(c.to_le_bytes());
            }
        }
        for f in &self.faces {
            for i in f {
                h.update(i.to_le_bytes());
            }
        }
        h.finalize().iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
        }
        for f in &self.faces {
            let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        out
    }
}

pub fn write_obj(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, mesh.to_obj()).map_err(|e| Error::io(path, e))
}

/// Loads an OBJ file, fan-triangulating polygons, dropping degenerate
/// triangles, and normalizing to a unit bounding sphere at the origin.
pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text, &path.display().to_string())?.normalized()
}

/// Parses OBJ text without normalizing.
pub fn parse_obj(text: &str, origin: &str) -> Result<TriMesh> {
    let mut vertices: Vec<V3> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let c: Vec<f64> = parts
                    .take(3)
                    .map(|p| p.parse::<f64>().ok().filter(|v| v.is_finite()))
                    .collect::<Option<_>>()
                    .ok_or_else(|| Error::format(origin, ln, "v", "bad vertex coordinate"))?;
                if c.len() != 3 {
                    return Err(Error::format(origin, ln, "v", "vertex needs 3 coordinates"));
                }
                vertices.push(V3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<u32> = parts
                    .map(|p| resolve_index(p, vertices.len()))
                    .collect::<Option<_>>()
                    .ok_or_else(|| Error::format(origin, ln, "f", "bad face index"))?;
                if idx.len() < 3 {
                    return Err(Error::format(origin, ln, "f", "face needs at least 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    faces.retain(|f| {
        let [a, b, c] = f.map(|v| vertices[v as usize]);
        0.5 * (b - a).cross(&(c - a)).norm() > MIN_FACE_AREA
    });
    if faces.is_empty() {
        return Err(Error::format(origin, 0, "f", "mesh has no non-degenerate faces"));
    }
    TriMesh::new(vertices, faces).map_err(|e| Error::format(origin, 0, "mesh", e.to_string()))
}

fn resolve_index(token: &str, n_vertices: usize) -> Option<u32> {
    let raw: i64 = token.split('/').next()?.parse().ok()?;
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        n_vertices as i64 + raw
    } else {
        return None;
    };
    (0..n_vertices as i64).contains(&idx).then_some(idx as u32)
}

/// Geodesic sphere from a subdivided icosahedron, normalized.
pub fn icosphere(subdivisions: u32) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<V3> = [
        (-1.0, t, 0.0), (1.0, t, 0.0), (-1.0, -t, 0.0), (1.0, -t, 0.0),
        (0.0, -1.0, t), (0.0, 1.0, t), (0.0, -1.0, -t), (0.0, 1.0, -t),
        (t, 0.0, -1.0), (t, 0.0, 1.0), (-t, 0.0, -1.0), (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| V3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<V3>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                verts.push(((verts[a as usize] + verts[b as usize]) / 2.0).normalize());
                (verts.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriMesh::new(verts, faces)
        .and_then(|m| m.normalized())
        .expect("icosphere is well formed")
}

/// Surface of a union of unit cubes. `occupied(x, y, z)` is queried on
/// `0..dims`; each exposed unit face is split into `subdiv × subdiv` quads.
pub fn polycube(dims: [usize; 3], subdiv: usize, occupied: impl Fn(usize, usize, usize) -> bool) -> Result<TriMesh> {
    let inside = |p: [i64; 3]| {
        (0..3).all(|a| p[a] >= 0 && (p[a] as usize) < dims[a]) && occupied(p[0] as usize, p[1] as usize, p[2] as usize)
    };
    let s = subdiv.max(1) as i64;
    let mut index: HashMap<[i64; 3], u32> = HashMap::new();
    let mut verts: Vec<V3> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut vid = |p: [i64; 3], verts: &mut Vec<V3>| {
        *index.entry(p).or_insert_with(|| {
            verts.push(V3::new(p[0] as f64, p[1] as f64, p[2] as f64) / s as f64);
            (verts.len() - 1) as u32
        })
    };
    for x in 0..dims[0] as i64 {
        for y in 0..dims[1] as i64 {
            for z in 0..dims[2] as i64 {
                let cell = [x, y, z];
                if !inside(cell) {
                    continue;
                }
                for axis in 0..3 {
                    for sign in [-1i64, 1] {
                        let mut nb = cell;
                        nb[axis] += sign;
                        if inside(nb) {
                            continue;
                        }
                        let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
                        let mut base = [x * s, y * s, z * s];
                        if sign > 0 {
                            base[axis] += s;
                        }
                        for i in 0..s {
                            for j in 0..s {
                                let mut p0 = base;
                                p0[b] += i;
                                p0[c] += j;
                                let mut p1 = p0;
                                p1[b] += 1;
                                let mut p2 = p1;
                                p2[c] += 1;
                                let mut p3 = p0;
                                p3[c] += 1;
                                let q = [p0, p1, p2, p3].map(|p| vid(p, &mut verts));
                                if sign > 0 {
                                    faces.push([q[0], q[1], q[2]]);
                                    faces.push([q[0], q[2], q[3]]);
                                } else {
                                    faces.push([q[0], q[2], q[1]]);
                                    faces.push([q[0], q[3], q[2]]);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    TriMesh::new(verts, faces)?.normalized()
}

/// Axis-aligned cube made of 12 triangles, normalized.
pub fn cube() -> TriMesh {
    polycube([1, 1, 1], 1, |_, _, _| true).expect("cube")
}

/// 4×3×3 block with a 2-wide slot cut through the top layer; mirror
/// symmetric about the x = 0 plane after normalization.
pub fn box_with_notch() -> TriMesh {
    polycube([4, 3, 3], 2, |x, _, z| !(z == 2 && (x == 1 || x == 2))).expect("notched box")
}

/// L-shaped bracket: a 3-long base with a 3-high upright at one end.
pub fn l_shape() -> TriMesh {
    polycube([3, 2, 3], 2, |x, _, z| z == 0 || x == 0).expect("l shape")
}

/// Named procedural meshes shipped for tests and demos.
pub fn procedural(name: &str) -> Option<TriMesh> {
    match name {
        "sphere" => Some(icosphere(3)),
        "cube" => Some(cube()),
        "notched_box" | "box-with-notch" => Some(box_with_notch()),
        "l_shape" | "l-shape" => Some(l_shape()),
        _ => None,
    }
}

pub const PROCEDURAL_NAMES: [&str; 4] = ["sphere", "cube", "notched_box", "l_shape"];
