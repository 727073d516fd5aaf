//! Bounding volume hierarchy over triangles: nearest ray hit and closest
//! surface point queries.

use nalgebra::Vector3;

type V3 = Vector3<f64>;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct RayHit {
    pub face: usize,
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: V3,
    max: V3,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            min: V3::repeat(f64::INFINITY),
            max: V3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &V3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    /// Slab test; returns the entry distance when the ray hits within `t_max`.
    fn ray_entry(&self, origin: &V3, inv_dir: &V3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for a in 0..3 {
            let near = (self.min[a] - origin[a]) * inv_dir[a];
            let far = (self.max[a] - origin[a]) * inv_dir[a];
            let (near, far) = if near <= far { (near, far) } else { (far, near) };
            // NaN from 0 * inf: treat as unbounded on that axis
            if !near.is_nan() {
                t0 = t0.max(near);
            }
            if !far.is_nan() {
                t1 = t1.min(far);
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }

    fn distance_sq(&self, p: &V3) -> f64 {
        let mut d = 0.0;
        for a in 0..3 {
            let v = if p[a] < self.min[a] {
                self.min[a] - p[a]
            } else if p[a] > self.max[a] {
                p[a] - self.max[a]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first index into `order`; interior: index of the left child
    /// (the right child is `left + 1`).
    start: usize,
    count: usize,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
    tris: Vec<[V3; 3]>,
}

impl Bvh {
    pub fn build(tris: Vec<[V3; 3]>) -> Self {
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let centroids: Vec<V3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len().max(1));
        nodes.push(Node {
            bounds: Aabb::empty(),
            start: 0,
            count: tris.len(),
        });
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let (start, count) = (nodes[ni].start, nodes[ni].count);
            let mut bounds = Aabb::empty();
            let mut cbounds = Aabb::empty();
            for &f in &order[start..start + count] {
                for p in &tris[f] {
                    bounds.grow(p);
                }
                cbounds.grow(&centroids[f]);
            }
            nodes[ni].bounds = bounds;
            if count <= LEAF_SIZE {
                continue;
            }
            let ext = cbounds.max - cbounds.min;
            let axis = if ext.x >= ext.y && ext.x >= ext.z {
                0
            } else if ext.y >= ext.z {
                1
            } else {
                2
            };
            if ext[axis] <= 0.0 {
                continue;
            }
            let slice = &mut order[start..start + count];
            slice.sort_by(|a, b| {
                centroids[*a][axis]
                    .total_cmp(&centroids[*b][axis])
                    .then(a.cmp(b))
            });
            let half = count / 2;
            let left = nodes.len();
            nodes.push(Node { bounds: Aabb::empty(), start, count: half });
            nodes.push(Node { bounds: Aabb::empty(), start: start + half, count: count - half });
            nodes[ni].start = left;
            nodes[ni].count = 0;
            stack.push(left);
            stack.push(left + 1);
        }
        Bvh { nodes, order, tris }
    }

    /// Nearest hit with `t` in `(t_min, t_max]`. Ties go to the lower face index.
    pub fn intersect(&self, origin: &V3, dir: &V3, t_min: f64, t_max: f64) -> Option<RayHit> {
        if self.tris.is_empty() {
            return None;
        }
        let inv = V3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<RayHit> = None;
        let mut limit = t_max;
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds.ray_entry(origin, &inv, limit).is_none() {
                continue;
            }
            if node.count > 0 {
                for &f in &self.order[node.start..node.start + node.count] {
                    if let Some((t, u, v)) = ray_triangle(origin, dir, &self.tris[f]) {
                        if t > t_min && t <= limit {
                            let better = match best {
                                None => true,
                                Some(b) => t < b.t || (t == b.t && f < b.face),
                            };
                            if better {
                                best = Some(RayHit { face: f, t, u, v });
                                limit = t;
                            }
                        }
                    }
                }
            } else {
                let (l, r) = (node.start, node.start + 1);
                let tl = self.nodes[l].bounds.ray_entry(origin, &inv, limit);
                let tr = self.nodes[r].bounds.ray_entry(origin, &inv, limit);
                match (tl, tr) {
                    (Some(a), Some(b)) => {
                        if a <= b {
                            stack.push(r);
                            stack.push(l);
                        } else {
                            stack.push(l);
                            stack.push(r);
                        }
                    }
                    (Some(_), None) => stack.push(l),
                    (None, Some(_)) => stack.push(r),
                    (None, None) => {}
                }
            }
        }
        best
    }

    /// Closest surface point to `p`: `(distance, face)`.
    pub fn closest(&self, p: &V3) -> Option<(f64, usize)> {
        if self.tris.is_empty() {
            return None;
        }
        let mut best_sq = f64::INFINITY;
        let mut best_face = usize::MAX;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds.distance_sq(p) > best_sq {
                continue;
            }
            if node.count > 0 {
                for &f in &self.order[node.start..node.start + node.count] {
                    let q = closest_point_on_triangle(p, &self.tris[f]);
                    let d = (q - p).norm_squared();
                    if d < best_sq || (d == best_sq && f < best_face) {
                        best_sq = d;
                        best_face = f;
                    }
                }
            } else {
                let (l, r) = (node.start, node.start + 1);
                let dl = self.nodes[l].bounds.distance_sq(p);
                let dr = self.nodes[r].bounds.distance_sq(p);
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        Some((best_sq.sqrt(), best_face))
    }
}

/// Möller–Trumbore. Returns `(t, u, v)` with barycentrics of vertices 1 and 2.
pub fn ray_triangle(origin: &V3, dir: &V3, tri: &[V3; 3]) -> Option<(f64, f64, f64)> {
    const EPS: f64 = 1e-12;
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < EPS {
        return None;
    }
    let inv_det = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(&p) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv_det;
    Some((t, u, v))
}

/// Closest point on a triangle (Voronoi-region method).
pub fn closest_point_on_triangle(p: &V3, tri: &[V3; 3]) -> V3 {
    let (a, b, c) = (tri[0], tri[1], tri[2]);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}
