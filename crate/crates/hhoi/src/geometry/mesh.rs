//! Triangle meshes: OBJ loading, point distance and containment queries.
//!
//! Queries walk every triangle; meshes here are desk-scale objects, so no
//! acceleration structure is warranted.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::vec3::Vec3;
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Build a mesh, dropping zero-area faces and rejecting out-of-range
    /// indices.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        for (k, f) in faces.iter().enumerate() {
            for &i in f {
                if i >= vertices.len() {
                    return Err(Error::validation(format!(
                        "face {k} references vertex {i} but the mesh has {} vertices",
                        vertices.len()
                    )));
                }
            }
        }
        let faces = faces
            .into_iter()
            .filter(|f| {
                let [a, b, c] = f.map(|i| vertices[i]);
                (b - a).cross(c - a).norm() > 1e-14
            })
            .collect();
        Ok(TriangleMesh { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// An axis-aligned box centered at the origin with the given full
    /// extents, triangulated into 12 faces with outward winding.
    pub fn box_mesh(extent_x: f64, extent_y: f64, extent_z: f64) -> TriangleMesh {
        let (hx, hy, hz) = (extent_x / 2.0, extent_y / 2.0, extent_z / 2.0);
        let v = vec![
            Vec3::new(-hx, -hy, -hz),
            Vec3::new(hx, -hy, -hz),
            Vec3::new(hx, hy, -hz),
            Vec3::new(-hx, hy, -hz),
            Vec3::new(-hx, -hy, hz),
            Vec3::new(hx, -hy, hz),
            Vec3::new(hx, hy, hz),
            Vec3::new(-hx, hy, hz),
        ];
        let quads: [[usize; 4]; 6] = [
            [0, 3, 2, 1], // bottom (−z)
            [4, 5, 6, 7], // top (+z)
            [0, 1, 5, 4], // −y
            [2, 3, 7, 6], // +y
            [1, 2, 6, 5], // +x
            [3, 0, 4, 7], // −x
        ];
        let mut faces = Vec::with_capacity(12);
        for q in quads {
            faces.push([q[0], q[1], q[2]]);
            faces.push([q[0], q[2], q[3]]);
        }
        TriangleMesh::new(v, faces).expect("box mesh is valid")
    }

    /// Parse Wavefront OBJ text. Only `v` and `f` records are honored;
    /// polygons are fan-triangulated; indices are 1-based.
    pub fn from_obj_str(text: &str) -> Result<Self> {
        let mut vertices: Vec<Vec3> = Vec::new();
        let mut faces: Vec<[usize; 3]> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("v") => {
                    let mut coord = [0.0; 3];
                    for c in &mut coord {
                        let tok = parts.next().ok_or_else(|| {
                            Error::validation(format!("obj line {lineno}: vertex needs 3 coords"))
                        })?;
                        *c = tok.parse().map_err(|_| {
                            Error::validation(format!(
                                "obj line {lineno}: bad vertex coordinate {tok:?}"
                            ))
                        })?;
                    }
                    vertices.push(Vec3::new(coord[0], coord[1], coord[2]));
                }
                Some("f") => {
                    let idx: Vec<usize> = parts
                        .map(|tok| {
                            let head = tok.split('/').next().unwrap_or("");
                            let i: i64 = head.parse().map_err(|_| {
                                Error::validation(format!(
                                    "obj line {lineno}: bad face index {tok:?}"
                                ))
                            })?;
                            if i < 1 || i as usize > vertices.len() {
                                return Err(Error::validation(format!(
                                    "obj line {lineno}: face index {i} out of range 1..={}",
                                    vertices.len()
                                )));
                            }
                            Ok(i as usize - 1)
                        })
                        .collect::<Result<_>>()?;
                    if idx.len() < 3 {
                        return Err(Error::validation(format!(
                            "obj line {lineno}: face needs at least 3 vertices"
                        )));
                    }
                    for k in 1..idx.len() - 1 {
                        faces.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        TriangleMesh::new(vertices, faces)
    }

    pub fn load_obj(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_obj_str(&text)
    }

    pub fn to_obj_string(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for f in &self.faces {
            let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        out
    }

    /// Exact minimum distance from `p` to the surface.
    pub fn distance_to_point(&self, p: Vec3) -> Result<f64> {
        if self.faces.is_empty() {
            return Err(Error::validation("point_to_mesh_distance on an empty mesh"));
        }
        let mut best = f64::INFINITY;
        for f in &self.faces {
            let [a, b, c] = f.map(|i| self.vertices[i]);
            let q = closest_point_on_triangle(p, a, b, c);
            best = best.min((p - q).norm());
        }
        Ok(best)
    }

    /// Check that every edge is shared by exactly two faces.
    pub fn check_watertight(&self) -> Result<()> {
        let mut edge_counts: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (i, j) = (f[k], f[(k + 1) % 3]);
                let key = (i.min(j), i.max(j));
                *edge_counts.entry(key).or_insert(0) += 1;
            }
        }
        for ((i, j), count) in edge_counts {
            if count != 2 {
                return Err(Error::validation(format!(
                    "mesh is not watertight: edge ({i}, {j}) is shared by {count} faces"
                )));
            }
        }
        Ok(())
    }

    /// Ray-parity containment with a majority vote over three seeded ray
    /// directions. Requires a watertight mesh.
    pub fn contains_point(&self, p: Vec3) -> Result<bool> {
        self.check_watertight()?;
        Ok(self.contains_point_unchecked(p))
    }

    /// Containment test without the watertightness check, for callers that
    /// validated the mesh once up front.
    pub fn contains_point_unchecked(&self, p: Vec3) -> bool {
        // fixed seed: containment must be a deterministic function of
        // (mesh, point)
        let mut rng = Rng::seed_from(0x9d5a_b3e1);
        let mut votes = 0;
        for _ in 0..3 {
            let dir = loop {
                let v = Vec3::new(rng.normal(), rng.normal(), rng.normal());
                if v.norm() > 1e-6 {
                    break v.normalized();
                }
            };
            let mut crossings = 0usize;
            for f in &self.faces {
                let [a, b, c] = f.map(|i| self.vertices[i]);
                if ray_hits_triangle(p, dir, a, b, c) {
                    crossings += 1;
                }
            }
            if crossings % 2 == 1 {
                votes += 1;
            }
        }
        votes >= 2
    }
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Möller–Trumbore intersection for `t > 0`.
fn ray_hits_triangle(origin: Vec3, dir: Vec3, a: Vec3, b: Vec3, c: Vec3) -> bool {
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(e2);
    let det = e1.dot(h);
    if det.abs() < 1e-14 {
        return false;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = s.dot(h) * inv;
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    e2.dot(q) * inv > 1e-12
}
