//! Indexed triangle meshes and their topological validation.

mod io;

use std::collections::HashMap;

pub use io::{load_mesh, parse_obj, parse_ply, save_mesh, write_obj};

use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

/// Faces whose inradius/circumradius ratio falls below this are degenerate.
pub const DEGENERATE_TOLERANCE: f64 = 1e-8;

/// Immutable indexed triangle surface.
///
/// Faces are counterclockwise when seen from outside, so `(p1 - p0) x (p2 - p0)`
/// points along the outward normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshDiagnostics {
    pub is_closed: bool,
    pub is_oriented: bool,
    pub min_face_quality: f64,
    pub genus: i64,
    pub boundary_edge_count: usize,
}

impl MeshDiagnostics {
    /// Closed, oriented and free of degenerate faces.
    pub fn is_valid_surface(&self) -> bool {
        self.is_closed && self.is_oriented && self.min_face_quality > DEGENERATE_TOLERANCE
    }
}

impl Mesh {
    /// Builds a mesh, checking index ranges and repeated vertices within a face.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &i in f {
                if i >= n {
                    return Err(Error::IndexOutOfRange {
                        face: fi,
                        index: i as i64,
                        vertex_count: n,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex: {f:?}")));
            }
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        Ok(Mesh { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn face_points(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Same connectivity, new positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Self {
        assert_eq!(vertices.len(), self.vertices.len(), "vertex count mismatch");
        Mesh {
            vertices,
            faces: self.faces.clone(),
        }
    }

    pub fn translated(&self, t: Vec3) -> Self {
        self.with_vertices(self.vertices.iter().map(|p| vec3::add(p, &t)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.with_vertices(self.vertices.iter().map(|p| vec3::scalef(p, c)).collect())
    }

    pub fn mean_edge_length(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for f in &self.faces {
            for k in 0..3 {
                sum += vec3::dist(&self.vertices[f[k]], &self.vertices[f[(k + 1) % 3]]);
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// Undirected edges, each listed once with the smaller index first.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut e: Vec<[usize; 2]> = self
            .faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| sorted_edge(f[k], f[(k + 1) % 3])))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }
}

fn sorted_edge(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Inradius over circumradius; 1/2 for an equilateral triangle, 0 when degenerate.
pub fn face_quality(p: &[Vec3; 3]) -> f64 {
    let a = vec3::dist(&p[1], &p[2]);
    let b = vec3::dist(&p[0], &p[2]);
    let c = vec3::dist(&p[0], &p[1]);
    let s = 0.5 * (a + b + c);
    let prod = (s - a) * (s - b) * (s - c);
    if prod <= 0.0 || a * b * c == 0.0 {
        return 0.0;
    }
    // r = A/s, R = abc/(4A), A^2 = s (s-a)(s-b)(s-c)
    4.0 * prod / (a * b * c)
}

pub fn min_face_quality(m: &Mesh) -> f64 {
    (0..m.face_count())
        .map(|f| face_quality(&m.face_points(f)))
        .fold(f64::INFINITY, f64::min)
}

pub fn validate_mesh(m: &Mesh) -> MeshDiagnostics {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for f in m.faces() {
        for k in 0..3 {
            *directed.entry((f[k], f[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    let mut undirected: HashMap<[usize; 2], usize> = HashMap::new();
    for (&(a, b), &n) in &directed {
        *undirected.entry(sorted_edge(a, b)).or_insert(0) += n;
    }

    let boundary_edge_count = undirected.values().filter(|&&n| n == 1).count();
    let non_manifold = undirected.values().any(|&n| n > 2);
    let is_oriented = directed.values().all(|&n| n == 1)
        && directed
            .keys()
            .all(|&(a, b)| undirected[&sorted_edge(a, b)] < 2 || directed.contains_key(&(b, a)));
    let is_closed = boundary_edge_count == 0 && !non_manifold && m.face_count() > 0;

    let v = m.vertex_count() as i64;
    let e = undirected.len() as i64;
    let f = m.face_count() as i64;
    let genus = (2 - (v - e + f)) / 2;

    MeshDiagnostics {
        is_closed,
        is_oriented,
        min_face_quality: if m.face_count() == 0 {
            0.0
        } else {
            min_face_quality(m)
        },
        genus,
        boundary_edge_count,
    }
}

/// Rejects meshes the flow and regularization cannot run on.
pub fn require_valid_surface(m: &Mesh) -> Result<MeshDiagnostics> {
    let d = validate_mesh(m);
    if !d.is_closed {
        return Err(Error::NotClosed {
            boundary_edges: d.boundary_edge_count,
        });
    }
    if !d.is_oriented {
        return Err(Error::InvalidMesh("mesh not consistently oriented".into()));
    }
    if d.min_face_quality <= DEGENERATE_TOLERANCE {
        return Err(Error::InvalidMesh(format!(
            "degenerate face (quality {:.3e})",
            d.min_face_quality
        )));
    }
    Ok(d)
}

/// Number of faces incident to each vertex.
pub fn vertex_valences(m: &Mesh) -> Vec<usize> {
    let mut v = vec![0; m.vertex_count()];
    for f in m.faces() {
        for &i in f {
            v[i] += 1;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn tetrahedron_is_closed_genus_zero() {
        let d = validate_mesh(&shapes::tetrahedron());
        assert!(d.is_closed && d.is_oriented);
        assert_eq!(d.genus, 0);
        assert_eq!(d.boundary_edge_count, 0);
        assert!((d.min_face_quality - 0.5).abs() < 1e-12);
    }

    #[test]
    fn removing_a_face_opens_the_surface() {
        let t = shapes::tetrahedron();
        let m = Mesh::new(t.vertices().to_vec(), t.faces()[1..].to_vec()).unwrap();
        let d = validate_mesh(&m);
        assert_eq!(d.boundary_edge_count, 3);
        assert!(!d.is_closed);
        assert!(matches!(
            require_valid_surface(&m),
            Err(Error::NotClosed { boundary_edges: 3 })
        ));
    }

    #[test]
    fn torus_has_genus_one() {
        let d = validate_mesh(&shapes::torus(2.0, 0.7, 24, 12));
        assert!(d.is_closed && d.is_oriented);
        assert_eq!(d.genus, 1);
    }

    #[test]
    fn flipped_face_is_not_oriented() {
        let t = shapes::tetrahedron();
        let mut faces = t.faces().to_vec();
        faces[0].swap(1, 2);
        let d = validate_mesh(&Mesh::new(t.vertices().to_vec(), faces).unwrap());
        assert!(!d.is_oriented);
    }

    #[test]
    fn valences() {
        assert!(vertex_valences(&shapes::tetrahedron()).iter().all(|&v| v == 3));
        assert!(vertex_valences(&shapes::icosahedron(1.0)).iter().all(|&v| v == 5));
        // one 1-to-4 split: 12 original vertices keep valence 5, 30 edge vertices get 6
        let sub = shapes::subdivide_midpoint(&shapes::icosahedron(1.0));
        let val = vertex_valences(&sub);
        assert_eq!(val.len(), 42);
        assert!(val[..12].iter().all(|&v| v == 5));
        assert!(val[12..].iter().all(|&v| v == 6));
    }

    #[test]
    fn rejects_bad_faces() {
        let v = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(matches!(
            Mesh::new(v.clone(), vec![[0, 1, 9]]),
            Err(Error::IndexOutOfRange { index: 9, .. })
        ));
        assert!(Mesh::new(v, vec![[0, 1, 1]]).is_err());
    }

    #[test]
    fn degenerate_face_quality_is_zero() {
        let q = face_quality(&[[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        assert!(q <= DEGENERATE_TOLERANCE);
    }
}
