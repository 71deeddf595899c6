//! Analytic test surfaces: platonic solids, icospheres, ellipsoids, tori and planar grids.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::Mesh;
use crate::vec3::{self, Vec3};

fn build(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Mesh {
    Mesh::new(vertices, faces).expect("generated mesh is valid")
}

/// Regular tetrahedron with unit edge length.
pub fn tetrahedron() -> Mesh {
    let s = 1.0 / 8f64.sqrt();
    let v = vec![[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    build(v, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
}

/// Unit cube `[0,1]^3`, two triangles per side.
pub fn cube() -> Mesh {
    let v = vec![
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
        [0.0, 1.0, 1.0],
    ];
    let quads = [
        [0, 3, 2, 1],
        [4, 5, 6, 7],
        [0, 1, 5, 4],
        [2, 3, 7, 6],
        [1, 2, 6, 5],
        [0, 4, 7, 3],
    ];
    let faces = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    build(v, faces)
}

pub fn icosahedron(radius: f64) -> Mesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let v = raw.iter().map(|p| project(p, radius)).collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    build(v, faces)
}

fn project(p: &Vec3, radius: f64) -> Vec3 {
    vec3::scalef(p, radius / vec3::norm(p))
}

/// 1-to-4 split of every triangle at edge midpoints, without projection.
///
/// Original vertices keep their indices; edge midpoints are appended.
pub fn subdivide_midpoint(m: &Mesh) -> Mesh {
    let mut v = m.vertices().to_vec();
    let mut mid: HashMap<[usize; 2], usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, v: &mut Vec<Vec3>| -> usize {
        let key = if a < b { [a, b] } else { [b, a] };
        *mid.entry(key).or_insert_with(|| {
            v.push(vec3::scalef(&vec3::add(&v[a], &v[b]), 0.5));
            v.len() - 1
        })
    };
    let mut faces = Vec::with_capacity(4 * m.face_count());
    for &[a, b, c] in m.faces() {
        let ab = midpoint(a, b, &mut v);
        let bc = midpoint(b, c, &mut v);
        let ca = midpoint(c, a, &mut v);
        faces.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
    }
    build(v, faces)
}

/// Icosahedron refined `level` times by midpoint subdivision, projected onto
/// the sphere of the given radius: `20 * 4^level` faces.
pub fn icosphere(level: u32, radius: f64) -> Mesh {
    let mut m = icosahedron(radius);
    for _ in 0..level {
        let s = subdivide_midpoint(&m);
        m = s.with_vertices(s.vertices().iter().map(|p| project(p, radius)).collect());
    }
    m
}

/// Geodesic sphere: each icosahedron face split into `frequency^2` triangles,
/// `20 * frequency^2` faces in total.
pub fn geodesic_sphere(frequency: usize, radius: f64) -> Mesh {
    assert!(frequency >= 1);
    let ico = icosahedron(1.0);
    let n = frequency;
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut lookup: HashMap<[i64; 3], usize> = HashMap::new();
    let mut index_of = |p: Vec3, vertices: &mut Vec<Vec3>| -> usize {
        let key = p.map(|x| (x * 1e9).round() as i64);
        *lookup.entry(key).or_insert_with(|| {
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let mut faces = Vec::with_capacity(20 * n * n);
    for f in 0..ico.face_count() {
        let [a, b, c] = ico.face_points(f);
        let point = |i: usize, j: usize| -> Vec3 {
            let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
            let e1 = vec3::scalef(&vec3::sub(&b, &a), s);
            let e2 = vec3::scalef(&vec3::sub(&c, &a), t);
            vec3::add(&a, &vec3::add(&e1, &e2))
        };
        let mut idx = vec![vec![0usize; n + 1]; n + 1];
        for i in 0..=n {
            for j in 0..=(n - i) {
                idx[i][j] = index_of(point(i, j), &mut vertices);
            }
        }
        for i in 0..n {
            for j in 0..(n - i) {
                faces.push([idx[i][j], idx[i + 1][j], idx[i][j + 1]]);
                if i + j + 1 < n {
                    faces.push([idx[i + 1][j], idx[i + 1][j + 1], idx[i][j + 1]]);
                }
            }
        }
    }
    let vertices = vertices.iter().map(|p| project(p, radius)).collect();
    build(vertices, faces)
}

/// Ellipsoid with semi-axes `axes`, from a geodesic sphere of the given frequency.
pub fn ellipsoid(axes: Vec3, frequency: usize) -> Mesh {
    let s = geodesic_sphere(frequency, 1.0);
    s.with_vertices(
        s.vertices()
            .iter()
            .map(|p| [p[0] * axes[0], p[1] * axes[1], p[2] * axes[2]])
            .collect(),
    )
}

/// Torus of revolution about the z axis.
pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> Mesh {
    use std::f64::consts::TAU;
    let mut v = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let w = TAU * j as f64 / nv as f64;
            let r = major + minor * w.cos();
            v.push([r * u.cos(), r * u.sin(), minor * w.sin()]);
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build(v, faces)
}

/// Open planar grid over `[x0,x1] x [y0,y1]` with `n x n` cells, each split in two.
/// `map` sends parameter-plane points to space.
pub fn planar_grid(
    n: usize,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    map: impl Fn(f64, f64) -> Vec3,
) -> Mesh {
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let x = x0 + (x1 - x0) * i as f64 / n as f64;
            let y = y0 + (y1 - y0) * j as f64 / n as f64;
            v.push(map(x, y));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut faces = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build(v, faces)
}

/// Per-vertex area-weighted normals (unnormalized face normals summed, then normalized).
fn vertex_normals(m: &Mesh) -> Vec<Vec3> {
    let mut n = vec![[0.0; 3]; m.vertex_count()];
    for (f, face) in m.faces().iter().enumerate() {
        let p = m.face_points(f);
        let c = vec3::cross(&vec3::sub(&p[1], &p[0]), &vec3::sub(&p[2], &p[0]));
        for &i in face {
            n[i] = vec3::add(&n[i], &c);
        }
    }
    n.iter().map(|x| vec3::scalef(x, 1.0 / vec3::norm(x))).collect()
}

/// Moves every vertex by a random vector in its tangent plane, of length up to
/// `fraction` times the mean edge length. Deterministic for a given seed.
pub fn jitter_tangential(m: &Mesh, fraction: f64, seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = m.mean_edge_length() * fraction;
    let normals = vertex_normals(m);
    let v = m
        .vertices()
        .iter()
        .zip(&normals)
        .map(|(p, n)| {
            let r: Vec3 = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            let t = vec3::sub(&r, &vec3::scalef(n, vec3::dot(&r, n)));
            let len = vec3::norm(&t).max(1e-300);
            let amp = h * rng.random_range(0.0..1.0);
            vec3::add(p, &vec3::scalef(&t, amp / len))
        })
        .collect();
    m.with_vertices(v)
}

/// Moves every vertex by a uniform random vector with components in `[-amp, amp]`.
pub fn jitter(m: &Mesh, amp: f64, seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    m.with_vertices(
        m.vertices()
            .iter()
            .map(|p| p.map(|x| x + rng.random_range(-amp..amp)))
            .collect(),
    )
}
