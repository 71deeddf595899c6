#![allow(dead_code)]

use pwillmore_core::fem::{element_metric_points, Field};
use pwillmore_core::flow::{assemble_flow_residual, flow_jacobian, initial_trial, FlowLayout};
use pwillmore_core::geometry::conformal_distortion;
use pwillmore_core::mesh::Mesh;
use pwillmore_core::regularize::{conformal_gradient, ReferenceMetric};
use pwillmore_core::shapes;
use pwillmore_core::vec3::{self, Vec3};
use pwillmore_core::{FlowConfig, FlowState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Closed double pyramid over a regular `n`-gon: `2n` faces.
pub fn bipyramid(n: usize) -> Mesh {
    let mut v: Vec<Vec3> = (0..n)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            [t.cos(), t.sin(), 0.0]
        })
        .collect();
    v.push([0.0, 0.0, 1.0]);
    v.push([0.0, 0.0, -1.0]);
    let mut f = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        f.push([i, j, n]);
        f.push([j, i, n + 1]);
    }
    Mesh::new(v, f).unwrap()
}

/// Metrics of the faces of `param`, used as a flat reference for a mapped copy.
pub fn own_metrics(param: &Mesh) -> Vec<ReferenceMetric> {
    (0..param.face_count())
        .map(|f| ReferenceMetric {
            g: element_metric_points(&param.face_points(f)).g,
        })
        .collect()
}

pub fn random_field(n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| [0; 3].map(|_| rng.random_range(-1.0..1.0)))
        .collect()
}

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn displaced(m: &Mesh, dir: &[Vec3], h: f64) -> Mesh {
    m.with_vertices(
        m.vertices()
            .iter()
            .zip(dir)
            .map(|(p, d)| [0, 1, 2].map(|k| p[k] + h * d[k]))
            .collect(),
    )
}

pub fn mean_radius(m: &Mesh) -> f64 {
    m.vertices()
        .iter()
        .map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt())
        .sum::<f64>()
        / m.vertex_count() as f64
}

/// Directional derivative of the distortion from the assembled gradient and by
/// central differences of the functional itself.
pub fn gradient_vs_fd(m: &Mesh, refs: &[ReferenceMetric], seed: u64) -> (f64, f64) {
    let dir = random_field(m.vertex_count(), seed);
    let g = conformal_gradient(m, refs).unwrap();
    let analytic: f64 = g.iter().zip(&dir).map(|(a, b)| vec3::dot(a, b)).sum();
    let h = 1e-6 * m.mean_edge_length();
    let plus = conformal_distortion(&displaced(m, &dir, h), refs).unwrap();
    let minus = conformal_distortion(&displaced(m, &dir, -h), refs).unwrap();
    (analytic, (plus - minus) / (2.0 * h))
}

pub fn coarse_mesh() -> Mesh {
    let m = shapes::jitter(&shapes::icosahedron(1.0), 0.08, 11);
    assert_eq!(m.face_count(), 20);
    m
}

pub fn flow_config(p: u32) -> FlowConfig {
    FlowConfig {
        p,
        fix_area: p > 0,
        fix_volume: true,
        tau0: 1e-3,
        tau_max: 1e-3,
        ..Default::default()
    }
}

/// The old state's fields moved by a random relative perturbation, with
/// random multipliers.
pub fn random_trial(old: &FlowState, cfg: &FlowConfig, seed: u64) -> Vec<f64> {
    let mut x = initial_trial(old, cfg);
    let noise = random_vec(x.len(), seed);
    let h = old.mesh.mean_edge_length();
    let layout = FlowLayout::new(old.mesh.vertex_count(), cfg);
    let u_len = layout.dofs.field_len(Field::U);
    for (i, (xi, n)) in x.iter_mut().zip(&noise).enumerate() {
        if i < u_len {
            *xi += 0.05 * h * n;
        } else if xi.abs() > 0.0 {
            *xi *= 1.0 + 0.05 * n;
        } else {
            *xi = *n;
        }
    }
    x
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn jacobian_fd_error(p: u32, seed: u64) -> f64 {
    let cfg = flow_config(p);
    let old = FlowState::new(coarse_mesh(), &cfg).unwrap();
    let x = random_trial(&old, &cfg, seed);
    let d = random_vec(x.len(), seed + 1000);
    let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let h = 1e-6 * scale;
    let at = |s: f64| {
        let xs: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + s * b).collect();
        assemble_flow_residual(&old, &xs, &cfg).unwrap().values
    };
    let (rp, rm) = (at(h), at(-h));
    let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    let jd = flow_jacobian(&old, &x, &cfg).unwrap().matvec(&d);
    let diff: Vec<f64> = jd.iter().zip(&fd).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(&fd)
}
