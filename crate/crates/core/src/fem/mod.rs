//! P1 surface finite elements: element metrics, shape gradients, quadrature,
//! sparse assembly and the linear solver.

pub mod quadrature;
mod sparse;

pub use quadrature::{cached_rule, quadrature_rule, QuadratureRule};
pub use sparse::{
    assemble, mass_stiffness, solve_sparse, DofMap, ElementBlock, Factorization, Field, SparseMatrix,
    SparseSystem, SOLVE_TOLERANCE,
};

use crate::autodiff::Real;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, DEGENERATE_TOLERANCE};
use crate::vec3::{self, Vec3};

/// First fundamental form of a P1 triangle under the parametrization
/// `X(x, y) = p0 + x (p1 - p0) + y (p2 - p0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMetric {
    pub g: [[f64; 2]; 2],
    pub g_inv: [[f64; 2]; 2],
    /// `|X_1 x X_2|`, twice the triangle area.
    pub sqrt_det_g: f64,
    pub normal: Vec3,
    pub tangents: [Vec3; 2],
}

impl ElementMetric {
    pub fn area(&self) -> f64 {
        0.5 * self.sqrt_det_g
    }
}

/// Metric of the triangle `(p0, p1, p2)`; fails on collinear points.
pub fn element_metric(p0: Vec3, p1: Vec3, p2: Vec3) -> Result<ElementMetric> {
    let p = [p0, p1, p2];
    if is_degenerate(&p) {
        return Err(Error::DegenerateElement { element: 0 });
    }
    Ok(element_metric_points(&p))
}

/// Unchecked variant; the result contains infinities for degenerate input.
pub fn element_metric_points(p: &[Vec3; 3]) -> ElementMetric {
    let x1 = vec3::sub(&p[1], &p[0]);
    let x2 = vec3::sub(&p[2], &p[0]);
    let g = [[vec3::dot(&x1, &x1), vec3::dot(&x1, &x2)], [0.0, vec3::dot(&x2, &x2)]];
    let g = [[g[0][0], g[0][1]], [g[0][1], g[1][1]]];
    let c = vec3::cross(&x1, &x2);
    let sqrt_det_g = vec3::norm(&c);
    let det = g[0][0] * g[1][1] - g[0][1] * g[0][1];
    let g_inv = [[g[1][1] / det, -g[0][1] / det], [-g[0][1] / det, g[0][0] / det]];
    ElementMetric {
        g,
        g_inv,
        sqrt_det_g,
        normal: vec3::scalef(&c, 1.0 / sqrt_det_g),
        tangents: [x1, x2],
    }
}

/// Collinear or coincident points, relative to the longest edge.
pub fn is_degenerate(p: &[Vec3; 3]) -> bool {
    let x1 = vec3::sub(&p[1], &p[0]);
    let x2 = vec3::sub(&p[2], &p[0]);
    let l = vec3::dot(&x1, &x1)
        .max(vec3::dot(&x2, &x2))
        .max(vec3::dot(&vec3::sub(&p[2], &p[1]), &vec3::sub(&p[2], &p[1])));
    let a = vec3::norm(&vec3::cross(&x1, &x2));
    !(a > DEGENERATE_TOLERANCE * l) || !a.is_finite()
}

/// Metrics for every face of `m`, failing on the first degenerate one.
pub fn mesh_metrics(m: &Mesh) -> Result<Vec<ElementMetric>> {
    (0..m.face_count())
        .map(|f| {
            let p = m.face_points(f);
            if is_degenerate(&p) {
                Err(Error::DegenerateElement { element: f })
            } else {
                Ok(element_metric_points(&p))
            }
        })
        .collect()
}

/// Surface gradients of the three hat functions.
pub fn shape_gradients(em: &ElementMetric) -> [Vec3; 3] {
    let [x1, x2] = &em.tangents;
    let gi = &em.g_inv;
    let d1 = vec3::add(&vec3::scalef(x1, gi[0][0]), &vec3::scalef(x2, gi[0][1]));
    let d2 = vec3::add(&vec3::scalef(x1, gi[1][0]), &vec3::scalef(x2, gi[1][1]));
    let d0 = vec3::scalef(&vec3::add(&d1, &d2), -1.0);
    [d0, d1, d2]
}

/// Element geometry over a generic scalar, used by the differentiated kernels.
#[derive(Debug, Clone, Copy)]
pub struct Frame<T> {
    pub tangents: [Vec3<T>; 2],
    pub g_inv: [[T; 2]; 2],
    /// Triangle area.
    pub area: T,
    pub normal: Vec3<T>,
    pub grads: [Vec3<T>; 3],
}

impl<T: Real> Frame<T> {
    pub fn new(p: &[Vec3<T>; 3]) -> Self {
        let x1 = vec3::sub(&p[1], &p[0]);
        let x2 = vec3::sub(&p[2], &p[0]);
        let g11 = vec3::dot(&x1, &x1);
        let g12 = vec3::dot(&x1, &x2);
        let g22 = vec3::dot(&x2, &x2);
        let c = vec3::cross(&x1, &x2);
        let sqrt_det = vec3::norm(&c);
        let det = g11 * g22 - g12 * g12;
        let g_inv = [[g22 / det, -g12 / det], [-g12 / det, g11 / det]];
        let d1 = vec3::add(&vec3::scale(&x1, g_inv[0][0]), &vec3::scale(&x2, g_inv[0][1]));
        let d2 = vec3::add(&vec3::scale(&x1, g_inv[1][0]), &vec3::scale(&x2, g_inv[1][1]));
        let d0 = vec3::scalef(&vec3::add(&d1, &d2), -1.0);
        Frame {
            tangents: [x1, x2],
            g_inv,
            area: sqrt_det * 0.5,
            normal: vec3::scale(&c, T::cst(1.0) / sqrt_det),
            grads: [d0, d1, d2],
        }
    }

    /// `S_ab = <grad phi_a, grad phi_b>`.
    pub fn grad_products(&self) -> [[T; 3]; 3] {
        let mut s = [[T::zero(); 3]; 3];
        for a in 0..3 {
            for b in a..3 {
                let v = vec3::dot(&self.grads[a], &self.grads[b]);
                s[a][b] = v;
                s[b][a] = v;
            }
        }
        s
    }
}

/// Consistent P1 mass matrix entry factor: `M_ab = area * MASS[a][b]`.
pub const MASS: [[f64; 3]; 3] = [
    [1.0 / 6.0, 1.0 / 12.0, 1.0 / 12.0],
    [1.0 / 12.0, 1.0 / 6.0, 1.0 / 12.0],
    [1.0 / 12.0, 1.0 / 12.0, 1.0 / 6.0],
];

/// Value of a P1 field at barycentric point `l` from its three nodal values.
#[inline]
pub fn interpolate<T: Real>(l: &[f64; 3], v: &[Vec3<T>; 3]) -> Vec3<T> {
    let mut out = vec3::zero();
    for a in 0..3 {
        out = vec3::add(&out, &vec3::scalef(&v[a], l[a]));
    }
    out
}
