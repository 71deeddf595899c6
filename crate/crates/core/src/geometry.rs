//! Geometric functionals and curvature recovery on P1 surfaces.

use rayon::prelude::*;

use crate::autodiff::Real;
use crate::error::{Error, Result};
use crate::fem::{self, cached_rule, interpolate, mass_stiffness, mesh_metrics, QuadratureRule};
use crate::mesh::{validate_mesh, Mesh};
use crate::regularize::ReferenceMetric;
use crate::vec3::{self, Vec3};

/// Quadrature degree used when none is given.
pub const DEFAULT_QUADRATURE_DEGREE: usize = 7;

/// One 3-vector per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    values: Vec<Vec3>,
}

impl NodalField {
    pub fn new(values: Vec<Vec3>) -> Result<Self> {
        if values.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite nodal value".into()));
        }
        Ok(NodalField { values })
    }

    pub fn zeros(n: usize) -> Self {
        NodalField {
            values: vec![[0.0; 3]; n],
        }
    }

    /// From a flat `[x0, y0, z0, x1, ...]` slice.
    pub fn from_flat(v: &[f64]) -> Result<Self> {
        assert_eq!(v.len() % 3, 0, "flat field length must be a multiple of 3");
        Self::new(v.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.values.iter().map(vec3::norm).collect()
    }

    /// Largest pointwise distance to `other`.
    pub fn max_diff(&self, other: &NodalField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| vec3::dist(a, b))
            .fold(0.0, f64::max)
    }
}

/// Mean curvature vector `Y` and weighted curvature `W = |Y|^(p-2) Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    pub y: NodalField,
    pub w: NodalField,
}

pub fn surface_area(m: &Mesh) -> Result<f64> {
    Ok(mesh_metrics(m)?.iter().map(|e| e.area()).sum())
}

/// `(1/3) ∫ <u, N>`, evaluated exactly per face relative to the vertex centroid.
pub fn enclosed_volume(m: &Mesh) -> Result<f64> {
    let d = validate_mesh(m);
    if !d.is_closed {
        return Err(Error::NotClosed {
            boundary_edges: d.boundary_edge_count,
        });
    }
    let n = m.vertex_count() as f64;
    let c = m
        .vertices()
        .iter()
        .fold([0.0; 3], |acc, p| vec3::add(&acc, &vec3::scalef(p, 1.0 / n)));
    let mut vol = 0.0;
    for f in 0..m.face_count() {
        let p = m.face_points(f).map(|x| vec3::sub(&x, &c));
        vol += vec3::dot(&p[0], &vec3::cross(&p[1], &p[2]));
    }
    Ok(vol / 6.0)
}

/// Solves `M Y = -K u` componentwise.
pub fn mean_curvature_vector(m: &Mesh) -> Result<NodalField> {
    let (mm, kk) = mass_stiffness(m)?;
    let lu = mm.factor()?;
    let n = m.vertex_count();
    let mut y = vec![[0.0; 3]; n];
    for k in 0..3 {
        let u: Vec<f64> = m.vertices().iter().map(|p| p[k]).collect();
        let rhs: Vec<f64> = kk.matvec(&u).iter().map(|v| -v).collect();
        let sol = lu.solve(&rhs)?;
        for (yi, s) in y.iter_mut().zip(sol) {
            yi[k] = s;
        }
    }
    NodalField::new(y)
}

/// Regularization length for `|Y|^(p-2)` with `p < 2`.
pub fn curvature_delta(m: &Mesh) -> f64 {
    1e-8 * 2.0 / m.mean_edge_length()
}

/// `|Y|^(p-2)` from `|Y|^2`; regularized by `delta` when `p < 2`.
#[inline]
pub fn curvature_weight<T: Real>(y2: T, p: u32, delta: f64) -> T {
    match p {
        2 => T::cst(1.0),
        _ if p > 2 => {
            let mut w = T::cst(1.0);
            let half = (p - 2) / 2;
            for _ in 0..half {
                w = w * y2;
            }
            if (p - 2) % 2 == 1 {
                w = w * y2.sqrt();
            }
            w
        }
        _ => (y2 + delta * delta).powf((p as f64 - 2.0) / 2.0),
    }
}

/// `M W = ∫ |Y|^(p-2) Y φ` with `Y` interpolated at quadrature points.
pub fn weighted_curvature(m: &Mesh, y: &NodalField, p: u32) -> Result<NodalField> {
    weighted_curvature_with(m, y, p, DEFAULT_QUADRATURE_DEGREE)
}

pub fn weighted_curvature_with(m: &Mesh, y: &NodalField, p: u32, degree: usize) -> Result<NodalField> {
    if p < 1 {
        return Err(Error::InvalidParameter(format!("weighted curvature needs p >= 1, got {p}")));
    }
    if y.len() != m.vertex_count() {
        return Err(Error::InvalidParameter("curvature field does not match the mesh".into()));
    }
    if p == 2 {
        return Ok(y.clone());
    }
    let rule = cached_rule(degree)?;
    let metrics = mesh_metrics(m)?;
    let delta = curvature_delta(m);
    let local: Vec<[Vec3; 3]> = m
        .faces()
        .par_iter()
        .zip(&metrics)
        .map(|(f, em)| {
            let ys = f.map(|i| y.values[i]);
            let mut b = [[0.0; 3]; 3];
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let yq = interpolate(l, &ys);
                let s = curvature_weight(vec3::dot(&yq, &yq), p, delta) * w * em.area();
                for a in 0..3 {
                    b[a] = vec3::add(&b[a], &vec3::scalef(&yq, s * l[a]));
                }
            }
            b
        })
        .collect();
    let n = m.vertex_count();
    let mut rhs = vec![[0.0; 3]; n];
    for (f, b) in m.faces().iter().zip(&local) {
        for a in 0..3 {
            rhs[f[a]] = vec3::add(&rhs[f[a]], &b[a]);
        }
    }
    let (mm, _) = mass_stiffness(m)?;
    let lu = mm.factor()?;
    let mut w = vec![[0.0; 3]; n];
    for k in 0..3 {
        let r: Vec<f64> = rhs.iter().map(|v| v[k]).collect();
        for (wi, s) in w.iter_mut().zip(lu.solve(&r)?) {
            wi[k] = s;
        }
    }
    NodalField::new(w)
}

/// `∫ |Y|^p`; for `p = 0` this is exactly [`surface_area`].
pub fn p_willmore_energy(m: &Mesh, y: &NodalField, p: u32) -> Result<f64> {
    p_willmore_energy_with(m, y, p, DEFAULT_QUADRATURE_DEGREE)
}

pub fn p_willmore_energy_with(m: &Mesh, y: &NodalField, p: u32, degree: usize) -> Result<f64> {
    if p == 0 {
        return surface_area(m);
    }
    if y.len() != m.vertex_count() {
        return Err(Error::InvalidParameter("curvature field does not match the mesh".into()));
    }
    let rule = cached_rule(degree)?;
    let metrics = mesh_metrics(m)?;
    let parts: Vec<f64> = m
        .faces()
        .par_iter()
        .zip(&metrics)
        .map(|(f, em)| em.area() * face_power_mean(rule, &f.map(|i| y.values[i]), p))
        .collect();
    Ok(parts.iter().sum())
}

/// `Σ_q w_q |Y_q|^p` on one face.
fn face_power_mean(rule: &QuadratureRule, ys: &[Vec3; 3], p: u32) -> f64 {
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(l, w)| w * vec3::norm(&interpolate(l, ys)).powi(p as i32))
        .sum()
}

/// Complex structure of a reference metric: columns are `J e_1`, `J e_2`.
#[inline]
pub fn complex_structure(g: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let s = (g[0][0] * g[1][1] - g[0][1] * g[0][1]).sqrt();
    // j[k][i] = k-th component of J e_i
    [[-g[0][1] / s, -g[1][1] / s], [g[0][0] / s, g[0][1] / s]]
}

/// The conformality defect vectors `A_i = dX(J e_i) - N x X_i` of one face.
pub fn conformal_defect<T: Real>(x: &[Vec3<T>; 2], normal: &Vec3<T>, j: &[[f64; 2]; 2]) -> [Vec3<T>; 2] {
    let mut out = [vec3::zero(); 2];
    for i in 0..2 {
        let jx = vec3::add(&vec3::scalef(&x[0], j[0][i]), &vec3::scalef(&x[1], j[1][i]));
        out[i] = vec3::sub(&jx, &vec3::cross(normal, &x[i]));
    }
    out
}

/// Conformal distortion density `(1/4) g^ij <A_i, A_j>` times the reference area.
pub fn face_conformal_distortion<T: Real>(p: &[Vec3<T>; 3], normal: &Vec3<T>, r: &ReferenceMetric) -> T {
    let x = [vec3::sub(&p[1], &p[0]), vec3::sub(&p[2], &p[0])];
    let a = conformal_defect(&x, normal, &complex_structure(&r.g));
    let gi = r.inverse();
    let mut s = T::zero();
    for i in 0..2 {
        for k in 0..2 {
            s += vec3::dot(&a[i], &a[k]) * gi[i][k];
        }
    }
    s * (0.25 * r.area())
}

/// `(1/2) ∫ |du J - N x du|^2` against per-face reference metrics, with `g`, `J`
/// and the measure taken from the reference and `du`, `N` from the mesh.
pub fn conformal_distortion(m: &Mesh, refs: &[ReferenceMetric]) -> Result<f64> {
    if refs.len() != m.face_count() {
        return Err(Error::InvalidParameter(format!(
            "{} reference metrics for {} faces",
            refs.len(),
            m.face_count()
        )));
    }
    for (f, r) in refs.iter().enumerate() {
        r.check(f)?;
    }
    let metrics = mesh_metrics(m)?;
    let parts: Vec<f64> = (0..m.face_count())
        .into_par_iter()
        .map(|f| face_conformal_distortion(&m.face_points(f), &metrics[f].normal, &refs[f]))
        .collect();
    Ok(parts.iter().sum())
}

/// Total mass `Σ_i (M v)_i` per component; zero for `v = Y` on any closed mesh.
pub fn mass_weighted_sum(m: &Mesh, v: &NodalField) -> Result<Vec3> {
    let (mm, _) = mass_stiffness(m)?;
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let c: Vec<f64> = v.values.iter().map(|x| x[k]).collect();
        *o = mm.matvec(&c).iter().sum();
    }
    Ok(out)
}

/// Face normals of a mesh.
pub fn face_normals(m: &Mesh) -> Result<Vec<Vec3>> {
    Ok(mesh_metrics(m)?.iter().map(|e| e.normal).collect())
}

/// Area-weighted vertex normals built from face normals.
pub fn vertex_normals(m: &Mesh) -> Result<Vec<Vec3>> {
    let metrics = fem::mesh_metrics(m)?;
    let mut n = vec![[0.0; 3]; m.vertex_count()];
    for (f, em) in m.faces().iter().zip(&metrics) {
        for &i in f {
            n[i] = vec3::add(&n[i], &vec3::scalef(&em.normal, em.area()));
        }
    }
    Ok(n.iter().map(|x| vec3::scalef(x, 1.0 / vec3::norm(x))).collect())
}
