//! Conformal-penalty mesh regularization.
//!
//! Reference angles are derived from the mesh by valence rescaling, turned into
//! per-face reference metrics of unchanged area, and the mesh is moved to
//! reduce its conformal distortion against them while a penalized multiplier
//! `ρ` keeps the motion tangential in a weak sense.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::autodiff::{Dual, Real};
use crate::error::{Error, Result};
use crate::fem::{mesh_metrics, DofMap, Field, SparseMatrix, MASS};
use crate::geometry::{complex_structure, conformal_defect, conformal_distortion};
use crate::mesh::{min_face_quality, require_valid_surface, vertex_valences, Mesh};
use crate::vec3::{self, Vec3};

/// Relative tolerance for detecting ties between the largest scaled angles.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Target corner angles, one triple per face in face-vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceAngles {
    pub angles: Vec<[f64; 3]>,
}

/// Per-face reference first fundamental form under the P1 parametrization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceMetric {
    pub g: [[f64; 2]; 2],
}

impl ReferenceMetric {
    pub fn det(&self) -> f64 {
        self.g[0][0] * self.g[1][1] - self.g[0][1] * self.g[1][0]
    }

    pub fn inverse(&self) -> [[f64; 2]; 2] {
        let d = self.det();
        [[self.g[1][1] / d, -self.g[0][1] / d], [-self.g[1][0] / d, self.g[0][0] / d]]
    }

    /// Area of the reference triangle.
    pub fn area(&self) -> f64 {
        0.5 * self.det().sqrt()
    }

    pub fn is_spd(&self) -> bool {
        self.g[0][0] > 0.0
            && self.det() > 0.0
            && self.g[0][1] == self.g[1][0]
            && self.g.iter().flatten().all(|x| x.is_finite())
    }

    pub(crate) fn check(&self, element: usize) -> Result<()> {
        if self.is_spd() {
            Ok(())
        } else {
            Err(Error::NonSpdMetric { element })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegularizeMode {
    Off,
    Linear,
    #[default]
    Nonlinear,
}

impl FromStr for RegularizeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(RegularizeMode::Off),
            "linear" => Ok(RegularizeMode::Linear),
            "nonlinear" => Ok(RegularizeMode::Nonlinear),
            _ => Err(Error::InvalidParameter(format!(
                "unknown regularization mode '{s}' (expected off, linear or nonlinear)"
            ))),
        }
    }
}

impl fmt::Display for RegularizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegularizeMode::Off => "off",
            RegularizeMode::Linear => "linear",
            RegularizeMode::Nonlinear => "nonlinear",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizeConfig {
    pub epsilon: f64,
    pub mode: RegularizeMode,
    /// Newton iterations in nonlinear mode.
    pub newton_iters: usize,
    /// Recompute reference angles from the current mesh at every flow step
    /// instead of keeping those of the initial mesh.
    pub recompute_angles: bool,
}

impl Default for RegularizeConfig {
    fn default() -> Self {
        RegularizeConfig {
            epsilon: 1e-5,
            mode: RegularizeMode::Nonlinear,
            newton_iters: 2,
            recompute_angles: false,
        }
    }
}

impl RegularizeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.mode == RegularizeMode::Nonlinear && self.newton_iters == 0 {
            return Err(Error::InvalidParameter("nonlinear regularization needs newton_iters >= 1".into()));
        }
        Ok(())
    }
}

/// Outcome of one regularization solve.
#[derive(Debug, Clone)]
pub struct RegularizeReport {
    pub mesh: Mesh,
    /// Nodal multiplier `ρ` (zero when the step was skipped).
    pub rho: Vec<f64>,
    pub cd_before: f64,
    pub cd_after: f64,
    pub quality_before: f64,
    pub quality_after: f64,
    /// `|| ∫ψ<û-u,Ñ> + ε∫ψρ ||` divided by the larger of its two terms and one.
    pub normal_residual: f64,
    pub max_displacement: f64,
    /// False when the result would have increased the distortion or degenerated
    /// the mesh, in which case `mesh` is the input mesh.
    pub accepted: bool,
}

/// Corner angles of a triangle.
pub fn triangle_angles(p: &[Vec3; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let e1 = vec3::sub(&p[(k + 1) % 3], &p[k]);
        let e2 = vec3::sub(&p[(k + 2) % 3], &p[k]);
        *o = vec3::norm(&vec3::cross(&e1, &e2)).atan2(vec3::dot(&e1, &e2));
    }
    out
}

/// Closes a triple of valence-scaled angles to sum `π`: a unique largest angle
/// is kept and the other two share the remainder proportionally; otherwise all
/// three are scaled proportionally.
pub fn close_scaled_angles(a: [f64; 3]) -> [f64; 3] {
    let imax = (0..3).fold(0, |m, i| if a[i] > a[m] { i } else { m });
    let max = a[imax];
    let unique = (0..3).filter(|&j| j != imax).all(|j| max - a[j] > TIE_TOLERANCE * max);
    let mut out = a;
    if unique {
        let rest: f64 = (0..3).filter(|&j| j != imax).map(|j| a[j]).sum();
        for j in (0..3).filter(|&j| j != imax) {
            out[j] = a[j] * (PI - max) / rest;
        }
    } else {
        let total: f64 = a.iter().sum();
        for o in &mut out {
            *o *= PI / total;
        }
    }
    out
}

/// Valence-rescaled reference angles of one face.
pub fn adjust_angles(angles: [f64; 3], valences: [usize; 3]) -> [f64; 3] {
    close_scaled_angles([0, 1, 2].map(|k| angles[k] / valences[k] as f64))
}

fn check_angles(face: usize, a: &[f64; 3]) -> Result<()> {
    let ok = a.iter().all(|&x| x > 0.0 && x < PI && x.is_finite()) && (a.iter().sum::<f64>() - PI).abs() <= 1e-12;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidAngles { face, angles: *a })
    }
}

pub fn reference_angles(m: &Mesh) -> Result<ReferenceAngles> {
    mesh_metrics(m)?;
    let val = vertex_valences(m);
    let angles = m
        .faces()
        .iter()
        .enumerate()
        .map(|(fi, f)| {
            let a = adjust_angles(triangle_angles(&m.face_points(fi)), f.map(|i| val[i]));
            check_angles(fi, &a).map(|_| a)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReferenceAngles { angles })
}

/// Metric of a planar triangle with corner angles `a` and the given area, laid
/// out by the law of sines: `|X_1| ∝ sin a_2`, `|X_2| ∝ sin a_1`, angle `a_0`.
pub fn reference_metric(a: [f64; 3], area: f64) -> ReferenceMetric {
    let s = a.map(f64::sin);
    let scale = 2.0 * area / (s[0] * s[1] * s[2]);
    let g12 = scale * s[1] * s[2] * a[0].cos();
    ReferenceMetric {
        g: [[scale * s[2] * s[2], g12], [g12, scale * s[1] * s[1]]],
    }
}

/// Reference metrics realizing `angles` with the current face areas.
pub fn reference_metrics(m: &Mesh, angles: &ReferenceAngles) -> Result<Vec<ReferenceMetric>> {
    if angles.angles.len() != m.face_count() {
        return Err(Error::InvalidParameter(format!(
            "{} angle triples for {} faces",
            angles.angles.len(),
            m.face_count()
        )));
    }
    let metrics = mesh_metrics(m)?;
    angles
        .angles
        .iter()
        .zip(&metrics)
        .enumerate()
        .map(|(f, (a, em))| {
            check_angles(f, a)?;
            let r = reference_metric(*a, em.area());
            r.check(f).map(|_| r)
        })
        .collect()
}

/// The per-face tensor `Q̂` as its two columns `Q_1, Q_2`, such that the first
/// variation of the face distortion in direction `φ` is
/// `area_ref Σ_k <Q_k, φ_k - φ_0>`. `normal` is held fixed.
pub fn conformal_q<T: Real>(p: &[Vec3<T>; 3], normal: &Vec3<T>, r: &ReferenceMetric) -> [Vec3<T>; 2] {
    let x = [vec3::sub(&p[1], &p[0]), vec3::sub(&p[2], &p[0])];
    let j = complex_structure(&r.g);
    let a = conformal_defect(&x, normal, &j);
    let gi = r.inverse();
    let mut q = [vec3::zero(); 2];
    for (k, qk) in q.iter_mut().enumerate() {
        for i in 0..2 {
            for l in 0..2 {
                *qk = vec3::add(qk, &vec3::scalef(&a[l], gi[i][l] * j[k][i]));
            }
            *qk = vec3::add(qk, &vec3::scalef(&vec3::cross(normal, &a[i]), gi[k][i]));
        }
        *qk = vec3::scalef(qk, 0.5);
    }
    q
}

/// Reference-coordinate derivatives of the hat functions: `∂_k φ_a`.
const HAT_DERIVS: [[f64; 3]; 2] = [[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]];

/// Assembled nodal gradient `Σ ∫<Q̂, dφ_a>` of the conformal distortion.
pub fn conformal_gradient(m: &Mesh, refs: &[ReferenceMetric]) -> Result<Vec<Vec3>> {
    let metrics = mesh_metrics(m)?;
    if refs.len() != m.face_count() {
        return Err(Error::InvalidParameter("reference metric count does not match faces".into()));
    }
    for (f, r) in refs.iter().enumerate() {
        r.check(f)?;
    }
    let local: Vec<[Vec3; 3]> = (0..m.face_count())
        .into_par_iter()
        .map(|f| {
            let q = conformal_q(&m.face_points(f), &metrics[f].normal, &refs[f]);
            let mu = refs[f].area();
            [0, 1, 2].map(|a| {
                let v = vec3::add(&vec3::scalef(&q[0], HAT_DERIVS[0][a]), &vec3::scalef(&q[1], HAT_DERIVS[1][a]));
                vec3::scalef(&v, mu)
            })
        })
        .collect();
    let mut g = vec![[0.0; 3]; m.vertex_count()];
    for (f, l) in m.faces().iter().zip(&local) {
        for a in 0..3 {
            g[f[a]] = vec3::add(&g[f[a]], &l[a]);
        }
    }
    Ok(g)
}

/// One regularization of `m` using reference angles computed from `m` itself.
pub fn regularize_step(m: &Mesh, cfg: &RegularizeConfig) -> Result<Mesh> {
    let angles = reference_angles(m)?;
    Ok(regularize_with_angles(m, &angles, cfg)?.mesh)
}

/// One regularization of `m` against fixed reference angles.
pub fn regularize_with_angles(m: &Mesh, angles: &ReferenceAngles, cfg: &RegularizeConfig) -> Result<RegularizeReport> {
    cfg.validate()?;
    require_valid_surface(m)?;
    let refs = reference_metrics(m, angles)?;
    let cd_before = conformal_distortion(m, &refs)?;
    let quality_before = min_face_quality(m);
    let skipped = |normal_residual| RegularizeReport {
        mesh: m.clone(),
        rho: vec![0.0; m.vertex_count()],
        cd_before,
        cd_after: cd_before,
        quality_before,
        quality_after: quality_before,
        normal_residual,
        max_displacement: 0.0,
        accepted: false,
    };
    if cfg.mode == RegularizeMode::Off {
        return Ok(RegularizeReport {
            accepted: true,
            ..skipped(0.0)
        });
    }

    let problem = Problem::new(m, &refs, cfg)?;
    let nv = m.vertex_count();
    let mut x: Vec<f64> = m.vertices().iter().flatten().copied().chain(std::iter::repeat_n(0.0, nv)).collect();
    let iters = match cfg.mode {
        RegularizeMode::Linear => 1,
        _ => cfg.newton_iters,
    };
    for _ in 0..iters {
        let (r, jac) = problem.evaluate(&x)?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = jac.factor()?.solve(&neg)?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
    }
    let normal_residual = problem.normal_residual(&x)?;

    let verts: Vec<Vec3> = x[..3 * nv].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let rho = x[3 * nv..].to_vec();
    let new_mesh = m.with_vertices(verts);
    let cd_after = match require_valid_surface(&new_mesh).and_then(|_| conformal_distortion(&new_mesh, &refs)) {
        Ok(cd) => cd,
        Err(e) => {
            log::warn!("regularization produced an invalid mesh ({e}); keeping the input mesh");
            return Ok(skipped(normal_residual));
        }
    };
    if !(cd_after <= cd_before) {
        log::warn!("regularization would raise conformal distortion from {cd_before:.6e} to {cd_after:.6e}; keeping the input mesh");
        return Ok(skipped(normal_residual));
    }
    let max_displacement = m
        .vertices()
        .iter()
        .zip(new_mesh.vertices())
        .map(|(a, b)| vec3::dist(a, b))
        .fold(0.0, f64::max);
    Ok(RegularizeReport {
        quality_after: min_face_quality(&new_mesh),
        mesh: new_mesh,
        rho,
        cd_before,
        cd_after,
        quality_before,
        normal_residual,
        max_displacement,
        accepted: true,
    })
}

/// Discrete regularization system in the unknowns `(û, ρ)`.
struct Problem<'a> {
    mesh: &'a Mesh,
    refs: &'a [ReferenceMetric],
    normals: Vec<Vec3>,
    areas: Vec<f64>,
    epsilon: f64,
    central: bool,
    dofs: DofMap,
}

const NE: usize = 12;

impl<'a> Problem<'a> {
    fn new(mesh: &'a Mesh, refs: &'a [ReferenceMetric], cfg: &RegularizeConfig) -> Result<Self> {
        let metrics = mesh_metrics(mesh)?;
        let nv = mesh.vertex_count();
        Ok(Problem {
            mesh,
            refs,
            normals: metrics.iter().map(|e| e.normal).collect(),
            areas: metrics.iter().map(|e| e.area()).collect(),
            epsilon: cfg.epsilon,
            central: cfg.mode == RegularizeMode::Nonlinear,
            dofs: DofMap::new(&[(Field::U, nv, 3), (Field::Rho, nv, 1)]),
        })
    }

    fn element_dofs(&self, f: usize) -> [usize; NE] {
        let face = self.mesh.faces()[f];
        let mut d = [0; NE];
        for a in 0..3 {
            for k in 0..3 {
                d[3 * a + k] = self.dofs.index(Field::U, face[a], k).expect("vertex in range");
            }
            d[9 + a] = self.dofs.index(Field::Rho, face[a], 0).expect("vertex in range");
        }
        d
    }

    /// Element residual `[R_φ (9), R_ψ (3)]` and, separately, the two terms of `R_ψ`.
    fn element<T: Real>(&self, f: usize, z: &[T; NE]) -> ([T; NE], [[T; 3]; 2]) {
        let face = self.mesh.faces()[f];
        let old = face.map(|i| self.mesh.vertices()[i]);
        let uh: [Vec3<T>; 3] = [0, 1, 2].map(|a| [z[3 * a], z[3 * a + 1], z[3 * a + 2]]);
        let rho = [z[9], z[10], z[11]];
        let n_old = self.normals[f];
        let nt: Vec3<T> = if self.central {
            let x1 = vec3::sub(&uh[1], &uh[0]);
            let x2 = vec3::sub(&uh[2], &uh[0]);
            let c = vec3::cross(&x1, &x2);
            let nh = vec3::scale(&c, T::cst(1.0) / vec3::norm(&c));
            vec3::scalef(&vec3::add(&nh, &vec3::lift(&n_old)), 0.5)
        } else {
            vec3::lift(&n_old)
        };
        let area = self.areas[f];
        let q = conformal_q(&uh, &vec3::lift(&n_old), &self.refs[f]);
        let mu = self.refs[f].area();

        let mut r = [T::zero(); NE];
        let mut parts = [[T::zero(); 3]; 2];
        for a in 0..3 {
            let mut mrho = T::zero();
            for b in 0..3 {
                mrho += rho[b] * (area * MASS[a][b]);
            }
            for k in 0..3 {
                let qa = q[0][k] * HAT_DERIVS[0][a] + q[1][k] * HAT_DERIVS[1][a];
                r[3 * a + k] = mrho * nt[k] + qa * mu;
            }
            let mut disp = T::zero();
            for b in 0..3 {
                let v = vec3::sub(&uh[b], &vec3::lift(&old[b]));
                disp += vec3::dot(&v, &nt) * (area * MASS[a][b]);
            }
            parts[0][a] = disp;
            parts[1][a] = mrho * self.epsilon;
            r[9 + a] = disp + mrho * self.epsilon;
        }
        (r, parts)
    }

    fn gather(&self, f: usize, x: &[f64]) -> [f64; NE] {
        self.element_dofs(f).map(|i| x[i])
    }

    fn evaluate(&self, x: &[f64]) -> Result<(Vec<f64>, SparseMatrix)> {
        let local: Vec<([f64; NE], [[f64; NE]; NE])> = (0..self.mesh.face_count())
            .into_par_iter()
            .map(|f| {
                let xv = self.gather(f, x);
                let z: [Dual<NE>; NE] = std::array::from_fn(|i| Dual::variable(xv[i], i));
                let (r, _) = self.element(f, &z);
                (r.map(|v| v.v), r.map(|v| v.d))
            })
            .collect();
        let n = self.dofs.len();
        let mut res = vec![0.0; n];
        let mut trips = Vec::with_capacity(local.len() * NE * NE);
        for (f, (r, j)) in local.iter().enumerate() {
            let d = self.element_dofs(f);
            for a in 0..NE {
                res[d[a]] += r[a];
                for b in 0..NE {
                    if j[a][b] != 0.0 {
                        trips.push((d[a], d[b], j[a][b]));
                    }
                }
            }
        }
        if res.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite regularization residual".into()));
        }
        Ok((res, SparseMatrix::from_triplets(n, n, trips)?))
    }

    fn normal_residual(&self, x: &[f64]) -> Result<f64> {
        let nv = self.mesh.vertex_count();
        let mut parts = [vec![0.0; nv], vec![0.0; nv]];
        for f in 0..self.mesh.face_count() {
            let (_, p) = self.element(f, &self.gather(f, x));
            for (a, &v) in self.mesh.faces()[f].iter().enumerate() {
                parts[0][v] += p[0][a];
                parts[1][v] += p[1][a];
            }
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let sum: Vec<f64> = parts[0].iter().zip(&parts[1]).map(|(a, b)| a + b).collect();
        // same normalization as the linear solver contract
        Ok(norm(&sum) / norm(&parts[0]).max(norm(&parts[1])).max(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::element_metric_points;
    use crate::shapes;

    fn close3(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn equilateral_valence_six_stays_equilateral() {
        let a = adjust_angles([PI / 3.0; 3], [6, 6, 6]);
        assert!(close3(a, [PI / 3.0; 3], 1e-15));
    }

    #[test]
    fn unique_maximum_is_kept() {
        let a = adjust_angles([PI / 2.0, PI / 4.0, PI / 4.0], [4, 8, 8]);
        assert!(close3(a, [PI / 8.0, 7.0 * PI / 16.0, 7.0 * PI / 16.0], 1e-15));
        assert!((a.iter().sum::<f64>() - PI).abs() < 1e-12);
    }

    #[test]
    fn tied_maximum_scales_proportionally() {
        let a = close_scaled_angles([PI / 6.0, PI / 6.0, PI / 12.0]);
        assert!(close3(a, [2.0 * PI / 5.0, 2.0 * PI / 5.0, PI / 5.0], 1e-15));
    }

    #[test]
    fn reference_metric_examples() {
        let area = 0.37;
        let r = reference_metric([PI / 3.0; 3], area);
        let l2 = 4.0 * area / 3f64.sqrt();
        let want = [[l2, 0.5 * l2], [0.5 * l2, l2]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((r.g[i][j] - want[i][j]).abs() < 1e-12 * l2);
            }
        }
        let r = reference_metric([PI / 2.0, PI / 4.0, PI / 4.0], 0.5);
        assert!((r.g[0][0] - 1.0).abs() < 1e-12 && r.g[0][1].abs() < 1e-12 && (r.g[1][1] - 1.0).abs() < 1e-12);

        let p = [[0.1, 0.2, -0.3], [1.3, 0.1, 0.2], [0.4, 1.1, 0.5]];
        let em = element_metric_points(&p);
        let r = reference_metric(triangle_angles(&p), em.area());
        for i in 0..2 {
            for j in 0..2 {
                assert!((r.g[i][j] - em.g[i][j]).abs() < 1e-12 * em.g[0][0]);
            }
        }
        assert!((r.det().sqrt() - em.sqrt_det_g).abs() < 1e-12 * em.sqrt_det_g);
    }

    #[test]
    fn planar_identity_has_zero_q() {
        let p = [[0.0, 0.0, 0.0], [1.0, 0.2, 0.0], [0.3, 0.9, 0.0]];
        let em = element_metric_points(&p);
        let r = ReferenceMetric { g: em.g };
        let q = conformal_q(&p, &em.normal, &r);
        assert!(q.iter().flatten().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn q_matches_component_formula_for_conformal_reference() {
        // for g = c I the tensor is half the classical component expressions
        // built from V = dX(e2) - N x dX(e1) and W = dX(e1) + N x dX(e2)
        let c: f64 = 1.7;
        let r = ReferenceMetric { g: [[c, 0.0], [0.0, c]] };
        let p = [[0.1, 0.0, 0.2], [1.2, 0.3, -0.1], [0.2, 0.8, 0.4]];
        let n = element_metric_points(&p).normal;
        let x1 = vec3::sub(&p[1], &p[0]);
        let x2 = vec3::sub(&p[2], &p[0]);
        let v = vec3::sub(&x2, &vec3::cross(&n, &x1));
        let w = vec3::add(&x1, &vec3::cross(&n, &x2));
        let (g11, g22) = (1.0 / c, 1.0 / c);
        let q = conformal_q(&p, &n, &r);
        for i in 0..3 {
            let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
            let q1 = g22 * w[i] + g11 * (n[i1] * v[i2] - n[i2] * v[i1]);
            let q2 = g11 * v[i] + g22 * (n[i2] * w[i1] - n[i1] * w[i2]);
            assert!((q[0][i] - 0.5 * q1).abs() < 1e-12, "{} {}", q[0][i], q1);
            assert!((q[1][i] - 0.5 * q2).abs() < 1e-12, "{} {}", q[1][i], q2);
        }
    }

    #[test]
    fn regular_icosahedron_is_a_fixed_point() {
        let m = shapes::icosahedron(1.0);
        let rep = regularize_with_angles(&m, &reference_angles(&m).unwrap(), &RegularizeConfig::default()).unwrap();
        assert!(rep.max_displacement <= 1e-8);
    }

    #[test]
    fn off_mode_is_identity() {
        let m = shapes::jitter_tangential(&shapes::icosphere(1, 1.0), 0.1, 1);
        let cfg = RegularizeConfig {
            mode: RegularizeMode::Off,
            ..Default::default()
        };
        assert_eq!(regularize_step(&m, &cfg).unwrap(), m);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("linear".parse::<RegularizeMode>().unwrap(), RegularizeMode::Linear);
        assert!("fast".parse::<RegularizeMode>().is_err());
        assert!(RegularizeConfig {
            epsilon: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
