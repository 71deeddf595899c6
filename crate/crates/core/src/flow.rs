//! One time step of the constrained p-Willmore flow.
//!
//! The unknowns `(u, Y, W, λ, γ)` of the new time level solve a coupled
//! nonlinear system whose integrals live on the central surface
//! `(u^k + u^{k+1}) / 2`. The system is solved by a fixed number of Newton
//! iterations with exact element Jacobians from forward-mode dual numbers.

use rayon::prelude::*;

use crate::autodiff::{Dual, Real};
use crate::error::{Error, Result};
use crate::fem::{cached_rule, is_degenerate, DofMap, Field, Frame, QuadratureRule, SparseMatrix, MASS};
use crate::geometry::{curvature_delta, curvature_weight, mean_curvature_vector, weighted_curvature_with, CurvatureData, NodalField, DEFAULT_QUADRATURE_DEGREE};
use crate::mesh::{require_valid_surface, Mesh};
use crate::vec3::{self, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub p: u32,
    pub fix_area: bool,
    pub fix_volume: bool,
    pub tau0: f64,
    /// Factor applied to `τ` after every accepted step.
    pub scale_s: f64,
    pub tau_max: f64,
    pub newton_iters: usize,
    /// Relative residual above which a converged-looking step is reported.
    pub residual_tol: f64,
    pub quadrature_degree: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            p: 2,
            fix_area: false,
            fix_volume: false,
            tau0: 1e-4,
            scale_s: 1.0,
            tau_max: 1e-4,
            newton_iters: 2,
            residual_tol: 1e-8,
            quadrature_degree: DEFAULT_QUADRATURE_DEGREE,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.p == 0 && self.fix_area {
            return bad("p = 0 with fixed area: area preservation makes no sense in this context".into());
        }
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return bad(format!("tau0 must be positive, got {}", self.tau0));
        }
        if !(self.tau_max >= self.tau0 && self.tau_max.is_finite()) {
            return bad(format!("tau_max ({}) must be at least tau0 ({})", self.tau_max, self.tau0));
        }
        if !(self.scale_s >= 1.0 && self.scale_s.is_finite()) {
            return bad(format!("scale factor must be >= 1, got {}", self.scale_s));
        }
        if self.newton_iters == 0 {
            return bad("newton_iters must be at least 1".into());
        }
        cached_rule(self.quadrature_degree)?;
        Ok(())
    }
}

/// A point on a flow trajectory.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub mesh: Mesh,
    pub y: NodalField,
    pub w: NodalField,
    /// Volume multiplier.
    pub lambda: f64,
    /// Area multiplier.
    pub gamma: f64,
    pub t: f64,
    /// Step size for the next step.
    pub tau: f64,
    pub step: usize,
    /// Final Newton residual of the step that produced this state, relative
    /// to the residual of the initial guess.
    pub newton_residual: f64,
}

impl FlowState {
    /// Initial state: validates the mesh and computes its curvature.
    pub fn new(mesh: Mesh, cfg: &FlowConfig) -> Result<Self> {
        cfg.validate()?;
        require_valid_surface(&mesh)?;
        let c = init_curvature_with(&mesh, cfg.p, cfg.quadrature_degree)?;
        Ok(FlowState {
            mesh,
            y: c.y,
            w: c.w,
            lambda: 0.0,
            gamma: 0.0,
            t: 0.0,
            tau: cfg.tau0,
            step: 0,
            newton_residual: 0.0,
        })
    }

    /// Same time and step data on a replaced mesh, with recomputed curvature.
    pub fn with_mesh(&self, mesh: Mesh, cfg: &FlowConfig) -> Result<Self> {
        let c = init_curvature_with(&mesh, cfg.p, cfg.quadrature_degree)?;
        Ok(FlowState {
            mesh,
            y: c.y,
            w: c.w,
            ..self.clone()
        })
    }
}

/// Curvature data of `mesh`; `W` is zero for `p = 0`.
pub fn init_curvature(mesh: &Mesh, p: u32) -> Result<CurvatureData> {
    init_curvature_with(mesh, p, DEFAULT_QUADRATURE_DEGREE)
}

pub fn init_curvature_with(mesh: &Mesh, p: u32, degree: usize) -> Result<CurvatureData> {
    let y = mean_curvature_vector(mesh)?;
    let w = if p == 0 {
        NodalField::zeros(mesh.vertex_count())
    } else {
        weighted_curvature_with(mesh, &y, p, degree)?
    };
    Ok(CurvatureData { y, w })
}

/// Equation blocks of the flow residual, in stacking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    Curvature,
    Weighted,
    Area,
    Volume,
    Motion,
}

/// Row and column layout of the flow system for a given configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowLayout {
    pub dofs: DofMap,
    nv: usize,
    has_w: bool,
    fix_area: bool,
    fix_volume: bool,
}

impl FlowLayout {
    pub fn new(nv: usize, cfg: &FlowConfig) -> Self {
        let has_w = cfg.p >= 1;
        let mut layout = vec![(Field::U, nv, 3), (Field::Y, nv, 3)];
        if has_w {
            layout.push((Field::W, nv, 3));
        }
        if cfg.fix_volume {
            layout.push((Field::Lambda, 1, 1));
        }
        if cfg.fix_area {
            layout.push((Field::Gamma, 1, 1));
        }
        FlowLayout {
            dofs: DofMap::new(&layout),
            nv,
            has_w,
            fix_area: cfg.fix_area,
            fix_volume: cfg.fix_volume,
        }
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    /// First row and row count of an equation block, if present.
    pub fn rows(&self, eq: Equation) -> Option<(usize, usize)> {
        let n3 = 3 * self.nv;
        let mut start = 0;
        for (e, present, len) in [
            (Equation::Curvature, true, n3),
            (Equation::Weighted, self.has_w, n3),
            (Equation::Area, self.fix_area, 1),
            (Equation::Volume, self.fix_volume, 1),
            (Equation::Motion, true, n3),
        ] {
            if !present {
                continue;
            }
            if e == eq {
                return Some((start, len));
            }
            start += len;
        }
        None
    }
}

/// Euclidean norms of the residual blocks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualNorms {
    pub curvature: f64,
    pub weighted: f64,
    pub area: f64,
    pub volume: f64,
    pub motion: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResidual {
    pub values: Vec<f64>,
    pub norms: ResidualNorms,
}

/// Newton starting point: the old fields with zero multipliers.
pub fn initial_trial(old: &FlowState, cfg: &FlowConfig) -> Vec<f64> {
    let layout = FlowLayout::new(old.mesh.vertex_count(), cfg);
    let mut x = vec![0.0; layout.len()];
    let put = |x: &mut Vec<f64>, f: Field, v: &[Vec3]| {
        let o = layout.dofs.offset(f).expect("field present");
        for (i, p) in v.iter().enumerate() {
            x[o + 3 * i..o + 3 * i + 3].copy_from_slice(p);
        }
    };
    put(&mut x, Field::U, old.mesh.vertices());
    put(&mut x, Field::Y, old.y.values());
    if layout.has_w {
        put(&mut x, Field::W, old.w.values());
    }
    x
}

// local unknown slots of one element
const NL: usize = 29;
const U1: usize = 0;
const Y1: usize = 9;
const W1: usize = 18;
const LAM: usize = 27;
const GAM: usize = 28;
const Y_SLOTS: [usize; 9] = [9, 10, 11, 12, 13, 14, 15, 16, 17];

/// Local residual rows of one element.
#[derive(Debug, Clone, Copy)]
struct Local<T> {
    a: [T; 9],
    b: [T; 9],
    c: T,
    d: T,
    e: [T; 9],
}

struct System<'a> {
    old: &'a FlowState,
    layout: FlowLayout,
    p: u32,
    tau: f64,
    delta: f64,
    rule: &'static QuadratureRule,
}

impl<'a> System<'a> {
    fn new(old: &'a FlowState, cfg: &FlowConfig) -> Result<Self> {
        Ok(System {
            old,
            layout: FlowLayout::new(old.mesh.vertex_count(), cfg),
            p: cfg.p,
            tau: old.tau,
            delta: curvature_delta(&old.mesh),
            rule: cached_rule(cfg.quadrature_degree)?,
        })
    }

    /// Global column of each local unknown, `None` for absent fields.
    fn columns(&self, f: usize) -> [Option<usize>; NL] {
        let face = self.old.mesh.faces()[f];
        let d = &self.layout.dofs;
        let mut c = [None; NL];
        for a in 0..3 {
            for k in 0..3 {
                c[U1 + 3 * a + k] = d.index(Field::U, face[a], k);
                c[Y1 + 3 * a + k] = d.index(Field::Y, face[a], k);
                c[W1 + 3 * a + k] = d.index(Field::W, face[a], k);
            }
        }
        c[LAM] = d.index(Field::Lambda, 0, 0);
        c[GAM] = d.index(Field::Gamma, 0, 0);
        c
    }

    fn gather(&self, f: usize, x: &[f64]) -> [f64; NL] {
        self.columns(f).map(|c| c.map_or(0.0, |i| x[i]))
    }

    fn old_nodes(&self, f: usize) -> [[Vec3; 3]; 3] {
        let face = self.old.mesh.faces()[f];
        [
            face.map(|i| self.old.mesh.vertices()[i]),
            face.map(|i| self.old.y.values()[i]),
            face.map(|i| self.old.w.values()[i]),
        ]
    }

    /// Quadrature moments of `Y^{k+1/2}`: `Σ w_q |Y_q|^p` and
    /// `Σ w_q φ_a(q) |Y_q|^(p-2) Y_q` per vertex `a`.
    fn moments<T: Real>(&self, yh: &[Vec3<T>; 3]) -> (T, [Vec3<T>; 3]) {
        let mut sbar = T::zero();
        let mut b = [vec3::zero(); 3];
        for (l, &wq) in self.rule.points.iter().zip(&self.rule.weights) {
            let mut yq: Vec3<T> = vec3::zero();
            for a in 0..3 {
                yq = vec3::add(&yq, &vec3::scalef(&yh[a], l[a]));
            }
            let y2 = vec3::dot(&yq, &yq);
            let w = curvature_weight(y2, self.p, self.delta);
            sbar += w * y2 * wq;
            let wy = vec3::scale(&yq, w);
            for a in 0..3 {
                b[a] = vec3::add(&b[a], &vec3::scalef(&wy, wq * l[a]));
            }
        }
        (sbar, b)
    }

    fn moments_f64(&self, y1: &[f64; NL], y0: &[Vec3; 3]) -> (f64, [Vec3; 3]) {
        let yh = [0, 1, 2].map(|a| [0, 1, 2].map(|k| 0.5 * (y0[a][k] + y1[Y1 + 3 * a + k])));
        self.moments(&yh)
    }

    fn moments_dual(&self, y1: &[f64; NL], y0: &[Vec3; 3]) -> (Dual<NL>, [Vec3<Dual<NL>>; 3]) {
        let yh: [Vec3<Dual<9>>; 3] = [0, 1, 2].map(|a| {
            [0, 1, 2].map(|k| (Dual::variable(y1[Y1 + 3 * a + k], 3 * a + k) + y0[a][k]) * 0.5)
        });
        let (s, b) = self.moments(&yh);
        let lift = |d: &Dual<9>| Dual::<NL>::lift(d, &Y_SLOTS);
        (lift(&s), b.map(|v| v.map(|d| lift(&d))))
    }

    fn element<T: Real>(&self, f: usize, z: &[T; NL], mom: Option<(T, [Vec3<T>; 3])>) -> Local<T> {
        let [u0, y0, w0] = self.old_nodes(f);
        let node = |base: usize, a: usize| -> Vec3<T> { [z[base + 3 * a], z[base + 3 * a + 1], z[base + 3 * a + 2]] };
        let u1 = [0, 1, 2].map(|a| node(U1, a));
        let y1 = [0, 1, 2].map(|a| node(Y1, a));
        let w1 = [0, 1, 2].map(|a| node(W1, a));
        let x = [0, 1, 2].map(|a| vec3::scalef(&vec3::add(&u1[a], &vec3::lift(&u0[a])), 0.5));
        let dlt = [0, 1, 2].map(|a| vec3::sub(&u1[a], &vec3::lift(&u0[a])));
        let fr = Frame::new(&x);
        let area = fr.area;
        let s = fr.grad_products();
        let k_ab = |a: usize, b: usize| s[a][b] * area;
        let m_ab = |a: usize, b: usize| area * MASS[a][b];

        let zero = T::zero();
        let mut out = Local {
            a: [zero; 9],
            b: [zero; 9],
            c: zero,
            d: zero,
            e: [zero; 9],
        };

        // (a) curvature
        for a in 0..3 {
            for b in 0..3 {
                let yh = vec3::scalef(&vec3::add(&y1[b], &vec3::lift(&y0[b])), 0.5);
                for k in 0..3 {
                    out.a[3 * a + k] += m_ab(a, b) * yh[k] + k_ab(a, b) * u1[b][k];
                }
            }
        }

        // (c) area and (d) volume constraints
        if self.layout.fix_area {
            for a in 0..3 {
                for b in 0..3 {
                    out.c += k_ab(a, b) * vec3::dot(&x[a], &dlt[b]);
                }
            }
        }
        if self.layout.fix_volume {
            let mean = vec3::scalef(&vec3::add(&vec3::add(&dlt[0], &dlt[1]), &dlt[2]), 1.0 / 3.0);
            out.d = area * vec3::dot(&mean, &fr.normal);
        }

        // (e) motion: time, volume and area multiplier terms
        let lam = z[LAM];
        let gam = z[GAM];
        let inv_tau = 1.0 / self.tau;
        // c_a = Σ_b S_ab x_b, so that <du, dφ_a e_k> = c_a[k]
        let c = [0, 1, 2].map(|a| {
            let mut v = vec3::zero();
            for b in 0..3 {
                v = vec3::add(&v, &vec3::scale(&x[b], s[a][b]));
            }
            v
        });
        for a in 0..3 {
            for k in 0..3 {
                let mut r = zero;
                for b in 0..3 {
                    r += m_ab(a, b) * dlt[b][k] * inv_tau;
                }
                if self.layout.fix_volume {
                    r += lam * area * fr.normal[k] * (1.0 / 3.0);
                }
                if self.layout.fix_area {
                    r += gam * area * c[a][k];
                }
                out.e[3 * a + k] = r;
            }
        }

        if self.p == 0 {
            for a in 0..3 {
                for b in 0..3 {
                    for k in 0..3 {
                        out.e[3 * a + k] += k_ab(a, b) * u1[b][k];
                    }
                }
            }
            return out;
        }

        let p = self.p as f64;
        let (sbar, bq) = mom.expect("moments are needed for p >= 1");
        let wh = [0, 1, 2].map(|a| vec3::scalef(&vec3::add(&w1[a], &vec3::lift(&w0[a])), 0.5));

        // (b) weighted curvature
        for a in 0..3 {
            for k in 0..3 {
                let mut r = zero;
                for b in 0..3 {
                    r += m_ab(a, b) * wh[b][k];
                }
                out.b[3 * a + k] = r - area * bq[a][k];
            }
        }

        // div W discretized as <du, dW>
        let mut div_w = zero;
        for b in 0..3 {
            for cc in 0..3 {
                div_w += s[b][cc] * vec3::dot(&x[cc], &wh[b]);
            }
        }
        // surface gradients of the old position and curvature components
        let grad_of = |vals: &[Vec3; 3], comp: usize| -> Vec3<T> {
            let mut g = vec3::zero();
            for b in 0..3 {
                g = vec3::add(&g, &vec3::scalef(&fr.grads[b], vals[b][comp]));
            }
            g
        };
        let du = [0, 1, 2].map(|g| grad_of(&u0, g));
        let dw = [0, 1, 2].map(|g| grad_of(&w0, g));

        for a in 0..3 {
            let ga = &fr.grads[a];
            let mut explicit: Vec3<T> = vec3::zero();
            for g in 0..3 {
                let t1 = vec3::scale(&du[g], vec3::dot(ga, &dw[g]));
                let t2 = vec3::scale(&dw[g], vec3::dot(&du[g], ga));
                explicit = vec3::add(&explicit, &vec3::add(&t1, &t2));
            }
            let coef = area * (sbar * (1.0 - p) - div_w * p);
            for k in 0..3 {
                let mut r = coef * c[a][k] + area * explicit[k] * p;
                for b in 0..3 {
                    r -= k_ab(a, b) * w1[b][k] * p;
                }
                out.e[3 * a + k] += r;
            }
        }
        out
    }

    /// Global row of each local residual entry, in `Local` order (a, b, c, d, e).
    fn rows(&self, f: usize) -> Vec<Option<usize>> {
        let face = self.old.mesh.faces()[f];
        let block = |eq: Equation| -> [Option<usize>; 9] {
            let start = self.layout.rows(eq).map(|r| r.0);
            std::array::from_fn(|i| start.map(|s| s + 3 * face[i / 3] + i % 3))
        };
        let mut r = Vec::with_capacity(29);
        r.extend(block(Equation::Curvature));
        r.extend(block(Equation::Weighted));
        r.push(self.layout.rows(Equation::Area).map(|r| r.0));
        r.push(self.layout.rows(Equation::Volume).map(|r| r.0));
        r.extend(block(Equation::Motion));
        r
    }

    fn check_central(&self, x: &[f64]) -> Result<()> {
        let o = self.layout.dofs.offset(Field::U).expect("u present");
        for (f, face) in self.old.mesh.faces().iter().enumerate() {
            let p = face.map(|i| {
                let u0 = self.old.mesh.vertices()[i];
                [0, 1, 2].map(|k| 0.5 * (u0[k] + x[o + 3 * i + k]))
            });
            if is_degenerate(&p) {
                return Err(Error::DegenerateElement { element: f });
            }
        }
        Ok(())
    }

    fn residual(&self, x: &[f64]) -> Result<FlowResidual> {
        self.check_valid_trial(x)?;
        let p = self.p;
        let local: Vec<Local<f64>> = (0..self.old.mesh.face_count())
            .into_par_iter()
            .map(|f| {
                let z = self.gather(f, x);
                let mom = (p >= 1).then(|| self.moments_f64(&z, &self.old_nodes(f)[1]));
                self.element(f, &z, mom)
            })
            .collect();
        let mut values = vec![0.0; self.layout.len()];
        for (f, l) in local.iter().enumerate() {
            let flat = flatten(l);
            for (r, v) in self.rows(f).iter().zip(&flat) {
                if let Some(r) = r {
                    values[*r] += v;
                }
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite flow residual".into()));
        }
        let block_norm = |eq| {
            self.layout
                .rows(eq)
                .map_or(0.0, |(s, n)| values[s..s + n].iter().map(|v| v * v).sum::<f64>().sqrt())
        };
        let norms = ResidualNorms {
            curvature: block_norm(Equation::Curvature),
            weighted: block_norm(Equation::Weighted),
            area: block_norm(Equation::Area),
            volume: block_norm(Equation::Volume),
            motion: block_norm(Equation::Motion),
            total: values.iter().map(|v| v * v).sum::<f64>().sqrt(),
        };
        Ok(FlowResidual { values, norms })
    }

    fn jacobian(&self, x: &[f64]) -> Result<SparseMatrix> {
        self.check_valid_trial(x)?;
        let p = self.p;
        let local: Vec<Local<Dual<NL>>> = (0..self.old.mesh.face_count())
            .into_par_iter()
            .map(|f| {
                let zv = self.gather(f, x);
                let z: [Dual<NL>; NL] = std::array::from_fn(|i| Dual::variable(zv[i], i));
                let mom = (p >= 1).then(|| self.moments_dual(&zv, &self.old_nodes(f)[1]));
                self.element(f, &z, mom)
            })
            .collect();
        let mut trips = Vec::new();
        for (f, l) in local.iter().enumerate() {
            let cols = self.columns(f);
            let flat = flatten(l);
            for (r, v) in self.rows(f).iter().zip(&flat) {
                let Some(r) = *r else { continue };
                for (j, c) in cols.iter().enumerate() {
                    if let Some(c) = c {
                        if v.d[j] != 0.0 {
                            trips.push((r, *c, v.d[j]));
                        }
                    }
                }
            }
        }
        let n = self.layout.len();
        SparseMatrix::from_triplets(n, n, trips)
    }

    fn check_valid_trial(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.layout.len() {
            return Err(Error::InvalidParameter(format!(
                "trial vector has {} entries, system has {}",
                x.len(),
                self.layout.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite trial vector".into()));
        }
        self.check_central(x)
    }
}

fn flatten<T: Copy>(l: &Local<T>) -> Vec<T> {
    let mut v = Vec::with_capacity(29);
    v.extend_from_slice(&l.a);
    v.extend_from_slice(&l.b);
    v.push(l.c);
    v.push(l.d);
    v.extend_from_slice(&l.e);
    v
}

/// Residual of the discrete flow equations at `trial`, with `τ = old.tau`.
pub fn assemble_flow_residual(old: &FlowState, trial: &[f64], cfg: &FlowConfig) -> Result<FlowResidual> {
    System::new(old, cfg)?.residual(trial)
}

/// Exact Jacobian of [`assemble_flow_residual`] with respect to the trial vector.
pub fn flow_jacobian(old: &FlowState, trial: &[f64], cfg: &FlowConfig) -> Result<SparseMatrix> {
    System::new(old, cfg)?.jacobian(trial)
}

/// Outcome of [`newton_solve`].
#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub x: Vec<f64>,
    pub initial: ResidualNorms,
    pub last: ResidualNorms,
}

/// Runs `cfg.newton_iters` Newton iterations from [`initial_trial`]; fails if
/// the residual grows or any iterate leaves the admissible set.
pub fn newton_solve(old: &FlowState, cfg: &FlowConfig) -> Result<NewtonResult> {
    let sys = System::new(old, cfg)?;
    let mut x = initial_trial(old, cfg);
    let r0 = sys.residual(&x)?;
    let mut r = r0.clone();
    for it in 0..cfg.newton_iters {
        let jac = sys.jacobian(&x)?;
        let neg: Vec<f64> = r.values.iter().map(|v| -v).collect();
        let dx = jac.factor()?.solve(&neg)?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        let next = sys.residual(&x)?;
        if next.norms.total > r.norms.total && next.norms.total > 1e-12 * r0.norms.total {
            return Err(Error::InvalidParameter(format!(
                "Newton residual grew from {:.3e} to {:.3e} in iteration {}",
                r.norms.total,
                next.norms.total,
                it + 1
            )));
        }
        r = next;
    }
    Ok(NewtonResult {
        x,
        initial: r0.norms,
        last: r.norms,
    })
}

/// Mesh at the new time level from a solved trial vector.
pub fn trial_mesh(old: &FlowState, x: &[f64]) -> Mesh {
    let nv = old.mesh.vertex_count();
    old.mesh
        .with_vertices(x[..3 * nv].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
}

fn attempt(old: &FlowState, cfg: &FlowConfig) -> Result<FlowState> {
    let sol = newton_solve(old, cfg)?;
    let mesh = trial_mesh(old, &sol.x);
    require_valid_surface(&mesh)?;
    for f in 0..mesh.face_count() {
        let n0 = Frame::new(&old.mesh.face_points(f)).normal;
        let n1 = Frame::new(&mesh.face_points(f)).normal;
        if vec3::dot(&n0, &n1) <= 0.0 {
            return Err(Error::InvalidParameter(format!("element {f} flipped")));
        }
    }
    let layout = FlowLayout::new(mesh.vertex_count(), cfg);
    let scalar = |f| layout.dofs.index(f, 0, 0).map_or(0.0, |i| sol.x[i]);
    let rel = if sol.initial.total > 0.0 {
        sol.last.total / sol.initial.total
    } else {
        0.0
    };
    if rel > cfg.residual_tol {
        log::info!("step {}: relative Newton residual {rel:.3e} above tolerance", old.step + 1);
    }
    let c = init_curvature_with(&mesh, cfg.p, cfg.quadrature_degree)?;
    Ok(FlowState {
        mesh,
        y: c.y,
        w: c.w,
        lambda: scalar(Field::Lambda),
        gamma: scalar(Field::Gamma),
        t: old.t + old.tau,
        tau: (old.tau * cfg.scale_s).min(cfg.tau_max),
        step: old.step + 1,
        newton_residual: rel,
    })
}

/// Advances the flow by one step. A failed step is retried once with half the
/// step size; a second failure is a [`Error::StepFailure`].
pub fn flow_step(old: &FlowState, cfg: &FlowConfig) -> Result<FlowState> {
    cfg.validate()?;
    match attempt(old, cfg) {
        Ok(s) => Ok(s),
        Err(first) => {
            log::warn!("step {} rejected at tau = {:e} ({first}); retrying with tau/2", old.step + 1, old.tau);
            let half = FlowState {
                tau: 0.5 * old.tau,
                ..old.clone()
            };
            attempt(&half, cfg).map_err(|second| Error::StepFailure {
                step: old.step + 1,
                reason: format!("{first}; after halving tau: {second}"),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn config_validation() {
        assert!(FlowConfig::default().validate().is_ok());
        let bad = FlowConfig {
            p: 0,
            fix_area: true,
            ..Default::default()
        };
        let msg = bad.validate().unwrap_err().to_string();
        assert!(msg.contains("area preservation makes no sense in this context"));
        assert!(FlowConfig {
            tau_max: 1e-5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(FlowConfig {
            scale_s: 0.5,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn layout_sizes() {
        let cfg = FlowConfig {
            fix_area: true,
            fix_volume: true,
            ..Default::default()
        };
        let l = FlowLayout::new(10, &cfg);
        assert_eq!(l.len(), 92);
        assert_eq!(l.rows(Equation::Area), Some((60, 1)));
        assert_eq!(l.rows(Equation::Volume), Some((61, 1)));
        assert_eq!(l.rows(Equation::Motion), Some((62, 30)));
        let l0 = FlowLayout::new(10, &FlowConfig { p: 0, ..Default::default() });
        assert_eq!(l0.len(), 60);
        assert_eq!(l0.rows(Equation::Weighted), None);
        assert_eq!(l0.rows(Equation::Motion), Some((30, 30)));
    }

    #[test]
    fn init_curvature_for_mcf_has_zero_w() {
        let m = shapes::icosphere(2, 1.0);
        let c = init_curvature(&m, 0).unwrap();
        assert!(c.w.values().iter().all(|v| *v == [0.0; 3]));
        let c2 = init_curvature(&m, 2).unwrap();
        assert_eq!(c2.w, c2.y);
    }

    #[test]
    fn trial_equal_to_old_state() {
        let m = shapes::jitter(&shapes::icosphere(1, 1.0), 0.02, 5);
        for p in [0, 1, 2, 4] {
            let cfg = FlowConfig {
                p,
                fix_volume: true,
                fix_area: p > 0,
                ..Default::default()
            };
            let old = FlowState::new(m.clone(), &cfg).unwrap();
            let x = initial_trial(&old, &cfg);
            let r = assemble_flow_residual(&old, &x, &cfg).unwrap();
            let scale: f64 = old.y.norms().iter().sum::<f64>();
            assert!(r.norms.curvature <= 1e-10 * scale, "p = {p}: {}", r.norms.curvature);
            assert_eq!(r.norms.area, 0.0);
            assert_eq!(r.norms.volume, 0.0);
        }
    }
}
