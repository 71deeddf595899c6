//! Finite-element p-Willmore flow for closed, oriented triangle meshes.
//!
//! The crate is organized bottom-up:
//!
//! * [`mesh`]: indexed triangle meshes, OBJ/PLY I/O and topological validation.
//! * [`fem`]: P1 surface elements, quadrature, sparse assembly and the linear solver.
//! * [`geometry`]: area, volume, mean curvature vector, p-Willmore energy and
//!   conformal distortion.
//! * [`flow`]: one time step of the constrained p-Willmore flow, solved by Newton's
//!   method with exact (forward-mode AD) Jacobians.
//! * [`regularize`]: conformal-penalty regularization with valence-adjusted
//!   reference angles.
//!
//! [`shapes`] provides the analytic test surfaces (icospheres, ellipsoids, tori, ...)
//! used throughout the tests and benchmarks.

pub mod autodiff;
pub mod error;
pub mod fem;
pub mod flow;
pub mod geometry;
pub mod mesh;
pub mod regularize;
pub mod shapes;
pub mod vec3;

pub use error::{Error, Result};
pub use fem::{ElementMetric, QuadratureRule, SparseSystem};
pub use flow::{FlowConfig, FlowState};
pub use geometry::{CurvatureData, NodalField};
pub use mesh::{Mesh, MeshDiagnostics};
pub use regularize::{ReferenceAngles, ReferenceMetric, RegularizeConfig, RegularizeMode};
