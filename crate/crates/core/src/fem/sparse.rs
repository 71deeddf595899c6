//! Degree-of-freedom maps, sparse assembly and the direct solver.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use rayon::prelude::*;

use super::{mesh_metrics, shape_gradients, MASS};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::vec3;

/// Relative residual bound every successful solve satisfies.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

const REFINEMENT_STEPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    U,
    Y,
    W,
    Lambda,
    Gamma,
    Rho,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Slot {
    field: Field,
    nodes: usize,
    components: usize,
    offset: usize,
}

/// Stacked layout of unknown fields; components of a field are contiguous per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    slots: Vec<Slot>,
    len: usize,
}

impl DofMap {
    /// `layout` lists `(field, nodes, components)` in stacking order.
    pub fn new(layout: &[(Field, usize, usize)]) -> Self {
        let mut offset = 0;
        let slots = layout
            .iter()
            .map(|&(field, nodes, components)| {
                let s = Slot {
                    field,
                    nodes,
                    components,
                    offset,
                };
                offset += nodes * components;
                s
            })
            .collect();
        DofMap { slots, len: offset }
    }

    fn slot(&self, field: Field) -> Option<&Slot> {
        self.slots.iter().find(|s| s.field == field)
    }

    pub fn index(&self, field: Field, node: usize, component: usize) -> Option<usize> {
        let s = self.slot(field)?;
        (node < s.nodes && component < s.components).then(|| s.offset + node * s.components + component)
    }

    pub fn offset(&self, field: Field) -> Option<usize> {
        self.slot(field).map(|s| s.offset)
    }

    pub fn has(&self, field: Field) -> bool {
        self.slot(field).is_some()
    }

    pub fn field_len(&self, field: Field) -> usize {
        self.slot(field).map_or(0, |s| s.nodes * s.components)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Dense element contribution; `values` is row-major `rows.len() x cols.len()`,
/// `rhs` is either empty or one entry per row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ElementBlock {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<f64>,
    pub rhs: Vec<f64>,
}

/// Compressed sparse matrix with summed duplicates.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    inner: SparseColMat<usize, f64>,
}

impl SparseMatrix {
    /// Duplicate `(row, col)` entries are summed in a fixed order.
    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(r, c, _) in &entries {
            if r >= nrows || c >= ncols {
                return Err(Error::DofOutOfRange {
                    index: if r >= nrows { r } else { c },
                    size: nrows.max(ncols),
                });
            }
        }
        entries.sort_by_key(|&(r, c, _)| (c, r));
        let mut merged: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(t) if t.row == r && t.col == c => t.val += v,
                _ => merged.push(Triplet::new(r, c, v)),
            }
        }
        let inner = SparseColMat::try_new_from_triplets(nrows, ncols, &merged)
            .map_err(|e| Error::InvalidParameter(format!("sparse matrix creation: {e:?}")))?;
        Ok(SparseMatrix { inner })
    }

    pub fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn nnz(&self) -> usize {
        self.inner.val().len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let cp = self.inner.symbolic().col_ptr();
        let ri = self.inner.symbolic().row_idx();
        let val = self.inner.val();
        (cp[col]..cp[col + 1]).find(|&k| ri[k] == row).map_or(0.0, |k| val[k])
    }

    /// All stored entries as `(row, col, value)`, column-major.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let cp = self.inner.symbolic().col_ptr();
        let ri = self.inner.symbolic().row_idx();
        let val = self.inner.val();
        let mut out = Vec::with_capacity(val.len());
        for c in 0..self.ncols() {
            for k in cp[c]..cp[c + 1] {
                out.push((ri[k], c, val[k]));
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols(), "matvec dimension mismatch");
        let cp = self.inner.symbolic().col_ptr();
        let ri = self.inner.symbolic().row_idx();
        let val = self.inner.val();
        let mut y = vec![0.0; self.nrows()];
        for (c, &xc) in x.iter().enumerate() {
            for k in cp[c]..cp[c + 1] {
                y[ri[k]] += val[k] * xc;
            }
        }
        y
    }

    pub fn factor(&self) -> Result<Factorization<'_>> {
        if self.nrows() != self.ncols() {
            return Err(Error::InvalidParameter("matrix is not square".into()));
        }
        if self.nnz() == 0 && self.nrows() > 0 {
            return Err(Error::SingularMatrix);
        }
        let lu = self.inner.sp_lu().map_err(|_| Error::SingularMatrix)?;
        Ok(Factorization { lu, matrix: self })
    }
}

/// LU factorization with residual-checked, iteratively refined solves.
pub struct Factorization<'a> {
    lu: Lu<usize, f64>,
    matrix: &'a SparseMatrix,
}

impl Factorization<'_> {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.matrix.nrows();
        assert_eq!(b.len(), n, "rhs dimension mismatch");
        let scale = norm(b).max(1.0);
        let mut x = self.apply(b)?;
        let mut res = f64::INFINITY;
        for _ in 0..=REFINEMENT_STEPS {
            let ax = self.matrix.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            res = norm(&r) / scale;
            if !res.is_finite() {
                return Err(Error::SingularMatrix);
            }
            if res <= 0.01 * SOLVE_TOLERANCE {
                break;
            }
            let dx = self.apply(&r)?;
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        if res > SOLVE_TOLERANCE {
            // the last correction may still have helped
            let ax = self.matrix.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            res = norm(&r) / scale;
            if res > SOLVE_TOLERANCE {
                return Err(Error::SolveAccuracy { residual: res });
            }
        }
        Ok(x)
    }

    fn apply(&self, b: &[f64]) -> Result<Vec<f64>> {
        let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        let sol = self.lu.solve(&rhs);
        let x: Vec<f64> = (0..b.len()).map(|i| sol[(i, 0)]).collect();
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::SingularMatrix)
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Square system over the unknowns of `dof_map`.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub dof_map: DofMap,
}

/// Scatters element blocks into a global system, summing duplicates.
pub fn assemble(blocks: &[ElementBlock], dof_map: &DofMap) -> Result<SparseSystem> {
    let n = dof_map.len();
    let mut entries = Vec::new();
    let mut rhs = vec![0.0; n];
    for b in blocks {
        assert_eq!(b.values.len(), b.rows.len() * b.cols.len(), "block shape mismatch");
        for &i in b.rows.iter().chain(&b.cols) {
            if i >= n {
                return Err(Error::DofOutOfRange { index: i, size: n });
            }
        }
        for (i, &r) in b.rows.iter().enumerate() {
            for (j, &c) in b.cols.iter().enumerate() {
                entries.push((r, c, b.values[i * b.cols.len() + j]));
            }
            if let Some(v) = b.rhs.get(i) {
                rhs[r] += v;
            }
        }
    }
    Ok(SparseSystem {
        matrix: SparseMatrix::from_triplets(n, n, entries)?,
        rhs,
        dof_map: dof_map.clone(),
    })
}

pub fn solve_sparse(sys: &SparseSystem) -> Result<Vec<f64>> {
    sys.matrix.factor()?.solve(&sys.rhs)
}

/// Scalar P1 mass and stiffness matrices (`V x V`) of a mesh.
pub fn mass_stiffness(m: &Mesh) -> Result<(SparseMatrix, SparseMatrix)> {
    let metrics = mesh_metrics(m)?;
    let local: Vec<([[f64; 3]; 3], [[f64; 3]; 3])> = metrics
        .par_iter()
        .map(|em| {
            let a = em.area();
            let g = shape_gradients(em);
            let mut mm = [[0.0; 3]; 3];
            let mut kk = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    mm[i][j] = a * MASS[i][j];
                    kk[i][j] = a * vec3::dot(&g[i], &g[j]);
                }
            }
            (mm, kk)
        })
        .collect();
    let mut me = Vec::with_capacity(9 * local.len());
    let mut ke = Vec::with_capacity(9 * local.len());
    for (f, (mm, kk)) in m.faces().iter().zip(&local) {
        for i in 0..3 {
            for j in 0..3 {
                me.push((f[i], f[j], mm[i][j]));
                ke.push((f[i], f[j], kk[i][j]));
            }
        }
    }
    let n = m.vertex_count();
    Ok((SparseMatrix::from_triplets(n, n, me)?, SparseMatrix::from_triplets(n, n, ke)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    fn dense_system(a: &[&[f64]], b: &[f64]) -> SparseSystem {
        let n = b.len();
        let map = DofMap::new(&[(Field::U, n, 1)]);
        let block = ElementBlock {
            rows: (0..n).collect(),
            cols: (0..n).collect(),
            values: a.iter().flat_map(|r| r.iter().copied()).collect(),
            rhs: b.to_vec(),
        };
        assemble(&[block], &map).unwrap()
    }

    #[test]
    fn identity_solve() {
        let sys = dense_system(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]], &[1.0, 2.0, 3.0]);
        assert_eq!(solve_sparse(&sys).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_solve() {
        let sys = dense_system(&[&[2.0, 1.0], &[1.0, 2.0]], &[3.0, 3.0]);
        let x = solve_sparse(&sys).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix_is_singular() {
        let sys = dense_system(&[&[0.0, 0.0], &[0.0, 0.0]], &[1.0, 1.0]);
        assert!(matches!(solve_sparse(&sys), Err(Error::SingularMatrix)));
    }

    #[test]
    fn duplicates_are_summed() {
        let map = DofMap::new(&[(Field::U, 4, 1)]);
        let b1 = ElementBlock {
            rows: vec![0, 1, 2],
            cols: vec![0, 1, 2],
            values: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            rhs: vec![],
        };
        let b2 = ElementBlock {
            rows: vec![1, 2, 3],
            cols: vec![1, 2, 3],
            ..b1.clone()
        };
        let sys = assemble(&[b1.clone()], &map).unwrap();
        assert_eq!(sys.matrix.get(0, 0), 1.0);
        assert_eq!(sys.matrix.get(3, 3), 0.0);
        let sys = assemble(&[b1, b2], &map).unwrap();
        assert_eq!(sys.matrix.get(1, 1), 2.0);
        assert_eq!(sys.matrix.get(2, 2), 2.0);
        assert_eq!(sys.matrix.get(0, 0), 1.0);
    }

    #[test]
    fn empty_assembly_is_zero() {
        let map = DofMap::new(&[(Field::U, 5, 3)]);
        let sys = assemble(&[], &map).unwrap();
        assert_eq!(sys.matrix.nrows(), 15);
        assert_eq!(sys.matrix.nnz(), 0);
        assert!(sys.rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn out_of_range_block() {
        let map = DofMap::new(&[(Field::U, 2, 1)]);
        let b = ElementBlock {
            rows: vec![5],
            cols: vec![0],
            values: vec![1.0],
            rhs: vec![],
        };
        assert!(matches!(assemble(&[b], &map), Err(Error::DofOutOfRange { index: 5, size: 2 })));
    }

    #[test]
    fn dof_map_is_a_bijection() {
        let map = DofMap::new(&[
            (Field::U, 4, 3),
            (Field::Y, 4, 3),
            (Field::Lambda, 1, 1),
            (Field::Gamma, 1, 1),
        ]);
        assert_eq!(map.len(), 26);
        let mut seen = vec![false; map.len()];
        for f in [Field::U, Field::Y] {
            for v in 0..4 {
                for c in 0..3 {
                    let i = map.index(f, v, c).unwrap();
                    assert!(!seen[i]);
                    seen[i] = true;
                }
            }
        }
        seen[map.index(Field::Lambda, 0, 0).unwrap()] = true;
        seen[map.index(Field::Gamma, 0, 0).unwrap()] = true;
        assert!(seen.iter().all(|&s| s));
        assert_eq!(map.index(Field::U, 1, 2), Some(5));
        assert_eq!(map.index(Field::W, 0, 0), None);
    }

    #[test]
    fn mass_and_stiffness_properties() {
        let m = shapes::jitter(&shapes::icosphere(2, 1.3), 0.02, 7);
        let (mm, kk) = mass_stiffness(&m).unwrap();
        let ones = vec![1.0; m.vertex_count()];
        let area: f64 = mm.matvec(&ones).iter().sum();
        let exact: f64 = mesh_metrics(&m).unwrap().iter().map(|e| e.area()).sum();
        assert!((area - exact).abs() < 1e-12 * exact);
        let scale = kk.triplets().iter().map(|t| t.2.abs()).fold(0.0, f64::max);
        assert!(kk.matvec(&ones).iter().all(|r| r.abs() < 1e-10 * scale));
        for (r, c, v) in mm.triplets() {
            assert_eq!(v, mm.get(c, r));
        }
        // SPD: x^T M x > 0 for a few vectors
        for k in 0..5 {
            let x: Vec<f64> = (0..m.vertex_count()).map(|i| ((i * 7 + k) % 11) as f64 - 5.0).collect();
            let q: f64 = mm.matvec(&x).iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!(q > 0.0);
        }
    }
}
