//! Conforming subspaces of the broken spaces.
//!
//! * `Q_h^c`: continuous Lagrange `P_ℓ` with zero boundary trace.
//! * `V_{h0}^c`: `H(curl)`-conforming Nédélec fields with zero boundary
//!   tangential trace, identified through the classical moment degrees of
//!   freedom: edge moments `∫_e (v·t_e) q` for `q ∈ P_{ℓ−1}(e)` with the
//!   global edge orientation (lower to higher vertex), and interior moments
//!   `∫_K v·e_d q` for `q ∈ P_{ℓ−2}(K)`.
//!
//! Both are returned as sparse column bases expressed in broken
//! coefficients, so conforming functions can be fed to any broken-space
//! routine.

use nalgebra::{DMatrix, DVector};

use super::{legendre_modes, Discretization, FemField, Space};
use crate::error::{Error, Result};
use crate::scalar::{dot2, Real};

/// Columns of a sparse matrix, each a list of `(row, value)` pairs.
#[derive(Clone, Debug)]
pub struct ColumnBasis<T> {
    pub nrows: usize,
    pub columns: Vec<Vec<(usize, T)>>,
}

impl<T: Real> ColumnBasis<T> {
    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> DVector<T> {
        let mut v = DVector::zeros(self.nrows);
        for &(i, x) in &self.columns[j] {
            v[i] += x;
        }
        v
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols());
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, x) in col {
                m[(i, j)] += x;
            }
        }
        m
    }

    /// `Σ_j c_j column_j`.
    pub fn combine(&self, c: &DVector<T>) -> DVector<T> {
        let mut v = DVector::zeros(self.nrows);
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, x) in col {
                v[i] += c[j] * x;
            }
        }
        v
    }
}

fn invert<T: Real>(m: DMatrix<T>, what: &str) -> Result<DMatrix<T>> {
    m.try_inverse()
        .ok_or_else(|| Error::LinearAlgebra(format!("singular local {what} matrix")))
}

fn boundary_vertices<T: Real>(d: &Discretization<T>) -> Vec<bool> {
    let mut on = vec![false; d.mesh.num_vertices()];
    for f in d.faces.faces().iter().filter(|f| f.is_boundary()) {
        on[f.vertices[0]] = true;
        on[f.vertices[1]] = true;
    }
    on
}

/// Basis of `Q_h^c` (continuous `P_ℓ`, zero on the boundary) in broken `Q_h`
/// coefficients. Columns are ordered by interior vertices, then by interior
/// edge nodes.
pub fn scalar_conforming_basis<T: Real>(d: &Discretization<T>) -> Result<ColumnBasis<T>> {
    let l = d.degree();
    debug_assert!(l <= 2, "element-interior Lagrange nodes are not implemented");
    let nv = d.mesh.num_vertices();
    let on_boundary = boundary_vertices(d);
    // Global node ids: vertices first, then (face, m) for m = 1..ℓ-1.
    let mut global = vec![usize::MAX; nv + d.faces.len() * (l - 1)];
    let mut count = 0;
    for v in 0..nv {
        if !on_boundary[v] {
            global[v] = count;
            count += 1;
        }
    }
    for (f, face) in d.faces.faces().iter().enumerate() {
        if face.is_boundary() {
            continue;
        }
        for m in 1..l {
            global[nv + f * (l - 1) + (m - 1)] = count;
            count += 1;
        }
    }
    let mut columns = vec![Vec::new(); count];
    let lf = T::from_usize_lossy(l);
    for k in 0..d.mesh.num_elements() {
        let el = d.mesh.elements()[k];
        let verts = d.mesh.element_vertices(k);
        let mut nodes = Vec::new();
        for (i, &v) in el.iter().enumerate() {
            nodes.push((verts[i], v));
        }
        for &f in d.faces.element_faces(k).iter() {
            let face = d.faces.face(f);
            for m in 1..l {
                let s = T::from_usize_lossy(m) / lf;
                nodes.push((face.point(&d.mesh, s), nv + f * (l - 1) + (m - 1)));
            }
        }
        let n = nodes.len();
        let mut vander = DMatrix::zeros(n, n);
        for (i, (x, _)) in nodes.iter().enumerate() {
            let e = d.scalar_at(k, *x);
            for j in 0..n {
                vander[(i, j)] = e.values[j];
            }
        }
        let nodal = invert(vander, "Lagrange")?;
        let offset = d.layout.dofs(Space::Q, k).start;
        for (i, &(_, g)) in nodes.iter().enumerate() {
            let col = global[g];
            if col == usize::MAX {
                continue;
            }
            for j in 0..n {
                columns[col].push((offset + j, nodal[(j, i)]));
            }
        }
    }
    Ok(ColumnBasis {
        nrows: d.layout.dim(Space::Q),
        columns,
    })
}

/// Element-local Nédélec moment matrices `D_K` and their inverses.
#[derive(Clone, Debug)]
pub struct NedelecMoments<T> {
    /// `dofs[k][(a, j)]` is moment `a` of local basis function `j`.
    dofs: Vec<DMatrix<T>>,
    inverses: Vec<DMatrix<T>>,
}

/// Number of edge moments per edge and interior moments per element.
fn moment_counts(degree: usize) -> (usize, usize) {
    (degree, degree * (degree - 1))
}

impl<T: Real> NedelecMoments<T> {
    pub fn new(d: &Discretization<T>) -> Result<Self> {
        let l = d.degree();
        let (per_edge, interior) = moment_counts(l);
        let n = d.layout.local_dim(Space::V);
        debug_assert_eq!(3 * per_edge + interior, n);
        let vol = d.volume_rule();
        let mut dofs = Vec::with_capacity(d.mesh.num_elements());
        let mut inverses = Vec::with_capacity(d.mesh.num_elements());
        for k in 0..d.mesh.num_elements() {
            let mut m = DMatrix::zeros(n, n);
            for (local, &f) in d.faces.element_faces(k).iter().enumerate() {
                let face = d.faces.face(f);
                let t = face.tangent(&d.mesh);
                for p in d.face_points(f, d.face_rule()) {
                    let e = d.nedelec_at(k, p.physical);
                    // Modes orthonormal on [0, 1]; scale to the physical face.
                    let q = legendre_modes(per_edge, p.s);
                    for (a, qa) in q.iter().enumerate() {
                        for j in 0..n {
                            m[(local * per_edge + a, j)] += p.weight * *qa * dot2(e.values[j], t);
                        }
                    }
                }
            }
            if interior > 0 {
                let monos: Vec<(usize, usize)> = (0..=l - 2)
                    .flat_map(|deg| (0..=deg).rev().map(move |a| (a, deg - a)))
                    .collect();
                for p in d.element_points(k, vol) {
                    let e = d.reference.nedelec_physical(d.map(k), p.reference);
                    for (mi, &(a, b)) in monos.iter().enumerate() {
                        let q = p.reference[0].powi(a as i32) * p.reference[1].powi(b as i32);
                        for c in 0..2 {
                            let row = 3 * per_edge + 2 * mi + c;
                            for j in 0..n {
                                m[(row, j)] += p.weight * q * e.values[j][c];
                            }
                        }
                    }
                }
            }
            inverses.push(invert(m.clone(), "Nédélec moment")?);
            dofs.push(m);
        }
        Ok(NedelecMoments { dofs, inverses })
    }

    pub fn dofs(&self, k: usize) -> &DMatrix<T> {
        &self.dofs[k]
    }

    pub fn inverse(&self, k: usize) -> &DMatrix<T> {
        &self.inverses[k]
    }
}

/// Global numbering of `V_{h0}^c`: interior edges (ℓ moments each), then
/// element-interior moments.
fn nedelec_global<T: Real>(d: &Discretization<T>) -> (Vec<usize>, usize) {
    let (per_edge, _) = moment_counts(d.degree());
    let mut edge_start = vec![usize::MAX; d.faces.len()];
    let mut count = 0;
    for (f, face) in d.faces.faces().iter().enumerate() {
        if !face.is_boundary() {
            edge_start[f] = count;
            count += per_edge;
        }
    }
    (edge_start, count)
}

/// Basis of `V_{h0}^c` in broken `V_h` coefficients.
pub fn nedelec_conforming_basis<T: Real>(d: &Discretization<T>, moments: &NedelecMoments<T>) -> ColumnBasis<T> {
    let (per_edge, interior) = moment_counts(d.degree());
    let n = d.layout.local_dim(Space::V);
    let (edge_start, edge_count) = nedelec_global(d);
    let total = edge_count + interior * d.mesh.num_elements();
    let mut columns = vec![Vec::new(); total];
    for k in 0..d.mesh.num_elements() {
        let inv = moments.inverse(k);
        let offset = d.layout.dofs(Space::V, k).start;
        for (local, &f) in d.faces.element_faces(k).iter().enumerate() {
            if edge_start[f] == usize::MAX {
                continue;
            }
            for a in 0..per_edge {
                let col = edge_start[f] + a;
                for j in 0..n {
                    columns[col].push((offset + j, inv[(j, local * per_edge + a)]));
                }
            }
        }
        for b in 0..interior {
            let col = edge_count + k * interior + b;
            for j in 0..n {
                columns[col].push((offset + j, inv[(j, 3 * per_edge + b)]));
            }
        }
    }
    ColumnBasis {
        nrows: d.layout.dim(Space::V),
        columns,
    }
}

/// Conforming average `Π_h^c`: shared edge moments are replaced by their
/// arithmetic mean, boundary edge moments are set to zero, interior moments
/// are kept.
pub fn conforming_average<T: Real>(
    d: &Discretization<T>,
    moments: &NedelecMoments<T>,
    v: &FemField<T>,
) -> Result<FemField<T>> {
    let coeffs = v.expect(&d.layout, Space::V)?;
    let (per_edge, _) = moment_counts(d.degree());
    let ne = d.mesh.num_elements();
    let local: Vec<DVector<T>> = (0..ne)
        .map(|k| moments.dofs(k) * coeffs.rows(d.layout.dofs(Space::V, k).start, d.layout.local_dim(Space::V)))
        .collect();
    let mut averaged = local.clone();
    let half = T::lit(0.5);
    for face in d.faces.faces() {
        let rp = face.local_plus * per_edge;
        match (face.minus, face.local_minus) {
            (Some(m), Some(lm)) => {
                let rm = lm * per_edge;
                for a in 0..per_edge {
                    let mean = (local[face.plus][rp + a] + local[m][rm + a]) * half;
                    averaged[face.plus][rp + a] = mean;
                    averaged[m][rm + a] = mean;
                }
            }
            _ => {
                for a in 0..per_edge {
                    averaged[face.plus][rp + a] = T::zero();
                }
            }
        }
    }
    let mut out = DVector::zeros(coeffs.len());
    for (k, dofs) in averaged.iter().enumerate() {
        let c = moments.inverse(k) * dofs;
        out.rows_mut(d.layout.dofs(Space::V, k).start, c.len()).copy_from(&c);
    }
    FemField::new(&d.layout, Space::V, out)
}
