//! Dense symmetric eigenvalue helpers for the constant estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest dense problem the estimators accept.
pub const DENSE_SIZE_CAP: usize = 3000;

pub fn check_size(n: usize) -> Result<()> {
    if n > DENSE_SIZE_CAP {
        Err(Error::SizeGuard {
            size: n,
            cap: DENSE_SIZE_CAP,
        })
    } else {
        Ok(())
    }
}

fn symmetrized<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

/// Eigenvalues (ascending) of `A x = λ B x` with `A` symmetric, `B` SPD.
pub fn generalized_eigenvalues<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<Vec<T>> {
    check_size(a.nrows())?;
    let chol = symmetrized(b)
        .cholesky()
        .ok_or_else(|| Error::LinearAlgebra("generalized eigenproblem: B is not positive definite".into()))?;
    let l = chol.l();
    let n = a.nrows();
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::LinearAlgebra("singular Cholesky factor".into()))?;
    let c = &linv * symmetrized(a) * linv.transpose();
    let mut eig: Vec<T> = symmetrized(&c).symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    Ok(eig)
}

/// Orthonormal basis of the null space of `m` (columns), using the
/// eigen-decomposition of `mᵀm` and a relative cutoff on singular values.
pub fn null_space<T: Real>(m: &DMatrix<T>, relative_tol: T) -> Result<DMatrix<T>> {
    check_size(m.ncols())?;
    let n = m.ncols();
    let gram = symmetrized(&(m.transpose() * m));
    let eig = gram.symmetric_eigen();
    let smax = eig.eigenvalues.iter().fold(T::zero(), |a, &b| a.max(b.abs())).sqrt();
    let cutoff = relative_tol * smax;
    let cols: Vec<DVector<T>> = (0..n)
        .filter(|&i| eig.eigenvalues[i].max(T::zero()).sqrt() <= cutoff)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return Ok(DMatrix::zeros(n, 0));
    }
    Ok(DMatrix::from_columns(&cols))
}
