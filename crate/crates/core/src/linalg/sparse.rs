//! Compressed sparse column matrices and deterministic triplet assembly.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

/// Coordinate-format accumulator. Duplicates are summed in insertion order.
#[derive(Clone, Debug)]
pub struct Triplets<T> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Real> Triplets<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Triplets {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    /// Adds `block` at rows `r0..` and columns `c0..`, skipping exact zeros.
    pub fn add_block(&mut self, r0: usize, c0: usize, block: &DMatrix<T>) {
        for j in 0..block.ncols() {
            for i in 0..block.nrows() {
                let v = block[(i, j)];
                if v != T::zero() {
                    self.push(r0 + i, c0 + j, v);
                }
            }
        }
    }

    /// Adds every entry of `m` shifted by `(r0, c0)` and scaled by `alpha`.
    pub fn add_csc(&mut self, r0: usize, c0: usize, m: &CscMatrix<T>, alpha: T) {
        for j in 0..m.ncols {
            for p in m.col_ptr[j]..m.col_ptr[j + 1] {
                self.push(r0 + m.row_idx[p], c0 + j, alpha * m.values[p]);
            }
        }
    }

    pub fn to_csc(&self) -> CscMatrix<T> {
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.sort_by_key(|&e| (self.entries[e].1, self.entries[e].0));
        let mut col_ptr = vec![0usize; self.ncols + 1];
        let mut row_idx = Vec::with_capacity(order.len());
        let mut values: Vec<T> = Vec::with_capacity(order.len());
        let mut last: Option<(usize, usize)> = None;
        for e in order {
            let (i, j, v) = self.entries[e];
            if last == Some((i, j)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                row_idx.push(i);
                values.push(v);
                col_ptr[j + 1] += 1;
                last = Some((i, j));
            }
        }
        for j in 0..self.ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        CscMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            col_ptr,
            row_idx,
            values,
        }
    }
}

/// Sparse matrix in compressed column format with sorted row indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CscMatrix<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Real> CscMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Triplets::new(nrows, ncols).to_csc()
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, T::one());
        }
        t.to_csc()
    }

    pub fn from_dense(m: &DMatrix<T>) -> Self {
        let mut t = Triplets::new(m.nrows(), m.ncols());
        t.add_block(0, 0, m);
        t.to_csc()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over `(row, value)` of column `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |p| (self.row_idx[p], self.values[p]))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let rows = &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]];
        match rows.binary_search(&i) {
            Ok(p) => self.values[self.col_ptr[j] + p],
            Err(_) => T::zero(),
        }
    }

    pub fn mul_vec(&self, x: &DVector<T>) -> DVector<T> {
        assert_eq!(x.len(), self.ncols);
        let mut y = DVector::zeros(self.nrows);
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == T::zero() {
                continue;
            }
            for (i, v) in self.column(j) {
                y[i] += v * xj;
            }
        }
        y
    }

    /// `Aᵀ x`.
    pub fn tr_mul_vec(&self, x: &DVector<T>) -> DVector<T> {
        assert_eq!(x.len(), self.nrows);
        DVector::from_iterator(
            self.ncols,
            (0..self.ncols).map(|j| self.column(j).map(|(i, v)| v * x[i]).sum()),
        )
    }

    pub fn transpose(&self) -> Self {
        let mut t = Triplets::new(self.ncols, self.nrows);
        for j in 0..self.ncols {
            for (i, v) in self.column(j) {
                t.push(j, i, v);
            }
        }
        t.to_csc()
    }

    pub fn scale(&self, alpha: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= alpha;
        }
        out
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, other: &Self, alpha: T) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = Triplets::new(self.nrows, self.ncols);
        t.add_csc(0, 0, self, T::one());
        t.add_csc(0, 0, other, alpha);
        t.to_csc()
    }

    pub fn frobenius_norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Largest absolute entry.
    pub fn amax(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for j in 0..self.ncols {
            for (i, v) in self.column(j) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// `‖A − Aᵀ‖_F / ‖A‖_F`.
    pub fn symmetry_error(&self) -> T {
        let norm = self.frobenius_norm();
        if norm == T::zero() {
            return T::zero();
        }
        self.add_scaled(&self.transpose(), -T::one()).frobenius_norm() / norm
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &DVector<T>, y: &DVector<T>) -> T {
        x.dot(&self.mul_vec(y))
    }
}

/// Assembles a block matrix from `(row block, column block, matrix, scale)`.
pub fn block_matrix<T: Real>(
    row_sizes: &[usize],
    col_sizes: &[usize],
    blocks: &[(usize, usize, &CscMatrix<T>, T)],
) -> CscMatrix<T> {
    let offsets = |sizes: &[usize]| {
        let mut o = vec![0];
        for s in sizes {
            o.push(o.last().copied().unwrap_or(0) + s);
        }
        o
    };
    let (ro, co) = (offsets(row_sizes), offsets(col_sizes));
    let mut t = Triplets::new(ro[row_sizes.len()], co[col_sizes.len()]);
    for &(bi, bj, m, alpha) in blocks {
        assert_eq!((m.nrows, m.ncols), (row_sizes[bi], col_sizes[bj]));
        t.add_csc(ro[bi], co[bj], m, alpha);
    }
    t.to_csc()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(1, 0, 2.0);
        t.push(0, 0, 3.0);
        t.push(1, 1, -1.0);
        let m = t.to_csc();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(0, 1), 0.0);
        let y = m.mul_vec(&DVector::from_vec(vec![1.0, 1.0]));
        assert_eq!(y.as_slice(), &[4.0, 1.0]);
        let z = m.tr_mul_vec(&DVector::from_vec(vec![1.0, 1.0]));
        assert_eq!(z.as_slice(), &[6.0, -1.0]);
    }

    #[test]
    fn dense_round_trip_and_transpose() {
        let d = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, 3.0, 4.0]);
        let m = CscMatrix::from_dense(&d);
        assert_eq!(m.to_dense(), d);
        assert_eq!(m.transpose().to_dense(), d.transpose());
        assert!(CscMatrix::<f64>::identity(3).symmetry_error() == 0.0);
    }

    #[test]
    fn blocks() {
        let a = CscMatrix::<f64>::identity(2);
        let b = CscMatrix::from_dense(&DMatrix::from_row_slice(1, 2, &[1.0, 2.0]));
        let bt = b.transpose();
        let k = block_matrix(&[2, 1], &[2, 1], &[(0, 0, &a, 1.0), (0, 1, &bt, 1.0), (1, 0, &b, 1.0)]);
        assert_eq!(k.symmetry_error(), 0.0);
        assert_eq!(k.get(2, 1), 2.0);
    }
}
