//! Sparse LU factorization with threshold partial pivoting.
//!
//! Left-looking (Gilbert–Peierls) factorization `P A Q = L U`, where `Q` is
//! a reverse Cuthill–McKee ordering of the symmetrized pattern and `P` is
//! chosen column by column. The diagonal of the permuted matrix is preferred
//! as pivot whenever it is within a factor [`DIAGONAL_PREFERENCE`] of the
//! largest candidate, which keeps the factors sparse on symmetric systems.

use std::collections::VecDeque;

use nalgebra::DVector;

use super::sparse::CscMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A pivot smaller than this fraction of its column's largest original
/// entry is reported as (near) singularity.
pub const RELATIVE_PIVOT_THRESHOLD: f64 = 1e-12;

/// Diagonal entries are accepted as pivots when at least this fraction of
/// the largest candidate.
pub const DIAGONAL_PREFERENCE: f64 = 0.1;

/// Reverse Cuthill–McKee ordering of the pattern of `A + Aᵀ`.
pub fn reverse_cuthill_mckee<T: Real>(a: &CscMatrix<T>) -> Vec<usize> {
    let n = a.ncols;
    let mut adj = vec![Vec::new(); n];
    for j in 0..n {
        for (i, _) in a.column(j) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, seen: &mut Vec<bool>| -> Vec<Vec<usize>> {
        let mut levels = vec![vec![start]];
        seen[start] = true;
        let mut touched = vec![start];
        loop {
            let mut next = Vec::new();
            for &u in levels.last().expect("nonempty") {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        touched.push(v);
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }
        for v in touched {
            seen[v] = false;
        }
        levels
    };

    let mut candidates: Vec<usize> = (0..n).collect();
    candidates.sort_by_key(|&v| (degree[v], v));
    let mut scratch = vec![false; n];
    for &seed in &candidates {
        if visited[seed] {
            continue;
        }
        // Pseudo-peripheral start: repeatedly jump to a minimum-degree node
        // of the last BFS level while the eccentricity grows.
        let mut start = seed;
        let mut depth = bfs_levels(start, &mut scratch).len();
        for _ in 0..8 {
            let levels = bfs_levels(start, &mut scratch);
            let last = levels.last().expect("nonempty");
            let cand = *last.iter().min_by_key(|&&v| (degree[v], v)).expect("nonempty");
            let d = bfs_levels(cand, &mut scratch).len();
            if d > depth {
                depth = d;
                start = cand;
            } else {
                break;
            }
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            next.sort_by_key(|&v| (degree[v], v));
            for v in next {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Pivot statistics of a factorization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PivotReport {
    /// Smallest `|u_kk| / max_i |a_i,q(k)|` over all steps.
    pub min_relative_pivot: f64,
    /// Step at which the minimum occurred.
    pub min_step: usize,
    pub nnz_l: usize,
    pub nnz_u: usize,
}

/// Factors `L`, `U` with row permutation `pinv` and column permutation `q`.
#[derive(Clone, Debug)]
pub struct SparseLu<T> {
    n: usize,
    q: Vec<usize>,
    pinv: Vec<usize>,
    l: CscMatrix<T>,
    u: CscMatrix<T>,
    pub report: PivotReport,
}

impl<T: Real> SparseLu<T> {
    /// Factors a square matrix with the default ordering.
    pub fn factor(a: &CscMatrix<T>) -> Result<Self> {
        let q = reverse_cuthill_mckee(a);
        Self::factor_with_ordering(a, q)
    }

    pub fn factor_with_ordering(a: &CscMatrix<T>, q: Vec<usize>) -> Result<Self> {
        let n = a.ncols;
        if a.nrows != n {
            return Err(Error::LinearAlgebra(format!(
                "LU of non-square {}×{} matrix",
                a.nrows, n
            )));
        }
        let tol = T::lit(DIAGONAL_PREFERENCE);
        let threshold = RELATIVE_PIVOT_THRESHOLD;
        const NONE: usize = usize::MAX;

        let mut lp = vec![0usize];
        let mut li: Vec<usize> = Vec::new();
        let mut lx: Vec<T> = Vec::new();
        let mut up = vec![0usize];
        let mut ui: Vec<usize> = Vec::new();
        let mut ux: Vec<T> = Vec::new();
        let mut pinv = vec![NONE; n];
        let mut x = vec![T::zero(); n];
        let mut xi = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut mark = vec![usize::MAX; n];
        let mut report = PivotReport {
            min_relative_pivot: f64::INFINITY,
            min_step: 0,
            nnz_l: 0,
            nnz_u: 0,
        };

        for k in 0..n {
            let col = q[k];
            // Reach of A(:, col) in the graph of L.
            let mut top = n;
            for (start, _) in a.column(col) {
                if mark[start] == k {
                    continue;
                }
                let mut head = 0usize;
                stack[0] = start;
                loop {
                    let j = stack[head];
                    let jnew = pinv[j];
                    if mark[j] != k {
                        mark[j] = k;
                        pstack[head] = if jnew == NONE { 0 } else { lp[jnew] };
                    }
                    let end = if jnew == NONE { 0 } else { lp[jnew + 1] };
                    let mut done = true;
                    let mut p = pstack[head];
                    while p < end {
                        let i = li[p];
                        p += 1;
                        if mark[i] != k {
                            pstack[head] = p;
                            head += 1;
                            stack[head] = i;
                            done = false;
                            break;
                        }
                    }
                    if done {
                        top -= 1;
                        xi[top] = j;
                        if head == 0 {
                            break;
                        }
                        head -= 1;
                    }
                }
            }
            // Sparse triangular solve x = L \ A(:, col).
            for &i in &xi[top..n] {
                x[i] = T::zero();
            }
            let mut col_max = T::zero();
            for (i, v) in a.column(col) {
                x[i] += v;
                col_max = col_max.max(v.abs());
            }
            for px in top..n {
                let j = xi[px];
                let jj = pinv[j];
                if jj == NONE {
                    continue;
                }
                // The first entry of each L column is the unit diagonal.
                let xj = x[j];
                for p in lp[jj] + 1..lp[jj + 1] {
                    x[li[p]] -= lx[p] * xj;
                }
            }
            // Pivot selection.
            let mut ipiv = NONE;
            let mut best = -T::one();
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    let t = x[i].abs();
                    if t > best {
                        best = t;
                        ipiv = i;
                    }
                } else {
                    ui.push(pinv[i]);
                    ux.push(x[i]);
                }
            }
            if ipiv == NONE || best <= T::zero() {
                return Err(Error::Resonance {
                    pivot: k,
                    size: n,
                    relative: 0.0,
                    threshold,
                });
            }
            if pinv[col] == NONE && mark[col] == k && x[col].abs() >= best * tol {
                ipiv = col;
            }
            let pivot = x[ipiv];
            let relative = if col_max > T::zero() {
                (pivot.abs() / col_max).as_f64()
            } else {
                0.0
            };
            if relative < report.min_relative_pivot {
                report.min_relative_pivot = relative;
                report.min_step = k;
            }
            if relative < threshold {
                return Err(Error::Resonance {
                    pivot: k,
                    size: n,
                    relative,
                    threshold,
                });
            }
            ui.push(k);
            ux.push(pivot);
            up.push(ui.len());
            pinv[ipiv] = k;
            li.push(ipiv);
            lx.push(T::one());
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    li.push(i);
                    lx.push(x[i] / pivot);
                }
                x[i] = T::zero();
            }
            lp.push(li.len());
        }
        for r in &mut li {
            *r = pinv[*r];
        }
        report.nnz_l = li.len();
        report.nnz_u = ui.len();
        Ok(SparseLu {
            n,
            q,
            pinv,
            l: CscMatrix {
                nrows: n,
                ncols: n,
                col_ptr: lp,
                row_idx: li,
                values: lx,
            },
            u: CscMatrix {
                nrows: n,
                ncols: n,
                col_ptr: up,
                row_idx: ui,
                values: ux,
            },
            report,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &DVector<T>) -> DVector<T> {
        assert_eq!(b.len(), self.n);
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            y[self.pinv[i]] = b[i];
        }
        // L y = P b (unit diagonal stored first in each column).
        for j in 0..self.n {
            let yj = y[j];
            if yj == T::zero() {
                continue;
            }
            for p in self.l.col_ptr[j] + 1..self.l.col_ptr[j + 1] {
                y[self.l.row_idx[p]] -= self.l.values[p] * yj;
            }
        }
        // U z = y (diagonal stored last in each column).
        for j in (0..self.n).rev() {
            let last = self.u.col_ptr[j + 1] - 1;
            y[j] /= self.u.values[last];
            let yj = y[j];
            if yj == T::zero() {
                continue;
            }
            for p in self.u.col_ptr[j]..last {
                y[self.u.row_idx[p]] -= self.u.values[p] * yj;
            }
        }
        let mut x = DVector::zeros(self.n);
        for k in 0..self.n {
            x[self.q[k]] = y[k];
        }
        x
    }

    /// Solves with `steps` rounds of iterative refinement against `a`.
    pub fn solve_refined(&self, a: &CscMatrix<T>, b: &DVector<T>, steps: usize) -> DVector<T> {
        let mut x = self.solve(b);
        for _ in 0..steps {
            let r = b - a.mul_vec(&x);
            x += self.solve(&r);
        }
        x
    }
}

/// `‖Ax − b‖ / (‖A‖_F ‖x‖ + ‖b‖)`, zero when both sides vanish.
pub fn relative_residual<T: Real>(a: &CscMatrix<T>, x: &DVector<T>, b: &DVector<T>) -> T {
    let r = (a.mul_vec(x) - b).norm();
    let scale = a.frobenius_norm() * x.norm() + b.norm();
    if scale == T::zero() {
        T::zero()
    } else {
        r / scale
    }
}
