//! Hierarchical orthonormal bases on the reference triangle and the unit
//! segment.
//!
//! Every local space is spanned by a fixed list of raw polynomials in
//! increasing degree, orthonormalized in `L²(K̂)` by a Cholesky factor of
//! their Gram matrix. The raw lists (and therefore the basis ordering) are:
//!
//! * Nédélec `R_ℓ = (P_{ℓ−1})² ⊕ S_ℓ`: for each degree `d < ℓ`, the monomials
//!   `x^a y^b` (a descending) times `e₁`, then the same monomials times `e₂`;
//!   finally `S_ℓ`, realized as `x^a y^b (−y, x)` with `a + b = ℓ − 1`
//!   (the rotated Raviart–Thomas construction: these are exactly the
//!   homogeneous degree-ℓ fields with `x·q = 0`).
//! * Scalar `P_ℓ`: monomials by increasing degree, `a` descending.
//! * Curl space `P_{ℓ−1}`: the scalar list one degree lower.
//!
//! On the segment, the orthonormal shifted Legendre modes
//! `√(2k+1) P_k(2s−1)` are used directly.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::AffineMap;
use crate::quadrature::{quadrature_rule, shifted_legendre, Domain};
use crate::scalar::{Real, Vec2};

/// Highest supported polynomial degree `ℓ`.
pub const MAX_DEGREE: usize = 2;

pub fn check_degree(degree: usize) -> Result<()> {
    if (1..=MAX_DEGREE).contains(&degree) {
        Ok(())
    } else {
        Err(Error::UnsupportedDegree(degree))
    }
}

/// `dim R_ℓ = ℓ(ℓ+2)` on a triangle.
pub const fn dim_nedelec(degree: usize) -> usize {
    degree * (degree + 2)
}

/// `dim P_ℓ = (ℓ+1)(ℓ+2)/2` on a triangle.
pub const fn dim_scalar(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// `dim P_ℓ(F)² = 2(ℓ+1)` on a face.
pub const fn dim_face_vector(degree: usize) -> usize {
    2 * (degree + 1)
}

/// Monomial exponents of total degree at most `degree`, in basis order.
fn monomials(degree: usize) -> Vec<(usize, usize)> {
    (0..=degree)
        .flat_map(|d| (0..=d).rev().map(move |a| (a, d - a)))
        .collect()
}

fn pow<T: Real>(x: T, n: usize) -> T {
    (0..n).fold(T::one(), |acc, _| acc * x)
}

/// Value and gradient of `x^a y^b`.
fn monomial<T: Real>(a: usize, b: usize, p: Vec2<T>) -> (T, Vec2<T>) {
    let [x, y] = p;
    let value = pow(x, a) * pow(y, b);
    let dx = if a == 0 {
        T::zero()
    } else {
        T::from_usize_lossy(a) * pow(x, a - 1) * pow(y, b)
    };
    let dy = if b == 0 {
        T::zero()
    } else {
        T::from_usize_lossy(b) * pow(x, a) * pow(y, b - 1)
    };
    (value, [dx, dy])
}

#[derive(Clone, Copy, Debug)]
enum RawVector {
    /// `x^a y^b e_c`.
    Component { a: usize, b: usize, c: usize },
    /// `x^a y^b (−y, x)`.
    Rotated { a: usize, b: usize },
}

impl RawVector {
    fn eval<T: Real>(self, p: Vec2<T>) -> (Vec2<T>, T) {
        match self {
            RawVector::Component { a, b, c } => {
                let (v, g) = monomial(a, b, p);
                if c == 0 {
                    ([v, T::zero()], -g[1])
                } else {
                    ([T::zero(), v], g[0])
                }
            }
            RawVector::Rotated { a, b } => {
                let (m, _) = monomial::<T>(a, b, p);
                // curl(m (−y, x)) = (a + b + 2) m for homogeneous m.
                let curl = T::from_usize_lossy(a + b + 2) * m;
                ([-p[1] * m, p[0] * m], curl)
            }
        }
    }
}

fn raw_nedelec(degree: usize) -> Vec<RawVector> {
    let mut out = Vec::with_capacity(dim_nedelec(degree));
    for d in 0..degree {
        for c in 0..2 {
            for a in (0..=d).rev() {
                out.push(RawVector::Component { a, b: d - a, c });
            }
        }
    }
    for a in (0..degree).rev() {
        out.push(RawVector::Rotated { a, b: degree - 1 - a });
    }
    out
}

/// Values and scalar curls of a vector basis at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorEval<T> {
    pub values: Vec<Vec2<T>>,
    pub curls: Vec<T>,
}

/// Values and gradients of a scalar basis at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarEval<T> {
    pub values: Vec<T>,
    pub grads: Vec<Vec2<T>>,
}

/// Inverse Cholesky factor turning a raw Gram matrix into an orthonormal basis.
fn orthonormalizer<T: Real>(gram: DMatrix<T>) -> Result<DMatrix<T>> {
    let n = gram.nrows();
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::LinearAlgebra("reference Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    l.solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::LinearAlgebra("singular reference Cholesky factor".into()))
}

/// Orthonormal reference bases of one degree.
#[derive(Clone, Debug)]
pub struct ReferenceElement<T> {
    degree: usize,
    raw_vector: Vec<RawVector>,
    raw_scalar: Vec<(usize, usize)>,
    raw_curl: Vec<(usize, usize)>,
    // Row i holds the raw-function coefficients of basis function i.
    vector_coeffs: DMatrix<T>,
    scalar_coeffs: DMatrix<T>,
    curl_coeffs: DMatrix<T>,
}

impl<T: Real> ReferenceElement<T> {
    pub fn new(degree: usize) -> Result<Self> {
        check_degree(degree)?;
        let raw_vector = raw_nedelec(degree);
        let raw_scalar = monomials(degree);
        let raw_curl = monomials(degree - 1);
        let rule = quadrature_rule::<T>(Domain::Triangle, 2 * degree)?;

        let nv = raw_vector.len();
        let mut gv = DMatrix::zeros(nv, nv);
        let ns = raw_scalar.len();
        let mut gs = DMatrix::zeros(ns, ns);
        let nc = raw_curl.len();
        let mut gc = DMatrix::zeros(nc, nc);
        for (p, w) in rule.iter() {
            let vals: Vec<Vec2<T>> = raw_vector.iter().map(|r| r.eval(p).0).collect();
            for i in 0..nv {
                for j in 0..nv {
                    gv[(i, j)] += w * (vals[i][0] * vals[j][0] + vals[i][1] * vals[j][1]);
                }
            }
            let s: Vec<T> = raw_scalar.iter().map(|&(a, b)| monomial(a, b, p).0).collect();
            for i in 0..ns {
                for j in 0..ns {
                    gs[(i, j)] += w * s[i] * s[j];
                }
            }
            for i in 0..nc {
                for j in 0..nc {
                    gc[(i, j)] += w * s[i] * s[j];
                }
            }
        }
        Ok(ReferenceElement {
            degree,
            vector_coeffs: orthonormalizer(gv)?,
            scalar_coeffs: orthonormalizer(gs)?,
            curl_coeffs: orthonormalizer(gc)?,
            raw_vector,
            raw_scalar,
            raw_curl,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim_nedelec(&self) -> usize {
        self.raw_vector.len()
    }

    pub fn dim_scalar(&self) -> usize {
        self.raw_scalar.len()
    }

    pub fn dim_curl(&self) -> usize {
        self.raw_curl.len()
    }

    /// Nédélec basis values and curls at a reference point.
    pub fn nedelec(&self, p: Vec2<T>) -> VectorEval<T> {
        let raw: Vec<(Vec2<T>, T)> = self.raw_vector.iter().map(|r| r.eval(p)).collect();
        let n = raw.len();
        let mut values = vec![[T::zero(); 2]; n];
        let mut curls = vec![T::zero(); n];
        for i in 0..n {
            for (j, (v, c)) in raw.iter().enumerate().take(i + 1) {
                let cij = self.vector_coeffs[(i, j)];
                values[i][0] += cij * v[0];
                values[i][1] += cij * v[1];
                curls[i] += cij * *c;
            }
        }
        VectorEval { values, curls }
    }

    /// Scalar `P_ℓ` basis values and gradients at a reference point.
    pub fn scalar(&self, p: Vec2<T>) -> ScalarEval<T> {
        let raw: Vec<(T, Vec2<T>)> = self.raw_scalar.iter().map(|&(a, b)| monomial(a, b, p)).collect();
        let n = raw.len();
        let mut values = vec![T::zero(); n];
        let mut grads = vec![[T::zero(); 2]; n];
        for i in 0..n {
            for (j, (v, g)) in raw.iter().enumerate().take(i + 1) {
                let cij = self.scalar_coeffs[(i, j)];
                values[i] += cij * *v;
                grads[i][0] += cij * g[0];
                grads[i][1] += cij * g[1];
            }
        }
        ScalarEval { values, grads }
    }

    /// Orthonormal basis of `P_{ℓ−1}`, the range of the elementwise curl.
    pub fn curl_space(&self, p: Vec2<T>) -> Vec<T> {
        let raw: Vec<T> = self.raw_curl.iter().map(|&(a, b)| monomial(a, b, p).0).collect();
        (0..raw.len())
            .map(|i| (0..=i).map(|j| self.curl_coeffs[(i, j)] * raw[j]).sum())
            .collect()
    }

    /// Nédélec basis on a physical element via the covariant Piola map
    /// `u = J⁻ᵀ û`, `curl u = (det J)⁻¹ curl û`.
    pub fn nedelec_physical(&self, map: &AffineMap<T>, p: Vec2<T>) -> VectorEval<T> {
        let mut e = self.nedelec(p);
        for v in &mut e.values {
            *v = map.covariant(*v);
        }
        for c in &mut e.curls {
            *c /= map.det;
        }
        e
    }

    /// Scalar basis on a physical element (`∇q = J⁻ᵀ ∇̂q̂`).
    pub fn scalar_physical(&self, map: &AffineMap<T>, p: Vec2<T>) -> ScalarEval<T> {
        let mut e = self.scalar(p);
        for g in &mut e.grads {
            *g = map.covariant(*g);
        }
        e
    }
}

/// Reference Nédélec basis values and curls at `point`.
pub fn reference_basis_curl<T: Real>(degree: usize, point: Vec2<T>) -> Result<VectorEval<T>> {
    Ok(ReferenceElement::new(degree)?.nedelec(point))
}

/// Reference `P_ℓ` basis values and gradients at `point`.
pub fn reference_basis_scalar<T: Real>(degree: usize, point: Vec2<T>) -> Result<ScalarEval<T>> {
    Ok(ReferenceElement::new(degree)?.scalar(point))
}

/// `√(2k+1) P_k(2s−1)` for `k < count`, orthonormal in `L²(0,1)`.
pub fn legendre_modes<T: Real>(count: usize, s: T) -> Vec<T> {
    if count == 0 {
        return Vec::new();
    }
    shifted_legendre(count - 1, s)
        .into_iter()
        .enumerate()
        .map(|(k, p)| T::from_usize_lossy(2 * k + 1).sqrt() * p)
        .collect()
}

/// Reference face basis of `P_ℓ(F)²` at `s ∈ [0, 1]`: function `2k + d` is
/// the `k`-th Legendre mode times the unit vector `e_d`.
pub fn face_basis<T: Real>(degree: usize, s: T) -> Vec<Vec2<T>> {
    legendre_modes(degree + 1, s)
        .into_iter()
        .flat_map(|m| [[m, T::zero()], [T::zero(), m]])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri_rule(e: usize) -> crate::quadrature::QuadratureRule<f64> {
        quadrature_rule(Domain::Triangle, e).unwrap()
    }

    #[test]
    fn dimensions() {
        assert_eq!(reference_basis_curl::<f64>(1, [0.2, 0.3]).unwrap().values.len(), 3);
        assert_eq!(reference_basis_curl::<f64>(2, [0.2, 0.3]).unwrap().values.len(), 8);
        assert_eq!(reference_basis_scalar::<f64>(1, [0.2, 0.3]).unwrap().values.len(), 3);
        assert_eq!(reference_basis_scalar::<f64>(2, [0.2, 0.3]).unwrap().values.len(), 6);
        assert_eq!(face_basis::<f64>(0, 0.3).len(), 2);
        assert_eq!(face_basis::<f64>(1, 0.3).len(), 4);
        assert!(matches!(
            ReferenceElement::<f64>::new(0),
            Err(Error::UnsupportedDegree(0))
        ));
        assert!(matches!(
            ReferenceElement::<f64>::new(3),
            Err(Error::UnsupportedDegree(3))
        ));
    }

    #[test]
    fn orthonormal_on_reference() {
        for l in 1..=2 {
            let re = ReferenceElement::<f64>::new(l).unwrap();
            let r = tri_rule(2 * l + 2);
            let n = re.dim_nedelec();
            let mut g = DMatrix::<f64>::zeros(n, n);
            let ns = re.dim_scalar();
            let mut gs = DMatrix::<f64>::zeros(ns, ns);
            for (p, w) in r.iter() {
                let e = re.nedelec(p);
                let s = re.scalar(p);
                for i in 0..n {
                    for j in 0..n {
                        g[(i, j)] += w * (e.values[i][0] * e.values[j][0] + e.values[i][1] * e.values[j][1]);
                    }
                }
                for i in 0..ns {
                    for j in 0..ns {
                        gs[(i, j)] += w * s.values[i] * s.values[j];
                    }
                }
            }
            assert!((g - DMatrix::identity(n, n)).amax() < 1e-12);
            assert!((gs - DMatrix::identity(ns, ns)).amax() < 1e-12);
        }
    }

    #[test]
    fn lowest_order_span_contains_constants_and_curls_are_constant() {
        let re = ReferenceElement::<f64>::new(1).unwrap();
        let a = re.nedelec([0.1, 0.2]);
        let b = re.nedelec([0.6, 0.3]);
        for i in 0..3 {
            assert!((a.curls[i] - b.curls[i]).abs() < 1e-13);
        }
        // The first two functions are scaled copies of e₁ and e₂.
        assert!(a.values[0][1].abs() < 1e-14 && (a.values[0][0] - b.values[0][0]).abs() < 1e-14);
        assert!(a.values[1][0].abs() < 1e-14 && (a.values[1][1] - b.values[1][1]).abs() < 1e-14);
    }

    #[test]
    fn curl_matches_finite_differences() {
        for l in 1..=2 {
            let re = ReferenceElement::<f64>::new(l).unwrap();
            let h = 1e-6;
            for p in [[0.2, 0.3], [0.5, 0.1], [0.1, 0.7]] {
                let e = re.nedelec(p);
                let xp = re.nedelec([p[0] + h, p[1]]);
                let xm = re.nedelec([p[0] - h, p[1]]);
                let yp = re.nedelec([p[0], p[1] + h]);
                let ym = re.nedelec([p[0], p[1] - h]);
                for i in 0..e.values.len() {
                    let dvy_dx = (xp.values[i][1] - xm.values[i][1]) / (2.0 * h);
                    let dvx_dy = (yp.values[i][0] - ym.values[i][0]) / (2.0 * h);
                    assert!((dvy_dx - dvx_dy - e.curls[i]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn scalar_gradients_match_finite_differences() {
        for l in 1..=2 {
            let re = ReferenceElement::<f64>::new(l).unwrap();
            let h = 1e-6;
            let p = [0.25, 0.35];
            let e = re.scalar(p);
            let xp = re.scalar([p[0] + h, p[1]]).values;
            let xm = re.scalar([p[0] - h, p[1]]).values;
            let yp = re.scalar([p[0], p[1] + h]).values;
            let ym = re.scalar([p[0], p[1] - h]).values;
            for i in 0..e.values.len() {
                assert!(((xp[i] - xm[i]) / (2.0 * h) - e.grads[i][0]).abs() < 1e-6);
                assert!(((yp[i] - ym[i]) / (2.0 * h) - e.grads[i][1]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rotated_part_satisfies_x_dot_q_zero() {
        for l in 1..=2 {
            for r in raw_nedelec(l)
                .into_iter()
                .filter(|r| matches!(r, RawVector::Rotated { .. }))
            {
                let p = [0.3, 0.45];
                let (v, _) = r.eval::<f64>(p);
                assert!((p[0] * v[0] + p[1] * v[1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn face_basis_orthonormal() {
        let r = quadrature_rule::<f64>(Domain::Segment, 8).unwrap();
        for l in 0..=2 {
            let n = 2 * (l + 1);
            let mut g = DMatrix::<f64>::zeros(n, n);
            for (s, w) in r.segment_iter() {
                let b = face_basis::<f64>(l, s);
                for i in 0..n {
                    for j in 0..n {
                        g[(i, j)] += w * (b[i][0] * b[j][0] + b[i][1] * b[j][1]);
                    }
                }
            }
            assert!((g - DMatrix::identity(n, n)).amax() < 1e-13);
        }
    }

    #[test]
    fn f32_basis_evaluates() {
        let re = ReferenceElement::<f32>::new(2).unwrap();
        let e = re.nedelec([0.2, 0.2]);
        assert_eq!(e.values.len(), 8);
        assert!(e.curls.iter().all(|c| c.is_finite()));
    }
}
