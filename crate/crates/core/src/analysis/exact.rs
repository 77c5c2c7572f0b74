//! Manufactured solutions with closed-form fields and sources.
//!
//! All closures take the element index alongside the point so that
//! piecewise discrete fields can serve as exact solutions as well.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::assembly::{BoundaryData, Source};
use crate::error::{Error, Result};
use crate::scalar::{Real, Vec2};
use crate::spaces::{conforming::scalar_conforming_basis, Discretization};

pub type VectorField<T> = Arc<dyn Fn(usize, Vec2<T>) -> Vec2<T> + Send + Sync>;
pub type ScalarField<T> = Arc<dyn Fn(usize, Vec2<T>) -> T + Send + Sync>;

/// Exact fields `(u, p)` of a Maxwell problem together with the data that
/// produces them.
#[derive(Clone)]
pub struct ExactSolution<T: Real = f64> {
    pub name: String,
    pub u: VectorField<T>,
    pub curl_u: ScalarField<T>,
    pub p: ScalarField<T>,
    pub grad_p: VectorField<T>,
    /// `j = curl(μ⁻¹ curl u) − k²εu − ε∇p`.
    pub source: Source<T>,
    /// Tangential boundary data when `n×u ≠ 0` on the boundary.
    pub boundary: Option<BoundaryData<T>>,
    /// Sobolev regularity index `s` used for expected rates (`∞` if smooth).
    pub regularity: f64,
    pub divergence_free: bool,
}

impl<T: Real> std::fmt::Debug for ExactSolution<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExactSolution")
            .field("name", &self.name)
            .field("regularity", &self.regularity)
            .field("divergence_free", &self.divergence_free)
            .finish()
    }
}

fn c<T: Real>(x: f64) -> T {
    T::lit(x)
}

impl<T: Real> ExactSolution<T> {
    /// `u = (sin πy, sin πx)`, `p = 0` on the unit square with `μ = ε = I`;
    /// `curl curl u = π²u`, so `j = (π² − k²)u`.
    pub fn sine(k: T) -> Self {
        let pi = c::<T>(PI);
        let u = move |_: usize, x: Vec2<T>| [(pi * x[1]).sin(), (pi * x[0]).sin()];
        let factor = pi * pi - k * k;
        ExactSolution {
            name: "sine".into(),
            u: Arc::new(u),
            curl_u: Arc::new(move |_, x| pi * (pi * x[0]).cos() - pi * (pi * x[1]).cos()),
            p: Arc::new(|_, _| T::zero()),
            grad_p: Arc::new(|_, _| [T::zero(); 2]),
            source: Arc::new(move |k, x| {
                let v = u(k, x);
                [factor * v[0], factor * v[1]]
            }),
            boundary: None,
            regularity: f64::INFINITY,
            divergence_free: true,
        }
    }

    /// The sine field with the pressure `p = sin πx sin πy`, so that
    /// `j = (π² − k²)u − ∇p`.
    pub fn sine_pressure(k: T) -> Self {
        let pi = c::<T>(PI);
        let base = Self::sine(k);
        let grad_p = move |_: usize, x: Vec2<T>| {
            [
                pi * (pi * x[0]).cos() * (pi * x[1]).sin(),
                pi * (pi * x[0]).sin() * (pi * x[1]).cos(),
            ]
        };
        let base_source = base.source.clone();
        ExactSolution {
            name: "sine_pressure".into(),
            p: Arc::new(move |_, x| (pi * x[0]).sin() * (pi * x[1]).sin()),
            grad_p: Arc::new(grad_p),
            source: Arc::new(move |k, x| {
                let j = base_source(k, x);
                let g = grad_p(k, x);
                [j[0] - g[0], j[1] - g[1]]
            }),
            ..base
        }
    }

    /// `u = (y(1−y), x(1−x))`, `p = x(1−x)y(1−y)` on the unit square with
    /// `μ = ε = I`; `curl curl u = (2, 2)`.
    pub fn polynomial(k: T) -> Self {
        let one = T::one();
        let two = c::<T>(2.0);
        let u = move |_: usize, x: Vec2<T>| [x[1] * (one - x[1]), x[0] * (one - x[0])];
        let grad_p = move |_: usize, x: Vec2<T>| {
            [
                (one - two * x[0]) * x[1] * (one - x[1]),
                x[0] * (one - x[0]) * (one - two * x[1]),
            ]
        };
        let k2 = k * k;
        ExactSolution {
            name: "polynomial".into(),
            u: Arc::new(u),
            curl_u: Arc::new(move |_, x| two * x[1] - two * x[0]),
            p: Arc::new(move |_, x| x[0] * (one - x[0]) * x[1] * (one - x[1])),
            grad_p: Arc::new(grad_p),
            source: Arc::new(move |k, x| {
                let v = u(k, x);
                let g = grad_p(k, x);
                [two - k2 * v[0] - g[0], two - k2 * v[1] - g[1]]
            }),
            boundary: None,
            regularity: f64::INFINITY,
            divergence_free: true,
        }
    }

    /// Singular field `u = ∇(r^{2/3} sin(2θ/3))` on the L-shaped domain
    /// (−1,1)² \ [0,1)×(−1,0], `θ ∈ [0, 3π/2]`, with `μ = ε = I`.
    /// `u` is curl- and divergence-free, so `p = 0` and `j = −k²u`; its
    /// tangential trace is imposed as boundary data.
    pub fn lshape(k: T) -> Self {
        let alpha = 2.0 / 3.0;
        let u = move |x: Vec2<T>| -> Vec2<T> {
            let (xf, yf) = (x[0].as_f64(), x[1].as_f64());
            let r = xf.hypot(yf);
            if r == 0.0 {
                return [T::zero(); 2];
            }
            let mut theta = yf.atan2(xf);
            if theta < 0.0 {
                theta += 2.0 * PI;
            }
            let scale = alpha * r.powf(alpha - 1.0);
            [
                T::lit(scale * ((alpha - 1.0) * theta).sin()),
                T::lit(scale * ((alpha - 1.0) * theta).cos()),
            ]
        };
        let k2 = k * k;
        ExactSolution {
            name: "lshape".into(),
            u: Arc::new(move |_, x| u(x)),
            curl_u: Arc::new(|_, _| T::zero()),
            p: Arc::new(|_, _| T::zero()),
            grad_p: Arc::new(|_, _| [T::zero(); 2]),
            source: Arc::new(move |_, x| {
                let v = u(x);
                [-k2 * v[0], -k2 * v[1]]
            }),
            boundary: Some(Arc::new(u)),
            regularity: alpha,
            divergence_free: true,
        }
    }

    /// Zero fields with zero data.
    pub fn zero() -> Self {
        ExactSolution {
            name: "zero".into(),
            u: Arc::new(|_, _| [T::zero(); 2]),
            curl_u: Arc::new(|_, _| T::zero()),
            p: Arc::new(|_, _| T::zero()),
            grad_p: Arc::new(|_, _| [T::zero(); 2]),
            source: Arc::new(|_, _| [T::zero(); 2]),
            boundary: None,
            regularity: f64::INFINITY,
            divergence_free: true,
        }
    }

    /// Gradient source `j = ε∇q_h` for the conforming interpolant `q_h ∈ Q_h^c`
    /// of the bubble `x(1−x)y(1−y)` (vacuum coefficients). The solution is
    /// `u = 0`, `p = −q_h`, which the scheme reproduces exactly.
    pub fn gradient(disc: &Discretization<T>) -> Result<Self> {
        let basis = scalar_conforming_basis(disc)?;
        if basis.ncols() == 0 {
            return Err(Error::Precondition(
                "gradient problem needs at least one interior Lagrange node".into(),
            ));
        }
        // Nodal values: each conforming basis column is a nodal function, so
        // weight it by the bubble at its node, recovered from the element
        // where the column's value is 1.
        let bubble = |x: Vec2<T>| x[0] * (T::one() - x[0]) * x[1] * (T::one() - x[1]);
        let nodes = lagrange_nodes(disc);
        let weights = nalgebra::DVector::from_iterator(nodes.len(), nodes.iter().map(|&x| bubble(x)));
        let q = basis.combine(&weights);
        let disc = Arc::new(disc.clone());
        let (d1, d2, d3) = (disc.clone(), disc.clone(), disc);
        let (q1, q2, q3) = (q.clone(), q.clone(), q);
        Ok(ExactSolution {
            name: "gradient".into(),
            u: Arc::new(|_, _| [T::zero(); 2]),
            curl_u: Arc::new(|_, _| T::zero()),
            p: Arc::new(move |k, x| -d1.eval_q(&q1, k, x).0),
            grad_p: Arc::new(move |k, x| {
                let g = d2.eval_q(&q2, k, x).1;
                [-g[0], -g[1]]
            }),
            source: Arc::new(move |k, x| d3.eval_q(&q3, k, x).1),
            boundary: None,
            regularity: f64::INFINITY,
            divergence_free: true,
        })
    }
}

/// Physical positions of the interior Lagrange nodes in the column order of
/// [`scalar_conforming_basis`].
pub fn lagrange_nodes<T: Real>(disc: &Discretization<T>) -> Vec<Vec2<T>> {
    let l = disc.degree();
    let mut on_boundary = vec![false; disc.mesh.num_vertices()];
    for f in disc.faces.faces().iter().filter(|f| f.is_boundary()) {
        on_boundary[f.vertices[0]] = true;
        on_boundary[f.vertices[1]] = true;
    }
    let mut nodes: Vec<Vec2<T>> = (0..disc.mesh.num_vertices())
        .filter(|&v| !on_boundary[v])
        .map(|v| disc.mesh.vertices()[v])
        .collect();
    let lf = T::from_usize_lossy(l);
    for face in disc.faces.faces().iter().filter(|f| !f.is_boundary()) {
        for m in 1..l {
            nodes.push(face.point(&disc.mesh, T::from_usize_lossy(m) / lf));
        }
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_curl(e: &ExactSolution<f64>, x: Vec2<f64>) -> f64 {
        let h = 1e-6;
        let u = &e.u;
        (u(0, [x[0] + h, x[1]])[1] - u(0, [x[0] - h, x[1]])[1]) / (2.0 * h)
            - (u(0, [x[0], x[1] + h])[0] - u(0, [x[0], x[1] - h])[0]) / (2.0 * h)
    }

    fn fd_div(e: &ExactSolution<f64>, x: Vec2<f64>) -> f64 {
        let h = 1e-6;
        let u = &e.u;
        (u(0, [x[0] + h, x[1]])[0] - u(0, [x[0] - h, x[1]])[0]) / (2.0 * h)
            + (u(0, [x[0], x[1] + h])[1] - u(0, [x[0], x[1] - h])[1]) / (2.0 * h)
    }

    /// `j + ε∇p − curl curl u + k²u` via nested finite differences of `curl u`.
    fn pde_residual(e: &ExactSolution<f64>, k: f64, x: Vec2<f64>) -> f64 {
        let h = 1e-5;
        let c = &e.curl_u;
        let curl_curl = [
            (c(0, [x[0], x[1] + h]) - c(0, [x[0], x[1] - h])) / (2.0 * h),
            -(c(0, [x[0] + h, x[1]]) - c(0, [x[0] - h, x[1]])) / (2.0 * h),
        ];
        let u = (e.u)(0, x);
        let g = (e.grad_p)(0, x);
        let j = (e.source)(0, x);
        let r = [
            curl_curl[0] - k * k * u[0] - g[0] - j[0],
            curl_curl[1] - k * k * u[1] - g[1] - j[1],
        ];
        r[0].abs().max(r[1].abs())
    }

    #[test]
    fn smooth_solutions_satisfy_the_equations() {
        let k = 1.3;
        let pts = [[0.2, 0.3], [0.7, 0.45], [0.5, 0.9]];
        for e in [
            ExactSolution::sine(k),
            ExactSolution::sine_pressure(k),
            ExactSolution::polynomial(k),
        ] {
            for x in pts {
                assert!((fd_curl(&e, x) - (e.curl_u)(0, x)).abs() < 1e-6, "{}", e.name);
                assert!(fd_div(&e, x).abs() < 1e-6, "{}", e.name);
                assert!(pde_residual(&e, k, x) < 1e-4, "{}", e.name);
            }
        }
    }

    #[test]
    fn lshape_field_is_gradient_of_harmonic() {
        let e = ExactSolution::<f64>::lshape(1.0);
        for x in [[-0.5, 0.3], [0.4, 0.6], [-0.3, -0.7]] {
            assert!(fd_curl(&e, x).abs() < 1e-6);
            assert!(fd_div(&e, x).abs() < 1e-6);
        }
        // Zero tangential trace on the edges meeting at the reentrant corner.
        let on_x_axis = (e.u)(0, [0.5, 0.0]);
        assert!(on_x_axis[0].abs() < 1e-14);
        let on_neg_y = (e.u)(0, [0.0, -0.5]);
        assert!(on_neg_y[1].abs() < 1e-14);
    }

    #[test]
    fn boundary_traces_vanish_for_square_problems() {
        for e in [ExactSolution::<f64>::sine(1.0), ExactSolution::polynomial(1.0)] {
            for s in [0.1, 0.5, 0.8] {
                assert!((e.u)(0, [0.0, s])[1].abs() < 1e-15);
                assert!((e.u)(0, [1.0, s])[1].abs() < 1e-15);
                assert!((e.u)(0, [s, 0.0])[0].abs() < 1e-15);
                assert!((e.u)(0, [s, 1.0])[0].abs() < 1e-15);
            }
        }
    }
}
