//! Element matrices shared by the lifting and assembly stages.

use nalgebra::DMatrix;

use crate::coefficients::Coefficients;
use crate::scalar::{dot2, Real};
use crate::spaces::{Discretization, Space};

/// Volume integrals on one element, in the local bases of `V_h`, `Q_h` and
/// the curl space.
#[derive(Clone, Debug)]
pub struct ElementMatrices<T: Real> {
    /// `∫ φ_i·φ_j`.
    pub mass_v: DMatrix<T>,
    /// `∫ εφ_j·φ_i`.
    pub mass_v_eps: DMatrix<T>,
    /// `∫ c_i c_j` over the curl-space basis.
    pub mass_curl: DMatrix<T>,
    /// `∫ c_i curl φ_j`.
    pub curl_moments: DMatrix<T>,
    /// `∫ μ⁻¹ curl φ_i curl φ_j`.
    pub curl_curl: DMatrix<T>,
    /// `∫ ψ_i ψ_j`.
    pub mass_q: DMatrix<T>,
    /// `∫ ε∇ψ_j·∇ψ_i`.
    pub stiffness_q_eps: DMatrix<T>,
    /// `∫ εφ_j·∇ψ_i` (rows `Q_h`, columns `V_h`).
    pub grad_eps: DMatrix<T>,
}

impl<T: Real> ElementMatrices<T> {
    pub fn new(d: &Discretization<T>, coeffs: &Coefficients<T>, k: usize) -> Self {
        let nv = d.layout.local_dim(Space::V);
        let nq = d.layout.local_dim(Space::Q);
        let nc = d.layout.local_dim(Space::Curl);
        let mu_inv = coeffs.mu_inv(k);
        let mut m = ElementMatrices {
            mass_v: DMatrix::zeros(nv, nv),
            mass_v_eps: DMatrix::zeros(nv, nv),
            mass_curl: DMatrix::zeros(nc, nc),
            curl_moments: DMatrix::zeros(nc, nv),
            curl_curl: DMatrix::zeros(nv, nv),
            mass_q: DMatrix::zeros(nq, nq),
            stiffness_q_eps: DMatrix::zeros(nq, nq),
            grad_eps: DMatrix::zeros(nq, nv),
        };
        let map = d.map(k);
        for p in d.element_points(k, d.volume_rule()) {
            let w = p.weight;
            let v = d.reference.nedelec_physical(map, p.reference);
            let q = d.reference.scalar_physical(map, p.reference);
            let c = d.reference.curl_space(p.reference);
            let eps_v: Vec<_> = v.values.iter().map(|&x| coeffs.eps_apply(k, x)).collect();
            for i in 0..nv {
                for j in 0..nv {
                    m.mass_v[(i, j)] += w * dot2(v.values[i], v.values[j]);
                    m.mass_v_eps[(i, j)] += w * dot2(v.values[i], eps_v[j]);
                    m.curl_curl[(i, j)] += w * mu_inv * v.curls[i] * v.curls[j];
                }
            }
            for i in 0..nc {
                for j in 0..nc {
                    m.mass_curl[(i, j)] += w * c[i] * c[j];
                }
                for j in 0..nv {
                    m.curl_moments[(i, j)] += w * c[i] * v.curls[j];
                }
            }
            for i in 0..nq {
                let eps_g = coeffs.eps_apply(k, q.grads[i]);
                for j in 0..nq {
                    m.mass_q[(i, j)] += w * q.values[i] * q.values[j];
                    m.stiffness_q_eps[(i, j)] += w * dot2(eps_g, q.grads[j]);
                }
                for j in 0..nv {
                    m.grad_eps[(i, j)] += w * dot2(eps_v[j], q.grads[i]);
                }
            }
        }
        m
    }
}

/// Element matrices for every element of the mesh.
pub fn all_element_matrices<T: Real>(d: &Discretization<T>, coeffs: &Coefficients<T>) -> Vec<ElementMatrices<T>> {
    (0..d.mesh.num_elements())
        .map(|k| ElementMatrices::new(d, coeffs, k))
        .collect()
}
