//! Errors of discrete solutions measured in the DG norms.

use nalgebra::DVector;

use super::exact::ExactSolution;
use super::{normal_data, tangential_data, FineRules};
use crate::assembly::{DgContext, NormMatrices};
use crate::error::Result;
use crate::linalg::SparseLu;
use crate::scalar::{dot2, Real};
use crate::spaces::{FemField, Space};

/// `e_V = ‖u − u_h‖_{V(h)}` and `e_Q = ‖p − p_h‖_{Q(h)}` with their parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms<T> {
    pub e_v: T,
    pub e_q: T,
    /// `‖ε^{1/2}(u − u_h)‖`.
    pub l2_u: T,
    /// `‖μ^{−1/2}(curl u − curl_h u_h)‖`.
    pub curl_u: T,
    /// `(Σ_F ‖μ^{−1/2}R_F([[u − u_h]]_T)‖²)^{1/2}`.
    pub jumps_u: T,
    /// `‖ε^{1/2}∇_h(p − p_h)‖`.
    pub grad_p: T,
    /// `(Σ_F ‖ε^{1/2}R_F([[p − p_h]]_N)‖²)^{1/2}`.
    pub jumps_p: T,
}

/// DG-norm errors of `(u_h, p_h)` against the exact fields, with quadrature
/// of exactness `2ℓ+6` for the continuous parts. Jumps of the exact `u`
/// include its boundary trace, so inhomogeneous tangential data is measured
/// correctly.
pub fn error_norms<T: Real>(
    ctx: &DgContext<T>,
    exact: &ExactSolution<T>,
    u_h: &FemField<T>,
    p_h: &FemField<T>,
) -> Result<ErrorNorms<T>> {
    let d = &ctx.disc;
    let uc = u_h.expect(&d.layout, Space::V)?;
    let pc = p_h.expect(&d.layout, Space::Q)?;
    let rules = FineRules::new(d.degree())?;
    let (mut l2, mut curl, mut grad) = (T::zero(), T::zero(), T::zero());
    for k in 0..d.mesh.num_elements() {
        let mu_inv = ctx.coeffs.mu_inv(k);
        for p in d.element_points(k, &rules.volume) {
            let x = p.physical;
            let (v, c) = d.eval_v(uc, k, x);
            let (_, g) = d.eval_q(pc, k, x);
            let u = (exact.u)(k, x);
            let e = [u[0] - v[0], u[1] - v[1]];
            l2 += p.weight * dot2(ctx.coeffs.eps_apply(k, e), e);
            let ec = (exact.curl_u)(k, x) - c;
            curl += p.weight * mu_inv * ec * ec;
            let gp = (exact.grad_p)(k, x);
            let eg = [gp[0] - g[0], gp[1] - g[1]];
            grad += p.weight * dot2(ctx.coeffs.eps_apply(k, eg), eg);
        }
    }
    let (mut ju, mut jp) = (T::zero(), T::zero());
    for (f, fl) in ctx.lifts.faces().iter().enumerate() {
        let eta = tangential_data(ctx, &rules, f, &*exact.u, None) - fl.tangential_jump(d, uc);
        ju += eta.dot(&(&fl.gram_mu * &eta));
        let xi = normal_data(ctx, &rules, f, &*exact.p) - fl.normal_jump(d, pc);
        jp += xi.dot(&(&fl.gram_eps * &xi));
    }
    let z = T::zero();
    Ok(ErrorNorms {
        e_v: (l2 + curl + ju).max(z).sqrt(),
        e_q: (grad + jp).max(z).sqrt(),
        l2_u: l2.max(z).sqrt(),
        curl_u: curl.max(z).sqrt(),
        jumps_u: ju.max(z).sqrt(),
        grad_p: grad.max(z).sqrt(),
        jumps_p: jp.max(z).sqrt(),
    })
}

/// Best approximation of the exact `u` in `V_h` with respect to
/// `‖·‖_{V(h)}`, returned with its error `min_{v ∈ V_h} ‖u − v‖_{V(h)}`.
pub fn best_approximation<T: Real>(
    ctx: &DgContext<T>,
    norms: &NormMatrices<T>,
    exact: &ExactSolution<T>,
) -> Result<(FemField<T>, T)> {
    let d = &ctx.disc;
    let rules = FineRules::new(d.degree())?;
    let nv = d.layout.local_dim(Space::V);
    let mut rhs = DVector::zeros(d.layout.dim(Space::V));
    for k in 0..d.mesh.num_elements() {
        let o = d.layout.dofs(Space::V, k).start;
        let mu_inv = ctx.coeffs.mu_inv(k);
        for p in d.element_points(k, &rules.volume) {
            let e = d.nedelec_at(k, p.physical);
            let eu = ctx.coeffs.eps_apply(k, (exact.u)(k, p.physical));
            let cu = mu_inv * (exact.curl_u)(k, p.physical);
            for i in 0..nv {
                rhs[o + i] += p.weight * (dot2(eu, e.values[i]) + cu * e.curls[i]);
            }
        }
    }
    for (f, fl) in ctx.lifts.faces().iter().enumerate() {
        let g = &fl.gram_mu * tangential_data(ctx, &rules, f, &*exact.u, None);
        for (side, &k) in fl.support.iter().enumerate() {
            let o = d.layout.dofs(Space::V, k).start;
            let mut dst = rhs.rows_mut(o, nv);
            dst += fl.jump_tangential[side].transpose() * &g;
        }
    }
    let lu = SparseLu::factor(&norms.norm_v)?;
    let c = lu.solve_refined(&norms.norm_v, &rhs, 1);
    let v = FemField::new(&d.layout, Space::V, c)?;
    let q = FemField::zeros(&d.layout, Space::Q);
    let e = error_norms(ctx, exact, &v, &q)?.e_v;
    Ok((v, e))
}
