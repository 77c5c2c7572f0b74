//! The consistency residuals `R_1` and `R_2` evaluated on exact fields.
//!
//! Both forms extend to non-discrete arguments through the lifting
//! representation, which is how the exact fields enter here: `b_h(u, q)`
//! tests the discrete lifting `R([[q]]_N)` against the exact `εu`, and the
//! flux terms of `a_h` lift the exact tangential jumps.

use nalgebra::DVector;

use super::exact::ExactSolution;
use super::{normal_data, tangential_data, FineRules};
use crate::assembly::{DgContext, NormMatrices};
use crate::error::{Error, Result};
use crate::linalg::SparseLu;
use crate::scalar::{dot2, Real};
use crate::spaces::conforming::{nedelec_conforming_basis, NedelecMoments};
use crate::spaces::Space;

/// The vector `r_q = b_h(u, ψ_q)` over the `Q_h` basis.
fn residual_r2_vector<T: Real>(ctx: &DgContext<T>, exact: &ExactSolution<T>) -> Result<DVector<T>> {
    let d = &ctx.disc;
    let rules = FineRules::new(d.degree())?;
    let nv = d.layout.local_dim(Space::V);
    let nq = d.layout.local_dim(Space::Q);
    let ne = d.mesh.num_elements();
    let mut r = DVector::zeros(d.layout.dim(Space::Q));
    // m_K[j] = ∫_K εu·φ_j, reused by every face of K.
    let mut moments = vec![DVector::zeros(nv); ne];
    for k in 0..ne {
        let o = d.layout.dofs(Space::Q, k).start;
        for p in d.element_points(k, &rules.volume) {
            let eu = ctx.coeffs.eps_apply(k, (exact.u)(k, p.physical));
            let v = d.nedelec_at(k, p.physical);
            let q = d.scalar_at(k, p.physical);
            for i in 0..nq {
                r[o + i] -= p.weight * dot2(eu, q.grads[i]);
            }
            for j in 0..nv {
                moments[k][j] += p.weight * dot2(eu, v.values[j]);
            }
        }
    }
    for fl in ctx.lifts.faces() {
        let mut z = DVector::zeros(fl.vector[0].ncols());
        for (side, &k) in fl.support.iter().enumerate() {
            z += fl.vector[side].transpose() * &moments[k];
        }
        for (side, &k) in fl.support.iter().enumerate() {
            let o = d.layout.dofs(Space::Q, k).start;
            let mut dst = r.rows_mut(o, nq);
            dst += fl.jump_normal[side].transpose() * &z;
        }
    }
    Ok(r)
}

/// `sup_q R_2(u, q) / ‖q‖_{Q(h)}` with `R_2(u, q) = b_h(u, q)`, computed as
/// `(rᵀ N_Q⁻¹ r)^{1/2}` for the `Q(h)` Gram matrix `N_Q`.
pub fn residual_r2<T: Real>(ctx: &DgContext<T>, norms: &NormMatrices<T>, exact: &ExactSolution<T>) -> Result<T> {
    if !exact.divergence_free {
        return Err(Error::Precondition(format!(
            "R_2 needs a divergence-free field; '{}' is not flagged as such",
            exact.name
        )));
    }
    let r = residual_r2_vector(ctx, exact)?;
    let lu = SparseLu::factor(&norms.norm_q)?;
    let y = lu.solve_refined(&norms.norm_q, &r, 1);
    Ok(r.dot(&y).max(T::zero()).sqrt())
}

/// The functional `v ↦ A_h(u,0; v,0) − k²(εu, v) + B_h(v,0; p) − (j, v)` over
/// the `V_h` basis, for the exact `(u, p)` and wave number `k`.
pub fn residual_r1_vector<T: Real>(ctx: &DgContext<T>, exact: &ExactSolution<T>, k: T) -> Result<DVector<T>> {
    let d = &ctx.disc;
    let rules = FineRules::new(d.degree())?;
    let nv = d.layout.local_dim(Space::V);
    let nc = d.layout.local_dim(Space::Curl);
    let ne = d.mesh.num_elements();
    let k2 = k * k;
    let mut r = DVector::zeros(d.layout.dim(Space::V));
    // w_K[a] = ∫_K c_a μ⁻¹ curl u.
    let mut curl_moments = vec![DVector::zeros(nc); ne];
    for e in 0..ne {
        let o = d.layout.dofs(Space::V, e).start;
        let mu_inv = ctx.coeffs.mu_inv(e);
        for p in d.element_points(e, &rules.volume) {
            let x = p.physical;
            let v = d.nedelec_at(e, x);
            let c = d.curl_space_at(e, x);
            let eu = ctx.coeffs.eps_apply(e, (exact.u)(e, x));
            let cu = mu_inv * (exact.curl_u)(e, x);
            let gp = ctx.coeffs.eps_apply(e, (exact.grad_p)(e, x));
            let j = (exact.source)(e, x);
            for i in 0..nv {
                let phi = v.values[i];
                r[o + i] += p.weight * (cu * v.curls[i] - k2 * dot2(eu, phi) - dot2(gp, phi) - dot2(j, phi));
            }
            for a in 0..nc {
                curl_moments[e][a] += p.weight * c[a] * cu;
            }
        }
    }
    let boundary = exact.boundary.as_deref().map(|g| g as &dyn Fn(_) -> _);
    for (f, fl) in ctx.lifts.faces().iter().enumerate() {
        let eta = tangential_data(ctx, &rules, f, &*exact.u, boundary);
        let xi = normal_data(ctx, &rules, f, &*exact.p);
        let mut z = DVector::zeros(eta.len());
        for (side, &e) in fl.support.iter().enumerate() {
            z += fl.tangential[side].transpose() * &curl_moments[e];
        }
        let penalty = &fl.gram_mu * &eta * ctx.alpha[f];
        for (side, &e) in fl.support.iter().enumerate() {
            let o = d.layout.dofs(Space::V, e).start;
            let em = &ctx.elements[e];
            let lifted_u = &fl.tangential[side] * &eta;
            let lifted_p = &fl.vector[side] * &xi;
            let mut dst = r.rows_mut(o, nv);
            dst -= em.curl_moments.transpose() * lifted_u * ctx.coeffs.mu_inv(e);
            dst -= fl.jump_tangential[side].transpose() * &z;
            dst += fl.jump_tangential[side].transpose() * &penalty;
            dst += &em.mass_v_eps * lifted_p;
        }
    }
    Ok(r)
}

/// Largest `|R_1(u,p; v,0)| / ‖v‖_{V(h)}` over the basis of `V_{h0}^c`.
pub fn consistency_check_r1<T: Real>(
    ctx: &DgContext<T>,
    norms: &NormMatrices<T>,
    exact: &ExactSolution<T>,
    k: T,
) -> Result<T> {
    let r = residual_r1_vector(ctx, exact, k)?;
    let moments = NedelecMoments::new(&ctx.disc)?;
    let basis = nedelec_conforming_basis(&ctx.disc, &moments);
    let mut worst = T::zero();
    for j in 0..basis.ncols() {
        let v = basis.column(j);
        let n = norms.norm_v(&v);
        if n > T::zero() {
            worst = worst.max(r.dot(&v).abs() / n);
        }
    }
    Ok(worst)
}

/// `sup_{v ∈ V_h} |R_1(u,p; v,0)| / ‖v‖_{V(h)}` over the full broken space.
pub fn residual_r1_norm<T: Real>(
    ctx: &DgContext<T>,
    norms: &NormMatrices<T>,
    exact: &ExactSolution<T>,
    k: T,
) -> Result<T> {
    let r = residual_r1_vector(ctx, exact, k)?;
    let lu = SparseLu::factor(&norms.norm_v)?;
    let y = lu.solve_refined(&norms.norm_v, &r, 1);
    Ok(r.dot(&y).max(T::zero()).sqrt())
}
