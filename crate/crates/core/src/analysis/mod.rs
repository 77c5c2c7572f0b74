//! Verification harness: exact solutions, error norms, residual operators,
//! stability-constant estimators and convergence studies.
//!
//! The constant estimators solve dense eigenproblems and are capped at
//! [`crate::linalg::DENSE_SIZE_CAP`] unknowns. They probe mesh-independence
//! on small meshes and do not scale.

pub mod constants;
pub mod convergence;
pub mod errors;
pub mod exact;
pub mod residual;

use nalgebra::DVector;

use crate::assembly::DgContext;
use crate::quadrature::{quadrature_rule, Domain, QuadratureRule};
use crate::scalar::{cross2, dot2, Real, Vec2};
use crate::spaces::{error_exactness, face_basis, legendre_modes};
use crate::Result;

pub use constants::{
    coercivity_spot_check, conforming_average_ratio, continuity_constant, friedrichs_constant, gradient_embedding,
    indefinite_infsup_constant, infsup_constant_b, kernel_ellipticity_constant, lifting_stability_by_class,
    SampleStatistics,
};
pub use convergence::{convergence_study, ConvergenceReport, Formulation, LevelRecord, ProblemKind, StudyConfig};
pub use errors::{best_approximation, error_norms, ErrorNorms};
pub use exact::ExactSolution;
pub use residual::{consistency_check_r1, residual_r1_norm, residual_r1_vector, residual_r2};

pub use crate::spaces::conforming::conforming_average;

/// Triangle and segment rules used for integrals involving exact fields.
pub(crate) struct FineRules<T> {
    pub volume: QuadratureRule<T>,
    pub face: QuadratureRule<T>,
}

impl<T: Real> FineRules<T> {
    pub fn new(degree: usize) -> Result<Self> {
        Ok(FineRules {
            volume: quadrature_rule(Domain::Triangle, error_exactness(degree))?,
            face: quadrature_rule(Domain::Segment, error_exactness(degree))?,
        })
    }
}

/// Modes of `[[w]]_T` on face `f` for a pointwise field `w(k, x)`, in the
/// data basis of the tangential liftings. Boundary data `g`, if present, is
/// subtracted on boundary faces.
pub(crate) fn tangential_data<T: Real>(
    ctx: &DgContext<T>,
    rules: &FineRules<T>,
    f: usize,
    w: &dyn Fn(usize, Vec2<T>) -> Vec2<T>,
    g: Option<&dyn Fn(Vec2<T>) -> Vec2<T>>,
) -> DVector<T> {
    let d = &ctx.disc;
    let face = d.faces.face(f);
    let nt = d.layout.tangential_dim();
    let scale = T::one() / face.diameter.sqrt();
    let mut eta = DVector::zeros(nt);
    for p in d.face_points(f, &rules.face) {
        let mut value = T::zero();
        for k in face.support() {
            let s = face.side_sign(k);
            let n = [s * face.normal[0], s * face.normal[1]];
            value += cross2(n, w(k, p.physical));
        }
        if let (Some(g), true) = (g, face.is_boundary()) {
            value -= cross2(face.normal, g(p.physical));
        }
        for (a, m) in legendre_modes(nt, p.s).into_iter().enumerate() {
            eta[a] += p.weight * value * m * scale;
        }
    }
    eta
}

/// Modes of `[[q]]_N` on face `f` for a pointwise scalar `q(k, x)`, in the
/// `M_h` data basis.
pub(crate) fn normal_data<T: Real>(
    ctx: &DgContext<T>,
    rules: &FineRules<T>,
    f: usize,
    q: &dyn Fn(usize, Vec2<T>) -> T,
) -> DVector<T> {
    let d = &ctx.disc;
    let face = d.faces.face(f);
    let l = d.degree();
    let scale = T::one() / face.diameter.sqrt();
    let mut xi = DVector::zeros(d.layout.local_dim(crate::spaces::Space::M));
    for p in d.face_points(f, &rules.face) {
        let mut jump = [T::zero(); 2];
        for k in face.support() {
            let s = face.side_sign(k) * q(k, p.physical);
            jump[0] += s * face.normal[0];
            jump[1] += s * face.normal[1];
        }
        for (a, b) in face_basis(l, p.s).into_iter().enumerate() {
            xi[a] += p.weight * dot2(jump, b) * scale;
        }
    }
    xi
}
