//! Assembly of the mixed DG forms and of the DG norm Gram matrices.
//!
//! The discrete problem reads
//!
//! ```text
//! [ A − k²M_ε   Bᵀ ] [u]   [f]
//! [ B          −C  ] [p] = [0]
//! ```
//!
//! with `A ↔ a_h`, `M_ε ↔ (εu, v)`, `B ↔ b_h` (rows `Q_h`, columns `V_h`)
//! and `C ↔ c_h`. `A` and `B` can be assembled either through the lifting
//! operators or through the equivalent face integrals of jumps against
//! averages; [`Mode`] selects the path.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::coefficients::{Coefficients, Material};
use crate::error::{Error, Result};
use crate::lifting::Liftings;
use crate::linalg::{CscMatrix, Triplets};
use crate::local::{all_element_matrices, ElementMatrices};
use crate::mesh::{Mesh, FACES_PER_ELEMENT};
use crate::quadrature::{quadrature_rule, Domain};
use crate::scalar::{cross2, dot2, Real, Vec2};
use crate::spaces::{legendre_modes, load_exactness, Discretization, FemField, Space};

/// `½ + 2 n_K`, the smallest `α_F` for which coercivity of `a_h` is proven.
pub fn coercivity_threshold() -> f64 {
    0.5 + 2.0 * FACES_PER_ELEMENT as f64
}

/// Default `γ_F`.
pub const DEFAULT_GAMMA: f64 = 0.5;

/// Source `j(K, x)`; the element index allows piecewise-defined data.
pub type Source<T> = Arc<dyn Fn(usize, Vec2<T>) -> Vec2<T> + Send + Sync>;

/// Vector field `g` whose tangential trace `n×g` is imposed on the boundary.
pub type BoundaryData<T> = Arc<dyn Fn(Vec2<T>) -> Vec2<T> + Send + Sync>;

/// Per-face parameter policy for `α_F` and `γ_F`.
#[derive(Clone, Debug, PartialEq)]
pub enum FaceParameter<T> {
    Auto,
    Uniform(T),
    PerFace(Vec<T>),
}

impl<T: Real> FaceParameter<T> {
    fn resolve(&self, auto: T, faces: usize, name: &str) -> Result<Vec<T>> {
        let v = match self {
            FaceParameter::Auto => vec![auto; faces],
            FaceParameter::Uniform(x) => vec![*x; faces],
            FaceParameter::PerFace(v) => {
                if v.len() != faces {
                    return Err(Error::InvalidParameter(format!(
                        "{name}: {} values for {faces} faces",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= T::zero())) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be finite and nonnegative, got {x:?}"
            )));
        }
        Ok(v)
    }
}

/// Data of a time-harmonic Maxwell problem.
#[derive(Clone)]
pub struct ProblemSpec<T: Real = f64> {
    /// One material per tag.
    pub materials: Vec<Material<T>>,
    /// Wave number `k`.
    pub k: T,
    pub source: Source<T>,
    /// Inhomogeneous tangential boundary data; `None` means `n×u = 0`.
    pub boundary: Option<BoundaryData<T>>,
    pub alpha: FaceParameter<T>,
    pub gamma: FaceParameter<T>,
}

impl<T: Real> std::fmt::Debug for ProblemSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("materials", &self.materials)
            .field("k", &self.k)
            .field("boundary", &self.boundary.is_some())
            .field("alpha", &self.alpha)
            .field("gamma", &self.gamma)
            .finish()
    }
}

impl<T: Real> ProblemSpec<T> {
    /// Vacuum, zero source, homogeneous boundary data, default parameters.
    pub fn new(k: T) -> Self {
        ProblemSpec {
            materials: vec![Material::vacuum()],
            k,
            source: Arc::new(|_, _| [T::zero(); 2]),
            boundary: None,
            alpha: FaceParameter::Auto,
            gamma: FaceParameter::Auto,
        }
    }

    pub fn with_source(mut self, source: impl Fn(usize, Vec2<T>) -> Vec2<T> + Send + Sync + 'static) -> Self {
        self.source = Arc::new(source);
        self
    }

    pub fn with_boundary(mut self, g: impl Fn(Vec2<T>) -> Vec2<T> + Send + Sync + 'static) -> Self {
        self.boundary = Some(Arc::new(g));
        self
    }

    pub fn with_materials(mut self, materials: Vec<Material<T>>) -> Self {
        self.materials = materials;
        self
    }

    pub fn with_alpha(mut self, alpha: FaceParameter<T>) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_gamma(mut self, gamma: FaceParameter<T>) -> Self {
        self.gamma = gamma;
        self
    }
}

/// Assembly path for `a_h` and `b_h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Volume integrals of lifted jumps.
    Lifting,
    /// Face integrals of jumps against averages.
    FaceIntegral,
}

/// Everything needed to assemble forms on one mesh: bases, coefficients,
/// element matrices, liftings and the resolved face parameters.
#[derive(Clone, Debug)]
pub struct DgContext<T: Real = f64> {
    pub disc: Discretization<T>,
    pub coeffs: Coefficients<T>,
    pub elements: Vec<ElementMatrices<T>>,
    pub lifts: Liftings<T>,
    pub alpha: Vec<T>,
    pub gamma: Vec<T>,
}

impl<T: Real> DgContext<T> {
    pub fn new(mesh: Mesh<T>, degree: usize, spec: &ProblemSpec<T>) -> Result<Self> {
        let coeffs = Coefficients::new(&mesh, spec.materials.clone())?;
        let disc = Discretization::new(mesh, degree)?;
        let nf = disc.faces.len();
        let alpha = spec.alpha.resolve(T::lit(coercivity_threshold()), nf, "alpha")?;
        let gamma = spec.gamma.resolve(T::lit(DEFAULT_GAMMA), nf, "gamma")?;
        let elements = all_element_matrices(&disc, &coeffs);
        let lifts = Liftings::build(&disc, &coeffs, &elements)?;
        Ok(DgContext {
            disc,
            coeffs,
            elements,
            lifts,
            alpha,
            gamma,
        })
    }

    pub fn layout(&self) -> &crate::spaces::SpaceLayout {
        &self.disc.layout
    }

    fn offset(&self, space: Space, k: usize) -> usize {
        self.disc.layout.dofs(space, k).start
    }
}

/// Sparse blocks of the saddle-point system.
#[derive(Clone, Debug)]
pub struct SystemBlocks<T: Real = f64> {
    pub a: CscMatrix<T>,
    pub mass: CscMatrix<T>,
    pub b: CscMatrix<T>,
    pub c: CscMatrix<T>,
    pub f: DVector<T>,
    pub k: T,
}

/// Assembles `a_h`.
pub fn assemble_a<T: Real>(ctx: &DgContext<T>, mode: Mode) -> CscMatrix<T> {
    let d = &ctx.disc;
    let n = d.layout.dim(Space::V);
    let nv = d.layout.local_dim(Space::V);
    let mut t = Triplets::new(n, n);
    for (k, em) in ctx.elements.iter().enumerate() {
        let o = ctx.offset(Space::V, k);
        t.add_block(o, o, &em.curl_curl);
    }
    for (f, fl) in ctx.lifts.faces().iter().enumerate() {
        // Consistency terms: block (row v on K, column u on side t).
        let mut blocks: Vec<(usize, usize, DMatrix<T>)> = Vec::new();
        match mode {
            Mode::Lifting => {
                for (sk, &k) in fl.support.iter().enumerate() {
                    let left = ctx.elements[k].curl_moments.transpose() * &fl.tangential[sk] * ctx.coeffs.mu_inv(k);
                    for (st, &kt) in fl.support.iter().enumerate() {
                        blocks.push((k, kt, &left * &fl.jump_tangential[st]));
                    }
                }
            }
            Mode::FaceIntegral => {
                let face = d.faces.face(f);
                for &k in &fl.support {
                    for &kt in &fl.support {
                        let nt = face.side_sign(kt);
                        let normal = [nt * face.normal[0], nt * face.normal[1]];
                        let mut m = DMatrix::zeros(nv, nv);
                        for p in d.face_points(f, d.face_rule()) {
                            let ek = d.nedelec_at(k, p.physical);
                            let et = d.nedelec_at(kt, p.physical);
                            let w = p.weight * fl.weight * ctx.coeffs.mu_inv(k);
                            for i in 0..nv {
                                for j in 0..nv {
                                    m[(i, j)] += w * ek.curls[i] * cross2(normal, et.values[j]);
                                }
                            }
                        }
                        blocks.push((k, kt, m));
                    }
                }
            }
        }
        for (k, kt, m) in blocks {
            let (ok, ot) = (ctx.offset(Space::V, k), ctx.offset(Space::V, kt));
            t.add_block(ok, ot, &(-&m));
            t.add_block(ot, ok, &(-m.transpose()));
        }
        // Penalty α_F (μ⁻¹R_F[[u]]_T, R_F[[v]]_T).
        for (ss, &ks) in fl.support.iter().enumerate() {
            let left = fl.jump_tangential[ss].transpose() * &fl.gram_mu * ctx.alpha[f];
            for (st, &kt) in fl.support.iter().enumerate() {
                t.add_block(
                    ctx.offset(Space::V, ks),
                    ctx.offset(Space::V, kt),
                    &(&left * &fl.jump_tangential[st]),
                );
            }
        }
    }
    t.to_csc()
}

/// Assembles `b_h` with rows indexed by `Q_h` and columns by `V_h`.
pub fn assemble_b<T: Real>(ctx: &DgContext<T>, mode: Mode) -> CscMatrix<T> {
    let d = &ctx.disc;
    let nv = d.layout.local_dim(Space::V);
    let nq = d.layout.local_dim(Space::Q);
    let mut t = Triplets::new(d.layout.dim(Space::Q), d.layout.dim(Space::V));
    for (k, em) in ctx.elements.iter().enumerate() {
        t.add_block(ctx.offset(Space::Q, k), ctx.offset(Space::V, k), &(-&em.grad_eps));
    }
    for (f, fl) in ctx.lifts.faces().iter().enumerate() {
        let face = d.faces.face(f);
        for (sk, &k) in fl.support.iter().enumerate() {
            for (st, &kt) in fl.support.iter().enumerate() {
                // Block (row q on side t, column v on K).
                let block = match mode {
                    Mode::Lifting => {
                        fl.jump_normal[st].transpose() * fl.vector[sk].transpose() * &ctx.elements[k].mass_v_eps
                    }
                    Mode::FaceIntegral => {
                        let nt = face.side_sign(kt);
                        let normal = [nt * face.normal[0], nt * face.normal[1]];
                        let mut m = DMatrix::zeros(nq, nv);
                        for p in d.face_points(f, d.face_rule()) {
                            let ev = d.nedelec_at(k, p.physical);
                            let eq = d.scalar_at(kt, p.physical);
                            for j in 0..nv {
                                let flux = dot2(ctx.coeffs.eps_apply(k, ev.values[j]), normal) * fl.weight;
                                for i in 0..nq {
                                    m[(i, j)] += p.weight * flux * eq.values[i];
                                }
                            }
                        }
                        m
                    }
                };
                t.add_block(ctx.offset(Space::Q, kt), ctx.offset(Space::V, k), &block);
            }
        }
    }
    t.to_csc()
}

/// Assembles `c_h(p, q) = Σ_F γ_F (εR_F[[p]]_N, R_F[[q]]_N)`.
pub fn assemble_c<T: Real>(ctx: &DgContext<T>) -> CscMatrix<T> {
    let d = &ctx.disc;
    let n = d.layout.dim(Space::Q);
    let mut t = Triplets::new(n, n);
    for (f, fl) in ctx.lifts.faces().iter().enumerate() {
        for (ss, &ks) in fl.support.iter().enumerate() {
            let left = fl.jump_normal[ss].transpose() * &fl.gram_eps * ctx.gamma[f];
            for (st, &kt) in fl.support.iter().enumerate() {
                t.add_block(
                    ctx.offset(Space::Q, ks),
                    ctx.offset(Space::Q, kt),
                    &(&left * &fl.jump_normal[st]),
                );
            }
        }
    }
    t.to_csc()
}

/// Assembles the ε-weighted mass matrix of `V_h`.
pub fn assemble_mass<T: Real>(ctx: &DgContext<T>) -> CscMatrix<T> {
    let n = ctx.disc.layout.dim(Space::V);
    let mut t = Triplets::new(n, n);
    for (k, em) in ctx.elements.iter().enumerate() {
        let o = ctx.offset(Space::V, k);
        t.add_block(o, o, &em.mass_v_eps);
    }
    t.to_csc()
}

/// Assembles `f_i = ∫ j·φ_i`, plus the boundary-data terms
/// `−∫_F (n×g) μ⁻¹ curl v + α_F (μ⁻¹R_F(n×g), R_F([[v]]_T))` when `g` is set.
pub fn assemble_load<T: Real>(
    ctx: &DgContext<T>,
    source: &Source<T>,
    boundary: Option<&BoundaryData<T>>,
) -> Result<DVector<T>> {
    let d = &ctx.disc;
    let nv = d.layout.local_dim(Space::V);
    let mut f = DVector::zeros(d.layout.dim(Space::V));
    let rule = quadrature_rule(Domain::Triangle, load_exactness(d.degree()))?;
    for k in 0..d.mesh.num_elements() {
        let o = ctx.offset(Space::V, k);
        let map = d.map(k);
        for p in d.element_points(k, &rule) {
            let j = source(k, p.physical);
            if !(j[0].is_finite() && j[1].is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "source is not finite on element {k} at ({:?}, {:?})",
                    p.physical[0], p.physical[1]
                )));
            }
            let e = d.reference.nedelec_physical(map, p.reference);
            for i in 0..nv {
                f[o + i] += p.weight * dot2(j, e.values[i]);
            }
        }
    }
    if let Some(g) = boundary {
        let face_rule = quadrature_rule(Domain::Segment, load_exactness(d.degree()))?;
        let nt = d.layout.tangential_dim();
        for (fi, fl) in ctx.lifts.faces().iter().enumerate() {
            let face = d.faces.face(fi);
            if !face.is_boundary() {
                continue;
            }
            let k = face.plus;
            let o = ctx.offset(Space::V, k);
            let scale = T::one() / face.diameter.sqrt();
            let mut eta = DVector::zeros(nt);
            for p in d.face_points(fi, &face_rule) {
                let data = cross2(face.normal, g(p.physical));
                let e = d.nedelec_at(k, p.physical);
                for i in 0..nv {
                    f[o + i] -= p.weight * data * ctx.coeffs.mu_inv(k) * e.curls[i];
                }
                for (a, m) in legendre_modes(nt, p.s).into_iter().enumerate() {
                    eta[a] += p.weight * data * m * scale;
                }
            }
            let penalty = fl.jump_tangential[0].transpose() * (&fl.gram_mu * eta) * ctx.alpha[fi];
            let mut dst = f.rows_mut(o, nv);
            dst += penalty;
        }
    }
    Ok(f)
}

/// Relative Frobenius difference `‖X − Y‖ / max(‖X‖, ‖Y‖)`.
pub fn relative_difference<T: Real>(x: &CscMatrix<T>, y: &CscMatrix<T>) -> T {
    let scale = x.frobenius_norm().max(y.frobenius_norm());
    if scale == T::zero() {
        return T::zero();
    }
    x.add_scaled(y, -T::one()).frobenius_norm() / scale
}

/// Tolerance of the build-time comparison of the two `b_h` paths in `f64`.
pub const PATH_TOLERANCE: f64 = 1e-12;

/// Assembles all blocks in lifting mode.
///
/// When every permittivity is isotropic, `b_h` is also assembled in
/// face-integral mode and the two are required to agree to
/// [`PATH_TOLERANCE`]. For anisotropic `ε` the paths differ by design:
/// `εv` leaves `V_h`, so the lifting identity no longer reproduces the face
/// integral exactly.
pub fn assemble_system<T: Real>(ctx: &DgContext<T>, spec: &ProblemSpec<T>) -> Result<SystemBlocks<T>> {
    let b = assemble_b(ctx, Mode::Lifting);
    if ctx.coeffs.all_isotropic() {
        let other = assemble_b(ctx, Mode::FaceIntegral);
        let diff = relative_difference(&b, &other).as_f64();
        let tolerance = T::tolerance(PATH_TOLERANCE);
        if diff > tolerance {
            return Err(Error::PathMismatch {
                form: "b_h",
                difference: diff,
                tolerance,
            });
        }
    }
    Ok(SystemBlocks {
        a: assemble_a(ctx, Mode::Lifting),
        mass: assemble_mass(ctx),
        b,
        c: assemble_c(ctx),
        f: assemble_load(ctx, &spec.source, spec.boundary.as_ref())?,
        k: spec.k,
    })
}

/// Gram matrices of the DG norms.
#[derive(Clone, Debug)]
pub struct NormMatrices<T: Real = f64> {
    /// `|v|²_{V(h)} = vᵀ S v`.
    pub seminorm_v: CscMatrix<T>,
    /// `‖v‖²_{V(h)} = vᵀ (M_ε + S) v`.
    pub norm_v: CscMatrix<T>,
    /// `‖q‖²_{Q(h)}`.
    pub norm_q: CscMatrix<T>,
    /// `‖λ‖²_{M_h}`, block diagonal over faces.
    pub norm_m: CscMatrix<T>,
}

impl<T: Real> NormMatrices<T> {
    pub fn new(ctx: &DgContext<T>) -> Self {
        let d = &ctx.disc;
        let nvg = d.layout.dim(Space::V);
        let nqg = d.layout.dim(Space::Q);
        let nmg = d.layout.dim(Space::M);
        let mut s = Triplets::new(nvg, nvg);
        let mut q = Triplets::new(nqg, nqg);
        let mut m = Triplets::new(nmg, nmg);
        for (k, em) in ctx.elements.iter().enumerate() {
            s.add_block(ctx.offset(Space::V, k), ctx.offset(Space::V, k), &em.curl_curl);
            q.add_block(ctx.offset(Space::Q, k), ctx.offset(Space::Q, k), &em.stiffness_q_eps);
        }
        for fl in ctx.lifts.faces() {
            for (ss, &ks) in fl.support.iter().enumerate() {
                let lt = fl.jump_tangential[ss].transpose() * &fl.gram_mu;
                let ln = fl.jump_normal[ss].transpose() * &fl.gram_eps;
                for (st, &kt) in fl.support.iter().enumerate() {
                    s.add_block(
                        ctx.offset(Space::V, ks),
                        ctx.offset(Space::V, kt),
                        &(&lt * &fl.jump_tangential[st]),
                    );
                    q.add_block(
                        ctx.offset(Space::Q, ks),
                        ctx.offset(Space::Q, kt),
                        &(&ln * &fl.jump_normal[st]),
                    );
                }
            }
            let o = d.layout.dofs(Space::M, fl.face).start;
            m.add_block(o, o, &fl.gram_eps);
        }
        let seminorm_v = s.to_csc();
        let norm_v = seminorm_v.add_scaled(&assemble_mass(ctx), T::one());
        NormMatrices {
            seminorm_v,
            norm_v,
            norm_q: q.to_csc(),
            norm_m: m.to_csc(),
        }
    }
}

/// The four DG norms of a pair of fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms<T> {
    pub seminorm_v: T,
    pub norm_v: T,
    pub norm_q: T,
    pub norm_m: T,
}

fn quad_norm<T: Real>(m: &CscMatrix<T>, x: &DVector<T>) -> T {
    m.bilinear(x, x).max(T::zero()).sqrt()
}

impl<T: Real> NormMatrices<T> {
    pub fn seminorm_v(&self, v: &DVector<T>) -> T {
        quad_norm(&self.seminorm_v, v)
    }

    pub fn norm_v(&self, v: &DVector<T>) -> T {
        quad_norm(&self.norm_v, v)
    }

    pub fn norm_q(&self, q: &DVector<T>) -> T {
        quad_norm(&self.norm_q, q)
    }

    pub fn norm_m(&self, lambda: &DVector<T>) -> T {
        quad_norm(&self.norm_m, lambda)
    }

    /// Norms of `v ∈ V_h`, `q ∈ Q_h` and optionally `λ ∈ M_h`.
    pub fn norms(
        &self,
        layout: &crate::spaces::SpaceLayout,
        v: &FemField<T>,
        q: &FemField<T>,
        lambda: Option<&FemField<T>>,
    ) -> Result<Norms<T>> {
        let vc = v.expect(layout, Space::V)?;
        let qc = q.expect(layout, Space::Q)?;
        let norm_m = match lambda {
            Some(l) => self.norm_m(l.expect(layout, Space::M)?),
            None => T::zero(),
        };
        Ok(Norms {
            seminorm_v: self.seminorm_v(vc),
            norm_v: self.norm_v(vc),
            norm_q: self.norm_q(qc),
            norm_m,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{builtin_mesh, BuiltinMesh};

    fn ctx(n: usize, l: usize) -> DgContext<f64> {
        let mesh = builtin_mesh(BuiltinMesh::UnitSquare(n)).unwrap();
        DgContext::new(mesh, l, &ProblemSpec::new(1.0)).unwrap()
    }

    #[test]
    fn threshold_is_six_and_a_half() {
        assert_eq!(coercivity_threshold(), 6.5);
        assert!(ctx(1, 1).alpha.iter().all(|&a| a == 6.5));
        assert!(ctx(1, 1).gamma.iter().all(|&g| g == 0.5));
    }

    #[test]
    fn blocks_are_symmetric() {
        for l in 1..=2 {
            let c = ctx(2, l);
            for mode in [Mode::Lifting, Mode::FaceIntegral] {
                assert!(assemble_a(&c, mode).symmetry_error() < 1e-13);
            }
            assert!(assemble_c(&c).symmetry_error() < 1e-13);
            assert!(assemble_mass(&c).symmetry_error() < 1e-13);
        }
    }

    #[test]
    fn paths_agree_for_vacuum() {
        for l in 1..=2 {
            let c = ctx(2, l);
            let da = relative_difference(&assemble_a(&c, Mode::Lifting), &assemble_a(&c, Mode::FaceIntegral));
            let db = relative_difference(&assemble_b(&c, Mode::Lifting), &assemble_b(&c, Mode::FaceIntegral));
            assert!(da < 1e-12, "a_h paths differ by {da:e}");
            assert!(db < 1e-12, "b_h paths differ by {db:e}");
        }
    }

    #[test]
    fn zero_source_zero_load() {
        let c = ctx(2, 1);
        let f = assemble_load(&c, &ProblemSpec::new(1.0).source, None).unwrap();
        assert_eq!(f.amax(), 0.0);
    }

    #[test]
    fn mass_trace_is_sum_of_basis_norms() {
        let c = ctx(2, 2);
        let m = assemble_mass(&c);
        let trace: f64 = (0..m.ncols).map(|i| m.get(i, i)).sum();
        let direct: f64 = c.elements.iter().map(|e| e.mass_v.trace()).sum();
        assert!((trace - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn c_scales_with_gamma() {
        let mesh = builtin_mesh(BuiltinMesh::UnitSquare(2)).unwrap();
        let c1 = DgContext::new(mesh.clone(), 1, &ProblemSpec::new(1.0)).unwrap();
        let c2 = DgContext::new(mesh, 1, &ProblemSpec::new(1.0).with_gamma(FaceParameter::Uniform(1.5))).unwrap();
        let diff = relative_difference(&assemble_c(&c1).scale(3.0), &assemble_c(&c2));
        assert!(diff < 1e-15);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mesh = builtin_mesh::<f64>(BuiltinMesh::UnitSquare(1)).unwrap();
        let spec = ProblemSpec::new(1.0).with_alpha(FaceParameter::PerFace(vec![1.0; 2]));
        assert!(DgContext::new(mesh.clone(), 1, &spec).is_err());
        let spec = ProblemSpec::new(1.0).with_gamma(FaceParameter::Uniform(-1.0));
        assert!(DgContext::new(mesh, 1, &spec).is_err());
    }
}
