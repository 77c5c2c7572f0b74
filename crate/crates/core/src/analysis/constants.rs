//! Estimators for the stability constants of the discrete forms.
//!
//! The eigenvalue-based estimators work on dense matrices and refuse
//! problems larger than [`DENSE_SIZE_CAP`](crate::linalg::dense::DENSE_SIZE_CAP).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{assemble_a, assemble_b, assemble_mass, DgContext, Mode, NormMatrices};
use crate::error::{Error, Result};
use crate::lifting::lifting_stability_constants;
use crate::linalg::dense::{check_size, generalized_eigenvalues, null_space};
use crate::linalg::SparseLu;
use crate::scalar::Real;
use crate::solver::AuxiliaryOperators;
use crate::spaces::conforming::{conforming_average, scalar_conforming_basis};
use crate::spaces::{FemField, Space};

/// Relative singular-value cutoff for numerical null spaces. Singular values
/// come from eigenvalues of `mᵀm`, so exact zeros surface near `1e-8`.
const NULL_TOLERANCE: f64 = 1e-6;

/// Extremes of a sampled quotient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleStatistics {
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

fn random_vector<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> DVector<T> {
    DVector::from_fn(n, |_, _| T::lit(rng.random_range(-1.0..1.0)))
}

fn block_diag<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

fn smallest<T: Real>(eig: &[T]) -> Result<T> {
    eig.first()
        .copied()
        .ok_or_else(|| Error::LinearAlgebra("empty eigenproblem".into()))
}

/// Samples `(a_h(v,v) − ½|v|²_{V(h)}) / |v|²_{V(h)}` over random coefficient
/// vectors. Nonnegative values confirm coercivity with constant ½.
pub fn coercivity_spot_check<T: Real>(ctx: &DgContext<T>, samples: usize, seed: u64) -> SampleStatistics {
    let a = assemble_a(ctx, Mode::Lifting);
    let s = NormMatrices::new(ctx).seminorm_v;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..samples {
        let v = random_vector::<T>(&mut rng, a.ncols);
        let semi = s.bilinear(&v, &v);
        let q = ((a.bilinear(&v, &v) - semi * T::lit(0.5)) / semi).as_f64();
        lo = lo.min(q);
        hi = hi.max(q);
    }
    SampleStatistics {
        min: lo,
        max: hi,
        samples,
    }
}

/// Samples `sup_v |a_h(u,v)| / (‖u‖_{V(h)} ‖v‖_{V(h)})` over random `u`.
/// The supremum is attained at `v = N_V⁻¹Au`, so each sample costs one
/// solve with the `V(h)` Gram matrix. Independent random pairs would
/// instead shrink with the dimension and not estimate the constant.
pub fn continuity_constant<T: Real>(ctx: &DgContext<T>, samples: usize, seed: u64) -> Result<SampleStatistics> {
    let a = assemble_a(ctx, Mode::Lifting);
    let norms = NormMatrices::new(ctx);
    let lu = SparseLu::factor(&norms.norm_v)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..samples {
        let u = random_vector::<T>(&mut rng, a.ncols);
        let au = a.mul_vec(&u);
        let v = lu.solve(&au);
        let q = (au.dot(&v).max(T::zero()).sqrt() / norms.norm_v(&u)).as_f64();
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Ok(SampleStatistics {
        min: lo,
        max: hi,
        samples,
    })
}

/// Columns spanning `K_h = ∇Q_h^c` in `V_h` coefficients.
pub fn gradient_embedding<T: Real>(ctx: &DgContext<T>) -> Result<DMatrix<T>> {
    let d = &ctx.disc;
    let basis = scalar_conforming_basis(d)?;
    let nv = d.layout.local_dim(Space::V);
    let nq = d.layout.local_dim(Space::Q);
    // Per element, ∇ψ ∈ V_h is recovered exactly by the ε-weighted local projection.
    let projections = ctx
        .elements
        .iter()
        .map(|em| {
            let chol = em
                .mass_v_eps
                .clone()
                .cholesky()
                .ok_or_else(|| Error::LinearAlgebra("local ε-mass is not positive definite".into()))?;
            Ok(chol.solve(&em.grad_eps.transpose()))
        })
        .collect::<Result<Vec<DMatrix<T>>>>()?;
    let mut g = DMatrix::zeros(d.layout.dim(Space::V), basis.ncols());
    for j in 0..basis.ncols() {
        let q = basis.column(j);
        for (k, proj) in projections.iter().enumerate() {
            let qk = q.rows(d.layout.dofs(Space::Q, k).start, nq);
            if qk.iter().all(|x| *x == T::zero()) {
                continue;
            }
            let o = d.layout.dofs(Space::V, k).start;
            g.view_mut((o, j), (nv, 1)).copy_from(&(proj * qk));
        }
    }
    Ok(g)
}

/// `c_F = max ‖ε^{1/2}v‖ / |v|_{V(h)}` over the ε-orthogonal complement of
/// `K_h = ∇Q_h^c` in `V_h`.
pub fn friedrichs_constant<T: Real>(ctx: &DgContext<T>) -> Result<T> {
    check_size(ctx.layout().dim(Space::V))?;
    let mass = assemble_mass(ctx).to_dense();
    let s = NormMatrices::new(ctx).seminorm_v.to_dense();
    let g = gradient_embedding(ctx)?;
    let z = null_space(&(g.transpose() * &mass), T::lit(NULL_TOLERANCE))?;
    let eig = generalized_eigenvalues(&(z.transpose() * &mass * &z), &(z.transpose() * &s * &z))?;
    Ok(eig.last().copied().unwrap_or(T::zero()).max(T::zero()).sqrt())
}

/// Dense pieces of the auxiliary formulation on `W_h = V_h × M_h`, with `λ`
/// in reduced face coordinates.
struct AuxiliaryDense<T: Real> {
    /// `[B, −E]`, rows in `Q_h`.
    b_w: DMatrix<T>,
    /// `blockdiag(N_V, N_M)`.
    n_w: DMatrix<T>,
    /// `blockdiag(A, Γ)`.
    a_w: DMatrix<T>,
    /// `blockdiag(M_ε, 0)`.
    m_w: DMatrix<T>,
}

impl<T: Real> AuxiliaryDense<T> {
    fn new(ctx: &DgContext<T>) -> Result<Self> {
        let aux = AuxiliaryOperators::new(ctx);
        let norms = NormMatrices::new(ctx);
        let nv = ctx.layout().dim(Space::V);
        let nl = aux.gamma.nrows;
        check_size(nv + nl)?;
        let b = assemble_b(ctx, Mode::Lifting).to_dense();
        let e = aux.e.to_dense();
        let mut b_w = DMatrix::zeros(b.nrows(), nv + nl);
        b_w.view_mut((0, 0), (b.nrows(), nv)).copy_from(&b);
        b_w.view_mut((0, nv), (b.nrows(), nl)).copy_from(&(-e));
        let mass = assemble_mass(ctx).to_dense();
        Ok(AuxiliaryDense {
            b_w,
            n_w: block_diag(&norms.norm_v.to_dense(), &aux.norm.to_dense()),
            a_w: block_diag(&assemble_a(ctx, Mode::Lifting).to_dense(), &aux.gamma.to_dense()),
            m_w: block_diag(&mass, &DMatrix::zeros(nl, nl)),
        })
    }

    fn kernel(&self) -> Result<DMatrix<T>> {
        null_space(&self.b_w, T::lit(NULL_TOLERANCE))
    }
}

/// `κ_B = inf_q sup_{(v,η)} B_h(v,η; q) / (‖(v,η)‖_{W(h)} ‖q‖_{Q(h)})`, from
/// `B_W N_W⁻¹ B_Wᵀ q = σ² N_Q q`. The `W(h)` Gram matrix is block diagonal,
/// so the Schur complement splits into `B N_V⁻¹ Bᵀ + E N_M⁻¹ Eᵀ` and only
/// `V_h`- and `Q_h`-sized dense matrices are formed. With
/// `include_m = false` the supremum runs over `V_h` alone.
pub fn infsup_constant_b<T: Real>(ctx: &DgContext<T>, include_m: bool) -> Result<T> {
    let layout = ctx.layout();
    check_size(layout.dim(Space::V).max(layout.dim(Space::Q)))?;
    let norms = NormMatrices::new(ctx);
    let b = assemble_b(ctx, Mode::Lifting).to_dense();
    let chol = norms
        .norm_v
        .to_dense()
        .cholesky()
        .ok_or_else(|| Error::LinearAlgebra("V(h) Gram matrix is not positive definite".into()))?;
    let mut schur = &b * chol.solve(&b.transpose());
    if include_m {
        let aux = AuxiliaryOperators::new(ctx);
        let r = aux.rank;
        let e = aux.e.to_dense();
        let n_m = aux.norm.to_dense();
        for f in 0..ctx.disc.faces.len() {
            let block = n_m.view((f * r, f * r), (r, r)).into_owned();
            let ef = e.columns(f * r, r).into_owned();
            let c = block
                .cholesky()
                .ok_or_else(|| Error::LinearAlgebra(format!("M_h Gram block of face {f} is not positive definite")))?;
            schur += &ef * c.solve(&ef.transpose());
        }
    }
    let eig = generalized_eigenvalues(&schur, &norms.norm_q.to_dense())?;
    Ok(smallest(&eig)?.max(T::zero()).sqrt())
}

/// Smallest `A_h(w,w) / ‖w‖²_{W(h)}` over the kernel of `B_h`.
pub fn kernel_ellipticity_constant<T: Real>(ctx: &DgContext<T>) -> Result<T> {
    let aux = AuxiliaryDense::new(ctx)?;
    let z = aux.kernel()?;
    let eig = generalized_eigenvalues(&(z.transpose() * &aux.a_w * &z), &(z.transpose() * &aux.n_w * &z))?;
    smallest(&eig)
}

/// Smallest singular value of `A_h − k²(ε·,·)` restricted to the kernel of
/// `B_h`, measured in `‖·‖_{W(h)}`. The restricted operator is symmetric,
/// so this is the smallest generalized eigenvalue in modulus.
pub fn indefinite_infsup_constant<T: Real>(ctx: &DgContext<T>, k: T) -> Result<T> {
    let aux = AuxiliaryDense::new(ctx)?;
    let z = aux.kernel()?;
    let op = &aux.a_w - &aux.m_w * (k * k);
    let eig = generalized_eigenvalues(&(z.transpose() * op * &z), &(z.transpose() * &aux.n_w * &z))?;
    eig.iter()
        .map(|x| x.abs())
        .reduce(|a, b| a.min(b))
        .ok_or_else(|| Error::LinearAlgebra("empty eigenproblem".into()))
}

/// Largest element ratio
/// `(h_K⁻²‖v − Π_h^c v‖²_K + ‖curl(v − Π_h^c v)‖²_K) / Σ_{F ⊂ ∂K} ‖R_F([[v]]_T)‖²`.
pub fn conforming_average_ratio<T: Real>(ctx: &DgContext<T>, v: &FemField<T>) -> Result<T> {
    let d = &ctx.disc;
    let moments = crate::spaces::conforming::NedelecMoments::new(d)?;
    let pv = conforming_average(d, &moments, v)?;
    let diff = v.expect(&d.layout, Space::V)? - pv.expect(&d.layout, Space::V)?;
    let coeffs = v.expect(&d.layout, Space::V)?;
    let nv = d.layout.local_dim(Space::V);
    let face_terms: Vec<T> = ctx
        .lifts
        .faces()
        .iter()
        .map(|fl| {
            let eta = fl.tangential_jump(d, coeffs);
            eta.dot(&(&fl.gram_tangential * &eta))
        })
        .collect();
    let mut worst = T::zero();
    for k in 0..d.mesh.num_elements() {
        let em = &ctx.elements[k];
        let w = diff.rows(d.layout.dofs(Space::V, k).start, nv);
        let h = d.mesh.diameter(k);
        let l2 = w.dot(&(&em.mass_v * w));
        let curl = w.dot(&(&em.curl_curl * w)) / ctx.coeffs.mu_inv(k);
        let denom: T = d.faces.element_faces(k).iter().map(|&f| face_terms[f]).sum();
        if denom > T::zero() {
            worst = worst.max((l2 / (h * h) + curl) / denom);
        }
    }
    Ok(worst)
}

/// Lifting stability constants `(min C₁, max C₂)` grouped by face class:
/// boundary flag and face direction in whole degrees modulo 180.
pub fn lifting_stability_by_class<T: Real>(ctx: &DgContext<T>) -> BTreeMap<(bool, i64), (f64, f64)> {
    let d = &ctx.disc;
    let mut out: BTreeMap<(bool, i64), (f64, f64)> = BTreeMap::new();
    for c in lifting_stability_constants(d, &ctx.lifts) {
        let face = d.faces.face(c.face);
        let t = face.tangent(&d.mesh);
        let angle = t[1].as_f64().atan2(t[0].as_f64()).to_degrees().round() as i64;
        let key = (face.is_boundary(), angle.rem_euclid(180));
        let entry = out.entry(key).or_insert((f64::INFINITY, 0.0));
        entry.0 = entry.0.min(c.c1.as_f64());
        entry.1 = entry.1.max(c.c2.as_f64());
    }
    out
}
