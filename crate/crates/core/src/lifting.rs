//! Local lifting operators `R_F` and their weighted Gram matrices.
//!
//! Three kinds of face data occur, each expanded in an `L²(F)`-orthonormal
//! Legendre basis along the face (parametrized from the lower to the higher
//! vertex):
//!
//! | data                  | rank   | face modes        | lifted into      |
//! |-----------------------|--------|-------------------|------------------|
//! | `[[v]]_T = n⁺×v⁺ + n⁻×v⁻` | scalar | `P_{ℓ−1}(F)`      | curl space `P_{ℓ−1}(ω_F)` |
//! | `[[q]]_N = q⁺n⁺ + q⁻n⁻`   | vector | `P_ℓ(F)²` (`M_h`) | `V_h(ω_F)`       |
//! | `[[v]]_N = v⁺·n⁺ + v⁻·n⁻` | scalar | `P_ℓ(F)`          | not lifted       |
//!
//! The lifting of data `η` is defined elementwise on `ω_F` by
//! `∫_K R_F(η) w = w_F ∫_F η w|_K` for every local test function `w`, with
//! `w_F = ½` on interior and `1` on boundary faces, and is computed by an
//! unweighted local mass solve (Cholesky).
//!
//! In two dimensions `n×v` and `curl v` are scalars, so the tangential
//! lifting lands in the broken space `P_{ℓ−1} = curl_h V_h`. This is the
//! space in which `(R([[u]]_T), μ⁻¹ curl_h v)` coincides with the face
//! integral `∫_F [[u]]_T {{μ⁻¹ curl_h v}}`.
//!
//! The vector lifting is not injective on `M_h`: traces of `V_h` on a face
//! have tangential degree `ℓ−1`, so the top tangential Legendre mode lifts
//! to zero. [`FaceLifting::range`] spans the complement on which `R_F` is
//! injective; it contains every normal jump `[[q]]_N`.

use nalgebra::{DMatrix, DVector};

use crate::coefficients::Coefficients;
use crate::error::{Error, Result};
use crate::local::ElementMatrices;
use crate::scalar::{cross2, dot2, Real};
use crate::spaces::{face_basis, legendre_modes, Discretization, FemField, Space};

/// Lifting operators and jump maps of one face.
///
/// Per-side matrices are listed in the order of [`FaceLifting::support`]:
/// `[K⁺]` on boundary faces, `[K⁺, K⁻]` on interior faces.
#[derive(Clone, Debug)]
pub struct FaceLifting<T: Real> {
    pub face: usize,
    pub support: Vec<usize>,
    /// Average weight `w_F`.
    pub weight: T,
    /// Tangential data (`ℓ` modes) → curl-space coefficients, `n_c × ℓ`.
    pub tangential: Vec<DMatrix<T>>,
    /// `M_h` data (`2(ℓ+1)` modes) → `V_h` coefficients, `n_v × 2(ℓ+1)`.
    pub vector: Vec<DMatrix<T>>,
    /// Local `V_h` coefficients → modes of this side's contribution to `[[v]]_T`.
    pub jump_tangential: Vec<DMatrix<T>>,
    /// Local `Q_h` coefficients → `M_h` modes of this side's contribution to `[[q]]_N`.
    pub jump_normal: Vec<DMatrix<T>>,
    /// Local `V_h` coefficients → `P_ℓ(F)` modes of this side's contribution to `[[v]]_N`.
    pub jump_normal_vector: Vec<DMatrix<T>>,
    /// `(μ⁻¹R_F τ_a, R_F τ_b)`.
    pub gram_mu: DMatrix<T>,
    /// `(R_F τ_a, R_F τ_b)`.
    pub gram_tangential: DMatrix<T>,
    /// `(εR_F ξ_a, R_F ξ_b)`.
    pub gram_eps: DMatrix<T>,
    /// `(R_F ξ_a, R_F ξ_b)`.
    pub gram_vector: DMatrix<T>,
    /// Orthonormal `M_h` modes on which `R_F` is injective: the normal modes
    /// of degree `≤ ℓ` followed by the tangential modes of degree `< ℓ`.
    pub range: DMatrix<T>,
}

impl<T: Real> FaceLifting<T> {
    /// `[[v]]_T` modes from global `V_h` coefficients.
    pub fn tangential_jump(&self, d: &Discretization<T>, v: &DVector<T>) -> DVector<T> {
        self.gather(d, Space::V, v, &self.jump_tangential)
    }

    /// `[[q]]_N` modes from global `Q_h` coefficients.
    pub fn normal_jump(&self, d: &Discretization<T>, q: &DVector<T>) -> DVector<T> {
        self.gather(d, Space::Q, q, &self.jump_normal)
    }

    /// `[[v]]_N` modes from global `V_h` coefficients.
    pub fn normal_jump_vector(&self, d: &Discretization<T>, v: &DVector<T>) -> DVector<T> {
        self.gather(d, Space::V, v, &self.jump_normal_vector)
    }

    fn gather(&self, d: &Discretization<T>, space: Space, x: &DVector<T>, maps: &[DMatrix<T>]) -> DVector<T> {
        let n = d.layout.local_dim(space);
        let mut out = DVector::zeros(maps[0].nrows());
        for (side, &k) in self.support.iter().enumerate() {
            out += &maps[side] * x.rows(d.layout.dofs(space, k).start, n);
        }
        out
    }

    /// `R_F` of tangential data, scattered into a global curl-space vector.
    pub fn lift_tangential_into(&self, d: &Discretization<T>, eta: &DVector<T>, out: &mut DVector<T>) {
        self.scatter(d, Space::Curl, eta, &self.tangential, out);
    }

    /// `R_F` of `M_h` data, scattered into a global `V_h` vector.
    pub fn lift_vector_into(&self, d: &Discretization<T>, eta: &DVector<T>, out: &mut DVector<T>) {
        self.scatter(d, Space::V, eta, &self.vector, out);
    }

    fn scatter(
        &self,
        d: &Discretization<T>,
        space: Space,
        eta: &DVector<T>,
        maps: &[DMatrix<T>],
        out: &mut DVector<T>,
    ) {
        for (side, &k) in self.support.iter().enumerate() {
            let r = d.layout.dofs(space, k);
            let local = &maps[side] * eta;
            let mut dst = out.rows_mut(r.start, r.len());
            dst += local;
        }
    }
}

fn cholesky_solve<T: Real>(mass: &DMatrix<T>, rhs: DMatrix<T>) -> Result<DMatrix<T>> {
    let chol = mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::LinearAlgebra("local mass matrix is not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

/// Builds the lifting operators of face `f`.
pub fn build_lifting<T: Real>(
    d: &Discretization<T>,
    coeffs: &Coefficients<T>,
    elements: &[ElementMatrices<T>],
    f: usize,
) -> Result<FaceLifting<T>> {
    if f >= d.faces.len() {
        return Err(Error::IndexOutOfRange {
            index: f,
            len: d.faces.len(),
        });
    }
    let l = d.degree();
    let face = d.faces.face(f);
    let support = face.support();
    let weight = face.average_weight();
    let nv = d.layout.local_dim(Space::V);
    let nq = d.layout.local_dim(Space::Q);
    let nc = d.layout.local_dim(Space::Curl);
    let nt = d.layout.tangential_dim();
    let nm = d.layout.local_dim(Space::M);
    let scale = T::one() / face.diameter.sqrt();
    let points = d.face_points(f, d.face_rule());

    let mut out = FaceLifting {
        face: f,
        support: support.clone(),
        weight,
        tangential: Vec::new(),
        vector: Vec::new(),
        jump_tangential: Vec::new(),
        jump_normal: Vec::new(),
        jump_normal_vector: Vec::new(),
        gram_mu: DMatrix::zeros(nt, nt),
        gram_tangential: DMatrix::zeros(nt, nt),
        gram_eps: DMatrix::zeros(nm, nm),
        gram_vector: DMatrix::zeros(nm, nm),
        range: DMatrix::zeros(nm, 2 * l + 1),
    };

    for &k in &support {
        let sign = face.side_sign(k);
        let n = [sign * face.normal[0], sign * face.normal[1]];
        let mut rhs_t = DMatrix::zeros(nc, nt);
        let mut rhs_v = DMatrix::zeros(nv, nm);
        let mut jt = DMatrix::zeros(nt, nv);
        let mut jn = DMatrix::zeros(nm, nq);
        let mut jnv = DMatrix::zeros(l + 1, nv);
        for p in &points {
            let v = d.nedelec_at(k, p.physical);
            let q = d.scalar_at(k, p.physical);
            let c = d.curl_space_at(k, p.physical);
            let tau: Vec<T> = legendre_modes(nt, p.s).into_iter().map(|x| x * scale).collect();
            let psi: Vec<T> = legendre_modes(l + 1, p.s).into_iter().map(|x| x * scale).collect();
            let xi: Vec<_> = face_basis(l, p.s)
                .into_iter()
                .map(|x| [x[0] * scale, x[1] * scale])
                .collect();
            let w = p.weight;
            for a in 0..nt {
                for i in 0..nc {
                    rhs_t[(i, a)] += w * weight * tau[a] * c[i];
                }
                for j in 0..nv {
                    jt[(a, j)] += w * tau[a] * cross2(n, v.values[j]);
                }
            }
            for a in 0..nm {
                for i in 0..nv {
                    rhs_v[(i, a)] += w * weight * dot2(xi[a], v.values[i]);
                }
                let xn = dot2(xi[a], n);
                for j in 0..nq {
                    jn[(a, j)] += w * xn * q.values[j];
                }
            }
            for a in 0..=l {
                for j in 0..nv {
                    jnv[(a, j)] += w * psi[a] * dot2(v.values[j], n);
                }
            }
        }
        let em = &elements[k];
        let lt = cholesky_solve(&em.mass_curl, rhs_t)?;
        let lv = cholesky_solve(&em.mass_v, rhs_v)?;
        let gt = lt.transpose() * &em.mass_curl * &lt;
        out.gram_mu += &gt * coeffs.mu_inv(k);
        out.gram_tangential += gt;
        out.gram_eps += lv.transpose() * &em.mass_v_eps * &lv;
        out.gram_vector += lv.transpose() * &em.mass_v * &lv;
        out.tangential.push(lt);
        out.vector.push(lv);
        out.jump_tangential.push(jt);
        out.jump_normal.push(jn);
        out.jump_normal_vector.push(jnv);
    }
    symmetrize(&mut out.gram_mu);
    symmetrize(&mut out.gram_tangential);
    symmetrize(&mut out.gram_eps);
    symmetrize(&mut out.gram_vector);

    let nrm = face.normal;
    let tan = [-nrm[1], nrm[0]];
    for k in 0..=l {
        out.range[(2 * k, k)] = nrm[0];
        out.range[(2 * k + 1, k)] = nrm[1];
    }
    for k in 0..l {
        out.range[(2 * k, l + 1 + k)] = tan[0];
        out.range[(2 * k + 1, l + 1 + k)] = tan[1];
    }
    Ok(out)
}

fn symmetrize<T: Real>(m: &mut DMatrix<T>) {
    let half = T::lit(0.5);
    let t = m.transpose();
    *m += t;
    *m *= half;
}

/// Lifting operators of every face.
#[derive(Clone, Debug)]
pub struct Liftings<T: Real> {
    faces: Vec<FaceLifting<T>>,
}

impl<T: Real> Liftings<T> {
    pub fn build(d: &Discretization<T>, coeffs: &Coefficients<T>, elements: &[ElementMatrices<T>]) -> Result<Self> {
        let faces = (0..d.faces.len())
            .map(|f| build_lifting(d, coeffs, elements, f))
            .collect::<Result<Vec<_>>>()?;
        Ok(Liftings { faces })
    }

    pub fn face(&self, f: usize) -> &FaceLifting<T> {
        &self.faces[f]
    }

    pub fn faces(&self) -> &[FaceLifting<T>] {
        &self.faces
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }
}

/// Global lifting `R([[v]]_T) = Σ_F R_F([[v]]_T)`, a curl-space field.
pub fn apply_lifting_tangential<T: Real>(
    d: &Discretization<T>,
    lifts: &Liftings<T>,
    v: &FemField<T>,
) -> Result<FemField<T>> {
    let coeffs = v.expect(&d.layout, Space::V)?;
    let mut out = DVector::zeros(d.layout.dim(Space::Curl));
    for fl in lifts.faces() {
        let eta = fl.tangential_jump(d, coeffs);
        fl.lift_tangential_into(d, &eta, &mut out);
    }
    FemField::new(&d.layout, Space::Curl, out)
}

/// Face expansion of `[[q]]_N` as an `M_h` field.
pub fn normal_jump_field<T: Real>(d: &Discretization<T>, lifts: &Liftings<T>, q: &FemField<T>) -> Result<FemField<T>> {
    let coeffs = q.expect(&d.layout, Space::Q)?;
    let mut out = DVector::zeros(d.layout.dim(Space::M));
    for fl in lifts.faces() {
        let r = d.layout.dofs(Space::M, fl.face);
        out.rows_mut(r.start, r.len()).copy_from(&fl.normal_jump(d, coeffs));
    }
    FemField::new(&d.layout, Space::M, out)
}

/// Global lifting `R(λ) = Σ_F R_F(λ|_F)` of an `M_h` field into `V_h`.
pub fn apply_lifting_m<T: Real>(
    d: &Discretization<T>,
    lifts: &Liftings<T>,
    lambda: &FemField<T>,
) -> Result<FemField<T>> {
    let coeffs = lambda.expect(&d.layout, Space::M)?;
    let mut out = DVector::zeros(d.layout.dim(Space::V));
    let nm = d.layout.local_dim(Space::M);
    for fl in lifts.faces() {
        let eta = coeffs.rows(d.layout.dofs(Space::M, fl.face).start, nm).into_owned();
        fl.lift_vector_into(d, &eta, &mut out);
    }
    FemField::new(&d.layout, Space::V, out)
}

/// Global lifting `R([[q]]_N)` into `V_h`.
pub fn apply_lifting_normal<T: Real>(
    d: &Discretization<T>,
    lifts: &Liftings<T>,
    q: &FemField<T>,
) -> Result<FemField<T>> {
    apply_lifting_m(d, lifts, &normal_jump_field(d, lifts, q)?)
}

/// Measured constants of `C₁ h_F^{-1/2}‖η‖_F ≤ ‖R_F(η)‖ ≤ C₂ h_F^{-1/2}‖η‖_F`
/// over tangential jump data `η ∈ P_{ℓ−1}(F)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityConstants<T> {
    pub face: usize,
    pub c1: T,
    pub c2: T,
}

pub fn lifting_stability_constants<T: Real>(d: &Discretization<T>, lifts: &Liftings<T>) -> Vec<StabilityConstants<T>> {
    lifts
        .faces()
        .iter()
        .map(|fl| {
            // The data basis is orthonormal on F, so the generalized problem
            // reduces to the eigenvalues of h_F · G.
            let g = &fl.gram_tangential * d.faces.face(fl.face).diameter;
            let eig = g.symmetric_eigenvalues();
            let lo = eig
                .iter()
                .copied()
                .fold(T::max_value().unwrap_or(T::one()), |a, b| a.min(b));
            let hi = eig.iter().copied().fold(T::zero(), |a, b| a.max(b));
            StabilityConstants {
                face: fl.face,
                c1: lo.max(T::zero()).sqrt(),
                c2: hi.sqrt(),
            }
        })
        .collect()
}
