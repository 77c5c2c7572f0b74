//! Broken finite element spaces and their global layouts.
//!
//! * `V_h`: broken Nédélec fields of the first kind, `ℓ(ℓ+2)` per element.
//! * `Q_h`: broken `P_ℓ` scalars, `(ℓ+1)(ℓ+2)/2` per element.
//! * `M_h`: face fields in `P_ℓ(F)²`, `2(ℓ+1)` per face.
//! * Curl space: broken `P_{ℓ−1}` scalars, the range of `curl_h` on `V_h`
//!   and the target of the tangential lifting.
//!
//! No degrees of freedom are shared between elements, so every global
//! index is `offset(owner) + local`.

mod basis;
pub mod conforming;

use std::ops::Range;

use nalgebra::DVector;

pub use basis::{
    check_degree, dim_face_vector, dim_nedelec, dim_scalar, face_basis, legendre_modes, reference_basis_curl,
    reference_basis_scalar, ReferenceElement, ScalarEval, VectorEval, MAX_DEGREE,
};

use crate::error::{Error, Result};
use crate::mesh::{AffineMap, FaceSet, Mesh};
use crate::quadrature::{quadrature_rule, Domain, QuadratureRule};
use crate::scalar::{Real, Vec2};

/// Exactness used for stiffness, mass and penalty integrals.
pub const fn volume_exactness(degree: usize) -> usize {
    2 * degree + 2
}

/// Exactness used for face integrals.
pub const fn face_exactness(degree: usize) -> usize {
    2 * degree + 2
}

/// Exactness used for load vectors with smooth data.
pub const fn load_exactness(degree: usize) -> usize {
    2 * degree + 4
}

/// Exactness used when comparing against exact solutions.
pub const fn error_exactness(degree: usize) -> usize {
    2 * degree + 6
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Space {
    V,
    Q,
    M,
    Curl,
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Space::V => "V_h",
            Space::Q => "Q_h",
            Space::M => "M_h",
            Space::Curl => "curl_h V_h",
        })
    }
}

/// Global numbering of the broken spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpaceLayout {
    pub degree: usize,
    pub num_elements: usize,
    pub num_faces: usize,
}

impl SpaceLayout {
    pub fn new(degree: usize, num_elements: usize, num_faces: usize) -> Result<Self> {
        check_degree(degree)?;
        Ok(SpaceLayout {
            degree,
            num_elements,
            num_faces,
        })
    }

    pub fn local_dim(&self, space: Space) -> usize {
        let l = self.degree;
        match space {
            Space::V => dim_nedelec(l),
            Space::Q => dim_scalar(l),
            Space::M => dim_face_vector(l),
            Space::Curl => dim_scalar(l - 1),
        }
    }

    /// Number of tangential trace modes per face (`dim P_{ℓ−1}(F)`).
    pub fn tangential_dim(&self) -> usize {
        self.degree
    }

    pub fn dim(&self, space: Space) -> usize {
        let owners = match space {
            Space::M => self.num_faces,
            _ => self.num_elements,
        };
        owners * self.local_dim(space)
    }

    /// Global indices owned by element (or face, for `M_h`) `owner`.
    pub fn dofs(&self, space: Space, owner: usize) -> Range<usize> {
        let n = self.local_dim(space);
        owner * n..(owner + 1) * n
    }
}

/// A coefficient vector tagged with the space it lives in.
#[derive(Clone, Debug, PartialEq)]
pub struct FemField<T: Real = f64> {
    pub space: Space,
    pub coeffs: DVector<T>,
}

impl<T: Real> FemField<T> {
    pub fn new(layout: &SpaceLayout, space: Space, coeffs: DVector<T>) -> Result<Self> {
        let expected = layout.dim(space);
        if coeffs.len() != expected {
            return Err(Error::SpaceMismatch {
                expected: format!("{space} of dimension {expected}"),
                found: format!("vector of length {}", coeffs.len()),
            });
        }
        Ok(FemField { space, coeffs })
    }

    pub fn zeros(layout: &SpaceLayout, space: Space) -> Self {
        FemField {
            space,
            coeffs: DVector::zeros(layout.dim(space)),
        }
    }

    /// Fails unless the field lives in `space` with the layout's dimension.
    pub fn expect(&self, layout: &SpaceLayout, space: Space) -> Result<&DVector<T>> {
        if self.space != space || self.coeffs.len() != layout.dim(space) {
            return Err(Error::SpaceMismatch {
                expected: format!("{space} of dimension {}", layout.dim(space)),
                found: format!("{} of dimension {}", self.space, self.coeffs.len()),
            });
        }
        Ok(&self.coeffs)
    }
}

/// Quadrature point on a physical element.
#[derive(Clone, Copy, Debug)]
pub struct ElementPoint<T> {
    pub reference: Vec2<T>,
    pub physical: Vec2<T>,
    /// Reference weight times `|det J|`.
    pub weight: T,
}

/// Quadrature point on a physical face.
#[derive(Clone, Copy, Debug)]
pub struct FacePoint<T> {
    /// Parameter from the lower to the higher vertex.
    pub s: T,
    pub physical: Vec2<T>,
    /// Reference weight times `h_F`.
    pub weight: T,
}

/// Mesh, faces, layout and reference bases bundled for assembly.
#[derive(Clone, Debug)]
pub struct Discretization<T: Real = f64> {
    pub mesh: Mesh<T>,
    pub faces: FaceSet<T>,
    pub layout: SpaceLayout,
    pub reference: ReferenceElement<T>,
    maps: Vec<AffineMap<T>>,
    volume_rule: QuadratureRule<T>,
    face_rule: QuadratureRule<T>,
}

impl<T: Real> Discretization<T> {
    pub fn new(mesh: Mesh<T>, degree: usize) -> Result<Self> {
        check_degree(degree)?;
        let faces = mesh.build_faces()?;
        let layout = SpaceLayout::new(degree, mesh.num_elements(), faces.len())?;
        let maps = (0..mesh.num_elements()).map(|k| mesh.affine_map(k)).collect();
        Ok(Discretization {
            layout,
            reference: ReferenceElement::new(degree)?,
            volume_rule: quadrature_rule(Domain::Triangle, volume_exactness(degree))?,
            face_rule: quadrature_rule(Domain::Segment, face_exactness(degree))?,
            mesh,
            faces,
            maps,
        })
    }

    pub fn degree(&self) -> usize {
        self.layout.degree
    }

    pub fn map(&self, k: usize) -> &AffineMap<T> {
        &self.maps[k]
    }

    pub fn volume_rule(&self) -> &QuadratureRule<T> {
        &self.volume_rule
    }

    pub fn face_rule(&self) -> &QuadratureRule<T> {
        &self.face_rule
    }

    /// Physical quadrature points of element `k` for `rule`.
    pub fn element_points(&self, k: usize, rule: &QuadratureRule<T>) -> Vec<ElementPoint<T>> {
        let map = &self.maps[k];
        let jac = map.det.abs();
        rule.iter()
            .map(|(p, w)| ElementPoint {
                reference: p,
                physical: map.to_physical(p),
                weight: w * jac,
            })
            .collect()
    }

    /// Physical quadrature points of face `f` for `rule` (a segment rule).
    pub fn face_points(&self, f: usize, rule: &QuadratureRule<T>) -> Vec<FacePoint<T>> {
        let face = self.faces.face(f);
        rule.segment_iter()
            .map(|(s, w)| FacePoint {
                s,
                physical: face.point(&self.mesh, s),
                weight: w * face.diameter,
            })
            .collect()
    }

    /// Nédélec basis of element `k` at a physical point.
    pub fn nedelec_at(&self, k: usize, x: Vec2<T>) -> VectorEval<T> {
        let map = &self.maps[k];
        self.reference.nedelec_physical(map, map.to_reference(x))
    }

    /// Scalar basis of element `k` at a physical point.
    pub fn scalar_at(&self, k: usize, x: Vec2<T>) -> ScalarEval<T> {
        let map = &self.maps[k];
        self.reference.scalar_physical(map, map.to_reference(x))
    }

    /// Curl-space basis of element `k` at a physical point.
    pub fn curl_space_at(&self, k: usize, x: Vec2<T>) -> Vec<T> {
        let map = &self.maps[k];
        self.reference.curl_space(map.to_reference(x))
    }

    /// Evaluates a `V_h` field (value, curl) on element `k` at a physical point.
    pub fn eval_v(&self, coeffs: &DVector<T>, k: usize, x: Vec2<T>) -> (Vec2<T>, T) {
        let e = self.nedelec_at(k, x);
        let r = self.layout.dofs(Space::V, k);
        let mut v = [T::zero(); 2];
        let mut c = T::zero();
        for (i, g) in r.enumerate() {
            v[0] += coeffs[g] * e.values[i][0];
            v[1] += coeffs[g] * e.values[i][1];
            c += coeffs[g] * e.curls[i];
        }
        (v, c)
    }

    /// Evaluates a `Q_h` field (value, gradient) on element `k` at a physical point.
    pub fn eval_q(&self, coeffs: &DVector<T>, k: usize, x: Vec2<T>) -> (T, Vec2<T>) {
        let e = self.scalar_at(k, x);
        let r = self.layout.dofs(Space::Q, k);
        let mut q = T::zero();
        let mut g = [T::zero(); 2];
        for (i, gi) in r.enumerate() {
            q += coeffs[gi] * e.values[i];
            g[0] += coeffs[gi] * e.grads[i][0];
            g[1] += coeffs[gi] * e.grads[i][1];
        }
        (q, g)
    }
}
