//! Piecewise constant material coefficients indexed by element tag.
//!
//! In two dimensions the curl of a field is a scalar, so the magnetic
//! permeability enters only through a positive scalar `μ` per material. The
//! permittivity `ε` is a symmetric positive definite 2×2 matrix.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::{Real, Vec2};

pub type Mat2<T> = [[T; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material<T> {
    pub mu: T,
    pub epsilon: Mat2<T>,
}

impl<T: Real> Material<T> {
    pub fn vacuum() -> Self {
        Material::isotropic(T::one(), T::one())
    }

    pub fn isotropic(mu: T, epsilon: T) -> Self {
        Material {
            mu,
            epsilon: [[epsilon, T::zero()], [T::zero(), epsilon]],
        }
    }

    /// Extreme eigenvalues of `ε`.
    pub fn epsilon_bounds(&self) -> (T, T) {
        let [[a, b], [c, d]] = self.epsilon;
        let mean = (a + d) * T::lit(0.5);
        let radius = (((a - d) * T::lit(0.5)).powi(2) + b * c).sqrt();
        (mean - radius, mean + radius)
    }

    pub fn is_isotropic(&self) -> bool {
        let [[a, b], [c, d]] = self.epsilon;
        b == T::zero() && c == T::zero() && a == d
    }

    fn validate(&self, tag: usize) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > T::zero()) {
            return Err(Error::Coefficient(format!(
                "material {tag}: μ must be positive and finite"
            )));
        }
        let [[a, b], [c, d]] = self.epsilon;
        if ![a, b, c, d].iter().all(|x| x.is_finite()) {
            return Err(Error::Coefficient(format!("material {tag}: ε has non-finite entries")));
        }
        let scale = a.abs().max(d.abs()).max(T::one());
        if (b - c).abs() > T::default_epsilon() * T::lit(16.0) * scale {
            return Err(Error::Coefficient(format!("material {tag}: ε is not symmetric")));
        }
        if self.epsilon_bounds().0 <= T::zero() {
            return Err(Error::Coefficient(format!(
                "material {tag}: ε is not positive definite"
            )));
        }
        Ok(())
    }
}

/// Coefficient table, one [`Material`] per tag.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients<T> {
    materials: Vec<Material<T>>,
    element_tags: Vec<usize>,
}

impl<T: Real> Coefficients<T> {
    /// Validates every material and checks that every element tag is mapped.
    pub fn new(mesh: &Mesh<T>, materials: Vec<Material<T>>) -> Result<Self> {
        for (tag, m) in materials.iter().enumerate() {
            m.validate(tag)?;
        }
        if let Some((k, &t)) = mesh
            .material_tags()
            .iter()
            .enumerate()
            .find(|(_, &t)| t >= materials.len())
        {
            return Err(Error::Coefficient(format!(
                "element {k} has material tag {t}, but only {} materials are defined",
                materials.len()
            )));
        }
        Ok(Coefficients {
            materials,
            element_tags: mesh.material_tags().to_vec(),
        })
    }

    /// `μ = ε = I` everywhere.
    pub fn vacuum(mesh: &Mesh<T>) -> Self {
        let tags = mesh.material_tags().iter().copied().max().map_or(1, |t| t + 1);
        Coefficients {
            materials: vec![Material::vacuum(); tags],
            element_tags: mesh.material_tags().to_vec(),
        }
    }

    pub fn materials(&self) -> &[Material<T>] {
        &self.materials
    }

    pub fn material(&self, k: usize) -> &Material<T> {
        &self.materials[self.element_tags[k]]
    }

    pub fn mu_inv(&self, k: usize) -> T {
        T::one() / self.material(k).mu
    }

    pub fn epsilon(&self, k: usize) -> Mat2<T> {
        self.material(k).epsilon
    }

    /// `ε_K v`.
    pub fn eps_apply(&self, k: usize, v: Vec2<T>) -> Vec2<T> {
        let e = self.material(k).epsilon;
        [e[0][0] * v[0] + e[0][1] * v[1], e[1][0] * v[0] + e[1][1] * v[1]]
    }

    /// Whether every material has `ε = c I`.
    pub fn all_isotropic(&self) -> bool {
        self.materials.iter().all(Material::is_isotropic)
    }

    /// Returns a copy with `ε` multiplied by `c` in every material.
    pub fn scale_epsilon(&self, c: T) -> Self {
        let mut out = self.clone();
        for m in &mut out.materials {
            for row in &mut m.epsilon {
                for x in row {
                    *x *= c;
                }
            }
        }
        out
    }

    /// Returns a copy with `μ⁻¹` multiplied by `c` in every material.
    pub fn scale_mu_inv(&self, c: T) -> Self {
        let mut out = self.clone();
        for m in &mut out.materials {
            m.mu /= c;
        }
        out
    }
}
