//! Direct solution of the primal and auxiliary saddle-point systems.

use nalgebra::{DMatrix, DVector};

use crate::assembly::{DgContext, Source, SystemBlocks};
use crate::error::{Error, Result};
use crate::linalg::{block_matrix, relative_residual, CscMatrix, PivotReport, SparseLu, Triplets};
use crate::scalar::Real;
use crate::spaces::{FemField, Space, SpaceLayout};

/// Largest accepted relative algebraic residual in `f64` (see [`Real::tolerance`]).
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Rounds of iterative refinement after the direct solve.
const REFINEMENT_STEPS: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    /// `‖Kx − b‖ / (‖K‖_F ‖x‖ + ‖b‖)` of the block system.
    pub relative_residual: f64,
    /// `‖Bu − Cp‖ / (‖B‖_F ‖u‖ + ‖C‖_F ‖p‖)`.
    pub constraint_residual: f64,
    pub pivots: PivotReport,
    pub unknowns: usize,
}

#[derive(Clone, Debug)]
pub struct Solution<T: Real = f64> {
    pub u: FemField<T>,
    pub p: FemField<T>,
    /// Present for the auxiliary formulation.
    pub lambda: Option<FemField<T>>,
    pub diagnostics: Diagnostics,
}

fn constraint_residual<T: Real>(blocks: &SystemBlocks<T>, u: &DVector<T>, p: &DVector<T>) -> f64 {
    let r = (blocks.b.mul_vec(u) - blocks.c.mul_vec(p)).norm();
    let scale = blocks.b.frobenius_norm() * u.norm() + blocks.c.frobenius_norm() * p.norm();
    if scale == T::zero() {
        0.0
    } else {
        (r / scale).as_f64()
    }
}

/// The primal block matrix `[[A − k²M_ε, Bᵀ], [B, −C]]`.
pub fn primal_matrix<T: Real>(blocks: &SystemBlocks<T>, k: T) -> CscMatrix<T> {
    let (nv, nq) = (blocks.a.nrows, blocks.c.nrows);
    let bt = blocks.b.transpose();
    block_matrix(
        &[nv, nq],
        &[nv, nq],
        &[
            (0, 0, &blocks.a, T::one()),
            (0, 0, &blocks.mass, -k * k),
            (0, 1, &bt, T::one()),
            (1, 0, &blocks.b, T::one()),
            (1, 1, &blocks.c, -T::one()),
        ],
    )
}

fn check_residual<T: Real>(relative: f64) -> Result<()> {
    let tol = T::tolerance(RESIDUAL_TOLERANCE);
    if relative > tol || !relative.is_finite() {
        Err(Error::LinearAlgebra(format!(
            "relative residual {relative:e} exceeds {tol:e}"
        )))
    } else {
        Ok(())
    }
}

/// Solves the mixed DG system for wave number `k`.
pub fn solve_mixed<T: Real>(layout: &SpaceLayout, blocks: &SystemBlocks<T>, k: T) -> Result<Solution<T>> {
    let nv = layout.dim(Space::V);
    let nq = layout.dim(Space::Q);
    if blocks.a.nrows != nv || blocks.c.nrows != nq || blocks.f.len() != nv {
        return Err(Error::SpaceMismatch {
            expected: format!("blocks for V_h dimension {nv}, Q_h dimension {nq}"),
            found: format!(
                "A {}×{}, C {}×{}",
                blocks.a.nrows, blocks.a.ncols, blocks.c.nrows, blocks.c.ncols
            ),
        });
    }
    let kmat = primal_matrix(blocks, k);
    let lu = SparseLu::factor(&kmat)?;
    let mut rhs = DVector::zeros(nv + nq);
    rhs.rows_mut(0, nv).copy_from(&blocks.f);
    let x = lu.solve_refined(&kmat, &rhs, REFINEMENT_STEPS);
    let relative = relative_residual(&kmat, &x, &rhs).as_f64();
    check_residual::<T>(relative)?;
    let u = x.rows(0, nv).into_owned();
    let p = x.rows(nv, nq).into_owned();
    let diagnostics = Diagnostics {
        relative_residual: relative,
        constraint_residual: constraint_residual(blocks, &u, &p),
        pivots: lu.report,
        unknowns: nv + nq,
    };
    Ok(Solution {
        u: FemField::new(layout, Space::V, u)?,
        p: FemField::new(layout, Space::Q, p)?,
        lambda: None,
        diagnostics,
    })
}

/// The `λ`-blocks of the auxiliary formulation in reduced face coordinates.
#[derive(Clone, Debug)]
pub struct AuxiliaryOperators<T: Real = f64> {
    /// Reduced coordinates per face (`2ℓ+1`).
    pub rank: usize,
    /// `Γ = blockdiag(γ_F PᵀG^ε_F P)`.
    pub gamma: CscMatrix<T>,
    /// `E`, rows in `Q_h`: `qᵀEη = Σ_F γ_F (εR_F([[q]]_N), R_F(Pη))`.
    pub e: CscMatrix<T>,
    /// `blockdiag(PᵀG^ε_F P)`, the `M_h` norm in reduced coordinates.
    pub norm: CscMatrix<T>,
}

impl<T: Real> AuxiliaryOperators<T> {
    pub fn new(ctx: &DgContext<T>) -> Self {
        let layout = ctx.layout();
        let r = 2 * layout.degree + 1;
        let nl = r * ctx.disc.faces.len();
        let mut gamma_t = Triplets::new(nl, nl);
        let mut norm_t = Triplets::new(nl, nl);
        let mut e_t = Triplets::new(layout.dim(Space::Q), nl);
        for (f, fl) in ctx.lifts.faces().iter().enumerate() {
            let gp: DMatrix<T> = &fl.gram_eps * &fl.range;
            let reduced = fl.range.transpose() * &gp;
            gamma_t.add_block(f * r, f * r, &(&reduced * ctx.gamma[f]));
            norm_t.add_block(f * r, f * r, &reduced);
            for (side, &kt) in fl.support.iter().enumerate() {
                let block = fl.jump_normal[side].transpose() * &gp * ctx.gamma[f];
                e_t.add_block(layout.dofs(Space::Q, kt).start, f * r, &block);
            }
        }
        AuxiliaryOperators {
            rank: r,
            gamma: gamma_t.to_csc(),
            e: e_t.to_csc(),
            norm: norm_t.to_csc(),
        }
    }
}

/// Solves the auxiliary three-field formulation in the unknowns
/// `(u_h, λ_h, p_h)`:
///
/// ```text
/// [ A − k²M_ε   0     Bᵀ  ]
/// [ 0           Γ    −Eᵀ  ]
/// [ B          −E     0   ]
/// ```
///
/// with `Γ = blockdiag(γ_F G^ε_F)` and `E` coupling `[[q]]_N` to `λ`.
/// `λ_h` is carried in the per-face coordinates of
/// [`crate::lifting::FaceLifting::range`], where `R_F` is injective, and
/// returned as a full `M_h` field.
pub fn solve_auxiliary<T: Real>(ctx: &DgContext<T>, blocks: &SystemBlocks<T>, k: T) -> Result<Solution<T>> {
    let layout = ctx.layout();
    let nv = layout.dim(Space::V);
    let nq = layout.dim(Space::Q);
    let aux = AuxiliaryOperators::new(ctx);
    let (r, nl) = (aux.rank, aux.gamma.nrows);
    let (gamma, e) = (&aux.gamma, &aux.e);
    let et = e.transpose();
    let bt = blocks.b.transpose();
    let kmat = block_matrix(
        &[nv, nl, nq],
        &[nv, nl, nq],
        &[
            (0, 0, &blocks.a, T::one()),
            (0, 0, &blocks.mass, -k * k),
            (0, 2, &bt, T::one()),
            (1, 1, gamma, T::one()),
            (1, 2, &et, -T::one()),
            (2, 0, &blocks.b, T::one()),
            (2, 1, e, -T::one()),
        ],
    );
    let lu = SparseLu::factor(&kmat)?;
    let mut rhs = DVector::zeros(nv + nl + nq);
    rhs.rows_mut(0, nv).copy_from(&blocks.f);
    let x = lu.solve_refined(&kmat, &rhs, REFINEMENT_STEPS);
    let relative = relative_residual(&kmat, &x, &rhs).as_f64();
    check_residual::<T>(relative)?;
    let u = x.rows(0, nv).into_owned();
    let p = x.rows(nv + nl, nq).into_owned();
    let mut lambda = DVector::zeros(layout.dim(Space::M));
    for fl in ctx.lifts.faces() {
        let full = &fl.range * x.rows(nv + fl.face * r, r);
        let o = layout.dofs(Space::M, fl.face).start;
        lambda.rows_mut(o, full.len()).copy_from(&full);
    }
    let diagnostics = Diagnostics {
        relative_residual: relative,
        constraint_residual: constraint_residual(blocks, &u, &p),
        pivots: lu.report,
        unknowns: nv + nl + nq,
    };
    Ok(Solution {
        u: FemField::new(layout, Space::V, u)?,
        p: FemField::new(layout, Space::Q, p)?,
        lambda: Some(FemField::new(layout, Space::M, lambda)?),
        diagnostics,
    })
}

/// The discrete solution operator `T_h : j ↦ u_h` at `k = 0`, with the
/// factorization kept for repeated application.
#[derive(Clone, Debug)]
pub struct DiscreteSolutionOperator<T: Real = f64> {
    layout: SpaceLayout,
    matrix: CscMatrix<T>,
    lu: SparseLu<T>,
}

impl<T: Real> DiscreteSolutionOperator<T> {
    pub fn new(layout: &SpaceLayout, blocks: &SystemBlocks<T>) -> Result<Self> {
        let matrix = primal_matrix(blocks, T::zero());
        let lu = SparseLu::factor(&matrix)?;
        Ok(DiscreteSolutionOperator {
            layout: *layout,
            matrix,
            lu,
        })
    }

    /// `u_h` for the load vector `f_i = (j, φ_i)`.
    pub fn apply_load(&self, f: &DVector<T>) -> Result<FemField<T>> {
        let nv = self.layout.dim(Space::V);
        if f.len() != nv {
            return Err(Error::SpaceMismatch {
                expected: format!("load vector of length {nv}"),
                found: format!("length {}", f.len()),
            });
        }
        let mut rhs = DVector::zeros(self.matrix.nrows);
        rhs.rows_mut(0, nv).copy_from(f);
        let x = self.lu.solve_refined(&self.matrix, &rhs, REFINEMENT_STEPS);
        check_residual::<T>(relative_residual(&self.matrix, &x, &rhs).as_f64())?;
        FemField::new(&self.layout, Space::V, x.rows(0, nv).into_owned())
    }

    /// `T_h j` for a source given pointwise.
    pub fn apply(&self, ctx: &DgContext<T>, j: &Source<T>) -> Result<FemField<T>> {
        self.apply_load(&crate::assembly::assemble_load(ctx, j, None)?)
    }
}

/// Convenience wrapper: `T_h j`.
pub fn discrete_solution_operator<T: Real>(
    ctx: &DgContext<T>,
    blocks: &SystemBlocks<T>,
    j: &Source<T>,
) -> Result<FemField<T>> {
    DiscreteSolutionOperator::new(ctx.layout(), blocks)?.apply(ctx, j)
}
