//! Convergence studies over uniformly refined mesh families.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::constants::coercivity_spot_check;
use super::errors::error_norms;
use super::exact::ExactSolution;
use crate::assembly::{assemble_system, DgContext, FaceParameter, ProblemSpec};
use crate::coefficients::Material;
use crate::error::{Error, Result};
use crate::mesh::{builtin_mesh, BuiltinMesh, Mesh};
use crate::scalar::Real;
use crate::solver::{solve_auxiliary, solve_mixed, Solution};
use crate::spaces::{Discretization, Space};

/// Which discrete system is solved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    #[default]
    Primal,
    Auxiliary,
}

/// Built-in manufactured problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Sine,
    SinePressure,
    Polynomial,
    #[serde(rename = "lshape")]
    LShape,
    Gradient,
    Zero,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Sine => "sine",
            ProblemKind::SinePressure => "sine_pressure",
            ProblemKind::Polynomial => "polynomial",
            ProblemKind::LShape => "lshape",
            ProblemKind::Gradient => "gradient",
            ProblemKind::Zero => "zero",
        }
    }

    /// The natural mesh of the problem with `n` cells per unit length.
    pub fn default_mesh<T: Real>(self, n: usize) -> Result<Mesh<T>> {
        match self {
            ProblemKind::LShape => builtin_mesh(BuiltinMesh::LShape(n)),
            _ => builtin_mesh(BuiltinMesh::UnitSquare(n)),
        }
    }

    /// Exact solution for wave number `k`. The gradient problem is built
    /// from the discretization it will be solved on.
    pub fn exact<T: Real>(self, k: T, disc: &Discretization<T>) -> Result<ExactSolution<T>> {
        Ok(match self {
            ProblemKind::Sine => ExactSolution::sine(k),
            ProblemKind::SinePressure => ExactSolution::sine_pressure(k),
            ProblemKind::Polynomial => ExactSolution::polynomial(k),
            ProblemKind::LShape => ExactSolution::lshape(k),
            ProblemKind::Gradient => ExactSolution::gradient(disc)?,
            ProblemKind::Zero => ExactSolution::zero(),
        })
    }
}

/// Inputs of [`convergence_study`].
#[derive(Clone, Debug)]
pub struct StudyConfig<T: Real = f64> {
    pub problem: ProblemKind,
    /// Coarsest mesh; level `i` refines it uniformly `i` times.
    pub mesh: Mesh<T>,
    /// Label of the mesh family for the report metadata.
    pub mesh_family: String,
    pub levels: usize,
    pub degree: usize,
    pub k: T,
    pub materials: Vec<Material<T>>,
    pub alpha: FaceParameter<T>,
    pub gamma: FaceParameter<T>,
    pub formulation: Formulation,
    /// Random vectors per level for the coercivity spot-check.
    pub coercivity_samples: usize,
    pub seed: u64,
}

impl<T: Real> StudyConfig<T> {
    /// Vacuum, default face parameters, primal formulation.
    pub fn new(
        problem: ProblemKind,
        mesh: Mesh<T>,
        mesh_family: impl Into<String>,
        levels: usize,
        degree: usize,
        k: T,
    ) -> Self {
        StudyConfig {
            problem,
            mesh,
            mesh_family: mesh_family.into(),
            levels,
            degree,
            k,
            materials: vec![Material::vacuum()],
            alpha: FaceParameter::Auto,
            gamma: FaceParameter::Auto,
            formulation: Formulation::Primal,
            coercivity_samples: 50,
            seed: 0,
        }
    }
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    pub h: f64,
    pub dofs_u: usize,
    pub dofs_p: usize,
    pub e_v: f64,
    pub eoc_v: Option<f64>,
    pub e_q: f64,
    pub eoc_q: Option<f64>,
    /// Smallest sampled `(a_h(v,v) − ½|v|²) / |v|²`.
    pub coercivity_margin: f64,
    pub constraint_residual: f64,
    pub relative_residual: f64,
    pub min_relative_pivot: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub problem: String,
    pub degree: usize,
    pub k: f64,
    pub alpha: String,
    pub gamma: String,
    pub mesh_family: String,
    pub formulation: Formulation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub metadata: ReportMetadata,
    pub records: Vec<LevelRecord>,
}

/// `log(e_prev / e) / log(h_prev / h)`, or `None` when undefined.
pub fn eoc(e_prev: f64, e: f64, h_prev: f64, h: f64) -> Option<f64> {
    let r = (e_prev / e).ln() / (h_prev / h).ln();
    r.is_finite().then_some(r)
}

fn describe<T: Real>(p: &FaceParameter<T>) -> String {
    match p {
        FaceParameter::Auto => "auto".into(),
        FaceParameter::Uniform(x) => format!("{}", x.as_f64()),
        FaceParameter::PerFace(_) => "per-face".into(),
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_default()
}

impl ConvergenceReport {
    pub fn terminal_eoc_v(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.eoc_v)
    }

    pub fn terminal_eoc_q(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.eoc_q)
    }

    /// CSV with a fixed column set; timings are left out so that repeated
    /// runs produce identical bytes.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,h,dofs_u,dofs_p,eV,eocV,eQ,eocQ,coercivity_margin,constraint_residual\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{:.6e},{},{},{:.6e},{},{:.6e},{},{:.6e},{:.3e}",
                r.level,
                r.h,
                r.dofs_u,
                r.dofs_p,
                r.e_v,
                fmt_opt(r.eoc_v),
                r.e_q,
                fmt_opt(r.eoc_q),
                r.coercivity_margin,
                r.constraint_residual
            );
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let m = &self.metadata;
        let mut s = format!(
            "Problem `{}`, degree {}, k = {}, alpha {}, gamma {}, mesh {}, {:?} formulation.\n\n",
            m.problem, m.degree, m.k, m.alpha, m.gamma, m.mesh_family, m.formulation
        );
        s.push_str(
            "| level | h | dofs u | dofs p | e_V | EOC | e_Q | EOC | coercivity margin | constraint residual |\n",
        );
        s.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "| {} | {:.4e} | {} | {} | {:.4e} | {} | {:.4e} | {} | {:.3e} | {:.2e} |",
                r.level,
                r.h,
                r.dofs_u,
                r.dofs_p,
                r.e_v,
                fmt_opt(r.eoc_v),
                r.e_q,
                fmt_opt(r.eoc_q),
                r.coercivity_margin,
                r.constraint_residual
            );
        }
        s
    }

    /// Full report including solver diagnostics and timings.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Solution, errors and diagnostics of one level.
pub struct LevelOutcome<T: Real> {
    pub context: DgContext<T>,
    pub exact: ExactSolution<T>,
    pub solution: Solution<T>,
}

/// Builds, assembles and solves `problem` on `mesh`.
pub fn solve_level<T: Real>(cfg: &StudyConfig<T>, mesh: Mesh<T>) -> Result<LevelOutcome<T>> {
    let base = ProblemSpec::new(cfg.k)
        .with_materials(cfg.materials.clone())
        .with_alpha(cfg.alpha.clone())
        .with_gamma(cfg.gamma.clone());
    let context = DgContext::new(mesh, cfg.degree, &base)?;
    let exact = cfg.problem.exact(cfg.k, &context.disc)?;
    let mut spec = base;
    spec.source = exact.source.clone();
    spec.boundary = exact.boundary.clone();
    let blocks = assemble_system(&context, &spec)?;
    let solution = match cfg.formulation {
        Formulation::Primal => solve_mixed(context.layout(), &blocks, cfg.k)?,
        Formulation::Auxiliary => solve_auxiliary(&context, &blocks, cfg.k)?,
    };
    Ok(LevelOutcome {
        context,
        exact,
        solution,
    })
}

/// Solves on `levels` uniformly refined meshes and tabulates DG-norm errors
/// with their experimental orders of convergence.
pub fn convergence_study<T: Real>(cfg: &StudyConfig<T>) -> Result<ConvergenceReport> {
    if cfg.levels == 0 {
        return Err(Error::InvalidParameter("a study needs at least one level".into()));
    }
    let mut records: Vec<LevelRecord> = Vec::with_capacity(cfg.levels);
    let mut mesh = cfg.mesh.clone();
    for level in 0..cfg.levels {
        let with_level = |e: Error| Error::Level {
            level,
            source: Box::new(e),
        };
        if level > 0 {
            mesh = mesh.refine_uniform().map_err(with_level)?;
        }
        let start = Instant::now();
        let out = solve_level(cfg, mesh.clone()).map_err(with_level)?;
        let errs = error_norms(&out.context, &out.exact, &out.solution.u, &out.solution.p).map_err(with_level)?;
        let coercivity = coercivity_spot_check(
            &out.context,
            cfg.coercivity_samples,
            cfg.seed.wrapping_add(level as u64),
        );
        let h = mesh.h_max().as_f64();
        let (e_v, e_q) = (errs.e_v.as_f64(), errs.e_q.as_f64());
        let (eoc_v, eoc_q) = match records.last() {
            Some(prev) => (eoc(prev.e_v, e_v, prev.h, h), eoc(prev.e_q, e_q, prev.h, h)),
            None => (None, None),
        };
        let layout = out.context.layout();
        let diag = out.solution.diagnostics;
        records.push(LevelRecord {
            level,
            h,
            dofs_u: layout.dim(Space::V),
            dofs_p: layout.dim(Space::Q),
            e_v,
            eoc_v,
            e_q,
            eoc_q,
            coercivity_margin: coercivity.min,
            constraint_residual: diag.constraint_residual,
            relative_residual: diag.relative_residual,
            min_relative_pivot: diag.pivots.min_relative_pivot,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(ConvergenceReport {
        metadata: ReportMetadata {
            problem: cfg.problem.name().into(),
            degree: cfg.degree,
            k: cfg.k.as_f64(),
            alpha: describe(&cfg.alpha),
            gamma: describe(&cfg.gamma),
            mesh_family: cfg.mesh_family.clone(),
            formulation: cfg.formulation,
        },
        records,
    })
}
