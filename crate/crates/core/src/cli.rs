//! Configuration-driven entry point behind the `maxwelldg` binary.
//!
//! A run is described by a JSON document (see [`RunConfig`]); a few command
//! line flags override its fields. Outputs are written next to the path given
//! by `output`: `.csv` and `.md` tables plus a `.json` sidecar with solver
//! diagnostics and timings. Without `output` the primary table goes to stdout.

use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::constants::{
    coercivity_spot_check, friedrichs_constant, indefinite_infsup_constant, infsup_constant_b,
    kernel_ellipticity_constant,
};
use crate::analysis::convergence::{convergence_study, solve_level, Formulation, ProblemKind, StudyConfig};
use crate::analysis::errors::error_norms;
use crate::assembly::DgContext;
use crate::assembly::{coercivity_threshold, FaceParameter, NormMatrices, ProblemSpec, DEFAULT_GAMMA};
use crate::coefficients::{Mat2, Material};
use crate::error::{Error, Result};
use crate::mesh::{builtin_mesh, load_mesh, BuiltinMesh, Mesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Study,
    Constants,
}

/// `α_F` policy: `"auto"` or a uniform value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaPolicy {
    Value(f64),
    Named(AutoTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

impl Default for AlphaPolicy {
    fn default() -> Self {
        AlphaPolicy::Named(AutoTag::Auto)
    }
}

/// Permittivity given as a scalar or a full 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSpec {
    Scalar(f64),
    Matrix(Mat2<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub mu: f64,
    pub epsilon: EpsilonSpec,
}

impl MaterialSpec {
    fn to_material(self) -> Material<f64> {
        match self.epsilon {
            EpsilonSpec::Scalar(e) => Material::isotropic(self.mu, e),
            EpsilonSpec::Matrix(m) => Material {
                mu: self.mu,
                epsilon: m,
            },
        }
    }
}

fn default_levels() -> usize {
    1
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn default_samples() -> usize {
    50
}

/// A validated run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    /// `square:N`, `lshape:N`, `file:PATH` or a bare mesh file path.
    pub mesh: String,
    pub degree: usize,
    pub k: f64,
    pub problem: ProblemKind,
    /// One material per tag; vacuum when omitted.
    #[serde(default)]
    pub materials: Vec<MaterialSpec>,
    #[serde(default)]
    pub alpha: AlphaPolicy,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub formulation: Formulation,
    #[serde(default)]
    pub seed: u64,
    /// Random vectors per mesh for the coercivity spot-check.
    #[serde(default = "default_samples")]
    pub coercivity_samples: usize,
}

/// Parses and validates a configuration. Returns warnings alongside.
pub fn parse_config(text: &str) -> Result<(RunConfig, Vec<String>)> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let warnings = validate(&cfg)?;
    Ok((cfg, warnings))
}

fn validate(cfg: &RunConfig) -> Result<Vec<String>> {
    let mut warnings = Vec::new();
    if cfg.levels == 0 {
        return Err(Error::Config("levels must be at least 1".into()));
    }
    crate::spaces::check_degree(cfg.degree)?;
    if !cfg.k.is_finite() || cfg.k < 0.0 {
        return Err(Error::Config(format!(
            "k must be finite and nonnegative, got {}",
            cfg.k
        )));
    }
    if !(cfg.gamma.is_finite() && cfg.gamma >= 0.0) {
        return Err(Error::Config(format!(
            "gamma must be finite and nonnegative, got {}",
            cfg.gamma
        )));
    }
    if cfg.gamma < DEFAULT_GAMMA {
        warnings.push(format!(
            "gamma = {} is below 1/2; unique solvability is only guaranteed for gamma >= 1/2",
            cfg.gamma
        ));
    }
    if let AlphaPolicy::Value(a) = cfg.alpha {
        let threshold = coercivity_threshold();
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::Config(format!("alpha must be finite and nonnegative, got {a}")));
        }
        if a < threshold {
            warnings.push(format!(
                "alpha = {a} is below 1/2 + 2n_K = {threshold}; coercivity of a_h is not guaranteed"
            ));
        }
    }
    parse_mesh_spec(&cfg.mesh)?;
    Ok(warnings)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum MeshSpec {
    Builtin(BuiltinMesh),
    File(PathBuf),
}

fn parse_mesh_spec(spec: &str) -> Result<MeshSpec> {
    let builtin = |n: &str, f: fn(usize) -> BuiltinMesh| -> Result<MeshSpec> {
        let n: usize = n
            .parse()
            .map_err(|_| Error::Config(format!("mesh '{spec}': resolution must be a positive integer")))?;
        if n == 0 {
            return Err(Error::Config(format!(
                "mesh '{spec}': resolution must be a positive integer"
            )));
        }
        Ok(MeshSpec::Builtin(f(n)))
    };
    match spec.split_once(':') {
        Some(("square", n)) => builtin(n, BuiltinMesh::UnitSquare),
        Some(("lshape", n)) => builtin(n, BuiltinMesh::LShape),
        Some(("file", p)) => Ok(MeshSpec::File(PathBuf::from(p))),
        _ => Ok(MeshSpec::File(PathBuf::from(spec))),
    }
}

fn mesh_from_spec(spec: &MeshSpec) -> Result<Mesh<f64>> {
    match spec {
        MeshSpec::Builtin(b) => builtin_mesh(*b),
        MeshSpec::File(p) => {
            let f = fs::File::open(p).map_err(|e| Error::Config(format!("cannot open mesh '{}': {e}", p.display())))?;
            load_mesh(BufReader::new(f))
        }
    }
}

fn study_config(cfg: &RunConfig) -> Result<StudyConfig<f64>> {
    let mesh = mesh_from_spec(&parse_mesh_spec(&cfg.mesh)?)?;
    let mut sc = StudyConfig::new(cfg.problem, mesh, cfg.mesh.clone(), cfg.levels, cfg.degree, cfg.k);
    if !cfg.materials.is_empty() {
        sc.materials = cfg.materials.iter().map(|m| m.to_material()).collect();
    }
    sc.alpha = match cfg.alpha {
        AlphaPolicy::Value(a) => FaceParameter::Uniform(a),
        AlphaPolicy::Named(AutoTag::Auto) => FaceParameter::Auto,
    };
    sc.gamma = FaceParameter::Uniform(cfg.gamma);
    sc.formulation = cfg.formulation;
    sc.coercivity_samples = cfg.coercivity_samples;
    sc.seed = cfg.seed;
    Ok(sc)
}

/// Text artifacts of a run. `primary` is what goes to stdout when no output
/// path is configured.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub primary: String,
    /// `(extension, contents)` pairs written next to `output`.
    pub files: Vec<(&'static str, String)>,
}

#[derive(Serialize)]
struct SolveReport {
    problem: String,
    mesh: String,
    degree: usize,
    k: f64,
    formulation: Formulation,
    dofs_u: usize,
    dofs_p: usize,
    norm_u_v: f64,
    seminorm_u_v: f64,
    norm_p_q: f64,
    norm_lambda_m: Option<f64>,
    error_v: f64,
    error_q: f64,
    relative_residual: f64,
    constraint_residual: f64,
    min_relative_pivot: f64,
    unknowns: usize,
}

fn run_solve(cfg: &RunConfig) -> Result<RunOutput> {
    let sc = study_config(cfg)?;
    let start = Instant::now();
    let out = solve_level(&sc, sc.mesh.clone())?;
    let ctx = &out.context;
    let norms = NormMatrices::new(ctx);
    let n = norms.norms(
        ctx.layout(),
        &out.solution.u,
        &out.solution.p,
        out.solution.lambda.as_ref(),
    )?;
    let errs = error_norms(ctx, &out.exact, &out.solution.u, &out.solution.p)?;
    let d = out.solution.diagnostics;
    let report = SolveReport {
        problem: cfg.problem.name().into(),
        mesh: cfg.mesh.clone(),
        degree: cfg.degree,
        k: cfg.k,
        formulation: cfg.formulation,
        dofs_u: ctx.layout().dim(crate::spaces::Space::V),
        dofs_p: ctx.layout().dim(crate::spaces::Space::Q),
        norm_u_v: n.norm_v,
        seminorm_u_v: n.seminorm_v,
        norm_p_q: n.norm_q,
        norm_lambda_m: out.solution.lambda.as_ref().map(|_| n.norm_m),
        error_v: errs.e_v,
        error_q: errs.e_q,
        relative_residual: d.relative_residual,
        constraint_residual: d.constraint_residual,
        min_relative_pivot: d.pivots.min_relative_pivot,
        unknowns: d.unknowns,
    };
    let primary = serde_json::to_string_pretty(&report).expect("report serializes");
    let sidecar = serde_json::json!({ "seconds": start.elapsed().as_secs_f64(), "report": report });
    Ok(RunOutput {
        primary: primary.clone(),
        files: vec![("json", primary), ("timing.json", sidecar.to_string())],
    })
}

fn run_study(cfg: &RunConfig) -> Result<RunOutput> {
    let report = convergence_study(&study_config(cfg)?)?;
    let csv = report.to_csv();
    Ok(RunOutput {
        primary: csv.clone(),
        files: vec![("csv", csv), ("md", report.to_markdown()), ("json", report.to_json())],
    })
}

/// One row of the constants table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantsRow {
    pub level: usize,
    pub h: f64,
    pub friedrichs: f64,
    pub kappa_b: f64,
    pub kappa_a: f64,
    pub infsup_k: f64,
    pub coercivity_margin: f64,
    /// Largest relative deviation of the four constants from the first row.
    pub drift: f64,
}

/// Stability constants on `levels` uniformly refined meshes.
pub fn constants_table(cfg: &RunConfig) -> Result<Vec<ConstantsRow>> {
    let sc = study_config(cfg)?;
    let spec = ProblemSpec::new(cfg.k)
        .with_materials(sc.materials.clone())
        .with_alpha(sc.alpha.clone())
        .with_gamma(sc.gamma.clone());
    let mut mesh = sc.mesh.clone();
    let mut rows: Vec<ConstantsRow> = Vec::new();
    for level in 0..cfg.levels {
        let at = |e: Error| Error::Level {
            level,
            source: Box::new(e),
        };
        if level > 0 {
            mesh = mesh.refine_uniform().map_err(at)?;
        }
        let ctx = DgContext::new(mesh.clone(), cfg.degree, &spec).map_err(at)?;
        let values = [
            friedrichs_constant(&ctx).map_err(at)?,
            infsup_constant_b(&ctx, true).map_err(at)?,
            kernel_ellipticity_constant(&ctx).map_err(at)?,
            indefinite_infsup_constant(&ctx, cfg.k).map_err(at)?,
        ];
        let drift = rows.first().map_or(0.0, |first| {
            let base = [first.friedrichs, first.kappa_b, first.kappa_a, first.infsup_k];
            base.iter()
                .zip(values)
                .map(|(b, v)| ((v - b) / b).abs())
                .fold(0.0, f64::max)
        });
        rows.push(ConstantsRow {
            level,
            h: mesh.h_max(),
            friedrichs: values[0],
            kappa_b: values[1],
            kappa_a: values[2],
            infsup_k: values[3],
            coercivity_margin: coercivity_spot_check(&ctx, cfg.coercivity_samples, cfg.seed.wrapping_add(level as u64))
                .min,
            drift,
        });
    }
    Ok(rows)
}

fn run_constants(cfg: &RunConfig) -> Result<RunOutput> {
    let rows = constants_table(cfg)?;
    let mut csv = String::from("level,h,friedrichs,kappa_b,kappa_a,infsup_k,coercivity_margin,drift\n");
    let mut md = String::from(
        "| level | h | Friedrichs | kappa_B | kappa_A | inf-sup (k) | coercivity margin | drift |\n|---|---|---|---|---|---|---|---|\n",
    );
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.4}",
            r.level, r.h, r.friedrichs, r.kappa_b, r.kappa_a, r.infsup_k, r.coercivity_margin, r.drift
        );
        let _ = writeln!(
            md,
            "| {} | {:.4e} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.1}% |",
            r.level,
            r.h,
            r.friedrichs,
            r.kappa_b,
            r.kappa_a,
            r.infsup_k,
            r.coercivity_margin,
            100.0 * r.drift
        );
    }
    let json = serde_json::to_string_pretty(&rows).expect("rows serialize");
    Ok(RunOutput {
        primary: csv.clone(),
        files: vec![("csv", csv), ("md", md), ("json", json)],
    })
}

/// Executes `command` for a validated configuration.
pub fn run(command: Command, cfg: &RunConfig) -> Result<RunOutput> {
    match command {
        Command::Solve => run_solve(cfg),
        Command::Study => run_study(cfg),
        Command::Constants => run_constants(cfg),
    }
}

fn with_extension(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `output` next to `base` (`base.csv`, `base.md`, ...).
pub fn write_outputs(base: &Path, output: &RunOutput) -> Result<Vec<PathBuf>> {
    if let Some(dir) = base.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut written = Vec::new();
    for (ext, contents) in &output.files {
        let path = with_extension(base, ext);
        fs::write(&path, contents)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Parser)]
#[command(name = "maxwelldg", about = "Mixed DG solver for 2D time-harmonic Maxwell problems")]
pub struct Args {
    /// What to run.
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `levels`.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Overrides `degree`.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Overrides `output` (path prefix for the written artifacts).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Loads the configuration named by `args` and applies the overrides.
pub fn load(args: &Args) -> Result<(RunConfig, Vec<String>)> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read '{}': {e}", args.config.display())))?;
    let (mut cfg, _) = parse_config(&text)?;
    if let Some(c) = cfg.command {
        if c != args.command {
            return Err(Error::Config(format!(
                "config requests {c:?} but {:?} was given on the command line",
                args.command
            )));
        }
    }
    cfg.command = Some(args.command);
    if let Some(l) = args.levels {
        cfg.levels = l;
    }
    if let Some(d) = args.degree {
        cfg.degree = d;
    }
    if let Some(o) = &args.output {
        cfg.output = Some(o.clone());
    }
    let warnings = validate(&cfg)?;
    Ok((cfg, warnings))
}

/// Runs the CLI with parsed arguments; returns the process exit code.
pub fn main_with(args: Args) -> ExitCode {
    let result = load(&args).and_then(|(cfg, warnings)| {
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        let out = run(args.command, &cfg)?;
        match &cfg.output {
            Some(base) => {
                for p in write_outputs(base, &out)? {
                    eprintln!("wrote {}", p.display());
                }
            }
            None => print!("{}", out.primary),
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
