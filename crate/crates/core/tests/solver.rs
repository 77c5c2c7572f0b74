use maxwell_dg::analysis::{error_norms, ExactSolution};
use maxwell_dg::assembly::{
    assemble_a, assemble_b, assemble_load, assemble_system, relative_difference, DgContext, FaceParameter, Mode,
    NormMatrices, ProblemSpec, Source,
};
use maxwell_dg::coefficients::Material;
use maxwell_dg::mesh::{builtin_mesh, BuiltinMesh, Mesh};
use maxwell_dg::solver::{primal_matrix, solve_auxiliary, solve_mixed, DiscreteSolutionOperator};
use maxwell_dg::{Error, Real};
use proptest::prelude::*;
use std::sync::Arc;

fn square<T: Real>(n: usize) -> Mesh<T> {
    builtin_mesh(BuiltinMesh::UnitSquare(n)).unwrap()
}

fn anisotropic() -> Vec<Material<f64>> {
    vec![
        Material::isotropic(1.0, 1.0),
        Material {
            mu: 2.0,
            epsilon: [[2.0, 0.5], [0.5, 1.5]],
        },
    ]
}

fn two_tags(mesh: Mesh<f64>) -> Mesh<f64> {
    let tags = (0..mesh.num_elements())
        .map(|k| usize::from(mesh.centroid(k)[0] > 0.5))
        .collect();
    mesh.with_material_tags(tags).unwrap()
}

fn polynomial_source(a: f64, b: f64, c: f64) -> Source<f64> {
    Arc::new(move |_, x| [a + b * x[1] - c * x[0] * x[1], b - c * x[0] * x[0] + a * x[1]])
}

#[test]
fn zero_load_gives_exact_zero_for_anisotropic_media() {
    for degree in [1, 2] {
        let spec = ProblemSpec::new(2.0).with_materials(anisotropic());
        let ctx = DgContext::new(two_tags(square(3)), degree, &spec).unwrap();
        let blocks = assemble_system(&ctx, &spec).unwrap();
        for sol in [
            solve_mixed(ctx.layout(), &blocks, 2.0).unwrap(),
            solve_auxiliary(&ctx, &blocks, 2.0).unwrap(),
        ] {
            assert_eq!(sol.u.coeffs.amax(), 0.0);
            assert_eq!(sol.p.coeffs.amax(), 0.0);
        }
    }
}

#[test]
fn block_matrix_is_symmetric() {
    let spec = ProblemSpec::new(1.5).with_materials(anisotropic());
    let ctx = DgContext::new(two_tags(square(4)), 2, &spec).unwrap();
    let blocks = assemble_system(&ctx, &spec).unwrap();
    let k = primal_matrix(&blocks, 1.5);
    assert!(k.symmetry_error() <= 1e-13 * k.amax());
    assert!(blocks.a.symmetry_error() <= 1e-13 * blocks.a.amax());
    assert!(blocks.c.symmetry_error() <= 1e-13 * blocks.c.amax());
}

#[test]
fn solution_operator_is_linear() {
    let spec = ProblemSpec::new(0.0).with_materials(anisotropic());
    let ctx = DgContext::new(two_tags(square(4)), 1, &spec).unwrap();
    let blocks = assemble_system(&ctx, &spec).unwrap();
    let op = DiscreteSolutionOperator::new(ctx.layout(), &blocks).unwrap();
    let (j1, j2) = (polynomial_source(1.0, 0.3, 2.0), polynomial_source(-0.5, 1.0, 0.7));
    let a = 2.5;
    let (c1, c2) = (j1.clone(), j2.clone());
    let combined: Source<f64> = Arc::new(move |k, x| {
        let (u, v) = (c1(k, x), c2(k, x));
        [a * u[0] + v[0], a * u[1] + v[1]]
    });
    let u1 = op.apply(&ctx, &j1).unwrap().coeffs;
    let u2 = op.apply(&ctx, &j2).unwrap().coeffs;
    let u = op.apply(&ctx, &combined).unwrap().coeffs;
    let norms = NormMatrices::new(&ctx);
    let diff = norms.norm_v(&(&u - (&u1 * a + &u2)));
    assert!(diff <= 1e-11 * norms.norm_v(&u), "{diff:e}");
}

#[test]
fn solution_operator_is_self_adjoint() {
    // (T_h j₁, j₂) = (j₁, T_h j₂) in L², i.e. u₁·f₂ = u₂·f₁. With ε = I this
    // is the ε-weighted form of the identity as well.
    for materials in [vec![Material::vacuum(); 2], anisotropic()] {
        let spec = ProblemSpec::new(0.0).with_materials(materials);
        let ctx = DgContext::new(two_tags(square(4)), 2, &spec).unwrap();
        let blocks = assemble_system(&ctx, &spec).unwrap();
        let op = DiscreteSolutionOperator::new(ctx.layout(), &blocks).unwrap();
        let f1 = assemble_load(&ctx, &polynomial_source(1.0, 0.3, 2.0), None).unwrap();
        let f2 = assemble_load(&ctx, &polynomial_source(-0.5, 1.0, 0.7), None).unwrap();
        let u1 = op.apply_load(&f1).unwrap().coeffs;
        let u2 = op.apply_load(&f2).unwrap().coeffs;
        let (lhs, rhs) = (u1.dot(&f2), u2.dot(&f1));
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()), "{lhs} vs {rhs}");
    }
}

#[test]
fn gradient_source_is_annihilated() {
    for degree in [1, 2] {
        let spec = ProblemSpec::new(0.0);
        let ctx = DgContext::new(square(4), degree, &spec).unwrap();
        let exact = ExactSolution::gradient(&ctx.disc).unwrap();
        let blocks = assemble_system(&ctx, &spec).unwrap();
        let u = DiscreteSolutionOperator::new(ctx.layout(), &blocks)
            .unwrap()
            .apply(&ctx, &exact.source)
            .unwrap();
        let norms = NormMatrices::new(&ctx);
        assert!(norms.norm_v(&u.coeffs) <= 1e-9, "{:e}", norms.norm_v(&u.coeffs));
    }
}

#[test]
fn element_reordering_leaves_norms_unchanged() {
    let exact = ExactSolution::<f64>::sine(1.0);
    let run = |mesh: Mesh<f64>| {
        let s = exact.source.clone();
        let spec = ProblemSpec::new(1.0).with_source(move |k, x| s(k, x));
        let ctx = DgContext::new(mesh, 2, &spec).unwrap();
        let blocks = assemble_system(&ctx, &spec).unwrap();
        let sol = solve_mixed(ctx.layout(), &blocks, 1.0).unwrap();
        let norms = NormMatrices::new(&ctx);
        let e = error_norms(&ctx, &exact, &sol.u, &sol.p).unwrap();
        [norms.norm_v(&sol.u.coeffs), norms.norm_q(&sol.p.coeffs), e.e_v, e.e_q]
    };
    let mesh = square(4);
    let n = mesh.num_elements();
    let order: Vec<usize> = (0..n).map(|i| (7 * i + 3) % n).collect();
    let a = run(mesh.clone());
    let b = run(mesh.permute_elements(&order).unwrap());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-10 * x.abs().max(1e-300), "{x} vs {y}");
    }
}

#[test]
fn pressure_decreases_for_divergence_free_source() {
    let exact = ExactSolution::<f64>::sine(0.0);
    let mut last = f64::INFINITY;
    for n in [4, 8, 16] {
        let s = exact.source.clone();
        let spec = ProblemSpec::new(0.0).with_source(move |k, x| s(k, x));
        let ctx = DgContext::new(square(n), 1, &spec).unwrap();
        let blocks = assemble_system(&ctx, &spec).unwrap();
        let sol = solve_mixed(ctx.layout(), &blocks, 0.0).unwrap();
        let p = NormMatrices::new(&ctx).norm_q(&sol.p.coeffs);
        assert!(p < last, "‖p_h‖ = {p:e} did not decrease from {last:e}");
        last = p;
    }
}

#[test]
fn missing_pressure_penalty_is_reported_as_singular() {
    let spec = ProblemSpec::new(1.0).with_gamma(FaceParameter::Uniform(0.0));
    let ctx = DgContext::new(square(2), 1, &spec).unwrap();
    let blocks = assemble_system(&ctx, &spec).unwrap();
    match solve_mixed(ctx.layout(), &blocks, 1.0) {
        Err(Error::Resonance { .. }) => {}
        other => panic!(
            "expected a singular-system error, got {:?}",
            other.map(|s| s.diagnostics)
        ),
    }
}

#[test]
fn single_precision_tracks_double() {
    fn errors<T: Real>() -> (f64, f64) {
        let exact = ExactSolution::<T>::sine(T::one());
        let s = exact.source.clone();
        let spec = ProblemSpec::new(T::one()).with_source(move |k, x| s(k, x));
        let ctx = DgContext::new(square::<T>(4), 1, &spec).unwrap();
        let blocks = assemble_system(&ctx, &spec).unwrap();
        let sol = solve_mixed(ctx.layout(), &blocks, T::one()).unwrap();
        let e = error_norms(&ctx, &exact, &sol.u, &sol.p).unwrap();
        (e.e_v.as_f64(), e.e_q.as_f64())
    }
    let (v64, q64) = errors::<f64>();
    let (v32, q32) = errors::<f32>();
    assert!((v32 - v64).abs() <= 1e-3 * v64, "{v32} vs {v64}");
    assert!((q32 - q64).abs() <= 1e-3 * q64, "{q32} vs {q64}");
}

fn isotropic_material() -> impl Strategy<Value = Material<f64>> {
    (0.2..5.0f64, 0.2..5.0f64).prop_map(|(mu, eps)| Material::isotropic(mu, eps))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn assembly_paths_agree_for_isotropic_media(m0 in isotropic_material(), m1 in isotropic_material(), degree in 1usize..=2) {
        let spec = ProblemSpec::new(1.0).with_materials(vec![m0, m1]);
        let ctx = DgContext::new(two_tags(square(2)), degree, &spec).unwrap();
        let da = relative_difference(&assemble_a(&ctx, Mode::Lifting), &assemble_a(&ctx, Mode::FaceIntegral));
        let db = relative_difference(&assemble_b(&ctx, Mode::Lifting), &assemble_b(&ctx, Mode::FaceIntegral));
        prop_assert!(da <= 1e-12 && db <= 1e-12, "A {da:e}, B {db:e}");
    }

    #[test]
    fn primal_and_auxiliary_agree(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64, k in 0.0..2.0f64) {
        let j = polynomial_source(a, b, c);
        let spec = ProblemSpec::new(k).with_source(move |e, x| j(e, x)).with_materials(anisotropic());
        let ctx = DgContext::new(two_tags(square(2)), 1, &spec).unwrap();
        let blocks = assemble_system(&ctx, &spec).unwrap();
        let p = solve_mixed(ctx.layout(), &blocks, k).unwrap();
        let x = solve_auxiliary(&ctx, &blocks, k).unwrap();
        let norms = NormMatrices::new(&ctx);
        let scale = norms.norm_v(&p.u.coeffs) + norms.norm_q(&p.p.coeffs);
        let du = norms.norm_v(&(&p.u.coeffs - &x.u.coeffs));
        let dp = norms.norm_q(&(&p.p.coeffs - &x.p.coeffs));
        prop_assert!(du + dp <= 1e-8 * scale, "du {du:e}, dp {dp:e}");
    }
}
