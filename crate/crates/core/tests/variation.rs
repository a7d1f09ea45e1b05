use num_complex::Complex64 as C;
use pshlab_core::conformal::{endo_h, frobenius, mat_mul, mat_sub, verify_cr, verify_laplacian_j, DomainEmbedding};
use pshlab_core::harmonic::{solve_harmonic, ComplexVertexField, EquivariantMap, HarmonicProblem, VertexField};
use pshlab_core::scenario::{run_level, solve_center, MuSource, ScenarioSpec, SurfaceSpec, TargetSpec};
use pshlab_core::surface::build_torus;
use pshlab_core::target::{torus_harmonic_oracle, FlatTorusTarget};
use pshlab_core::variation::{
    energy_stencil, hopf, laplacian_e_extrapolated, second_variation_identity, synthetic_tangent_field,
    tangency_diagnostic,
};

const TAU: C = C::new(0.1, 1.1);

fn torus(mu: &str, level: usize) -> ScenarioSpec {
    ScenarioSpec {
        surface: SurfaceSpec::Torus { n: 4, tau: [TAU.re, TAU.im] },
        target: TargetSpec::FlatTorus { lattice: [[1.0, 0.0], [0.0, 1.0]], degree: vec![[1, 0], [0, 1]] },
        mu: MuSource::from(mu),
        level,
        ..Default::default()
    }
}

/// Energy of the affine class over the torus sheared by `z + nu conj(z)`.
fn sheared_energy(nu: C) -> f64 {
    let tau = (TAU + nu * TAU.conj()) / (C::new(1.0, 0.0) + nu);
    torus_harmonic_oracle(tau, &FlatTorusTarget::square(), [[1, 0], [0, 1]]).unwrap().1
}

#[test]
fn zero_direction_gives_an_empty_ledger() {
    let (run, _, _) = run_level(&torus("zero", 0), 0).unwrap();
    let c = &run.certificate;
    for x in [c.delta_e, c.a, c.b, c.alpha, c.rho] {
        assert!(x.abs() < 1e-12, "{c:?}");
    }
    assert!(run.first_variation.c_est.is_none());
    assert!(run.second_variation.residual < 1e-12);
}

#[test]
fn flat_target_reduces_the_ledger() {
    let (run, _, _) = run_level(&torus("random:4:0.3", 1), 1).unwrap();
    let c = &run.certificate;
    assert_eq!(c.rho, 0.0);
    assert!(c.r1 < 1e-6 * c.b, "{c:?}");
    assert!((c.alpha - c.a / 2.0).abs() < 1e-2 * c.a, "{c:?}");
    assert!(c.delta_e > 0.0);
    assert_eq!(c.r3, 0.0);
    assert_eq!(c.r4, 0.0);
}

#[test]
fn torus_stencil_matches_the_sheared_modulus() {
    let mu = C::new(0.2, 0.1);
    let spec = torus(&format!("const:{}:{}", mu.re, mu.im), 1);
    let inst = spec.instance(1).unwrap();
    let (center, _) = solve_center(&spec, 1).unwrap();
    let h = spec.spacing(&inst.mu, 1);
    let grid = energy_stencil(&inst.family, &inst.lm, &inst.target, &center, h, &spec.solver).unwrap();
    for node in &grid.nodes {
        let exact = sheared_energy(node.u * mu);
        assert!((node.energy - exact).abs() < 1e-10 * exact, "{:?}: {} vs {exact}", node.offset, node.energy);
    }
    // Laplacian of the closed form by a fine five-point stencil
    let d = 1e-3;
    let e = |u: C| sheared_energy(u * mu);
    let zero = C::new(0.0, 0.0);
    let exact = (e(C::new(d, 0.0)) + e(C::new(-d, 0.0)) + e(C::new(0.0, d)) + e(C::new(0.0, -d)) - 4.0 * e(zero)) / (d * d);
    let (de, err) = laplacian_e_extrapolated(&grid).unwrap();
    assert!((de - exact).abs() < 1e-5 * exact.abs() + 2.0 * err, "{de} vs {exact}");
}

#[test]
fn torus_second_variation_identity_holds() {
    let spec = torus("const:0.2:0.1", 1);
    let inst = spec.instance(1).unwrap();
    let (center, _) = solve_center(&spec, 1).unwrap();
    let h = 0.2 / inst.mu.max_abs();
    for h in [h, h / 2.0] {
        let g = energy_stencil(&inst.family, &inst.lm, &inst.target, &center, h, &spec.solver).unwrap();
        let sv = second_variation_identity(&g, &inst.family, &inst.lm, &inst.target, &spec.index).unwrap();
        // every stencil map is affine, so f_s solves the Jacobi equation exactly
        assert!(sv.e_ss > 0.0 && sv.residual < 1e-6 * sv.e_ss, "{sv:?}");
        assert!(sv.index_term.abs() < 1e-6 * sv.e_ss, "{sv:?}");
    }
}

#[test]
fn affine_hopf_differential_is_constant() {
    let n = 6;
    let lm = build_torus(n).unwrap();
    let emb = DomainEmbedding::torus(n, C::new(0.0, 1.0)).unwrap();
    let c = emb.structure(&lm).unwrap();
    let degree = [[2, 0], [0, 1]];
    let target = FlatTorusTarget::square().manifold(&degree);
    let (affine, _) = torus_harmonic_oracle(C::new(0.0, 1.0), &FlatTorusTarget::square(), degree).unwrap();
    let f = EquivariantMap { factors: 1, points: emb.positions.iter().map(|&z| affine.apply(z)).collect() };
    let q = hopf(&lm, &c, &f, &target);
    // f(x, y) = (2x, y): <f_z, f_z> = (4 - 1) / 4
    assert!((q.l1_norm() - 0.75).abs() < 1e-12, "{}", q.l1_norm());
    let per_face = 0.75 / (2 * n * n) as f64;
    assert!(q.q.iter().zip(&q.area).all(|(q, a)| (q.norm() * a - per_face).abs() < 1e-14));
}

#[test]
fn hopf_norm_of_the_identity_decreases_under_refinement() {
    let spec = ScenarioSpec::default();
    let norms: Vec<f64> = (0..3)
        .map(|l| {
            let inst = spec.instance(l).unwrap();
            let (f, _) = solve_center(&spec, l).unwrap();
            hopf(&inst.lm, &inst.family.base, &f, &inst.target).l1_norm()
        })
        .collect();
    assert!(norms[1] < norms[0] / 2.0 && norms[2] < norms[1] / 3.0, "{norms:?}");
}

#[test]
fn tangency_of_zero_and_synthetic_fields() {
    let spec = torus("random:2:0.3", 1);
    let inst = spec.instance(1).unwrap();
    let (f, _) = solve_center(&spec, 1).unwrap();
    let c = &inst.family.base;
    let nf = inst.lm.mesh.num_faces();
    let zero_mu = vec![C::new(0.0, 0.0); nf];
    let nv = f.num_vertices();
    let w0 = ComplexVertexField { re: VertexField::zeros(nv, 1), im: VertexField::zeros(nv, 1) };
    let t = tangency_diagnostic(&f, &w0, &inst.lm, c, &inst.target, &zero_mu, 1e-8);
    assert_eq!((t.defect, t.parallel_residual), (0.0, 0.0));

    let w = synthetic_tangent_field(&inst.emb, &inst.lm, c, &inst.target, &f, |z| C::new(1.0, 0.5) + z * z);
    let t = tangency_diagnostic(&f, &w, &inst.lm, c, &inst.target, &zero_mu, 1e-8);
    assert!(t.defect < 1e-6, "{t:?}");
}

#[test]
fn synthetic_tangency_defect_vanishes_under_refinement_on_genus_two() {
    let spec = ScenarioSpec::default();
    let defects: Vec<f64> = (0..3)
        .map(|l| {
            let inst = spec.instance(l).unwrap();
            let (f, _) = solve_center(&spec, l).unwrap();
            let c = &inst.family.base;
            let w = synthetic_tangent_field(&inst.emb, &inst.lm, c, &inst.target, &f, |z| C::new(1.0, 0.5) + z * z);
            let zero = vec![C::new(0.0, 0.0); inst.lm.mesh.num_faces()];
            tangency_diagnostic(&f, &w, &inst.lm, c, &inst.target, &zero, 1e-8).defect
        })
        .collect();
    assert!(defects.windows(2).all(|w| w[1] < w[0]) && defects[2] < 1e-2, "{defects:?}");
}

#[test]
fn structure_derivative_squares_to_a_multiple_of_identity() {
    let spec = ScenarioSpec { mu: MuSource::from("random:9:0.4"), level: 0, ..Default::default() };
    let fam = spec.instance(0).unwrap().family;
    let cal = endo_h(&fam).unwrap();
    for (h, m) in cal.h.mats.iter().zip(&cal.m) {
        let sq = mat_mul(h, h);
        let expect = [[m.norm_sqr(), 0.0], [0.0, m.norm_sqr()]];
        assert!(frobenius(&mat_sub(&sq, &expect)) < 1e-8 * (1.0 + m.norm_sqr()));
    }
    assert!(cal.spread < 1e-6, "{}", cal.spread);
}

#[test]
fn zero_family_is_trivially_holomorphic() {
    let spec = ScenarioSpec { mu: MuSource::from("zero"), level: 0, ..Default::default() };
    let fam = spec.instance(0).unwrap().family;
    assert_eq!(verify_cr(&fam, C::new(0.1, 0.0), 1e-2).unwrap(), 0.0);
    assert_eq!(verify_laplacian_j(&fam, 1e-2).unwrap(), 0.0);
}

#[test]
fn antiholomorphic_family_fails_the_cauchy_riemann_check() {
    let spec = ScenarioSpec { mu: MuSource::from("random:2:0.4"), level: 0, ..Default::default() };
    let fam = spec.instance(0).unwrap().family;
    let u = C::new(0.2, 0.1) * fam.radius;
    let h = 1e-3 * fam.radius;
    // J(conj u) with the same difference quotients as verify_cr
    let j = |u: C| fam.j_at(u.conj()).unwrap();
    let (jc, sp, sm, tp, tm) = (j(u), j(u + h), j(u - h), j(u + C::new(0.0, h)), j(u - C::new(0.0, h)));
    let mut worst: f64 = 0.0;
    for f in 0..jc.mats.len() {
        let js = mat_sub(&sp.mats[f], &sm.mats[f]).map(|r| r.map(|x| x * 0.5 / h));
        let jt = mat_sub(&tp.mats[f], &tm.mats[f]).map(|r| r.map(|x| x * 0.5 / h));
        worst = worst.max(frobenius(&mat_sub(&jt, &mat_mul(&jc.mats[f], &js))));
    }
    let honest = verify_cr(&fam, u, h).unwrap();
    assert!(worst > 0.1 && honest < 1e-5, "{worst} vs {honest}");
}

#[test]
fn harmonic_map_is_a_critical_point_of_the_stencil() {
    let spec = torus("random:7:0.2", 0);
    let inst = spec.instance(0).unwrap();
    let p = HarmonicProblem::new(&inst.lm, &inst.family.base, &inst.target).unwrap();
    let (f, _) = solve_harmonic(&p, &inst.f0, &spec.solver).unwrap();
    assert!(p.gradient_norm(&f) <= spec.solver.tol);
}
