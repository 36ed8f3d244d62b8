//! Acceptance suite: one test per structural criterion, each printing a
//! pass/fail line with its worst observed residual. Tolerances are fixed
//! here, not configurable.

use exgjms::cli::{builtin, perturbed_family, random_poly};
use exgjms::einstein;
use exgjms::geometry::{curvature_pack, MetricChart};
use exgjms::jets::{evaluate, parse, Expr, Jet, MultiIndex};
use exgjms::normalform::{
    self, minimal_boundary_coefficients, to_normal_form, U4Placeholder,
};
use exgjms::operators::{
    self, apply_p2, apply_p4, covariance_residual, extrinsic_coefficients, extrinsic_q2,
    q_covariance_residual,
};
use exgjms::submanifold::{embedded_geometry, fialkow_pack, gauss_codazzi_residuals};
use exgjms::tensor::indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: &str, pass: bool, worst: f64) {
    println!(
        "acceptance {criterion}: {} (worst residual {worst:.3e})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion} failed with worst residual {worst:.3e}");
}

fn sample(rng: &mut ChaCha8Rng, spec: &exgjms::cli::GeometrySpec, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            spec.sample_box
                .iter()
                .map(|&[lo, hi]| rng.gen_range(lo..hi))
                .collect()
        })
        .collect()
}

/// Criterion 1: eigenvalues of the fourth-order operator on equatorial
/// spheres match the factorized spectra.
#[test]
fn acceptance_1_factorization_spectra() {
    const TOL: f64 = 1e-6;
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(101);

    // equatorial S^2 in S^3: restricted harmonic polynomials of degree 1..3
    let spec = builtin("equator-s2-in-s3").unwrap();
    let q = "(1+x1^2+x2^2)";
    let harmonics = [
        (1u32, format!("(x1^2+x2^2-1)/{q}")),
        (2, format!("(2*x1/{q})*(2*x2/{q})")),
        (3, format!("(2*x1/{q})*(2*x2/{q})*((x1^2+x2^2-1)/{q})")),
    ];
    for (m, src) in &harmonics {
        let f_expr = parse(src).unwrap();
        let mf = *m as f64;
        let want = mf * (mf + 1.0) * (mf - 1.0) * (mf + 2.0);
        for x in sample(&mut rng, &spec, 5) {
            let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, 6).unwrap();
            let coeffs = extrinsic_coefficients(&eg).unwrap();
            let f = evaluate::<f64>(&f_expr, &x, 6).unwrap();
            let got = apply_p4(&coeffs, &eg.ext.lc_h, &f).unwrap();
            let resid = (got - want * f.value()).abs() / (1.0 + (want * f.value()).abs());
            worst = worst.max(resid);
        }
    }

    // great circle in S^3: eigenvalues (m^2 - 1/4)(m^2 - 9/4) on cos/sin
    let spec = builtin("great-circle-s1-in-s3").unwrap();
    for m in 1u32..=4 {
        let mf = m as f64;
        let want = (mf * mf - 0.25) * (mf * mf - 2.25);
        for src in [format!("cos({m}*x1)"), format!("sin({m}*x1)")] {
            let f_expr = parse(&src).unwrap();
            for x in sample(&mut rng, &spec, 3) {
                let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, 6).unwrap();
                let coeffs = extrinsic_coefficients(&eg).unwrap();
                let f = evaluate::<f64>(&f_expr, &x, 6).unwrap();
                let got = apply_p4(&coeffs, &eg.ext.lc_h, &f).unwrap();
                let resid = (got - want * f.value()).abs() / (1.0 + (want * f.value()).abs());
                worst = worst.max(resid);
            }
        }
    }
    report("1 (factorization spectra)", worst <= TOL, worst);
}

/// Criterion 2: critical Q values on the built-in Einstein/minimal cases.
#[test]
fn acceptance_2_critical_q_values() {
    const TOL: f64 = 1e-7;
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(102);

    for (name, want_q2) in [("equator-s2-in-s3", 1.0), ("clifford-torus", 1.0)] {
        let spec = builtin(name).unwrap();
        for x in sample(&mut rng, &spec, 5) {
            let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, 6).unwrap();
            let q2 = extrinsic_q2(&eg).value();
            worst = worst.max((q2 - want_q2).abs());
        }
    }

    let spec = builtin("sphere5").unwrap();
    for x in sample(&mut rng, &spec, 5) {
        let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, 6).unwrap();
        let q4 = extrinsic_coefficients(&eg).unwrap().q4.value();
        worst = worst.max((q4 - 6.0).abs());
    }
    report("2 (critical Q values)", worst <= TOL, worst);
}

/// Criterion 3: conformal covariance of the operators and the critical
/// Q-curvature transformation laws, on seeded perturbed-flat geometries.
#[test]
fn acceptance_3_conformal_covariance() {
    const TOL: f64 = 1e-6;
    let mut worst = 0.0f64;

    let configs: [(usize, usize, &[usize]); 3] = [
        (2, 3, &[1, 2]),
        (3, 5, &[1, 2]),
        (4, 6, &[2]),
    ];
    for (k, n, levels) in configs {
        let spec = perturbed_family(k, n, 3000 + (10 * k + n) as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(103 + (10 * k + n) as u64);
        let f = random_poly(&mut rng, k, 3, 0.5, false);
        let omegas: Vec<Expr> = (0..5)
            .map(|_| random_poly(&mut rng, n, 3, 0.05, false))
            .collect();
        let pts = sample(&mut rng, &spec, 5);
        for om in &omegas {
            for x in &pts {
                for &l in levels {
                    let check =
                        covariance_residual(&spec.metric, &spec.embedding, om, &f, x, l, 6)
                            .unwrap();
                    worst = worst.max(check.residual / check.denom);
                }
            }
        }
    }

    // critical Q_2 at k = 2 and critical Q_4 at (k, n) = (4, 6)
    for (k, n, level) in [(2usize, 3usize, 1usize), (4, 6, 2)] {
        let spec = perturbed_family(k, n, 4000 + (10 * k + n) as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(104 + (10 * k + n) as u64);
        let omegas: Vec<Expr> = (0..5)
            .map(|_| random_poly(&mut rng, n, 3, 0.05, false))
            .collect();
        let pts = sample(&mut rng, &spec, 5);
        for om in &omegas {
            for x in &pts {
                let check =
                    q_covariance_residual(&spec.metric, &spec.embedding, om, x, level, 6)
                        .unwrap();
                worst = worst.max(check.residual / check.denom);
            }
        }
    }
    report("3 (conformal covariance)", worst <= TOL, worst);
}

/// Criterion 4: the normal-form pipeline and the closed-form route agree on
/// seeded perturbed geometries (non-Einstein, non-minimal).
#[test]
fn acceptance_4_cross_route_equivalence() {
    const TOL: f64 = 1e-8;
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let spec = perturbed_family(3, 5, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
        let f = random_poly(&mut rng, 3, 3, 0.5, false);
        let u4: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for x in sample(&mut rng, &spec, 5) {
            let via_pipeline =
                normalform::pipeline_apply_p4(&spec.metric, &spec.embedding, &u4, &f, &x, 6)
                    .unwrap();
            let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, 6).unwrap();
            let coeffs = extrinsic_coefficients(&eg).unwrap();
            let f_jet = evaluate::<f64>(&f, &x, 6).unwrap();
            let via_closed = apply_p4(&coeffs, &eg.ext.lc_h, &f_jet).unwrap();
            worst = worst.max((via_pipeline - via_closed).abs() / (1.0 + via_closed.abs()));
        }
    }
    report("4 (cross-route equivalence)", worst <= TOL, worst);
}

/// Criterion 5: scalar outputs are independent of the undetermined
/// fourth-order graph coefficient, and the tensor shift is -2 L0 . dU.
#[test]
fn acceptance_5_u4_independence() {
    const TOL: f64 = 1e-10;
    let mut worst = 0.0f64;
    for seed in [0u64, 7] {
        let spec = perturbed_family(3, 5, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let f = random_poly(&mut rng, 3, 3, 0.5, false);
        let ua: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ub: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for x in sample(&mut rng, &spec, 3) {
            let rep =
                normalform::u4_perturbation(&spec.metric, &spec.embedding, &ua, &ub, &f, &x, 6)
                    .unwrap();
            // relative against the p4 value scale
            let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, 6).unwrap();
            let coeffs = extrinsic_coefficients(&eg).unwrap();
            let f_jet = evaluate::<f64>(&f, &x, 6).unwrap();
            let scale = 1.0 + apply_p4(&coeffs, &eg.ext.lc_h, &f_jet).unwrap().abs();
            worst = worst.max(rep.h4_shift_residual);
            worst = worst.max(rep.tr_h4_diff);
            worst = worst.max(rep.q4_diff);
            worst = worst.max(rep.p4_diff / scale);
        }
    }
    report("5 (U4 independence)", worst <= TOL, worst);
}

/// Criterion 6: Gauss-Codazzi residuals on every built-in of admissible
/// dimension, plus the slotwise decomposition residuals.
#[test]
fn acceptance_6_gauss_codazzi_and_decomposition() {
    const TOL: f64 = 1e-8;
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(106);

    let k3_builtins = ["sphere5", "small-sphere-umbilic", "perturbed-random"];
    for name in k3_builtins {
        let spec = builtin(name).unwrap();
        for x in sample(&mut rng, &spec, 4) {
            let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, 6).unwrap();
            let fp = fialkow_pack(&eg).unwrap();
            let gc = gauss_codazzi_residuals(&eg, &fp).unwrap();
            worst = worst.max(gc.gc1.unwrap()).max(gc.gc2).max(gc.gctrace);
            let dec = operators::decomposition_residuals(&eg).unwrap();
            worst = worst.max(dec.q2).max(dec.t).max(dec.q4);
        }
    }
    // the trace identity also holds at k = 2
    for name in ["euclidean3", "equator-s2-in-s3", "clifford-torus"] {
        let spec = builtin(name).unwrap();
        for x in sample(&mut rng, &spec, 4) {
            let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, 6).unwrap();
            let fp = fialkow_pack(&eg).unwrap();
            let gc = gauss_codazzi_residuals(&eg, &fp).unwrap();
            worst = worst.max(gc.gc2).max(gc.gctrace);
        }
    }
    report("6 (Gauss-Codazzi and decomposition)", worst <= TOL, worst);
}

/// Criterion 7: on the umbilic non-equatorial sphere in a round ambient the
/// extrinsic operator reduces to the intrinsic one.
#[test]
fn acceptance_7_umbilic_reduction() {
    const TOL: f64 = 1e-6;
    let mut worst = 0.0f64;
    let spec = builtin("small-sphere-umbilic").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    for _ in 0..5 {
        let f = random_poly(&mut rng, 3, 3, 0.5, false);
        let x: Vec<f64> = spec
            .sample_box
            .iter()
            .map(|&[lo, hi]| rng.gen_range(lo..hi))
            .collect();
        let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, 6).unwrap();
        let coeffs = extrinsic_coefficients(&eg).unwrap();
        let intr = operators::intrinsic_coefficients(&eg.ext.lc_h).unwrap();
        let f_jet = evaluate::<f64>(&f, &x, 6).unwrap();
        let p4 = apply_p4(&coeffs, &eg.ext.lc_h, &f_jet).unwrap();
        let p4_bar = apply_p4(&intr, &eg.ext.lc_h, &f_jet).unwrap();
        worst = worst.max((p4 - p4_bar).abs() / (1.0 + p4.abs()));
    }
    report("7 (umbilic reduction)", worst <= TOL, worst);
}

/// Criterion 8: normalization bookkeeping: the trace-coefficient constants
/// and `P_{2l} 1 = (k/2 - l) Q_{2l}` pointwise on every built-in.
#[test]
fn acceptance_8_normalization_bookkeeping() {
    const TOL: f64 = 1e-9;
    let rep = normalform::q_trace_consistency().unwrap();
    assert_eq!(rep.a1_inv, -1.0);
    assert_eq!(rep.a2_inv, 4.0);
    let mut worst = rep.q2_residual.max(rep.q4_residual);

    let mut rng = ChaCha8Rng::seed_from_u64(108);
    for name in exgjms::cli::builtin_names() {
        let spec = builtin(name).unwrap();
        for x in sample(&mut rng, &spec, 3) {
            let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, 6).unwrap();
            let one = Jet::constant(spec.k, 6, 1.0f64);
            let kf = spec.k as f64;
            let coeffs = extrinsic_coefficients(&eg).unwrap();
            let p2_one = apply_p2(&coeffs, &eg.ext.lc_h, &one).unwrap();
            let scale2 = 1.0 + coeffs.q2.value().abs();
            worst = worst.max((p2_one - (kf / 2.0 - 1.0) * coeffs.q2.value()).abs() / scale2);
            let p4_one = apply_p4(&coeffs, &eg.ext.lc_h, &one).unwrap();
            let scale4 = 1.0 + coeffs.q4.value().abs();
            worst = worst.max((p4_one - (kf / 2.0 - 2.0) * coeffs.q4.value()).abs() / scale4);
        }
    }
    report("8 (normalization bookkeeping)", worst <= TOL, worst);
}

/// Criterion 9: curvature engine sanity on round spheres and jets against a
/// finite-difference oracle on random expressions.
#[test]
fn acceptance_9_curvature_and_jet_sanity() {
    const TOL_CURV: f64 = 1e-9;
    const TOL_FD: f64 = 1e-5;
    let mut worst = 0.0f64;

    for n in [3usize, 5] {
        let sq: Vec<String> = (1..=n).map(|i| format!("x{i}^2")).collect();
        let denom = format!("(1+{})^2", sq.join("+"));
        let rows: Vec<Vec<Expr>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            parse(&format!("4/{denom}")).unwrap()
                        } else {
                            Expr::num(0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let chart = MetricChart::new(n, rows).unwrap();
        let pt: Vec<f64> = (0..n).map(|i| 0.05 + 0.06 * i as f64).collect();
        let pack = curvature_pack(chart.levi_civita(&pt, 6).unwrap()).unwrap();
        worst = worst.max((pack.core.scal.value() - (n * (n - 1)) as f64).abs());
        for [i, j] in indices([n, n]) {
            let want = 0.5 * pack.lc.g[[i, j]].value();
            worst = worst.max((pack.schouten[[i, j]].value() - want).abs());
        }
        worst = worst.max(pack.weyl.max_abs_value());
        worst = worst.max(pack.cotton.max_abs_value());
        worst = worst.max(pack.bach.max_abs_value());
    }
    let curv_pass = worst <= TOL_CURV;
    let curv_worst = worst;

    // finite-difference oracle over 10 random smooth expressions
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let mut fd_worst = 0.0f64;
    for trial in 0..10 {
        let inner = random_poly(&mut rng, 2, 3, 0.4, false);
        let expr = match trial % 3 {
            0 => Expr::Fun(exgjms::jets::UnaryFn::Sin, Box::new(inner)),
            1 => Expr::Fun(exgjms::jets::UnaryFn::Exp, Box::new(inner)),
            _ => Expr::add(inner, parse("atan(x1*x2)").unwrap()),
        };
        let x0 = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        let jet = evaluate::<f64>(&expr, &x0, 2).unwrap();
        let f = |x: [f64; 2]| evaluate::<f64>(&expr, &x, 0).unwrap().value();
        let h = 1e-4;
        for i in 0..2 {
            let mut xp = x0;
            xp[i] += h;
            let mut xm = x0;
            xm[i] -= h;
            let fd = (f(xp) - f(xm)) / (2.0 * h);
            let mut e = vec![0u8; 2];
            e[i] = 1;
            let got = jet.partial(&MultiIndex(e)).unwrap();
            fd_worst = fd_worst.max((got - fd).abs() / (1.0 + fd.abs()));
        }
        // mixed second derivative
        let fd = (f([x0[0] + h, x0[1] + h]) - f([x0[0] + h, x0[1] - h])
            - f([x0[0] - h, x0[1] + h])
            + f([x0[0] - h, x0[1] - h]))
            / (4.0 * h * h);
        let got = jet.partial(&MultiIndex(vec![1, 1])).unwrap();
        fd_worst = fd_worst.max((got - fd).abs() / (1.0 + fd.abs()));
    }
    let pass = curv_pass && fd_worst <= TOL_FD;
    report(
        "9 (curvature engine and jet oracle)",
        pass,
        curv_worst.max(fd_worst),
    );
}

/// Supplementary invariants from the operator layer: quadrature
/// self-adjointness of the fourth-order operator on the great circle, and
/// the factorized forms on the built-in Einstein/minimal cases.
#[test]
fn supplementary_self_adjointness_and_factorization() {
    // periodic trapezoid, 256 nodes, trig-polynomial test functions
    let spec = builtin("great-circle-s1-in-s3").unwrap();
    let f_expr = parse("cos(x1) + 0.3*sin(2*x1)").unwrap();
    let g_expr = parse("sin(x1) - 0.2*cos(3*x1) + 0.1").unwrap();
    let nodes = 256usize;
    let step = 2.0 * std::f64::consts::PI / nodes as f64;
    let (mut p4f_g, mut f_p4g) = (0.0f64, 0.0f64);
    for i in 0..nodes {
        let theta = [i as f64 * step];
        let eg = embedded_geometry(&spec.metric, &spec.embedding, &theta, 6).unwrap();
        let coeffs = extrinsic_coefficients(&eg).unwrap();
        let f = evaluate::<f64>(&f_expr, &theta, 6).unwrap();
        let g = evaluate::<f64>(&g_expr, &theta, 6).unwrap();
        let p4f = apply_p4(&coeffs, &eg.ext.lc_h, &f).unwrap();
        let p4g = apply_p4(&coeffs, &eg.ext.lc_h, &g).unwrap();
        p4f_g += p4f * g.value() * step;
        f_p4g += f.value() * p4g * step;
    }
    let asym = (p4f_g - f_p4g).abs();
    println!("supplementary (self-adjointness): residual {asym:.3e}");
    assert!(asym <= 1e-8, "self-adjointness residual {asym}");

    // factorization agreement with random smooth f; Clifford torus also
    // checked against the literal form Lap^2 + 2 Lap
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let mut worst = 0.0f64;
    for name in ["equator-s2-in-s3", "sphere5", "clifford-torus"] {
        let spec = builtin(name).unwrap();
        for _ in 0..4 {
            let f_expr = if name == "clifford-torus" {
                // random trigonometric polynomial in the periodic chart
                let a: f64 = rng.gen_range(-1.0..1.0);
                let b: f64 = rng.gen_range(-1.0..1.0);
                let c: f64 = rng.gen_range(-1.0..1.0);
                let term = |co: f64, e: &str| Expr::mul(Expr::num(co), parse(e).unwrap());
                Expr::add(
                    Expr::add(term(a, "cos(x1)"), term(b, "sin(x2)")),
                    Expr::add(term(c, "cos(x1)*sin(2*x2)"), Expr::num(0.2)),
                )
            } else {
                random_poly(&mut rng, spec.k, 3, 0.5, false)
            };
            let x: Vec<f64> = spec
                .sample_box
                .iter()
                .map(|&[lo, hi]| rng.gen_range(lo..hi))
                .collect();
            let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, 6).unwrap();
            let coeffs = extrinsic_coefficients(&eg).unwrap();
            let f = evaluate::<f64>(&f_expr, &x, 6).unwrap();
            let direct = apply_p4(&coeffs, &eg.ext.lc_h, &f).unwrap();
            let factored = einstein::factorized_apply(&eg.ext.lc_h, 1.0, 2, &f).unwrap();
            worst = worst.max((direct - factored).abs() / (1.0 + factored.abs()));
            if name == "clifford-torus" {
                let lap = eg.ext.lc_h.laplacian(&f).unwrap();
                let bilap = eg.ext.lc_h.laplacian(&lap).unwrap().value();
                let literal = bilap + 2.0 * lap.value();
                worst = worst.max((direct - literal).abs() / (1.0 + literal.abs()));
            }
        }
    }
    println!("supplementary (factorization agreement): worst residual {worst:.3e}");
    assert!(worst <= 1e-7, "factorization agreement residual {worst}");
}

/// Supplementary: the canonical Einstein expansion coefficients round-trip
/// through the generic formulas and the u4-shifted boundary data.
#[test]
fn supplementary_canonical_family_cross_module() {
    let (h2c, h4c) = einstein::canonical_family_coefficients(1.0);
    let spec = builtin("sphere5").unwrap();
    let x = [0.1f64, -0.2, 0.15, 0.05];
    let eg = embedded_geometry(&spec.metric, &spec.embedding, &x, 6).unwrap();
    let lc = &eg.ext.lc_h;
    let k = 4usize;
    let h2 = exgjms::tensor::Tensor2::from_fn([k, k], |[a, b]| lc.g[[a, b]].scale(h2c));
    let h4 = exgjms::tensor::Tensor2::from_fn([k, k], |[a, b]| lc.g[[a, b]].scale(h4c));
    let c = normalform::general_operator_coefficients(lc, &h2, &h4).unwrap();
    assert!((c.q2.value() - einstein::q_closed_form(4, 1, 1.0)).abs() < 1e-10);
    assert!((c.q4.value() - einstein::q_closed_form(4, 2, 1.0)).abs() < 1e-9);

    // and the boundary-coefficient route reproduces the same normal form
    let u4 = U4Placeholder::zero(&eg);
    let bc = minimal_boundary_coefficients(&eg, &u4).unwrap();
    let nf = to_normal_form(&bc, lc).unwrap();
    for [a, b] in indices([k, k]) {
        assert!((nf.h2[[a, b]].value() - h2c * lc.g[[a, b]].value()).abs() < 1e-9);
        assert!((nf.h4[[a, b]].value() - h4c * lc.g[[a, b]].value()).abs() < 1e-9);
    }
}
