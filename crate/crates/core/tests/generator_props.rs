mod common;

use jumpcompare_core::conditions::{check_theorem31, VerdictStatus};
use jumpcompare_core::generator::{eval_b, eval_l, stack_models, supersolution_spotcheck, TestFunction};
use jumpcompare_core::model::{AffineCoefficients, MarkMeasure, SdeModel};
use jumpcompare_core::rng::stream;
use nalgebra::DMatrix;
use rand::Rng;

fn model(seed: u64) -> SdeModel {
    let (p, _) = common::family_member(seed, 0);
    p.model1
}

fn smooth_function(shift: f64) -> TestFunction {
    TestFunction::new(move |t, x: &[f64]| {
        (0.3 * t).sin() + x.iter().enumerate().map(|(i, v)| (v + shift * i as f64).powi(2) * 0.5 + v.cos()).sum::<f64>()
    })
    .with_time_derivative(|t, _| 0.3 * (0.3 * t).cos())
    .with_gradient(move |_, x| x.iter().enumerate().map(|(i, v)| v + shift * i as f64 - v.sin()).collect())
    .with_hessian(|_, x| DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(x.len(), x.iter().map(|v| 1.0 - v.cos()))))
}

fn points(m: usize, seed: u64, n: usize) -> Vec<(f64, Vec<f64>)> {
    let mut rng = stream(seed, 1);
    (0..n)
        .map(|_| (rng.random_range(0.0..1.0), (0..m).map(|_| rng.random_range(-2.0..2.0)).collect()))
        .collect()
}

#[test]
fn operators_are_linear_in_the_test_function() {
    for s in 0..10 {
        let mdl = model(0x6e_0000 + s);
        let (f, g) = (smooth_function(0.2), smooth_function(-0.7));
        let (a, b) = (1.7, -0.4);
        let (f2, g2) = (f.clone(), g.clone());
        let combo = TestFunction::new(move |t, x| a * f2.value(t, x) + b * g2.value(t, x));
        for (t, x) in points(mdl.dim(), s, 5) {
            let lin_l = a * eval_l(&f, &mdl, t, &x) + b * eval_l(&g, &mdl, t, &x);
            let lin_b = a * eval_b(&f, &mdl, t, &x) + b * eval_b(&g, &mdl, t, &x);
            let scale = 1.0 + lin_l.abs() + lin_b.abs();
            assert!((eval_l(&combo, &mdl, t, &x) - lin_l).abs() <= 1e-4 * scale);
            assert!((eval_b(&combo, &mdl, t, &x) - lin_b).abs() <= 1e-4 * scale);
        }
    }
}

#[test]
fn jump_operator_is_nonnegative_for_convex_functions() {
    let square = TestFunction::new(|_, x: &[f64]| x.iter().map(|v| v * v).sum()).with_gradient(|_, x| x.iter().map(|v| 2.0 * v).collect());
    for s in 0..20 {
        let mdl = model(0x6e_1000 + s);
        for (t, x) in points(mdl.dim(), s, 20) {
            assert!(eval_b(&square, &mdl, t, &x) >= -1e-12);
        }
    }
}

#[test]
fn finite_difference_fallback_agrees_with_analytic_derivatives() {
    for s in 0..10 {
        let mdl = model(0x6e_2000 + s);
        let f = smooth_function(0.5);
        let pts = points(mdl.dim(), s, 8);
        f.validate_at(&pts).unwrap();
        let fd = f.finite_difference_only();
        for (t, x) in pts {
            let (a, n) = (eval_l(&f, &mdl, t, &x), eval_l(&fd, &mdl, t, &x));
            assert!((a - n).abs() <= 1e-4 * (1.0 + a.abs()), "{a} vs {n}");
        }
    }
}

#[test]
fn stacked_system_matches_the_difference_display() {
    for s in 0..10 {
        let (p, _) = common::family_member(0x6e_3000, s);
        let bar = stack_models(&p.model1, &p.model2).unwrap();
        let m = p.dim();
        for (t, xbar) in points(2 * m, s, 10) {
            let (top, low) = xbar.split_at(m);
            let sum: Vec<f64> = top.iter().zip(low).map(|(a, b)| a + b).collect();
            let c1 = &p.model1.coefficients;
            let c2 = &p.model2.coefficients;
            let b1 = c1.drift(t, &sum);
            let b2 = c2.drift(t, low);
            let expect: Vec<f64> = b1.iter().zip(&b2).map(|(a, b)| a - b).chain(b2.iter().copied()).collect();
            assert_eq!(bar.coefficients.drift(t, &xbar), expect);
            let s1 = c1.diffusion(t, &sum);
            let s2 = c2.diffusion(t, low);
            let expect: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| a - b).chain(s2.iter().copied()).collect();
            assert_eq!(bar.coefficients.diffusion(t, &xbar), expect);
            for j in p.marks().active() {
                let e = p.marks().mark(j);
                let g1 = c1.jump(t, &sum, j, e);
                let g2 = c2.jump(t, low, j, e);
                let expect: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a - b).chain(g2.iter().copied()).collect();
                assert_eq!(bar.coefficients.jump(t, &xbar, j, e), expect);
            }
        }
    }
}

#[test]
fn supersolution_residual_is_nonpositive_inside_k_for_ordered_pairs() {
    let mut checked = 0;
    for s in 0..18 {
        let (p, _) = common::family_member(0x6e_4000, s);
        if check_theorem31(&p).overall != VerdictStatus::Holds {
            continue;
        }
        let report = supersolution_spotcheck(&p, 1e-3, 1000, s).unwrap();
        assert!(report.passed, "model {s}: {report:?}");
        checked += 1;
    }
    assert!(checked >= 3);
}

#[test]
fn supersolution_residual_flags_jumps_leaving_k() {
    let mut a = AffineCoefficients::zeros(1, 1, 1);
    a.jumps[0].matrix[(0, 0)] = -1.5;
    let marks = MarkMeasure::from_pairs(1, [(vec![1.0], 1.0)]);
    let m = SdeModel::affine(a, marks).unwrap();
    let p = jumpcompare_core::model::ComparisonProblem::new(m.clone(), m, (0.0, 1.0), vec![0.0], vec![0.0]);
    let report = supersolution_spotcheck(&p, 1e-3, 200, 1).unwrap();
    assert!(!report.passed);
    assert!(report.max_interior_residual > 0.0);
}
