use proptest::prelude::*;

use affsurf::catalog::{instantiate, samples, ModelType};
use affsurf::connection::{curvature_at, ricci_at, ChristoffelSpec};
use affsurf::expr::{parse_expr, Exponent, Func, Point, ScalarExpr};
use affsurf::projective::{deform, LinearForm, Sign};
use affsurf::qe::{max_residual, xi_matrix, QE_TOL};

fn leaf() -> impl Strategy<Value = ScalarExpr> {
    prop_oneof![
        Just(ScalarExpr::x1()),
        Just(ScalarExpr::x2()),
        (-3.0f64..3.0).prop_map(ScalarExpr::constant),
        (-4i64..5).prop_map(|k| ScalarExpr::constant(k as f64 / 2.0)),
    ]
}

/// Expressions that are smooth on the whole plane and stay moderate on [-1, 1]².
fn smooth_expr() -> impl Strategy<Value = ScalarExpr> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(ScalarExpr::sum),
            prop::collection::vec(inner.clone(), 2..3).prop_map(ScalarExpr::product),
            (inner.clone(), 0i64..4).prop_map(|(b, n)| ScalarExpr::pow(b, Exponent::integer(n))),
            inner.clone().prop_map(|e| ScalarExpr::apply(Func::Sin, e)),
            inner.clone().prop_map(|e| ScalarExpr::apply(Func::Cos, e)),
            inner.clone().prop_map(|e| ScalarExpr::apply(Func::Arctan, e)),
            inner.prop_map(|e| ScalarExpr::apply(Func::Exp, ScalarExpr::apply(Func::Sin, e))),
        ]
    })
}

fn point() -> impl Strategy<Value = Point> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| [a, b])
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

fn coeffs() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-2.0f64..2.0)
}

proptest! {
    #[test]
    fn render_parse_round_trip(e in smooth_expr(), p in point()) {
        let text = e.to_string();
        let back = parse_expr(&text).unwrap();
        prop_assert!(close(e.eval(p).unwrap(), back.eval(p).unwrap(), 1e-12), "{text}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn derivative_matches_central_difference(e in smooth_expr(), p in point(), axis in 0usize..2) {
        let h = 1e-5;
        let mut lo = p;
        let mut hi = p;
        lo[axis] -= h;
        hi[axis] += h;
        let fd = (e.eval(hi).unwrap() - e.eval(lo).unwrap()) / (2.0 * h);
        let exact = e.diff_axis(axis).eval(p).unwrap();
        let scale = e.diff_axis(axis).diff_axis(axis).diff_axis(axis).eval(p).unwrap().abs();
        prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()) + scale * h * h, "{e} at {p:?}: {fd} vs {exact}");
    }
}

proptest! {
    #[test]
    fn curvature_antisymmetry_and_bianchi(c in coeffs(), inverse in any::<bool>(), x1 in 0.2f64..3.0, x2 in -1.0f64..1.0) {
        let spec = if inverse { ChristoffelSpec::inverse_x1(c) } else { ChristoffelSpec::constant(c) };
        let r = curvature_at(&spec, [x1, x2]).unwrap().0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        prop_assert!((r[i][j][k][l] + r[j][i][k][l]).abs() < 1e-12);
                        let cyc = r[i][j][k][l] + r[j][k][i][l] + r[k][i][j][l];
                        prop_assert!(cyc.abs() < 1e-12);
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn type_a_ricci_is_symmetric(c in coeffs(), p in point()) {
        let rho = ricci_at(&ChristoffelSpec::constant(c), p).unwrap().0;
        prop_assert!((rho[0][1] - rho[1][0]).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn deform_round_trip_is_exact_on_dyadics(
        c in prop::array::uniform6(-512i32..512),
        a in prop::array::uniform2(-512i32..512),
    ) {
        let spec = ChristoffelSpec::constant(c.map(|v| v as f64 / 64.0));
        let phi = LinearForm::new(a[0] as f64 / 64.0, a[1] as f64 / 64.0);
        let back = deform(&deform(&spec, phi, Sign::Plus).unwrap(), phi, Sign::Minus).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn deform_round_trip_within_rounding(c in coeffs(), a in prop::array::uniform2(-2.0f64..2.0)) {
        let spec = ChristoffelSpec::constant(c);
        let phi = LinearForm::new(a[0], a[1]);
        let back = deform(&deform(&spec, phi, Sign::Plus).unwrap(), phi, Sign::Minus).unwrap();
        for (x, y) in back.coeffs.iter().zip(&spec.coeffs) {
            prop_assert!((x - y).abs() <= 8.0 * f64::EPSILON * 6.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solution_space_transforms_conformally(idx in 0usize..1000, a in prop::array::uniform2(-1.0f64..1.0)) {
        let models = samples(Some(ModelType::A));
        let rec = instantiate(&models[idx % models.len()]).unwrap();
        let phi = LinearForm::new(a[0], a[1]);
        let deformed = deform(rec.spec().unwrap(), phi, Sign::Plus).unwrap();
        let points = rec.grid().points();
        for psi in &rec.q_basis {
            let r = max_residual(&deformed, &(phi.exp(1.0) * psi.clone()), &points);
            prop_assert!(r <= QE_TOL, "{} {psi}: {r}", rec.model);
        }
    }

    #[test]
    fn evaluation_map_is_invertible(idx in 0usize..1000, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let models: Vec<_> = samples(None)
            .into_iter()
            .filter(|m| instantiate(m).unwrap().q_basis.len() == 3)
            .collect();
        let rec = instantiate(&models[idx % models.len()]).unwrap();
        let g = rec.grid();
        let p = [g.x1[0] + u * (g.x1[1] - g.x1[0]), g.x2[0] + v * (g.x2[1] - g.x2[0])];
        let (_, det) = xi_matrix(&rec.q_basis, p).unwrap();
        prop_assert!(det.abs() > 1e-10, "{} at {p:?}: {det}", rec.model);
    }
}
