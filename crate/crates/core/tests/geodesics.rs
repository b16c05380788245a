use affsurf::catalog::{instantiate, Family, ModelRecord, ModelRef};
use affsurf::geodesic::{closed_form_geodesic, escape_time, geodesic_integrate, oracle_compare, ricci_along};
use affsurf::ode::{IntegratorOptions, Status};

fn rec(f: Family, p: &[(&str, f64)]) -> ModelRecord {
    instantiate(&ModelRef::new(f, p)).unwrap()
}

#[test]
fn m26_forward_bracket_is_tight() {
    let r = rec(Family::M26, &[]);
    let e = escape_time(&r.connection, [0.0, 0.0], [1.0, 1.0], 5.0, &IntegratorOptions::default());
    let [lo, hi] = e.upper.unwrap();
    assert!(lo <= 1.0 && 1.0 <= hi && hi - lo <= 1e-3, "{lo} {hi}");
}

#[test]
fn m16_backward_bracket_contains_minus_one() {
    let r = rec(Family::M16, &[]);
    let e = escape_time(&r.connection, [0.0, 0.0], [1.0, 1.0], 5.0, &IntegratorOptions::default());
    let [lo, hi] = e.lower.unwrap();
    assert!(lo <= -1.0 && -1.0 <= hi, "{lo} {hi}");
    assert!(e.upper.is_none());
}

#[test]
fn affine_reparametrization() {
    let opts = IntegratorOptions::default();
    for (f, p) in [(Family::M16, vec![]), (Family::M24, vec![("c", 2.0)]), (Family::N33, vec![])] {
        let r = rec(f, &p);
        let x0 = r.base_point();
        let v0 = [0.3, -0.2];
        let base = geodesic_integrate(&r.connection, x0, v0, 1.0, &opts);
        for lambda in [2.0, -1.0] {
            let scaled = geodesic_integrate(&r.connection, x0, [lambda * v0[0], lambda * v0[1]], 0.5, &opts);
            for s in scaled.merged() {
                let tr = if lambda * s.t >= 0.0 { &base.forward } else { &base.backward };
                let y = tr.interpolate(lambda * s.t).unwrap();
                assert!((y[0] - s.y[0]).abs() < 1e-8 && (y[1] - s.y[1]).abs() < 1e-8, "{} λ={lambda} t={}", r.model, s.t);
            }
        }
    }
}

#[test]
fn ricci_blows_up_along_escaping_geodesics() {
    let mut cases = vec![rec(Family::M14, &[])];
    for c in [-2.0, 1.0 / 3.0, 2.0] {
        cases.push(rec(Family::M24, &[("c", c)]));
        cases.push(rec(Family::M34, &[("c", c)]));
    }
    for c in [-2.0, -0.5, 0.0, 2.0] {
        cases.push(rec(Family::M44, &[("c", c)]));
    }
    for r in cases {
        let run = geodesic_integrate(&r.connection, r.base_point(), [0.0, 1.0], 5.0, &IntegratorOptions::default());
        let tr = [&run.forward, &run.backward].into_iter().find(|t| t.status.is_escape()).unwrap_or_else(|| panic!("{}", r.model));
        let states: Vec<Vec<f64>> = tr.samples.iter().map(|s| s.y.clone()).collect();
        let rho = ricci_along(&r.connection, &states).unwrap();
        let peak = rho.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak > 1e6, "{}: {peak}", r.model);
        let [lo, hi] = tr.status.bracket().unwrap();
        assert!(tr.samples.iter().all(|s| s.t.abs() <= lo.abs().max(hi.abs())));
    }
}

#[test]
fn m34_half_is_complete_along_the_vertical() {
    let r = rec(Family::M34, &[("c", -0.5)]);
    let run = geodesic_integrate(&r.connection, [0.0, 0.0], [0.0, 1.0], 50.0, &IntegratorOptions::default());
    assert!(!run.escaped());
}

#[test]
fn oracle_samples() {
    let opts = IntegratorOptions::default();
    for (f, p) in [(Family::M56, vec![]), (Family::M44, vec![("c", 2.0)]), (Family::M54Tilde, vec![("c", -0.5)])] {
        let r = rec(f, &p);
        for (a, b) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (-1.0, 2.0)] {
            let rep = oracle_compare(&r, a, b, &opts).unwrap();
            assert!(rep.sup_error <= 1e-6 && rep.nodes > 10, "{rep:?}");
        }
    }
    let r = rec(Family::M32, &[("c", 2.0)]);
    assert!(closed_form_geodesic(&r, 1.0, 1.0).is_err());
    assert!(oracle_compare(&r, 1.0, 0.0, &opts).unwrap().sup_error <= 1e-6);
}

#[test]
fn half_plane_exit_is_left_domain() {
    // the flat line x1 = 1 − t leaves the half-plane at t = 1
    let r = rec(Family::N06, &[]);
    let run = geodesic_integrate(&r.connection, [1.0, 0.0], [-1.0, 0.0], 5.0, &IntegratorOptions::default());
    match run.forward.status {
        Status::LeftDomain { bracket, .. } => assert!(bracket[0] <= 1.0 && 1.0 <= bracket[1] + 1e-9),
        s => panic!("{s:?}"),
    }
}
