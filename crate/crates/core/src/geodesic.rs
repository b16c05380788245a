//! The geodesic equation `ẍ^k + Γij^k ẋ^i ẋ^j = 0`, closed-form solutions
//! from the base point, escape times and the completeness probe.

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{ClosedForm, Family, GeodesicFlag, ModelRecord, ModelRef, ModelType};
use crate::connection::AffineConnection;
use crate::error::{Error, Result};
use crate::expr::{parse_with, Domain, Point, ScalarExpr, Var};
use crate::ode::{integrate_both, Direction, IntegratorOptions, OdeSystem, Status, TwoSided};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicState {
    pub x: Point,
    pub v: [f64; 2],
}

/// `(ẋ, v̇)` with `v̇^k = −Γij^k(x) v^i v^j`.
pub fn geodesic_rhs<C: AffineConnection + ?Sized>(conn: &C, s: &GeodesicState) -> Result<([f64; 2], [f64; 2])> {
    let g = conn.symbols(s.x)?.0;
    let v = s.v;
    let mut acc = [0.0; 2];
    for (k, a) in acc.iter_mut().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                *a -= g[i][j][k] * v[i] * v[j];
            }
        }
    }
    Ok((v, acc))
}

/// The geodesic equation as a first-order system on `(x1, x2, v1, v2)`.
pub struct GeodesicSystem<'a, C: ?Sized>(pub &'a C);

impl<C: AffineConnection + ?Sized> OdeSystem<4> for GeodesicSystem<'_, C> {
    fn rhs(&self, y: &[f64; 4]) -> Result<[f64; 4]> {
        let (dx, dv) = geodesic_rhs(self.0, &GeodesicState { x: [y[0], y[1]], v: [y[2], y[3]] })?;
        Ok([dx[0], dx[1], dv[0], dv[1]])
    }

    fn domain(&self) -> Domain {
        self.0.domain()
    }
}

pub fn geodesic_integrate<C: AffineConnection + ?Sized>(
    conn: &C,
    x0: Point,
    v0: [f64; 2],
    horizon: f64,
    opts: &IntegratorOptions,
) -> TwoSided {
    integrate_both(&GeodesicSystem(conn), [x0[0], x0[1], v0[0], v0[1]], horizon, opts)
}

/// A geodesic through the base point with initial velocity `(a, b)`,
/// written in `t`, valid on the open interval `validity`.
#[derive(Debug, Clone)]
pub struct ClosedFormGeodesic {
    pub model: ModelRef,
    pub a: f64,
    pub b: f64,
    pub curve: [ScalarExpr; 2],
    pub velocity: [ScalarExpr; 2],
    /// Maximal interval on which the formula is defined; endpoints may be infinite.
    pub validity: [f64; 2],
}

impl ClosedFormGeodesic {
    pub fn position(&self, t: f64) -> Result<Point> {
        Ok([self.curve[0].eval_t(t)?, self.curve[1].eval_t(t)?])
    }

    pub fn velocity_at(&self, t: f64) -> Result<[f64; 2]> {
        Ok([self.velocity[0].eval_t(t)?, self.velocity[1].eval_t(t)?])
    }

    /// The validity window clipped to `[-cap, cap]` and shrunk toward `t = 0`
    /// by `fraction`.
    pub fn inner_window(&self, cap: f64, fraction: f64) -> [f64; 2] {
        [fraction * self.validity[0].max(-cap), fraction * self.validity[1].min(cap)]
    }
}

/// Interval around 0 cut out by the zeros of conditions that hold at `t = 0`
/// and change sign at most once.
fn window(roots: &[Option<f64>]) -> [f64; 2] {
    let mut w = [f64::NEG_INFINITY, f64::INFINITY];
    for r in roots.iter().flatten() {
        if r.is_finite() {
            if *r > 0.0 {
                w[1] = w[1].min(*r);
            } else if *r < 0.0 {
                w[0] = w[0].max(*r);
            }
        }
    }
    w
}

/// Zero of `1 + k t`.
fn lin_root(k: f64) -> Option<f64> {
    (k != 0.0).then(|| -1.0 / k)
}

/// Closed-form geodesic through the base point with initial velocity `(a, b)`.
pub fn closed_form_geodesic(rec: &ModelRecord, a: f64, b: f64) -> Result<ClosedFormGeodesic> {
    let m = &rec.model;
    let c = m.param("c");
    let unsupported = || {
        Error::Unsupported(format!("no closed-form geodesic for {} with (a, b) = ({a}, {b})", m.family.id()))
    };
    if rec.closed_form == ClosedForm::None || (rec.closed_form == ClosedForm::AxisOnly && b != 0.0) {
        return Err(unsupported());
    }
    let half = (c + 0.5).abs() < 1e-12;
    let k = 2.0 * c + 1.0;
    let (x1, x2, roots): (&str, &str, Vec<Option<f64>>) = match m.family {
        Family::M06 => ("a*t", "b*t", vec![]),
        Family::M16 => ("log(1 + a*t)", "b*t/(1 + a*t)", vec![lin_root(a)]),
        Family::M26 => ("-log(1 - a*t)", "log(1 + b*t)", vec![lin_root(-a), lin_root(b)]),
        Family::M36 => ("a*t", "log(1 + b*t)", vec![lin_root(b)]),
        Family::M46 => ("a*t - b^2*t^2/2", "b*t", vec![]),
        Family::M56 => {
            ("log((1 + a*t)^2 + b^2*t^2)/2", "arctan(b*t/(1 + a*t))", vec![lin_root(a)])
        }
        Family::M14 if b == 0.0 => ("-log(1 - a*t)", "0", vec![lin_root(-a)]),
        Family::M14 => {
            let r = (a != 0.0).then(|| ((2.0 * b / a).exp() - 1.0) / (2.0 * b));
            ("-log(1 - a*log(2*b*t + 1)/(2*b))", "log(2*b*t + 1)/2", vec![lin_root(2.0 * b), r])
        }
        Family::M24 if b == 0.0 => ("-log(1 - a*t)", "0", vec![lin_root(-a)]),
        Family::M24 if half => {
            let r = (a != 0.0 && 1.0 + b / a > 0.0).then(|| (1.0 + b / a).ln() / b);
            ("-log(1 - (a/b)*(exp(b*t) - 1))", "b*t", vec![r])
        }
        Family::M24 => {
            // −log(1 − (a/b)(s^{1/κ} − 1)) equals log(b/(a+b)) − log(1 − a s^{1/κ}/(a+b))
            // and also covers b = −a
            let r = (a != 0.0 && 1.0 + b / a > 0.0).then(|| ((1.0 + b / a).powf(k) - 1.0) / (k * b));
            (
                "-log(1 - (a/b)*((1 + k*b*t)^(1/k) - 1))",
                "log(1 + k*b*t)/k",
                vec![lin_root(k * b), r],
            )
        }
        Family::M34 if b == 0.0 => ("a*t", "0", vec![]),
        Family::M34 if half => ("(a/b)*(exp(b*t) - 1)", "b*t", vec![]),
        Family::M34 => ("(a/b)*((1 + k*b*t)^(1/k) - 1)", "log(1 + k*b*t)/k", vec![lin_root(k * b)]),
        Family::M44 if b == 0.0 => ("a*t", "0", vec![]),
        Family::M44 => (
            "-(1/(8*b))*log(1 + 2*b*t)*(-4*a + b*c*log(1 + 2*b*t))",
            "log(1 + 2*b*t)/2",
            vec![lin_root(2.0 * b)],
        ),
        Family::M54Tilde if b == 0.0 => ("a*t", "0", vec![]),
        Family::M54Tilde if c == 0.0 => ("(a/b)*sin(b*t)", "b*t", vec![]),
        Family::M54Tilde => (
            "(a/b)*(1 + 2*b*c*t)^(1/2)*sin(log(1 + 2*b*c*t)/(2*c))",
            "log(1 + 2*b*c*t)/(2*c)",
            vec![lin_root(2.0 * b * c)],
        ),
        Family::M32 | Family::M42 => ("log(1 + 2*a*t)/2", "0", vec![lin_root(2.0 * a)]),
        _ => return Err(unsupported()),
    };
    let c_val = if c.is_nan() { 0.0 } else { c };
    let bind = [("a", a), ("b", b), ("c", c_val), ("k", k)];
    let curve = [parse_with(x1, &bind)?, parse_with(x2, &bind)?];
    let velocity = [curve[0].diff(Var::T), curve[1].diff(Var::T)];
    Ok(ClosedFormGeodesic { model: m.clone(), a, b, curve, velocity, validity: window(&roots) })
}

pub const ORACLE_CAP: f64 = 5.0;
pub const ORACLE_FRACTION: f64 = 0.8;
pub const ORACLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub model: ModelRef,
    pub a: f64,
    pub b: f64,
    pub validity: [f64; 2],
    pub compared: [f64; 2],
    pub nodes: usize,
    pub sup_error: f64,
}

/// Integrate from the base point and compare positions with the closed form
/// at every accepted integrator node inside the inner window.
pub fn oracle_compare(rec: &ModelRecord, a: f64, b: f64, opts: &IntegratorOptions) -> Result<OracleReport> {
    let cf = closed_form_geodesic(rec, a, b)?;
    let w = cf.inner_window(ORACLE_CAP, ORACLE_FRACTION);
    let horizon = w[0].abs().max(w[1].abs());
    let run = geodesic_integrate(&rec.connection, rec.base_point(), [a, b], horizon, opts);
    let mut sup = 0.0f64;
    let mut nodes = 0;
    for s in run.merged() {
        if s.t < w[0] || s.t > w[1] {
            continue;
        }
        let p = cf.position(s.t)?;
        let bp = rec.base_point();
        sup = sup.max((s.y[0] - (p[0] + bp[0])).abs()).max((s.y[1] - (p[1] + bp[1])).abs());
        nodes += 1;
    }
    // the horizon must actually have been reached inside the window
    for tr in [&run.forward, &run.backward] {
        let reached = tr.last().t.abs();
        let need = if tr.direction == Direction::Forward { w[1] } else { -w[0] };
        if reached + 1e-12 < need {
            sup = f64::INFINITY;
        }
    }
    Ok(OracleReport { model: rec.model.clone(), a, b, validity: cf.validity, compared: w, nodes, sup_error: sup })
}

/// Endpoints of the maximal existence interval: `None` means the horizon was
/// reached, otherwise the bracket of the escape time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EscapeReport {
    pub lower: Option<[f64; 2]>,
    pub upper: Option<[f64; 2]>,
    pub forward: Status,
    pub backward: Status,
}

pub fn escape_time<C: AffineConnection + ?Sized>(
    conn: &C,
    x0: Point,
    v0: [f64; 2],
    horizon: f64,
    opts: &IntegratorOptions,
) -> EscapeReport {
    let run = geodesic_integrate(conn, x0, v0, horizon, opts);
    EscapeReport {
        lower: run.backward.status.bracket(),
        upper: run.forward.status.bracket(),
        forward: run.forward.status,
        backward: run.backward.status,
    }
}

#[derive(Debug, Clone)]
pub struct GeodesicProbeOptions {
    pub horizon: f64,
    /// Horizon of the rerun that must confirm a "complete" verdict.
    pub confirm_horizon: f64,
    pub directions: usize,
    pub integrator: IntegratorOptions,
}

impl Default for GeodesicProbeOptions {
    fn default() -> Self {
        GeodesicProbeOptions {
            horizon: 50.0,
            confirm_horizon: 200.0,
            directions: 8,
            integrator: IntegratorOptions::default(),
        }
    }
}

/// Unit-circle directions, the standard `(a, b)` samples and the model's
/// own witness velocities.
pub fn default_velocities(rec: &ModelRecord, directions: usize) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = (0..directions)
        .map(|i| {
            let th = std::f64::consts::TAU * i as f64 / directions as f64;
            [th.cos(), th.sin()]
        })
        .collect();
    out.extend([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 2.0]]);
    out.extend(rec.witness_velocities.iter().copied());
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicWitness {
    pub a: f64,
    pub b: f64,
    pub direction: Direction,
    pub status: Status,
    pub bracket: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeodesicAgreement {
    MatchesTheorem,
    ContradictsTheorem,
    NotClassified,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicVerdict {
    pub model: ModelRef,
    pub complete: bool,
    pub expected: GeodesicFlag,
    pub agreement: GeodesicAgreement,
    pub horizon: f64,
    pub confirmed_to: Option<f64>,
    pub witnesses: Vec<GeodesicWitness>,
    pub notes: Vec<String>,
}

fn escapes(rec: &ModelRecord, vels: &[[f64; 2]], horizon: f64, opts: &IntegratorOptions) -> Vec<GeodesicWitness> {
    vels.par_iter()
        .map(|&v| {
            let run = geodesic_integrate(&rec.connection, rec.base_point(), v, horizon, opts);
            [&run.forward, &run.backward]
                .into_iter()
                .filter(|tr| tr.status.is_escape())
                .map(|tr| GeodesicWitness {
                    a: v[0],
                    b: v[1],
                    direction: tr.direction,
                    status: tr.status,
                    bracket: tr.status.bracket(),
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Integrate every velocity in `vels` (or the defaults) from the base point;
/// complete when nothing escapes before the horizon and the rerun at the
/// confirmation horizon agrees.
pub fn geodesic_completeness_probe(
    rec: &ModelRecord,
    vels: Option<&[[f64; 2]]>,
    opts: &GeodesicProbeOptions,
) -> GeodesicVerdict {
    let defaults = default_velocities(rec, opts.directions);
    let vels = vels.unwrap_or(&defaults);
    let mut witnesses = escapes(rec, vels, opts.horizon, &opts.integrator);
    let mut confirmed_to = None;
    if witnesses.is_empty() {
        witnesses = escapes(rec, vels, opts.confirm_horizon, &opts.integrator);
        if witnesses.is_empty() {
            confirmed_to = Some(opts.confirm_horizon);
        }
    }
    let complete = witnesses.is_empty();
    let expected = rec.expected.geodesically_complete;
    let agreement = match expected.as_bool() {
        None => GeodesicAgreement::NotClassified,
        Some(e) if e == complete => GeodesicAgreement::MatchesTheorem,
        Some(_) => GeodesicAgreement::ContradictsTheorem,
    };
    let mut notes = Vec::new();
    if rec.model.family == Family::M56 {
        notes.push(
            "chart-level existence only: the arctan branch of the closed form is not continued across 1 + a t = 0"
                .to_string(),
        );
    }
    if rec.model_type() == ModelType::B && expected == GeodesicFlag::NotClassified {
        notes.push("geodesic completeness of this Type B structure is not classified".to_string());
    }
    GeodesicVerdict {
        model: rec.model.clone(),
        complete,
        expected,
        agreement,
        horizon: opts.horizon,
        confirmed_to,
        witnesses,
        notes,
    }
}

/// Scalar `ρ(σ̇, σ̇)` along sampled states `(x1, x2, v1, v2)`.
pub fn ricci_along<C: AffineConnection + ?Sized>(conn: &C, states: &[Vec<f64>]) -> Result<Vec<f64>> {
    states
        .iter()
        .map(|y| Ok(crate::connection::ricci_at(conn, [y[0], y[1]])?.apply([y[2], y[3]], [y[2], y[3]])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::instantiate;
    use crate::connection::ChristoffelSpec;

    fn rec(f: Family, p: &[(&str, f64)]) -> ModelRecord {
        instantiate(&ModelRef::new(f, p)).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let m46 = ChristoffelSpec::constant([0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let (_, dv) = geodesic_rhs(&m46, &GeodesicState { x: [0.0, 0.0], v: [0.0, 1.0] }).unwrap();
        assert_eq!(dv, [-1.0, 0.0]);
        let n43 = ChristoffelSpec::inverse_x1([-1.0, 0.0, 0.0, -1.0, 1.0, 0.0]);
        let (_, dv) = geodesic_rhs(&n43, &GeodesicState { x: [1.0, 0.0], v: [1.0, 0.0] }).unwrap();
        assert_eq!(dv, [1.0, 0.0]);
    }

    #[test]
    fn m06_line_and_unsupported_m12() {
        let cf = closed_form_geodesic(&rec(Family::M06, &[]), 2.0, 3.0).unwrap();
        assert_eq!(cf.position(1.5).unwrap(), [3.0, 4.5]);
        assert_eq!(cf.validity, [f64::NEG_INFINITY, f64::INFINITY]);
        let m12 = rec(Family::M12, &[("a1", 2.0), ("a2", 3.0)]);
        assert!(matches!(closed_form_geodesic(&m12, 1.0, 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn m24_general_matches_b_equals_minus_a() {
        let r = rec(Family::M24, &[("c", 2.0)]);
        let cf = closed_form_geodesic(&r, 1.0, -1.0).unwrap();
        let k = 5.0;
        for t in [-0.1, 0.05, 0.15] {
            let s: f64 = 1.0 - k * t;
            let want = [-s.ln() / k, s.ln() / k];
            let got = cf.position(t).unwrap();
            assert!((got[0] - want[0]).abs() < 1e-14 && (got[1] - want[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn m26_escape_both_ways() {
        let r = rec(Family::M26, &[]);
        let e = escape_time(&r.connection, [0.0, 0.0], [1.0, 1.0], 5.0, &IntegratorOptions::default());
        let up = e.upper.unwrap();
        let lo = e.lower.unwrap();
        assert!(up[0] <= 1.0 && 1.0 <= up[1] && up[1] - up[0] <= 1e-3, "{up:?}");
        assert!(lo[0] <= -1.0 && -1.0 <= lo[1] && lo[1] - lo[0] <= 1e-3, "{lo:?}");
    }

    #[test]
    fn m16_vertical_is_complete() {
        let r = rec(Family::M16, &[]);
        let e = escape_time(&r.connection, [0.0, 0.0], [0.0, 1.0], 50.0, &IntegratorOptions::default());
        assert_eq!((e.lower, e.upper), (None, None));
    }
}
