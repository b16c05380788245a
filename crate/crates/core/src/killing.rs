//! Affine Killing fields: the defining residual, their flows and the
//! completeness probe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{ModelRecord, ModelRef, ModelType};
use crate::connection::AffineConnection;
use crate::error::Result;
use crate::expr::{Domain, Point, ScalarExpr, ScalarJet, VectorFieldExpr};
use crate::ode::{integrate_both, Direction, IntegratorOptions, OdeSystem, Status, Trajectory, TwoSided};

pub const KILLING_TOL: f64 = 1e-8;

/// A vector field with cached first and second derivatives.
#[derive(Debug, Clone)]
pub struct KillingField {
    pub field: VectorFieldExpr,
    jets: [ScalarJet; 2],
    domain: Domain,
    chart: Option<VectorFieldExpr>,
}

impl KillingField {
    pub fn new(field: VectorFieldExpr, domain: Domain) -> KillingField {
        let jets = [ScalarJet::new(&field.c1), ScalarJet::new(&field.c2)];
        let chart = (domain == Domain::RightHalfPlane).then(|| log_chart(&field));
        KillingField { field, jets, domain, chart }
    }

    pub fn eval(&self, p: Point) -> Result<[f64; 2]> {
        self.field.eval(p)
    }

    /// Max component of `(L_X ∇)_ij^k` at `p`:
    /// `∂i∂jX^k + X^l ∂lΓij^k − Γij^l ∂lX^k + Γlj^k ∂iX^l + Γil^k ∂jX^l`.
    pub fn residual<C: AffineConnection + ?Sized>(&self, conn: &C, p: Point) -> Result<f64> {
        let g = conn.symbols(p)?.0;
        let dg = conn.symbol_derivatives(p)?;
        let x = [self.jets[0].eval(p)?, self.jets[1].eval(p)?];
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let mut v = x[k].hess[i][j];
                    for l in 0..2 {
                        v += x[l].value * dg[l].0[i][j][k] - g[i][j][l] * x[k].grad[l]
                            + g[l][j][k] * x[l].grad[i]
                            + g[i][l][k] * x[l].grad[j];
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
        Ok(worst)
    }
}

impl OdeSystem<2> for KillingField {
    fn rhs(&self, y: &[f64; 2]) -> Result<[f64; 2]> {
        self.eval(*y)
    }

    fn domain(&self) -> Domain {
        self.domain
    }
}

pub fn killing_residual<C: AffineConnection + ?Sized>(conn: &C, x: &VectorFieldExpr, p: Point) -> Result<f64> {
    KillingField::new(x.clone(), conn.domain()).residual(conn, p)
}

/// Max residual of every basis field over the model's grid.
pub fn basis_residuals(rec: &ModelRecord) -> Vec<f64> {
    let points = rec.grid().points();
    rec.killing_basis
        .iter()
        .map(|f| {
            let kf = KillingField::new(f.clone(), rec.domain());
            points
                .par_iter()
                .map(|&p| kf.residual(&rec.connection, p).unwrap_or(f64::INFINITY))
                .reduce(|| 0.0, f64::max)
        })
        .collect()
}

/// The field in the chart `u = log x1` of the half-plane, where it lives on
/// the whole plane: `u̇ = X¹(e^u, x2) e^{−u}`, `ẋ2 = X²(e^u, x2)`.
pub fn log_chart(field: &VectorFieldExpr) -> VectorFieldExpr {
    let (u, x2) = (ScalarExpr::x1(), ScalarExpr::x2());
    let e = u.clone().exp();
    let damp = (-u).exp();
    // distribute e^{−u} over sums so that e^u factors cancel symbolically
    let c1 = match field.c1.substitute(&e, &x2) {
        ScalarExpr::Sum(ts) => ScalarExpr::sum(ts.into_iter().map(|t| t * damp.clone()).collect()),
        other => other * damp,
    };
    VectorFieldExpr::new(c1, field.c2.substitute(&e, &x2))
}

struct ChartFlow(VectorFieldExpr);

impl OdeSystem<2> for ChartFlow {
    fn rhs(&self, y: &[f64; 2]) -> Result<[f64; 2]> {
        self.0.eval(*y)
    }

    fn domain(&self) -> Domain {
        Domain::Plane
    }
}

fn from_chart(tr: &mut Trajectory) {
    let toward_boundary = tr.last().y[0] < 0.0;
    for s in tr.samples.iter_mut() {
        let x1 = s.y[0].exp();
        s.dy[0] *= x1;
        s.y[0] = x1;
    }
    if toward_boundary {
        if let Status::Blowup { t_star, bracket } | Status::StepCollapse { t_star, bracket } = tr.status {
            tr.status = Status::LeftDomain { t_star, bracket };
        }
    }
}

/// Integrate `ẋ = X(x)` from `p0` in both directions up to |t| = `horizon`.
///
/// On the half-plane the flow is computed in the chart `u = log x1` (see
/// [`log_chart`]) and mapped back; running into `x1 = 0` then shows up as
/// `u → −∞` and is reported as leaving the domain.
pub fn flow_integrate(field: &KillingField, p0: Point, horizon: f64, opts: &IntegratorOptions) -> TwoSided {
    match field.domain {
        Domain::Plane => integrate_both(field, p0, horizon, opts),
        Domain::RightHalfPlane => {
            let chart = ChartFlow(field.chart.clone().unwrap_or_else(|| log_chart(&field.field)));
            let mut run = integrate_both(&chart, [p0[0].ln(), p0[1]], horizon, opts);
            from_chart(&mut run.forward);
            from_chart(&mut run.backward);
            run
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProbeOptions {
    pub horizon: f64,
    pub random_combinations: usize,
    pub seed: u64,
    /// Defaults to three points per model type when `None`.
    pub init_points: Option<Vec<Point>>,
    pub integrator: IntegratorOptions,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            horizon: 20.0,
            random_combinations: 8,
            seed: 0x5eed,
            init_points: None,
            integrator: IntegratorOptions::default(),
        }
    }
}

pub fn default_init_points(t: ModelType) -> Vec<Point> {
    match t {
        ModelType::B => vec![[1.0, 0.0], [2.0, 1.0], [0.5, -1.0]],
        _ => vec![[0.0, 0.0], [0.5, -0.5], [-1.0, 1.0]],
    }
}

/// The basis fields followed by seeded random unit combinations of them.
/// Each entry carries its coefficient vector in the basis.
pub fn probe_fields(rec: &ModelRecord, count: usize, seed: u64) -> Vec<(Vec<f64>, VectorFieldExpr)> {
    let n = rec.killing_basis.len();
    let mut out: Vec<(Vec<f64>, VectorFieldExpr)> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            (e, rec.killing_basis[i].clone())
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let mut c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        c.iter_mut().for_each(|v| *v /= norm);
        let f = VectorFieldExpr::linear_combination(&rec.killing_basis, &c);
        out.push((c, f));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowWitness {
    pub field: [String; 2],
    pub coefficients: Vec<f64>,
    pub init: Point,
    pub direction: Direction,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Agreement {
    MatchesTheorem,
    ContradictsTheorem,
}

impl Agreement {
    pub fn of(observed: bool, expected: bool) -> Agreement {
        if observed == expected {
            Agreement::MatchesTheorem
        } else {
            Agreement::ContradictsTheorem
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KillingVerdict {
    pub model: ModelRef,
    pub complete: bool,
    pub expected: bool,
    pub agreement: Agreement,
    pub horizon: f64,
    pub flows_checked: usize,
    pub witnesses: Vec<FlowWitness>,
}

/// Run every probe field from every initial point; the model counts as
/// complete when no flow escapes before the horizon.
pub fn killing_completeness_probe(rec: &ModelRecord, opts: &ProbeOptions) -> KillingVerdict {
    let fields = probe_fields(rec, opts.random_combinations, opts.seed);
    let inits = opts.init_points.clone().unwrap_or_else(|| default_init_points(rec.model_type()));
    let jobs: Vec<(usize, Point)> =
        (0..fields.len()).flat_map(|i| inits.iter().map(move |&p| (i, p))).collect();
    let kfs: Vec<KillingField> = fields.iter().map(|(_, f)| KillingField::new(f.clone(), rec.domain())).collect();
    let results: Vec<Vec<FlowWitness>> = jobs
        .par_iter()
        .map(|&(i, p)| {
            let run = flow_integrate(&kfs[i], p, opts.horizon, &opts.integrator);
            [&run.forward, &run.backward]
                .into_iter()
                .filter(|tr| tr.status.is_escape())
                .map(|tr| FlowWitness {
                    field: fields[i].1.render(),
                    coefficients: fields[i].0.clone(),
                    init: p,
                    direction: tr.direction,
                    status: tr.status,
                })
                .collect()
        })
        .collect();
    let witnesses: Vec<FlowWitness> = results.into_iter().flatten().collect();
    let complete = witnesses.is_empty();
    let expected = rec.expected.killing_complete;
    KillingVerdict {
        model: rec.model.clone(),
        complete,
        expected,
        agreement: Agreement::of(complete, expected),
        horizon: opts.horizon,
        flows_checked: jobs.len() * 2,
        witnesses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{instantiate, Family};
    use crate::connection::ChristoffelSpec;

    fn field(c1: &str, c2: &str) -> VectorFieldExpr {
        VectorFieldExpr::parse(c1, c2, &[]).unwrap()
    }

    #[test]
    fn residual_examples() {
        let a = ChristoffelSpec::constant([0.3, -1.0, 2.0, 0.5, 1.5, -0.7]);
        assert_eq!(killing_residual(&a, &field("0", "1"), [0.2, 0.9]).unwrap(), 0.0);
        let n33 = ChristoffelSpec::inverse_x1([-1.0, 0.0, 0.0, -1.0, -1.0, 0.0]);
        assert!(killing_residual(&n33, &field("x1", "x2"), [1.5, -0.4]).unwrap() < 1e-14);
        let flat = ChristoffelSpec::constant([0.0; 6]);
        assert_eq!(killing_residual(&flat, &field("x1^2", "0"), [0.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn translation_flow() {
        let kf = KillingField::new(field("0", "1"), Domain::Plane);
        let run = flow_integrate(&kf, [1.0, 0.0], 10.0, &IntegratorOptions::default());
        assert!(!run.escaped());
        for s in run.merged() {
            assert!((s.y[0] - 1.0).abs() < 1e-12 && (s.y[1] - s.t).abs() < 1e-9);
        }
    }

    #[test]
    fn dilation_stays_in_half_plane() {
        let kf = KillingField::new(field("x1", "x2"), Domain::RightHalfPlane);
        let run = flow_integrate(&kf, [1.0, 1.0], 50.0, &IntegratorOptions::default());
        assert!(!run.escaped(), "{:?} {:?}", run.forward.status, run.backward.status);
    }

    #[test]
    fn log_chart_of_n56_dilation() {
        // x1 log(x1) ∂1 becomes u ∂u
        let f = log_chart(&field("x1*log(x1)", "0"));
        assert_eq!(f.c1, ScalarExpr::x1());
        let kf = KillingField::new(field("x1*log(x1)", "0"), Domain::RightHalfPlane);
        let run = flow_integrate(&kf, [2.0, 1.0], 5.0, &IntegratorOptions::default());
        assert!(!run.escaped());
        let want = 2f64.ln() * 5f64.exp();
        assert!((run.forward.last().y[0].ln() / want - 1.0).abs() < 1e-9);
    }

    #[test]
    fn boundary_is_left_domain_in_chart() {
        let kf = KillingField::new(field("1", "0"), Domain::RightHalfPlane);
        let run = flow_integrate(&kf, [1.0, 0.0], 5.0, &IntegratorOptions::default());
        assert!(!run.forward.status.is_escape());
        match run.backward.status {
            Status::LeftDomain { bracket, .. } => assert!(bracket[0] <= -1.0 && -1.0 <= bracket[1]),
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn catalog_bases_are_killing() {
        let rec = instantiate(&ModelRef::new(Family::M24, &[("c", 1.0 / 3.0)])).unwrap();
        assert!(basis_residuals(&rec).iter().all(|r| *r <= KILLING_TOL));
    }

    #[test]
    fn probe_fields_are_deterministic() {
        let rec = instantiate(&ModelRef::new(Family::M06, &[])).unwrap();
        let a = probe_fields(&rec, 8, 7);
        let b = probe_fields(&rec, 8, 7);
        assert_eq!(a.len(), 14);
        assert_eq!(a.iter().map(|x| x.0.clone()).collect::<Vec<_>>(), b.iter().map(|x| x.0.clone()).collect::<Vec<_>>());
    }
}
