//! Adaptive Dormand–Prince 5(4) integration of autonomous systems with
//! escape classification.
//!
//! The first two state components are always a position in the plane; the
//! system's [`Domain`] is enforced on them. A run stops at the horizon or as
//! soon as the solution is judged to escape:
//!
//! * `Blowup` when the relative growth rate `|f(y)| / (1 + |y|)` exceeds
//!   `escape_rate`, or the state is huge (`|y| > escape_norm`) while the rate
//!   still exceeds `norm_rate`. Exponential solutions that merely get large
//!   over a long horizon keep a bounded rate and are not flagged.
//! * `LeftDomain` when the half-plane coordinate `x1` falls under
//!   `boundary_eps` on a time scale `x1 / |ẋ1|` shorter than `boundary_time`,
//!   or the step size collapses against the boundary.
//! * `StepCollapse` when the step size falls below `h_min · max(1, |t|)` for
//!   any other reason.

use serde::Serialize;

use crate::error::Result;
use crate::expr::{Domain, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
    pub escape_norm: f64,
    pub escape_rate: f64,
    pub norm_rate: f64,
    pub boundary_eps: f64,
    pub boundary_time: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: 0.1,
            h_min: 1e-13,
            max_steps: 5_000_000,
            escape_norm: 1e8,
            escape_rate: 1e6,
            norm_rate: 1e3,
            boundary_eps: 1e-12,
            boundary_time: 1e-3,
        }
    }
}

/// An autonomous system `y' = f(y)` on `N` components.
pub trait OdeSystem<const N: usize>: Sync {
    fn rhs(&self, y: &[f64; N]) -> Result<[f64; N]>;
    fn domain(&self) -> Domain;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// How a run ended. Brackets are ordered `[lo, hi]` in absolute time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Status {
    ReachedHorizon { t: f64 },
    Blowup { t_star: f64, bracket: [f64; 2] },
    LeftDomain { t_star: f64, bracket: [f64; 2] },
    StepCollapse { t_star: f64, bracket: [f64; 2] },
}

impl Status {
    pub fn is_escape(&self) -> bool {
        !matches!(self, Status::ReachedHorizon { .. })
    }

    pub fn bracket(&self) -> Option<[f64; 2]> {
        match *self {
            Status::ReachedHorizon { .. } => None,
            Status::Blowup { bracket, .. }
            | Status::LeftDomain { bracket, .. }
            | Status::StepCollapse { bracket, .. } => Some(bracket),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Status::ReachedHorizon { .. } => "reached-horizon",
            Status::Blowup { .. } => "blowup",
            Status::LeftDomain { .. } => "left-domain",
            Status::StepCollapse { .. } => "step-collapse",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

/// One-directional run from t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub direction: Direction,
    pub samples: Vec<Sample>,
    pub status: Status,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory always holds its initial sample")
    }

    /// Cubic Hermite interpolation between accepted steps.
    pub fn interpolate(&self, t: f64) -> Option<Vec<f64>> {
        let s = &self.samples;
        let d = self.direction.sign();
        let tau = d * t;
        if tau < -1e-15 || tau > d * self.last().t + 1e-15 {
            return None;
        }
        let idx = s.partition_point(|x| d * x.t < tau).clamp(1, s.len().max(2) - 1);
        if s.len() == 1 {
            return Some(s[0].y.clone());
        }
        let (a, b) = (&s[idx - 1], &s[idx]);
        let h = b.t - a.t;
        let u = (t - a.t) / h;
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        Some(
            (0..a.y.len())
                .map(|i| h00 * a.y[i] + h10 * h * a.dy[i] + h01 * b.y[i] + h11 * h * b.dy[i])
                .collect(),
        )
    }

    pub fn positions(&self) -> Vec<Point> {
        self.samples.iter().map(|s| [s.y[0], s.y[1]]).collect()
    }
}

/// Forward and backward runs from the same initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSided {
    pub forward: Trajectory,
    pub backward: Trajectory,
}

impl TwoSided {
    /// All samples in increasing time, t = 0 once.
    pub fn merged(&self) -> Vec<Sample> {
        let mut out: Vec<Sample> = self.backward.samples.iter().rev().cloned().collect();
        out.extend(self.forward.samples.iter().skip(1).cloned());
        out
    }

    pub fn escaped(&self) -> bool {
        self.forward.status.is_escape() || self.backward.status.is_escape()
    }

    pub fn positions(&self) -> Vec<Point> {
        self.merged().iter().map(|s| [s.y[0], s.y[1]]).collect()
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Euclidean norm, scaled so that large states do not overflow when squared.
fn norm<const N: usize>(v: &[f64; N]) -> f64 {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * v.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
}

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

struct StepOut<const N: usize> {
    y: [f64; N],
    f: [f64; N],
    err: f64,
}

/// One trial step. `None` if a stage leaves the domain or goes non-finite.
fn dp_step<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    y: &[f64; N],
    f0: &[f64; N],
    h: f64,
    opts: &IntegratorOptions,
) -> Option<StepOut<N>> {
    let domain = sys.domain();
    let mut k = [[0.0; N]; 7];
    k[0] = *f0;
    let mut stage = [0.0; N];
    for s in 1..7 {
        for i in 0..N {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(s) {
                acc += A[s][j] * kj[i];
            }
            stage[i] = y[i] + h * acc;
        }
        if !finite(&stage) || !domain.contains([stage[0], stage[1]]) {
            return None;
        }
        k[s] = sys.rhs(&stage).ok()?;
        if !finite(&k[s]) {
            return None;
        }
    }
    // the last stage is evaluated at the fifth-order solution (FSAL)
    let y_new = stage;
    let mut err = 0.0f64;
    for i in 0..N {
        let mut e = 0.0;
        for (s, ks) in k.iter().enumerate() {
            e += E[s] * ks[i];
        }
        let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
        err = err.max((h * e).abs() / sc);
    }
    Some(StepOut { y: y_new, f: k[6], err })
}

fn sample<const N: usize>(t: f64, y: &[f64; N], f: &[f64; N]) -> Sample {
    Sample { t, y: y.to_vec(), dy: f.to_vec() }
}

/// Integrate from `y0` at t = 0 up to |t| = `horizon` in one direction.
pub fn integrate<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    y0: [f64; N],
    horizon: f64,
    direction: Direction,
    opts: &IntegratorOptions,
) -> Trajectory {
    let d = direction.sign();
    let domain = sys.domain();
    let done = |samples: Vec<Sample>, status: Status| Trajectory { direction, samples, status };
    let escape_at = |lo: f64, hi: f64| {
        let (a, b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        ([a, b], 0.5 * (a + b))
    };

    if !domain.contains([y0[0], y0[1]]) || !finite(&y0) {
        return done(vec![], Status::LeftDomain { t_star: 0.0, bracket: [0.0, 0.0] });
    }
    let mut f = match sys.rhs(&y0) {
        Ok(f) if finite(&f) => f,
        _ => {
            return done(
                vec![sample(0.0, &y0, &[f64::NAN; N])],
                Status::LeftDomain { t_star: 0.0, bracket: [0.0, 0.0] },
            )
        }
    };
    let mut y = y0;
    let mut tau = 0.0;
    let mut samples = vec![sample(0.0, &y, &f)];

    let fnorm = norm(&f);
    let mut h = if fnorm > 0.0 {
        (0.01 * (1.0 + norm(&y)) / fnorm).clamp(1e-8, opts.h_max)
    } else {
        opts.h_max
    };
    let mut last_fail_domain = false;

    for _ in 0..opts.max_steps {
        if tau >= horizon {
            return done(samples, Status::ReachedHorizon { t: d * horizon });
        }
        let remaining = horizon - tau;
        h = h.min(opts.h_max);
        let last_step = h >= remaining;
        if last_step {
            h = remaining;
        }
        if h < opts.h_min * tau.max(1.0) && !last_step {
            let t = d * tau;
            let status = if last_fail_domain && domain == Domain::RightHalfPlane {
                let speed = f[0].abs().max(1e-300);
                let reach = (2.0 * y[0] / speed).max(4.0 * h);
                let (bracket, t_star) = escape_at(t, t + d * reach);
                Status::LeftDomain { t_star, bracket }
            } else {
                let reach = 4.0 * (1.0 + norm(&y)) / norm(&f).max(1e-300);
                let (bracket, t_star) = escape_at(t, t + d * reach.max(4.0 * h));
                Status::StepCollapse { t_star, bracket }
            };
            return done(samples, status);
        }
        let Some(step) = dp_step(sys, &y, &f, d * h, opts) else {
            last_fail_domain = true;
            h *= 0.25;
            continue;
        };
        if !(step.err <= 1.0) {
            last_fail_domain = false;
            let fac = if step.err.is_finite() { (0.9 * step.err.powf(-0.2)).max(0.2) } else { 0.2 };
            h *= fac;
            continue;
        }
        last_fail_domain = false;
        tau = if last_step { horizon } else { tau + h };
        y = step.y;
        f = step.f;
        let t = d * tau;
        samples.push(sample(t, &y, &f));

        let size = norm(&y);
        let speed = norm(&f);
        let rate = speed / (1.0 + size);
        if rate > opts.escape_rate || (size > opts.escape_norm && rate > opts.norm_rate) {
            let reach = 4.0 * (1.0 + size) / speed;
            let (bracket, t_star) = escape_at(t, t + d * reach);
            return done(samples, Status::Blowup { t_star, bracket });
        }
        if domain == Domain::RightHalfPlane && y[0] <= opts.boundary_eps {
            let approach = y[0] / f[0].abs().max(1e-300);
            if approach < opts.boundary_time {
                let (bracket, t_star) = escape_at(t, t + d * 2.0 * approach);
                return done(samples, Status::LeftDomain { t_star, bracket });
            }
        }

        let fac = if step.err > 0.0 { 0.9 * step.err.powf(-0.2) } else { 5.0 };
        h *= fac.clamp(0.2, 5.0);
    }
    let t = d * tau;
    done(samples, Status::StepCollapse { t_star: t, bracket: [t, t] })
}

/// Both directions, each to |t| = `horizon`.
pub fn integrate_both<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    y0: [f64; N],
    horizon: f64,
    opts: &IntegratorOptions,
) -> TwoSided {
    TwoSided {
        forward: integrate(sys, y0, horizon, Direction::Forward, opts),
        backward: integrate(sys, y0, horizon, Direction::Backward, opts),
    }
}
